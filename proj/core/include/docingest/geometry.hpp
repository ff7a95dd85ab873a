#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace docingest {

/// Axis-aligned rectangle in pixel coordinates (origin top-left, y grows
/// downward). Boxes are closed and always have strictly positive area;
/// the constructor rejects anything else.
class BBox {
 public:
  BBox(double xmin, double ymin, double xmax, double ymax);

  double xmin() const noexcept { return xmin_; }
  double ymin() const noexcept { return ymin_; }
  double xmax() const noexcept { return xmax_; }
  double ymax() const noexcept { return ymax_; }

  double width() const noexcept { return xmax_ - xmin_; }
  double height() const noexcept { return ymax_ - ymin_; }
  double area() const noexcept { return width() * height(); }

  bool contains(const BBox& other) const noexcept;

  friend bool operator==(const BBox&, const BBox&) = default;

 private:
  double xmin_;
  double ymin_;
  double xmax_;
  double ymax_;
};

enum class RegionClass { handwriting, table, cell, text_block };

inline constexpr std::array<RegionClass, 4> kRegionClasses = {
    RegionClass::handwriting, RegionClass::table, RegionClass::cell,
    RegionClass::text_block};

std::string_view to_string(RegionClass label) noexcept;
std::optional<RegionClass> parse_region_class(std::string_view name) noexcept;

/// A class-labelled, scored box. Score lies in [0, 1].
class Region {
 public:
  Region(BBox bbox, RegionClass label, double score);

  const BBox& bbox() const noexcept { return bbox_; }
  RegionClass label() const noexcept { return label_; }
  double score() const noexcept { return score_; }

  Region with_bbox(const BBox& bbox) const { return {bbox, label_, score_}; }
  Region with_label(RegionClass label) const { return {bbox_, label, score_}; }
  Region with_score(double score) const { return {bbox_, label_, score}; }

  friend bool operator==(const Region&, const Region&) = default;

 private:
  BBox bbox_;
  RegionClass label_;
  double score_;
};

class NmsConfig {
 public:
  /// Throws std::invalid_argument unless threshold lies in (0, 1].
  explicit NmsConfig(double iou_threshold);
  double iou_threshold() const noexcept { return iou_threshold_; }

 private:
  double iou_threshold_;
};

double intersection_area(const BBox& a, const BBox& b) noexcept;
double iou(const BBox& a, const BBox& b) noexcept;
BBox bounding_union(const BBox& a, const BBox& b) noexcept;

/// Strict total order used wherever regions compete: higher score first,
/// then larger area, smaller xmin, smaller ymin, smaller xmax, smaller ymax.
bool score_order_less(const Region& a, const Region& b) noexcept;

/// Greedy non-maximum suppression over regions of a single class.
/// Output is sorted by score_order_less. Throws std::invalid_argument on
/// mixed-class input.
std::vector<Region> nms(std::span<const Region> regions, const NmsConfig& cfg);

/// Throws std::invalid_argument unless every region carries the same label.
void require_single_class(std::span<const Region> regions, std::string_view op);

}  // namespace docingest
