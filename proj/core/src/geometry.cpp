#include "docingest/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <tuple>

namespace docingest {

BBox::BBox(double xmin, double ymin, double xmax, double ymax)
    : xmin_(xmin), ymin_(ymin), xmax_(xmax), ymax_(ymax) {
  if (!std::isfinite(xmin) || !std::isfinite(ymin) || !std::isfinite(xmax) ||
      !std::isfinite(ymax)) {
    throw std::invalid_argument("bbox coordinates must be finite");
  }
  if (!(xmax > xmin)) {
    throw std::invalid_argument("bbox xmax must exceed xmin (got " +
                                std::to_string(xmin) + ", " +
                                std::to_string(xmax) + ")");
  }
  if (!(ymax > ymin)) {
    throw std::invalid_argument("bbox ymax must exceed ymin (got " +
                                std::to_string(ymin) + ", " +
                                std::to_string(ymax) + ")");
  }
}

bool BBox::contains(const BBox& other) const noexcept {
  return other.xmin_ >= xmin_ && other.ymin_ >= ymin_ &&
         other.xmax_ <= xmax_ && other.ymax_ <= ymax_;
}

std::string_view to_string(RegionClass label) noexcept {
  switch (label) {
    case RegionClass::handwriting:
      return "handwriting";
    case RegionClass::table:
      return "table";
    case RegionClass::cell:
      return "cell";
    case RegionClass::text_block:
      return "text_block";
  }
  return "unknown";
}

std::optional<RegionClass> parse_region_class(std::string_view name) noexcept {
  for (RegionClass c : kRegionClasses) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

Region::Region(BBox bbox, RegionClass label, double score)
    : bbox_(bbox), label_(label), score_(score) {
  if (!std::isfinite(score) || score < 0.0 || score > 1.0) {
    throw std::invalid_argument("region score must lie in [0, 1], got " +
                                std::to_string(score));
  }
}

NmsConfig::NmsConfig(double iou_threshold) : iou_threshold_(iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw std::invalid_argument("NMS IoU threshold must lie in (0, 1]");
  }
}

double intersection_area(const BBox& a, const BBox& b) noexcept {
  const double w = std::min(a.xmax(), b.xmax()) - std::max(a.xmin(), b.xmin());
  const double h = std::min(a.ymax(), b.ymax()) - std::max(a.ymin(), b.ymin());
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

double iou(const BBox& a, const BBox& b) noexcept {
  const double inter = intersection_area(a, b);
  if (inter == 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return std::min(1.0, inter / uni);
}

BBox bounding_union(const BBox& a, const BBox& b) noexcept {
  return BBox(std::min(a.xmin(), b.xmin()), std::min(a.ymin(), b.ymin()),
              std::max(a.xmax(), b.xmax()), std::max(a.ymax(), b.ymax()));
}

bool score_order_less(const Region& a, const Region& b) noexcept {
  const BBox& ba = a.bbox();
  const BBox& bb = b.bbox();
  return std::make_tuple(-a.score(), -ba.area(), ba.xmin(), ba.ymin(),
                         ba.xmax(), ba.ymax()) <
         std::make_tuple(-b.score(), -bb.area(), bb.xmin(), bb.ymin(),
                         bb.xmax(), bb.ymax());
}

void require_single_class(std::span<const Region> regions,
                          std::string_view op) {
  if (regions.empty()) return;
  const RegionClass first = regions.front().label();
  for (const Region& r : regions) {
    if (r.label() != first) {
      throw std::invalid_argument(
          std::string(op) +
          ": regions of mixed classes; partition by class first (saw " +
          std::string(to_string(first)) + " and " +
          std::string(to_string(r.label())) + ")");
    }
  }
}

std::vector<Region> nms(std::span<const Region> regions, const NmsConfig& cfg) {
  require_single_class(regions, "nms");
  std::vector<Region> ordered(regions.begin(), regions.end());
  std::sort(ordered.begin(), ordered.end(), score_order_less);

  std::vector<Region> kept;
  kept.reserve(ordered.size());
  for (const Region& candidate : ordered) {
    const bool suppressed =
        std::any_of(kept.begin(), kept.end(), [&](const Region& k) {
          return iou(k.bbox(), candidate.bbox()) > cfg.iou_threshold();
        });
    if (!suppressed) kept.push_back(candidate);
  }
  return kept;
}

}  // namespace docingest
