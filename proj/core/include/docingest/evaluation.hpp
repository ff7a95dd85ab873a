#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "docingest/geometry.hpp"
#include "docingest/json_io.hpp"
#include "docingest/layout.hpp"

namespace docingest::eval {

struct EvalConfig {
  /// A prediction counts as correct when IoU with its matched truth is >= this.
  double iou_threshold = 0.85;

  void validate() const;
};

/// Detection counts for one class (or a micro-average). Rates with a zero
/// denominator are reported as 1 (nothing predicted means no false
/// positives; nothing to find means nothing missed).
struct ClassCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  double precision() const noexcept;
  double recall() const noexcept;
  double f1() const noexcept;

  ClassCounts& operator+=(const ClassCounts& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

struct DetectionReport {
  std::array<ClassCounts, kRegionClasses.size()> per_class{};

  const ClassCounts& counts(RegionClass c) const noexcept {
    return per_class[static_cast<std::size_t>(c)];
  }
  ClassCounts& counts(RegionClass c) noexcept { return per_class[static_cast<std::size_t>(c)]; }
  ClassCounts micro() const noexcept;

  /// Reports over disjoint documents merge by summing counts.
  DetectionReport& operator+=(const DetectionReport& o) noexcept;
  friend bool operator==(const DetectionReport&, const DetectionReport&) = default;
};

/// Greedy one-to-one matching per class: predictions in descending score
/// order each claim the unmatched same-class truth of highest IoU.
DetectionReport match_detections(std::span<const Region> predictions,
                                 std::span<const Region> truth, const EvalConfig& cfg);

/// Flattened regions of a layout for evaluation: tables, their cells,
/// and top-level blocks with their published class.
std::vector<Region> evaluation_regions(const DocumentLayout& layout);

OrderedJson report_to_json(const DetectionReport& report);

/// Fraction of samples whose truth label is not among the first k entries
/// of its ranked prediction list.
double topk_error(std::span<const std::vector<int>> ranked, std::span<const int> truths,
                  std::size_t k);

/// (tp + tn) / (tp + tn + fp + fn).
double fragment_accuracy(std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn);

}  // namespace docingest::eval
