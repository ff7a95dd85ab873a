#include "docingest/evaluation.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <tuple>

namespace docingest::eval {

void EvalConfig::validate() const {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw std::invalid_argument("EvalConfig.iou_threshold must lie in (0, 1]");
  }
}

double ClassCounts::precision() const noexcept {
  const std::size_t d = tp + fp;
  return d == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(d);
}

double ClassCounts::recall() const noexcept {
  const std::size_t d = tp + fn;
  return d == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(d);
}

double ClassCounts::f1() const noexcept {
  const double p = precision();
  const double r = recall();
  return (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

ClassCounts DetectionReport::micro() const noexcept {
  ClassCounts total;
  for (const ClassCounts& c : per_class) total += c;
  return total;
}

DetectionReport& DetectionReport::operator+=(const DetectionReport& o) noexcept {
  for (std::size_t i = 0; i < per_class.size(); ++i) per_class[i] += o.per_class[i];
  return *this;
}

namespace {

// Canonical geometric order so index-based tie-breaks do not depend on input order.
bool geometric_less(const Region& a, const Region& b) {
  const BBox& x = a.bbox();
  const BBox& y = b.bbox();
  return std::make_tuple(x.ymin(), x.xmin(), x.ymax(), x.xmax(), -a.score()) <
         std::make_tuple(y.ymin(), y.xmin(), y.ymax(), y.xmax(), -b.score());
}

}  // namespace

DetectionReport match_detections(std::span<const Region> predictions,
                                 std::span<const Region> truth, const EvalConfig& cfg) {
  cfg.validate();
  DetectionReport report;
  for (RegionClass cls : kRegionClasses) {
    std::vector<Region> preds;
    std::vector<Region> gts;
    for (const Region& p : predictions) {
      if (p.label() == cls) preds.push_back(p);
    }
    for (const Region& t : truth) {
      if (t.label() == cls) gts.push_back(t);
    }
    std::sort(preds.begin(), preds.end(), score_order_less);
    std::sort(gts.begin(), gts.end(), geometric_less);

    std::vector<bool> taken(gts.size(), false);
    ClassCounts& counts = report.counts(cls);
    for (const Region& p : preds) {
      std::size_t best = gts.size();
      double best_iou = -1.0;
      for (std::size_t t = 0; t < gts.size(); ++t) {
        if (taken[t]) continue;
        const double v = iou(p.bbox(), gts[t].bbox());
        if (v > best_iou) {
          best_iou = v;
          best = t;
        }
      }
      if (best < gts.size() && best_iou >= cfg.iou_threshold) {
        taken[best] = true;
        ++counts.tp;
      } else {
        ++counts.fp;
      }
    }
    counts.fn = static_cast<std::size_t>(std::count(taken.begin(), taken.end(), false));
  }
  return report;
}

std::vector<Region> evaluation_regions(const DocumentLayout& layout) {
  std::vector<Region> out;
  for (const LayoutEntry& e : layout.regions) {
    if (const auto* block = std::get_if<BlockEntry>(&e)) {
      out.push_back(block->region);
      continue;
    }
    const auto& t = std::get<TableStructure>(e);
    out.push_back(t.table);
    for (const CellPlacement& p : t.placements) out.push_back(p.cell);
  }
  return out;
}

namespace {

OrderedJson counts_json(const ClassCounts& c) {
  OrderedJson j = OrderedJson::object();
  j["tp"] = c.tp;
  j["fp"] = c.fp;
  j["fn"] = c.fn;
  j["precision"] = c.precision();
  j["recall"] = c.recall();
  j["f1"] = c.f1();
  return j;
}

}  // namespace

OrderedJson report_to_json(const DetectionReport& report) {
  OrderedJson j = OrderedJson::object();
  OrderedJson classes = OrderedJson::object();
  for (RegionClass c : kRegionClasses) {
    classes[std::string(to_string(c))] = counts_json(report.counts(c));
  }
  j["classes"] = std::move(classes);
  j["micro"] = counts_json(report.micro());
  return j;
}

double topk_error(std::span<const std::vector<int>> ranked, std::span<const int> truths,
                  std::size_t k) {
  if (ranked.size() != truths.size()) {
    throw std::invalid_argument("topk_error: ranked lists and truths differ in length");
  }
  if (k == 0) throw std::invalid_argument("topk_error: k must be positive");
  if (ranked.empty()) throw std::invalid_argument("topk_error: no samples");
  std::size_t misses = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (ranked[i].size() < k) {
      throw std::invalid_argument("topk_error: k=" + std::to_string(k) +
                                  " exceeds ranked list length " +
                                  std::to_string(ranked[i].size()) + " at sample " +
                                  std::to_string(i));
    }
    const auto end = ranked[i].begin() + static_cast<std::ptrdiff_t>(k);
    if (std::find(ranked[i].begin(), end, truths[i]) == end) ++misses;
  }
  return static_cast<double>(misses) / static_cast<double>(ranked.size());
}

double fragment_accuracy(std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn) {
  const std::size_t total = tp + tn + fp + fn;
  if (total == 0) throw std::invalid_argument("fragment_accuracy: no fragments counted");
  return static_cast<double>(tp + tn) / static_cast<double>(total);
}

}  // namespace docingest::eval
