#include "docingest/service/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "docingest/synthdoc.hpp"

namespace docingest::service {

int class_index(RegionClass label) noexcept { return static_cast<int>(label); }

RegionClass class_from_index(int index) {
  if (index < 0 || index >= kNumRegionClasses) {
    throw std::out_of_range("class index " + std::to_string(index) + " is not a region class");
  }
  return kRegionClasses[static_cast<std::size_t>(index)];
}

namespace {

double overlap_1d(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

}  // namespace

incremental::Vector region_features(std::span<const Region> page, std::size_t index) {
  if (index >= page.size()) throw std::out_of_range("region_features: index out of range");
  const BBox& b = page[index].bbox();

  double ex0 = b.xmin(), ey0 = b.ymin(), ex1 = b.xmax(), ey1 = b.ymax();
  for (const Region& r : page) {
    ex0 = std::min(ex0, r.bbox().xmin());
    ey0 = std::min(ey0, r.bbox().ymin());
    ex1 = std::max(ex1, r.bbox().xmax());
    ey1 = std::max(ey1, r.bbox().ymax());
  }
  const double ew = ex1 - ex0;
  const double eh = ey1 - ey0;

  double inside = 0.0;
  double container_area = 0.0;
  double contained_area = 0.0;
  double nearest_gap = 5.0;
  int contained = 0;
  int overlapping = 0;
  int row_peers = 0;
  int col_peers = 0;
  for (std::size_t j = 0; j < page.size(); ++j) {
    if (j == index) continue;
    const BBox& o = page[j].bbox();
    const double inter = intersection_area(b, o);
    if (inter > 0.0) ++overlapping;
    const double share_of_self = inter / b.area();
    if (share_of_self > inside) inside = share_of_self;
    if (share_of_self > 0.9 && o.area() > b.area() &&
        (container_area == 0.0 || o.area() < container_area)) {
      container_area = o.area();
    }
    if (inter / o.area() > 0.9 && o.area() < b.area()) {
      ++contained;
      contained_area += o.area();
    }
    const double x_overlap = overlap_1d(b.xmin(), b.xmax(), o.xmin(), o.xmax());
    const double y_overlap = overlap_1d(b.ymin(), b.ymax(), o.ymin(), o.ymax());
    if (x_overlap > 0.0 && inter == 0.0) {
      const double gap = o.ymin() >= b.ymax() ? o.ymin() - b.ymax() : b.ymin() - o.ymax();
      nearest_gap = std::min(nearest_gap, gap / b.height());
    }
    if (y_overlap > 0.5 * b.height() && std::abs(o.height() - b.height()) <= 0.1 * b.height()) {
      ++row_peers;
    }
    if (x_overlap > 0.5 * b.width() && std::abs(o.width() - b.width()) <= 0.1 * b.width()) {
      ++col_peers;
    }
  }

  incremental::Vector f(kFeatureDim);
  f(0) = std::log(b.width() / 100.0);
  f(1) = std::log(b.height() / 100.0);
  f(2) = std::log(b.width() / b.height());
  f(3) = page[index].score();
  f(4) = ((b.xmin() + b.xmax()) / 2.0 - ex0) / ew;
  f(5) = ((b.ymin() + b.ymax()) / 2.0 - ey0) / eh;
  f(6) = b.width() / ew;
  f(7) = b.height() / eh;
  f(8) = inside;
  f(9) = std::log1p(contained);
  f(10) = std::log1p(overlapping);
  f(11) = std::min(1.0, contained_area / b.area());
  f(12) = container_area > 0.0 ? b.area() / container_area : 0.0;
  f(13) = nearest_gap / 5.0;
  f(14) = std::log1p(row_peers);
  f(15) = std::log1p(col_peers);
  return f;
}

std::vector<incremental::LabeledSample> page_samples(std::span<const Region> page) {
  std::vector<incremental::LabeledSample> out;
  out.reserve(page.size());
  for (std::size_t i = 0; i < page.size(); ++i) {
    out.push_back({region_features(page, i), class_index(page[i].label())});
  }
  return out;
}

std::vector<incremental::LabeledSample> base_training_set(const BaseDataConfig& cfg) {
  synth::GenConfig gen;
  gen.seed = cfg.seed;
  gen.n_tables = {1, 2};
  std::vector<incremental::LabeledSample> out;
  for (const synth::GroundTruthDoc& doc : synth::generate_corpus(gen, cfg.documents)) {
    const std::vector<Region> regions = doc.regions();
    const auto samples = page_samples(regions);
    out.insert(out.end(), samples.begin(), samples.end());
  }
  return out;
}

}  // namespace docingest::service
