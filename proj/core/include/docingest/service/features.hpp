#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "docingest/geometry.hpp"
#include "docingest/incremental/training.hpp"

namespace docingest::service {

/// Width of the region feature vector.
inline constexpr int kFeatureDim = 16;
/// Classifier outputs, one per RegionClass in kRegionClasses order.
inline constexpr int kNumRegionClasses = static_cast<int>(kRegionClasses.size());

int class_index(RegionClass label) noexcept;
RegionClass class_from_index(int index);

/// Geometry-only description of page[index] in the context of the other
/// regions of its page (labels are never read). Throws std::out_of_range.
incremental::Vector region_features(std::span<const Region> page, std::size_t index);

/// Labeled features for every region of a page.
std::vector<incremental::LabeledSample> page_samples(std::span<const Region> page);

/// Settings for the synthetic set the base model is trained on. The same
/// set is replayed as the original data D during incremental updates.
struct BaseDataConfig {
  std::size_t documents = 24;
  std::uint64_t seed = 11;
};

std::vector<incremental::LabeledSample> base_training_set(const BaseDataConfig& cfg);

}  // namespace docingest::service
