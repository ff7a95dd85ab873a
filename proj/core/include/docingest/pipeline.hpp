#pragma once

#include <span>
#include <string>

#include "docingest/layout.hpp"

namespace docingest {

/// End-to-end structuring settings for one page of proposals.
struct PipelineConfig {
  RcConfig rc;
  /// Handwriting regions are only de-duplicated with plain NMS.
  double handwriting_nms_threshold = 0.3;
  TableConfig table;
  /// When false, layout classes get plain NMS at rc.nms_iou_threshold
  /// instead of region combination (used for ablation).
  bool combine_regions = true;
};

/// Per-class reduction of raw proposals (region combination for tables,
/// cells and text blocks; NMS for handwriting) followed by document assembly.
DocumentLayout structure_page(std::string page_id, std::span<const Region> proposals,
                              const PipelineConfig& cfg);

}  // namespace docingest
