#include "docingest/pipeline.hpp"

#include <array>
#include <vector>

namespace docingest {

DocumentLayout structure_page(std::string page_id, std::span<const Region> proposals,
                              const PipelineConfig& cfg) {
  cfg.rc.validate();
  cfg.table.validate();
  const NmsConfig handwriting_nms(cfg.handwriting_nms_threshold);
  const NmsConfig layout_nms(cfg.rc.nms_iou_threshold);

  std::array<std::vector<Region>, kRegionClasses.size()> by_class;
  for (const Region& r : proposals) {
    by_class[static_cast<std::size_t>(r.label())].push_back(r);
  }

  std::vector<Region> reduced;
  reduced.reserve(proposals.size());
  for (RegionClass c : kRegionClasses) {
    const auto& group = by_class[static_cast<std::size_t>(c)];
    if (group.empty()) continue;
    std::vector<Region> kept;
    if (c == RegionClass::handwriting) {
      kept = nms(group, handwriting_nms);
    } else if (cfg.combine_regions) {
      kept = region_combine(group, cfg.rc);
    } else {
      kept = nms(group, layout_nms);
    }
    reduced.insert(reduced.end(), kept.begin(), kept.end());
  }
  return assemble_document(std::move(page_id), reduced, cfg.table);
}

}  // namespace docingest
