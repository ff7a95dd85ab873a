#pragma once

#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "docingest/geometry.hpp"

namespace docingest {

/// Region-combination settings. Survivors of NMS whose IoU exceeds
/// combine_min_overlap are merged; the default 0 merges any positive overlap.
struct RcConfig {
  double nms_iou_threshold = 0.7;
  double combine_min_overlap = 0.0;

  void validate() const;
};

/// Row/column gap thresholds for table construction. With auto_threshold
/// set, H and W are derived per table from the median cell height/width
/// scaled by kAutoThresholdFactor; otherwise the explicit values are used.
struct TableConfig {
  static constexpr double kAutoThresholdFactor = 0.1;

  double row_height_threshold = 0.0;
  double col_width_threshold = 0.0;
  bool auto_threshold = true;

  static TableConfig automatic() { return {}; }
  static TableConfig fixed(double row_height, double col_width) {
    return {row_height, col_width, false};
  }

  void validate() const;
};

/// One cell with the (1-based, contiguous) grid indices it occupies along an axis.
struct AxisAssignment {
  Region cell;
  std::vector<int> indices;
};

struct CellPlacement {
  Region cell;
  std::vector<int> rows;
  std::vector<int> cols;

  friend bool operator==(const CellPlacement&, const CellPlacement&) = default;
};

struct TableStructure {
  Region table;
  std::vector<CellPlacement> placements;
  int n_rows = 0;
  int n_cols = 0;

  /// A table with no cells is kept as an empty 0x0 grid rather than rejected.
  bool empty_grid() const noexcept { return placements.empty(); }

  friend bool operator==(const TableStructure&, const TableStructure&) = default;
};

/// Non-table entry at the top level of a layout: a text block, a
/// handwriting region, or an orphan cell demoted to a text block (flagged).
struct BlockEntry {
  Region region;
  bool flagged = false;

  friend bool operator==(const BlockEntry&, const BlockEntry&) = default;
};

using LayoutEntry = std::variant<BlockEntry, TableStructure>;

const Region& entry_region(const LayoutEntry& entry) noexcept;

struct DocumentLayout {
  std::string page_id;
  std::vector<LayoutEntry> regions;

  friend bool operator==(const DocumentLayout&, const DocumentLayout&) = default;
};

/// NMS at cfg.nms_iou_threshold, then merge overlapping survivors into
/// their bounding union until no two outputs overlap. A merged region keeps
/// the maximum constituent score. Output follows score_order_less.
std::vector<Region> region_combine(std::span<const Region> candidates,
                                   const RcConfig& cfg);

/// Row construction over cells sorted by top edge: a row opens when the
/// top edge clears the previous opener's bottom by more than the threshold,
/// and cells of the previous row that reach below the new top edge also
/// join the new row. Result is aligned with the input order.
std::vector<AxisAssignment> assign_rows(std::span<const Region> cells,
                                        double height_threshold);

/// Column analogue of assign_rows over x-coordinates.
std::vector<AxisAssignment> assign_cols(std::span<const Region> cells,
                                        double width_threshold);

/// Effective (H, W) for a set of cells under cfg.
std::pair<double, double> resolve_thresholds(std::span<const Region> cells,
                                             const TableConfig& cfg);

TableStructure build_table(const Region& table, std::span<const Region> cells,
                           const TableConfig& cfg);

/// Nests cells into the table they overlap most, builds each table grid,
/// demotes cells that touch no table to flagged text blocks and orders the
/// top level by (ymin, xmin).
DocumentLayout assemble_document(std::string page_id,
                                 std::span<const Region> regions,
                                 const TableConfig& cfg);

/// Inverse of assembly: top-level regions in layout order, each table
/// followed by its cells. Flagged orphans come back with the cell label so
/// reassembly reproduces the same layout.
std::vector<Region> flatten_layout(const DocumentLayout& layout);

}  // namespace docingest
