#include "docingest/layout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace docingest {

void RcConfig::validate() const {
  if (!(nms_iou_threshold > 0.0 && nms_iou_threshold <= 1.0)) {
    throw std::invalid_argument("RcConfig.nms_iou_threshold must lie in (0, 1]");
  }
  if (!(combine_min_overlap >= 0.0) || !std::isfinite(combine_min_overlap)) {
    throw std::invalid_argument("RcConfig.combine_min_overlap must be >= 0");
  }
}

void TableConfig::validate() const {
  if (auto_threshold) return;
  if (!(row_height_threshold > 0.0) || !std::isfinite(row_height_threshold)) {
    throw std::invalid_argument("TableConfig row height threshold H must be > 0");
  }
  if (!(col_width_threshold > 0.0) || !std::isfinite(col_width_threshold)) {
    throw std::invalid_argument("TableConfig column width threshold W must be > 0");
  }
}

const Region& entry_region(const LayoutEntry& entry) noexcept {
  if (const auto* block = std::get_if<BlockEntry>(&entry)) return block->region;
  return std::get<TableStructure>(entry).table;
}

// --- region combination ------------------------------------------------------

std::vector<Region> region_combine(std::span<const Region> candidates,
                                   const RcConfig& cfg) {
  cfg.validate();
  require_single_class(candidates, "region_combine");

  std::vector<Region> work = nms(candidates, NmsConfig(cfg.nms_iou_threshold));
  std::vector<Region> out;

  const auto overlapping = [&](const Region& a, const Region& b) {
    return iou(a.bbox(), b.bbox()) > cfg.combine_min_overlap;
  };
  const auto merge = [](const Region& a, const Region& b) {
    return Region(bounding_union(a.bbox(), b.bbox()), a.label(),
                  std::max(a.score(), b.score()));
  };
  // Absorbs every overlapping region of `pool` into `r`; true if any was taken.
  const auto absorb = [&](Region& r, std::vector<Region>& pool) {
    bool any = false;
    for (auto it = pool.begin(); it != pool.end();) {
      if (overlapping(r, *it)) {
        r = merge(r, *it);
        it = pool.erase(it);
        any = true;
      } else {
        ++it;
      }
    }
    return any;
  };

  // `work` stays sorted by score, so the front is the highest-confidence region.
  while (!work.empty()) {
    Region r = work.front();
    work.erase(work.begin());
    // A grown union can reach regions it did not touch before, including
    // ones already finalised, so iterate to a fixed point over both sets.
    bool changed = true;
    while (changed) {
      const bool from_work = absorb(r, work);
      const bool from_out = absorb(r, out);
      changed = from_work || from_out;
    }
    out.push_back(r);
  }

  std::sort(out.begin(), out.end(), score_order_less);
  return out;
}

// --- table construction ------------------------------------------------------

namespace {

struct Interval {
  double lo;
  double hi;
};

// `extent` projects a box onto the construction axis, `across` onto the other.
template <typename Extent, typename Across>
std::vector<AxisAssignment> assign_axis(std::span<const Region> cells,
                                        double threshold, Extent extent,
                                        Across across, const char* op) {
  if (cells.empty()) {
    throw std::invalid_argument(std::string(op) + ": cell list is empty");
  }
  if (!(threshold > 0.0) || !std::isfinite(threshold)) {
    throw std::invalid_argument(std::string(op) + ": threshold must be > 0");
  }
  for (const Region& c : cells) {
    if (c.label() != RegionClass::cell) {
      throw std::invalid_argument(std::string(op) + ": non-cell region in input");
    }
  }

  // Ties on the leading edge put the shortest extent first, so a spanning
  // cell never opens a row/column ahead of a single one.
  std::vector<std::size_t> order(cells.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Interval ia = extent(cells[a].bbox());
    const Interval ib = extent(cells[b].bbox());
    const Interval pa = across(cells[a].bbox());
    const Interval pb = across(cells[b].bbox());
    return std::tie(ia.lo, ia.hi, pa.lo, pa.hi) < std::tie(ib.lo, ib.hi, pb.lo, pb.hi);
  });

  std::vector<std::vector<int>> sets(cells.size());
  std::vector<std::size_t> previous_line;
  std::vector<std::size_t> current_line;
  int n = 0;
  double last = -std::numeric_limits<double>::infinity();

  for (std::size_t i : order) {
    const Interval span = extent(cells[i].bbox());
    if (span.lo - last > threshold) {
      ++n;
      last = span.hi;
      previous_line = std::move(current_line);
      current_line.clear();
      sets[i].push_back(n);
      current_line.push_back(i);
      for (std::size_t j : previous_line) {
        if (extent(cells[j].bbox()).hi > span.lo) {
          sets[j].push_back(n);
          current_line.push_back(j);
        }
      }
    } else {
      sets[i].push_back(n);
      current_line.push_back(i);
    }
  }

  std::vector<AxisAssignment> result;
  result.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    result.push_back({cells[i], std::move(sets[i])});
  }
  return result;
}

Interval vertical(const BBox& b) { return {b.ymin(), b.ymax()}; }
Interval horizontal(const BBox& b) { return {b.xmin(), b.xmax()}; }

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

std::vector<AxisAssignment> assign_rows(std::span<const Region> cells,
                                        double height_threshold) {
  return assign_axis(cells, height_threshold, vertical, horizontal, "assign_rows");
}

std::vector<AxisAssignment> assign_cols(std::span<const Region> cells,
                                        double width_threshold) {
  return assign_axis(cells, width_threshold, horizontal, vertical, "assign_cols");
}

std::pair<double, double> resolve_thresholds(std::span<const Region> cells,
                                             const TableConfig& cfg) {
  cfg.validate();
  if (!cfg.auto_threshold) return {cfg.row_height_threshold, cfg.col_width_threshold};
  if (cells.empty()) {
    throw std::invalid_argument("resolve_thresholds: no cells to derive thresholds from");
  }
  std::vector<double> heights;
  std::vector<double> widths;
  for (const Region& c : cells) {
    heights.push_back(c.bbox().height());
    widths.push_back(c.bbox().width());
  }
  return {TableConfig::kAutoThresholdFactor * median(std::move(heights)),
          TableConfig::kAutoThresholdFactor * median(std::move(widths))};
}

TableStructure build_table(const Region& table, std::span<const Region> cells,
                           const TableConfig& cfg) {
  cfg.validate();
  if (table.label() != RegionClass::table) {
    throw std::invalid_argument("build_table: container region is not a table");
  }
  TableStructure out{table, {}, 0, 0};
  if (cells.empty()) return out;

  for (const Region& c : cells) {
    if (intersection_area(c.bbox(), table.bbox()) <= 0.0) {
      throw std::invalid_argument("build_table: cell does not intersect the table");
    }
  }

  const auto [h, w] = resolve_thresholds(cells, cfg);
  auto rows = assign_rows(cells, h);
  auto cols = assign_cols(cells, w);

  out.placements.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    out.n_rows = std::max(out.n_rows, rows[i].indices.back());
    out.n_cols = std::max(out.n_cols, cols[i].indices.back());
    out.placements.push_back(
        {cells[i], std::move(rows[i].indices), std::move(cols[i].indices)});
  }
  std::stable_sort(out.placements.begin(), out.placements.end(),
                   [](const CellPlacement& a, const CellPlacement& b) {
                     const BBox& ba = a.cell.bbox();
                     const BBox& bb = b.cell.bbox();
                     return std::make_tuple(a.rows.front(), a.cols.front(), ba.ymin(),
                                            ba.xmin(), ba.ymax(), ba.xmax()) <
                            std::make_tuple(b.rows.front(), b.cols.front(), bb.ymin(),
                                            bb.xmin(), bb.ymax(), bb.xmax());
                   });
  return out;
}

// --- document assembly -------------------------------------------------------

namespace {

bool reading_order_less(const Region& a, const Region& b) {
  const BBox& ba = a.bbox();
  const BBox& bb = b.bbox();
  return std::make_tuple(ba.ymin(), ba.xmin(), ba.ymax(), ba.xmax(),
                         static_cast<int>(a.label()), -a.score()) <
         std::make_tuple(bb.ymin(), bb.xmin(), bb.ymax(), bb.xmax(),
                         static_cast<int>(b.label()), -b.score());
}

}  // namespace

DocumentLayout assemble_document(std::string page_id,
                                 std::span<const Region> regions,
                                 const TableConfig& cfg) {
  cfg.validate();
  std::vector<Region> tables;
  std::vector<Region> cells;
  std::vector<BlockEntry> blocks;
  for (const Region& r : regions) {
    switch (r.label()) {
      case RegionClass::table:
        tables.push_back(r);
        break;
      case RegionClass::cell:
        cells.push_back(r);
        break;
      default:
        blocks.push_back({r, false});
        break;
    }
  }
  std::sort(tables.begin(), tables.end(), reading_order_less);
  std::sort(cells.begin(), cells.end(), reading_order_less);

  std::vector<std::vector<Region>> members(tables.size());
  for (const Region& c : cells) {
    std::size_t best = tables.size();
    double best_area = 0.0;
    for (std::size_t t = 0; t < tables.size(); ++t) {
      const double a = intersection_area(c.bbox(), tables[t].bbox());
      if (a > best_area) {
        best_area = a;
        best = t;
      }
    }
    if (best == tables.size()) {
      blocks.push_back({c.with_label(RegionClass::text_block), true});
    } else {
      members[best].push_back(c);
    }
  }

  std::vector<LayoutEntry> entries;
  entries.reserve(blocks.size() + tables.size());
  for (BlockEntry& b : blocks) entries.emplace_back(std::move(b));
  for (std::size_t t = 0; t < tables.size(); ++t) {
    entries.emplace_back(build_table(tables[t], members[t], cfg));
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const LayoutEntry& a, const LayoutEntry& b) {
                     return reading_order_less(entry_region(a), entry_region(b));
                   });
  return DocumentLayout{std::move(page_id), std::move(entries)};
}

std::vector<Region> flatten_layout(const DocumentLayout& layout) {
  std::vector<Region> flat;
  for (const LayoutEntry& e : layout.regions) {
    if (const auto* block = std::get_if<BlockEntry>(&e)) {
      flat.push_back(block->flagged ? block->region.with_label(RegionClass::cell)
                                    : block->region);
      continue;
    }
    const auto& t = std::get<TableStructure>(e);
    flat.push_back(t.table);
    for (const CellPlacement& p : t.placements) flat.push_back(p.cell);
  }
  return flat;
}

}  // namespace docingest
