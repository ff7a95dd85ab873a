#include "docingest/synthdoc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "docingest/errors.hpp"
#include "docingest/layout_json.hpp"
#include "docingest/rng.hpp"

namespace docingest::synth {

namespace {

// Coordinates are snapped to 1/100 px so files stay readable.
double snap(double v) { return std::round(v * 100.0) / 100.0; }

void check_range(const IntRange& r, const char* name, int lower_bound) {
  if (r.min > r.max || r.min < lower_bound) {
    throw std::invalid_argument(std::string("GenConfig.") + name +
                                ": range must be non-empty with min >= " +
                                std::to_string(lower_bound));
  }
}

void check_range(const RealRange& r, const char* name, bool strictly_positive) {
  if (!std::isfinite(r.min) || !std::isfinite(r.max) || r.min > r.max ||
      (strictly_positive ? !(r.min > 0.0) : r.min < 0.0)) {
    throw std::invalid_argument(std::string(name) + ": range must be non-empty" +
                                (strictly_positive ? " with min > 0" : " with min >= 0"));
  }
}

}  // namespace

void GenConfig::validate() const {
  if (page_width <= 0 || page_height <= 0) {
    throw std::invalid_argument("GenConfig: page dimensions must be positive");
  }
  if (!(margin >= 0.0)) throw std::invalid_argument("GenConfig.margin must be >= 0");
  check_range(region_spacing, "GenConfig.region_spacing", false);
  check_range(n_tables, "n_tables", 0);
  check_range(n_text_blocks, "n_text_blocks", 0);
  check_range(n_handwriting, "n_handwriting", 0);
  check_range(table_rows, "table_rows", 1);
  check_range(table_cols, "table_cols", 1);
  check_range(cell_height, "GenConfig.cell_height", true);
  check_range(cell_width, "GenConfig.cell_width", true);
  check_range(row_gap, "GenConfig.row_gap", true);
  check_range(col_gap, "GenConfig.col_gap", true);
  check_range(text_height, "GenConfig.text_height", true);
  check_range(text_width, "GenConfig.text_width", true);
  check_range(handwriting_height, "GenConfig.handwriting_height", true);
  check_range(handwriting_width, "GenConfig.handwriting_width", true);
  if (!(table_padding >= 0.0)) {
    throw std::invalid_argument("GenConfig.table_padding must be >= 0");
  }
  if (!(span_rate >= 0.0 && span_rate <= 1.0)) {
    throw std::invalid_argument("GenConfig.span_rate must lie in [0, 1]");
  }
}

NoiseConfig NoiseConfig::typical() {
  NoiseConfig n;
  n.jitter_sigma = 1.0;
  n.fragmentation_rate = 0.3;
  n.spurious_rate = 0.5;
  n.drop_rate = 0.01;
  n.duplicate_rate = 0.1;
  n.score_mean = 0.9;
  n.score_sigma = 0.05;
  return n;
}

void NoiseConfig::validate() const {
  const auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!(jitter_sigma >= 0.0) || !std::isfinite(jitter_sigma)) {
    throw std::invalid_argument("NoiseConfig.jitter_sigma must be >= 0");
  }
  if (!unit(fragmentation_rate)) {
    throw std::invalid_argument("NoiseConfig.fragmentation_rate must lie in [0, 1]");
  }
  if (!(spurious_rate >= 0.0) || !std::isfinite(spurious_rate)) {
    throw std::invalid_argument("NoiseConfig.spurious_rate must be >= 0");
  }
  if (!unit(drop_rate)) throw std::invalid_argument("NoiseConfig.drop_rate must lie in [0, 1]");
  if (!unit(duplicate_rate)) {
    throw std::invalid_argument("NoiseConfig.duplicate_rate must lie in [0, 1]");
  }
  if (!unit(score_mean) || !(score_sigma >= 0.0) || !unit(score_floor)) {
    throw std::invalid_argument("NoiseConfig: score model parameters out of range");
  }
  if (!unit(spurious_score.min) || !unit(spurious_score.max) ||
      spurious_score.min > spurious_score.max) {
    throw std::invalid_argument("NoiseConfig.spurious_score must be a range within [0, 1]");
  }
}

// --- ground truth ------------------------------------------------------------

std::vector<Region> GroundTruthDoc::regions() const {
  std::vector<Region> out;
  for (const TruthTable& t : tables) {
    out.push_back(t.table);
    for (const TruthCell& c : t.cells) out.push_back(c.cell);
  }
  out.insert(out.end(), text_blocks.begin(), text_blocks.end());
  out.insert(out.end(), handwriting.begin(), handwriting.end());
  return out;
}

DocumentLayout GroundTruthDoc::as_layout() const {
  std::vector<LayoutEntry> entries;
  for (const Region& r : text_blocks) entries.emplace_back(BlockEntry{r, false});
  for (const Region& r : handwriting) entries.emplace_back(BlockEntry{r, false});
  for (const TruthTable& t : tables) {
    TableStructure s{t.table, {}, t.n_rows, t.n_cols};
    for (const TruthCell& c : t.cells) s.placements.push_back({c.cell, c.rows, c.cols});
    entries.emplace_back(std::move(s));
  }
  std::stable_sort(entries.begin(), entries.end(), [](const LayoutEntry& a, const LayoutEntry& b) {
    const BBox& ba = entry_region(a).bbox();
    const BBox& bb = entry_region(b).bbox();
    return std::make_tuple(ba.ymin(), ba.xmin()) < std::make_tuple(bb.ymin(), bb.xmin());
  });
  return {page_id, std::move(entries)};
}

namespace {

enum class ItemKind { table, text_block, handwriting };

// A grid-cell merge group: inclusive row/col ranges, 0-based.
struct GridCell {
  int row_first, row_last, col_first, col_last;
};

struct TablePlan {
  std::vector<double> row_heights;
  std::vector<double> row_gaps;
  std::vector<double> col_widths;
  std::vector<double> col_gaps;
  std::vector<GridCell> cells;
};

struct Item {
  ItemKind kind = ItemKind::text_block;
  double min_height = 0.0;
  double height = 0.0;
  double width = 0.0;
  TablePlan table;
};

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// Every row and column must keep at least one unspanned cell starting in it;
// row/column construction needs such a cell to open each line.
bool spans_reconstructible(const std::vector<GridCell>& cells, int rows, int cols) {
  std::vector<bool> row_ok(rows, false);
  std::vector<bool> col_ok(cols, false);
  for (const GridCell& c : cells) {
    if (c.row_first == c.row_last) row_ok[c.row_first] = true;
    if (c.col_first == c.col_last) col_ok[c.col_first] = true;
  }
  return std::all_of(row_ok.begin(), row_ok.end(), [](bool b) { return b; }) &&
         std::all_of(col_ok.begin(), col_ok.end(), [](bool b) { return b; });
}

std::vector<GridCell> plan_cells(int rows, int cols, double span_rate, Rng& rng) {
  std::vector<GridCell> cells;
  std::vector<int> owner(static_cast<std::size_t>(rows * cols));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      owner[r * cols + c] = static_cast<int>(cells.size());
      cells.push_back({r, r, c, c});
    }
  }
  if (span_rate <= 0.0) return cells;

  std::vector<bool> merged(cells.size(), false);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int self = owner[r * cols + c];
      if (merged[self] || !rng.bernoulli(span_rate)) continue;
      const bool down = rng.bernoulli(0.5);
      const int nr = down ? r + 1 : r;
      const int nc = down ? c : c + 1;
      if (nr >= rows || nc >= cols) continue;
      const int other = owner[nr * cols + nc];
      if (merged[other]) continue;
      std::vector<GridCell> trial = cells;
      GridCell& g = trial[self];
      g.row_last = nr;
      g.col_last = nc;
      trial.erase(trial.begin() + other);
      if (!spans_reconstructible(trial, rows, cols)) continue;
      cells = std::move(trial);
      merged.erase(merged.begin() + other);
      merged[self > other ? self - 1 : self] = true;
      for (int& o : owner) {
        if (o == other) o = self > other ? self - 1 : self;
        else if (o > other) --o;
      }
    }
  }
  return cells;
}

double uniform_in(Rng& rng, const RealRange& r) { return rng.uniform(r.min, r.max); }

// Pulls sampled sizes towards their minima so the total fits the budget.
void shrink_toward(std::vector<double>& values, double lo, double factor) {
  for (double& v : values) v = lo + (v - lo) * factor;
}

TablePlan plan_table(const GenConfig& cfg, Rng& rng, double usable_width) {
  TablePlan t;
  const int rows = static_cast<int>(rng.uniform_int(cfg.table_rows.min, cfg.table_rows.max));
  const int cols = static_cast<int>(rng.uniform_int(cfg.table_cols.min, cfg.table_cols.max));
  for (int r = 0; r < rows; ++r) t.row_heights.push_back(uniform_in(rng, cfg.cell_height));
  for (int r = 0; r + 1 < rows; ++r) t.row_gaps.push_back(uniform_in(rng, cfg.row_gap));
  for (int c = 0; c < cols; ++c) t.col_widths.push_back(uniform_in(rng, cfg.cell_width));
  for (int c = 0; c + 1 < cols; ++c) t.col_gaps.push_back(uniform_in(rng, cfg.col_gap));

  const double min_width = cols * cfg.cell_width.min + (cols - 1) * cfg.col_gap.min +
                           2.0 * cfg.table_padding;
  if (min_width > usable_width) {
    throw std::invalid_argument(
        "generate_document: page_width too small for a " + std::to_string(cols) +
        "-column table (needs " + std::to_string(min_width) + " px, usable " +
        std::to_string(usable_width) + " px)");
  }
  const double width = sum(t.col_widths) + sum(t.col_gaps) + 2.0 * cfg.table_padding;
  if (width > usable_width) {
    const double f = (usable_width - min_width) / (width - min_width);
    shrink_toward(t.col_widths, cfg.cell_width.min, f);
    shrink_toward(t.col_gaps, cfg.col_gap.min, f);
  }
  t.cells = plan_cells(rows, cols, cfg.span_rate, rng);
  return t;
}

double table_height(const TablePlan& t, double padding) {
  return sum(t.row_heights) + sum(t.row_gaps) + 2.0 * padding;
}

double table_width(const TablePlan& t, double padding) {
  return sum(t.col_widths) + sum(t.col_gaps) + 2.0 * padding;
}

TruthTable realize_table(const TablePlan& t, double x0, double y0, double padding) {
  std::vector<double> row_top, col_left;
  double y = y0 + padding;
  for (std::size_t r = 0; r < t.row_heights.size(); ++r) {
    row_top.push_back(y);
    y += t.row_heights[r] + (r < t.row_gaps.size() ? t.row_gaps[r] : 0.0);
  }
  double x = x0 + padding;
  for (std::size_t c = 0; c < t.col_widths.size(); ++c) {
    col_left.push_back(x);
    x += t.col_widths[c] + (c < t.col_gaps.size() ? t.col_gaps[c] : 0.0);
  }

  TruthTable out{Region(BBox(0, 0, 1, 1), RegionClass::table, 1.0),
                 static_cast<int>(t.row_heights.size()),
                 static_cast<int>(t.col_widths.size()),
                 {}};
  double xmin = 1e300, ymin = 1e300, xmax = -1e300, ymax = -1e300;
  for (const GridCell& g : t.cells) {
    const BBox box(snap(col_left[g.col_first]), snap(row_top[g.row_first]),
                   snap(col_left[g.col_last] + t.col_widths[g.col_last]),
                   snap(row_top[g.row_last] + t.row_heights[g.row_last]));
    std::vector<int> rows, cols;
    for (int r = g.row_first; r <= g.row_last; ++r) rows.push_back(r + 1);
    for (int c = g.col_first; c <= g.col_last; ++c) cols.push_back(c + 1);
    out.cells.push_back({Region(box, RegionClass::cell, 1.0), rows, cols});
    xmin = std::min(xmin, box.xmin());
    ymin = std::min(ymin, box.ymin());
    xmax = std::max(xmax, box.xmax());
    ymax = std::max(ymax, box.ymax());
  }
  out.table = Region(BBox(snap(xmin - padding), snap(ymin - padding), snap(xmax + padding),
                          snap(ymax + padding)),
                     RegionClass::table, 1.0);
  return out;
}

}  // namespace

GroundTruthDoc generate_document(const GenConfig& cfg, std::string page_id) {
  cfg.validate();
  Rng rng(cfg.seed);
  const double usable_width = cfg.page_width - 2.0 * cfg.margin;
  const double usable_height = cfg.page_height - 2.0 * cfg.margin;
  if (!(usable_width > 0.0) || !(usable_height > 0.0)) {
    throw std::invalid_argument("generate_document: margins leave no usable page area");
  }

  const int n_tables = static_cast<int>(rng.uniform_int(cfg.n_tables.min, cfg.n_tables.max));
  const int n_text =
      static_cast<int>(rng.uniform_int(cfg.n_text_blocks.min, cfg.n_text_blocks.max));
  const int n_hand =
      static_cast<int>(rng.uniform_int(cfg.n_handwriting.min, cfg.n_handwriting.max));

  std::vector<Item> items;
  for (int i = 0; i < n_tables; ++i) {
    Item it;
    it.kind = ItemKind::table;
    it.table = plan_table(cfg, rng, usable_width);
    const int rows = static_cast<int>(it.table.row_heights.size());
    it.min_height = rows * cfg.cell_height.min + (rows - 1) * cfg.row_gap.min +
                    2.0 * cfg.table_padding;
    it.height = table_height(it.table, cfg.table_padding);
    it.width = table_width(it.table, cfg.table_padding);
    items.push_back(std::move(it));
  }
  const auto add_block = [&](ItemKind kind, const RealRange& h, const RealRange& w, int count) {
    if (w.min > usable_width) {
      throw std::invalid_argument("generate_document: page_width too small for block width " +
                                  std::to_string(w.min));
    }
    for (int i = 0; i < count; ++i) {
      Item it;
      it.kind = kind;
      it.min_height = h.min;
      it.height = uniform_in(rng, h);
      it.width = std::min(uniform_in(rng, w), usable_width);
      items.push_back(std::move(it));
    }
  };
  add_block(ItemKind::text_block, cfg.text_height, cfg.text_width, n_text);
  add_block(ItemKind::handwriting, cfg.handwriting_height, cfg.handwriting_width, n_hand);
  rng.shuffle(items);

  const std::size_t n = items.size();
  const double gaps = n > 1 ? static_cast<double>(n - 1) : 0.0;
  double min_total = gaps * cfg.region_spacing.min;
  for (const Item& it : items) min_total += it.min_height;
  if (min_total > usable_height) {
    throw std::invalid_argument(
        "generate_document: page_height too small to stack " + std::to_string(n) +
        " regions (needs at least " + std::to_string(min_total) + " px, usable " +
        std::to_string(usable_height) + " px)");
  }

  std::vector<double> spacing(n > 1 ? n - 1 : 0);
  for (double& s : spacing) s = uniform_in(rng, cfg.region_spacing);
  double total = sum(spacing);
  for (const Item& it : items) total += it.height;
  if (total > usable_height) {
    std::fill(spacing.begin(), spacing.end(), cfg.region_spacing.min);
    double items_total = 0.0;
    for (const Item& it : items) items_total += it.height;
    const double budget = usable_height - sum(spacing);
    if (items_total > budget) {
      const double f = (budget - (min_total - sum(spacing))) /
                       (items_total - (min_total - sum(spacing)));
      for (Item& it : items) {
        if (it.kind == ItemKind::table) {
          shrink_toward(it.table.row_heights, cfg.cell_height.min, f);
          shrink_toward(it.table.row_gaps, cfg.row_gap.min, f);
          it.height = table_height(it.table, cfg.table_padding);
        } else {
          it.height = it.min_height + (it.height - it.min_height) * f;
        }
      }
    }
    total = sum(spacing);
    for (const Item& it : items) total += it.height;
  }

  // Leftover vertical space is spread over the inter-region gaps and the top.
  const double slack = std::max(0.0, usable_height - total);
  std::vector<double> weights(n + 1);
  for (double& w : weights) w = rng.uniform();
  const double wsum = sum(weights) + rng.uniform(0.5, 2.0);  // keep part of the slack unused

  GroundTruthDoc doc;
  doc.page_id = page_id.empty() ? "synth-" + std::to_string(cfg.seed) : std::move(page_id);
  doc.page_width = cfg.page_width;
  doc.page_height = cfg.page_height;

  double y = cfg.margin + slack * weights[0] / wsum;
  for (std::size_t i = 0; i < n; ++i) {
    const Item& it = items[i];
    const double x = cfg.margin + rng.uniform() * std::max(0.0, usable_width - it.width);
    switch (it.kind) {
      case ItemKind::table:
        doc.tables.push_back(realize_table(it.table, x, y, cfg.table_padding));
        break;
      case ItemKind::text_block:
        doc.text_blocks.emplace_back(
            BBox(snap(x), snap(y), snap(x + it.width), snap(y + it.height)),
            RegionClass::text_block, 1.0);
        break;
      case ItemKind::handwriting:
        doc.handwriting.emplace_back(
            BBox(snap(x), snap(y), snap(x + it.width), snap(y + it.height)),
            RegionClass::handwriting, 1.0);
        break;
    }
    y += it.height;
    if (i < spacing.size()) y += spacing[i] + slack * weights[i + 1] / wsum;
  }
  return doc;
}

std::vector<GroundTruthDoc> generate_corpus(const GenConfig& cfg, std::size_t count) {
  std::vector<GroundTruthDoc> docs;
  docs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    GenConfig per_doc = cfg;
    per_doc.seed = mix_seed(cfg.seed, i);
    char id[64];
    std::snprintf(id, sizeof(id), "synth-%llu-%05zu",
                  static_cast<unsigned long long>(cfg.seed), i);
    docs.push_back(generate_document(per_doc, id));
  }
  return docs;
}

// --- detector simulation -----------------------------------------------------

namespace {

BBox jittered(const BBox& b, double sigma, Rng& rng) {
  if (sigma == 0.0) return b;
  double x0 = b.xmin() + rng.normal(0.0, sigma);
  double y0 = b.ymin() + rng.normal(0.0, sigma);
  double x1 = b.xmax() + rng.normal(0.0, sigma);
  double y1 = b.ymax() + rng.normal(0.0, sigma);
  if (x1 - x0 < 1.0) x1 = x0 + 1.0;
  if (y1 - y0 < 1.0) y1 = y0 + 1.0;
  return BBox(snap(x0), snap(y0), snap(x1), snap(y1));
}

// Splits along the long axis into 2-4 pieces; neighbours overlap by 5-15%
// of the mean piece length and together cover the whole box.
std::vector<BBox> fragment(const BBox& b, Rng& rng) {
  const bool horizontal = b.width() >= b.height();
  const double lo = horizontal ? b.xmin() : b.ymin();
  const double hi = horizontal ? b.xmax() : b.ymax();
  const double length = hi - lo;
  const int pieces = static_cast<int>(rng.uniform_int(2, 4));

  std::vector<double> weights(pieces);
  for (double& w : weights) w = rng.uniform(0.5, 1.5);
  const double wsum = sum(weights);
  const double overlap = rng.uniform(0.05, 0.15) * length / pieces;

  std::vector<BBox> out;
  double start = lo;
  for (int k = 0; k < pieces; ++k) {
    const double end = (k + 1 == pieces) ? hi : start + length * weights[k] / wsum;
    const double a = std::max(lo, start - 0.5 * overlap);
    const double z = std::min(hi, end + 0.5 * overlap);
    out.push_back(horizontal ? BBox(snap(a), b.ymin(), snap(z), b.ymax())
                             : BBox(b.xmin(), snap(a), b.xmax(), snap(z)));
    start = end;
  }
  return out;
}

}  // namespace

std::vector<Region> simulate_proposals(const GroundTruthDoc& gt, const NoiseConfig& noise) {
  noise.validate();
  Rng rng(mix_seed(noise.seed, stable_hash(gt.page_id)));

  const auto draw_score = [&]() {
    if (noise.score_sigma == 0.0) return noise.score_mean;
    return std::clamp(rng.normal(noise.score_mean, noise.score_sigma), noise.score_floor, 1.0);
  };

  std::vector<Region> out;
  // One detection of `box`, plus a near-duplicate companion at a lower score.
  const auto detect = [&](const BBox& box, RegionClass label, double score) {
    out.emplace_back(jittered(box, noise.jitter_sigma, rng), label, score);
    if (noise.duplicate_rate > 0.0 && rng.bernoulli(noise.duplicate_rate)) {
      out.emplace_back(jittered(box, noise.jitter_sigma, rng), label, score * 0.9);
    }
  };

  for (const Region& truth : gt.regions()) {
    if (noise.drop_rate > 0.0 && rng.bernoulli(noise.drop_rate)) continue;
    const bool fragmentable =
        truth.label() == RegionClass::cell || truth.label() == RegionClass::text_block;
    if (fragmentable && noise.fragmentation_rate > 0.0 &&
        rng.bernoulli(noise.fragmentation_rate)) {
      for (const BBox& piece : fragment(truth.bbox(), rng)) {
        out.emplace_back(jittered(piece, noise.jitter_sigma, rng), truth.label(), draw_score());
      }
    } else {
      detect(truth.bbox(), truth.label(), draw_score());
    }
  }

  const double whole = std::floor(noise.spurious_rate);
  const int n_spurious =
      static_cast<int>(whole) + (rng.bernoulli(noise.spurious_rate - whole) ? 1 : 0);
  for (int i = 0; i < n_spurious; ++i) {
    const RegionClass label = rng.bernoulli(0.5) ? RegionClass::cell : RegionClass::text_block;
    const double w = rng.uniform(60.0, 240.0);
    const double h = rng.uniform(30.0, 90.0);
    const double x = rng.uniform(0.0, std::max(1.0, gt.page_width - w));
    const double y = rng.uniform(0.0, std::max(1.0, gt.page_height - h));
    const double score = rng.uniform(noise.spurious_score.min, noise.spurious_score.max);
    if (noise.drop_rate > 0.0 && rng.bernoulli(noise.drop_rate)) continue;
    detect(BBox(snap(x), snap(y), snap(x + w), snap(y + h)), label, score);
  }

  rng.shuffle(out);
  return out;
}

// --- serialization -----------------------------------------------------------

OrderedJson truth_to_json(const GroundTruthDoc& doc) {
  OrderedJson j = OrderedJson::object();
  j["page_id"] = doc.page_id;
  j["page_width"] = doc.page_width;
  j["page_height"] = doc.page_height;
  j["regions"] = layout_to_json(doc.as_layout())["regions"];
  return j;
}

GroundTruthDoc truth_from_json(const nlohmann::json& j) {
  DocumentLayout layout = parse_layout(j);
  GroundTruthDoc doc;
  doc.page_id = layout.page_id;
  std::vector<std::string> issues;
  if (!j.contains("page_width") || !j["page_width"].is_number_integer() ||
      !j.contains("page_height") || !j["page_height"].is_number_integer()) {
    issues.push_back("page_width/page_height: expected integers");
    throw ValidationError(std::move(issues));
  }
  doc.page_width = j["page_width"].get<int>();
  doc.page_height = j["page_height"].get<int>();
  for (LayoutEntry& e : layout.regions) {
    if (auto* block = std::get_if<BlockEntry>(&e)) {
      switch (block->region.label()) {
        case RegionClass::handwriting:
          doc.handwriting.push_back(block->region);
          break;
        case RegionClass::text_block:
          doc.text_blocks.push_back(block->region);
          break;
        default:
          throw ValidationError({"regions: top-level cell in ground truth"});
      }
      continue;
    }
    auto& t = std::get<TableStructure>(e);
    TruthTable tt{t.table, t.n_rows, t.n_cols, {}};
    for (CellPlacement& p : t.placements) {
      tt.cells.push_back({p.cell, std::move(p.rows), std::move(p.cols)});
    }
    doc.tables.push_back(std::move(tt));
  }
  return doc;
}

namespace {

template <typename Range>
OrderedJson range_json(const Range& r) {
  return OrderedJson::array({r.min, r.max});
}

template <typename Range>
void read_range(const nlohmann::json& j, const char* key, Range& r) {
  if (!j.contains(key)) return;
  const auto& v = j[key];
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ValidationError({std::string(key) + ": expected [min, max]"});
  }
  r.min = v[0].get<decltype(r.min)>();
  r.max = v[1].get<decltype(r.max)>();
}

template <typename T>
void read_value(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  if (!j[key].is_number()) throw ValidationError({std::string(key) + ": expected a number"});
  out = j[key].get<T>();
}

}  // namespace

OrderedJson gen_config_to_json(const GenConfig& c) {
  OrderedJson j = OrderedJson::object();
  j["page_width"] = c.page_width;
  j["page_height"] = c.page_height;
  j["margin"] = c.margin;
  j["region_spacing"] = range_json(c.region_spacing);
  j["n_tables"] = range_json(c.n_tables);
  j["n_text_blocks"] = range_json(c.n_text_blocks);
  j["n_handwriting"] = range_json(c.n_handwriting);
  j["table_rows"] = range_json(c.table_rows);
  j["table_cols"] = range_json(c.table_cols);
  j["cell_height"] = range_json(c.cell_height);
  j["cell_width"] = range_json(c.cell_width);
  j["row_gap"] = range_json(c.row_gap);
  j["col_gap"] = range_json(c.col_gap);
  j["table_padding"] = c.table_padding;
  j["span_rate"] = c.span_rate;
  j["text_height"] = range_json(c.text_height);
  j["text_width"] = range_json(c.text_width);
  j["handwriting_height"] = range_json(c.handwriting_height);
  j["handwriting_width"] = range_json(c.handwriting_width);
  j["seed"] = c.seed;
  return j;
}

GenConfig gen_config_from_json(const nlohmann::json& j, GenConfig c) {
  if (!j.is_object()) throw ValidationError({"generator config: expected an object"});
  read_value(j, "page_width", c.page_width);
  read_value(j, "page_height", c.page_height);
  read_value(j, "margin", c.margin);
  read_range(j, "region_spacing", c.region_spacing);
  read_range(j, "n_tables", c.n_tables);
  read_range(j, "n_text_blocks", c.n_text_blocks);
  read_range(j, "n_handwriting", c.n_handwriting);
  read_range(j, "table_rows", c.table_rows);
  read_range(j, "table_cols", c.table_cols);
  read_range(j, "cell_height", c.cell_height);
  read_range(j, "cell_width", c.cell_width);
  read_range(j, "row_gap", c.row_gap);
  read_range(j, "col_gap", c.col_gap);
  read_value(j, "table_padding", c.table_padding);
  read_value(j, "span_rate", c.span_rate);
  read_range(j, "text_height", c.text_height);
  read_range(j, "text_width", c.text_width);
  read_range(j, "handwriting_height", c.handwriting_height);
  read_range(j, "handwriting_width", c.handwriting_width);
  read_value(j, "seed", c.seed);
  c.validate();
  return c;
}

OrderedJson noise_config_to_json(const NoiseConfig& c) {
  OrderedJson j = OrderedJson::object();
  j["jitter_sigma"] = c.jitter_sigma;
  j["fragmentation_rate"] = c.fragmentation_rate;
  j["spurious_rate"] = c.spurious_rate;
  j["drop_rate"] = c.drop_rate;
  j["duplicate_rate"] = c.duplicate_rate;
  j["score_mean"] = c.score_mean;
  j["score_sigma"] = c.score_sigma;
  j["score_floor"] = c.score_floor;
  j["spurious_score"] = range_json(c.spurious_score);
  j["seed"] = c.seed;
  return j;
}

NoiseConfig noise_config_from_json(const nlohmann::json& j, NoiseConfig c) {
  if (!j.is_object()) throw ValidationError({"noise config: expected an object"});
  read_value(j, "jitter_sigma", c.jitter_sigma);
  read_value(j, "fragmentation_rate", c.fragmentation_rate);
  read_value(j, "spurious_rate", c.spurious_rate);
  read_value(j, "drop_rate", c.drop_rate);
  read_value(j, "duplicate_rate", c.duplicate_rate);
  read_value(j, "score_mean", c.score_mean);
  read_value(j, "score_sigma", c.score_sigma);
  read_value(j, "score_floor", c.score_floor);
  read_range(j, "spurious_score", c.spurious_score);
  read_value(j, "seed", c.seed);
  c.validate();
  return c;
}

}  // namespace docingest::synth
