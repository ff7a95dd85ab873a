#include "docingest/layout_json.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "docingest/errors.hpp"

namespace docingest {

OrderedJson bbox_to_json(const BBox& b) {
  return OrderedJson::array({b.xmin(), b.ymin(), b.xmax(), b.ymax()});
}

OrderedJson region_to_json(const Region& r) {
  OrderedJson j = OrderedJson::object();
  j["class"] = std::string(to_string(r.label()));
  j["bbox"] = bbox_to_json(r.bbox());
  j["score"] = r.score();
  return j;
}

namespace {

OrderedJson ints_to_json(const std::vector<int>& v) {
  OrderedJson arr = OrderedJson::array();
  for (int i : v) arr.push_back(i);
  return arr;
}

OrderedJson table_to_json(const TableStructure& t) {
  OrderedJson j = region_to_json(t.table);
  j["n_rows"] = t.n_rows;
  j["n_cols"] = t.n_cols;
  OrderedJson cells = OrderedJson::array();
  for (const CellPlacement& p : t.placements) {
    OrderedJson c = OrderedJson::object();
    c["bbox"] = bbox_to_json(p.cell.bbox());
    c["rows"] = ints_to_json(p.rows);
    c["cols"] = ints_to_json(p.cols);
    c["score"] = p.cell.score();
    cells.push_back(std::move(c));
  }
  j["cells"] = std::move(cells);
  return j;
}

}  // namespace

OrderedJson layout_to_json(const DocumentLayout& layout) {
  OrderedJson j = OrderedJson::object();
  j["page_id"] = layout.page_id;
  OrderedJson regions = OrderedJson::array();
  for (const LayoutEntry& e : layout.regions) {
    if (const auto* block = std::get_if<BlockEntry>(&e)) {
      regions.push_back(region_to_json(block->region));
    } else {
      regions.push_back(table_to_json(std::get<TableStructure>(e)));
    }
  }
  j["regions"] = std::move(regions);
  return j;
}

std::string serialize_layout(const DocumentLayout& layout) {
  return dump_json(layout_to_json(layout));
}

OrderedJson proposals_to_json(const ProposalPage& page) {
  OrderedJson j = OrderedJson::object();
  j["page_id"] = page.page_id;
  OrderedJson regions = OrderedJson::array();
  for (const Region& r : page.regions) regions.push_back(region_to_json(r));
  j["regions"] = std::move(regions);
  return j;
}

// --- parsing -----------------------------------------------------------------

std::optional<BBox> try_parse_bbox(const nlohmann::json& j, const std::string& path,
                                   std::vector<std::string>& issues) {
  if (!j.is_array() || j.size() != 4) {
    issues.push_back(path + ": expected an array of 4 numbers");
    return std::nullopt;
  }
  double v[4];
  for (std::size_t i = 0; i < 4; ++i) {
    if (!j[i].is_number()) {
      issues.push_back(path + "[" + std::to_string(i) + "]: expected a number");
      return std::nullopt;
    }
    v[i] = j[i].get<double>();
  }
  try {
    return BBox(v[0], v[1], v[2], v[3]);
  } catch (const std::invalid_argument& e) {
    issues.push_back(path + ": " + e.what());
    return std::nullopt;
  }
}

namespace {

std::optional<double> parse_score(const nlohmann::json& j, const std::string& path,
                                  std::vector<std::string>& issues) {
  if (!j.contains("score")) return 1.0;
  const auto& s = j["score"];
  if (!s.is_number()) {
    issues.push_back(path + ".score: expected a number");
    return std::nullopt;
  }
  const double v = s.get<double>();
  if (!(v >= 0.0 && v <= 1.0)) {
    issues.push_back(path + ".score: must lie in [0, 1]");
    return std::nullopt;
  }
  return v;
}

std::optional<std::vector<int>> parse_indices(const nlohmann::json& j,
                                              const std::string& path,
                                              std::vector<std::string>& issues) {
  if (!j.is_array() || j.empty()) {
    issues.push_back(path + ": expected a non-empty array of positive integers");
    return std::nullopt;
  }
  std::vector<int> out;
  for (const auto& v : j) {
    if (!v.is_number_integer() || v.get<long long>() < 1) {
      issues.push_back(path + ": expected positive integers");
      return std::nullopt;
    }
    out.push_back(v.get<int>());
  }
  return out;
}

void throw_if_any(std::vector<std::string>& issues) {
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

}  // namespace

std::optional<Region> try_parse_region(const nlohmann::json& j, const std::string& path,
                                       std::vector<std::string>& issues) {
  if (!j.is_object()) {
    issues.push_back(path + ": expected an object");
    return std::nullopt;
  }
  std::optional<RegionClass> label;
  if (!j.contains("class") || !j["class"].is_string()) {
    issues.push_back(path + ".class: expected a string");
  } else {
    label = parse_region_class(j["class"].get<std::string>());
    if (!label) issues.push_back(path + ".class: unknown class '" +
                                 j["class"].get<std::string>() + "'");
  }
  std::optional<BBox> box;
  if (!j.contains("bbox")) {
    issues.push_back(path + ".bbox: missing");
  } else {
    box = try_parse_bbox(j["bbox"], path + ".bbox", issues);
  }
  const auto score = parse_score(j, path, issues);
  if (!label || !box || !score) return std::nullopt;
  return Region(*box, *label, *score);
}

BBox parse_bbox(const nlohmann::json& j, const std::string& path) {
  std::vector<std::string> issues;
  auto b = try_parse_bbox(j, path, issues);
  throw_if_any(issues);
  return *b;
}

Region parse_region(const nlohmann::json& j, const std::string& path) {
  std::vector<std::string> issues;
  auto r = try_parse_region(j, path, issues);
  throw_if_any(issues);
  return *r;
}

std::vector<Region> parse_regions(const nlohmann::json& j, const std::string& path) {
  std::vector<std::string> issues;
  std::vector<Region> out;
  if (!j.is_array()) {
    issues.push_back(path + ": expected an array");
  } else {
    for (std::size_t i = 0; i < j.size(); ++i) {
      auto r = try_parse_region(j[i], path + "[" + std::to_string(i) + "]", issues);
      if (r) out.push_back(*r);
    }
  }
  throw_if_any(issues);
  return out;
}

ProposalPage parse_proposals(const nlohmann::json& j) {
  std::vector<std::string> issues;
  ProposalPage page;
  if (!j.is_object()) throw ValidationError({"$: expected an object"});
  if (j.contains("page_id")) {
    if (j["page_id"].is_string()) {
      page.page_id = j["page_id"].get<std::string>();
    } else {
      issues.push_back("page_id: expected a string");
    }
  }
  if (!j.contains("regions")) {
    issues.push_back("regions: missing");
  } else {
    try {
      page.regions = parse_regions(j["regions"], "regions");
    } catch (const ValidationError& e) {
      issues.insert(issues.end(), e.issues().begin(), e.issues().end());
    }
  }
  throw_if_any(issues);
  return page;
}

DocumentLayout parse_layout(const nlohmann::json& j) {
  std::vector<std::string> issues;
  DocumentLayout layout;
  if (!j.is_object()) throw ValidationError({"$: expected an object"});
  if (!j.contains("page_id") || !j["page_id"].is_string()) {
    issues.push_back("page_id: expected a string");
  } else {
    layout.page_id = j["page_id"].get<std::string>();
  }
  if (!j.contains("regions") || !j["regions"].is_array()) {
    issues.push_back("regions: expected an array");
    throw_if_any(issues);
  }
  const auto& regions = j["regions"];
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const std::string path = "regions[" + std::to_string(i) + "]";
    auto region = try_parse_region(regions[i], path, issues);
    if (!region) continue;
    if (region->label() != RegionClass::table) {
      layout.regions.emplace_back(BlockEntry{*region, false});
      continue;
    }
    TableStructure t{*region, {}, 0, 0};
    const auto& tj = regions[i];
    if (!tj.contains("n_rows") || !tj["n_rows"].is_number_integer() ||
        !tj.contains("n_cols") || !tj["n_cols"].is_number_integer()) {
      issues.push_back(path + ": table requires integer n_rows and n_cols");
      continue;
    }
    t.n_rows = tj["n_rows"].get<int>();
    t.n_cols = tj["n_cols"].get<int>();
    if (!tj.contains("cells") || !tj["cells"].is_array()) {
      issues.push_back(path + ".cells: expected an array");
      continue;
    }
    const auto& cells = tj["cells"];
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const std::string cpath = path + ".cells[" + std::to_string(k) + "]";
      const auto& cj = cells[k];
      if (!cj.is_object()) {
        issues.push_back(cpath + ": expected an object");
        continue;
      }
      auto box = cj.contains("bbox") ? try_parse_bbox(cj["bbox"], cpath + ".bbox", issues)
                                     : std::nullopt;
      if (!cj.contains("bbox")) issues.push_back(cpath + ".bbox: missing");
      auto score = parse_score(cj, cpath, issues);
      auto rows = cj.contains("rows") ? parse_indices(cj["rows"], cpath + ".rows", issues)
                                      : std::nullopt;
      auto cols = cj.contains("cols") ? parse_indices(cj["cols"], cpath + ".cols", issues)
                                      : std::nullopt;
      if (!cj.contains("rows")) issues.push_back(cpath + ".rows: missing");
      if (!cj.contains("cols")) issues.push_back(cpath + ".cols: missing");
      if (!box || !score || !rows || !cols) continue;
      if (*std::max_element(rows->begin(), rows->end()) > t.n_rows ||
          *std::max_element(cols->begin(), cols->end()) > t.n_cols) {
        issues.push_back(cpath + ": grid index exceeds n_rows/n_cols");
        continue;
      }
      t.placements.push_back({Region(*box, RegionClass::cell, *score), *rows, *cols});
    }
    layout.regions.emplace_back(std::move(t));
  }
  throw_if_any(issues);
  return layout;
}

}  // namespace docingest
