#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "docingest/json_io.hpp"
#include "docingest/layout.hpp"

namespace docingest {

// Wire format shared by layouts, proposal files and ground-truth files:
//   region  {"class": <name>, "bbox": [xmin, ymin, xmax, ymax], "score": <num>}
//   table   region + {"n_rows": int, "n_cols": int,
//                     "cells": [{"bbox": [...], "rows": [..], "cols": [..], "score": <num>}]}
//   layout  {"page_id": <string>, "regions": [...]}

OrderedJson bbox_to_json(const BBox& b);
OrderedJson region_to_json(const Region& r);
OrderedJson layout_to_json(const DocumentLayout& layout);

/// Canonical layout bytes (compact, shortest round-trip numbers).
std::string serialize_layout(const DocumentLayout& layout);

/// A page of raw detector proposals.
struct ProposalPage {
  std::string page_id;
  std::vector<Region> regions;
};

OrderedJson proposals_to_json(const ProposalPage& page);

// Parsers collect every problem they find and throw ValidationError.
// `path` prefixes the reported field locations.

BBox parse_bbox(const nlohmann::json& j, const std::string& path);
Region parse_region(const nlohmann::json& j, const std::string& path);
std::vector<Region> parse_regions(const nlohmann::json& j, const std::string& path);
ProposalPage parse_proposals(const nlohmann::json& j);
DocumentLayout parse_layout(const nlohmann::json& j);

/// Non-throwing variants used when aggregating issues across a payload.
std::optional<BBox> try_parse_bbox(const nlohmann::json& j, const std::string& path,
                                   std::vector<std::string>& issues);
std::optional<Region> try_parse_region(const nlohmann::json& j, const std::string& path,
                                       std::vector<std::string>& issues);

}  // namespace docingest
