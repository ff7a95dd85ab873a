#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "docingest/json_io.hpp"
#include "docingest/layout.hpp"

namespace docingest::synth {

struct IntRange {
  int min = 0;
  int max = 0;
};

struct RealRange {
  double min = 0.0;
  double max = 0.0;
};

/// Page geometry generator settings. All lengths are pixels.
struct GenConfig {
  int page_width = 2480;
  int page_height = 3508;
  double margin = 100.0;
  RealRange region_spacing{30.0, 80.0};

  IntRange n_tables{0, 2};
  IntRange n_text_blocks{2, 6};
  IntRange n_handwriting{0, 4};

  IntRange table_rows{2, 6};
  IntRange table_cols{2, 5};
  RealRange cell_height{40.0, 90.0};
  RealRange cell_width{100.0, 320.0};
  RealRange row_gap{16.0, 40.0};
  RealRange col_gap{40.0, 80.0};
  double table_padding = 10.0;
  /// Probability that a cell is merged with its right or lower neighbour.
  double span_rate = 0.1;

  RealRange text_height{60.0, 240.0};
  RealRange text_width{400.0, 1800.0};
  RealRange handwriting_height{100.0, 180.0};
  RealRange handwriting_width{250.0, 550.0};

  std::uint64_t seed = 1;

  void validate() const;
};

struct TruthCell {
  Region cell;
  std::vector<int> rows;
  std::vector<int> cols;
};

struct TruthTable {
  Region table;
  int n_rows = 0;
  int n_cols = 0;
  std::vector<TruthCell> cells;
};

struct GroundTruthDoc {
  std::string page_id;
  int page_width = 0;
  int page_height = 0;
  std::vector<TruthTable> tables;
  std::vector<Region> text_blocks;
  std::vector<Region> handwriting;

  /// Every truth region, cells included, in a deterministic order.
  std::vector<Region> regions() const;
  /// The truth expressed in the layout model (tables nest their grid truth).
  DocumentLayout as_layout() const;
};

/// Detector-noise model applied on top of ground truth.
struct NoiseConfig {
  double jitter_sigma = 0.0;
  /// Probability a cell/text block is split into 2-4 overlapping fragments.
  double fragmentation_rate = 0.0;
  /// Expected number of spurious boxes per page.
  double spurious_rate = 0.0;
  double drop_rate = 0.0;
  /// Probability an emitted box gets a near-duplicate companion.
  double duplicate_rate = 0.0;
  double score_mean = 1.0;
  double score_sigma = 0.0;
  double score_floor = 0.05;
  RealRange spurious_score{0.1, 0.5};
  std::uint64_t seed = 1;

  static NoiseConfig zero() { return {}; }
  /// Moderate noise resembling a well-trained detector.
  static NoiseConfig typical();

  void validate() const;
};

/// Throws std::invalid_argument if the page cannot hold the sampled regions.
GroundTruthDoc generate_document(const GenConfig& cfg, std::string page_id = {});

/// Documents 0..count-1, each from its own stream derived from cfg.seed.
std::vector<GroundTruthDoc> generate_corpus(const GenConfig& cfg, std::size_t count);

/// Noisy class-labelled proposals for one page. The random stream is
/// derived from (noise.seed, page_id), so each page of a corpus differs.
std::vector<Region> simulate_proposals(const GroundTruthDoc& gt, const NoiseConfig& noise);

OrderedJson truth_to_json(const GroundTruthDoc& doc);
GroundTruthDoc truth_from_json(const nlohmann::json& j);

OrderedJson gen_config_to_json(const GenConfig& cfg);
GenConfig gen_config_from_json(const nlohmann::json& j, GenConfig base = {});
OrderedJson noise_config_to_json(const NoiseConfig& cfg);
NoiseConfig noise_config_from_json(const nlohmann::json& j, NoiseConfig base = {});

}  // namespace docingest::synth
