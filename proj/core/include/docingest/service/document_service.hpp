#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "docingest/incremental/classifier.hpp"
#include "docingest/incremental/training.hpp"
#include "docingest/json_io.hpp"
#include "docingest/layout.hpp"
#include "docingest/pipeline.hpp"
#include "docingest/service/features.hpp"
#include "docingest/service/journal.hpp"

namespace docingest::service {

/// Environment variable naming the service data directory.
inline constexpr const char* kDataDirEnv = "DOCINGEST_DATA_DIR";

enum class DocumentStatus { detected, reviewed, finalized };
std::string_view to_string(DocumentStatus status) noexcept;

/// The four correction actions. Wire names: "move_resize", "relabel",
/// "delete", "add".
enum class EditAction { move_resize, relabel, remove, add };
std::string_view to_string(EditAction action) noexcept;

/// A region as published in the layout JSON: its class name and bbox.
struct RegionRef {
  RegionClass label;
  BBox bbox;
};

struct Edit {
  EditAction action = EditAction::relabel;
  /// Required for every action except add.
  std::optional<RegionRef> target;
  /// New class (relabel, add).
  std::optional<RegionClass> label;
  /// New box (move_resize, add).
  std::optional<BBox> bbox;
  /// Score of an added region.
  double score = 1.0;
};

struct CorrectionRecord {
  /// Assigned when the correction is acknowledged; 0 before.
  std::uint64_t id = 0;
  std::string page_id;
  std::string operator_id;
  /// ISO-8601 text; filled with the current UTC time when empty.
  std::string timestamp;
  std::vector<Edit> edits;
};

/// Corrections wire format:
///   {"operator": str, "timestamp": str (optional), "page_id": str (optional,
///    must match), "edits": [{"action": name, "target": {"class", "bbox"},
///    "class": name, "bbox": [4 numbers], "score": num}]}
/// Throws ValidationError listing every malformed field.
CorrectionRecord parse_correction(const nlohmann::json& j, const std::string& page_id);
OrderedJson correction_to_json(const CorrectionRecord& rec);

struct DocumentRecord {
  std::string page_id;
  std::vector<Region> proposals;
  /// Current regions in flatten_layout order (orphans carry the cell label).
  std::vector<Region> regions;
  DocumentLayout layout;
  DocumentStatus status = DocumentStatus::detected;
  std::size_t corrections_applied = 0;
};

/// {"page_id", "status", "corrections_applied", "flagged": [{"class", "bbox"}]}.
OrderedJson document_summary_json(const DocumentRecord& doc);

struct CorrectionAck {
  std::uint64_t correction_id = 0;
  std::string page_id;
  DocumentStatus status = DocumentStatus::reviewed;
  /// Corrections waiting for training after this one was staged.
  std::size_t staged = 0;
};

OrderedJson ack_to_json(const CorrectionAck& ack);

enum class JobStatus { completed, noop };
std::string_view to_string(JobStatus status) noexcept;

struct TrainingJob {
  /// 0 for a no-op (nothing staged); no-ops are not recorded.
  std::uint64_t id = 0;
  JobStatus status = JobStatus::noop;
  std::vector<std::uint64_t> consumed;
  std::size_t samples = 0;
  int base_version = 0;
  /// Equals base_version when the consumed corrections carried no samples.
  int model_version = 0;
  std::vector<std::string> warnings;
  std::vector<incremental::CurvePoint> curve;
};

OrderedJson job_to_json(const TrainingJob& job);
TrainingJob job_from_json(const nlohmann::json& j);

struct ServiceConfig {
  std::filesystem::path data_dir;
  PipelineConfig pipeline;
  BaseDataConfig base_data;
  incremental::Architecture arch;
  /// Training of the initial model (version 0) on the base set.
  incremental::TrainConfig base_train;
  /// Defaults for incremental updates; requests may override them.
  incremental::TrainConfig update_train;
  /// Journal entries between snapshots.
  std::size_t snapshot_every = 256;

  ServiceConfig();
  /// Defaults with data_dir from DOCINGEST_DATA_DIR (or `fallback`).
  static ServiceConfig from_env(const std::filesystem::path& fallback = "docingest-data");
};

/// Training overrides accepted by POST /train/incremental:
/// {"alpha", "p", "lambda", "learning_rate", "max_steps", "batch_size", "seed"}.
incremental::TrainConfig parse_train_request(const nlohmann::json& j,
                                             incremental::TrainConfig base);

/// Document ingestion, layout retrieval, correction staging and
/// incremental training over a file-backed store (journal + snapshot +
/// model files). Every state change is journaled and synced before the
/// call returns. Safe for concurrent callers.
class DocumentService {
 public:
  /// Recovers state from cfg.data_dir, creating it (and training model
  /// version 0) when empty.
  explicit DocumentService(ServiceConfig cfg);

  /// Payload is a proposals page {"regions": [...]} or a synthetic source
  /// {"synth": {"gen": {...}, "noise": {...}}}. Returns the new page id.
  std::string ingest_document(const nlohmann::json& payload);
  std::string ingest_proposals(std::vector<Region> proposals);

  /// Canonical layout bytes. Throws NotFoundError.
  std::string get_layout(const std::string& page_id) const;
  DocumentRecord get_document(const std::string& page_id) const;
  std::vector<std::string> document_ids() const;

  /// Applies every edit or none. Throws NotFoundError, ValidationError for
  /// dangling references, ConflictError for a finalized page.
  CorrectionAck submit_correction(CorrectionRecord rec);
  void finalize_document(const std::string& page_id);

  std::size_t staged_count() const;
  std::vector<CorrectionRecord> staged_corrections() const;

  /// Consumes every staged correction into one update of the current
  /// model. Returns a no-op job when nothing is staged.
  TrainingJob trigger_incremental_training(const incremental::TrainConfig& cfg);
  TrainingJob trigger_incremental_training() {
    return trigger_incremental_training(config_.update_train);
  }
  TrainingJob get_job(std::uint64_t id) const;

  int current_model_version() const;
  /// Throws NotFoundError for an unknown version.
  incremental::GroupedClassifier load_model(int version) const;
  OrderedJson model_json(int version) const;

  const ServiceConfig& config() const noexcept { return config_; }

 private:
  struct StagedCorrection {
    CorrectionRecord record;
    std::vector<incremental::LabeledSample> samples;
  };

  void recover();
  void ensure_base_model();
  void apply_entry(const nlohmann::json& entry);
  /// Appends a journal entry; callers apply the change in memory afterwards
  /// and then call maybe_snapshot().
  void commit(OrderedJson entry);
  void maybe_snapshot();
  void write_snapshot();
  std::string model_text(int version) const;
  std::filesystem::path model_path(int version) const;
  std::string ingest_locked(std::vector<Region> proposals);
  DocumentRecord& find_locked(const std::string& page_id);
  const DocumentRecord& find_locked(const std::string& page_id) const;
  /// Validates and applies rec to a copy of doc; returns the updated copy
  /// and the labeled samples the edits produced.
  std::pair<DocumentRecord, std::vector<incremental::LabeledSample>> apply_edits(
      const DocumentRecord& doc, const CorrectionRecord& rec) const;
  const std::vector<incremental::LabeledSample>& base_set();

  ServiceConfig config_;
  std::unique_ptr<Journal> journal_;
  mutable std::shared_mutex state_mutex_;
  std::mutex training_mutex_;
  std::mutex base_set_mutex_;

  std::uint64_t seq_ = 0;
  std::uint64_t next_page_ = 1;
  std::uint64_t next_correction_ = 1;
  std::uint64_t next_job_ = 1;
  std::size_t since_snapshot_ = 0;
  int model_version_ = 0;
  std::map<std::string, DocumentRecord> documents_;
  std::vector<StagedCorrection> staged_;
  std::map<std::uint64_t, TrainingJob> jobs_;
  std::optional<std::vector<incremental::LabeledSample>> base_set_;
};

}  // namespace docingest::service
