#include "docingest/service/document_service.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <set>
#include <stdexcept>

#include "docingest/errors.hpp"
#include "docingest/incremental/snapshot.hpp"
#include "docingest/layout_json.hpp"
#include "docingest/rng.hpp"
#include "docingest/synthdoc.hpp"

namespace docingest::service {

namespace inc = incremental;

namespace {

constexpr int kSnapshotFormatVersion = 1;

void throw_if_any(std::vector<std::string>& issues) {
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string page_name(std::uint64_t n) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "doc-%06llu", static_cast<unsigned long long>(n));
  return buf;
}

std::optional<EditAction> parse_action(const std::string& name) {
  if (name == "move_resize") return EditAction::move_resize;
  if (name == "relabel") return EditAction::relabel;
  if (name == "delete") return EditAction::remove;
  if (name == "add") return EditAction::add;
  return std::nullopt;
}

std::optional<RegionClass> parse_class_field(const nlohmann::json& j, const std::string& path,
                                             std::vector<std::string>& issues) {
  if (!j.is_string()) {
    issues.push_back(path + ": expected a class name");
    return std::nullopt;
  }
  const auto label = parse_region_class(j.get<std::string>());
  if (!label) issues.push_back(path + ": unknown class \"" + j.get<std::string>() + "\"");
  return label;
}

OrderedJson samples_to_json(const std::vector<inc::LabeledSample>& samples) {
  OrderedJson out = OrderedJson::array();
  for (const inc::LabeledSample& s : samples) {
    OrderedJson js;
    js["features"] = std::vector<double>(s.features.begin(), s.features.end());
    js["label"] = s.label;
    out.push_back(std::move(js));
  }
  return out;
}

std::vector<inc::LabeledSample> samples_from_json(const nlohmann::json& j) {
  std::vector<inc::LabeledSample> out;
  for (const auto& js : j) {
    const auto values = js.at("features").get<std::vector<double>>();
    out.push_back({Eigen::Map<const inc::Vector>(values.data(),
                                                 static_cast<Eigen::Index>(values.size())),
                   js.at("label").get<int>()});
  }
  return out;
}

OrderedJson regions_to_json(const std::vector<Region>& regions) {
  OrderedJson out = OrderedJson::array();
  for (const Region& r : regions) out.push_back(region_to_json(r));
  return out;
}

OrderedJson finite_or_null(double v) { return std::isfinite(v) ? OrderedJson(v) : OrderedJson(); }

/// Regions in flatten_layout order with the class each one is published under.
std::vector<Region> published_regions(const DocumentLayout& layout) {
  std::vector<Region> out;
  for (const LayoutEntry& e : layout.regions) {
    if (const auto* block = std::get_if<BlockEntry>(&e)) {
      out.push_back(block->region);
      continue;
    }
    const auto& t = std::get<TableStructure>(e);
    out.push_back(t.table);
    for (const CellPlacement& p : t.placements) out.push_back(p.cell);
  }
  return out;
}

}  // namespace

std::string_view to_string(DocumentStatus status) noexcept {
  switch (status) {
    case DocumentStatus::detected: return "detected";
    case DocumentStatus::reviewed: return "reviewed";
    case DocumentStatus::finalized: return "finalized";
  }
  return "detected";
}

std::string_view to_string(EditAction action) noexcept {
  switch (action) {
    case EditAction::move_resize: return "move_resize";
    case EditAction::relabel: return "relabel";
    case EditAction::remove: return "delete";
    case EditAction::add: return "add";
  }
  return "relabel";
}

std::string_view to_string(JobStatus status) noexcept {
  return status == JobStatus::completed ? "completed" : "noop";
}

namespace {

DocumentStatus parse_status(const std::string& name) {
  if (name == "reviewed") return DocumentStatus::reviewed;
  if (name == "finalized") return DocumentStatus::finalized;
  return DocumentStatus::detected;
}

}  // namespace

CorrectionRecord parse_correction(const nlohmann::json& j, const std::string& page_id) {
  if (!j.is_object()) throw ValidationError({"$: expected an object"});
  std::vector<std::string> issues;
  CorrectionRecord rec;
  rec.page_id = page_id;
  for (const auto& [key, value] : j.items()) {
    if (key != "operator" && key != "timestamp" && key != "page_id" && key != "edits" &&
        key != "id") {
      issues.push_back(key + ": unknown field");
    }
  }
  if (!j.contains("operator") || !j["operator"].is_string() ||
      j["operator"].get<std::string>().empty()) {
    issues.push_back("operator: expected a non-empty string");
  } else {
    rec.operator_id = j["operator"].get<std::string>();
  }
  if (j.contains("timestamp")) {
    if (j["timestamp"].is_string()) {
      rec.timestamp = j["timestamp"].get<std::string>();
    } else {
      issues.push_back("timestamp: expected a string");
    }
  }
  if (j.contains("page_id") &&
      (!j["page_id"].is_string() || j["page_id"].get<std::string>() != page_id)) {
    issues.push_back("page_id: does not match the page being corrected");
  }
  if (!j.contains("edits") || !j["edits"].is_array() || j["edits"].empty()) {
    issues.push_back("edits: expected a non-empty array");
    throw_if_any(issues);
  }

  const auto& edits = j["edits"];
  for (std::size_t i = 0; i < edits.size(); ++i) {
    const std::string path = "edits[" + std::to_string(i) + "]";
    const auto& je = edits[i];
    if (!je.is_object()) {
      issues.push_back(path + ": expected an object");
      continue;
    }
    Edit edit;
    std::optional<EditAction> action;
    if (!je.contains("action") || !je["action"].is_string() ||
        !(action = parse_action(je["action"].get<std::string>()))) {
      issues.push_back(path + ".action: expected one of move_resize, relabel, delete, add");
    } else {
      edit.action = *action;
    }
    for (const auto& [key, value] : je.items()) {
      if (key != "action" && key != "target" && key != "class" && key != "bbox" &&
          key != "score") {
        issues.push_back(path + "." + key + ": unknown field");
      }
    }
    if (je.contains("target")) {
      const auto& jt = je["target"];
      if (!jt.is_object() || !jt.contains("class") || !jt.contains("bbox")) {
        issues.push_back(path + ".target: expected {\"class\", \"bbox\"}");
      } else {
        const auto label = parse_class_field(jt["class"], path + ".target.class", issues);
        const auto box = try_parse_bbox(jt["bbox"], path + ".target.bbox", issues);
        if (label && box) edit.target = RegionRef{*label, *box};
      }
    }
    if (je.contains("class")) edit.label = parse_class_field(je["class"], path + ".class", issues);
    if (je.contains("bbox")) edit.bbox = try_parse_bbox(je["bbox"], path + ".bbox", issues);
    if (je.contains("score")) {
      if (!je["score"].is_number() || !(je["score"].get<double>() >= 0.0) ||
          !(je["score"].get<double>() <= 1.0)) {
        issues.push_back(path + ".score: expected a number in [0, 1]");
      } else {
        edit.score = je["score"].get<double>();
      }
    }
    if (action) {
      const bool needs_target = *action != EditAction::add;
      if (needs_target && !je.contains("target")) issues.push_back(path + ".target: missing");
      if (!needs_target && je.contains("target")) {
        issues.push_back(path + ".target: not allowed for add");
      }
      const bool needs_class = *action == EditAction::relabel || *action == EditAction::add;
      const bool needs_bbox = *action == EditAction::move_resize || *action == EditAction::add;
      if (needs_class && !je.contains("class")) issues.push_back(path + ".class: missing");
      if (!needs_class && je.contains("class")) {
        issues.push_back(path + ".class: not allowed for " + je["action"].get<std::string>());
      }
      if (needs_bbox && !je.contains("bbox")) issues.push_back(path + ".bbox: missing");
      if (!needs_bbox && je.contains("bbox")) {
        issues.push_back(path + ".bbox: not allowed for " + je["action"].get<std::string>());
      }
      if (*action != EditAction::add && je.contains("score")) {
        issues.push_back(path + ".score: only allowed for add");
      }
    }
    rec.edits.push_back(std::move(edit));
  }
  throw_if_any(issues);
  return rec;
}

OrderedJson correction_to_json(const CorrectionRecord& rec) {
  OrderedJson j;
  j["id"] = rec.id;
  j["page_id"] = rec.page_id;
  j["operator"] = rec.operator_id;
  j["timestamp"] = rec.timestamp;
  OrderedJson edits = OrderedJson::array();
  for (const Edit& e : rec.edits) {
    OrderedJson je;
    je["action"] = std::string(to_string(e.action));
    if (e.target) {
      je["target"]["class"] = std::string(to_string(e.target->label));
      je["target"]["bbox"] = bbox_to_json(e.target->bbox);
    }
    if (e.label) je["class"] = std::string(to_string(*e.label));
    if (e.bbox) je["bbox"] = bbox_to_json(*e.bbox);
    if (e.action == EditAction::add) je["score"] = e.score;
    edits.push_back(std::move(je));
  }
  j["edits"] = std::move(edits);
  return j;
}

OrderedJson document_summary_json(const DocumentRecord& doc) {
  OrderedJson j;
  j["page_id"] = doc.page_id;
  j["status"] = std::string(to_string(doc.status));
  j["corrections_applied"] = doc.corrections_applied;
  OrderedJson flagged = OrderedJson::array();
  for (const LayoutEntry& e : doc.layout.regions) {
    const auto* block = std::get_if<BlockEntry>(&e);
    if (block == nullptr || !block->flagged) continue;
    OrderedJson f;
    f["class"] = std::string(to_string(block->region.label()));
    f["bbox"] = bbox_to_json(block->region.bbox());
    flagged.push_back(std::move(f));
  }
  j["flagged"] = std::move(flagged);
  return j;
}

OrderedJson ack_to_json(const CorrectionAck& ack) {
  OrderedJson j;
  j["correction_id"] = ack.correction_id;
  j["page_id"] = ack.page_id;
  j["status"] = std::string(to_string(ack.status));
  j["staged"] = ack.staged;
  return j;
}

OrderedJson job_to_json(const TrainingJob& job) {
  OrderedJson j;
  j["id"] = job.id;
  j["status"] = std::string(to_string(job.status));
  j["consumed"] = job.consumed;
  j["consumed_count"] = job.consumed.size();
  j["samples"] = job.samples;
  j["base_version"] = job.base_version;
  j["model_version"] = job.model_version;
  j["warnings"] = job.warnings;
  OrderedJson curve = OrderedJson::array();
  for (const inc::CurvePoint& p : job.curve) {
    OrderedJson jp;
    jp["step"] = p.step;
    jp["train_loss"] = finite_or_null(p.train_loss);
    jp["heldout_loss"] = finite_or_null(p.heldout_loss);
    curve.push_back(std::move(jp));
  }
  j["curve"] = std::move(curve);
  return j;
}

TrainingJob job_from_json(const nlohmann::json& j) {
  TrainingJob job;
  job.id = j.at("id").get<std::uint64_t>();
  job.status = j.at("status").get<std::string>() == "completed" ? JobStatus::completed
                                                                 : JobStatus::noop;
  job.consumed = j.at("consumed").get<std::vector<std::uint64_t>>();
  job.samples = j.at("samples").get<std::size_t>();
  job.base_version = j.at("base_version").get<int>();
  job.model_version = j.at("model_version").get<int>();
  job.warnings = j.at("warnings").get<std::vector<std::string>>();
  for (const auto& jp : j.at("curve")) {
    const auto num = [](const nlohmann::json& v) {
      return v.is_number() ? v.get<double>() : std::nan("");
    };
    job.curve.push_back({jp.at("step").get<int>(), num(jp.at("train_loss")),
                         num(jp.at("heldout_loss"))});
  }
  return job;
}

ServiceConfig::ServiceConfig() {
  arch.input_dim = kFeatureDim;
  arch.hidden_widths = {32, 32};
  arch.num_classes = kNumRegionClasses;
  base_train.learning_rate = 0.01;
  base_train.max_steps = 1500;
  base_train.eval_interval = 50;
  base_train.new_data_rate = 1.0;
  base_train.seed = 3;
  update_train.learning_rate = 0.01;
  update_train.max_steps = 400;
  update_train.eval_interval = 20;
  update_train.patience = 5;
  update_train.min_improvement = 0.01;
  update_train.new_data_rate = 0.25;
  update_train.distillation_weight = 1.0;
  update_train.seed = 5;
}

ServiceConfig ServiceConfig::from_env(const std::filesystem::path& fallback) {
  ServiceConfig cfg;
  const char* dir = std::getenv(kDataDirEnv);
  cfg.data_dir = (dir != nullptr && *dir != '\0') ? std::filesystem::path(dir) : fallback;
  return cfg;
}

inc::TrainConfig parse_train_request(const nlohmann::json& j, inc::TrainConfig base) {
  if (j.is_null()) return base;
  if (!j.is_object()) throw ValidationError({"$: expected an object"});
  std::vector<std::string> issues;
  const auto number = [&](const std::string& key, double& out) {
    if (!j[key].is_number()) {
      issues.push_back(key + ": expected a number");
    } else {
      out = j[key].get<double>();
    }
  };
  const auto integer = [&](const std::string& key, auto& out) {
    if (!j[key].is_number_integer() || j[key].get<long long>() < 0) {
      issues.push_back(key + ": expected a non-negative integer");
    } else {
      out = static_cast<std::remove_reference_t<decltype(out)>>(j[key].get<long long>());
    }
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "alpha") number(key, base.distillation_weight);
    else if (key == "p") number(key, base.new_data_rate);
    else if (key == "lambda") number(key, base.task_weight);
    else if (key == "learning_rate") number(key, base.learning_rate);
    else if (key == "max_steps") integer(key, base.max_steps);
    else if (key == "batch_size") integer(key, base.batch_size);
    else if (key == "seed") integer(key, base.seed);
    else issues.push_back(key + ": unknown field");
  }
  throw_if_any(issues);
  try {
    base.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError({e.what()});
  }
  return base;
}

DocumentService::DocumentService(ServiceConfig cfg) : config_(std::move(cfg)) {
  if (config_.data_dir.empty()) throw std::invalid_argument("DocumentService: data_dir is empty");
  if (config_.arch.input_dim != kFeatureDim || config_.arch.num_classes != kNumRegionClasses) {
    throw std::invalid_argument("DocumentService: architecture must map " +
                                std::to_string(kFeatureDim) + " features to " +
                                std::to_string(kNumRegionClasses) + " classes");
  }
  if (config_.snapshot_every == 0) {
    throw std::invalid_argument("DocumentService: snapshot_every must be >= 1");
  }
  config_.pipeline.rc.validate();
  config_.pipeline.table.validate();
  config_.base_train.validate();
  config_.update_train.validate();
  std::filesystem::create_directories(config_.data_dir / "models");
  recover();
  ensure_base_model();
}

std::filesystem::path DocumentService::model_path(int version) const {
  return config_.data_dir / "models" / ("v" + std::to_string(version) + ".json");
}

void DocumentService::recover() {
  const auto snapshot_path = config_.data_dir / "snapshot.json";
  if (std::filesystem::exists(snapshot_path)) {
    const auto snap = nlohmann::json::parse(read_file(snapshot_path));
    if (snap.at("format_version").get<int>() != kSnapshotFormatVersion) {
      throw std::runtime_error("unsupported snapshot format in " + snapshot_path.string());
    }
    seq_ = snap.at("seq").get<std::uint64_t>();
    next_page_ = snap.at("next_page").get<std::uint64_t>();
    next_correction_ = snap.at("next_correction").get<std::uint64_t>();
    next_job_ = snap.at("next_job").get<std::uint64_t>();
    model_version_ = snap.at("model_version").get<int>();
    for (const auto& jd : snap.at("documents")) {
      DocumentRecord doc;
      doc.page_id = jd.at("page_id").get<std::string>();
      doc.status = parse_status(jd.at("status").get<std::string>());
      doc.corrections_applied = jd.at("corrections_applied").get<std::size_t>();
      doc.proposals = parse_regions(jd.at("proposals"), "proposals");
      const auto regions = parse_regions(jd.at("regions"), "regions");
      doc.layout = assemble_document(doc.page_id, regions, config_.pipeline.table);
      doc.regions = flatten_layout(doc.layout);
      documents_.emplace(doc.page_id, std::move(doc));
    }
    for (const auto& js : snap.at("staged")) {
      StagedCorrection sc;
      sc.record = parse_correction(js.at("correction"),
                                   js.at("correction").at("page_id").get<std::string>());
      sc.record.id = js.at("correction").at("id").get<std::uint64_t>();
      sc.samples = samples_from_json(js.at("samples"));
      staged_.push_back(std::move(sc));
    }
    for (const auto& jj : snap.at("jobs")) {
      TrainingJob job = job_from_json(jj);
      jobs_.emplace(job.id, std::move(job));
    }
  }
  journal_ = std::make_unique<Journal>(config_.data_dir / "journal.jsonl");
  for (const auto& entry : journal_->read_all()) {
    const auto seq = entry.at("seq").get<std::uint64_t>();
    if (seq <= seq_) continue;
    apply_entry(entry);
    seq_ = seq;
    ++since_snapshot_;
  }
}

void DocumentService::apply_entry(const nlohmann::json& entry) {
  const std::string type = entry.at("type").get<std::string>();
  if (type == "ingest") {
    DocumentRecord doc;
    doc.page_id = entry.at("page_id").get<std::string>();
    doc.proposals = parse_regions(entry.at("proposals"), "proposals");
    doc.layout = structure_page(doc.page_id, doc.proposals, config_.pipeline);
    doc.regions = flatten_layout(doc.layout);
    documents_[doc.page_id] = std::move(doc);
    ++next_page_;
  } else if (type == "correction") {
    const auto& jc = entry.at("correction");
    CorrectionRecord rec = parse_correction(jc, jc.at("page_id").get<std::string>());
    rec.id = jc.at("id").get<std::uint64_t>();
    DocumentRecord& doc = find_locked(rec.page_id);
    doc = apply_edits(doc, rec).first;
    staged_.push_back({std::move(rec), samples_from_json(entry.at("samples"))});
    next_correction_ = staged_.back().record.id + 1;
  } else if (type == "finalize") {
    find_locked(entry.at("page_id").get<std::string>()).status = DocumentStatus::finalized;
  } else if (type == "train_job") {
    TrainingJob job = job_from_json(entry.at("job"));
    const std::set<std::uint64_t> consumed(job.consumed.begin(), job.consumed.end());
    std::erase_if(staged_,
                  [&](const StagedCorrection& s) { return consumed.contains(s.record.id); });
    model_version_ = job.model_version;
    next_job_ = job.id + 1;
    jobs_[job.id] = std::move(job);
  } else {
    throw std::runtime_error("journal entry has unknown type \"" + type + "\"");
  }
}

void DocumentService::commit(OrderedJson entry) {
  OrderedJson line;
  line["seq"] = seq_ + 1;
  for (auto& [key, value] : entry.items()) line[key] = std::move(value);
  journal_->append(dump_json(line));
  ++seq_;
}

void DocumentService::maybe_snapshot() {
  if (++since_snapshot_ >= config_.snapshot_every) write_snapshot();
}

void DocumentService::write_snapshot() {
  OrderedJson snap;
  snap["format_version"] = kSnapshotFormatVersion;
  snap["seq"] = seq_;
  snap["next_page"] = next_page_;
  snap["next_correction"] = next_correction_;
  snap["next_job"] = next_job_;
  snap["model_version"] = model_version_;
  OrderedJson docs = OrderedJson::array();
  for (const auto& [id, doc] : documents_) {
    OrderedJson jd;
    jd["page_id"] = doc.page_id;
    jd["status"] = std::string(to_string(doc.status));
    jd["corrections_applied"] = doc.corrections_applied;
    jd["proposals"] = regions_to_json(doc.proposals);
    jd["regions"] = regions_to_json(doc.regions);
    docs.push_back(std::move(jd));
  }
  snap["documents"] = std::move(docs);
  OrderedJson staged = OrderedJson::array();
  for (const StagedCorrection& s : staged_) {
    OrderedJson js;
    js["correction"] = correction_to_json(s.record);
    js["samples"] = samples_to_json(s.samples);
    staged.push_back(std::move(js));
  }
  snap["staged"] = std::move(staged);
  OrderedJson jobs = OrderedJson::array();
  for (const auto& [id, job] : jobs_) jobs.push_back(job_to_json(job));
  snap["jobs"] = std::move(jobs);
  write_file_atomic(config_.data_dir / "snapshot.json", dump_json(snap));
  journal_->truncate();
  since_snapshot_ = 0;
}

const std::vector<inc::LabeledSample>& DocumentService::base_set() {
  std::lock_guard lock(base_set_mutex_);
  if (!base_set_) base_set_ = base_training_set(config_.base_data);
  return *base_set_;
}

void DocumentService::ensure_base_model() {
  if (std::filesystem::exists(model_path(0))) return;
  Rng rng(config_.base_train.seed);
  auto model = inc::GroupedClassifier::initialize(config_.arch, rng);
  const auto result = inc::train_classifier(std::move(model), base_set(), config_.base_train);
  write_file_atomic(model_path(0), dump_json(inc::model_to_json(result.model)));
}

DocumentRecord& DocumentService::find_locked(const std::string& page_id) {
  const auto it = documents_.find(page_id);
  if (it == documents_.end()) throw NotFoundError("unknown page_id \"" + page_id + "\"");
  return it->second;
}

const DocumentRecord& DocumentService::find_locked(const std::string& page_id) const {
  const auto it = documents_.find(page_id);
  if (it == documents_.end()) throw NotFoundError("unknown page_id \"" + page_id + "\"");
  return it->second;
}

std::string DocumentService::ingest_document(const nlohmann::json& payload) {
  if (!payload.is_object()) throw ValidationError({"$: expected an object"});
  if (!payload.contains("synth")) return ingest_proposals(parse_proposals(payload).regions);

  const auto& js = payload["synth"];
  if (!js.is_object()) throw ValidationError({"synth: expected an object"});
  std::vector<std::string> issues;
  for (const auto& [key, value] : js.items()) {
    if (key != "gen" && key != "noise") issues.push_back("synth." + key + ": unknown field");
  }
  throw_if_any(issues);
  try {
    const auto gen = synth::gen_config_from_json(js.value("gen", nlohmann::json::object()));
    const auto noise = synth::noise_config_from_json(js.value("noise", nlohmann::json::object()));
    const auto truth = synth::generate_document(gen, "synth-source");
    return ingest_proposals(synth::simulate_proposals(truth, noise));
  } catch (const ValidationError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ValidationError({std::string("synth: ") + e.what()});
  }
}

std::string DocumentService::ingest_proposals(std::vector<Region> proposals) {
  std::unique_lock lock(state_mutex_);
  return ingest_locked(std::move(proposals));
}

std::string DocumentService::ingest_locked(std::vector<Region> proposals) {
  DocumentRecord doc;
  doc.page_id = page_name(next_page_);
  doc.proposals = std::move(proposals);
  doc.layout = structure_page(doc.page_id, doc.proposals, config_.pipeline);
  doc.regions = flatten_layout(doc.layout);

  OrderedJson entry;
  entry["type"] = "ingest";
  entry["page_id"] = doc.page_id;
  entry["proposals"] = regions_to_json(doc.proposals);
  commit(std::move(entry));

  ++next_page_;
  std::string id = doc.page_id;
  documents_.emplace(id, std::move(doc));
  maybe_snapshot();
  return id;
}

std::string DocumentService::get_layout(const std::string& page_id) const {
  std::shared_lock lock(state_mutex_);
  return serialize_layout(find_locked(page_id).layout);
}

DocumentRecord DocumentService::get_document(const std::string& page_id) const {
  std::shared_lock lock(state_mutex_);
  return find_locked(page_id);
}

std::vector<std::string> DocumentService::document_ids() const {
  std::shared_lock lock(state_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, doc] : documents_) ids.push_back(id);
  return ids;
}

std::pair<DocumentRecord, std::vector<inc::LabeledSample>> DocumentService::apply_edits(
    const DocumentRecord& doc, const CorrectionRecord& rec) const {
  const std::vector<Region> published = published_regions(doc.layout);
  std::vector<std::string> issues;
  if (rec.edits.empty()) issues.emplace_back("edits: expected a non-empty array");

  std::vector<std::optional<std::size_t>> target(rec.edits.size());
  std::vector<bool> touched(published.size(), false);
  for (std::size_t i = 0; i < rec.edits.size(); ++i) {
    const Edit& e = rec.edits[i];
    const std::string path = "edits[" + std::to_string(i) + "]";
    const bool needs_label = e.action == EditAction::relabel || e.action == EditAction::add;
    const bool needs_bbox = e.action == EditAction::move_resize || e.action == EditAction::add;
    if (needs_label && !e.label) issues.push_back(path + ".class: missing");
    if (needs_bbox && !e.bbox) issues.push_back(path + ".bbox: missing");
    if (e.action == EditAction::add) continue;
    if (!e.target) {
      issues.push_back(path + ".target: missing");
      continue;
    }
    for (std::size_t j = 0; j < published.size(); ++j) {
      if (published[j].label() == e.target->label && published[j].bbox() == e.target->bbox) {
        target[i] = j;
        break;
      }
    }
    if (!target[i]) {
      issues.push_back(path + ".target: no " + std::string(to_string(e.target->label)) +
                       " region with that bbox on page " + doc.page_id);
    } else if (touched[*target[i]]) {
      issues.push_back(path + ".target: region is already edited in this batch");
    } else {
      touched[*target[i]] = true;
    }
  }
  throw_if_any(issues);

  std::vector<std::optional<Region>> updated(doc.regions.begin(), doc.regions.end());
  std::vector<bool> labeled(updated.size(), false);
  std::vector<Region> added;
  for (std::size_t i = 0; i < rec.edits.size(); ++i) {
    const Edit& e = rec.edits[i];
    switch (e.action) {
      case EditAction::relabel:
        updated[*target[i]] = updated[*target[i]]->with_label(*e.label);
        labeled[*target[i]] = true;
        break;
      case EditAction::move_resize:
        updated[*target[i]] = updated[*target[i]]->with_bbox(*e.bbox);
        labeled[*target[i]] = true;
        break;
      case EditAction::remove:
        updated[*target[i]].reset();
        break;
      case EditAction::add:
        added.emplace_back(*e.bbox, *e.label, e.score);
        break;
    }
  }

  std::vector<Region> page;
  std::vector<std::size_t> sample_positions;
  for (std::size_t j = 0; j < updated.size(); ++j) {
    if (!updated[j]) continue;
    if (labeled[j]) sample_positions.push_back(page.size());
    page.push_back(*updated[j]);
  }
  for (const Region& r : added) {
    sample_positions.push_back(page.size());
    page.push_back(r);
  }

  std::vector<inc::LabeledSample> samples;
  for (std::size_t pos : sample_positions) {
    samples.push_back({region_features(page, pos), class_index(page[pos].label())});
  }

  DocumentRecord next = doc;
  next.layout = assemble_document(doc.page_id, page, config_.pipeline.table);
  next.regions = flatten_layout(next.layout);
  next.status = DocumentStatus::reviewed;
  ++next.corrections_applied;
  return {std::move(next), std::move(samples)};
}

CorrectionAck DocumentService::submit_correction(CorrectionRecord rec) {
  std::unique_lock lock(state_mutex_);
  DocumentRecord& doc = find_locked(rec.page_id);
  if (doc.status == DocumentStatus::finalized) {
    throw ConflictError("page " + rec.page_id + " is finalized and no longer accepts corrections");
  }
  auto [updated, samples] = apply_edits(doc, rec);
  rec.id = next_correction_;
  if (rec.timestamp.empty()) rec.timestamp = utc_now();

  OrderedJson entry;
  entry["type"] = "correction";
  entry["correction"] = correction_to_json(rec);
  entry["samples"] = samples_to_json(samples);
  commit(std::move(entry));

  ++next_correction_;
  doc = std::move(updated);
  staged_.push_back({rec, std::move(samples)});
  CorrectionAck ack{rec.id, rec.page_id, doc.status, staged_.size()};
  maybe_snapshot();
  return ack;
}

void DocumentService::finalize_document(const std::string& page_id) {
  std::unique_lock lock(state_mutex_);
  DocumentRecord& doc = find_locked(page_id);
  if (doc.status == DocumentStatus::finalized) return;
  OrderedJson entry;
  entry["type"] = "finalize";
  entry["page_id"] = page_id;
  commit(std::move(entry));
  doc.status = DocumentStatus::finalized;
  maybe_snapshot();
}

std::size_t DocumentService::staged_count() const {
  std::shared_lock lock(state_mutex_);
  return staged_.size();
}

std::vector<CorrectionRecord> DocumentService::staged_corrections() const {
  std::shared_lock lock(state_mutex_);
  std::vector<CorrectionRecord> out;
  for (const StagedCorrection& s : staged_) out.push_back(s.record);
  return out;
}

TrainingJob DocumentService::trigger_incremental_training(const inc::TrainConfig& cfg) {
  cfg.validate();
  std::lock_guard training_lock(training_mutex_);

  std::vector<StagedCorrection> batch;
  TrainingJob job;
  {
    std::shared_lock lock(state_mutex_);
    batch = staged_;
    job.base_version = model_version_;
    job.model_version = model_version_;
    if (batch.empty()) return job;
    job.id = next_job_;
  }

  std::vector<inc::LabeledSample> feedback;
  for (const StagedCorrection& s : batch) {
    job.consumed.push_back(s.record.id);
    feedback.insert(feedback.end(), s.samples.begin(), s.samples.end());
  }
  job.status = JobStatus::completed;
  job.samples = feedback.size();
  if (feedback.empty()) {
    job.warnings.emplace_back("consumed corrections carried no labeled samples; model unchanged");
  } else {
    inc::TrainConfig tc = cfg;
    tc.seed = mix_seed(cfg.seed, job.id);
    const auto frozen = load_model(job.base_version);
    auto result = inc::incremental_train(frozen, base_set(), feedback, tc);
    job.model_version = job.base_version + 1;
    job.warnings = std::move(result.warnings);
    job.curve = std::move(result.curve);
    write_file_atomic(model_path(job.model_version), dump_json(inc::model_to_json(result.model)));
  }

  std::unique_lock lock(state_mutex_);
  OrderedJson entry;
  entry["type"] = "train_job";
  entry["job"] = job_to_json(job);
  commit(std::move(entry));
  const std::set<std::uint64_t> consumed(job.consumed.begin(), job.consumed.end());
  std::erase_if(staged_, [&](const StagedCorrection& s) { return consumed.contains(s.record.id); });
  model_version_ = job.model_version;
  ++next_job_;
  jobs_[job.id] = job;
  maybe_snapshot();
  return job;
}

TrainingJob DocumentService::get_job(std::uint64_t id) const {
  std::shared_lock lock(state_mutex_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) throw NotFoundError("unknown training job " + std::to_string(id));
  return it->second;
}

int DocumentService::current_model_version() const {
  std::shared_lock lock(state_mutex_);
  return model_version_;
}

std::string DocumentService::model_text(int version) const {
  const auto path = model_path(version);
  if (version < 0 || version > current_model_version() || !std::filesystem::exists(path)) {
    throw NotFoundError("unknown model version " + std::to_string(version));
  }
  return read_file(path);
}

inc::GroupedClassifier DocumentService::load_model(int version) const {
  return inc::model_from_json(nlohmann::json::parse(model_text(version)));
}

OrderedJson DocumentService::model_json(int version) const {
  return OrderedJson::parse(model_text(version));
}

}  // namespace docingest::service
