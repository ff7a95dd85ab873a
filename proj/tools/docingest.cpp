#include <CLI11.hpp>
#include <pthread.h>

#include <algorithm>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "docingest/errors.hpp"
#include "docingest/evaluation.hpp"
#include "docingest/incremental/experiment.hpp"
#include "docingest/incremental/snapshot.hpp"
#include "docingest/json_io.hpp"
#include "docingest/layout_json.hpp"
#include "docingest/pipeline.hpp"
#include "docingest/service/document_service.hpp"
#include "docingest/service/http_api.hpp"
#include "docingest/synthdoc.hpp"

namespace fs = std::filesystem;
using namespace docingest;

namespace {

constexpr const char* kTruthSuffix = ".truth.json";
constexpr const char* kProposalsSuffix = ".proposals.json";
constexpr const char* kLayoutSuffix = ".layout.json";

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw std::runtime_error(path.string() + " is not valid JSON");
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text << '\n';
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text << '\n';
  } else {
    write_text(out, text);
  }
}

bool has_suffix(const std::string& name, const std::string& suffix) {
  return name.size() >= suffix.size() &&
         name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// A single file, or every file in a directory ending in `suffix` (sorted).
std::vector<fs::path> inputs(const fs::path& path, const std::string& suffix) {
  if (!fs::is_directory(path)) {
    if (!fs::exists(path)) throw std::runtime_error(path.string() + " does not exist");
    return {path};
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_regular_file() && has_suffix(entry.path().filename().string(), suffix)) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("no *" + suffix + " files in " + path.string());
  return files;
}

int run_synth(std::size_t count, std::uint64_t seed, const std::string& config,
              const fs::path& out) {
  synth::GenConfig gen = config.empty() ? synth::GenConfig{}
                                        : synth::gen_config_from_json(read_json(config));
  gen.seed = seed;
  const auto docs = synth::generate_corpus(gen, count);
  for (const auto& doc : docs) {
    write_text(out / (doc.page_id + kTruthSuffix), dump_json(synth::truth_to_json(doc)));
  }
  std::cerr << "wrote " << docs.size() << " documents to " << out << '\n';
  return 0;
}

int run_simulate(const fs::path& truth, std::uint64_t seed, const std::string& config,
                 const std::map<std::string, double>& overrides, const fs::path& out) {
  synth::NoiseConfig noise = config.empty() ? synth::NoiseConfig::typical()
                                            : synth::noise_config_from_json(read_json(config));
  for (const auto& [key, value] : overrides) {
    if (key == "fragmentation") noise.fragmentation_rate = value;
    if (key == "jitter") noise.jitter_sigma = value;
    if (key == "spurious") noise.spurious_rate = value;
    if (key == "drop") noise.drop_rate = value;
    if (key == "duplicate") noise.duplicate_rate = value;
  }
  noise.seed = seed;
  std::size_t n = 0;
  for (const fs::path& file : inputs(truth, kTruthSuffix)) {
    const auto doc = synth::truth_from_json(read_json(file));
    ProposalPage page{doc.page_id, synth::simulate_proposals(doc, noise)};
    write_text(out / (doc.page_id + kProposalsSuffix), dump_json(proposals_to_json(page)));
    ++n;
  }
  std::cerr << "wrote proposals for " << n << " documents to " << out << '\n';
  return 0;
}

int run_structure(const fs::path& proposals, bool no_combine, double row_h, double col_w,
                  const fs::path& out) {
  PipelineConfig cfg;
  cfg.combine_regions = !no_combine;
  if (row_h > 0.0 || col_w > 0.0) cfg.table = TableConfig::fixed(row_h, col_w);
  cfg.table.validate();
  std::size_t n = 0;
  for (const fs::path& file : inputs(proposals, kProposalsSuffix)) {
    const ProposalPage page = parse_proposals(read_json(file));
    std::string id = page.page_id;
    if (id.empty()) {
      id = file.filename().string();
      if (has_suffix(id, kProposalsSuffix)) id.resize(id.size() - std::string(kProposalsSuffix).size());
    }
    const DocumentLayout layout = structure_page(id, page.regions, cfg);
    write_text(out / (id + kLayoutSuffix), serialize_layout(layout));
    ++n;
  }
  std::cerr << "structured " << n << " pages into " << out << '\n';
  return 0;
}

int run_eval(const fs::path& truth, const fs::path& layouts, double iou, const std::string& out) {
  eval::EvalConfig cfg{iou};
  cfg.validate();
  std::map<std::string, DocumentLayout> predicted;
  for (const fs::path& file : inputs(layouts, kLayoutSuffix)) {
    DocumentLayout layout = parse_layout(read_json(file));
    predicted.emplace(layout.page_id, std::move(layout));
  }
  eval::DetectionReport total;
  std::size_t pages = 0;
  std::vector<std::string> missing;
  for (const fs::path& file : inputs(truth, kTruthSuffix)) {
    const auto doc = synth::truth_from_json(read_json(file));
    const auto it = predicted.find(doc.page_id);
    const auto truth_regions = eval::evaluation_regions(doc.as_layout());
    std::vector<Region> predictions;
    if (it == predicted.end()) {
      missing.push_back(doc.page_id);
    } else {
      predictions = eval::evaluation_regions(it->second);
    }
    total += eval::match_detections(predictions, truth_regions, cfg);
    ++pages;
  }
  OrderedJson j;
  j["pages"] = pages;
  j["iou_threshold"] = iou;
  j["missing_layouts"] = missing;
  j["report"] = eval::report_to_json(total);
  emit(out, dump_json(j));
  return 0;
}

int run_train_incr(const std::string& experiment, double alpha, double p, double lambda, int m,
                   const std::string& head, std::optional<std::uint64_t> seed, int max_steps,
                   const std::string& model_out, const std::string& out) {
  using namespace docingest::incremental;
  OrderedJson j;
  j["experiment"] = experiment;
  if (experiment == "forgetting") {
    ForgettingConfig cfg;
    if (seed) cfg.seed = *seed;
    j["seed"] = cfg.seed;
    cfg.arch.head = parse_head_type(head);
    cfg.arch.margin = m;
    cfg.update.distillation_weight = alpha;
    cfg.update.new_data_rate = p;
    cfg.update.task_weight = lambda;
    if (max_steps > 0) cfg.update.max_steps = max_steps;
    const ForgettingReport report = run_forgetting_experiment(cfg);
    j["config"] = {{"alpha", alpha}, {"p", p}, {"lambda", lambda}, {"m", m}, {"head", head}};
    j["metrics"] = forgetting_report_to_json(report);
    if (!model_out.empty()) write_text(model_out, dump_json(model_to_json(report.incremental.model)));
  } else {
    HeadComparisonConfig cfg;
    cfg.arch.margin = m;
    cfg.train.task_weight = lambda;
    if (max_steps > 0) cfg.train.max_steps = max_steps;
    if (seed) {
      cfg.seeds.clear();
      for (std::uint64_t s = 0; s < 5; ++s) cfg.seeds.push_back(mix_seed(*seed, s));
    }
    j["seeds"] = cfg.seeds;
    j["config"] = {{"lambda", lambda}, {"m", m}};
    j["metrics"] = head_comparison_to_json(run_head_comparison(cfg));
  }
  emit(out, dump_json(j));
  return 0;
}

int run_serve(const std::string& host, int port, const std::string& data_dir) {
  // SIGINT/SIGTERM are taken by a waiter thread that stops the server.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

  service::ServiceConfig cfg = service::ServiceConfig::from_env();
  if (!data_dir.empty()) cfg.data_dir = data_dir;
  service::DocumentService svc(cfg);
  service::HttpApi api(svc);
  const int bound = api.bind(host, port);
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&stop_signals, &sig);
    api.stop();
  });
  std::cerr << "serving on http://" << host << ':' << bound << " (data in " << cfg.data_dir
            << ")" << std::endl;
  api.serve();
  // Wake the waiter if the server stopped for another reason.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Document layout ingestion: synthetic data, structuring, evaluation, "
               "incremental training and the review service"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string out;

  auto* synth_cmd = app.add_subcommand("synth", "Generate a ground-truth corpus");
  std::size_t count = 10;
  std::string gen_config;
  synth_cmd->add_option("--count,-n", count, "Number of documents")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", seed, "Corpus seed");
  synth_cmd->add_option("--config", gen_config, "Generator settings (JSON)");
  synth_cmd->add_option("--out,-o", out, "Output directory")->required();

  auto* sim_cmd = app.add_subcommand("simulate", "Detector proposals from ground truth");
  std::string truth;
  std::string noise_config;
  std::map<std::string, double> overrides;
  sim_cmd->add_option("--truth,-t", truth, "Truth file or directory")->required();
  sim_cmd->add_option("--seed", seed, "Noise seed");
  sim_cmd->add_option("--config", noise_config, "Noise settings (JSON); default: typical");
  for (const char* key : {"fragmentation", "jitter", "spurious", "drop", "duplicate"}) {
    sim_cmd->add_option_function<double>(
        std::string("--") + key, [&overrides, key](double v) { overrides[key] = v; },
        std::string("Override the ") + key + " setting");
  }
  sim_cmd->add_option("--out,-o", out, "Output directory")->required();

  auto* struct_cmd = app.add_subcommand("structure", "Run the pipeline on proposals");
  std::string proposals;
  bool no_combine = false;
  double row_h = 0.0;
  double col_w = 0.0;
  struct_cmd->add_option("--proposals,-p", proposals, "Proposals file or directory")->required();
  struct_cmd->add_flag("--no-combine", no_combine, "Plain NMS instead of region combination");
  struct_cmd->add_option("--row-threshold", row_h, "Fixed row gap threshold H");
  struct_cmd->add_option("--col-threshold", col_w, "Fixed column gap threshold W");
  struct_cmd->add_option("--out,-o", out, "Output directory")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Detection report of layouts against truth");
  std::string layouts;
  double iou = 0.85;
  eval_cmd->add_option("--truth,-t", truth, "Truth file or directory")->required();
  eval_cmd->add_option("--layouts,-l", layouts, "Layout file or directory")->required();
  eval_cmd->add_option("--iou", iou, "IoU threshold for a match");
  eval_cmd->add_option("--out,-o", out, "Report file (default stdout)");

  auto* train_cmd = app.add_subcommand("train-incr", "Incremental-learning experiments");
  std::string experiment = "forgetting";
  double alpha = 1.0;
  double p = 0.25;
  double lambda = 1.0;
  int m = 4;
  std::string head = "softmax";
  int max_steps = 0;
  std::string model_out;
  train_cmd->add_option("--experiment", experiment, "forgetting or heads")
      ->check(CLI::IsMember({"forgetting", "heads"}));
  train_cmd->add_option("--alpha", alpha, "Distillation weight");
  train_cmd->add_option("--p", p, "Share of feedback samples per batch");
  train_cmd->add_option("--lambda", lambda, "Classification loss weight");
  train_cmd->add_option("--m", m, "Angular margin of the a_softmax head")->check(CLI::PositiveNumber);
  train_cmd->add_option("--head", head, "softmax or a_softmax (forgetting experiment)")
      ->check(CLI::IsMember({"softmax", "a_softmax"}));
  std::optional<std::uint64_t> train_seed;
  train_cmd->add_option("--seed", train_seed,
                        "Experiment seed (default: the experiment's reference seeds)");
  train_cmd->add_option("--max-steps", max_steps, "Override the update step budget");
  train_cmd->add_option("--model-out", model_out, "Write the updated model snapshot here");
  train_cmd->add_option("--out,-o", out, "Metrics file (default stdout)");

  auto* serve_cmd = app.add_subcommand("serve", "Start the HTTP service");
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data_dir;
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--port", port, "Port (0 picks a free one)");
  serve_cmd->add_option("--data-dir", data_dir,
                        std::string("Data directory (default $") + service::kDataDirEnv + ")");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) return run_synth(count, seed, gen_config, out);
    if (*sim_cmd) return run_simulate(truth, seed, noise_config, overrides, out);
    if (*struct_cmd) return run_structure(proposals, no_combine, row_h, col_w, out);
    if (*eval_cmd) return run_eval(truth, layouts, iou, out);
    if (*train_cmd) {
      return run_train_incr(experiment, alpha, p, lambda, m, head, train_seed, max_steps,
                            model_out, out);
    }
    if (*serve_cmd) return run_serve(host, port, data_dir);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
