#pragma once

#include <optional>
#include <string>
#include <vector>

#include "saido/data.hpp"
#include "saido/idom.hpp"
#include "saido/metrics.hpp"
#include "saido/model.hpp"
#include "saido/scene.hpp"

// Protocol runner: streams tasks through SAEM routing, trains routed experts
// with IDOM-transformed gradients, evaluates the growing accuracy matrix, and
// writes reproducible reports.

namespace saido {

struct RunConfig {
  std::uint64_t seed = 1;
  std::size_t d_raw = 32;
  std::size_t d_feat = 16;
  std::size_t rank = 4;
  double alpha = 0.75;
  double e = 1.0;
  double lambda = 1.0;
  double lr = 0.01;
  double momentum = 0.9;
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  double novelty_tau = 10.0;
  double temperature = 1.0;
  bool preseed_scenes = false;
  bool idom_on = true;
  bool saem_on = true;
  ProtocolSpec protocol;
};

void validate_config(const RunConfig& cfg);

// Strict JSON round-trip: unknown or missing keys are errors.
RunConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const RunConfig& cfg);
RunConfig load_config_file(const std::string& path);

struct SessionRow {
  std::size_t session = 0;  // 1-based
  double aa = 0.0;
  std::optional<double> af;  // absent for session 1
  double new_acc = 0.0;      // running mean of the diagonal
  std::size_t library_size = 0;
};

struct OpenWorldRow {
  std::string task;
  double accuracy = 0.0;
};

struct RunReport {
  std::vector<std::string> task_names;
  AccuracyMatrix matrix;
  std::vector<SessionRow> sessions;
  std::vector<OpenWorldRow> openworld;
  std::string config_json;  // config echo
  double wall_clock_sec = 0.0;
};

std::string report_to_json_text(const RunReport& report);
RunReport report_from_json_text(const std::string& text);

// Everything the continual run trains: frozen backbone, shared head, expert
// registry with per-expert importance state, and the scene library.
struct TrainedState {
  explicit TrainedState(const RunConfig& cfg);

  RunConfig cfg;
  FrozenBackbone backbone;
  ClassifierHead head;
  std::vector<LoraAdapter> experts;
  std::vector<ImportanceState> states;
  SceneLibrary library;
  bool trained = false;

  // Grows the registry so expert_id is valid; new adapters are zero-init.
  void ensure_expert(std::size_t expert_id);
};

RunReport run_protocol(const RunConfig& cfg, TrainedState* state_out = nullptr);

std::vector<OpenWorldRow> run_openworld(const RunConfig& cfg, const TrainedState& state);

double evaluate_accuracy(const TrainedState& state, const std::vector<LabeledSample>& samples);

// report.json + matrix.csv + sessions.csv
void emit_report(const RunReport& report, const std::string& out_dir);

// model.ckpt (backbone seed, head, adapters, importance states) + scenes.txt
// + config.json; round-trips bit-exactly.
void save_checkpoint(const TrainedState& state, const std::string& dir);
TrainedState load_checkpoint(const std::string& dir);

// The desk-scale reference benchmark: 4 tasks, 2 scenes growing to 3,
// conflicting forgery signatures across tasks, 1k train / 250 test pairs.
RunConfig make_reference_config(std::uint64_t seed);

// Variant with 3 well-separated scenes whose task membership shifts across
// tasks; exercises the per-scene expert split.
RunConfig make_scene_shift_config(std::uint64_t seed);

}  // namespace saido
