#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "saido/harness.hpp"

namespace fs = std::filesystem;
using namespace saido;

namespace {

int cmd_gen_data(const std::string& config_path, const std::string& out_dir) {
  RunConfig cfg = load_config_file(config_path);
  fs::create_directories(out_dir);
  for (const auto& spec : cfg.protocol.tasks) {
    TaskData td = generate_task(spec);
    save_feature_file((fs::path(out_dir) / (spec.name + "_train.csv")).string(), td.train);
    save_feature_file((fs::path(out_dir) / (spec.name + "_test.csv")).string(), td.test);
  }
  for (const auto& spec : cfg.protocol.holdout) {
    TaskData td = generate_task(spec);
    save_feature_file((fs::path(out_dir) / (spec.name + "_test.csv")).string(), td.test);
  }
  std::cout << "wrote task CSVs to " << out_dir << "\n";
  return 0;
}

int cmd_train(RunConfig cfg, const std::string& out_dir) {
  TrainedState state(cfg);
  RunReport report = run_protocol(cfg, &state);
  report.openworld = cfg.protocol.holdout.empty() ? report.openworld : run_openworld(cfg, state);
  emit_report(report, out_dir);
  save_checkpoint(state, (fs::path(out_dir) / "checkpoint").string());
  std::cout << "final AA " << format_double(report.sessions.back().aa) << ", New.ACC "
            << format_double(report.sessions.back().new_acc) << ", sessions "
            << report.sessions.size() << ", scenes " << report.sessions.back().library_size
            << "\n";
  return 0;
}

int cmd_eval(const std::string& model_dir, const std::string& config_path,
             const std::string& out_dir) {
  TrainedState state = load_checkpoint(model_dir);
  RunConfig cfg = load_config_file(config_path);
  auto rows = run_openworld(cfg, state);
  fs::create_directories(out_dir);
  std::ofstream os(fs::path(out_dir) / "openworld.csv");
  if (!os) throw std::runtime_error("cannot write openworld.csv in " + out_dir);
  os << "task,accuracy\n";
  for (const auto& r : rows) os << r.task << "," << format_double(r.accuracy) << "\n";
  for (const auto& r : rows)
    std::cout << std::left << std::setw(20) << r.task << " " << format_double(r.accuracy) << "\n";
  return 0;
}

int cmd_init_config(const std::string& out_path, bool scene_shift, std::uint64_t seed) {
  RunConfig cfg = scene_shift ? make_scene_shift_config(seed) : make_reference_config(seed);
  std::ofstream os(out_path);
  if (!os) throw std::runtime_error("cannot write " + out_path);
  os << config_to_json_text(cfg);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_report(const std::string& in_dir) {
  std::ifstream is(fs::path(in_dir) / "report.json");
  if (!is) throw std::runtime_error("no report.json in " + in_dir);
  std::stringstream ss;
  ss << is.rdbuf();
  RunReport rep = report_from_json_text(ss.str());

  std::cout << "session  task         aa       af       new_acc  scenes\n";
  for (const auto& s : rep.sessions) {
    std::ostringstream af;
    if (s.af)
      af << std::fixed << std::setprecision(4) << *s.af;
    else
      af << "-";
    std::cout << std::left << std::setw(8) << s.session << " " << std::setw(12)
              << rep.task_names[s.session - 1] << " " << std::fixed << std::setprecision(4)
              << s.aa << "   " << std::setw(8) << af.str() << " " << std::setprecision(4)
              << s.new_acc << "   " << s.library_size << "\n";
  }
  if (!rep.openworld.empty()) {
    std::cout << "\nopen-world:\n";
    for (const auto& r : rep.openworld)
      std::cout << "  " << std::left << std::setw(20) << r.task << " " << std::fixed
                << std::setprecision(4) << r.accuracy << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SAIDO continual-learning detection harness"};
  app.require_subcommand(1);

  std::string config_path, out_dir, model_dir, in_dir;
  long long seed_override = -1;
  double alpha_override = -1.0, e_override = -1.0, lr_override = -1.0;
  long long epochs_override = -1;
  bool no_idom = false, no_saem = false;

  auto* gen = app.add_subcommand("gen-data", "materialize synthetic tasks to CSV");
  gen->add_option("--config", config_path)->required();
  gen->add_option("--out", out_dir)->required();

  auto* train = app.add_subcommand("train", "run the continual protocol");
  train->add_option("--config", config_path)->required();
  train->add_option("--out", out_dir)->required();
  train->add_option("--seed", seed_override);
  train->add_option("--alpha", alpha_override);
  train->add_option("--e", e_override);
  train->add_option("--lr", lr_override);
  train->add_option("--epochs", epochs_override);
  train->add_flag("--no-idom", no_idom);
  train->add_flag("--no-saem", no_saem);

  auto* eval = app.add_subcommand("eval", "open-world evaluation of a trained model");
  eval->add_option("--model", model_dir)->required();
  eval->add_option("--config", config_path)->required();
  eval->add_option("--out", out_dir)->required();

  auto* rep = app.add_subcommand("report", "print a human-readable summary");
  rep->add_option("--in", in_dir)->required();

  std::string init_out = "config.json";
  long long init_seed = 1;
  bool init_shift = false;
  auto* init = app.add_subcommand("init-config", "write a built-in benchmark config as JSON");
  init->add_option("--out", init_out);
  init->add_option("--seed", init_seed);
  init->add_flag("--scene-shift", init_shift);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(config_path, out_dir);
    if (train->parsed()) {
      RunConfig cfg = load_config_file(config_path);
      if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
      if (alpha_override >= 0.0) cfg.alpha = alpha_override;
      if (e_override >= 0.0) cfg.e = e_override;
      if (lr_override >= 0.0) cfg.lr = lr_override;
      if (epochs_override >= 0) cfg.epochs = static_cast<std::size_t>(epochs_override);
      if (no_idom) cfg.idom_on = false;
      if (no_saem) cfg.saem_on = false;
      validate_config(cfg);
      return cmd_train(cfg, out_dir);
    }
    if (eval->parsed()) return cmd_eval(model_dir, config_path, out_dir);
    if (rep->parsed()) return cmd_report(in_dir);
    if (init->parsed())
      return cmd_init_config(init_out, init_shift, static_cast<std::uint64_t>(init_seed));
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
