#include "saido/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace saido {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void validate_config(const RunConfig& cfg) {
  auto bad = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  if (cfg.d_raw < 1 || cfg.d_feat < 1) bad("dimensions must be >= 1");
  if (cfg.rank < 1) bad("rank must be >= 1");
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) bad("alpha outside [0,1]");
  if (cfg.e < 0.0) bad("e must be >= 0");
  if (cfg.lambda < 0.0) bad("lambda must be >= 0");
  if (!(cfg.lr > 0.0)) bad("lr must be > 0");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) bad("momentum outside [0,1)");
  if (cfg.epochs < 1) bad("epochs must be >= 1");
  if (cfg.batch_size < 1) bad("batch_size must be >= 1");
  if (!(cfg.novelty_tau > 0.0)) bad("novelty_tau must be > 0");
  if (!(cfg.temperature > 0.0)) bad("temperature must be > 0");
  std::vector<std::string> names;
  for (const auto& t : cfg.protocol.tasks) names.push_back(t.name);
  for (const auto& t : cfg.protocol.holdout) names.push_back(t.name);
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end())
    bad("task names must be unique");
  for (const auto& t : cfg.protocol.tasks) validate_task_spec(t);
  for (const auto& t : cfg.protocol.holdout) validate_task_spec(t);
}

namespace {

void require_keys(const json& obj, const std::vector<std::string>& keys,
                  const std::string& where) {
  if (!obj.is_object()) throw std::invalid_argument("config: " + where + " must be an object");
  for (const auto& k : keys)
    if (!obj.contains(k))
      throw std::invalid_argument("config: missing key '" + k + "' in " + where);
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (std::find(keys.begin(), keys.end(), it.key()) == keys.end())
      throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + where);
}

Vec vec_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw std::invalid_argument("config: " + where + " must be an array");
  Vec v;
  for (const auto& e : j) v.push_back(e.get<double>());
  return v;
}

TaskSpec task_from_json(const json& j, const std::string& where) {
  require_keys(j, {"name", "n_train", "n_test", "fake_shift", "fake_scale", "scenes", "seed"},
               where);
  TaskSpec t;
  t.name = j.at("name").get<std::string>();
  t.n_train = j.at("n_train").get<std::size_t>();
  t.n_test = j.at("n_test").get<std::size_t>();
  t.fake_shift = vec_from_json(j.at("fake_shift"), where + ".fake_shift");
  t.fake_scale = j.at("fake_scale").get<double>();
  t.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& sj : j.at("scenes")) {
    require_keys(sj, {"token", "centroid", "std"}, where + ".scenes[]");
    SceneSpec sc;
    sc.token = sj.at("token").get<std::string>();
    sc.centroid = vec_from_json(sj.at("centroid"), where + ".scenes[].centroid");
    sc.stddev = sj.at("std").get<double>();
    t.scenes.push_back(std::move(sc));
  }
  return t;
}

ordered_json task_to_json(const TaskSpec& t) {
  ordered_json j;
  j["name"] = t.name;
  j["n_train"] = t.n_train;
  j["n_test"] = t.n_test;
  j["fake_shift"] = t.fake_shift;
  j["fake_scale"] = t.fake_scale;
  j["scenes"] = ordered_json::array();
  for (const auto& sc : t.scenes) {
    ordered_json sj;
    sj["token"] = sc.token;
    sj["centroid"] = sc.centroid;
    sj["std"] = sc.stddev;
    j["scenes"].push_back(sj);
  }
  j["seed"] = t.seed;
  return j;
}

const std::vector<std::string> kConfigKeys = {
    "seed",       "d_raw",       "d_feat",          "rank",    "alpha",   "e",
    "lambda",     "lr",          "momentum",        "epochs",  "batch_size",
    "novelty_tau", "temperature", "preseed_scenes", "idom_on", "saem_on", "protocol"};

}  // namespace

RunConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& ex) {
    throw std::invalid_argument(std::string("config: JSON parse error: ") + ex.what());
  }
  require_keys(j, kConfigKeys, "config");
  RunConfig cfg;
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.d_raw = j.at("d_raw").get<std::size_t>();
  cfg.d_feat = j.at("d_feat").get<std::size_t>();
  cfg.rank = j.at("rank").get<std::size_t>();
  cfg.alpha = j.at("alpha").get<double>();
  cfg.e = j.at("e").get<double>();
  cfg.lambda = j.at("lambda").get<double>();
  cfg.lr = j.at("lr").get<double>();
  cfg.momentum = j.at("momentum").get<double>();
  cfg.epochs = j.at("epochs").get<std::size_t>();
  cfg.batch_size = j.at("batch_size").get<std::size_t>();
  cfg.novelty_tau = j.at("novelty_tau").get<double>();
  cfg.temperature = j.at("temperature").get<double>();
  cfg.preseed_scenes = j.at("preseed_scenes").get<bool>();
  cfg.idom_on = j.at("idom_on").get<bool>();
  cfg.saem_on = j.at("saem_on").get<bool>();
  const json& pj = j.at("protocol");
  require_keys(pj, {"tasks", "holdout"}, "protocol");
  std::size_t i = 0;
  for (const auto& tj : pj.at("tasks"))
    cfg.protocol.tasks.push_back(task_from_json(tj, "tasks[" + std::to_string(i++) + "]"));
  i = 0;
  for (const auto& tj : pj.at("holdout"))
    cfg.protocol.holdout.push_back(task_from_json(tj, "holdout[" + std::to_string(i++) + "]"));
  validate_config(cfg);
  return cfg;
}

std::string config_to_json_text(const RunConfig& cfg) {
  ordered_json j;
  j["seed"] = cfg.seed;
  j["d_raw"] = cfg.d_raw;
  j["d_feat"] = cfg.d_feat;
  j["rank"] = cfg.rank;
  j["alpha"] = cfg.alpha;
  j["e"] = cfg.e;
  j["lambda"] = cfg.lambda;
  j["lr"] = cfg.lr;
  j["momentum"] = cfg.momentum;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["novelty_tau"] = cfg.novelty_tau;
  j["temperature"] = cfg.temperature;
  j["preseed_scenes"] = cfg.preseed_scenes;
  j["idom_on"] = cfg.idom_on;
  j["saem_on"] = cfg.saem_on;
  j["protocol"]["tasks"] = ordered_json::array();
  for (const auto& t : cfg.protocol.tasks) j["protocol"]["tasks"].push_back(task_to_json(t));
  j["protocol"]["holdout"] = ordered_json::array();
  for (const auto& t : cfg.protocol.holdout) j["protocol"]["holdout"].push_back(task_to_json(t));
  return j.dump(2);
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return config_from_json_text(ss.str());
}

TrainedState::TrainedState(const RunConfig& c)
    : cfg(c),
      backbone(c.d_raw, c.d_feat, c.seed),
      head(c.d_feat, SeededRng(c.seed).stream("head")),
      library(c.novelty_tau, c.temperature) {}

void TrainedState::ensure_expert(std::size_t expert_id) {
  while (experts.size() <= expert_id) {
    std::size_t id = experts.size();
    experts.emplace_back(cfg.rank, cfg.d_feat, SeededRng(cfg.seed).stream("adapter", id));
    states.emplace_back(experts.back(), head);
  }
}

namespace {

template <typename T>
void deterministic_shuffle(std::vector<T>& v, SeededRng::Stream s) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(s.next_u64() % i);
    std::swap(v[i - 1], v[j]);
  }
}

class PromptCache {
 public:
  explicit PromptCache(std::size_t d_feat) : d_feat_(d_feat) {}
  const Vec& get(const std::string& text) {
    auto it = cache_.find(text);
    if (it != cache_.end()) return it->second;
    return cache_.emplace(text, PromptEmbedding::from_text(text, d_feat_).u).first->second;
  }

 private:
  std::size_t d_feat_;
  std::map<std::string, Vec> cache_;
};

std::size_t frozen_expert_for(const TrainedState& st, const Vec& feature) {
  if (!st.cfg.saem_on) return 0;
  return st.library.route_frozen(feature);
}

}  // namespace

double evaluate_accuracy(const TrainedState& state, const std::vector<LabeledSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("evaluate_accuracy: empty test set");
  std::size_t correct = 0;
  for (const auto& s : samples) {
    Vec h = state.backbone.features(s.features);
    std::size_t eid = frozen_expert_for(state, h);
    ForwardResult fr = forward(s.features, state.experts.at(eid), state.backbone, state.head);
    if (fr.prediction == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

struct RunOutput {
  RunReport report;
  TrainedState state;
};

static RunOutput run_protocol_full(const RunConfig& cfg) {
  validate_config(cfg);
  auto t0 = std::chrono::steady_clock::now();

  RunOutput out{RunReport{}, TrainedState(cfg)};
  TrainedState& st = out.state;
  RunReport& rep = out.report;
  rep.config_json = config_to_json_text(cfg);

  SeededRng rng(cfg.seed);
  PromptCache prompts(cfg.d_feat);
  IdomConfig icfg{cfg.alpha, cfg.e};

  if (cfg.preseed_scenes)
    for (const auto& name : default_scene_names()) st.ensure_expert(st.library.preseed_scene(name));
  if (!cfg.saem_on) st.ensure_expert(0);

  std::vector<std::vector<LabeledSample>> test_sets;

  for (std::size_t k = 0; k < cfg.protocol.tasks.size(); ++k) {
    const TaskSpec& spec = cfg.protocol.tasks[k];
    rep.task_names.push_back(spec.name);
    TaskData td = generate_task(spec);
    test_sets.push_back(std::move(td.test));
    const auto& train = td.train;

    // stream routing (prototypes update during training only)
    std::vector<std::size_t> expert_of(train.size());
    std::vector<std::string> scene_of(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (cfg.saem_on) {
        Vec h = st.backbone.features(train[i].features);
        auto a = st.library.assign_and_update(h, train[i].scene);
        st.ensure_expert(a.expert_id);
        expert_of[i] = a.expert_id;
        scene_of[i] = st.library.record(a.scene_index).name;
      } else {
        expert_of[i] = 0;
        scene_of[i] = "default";
      }
    }

    std::map<std::size_t, std::vector<std::size_t>> by_expert;
    for (std::size_t i = 0; i < train.size(); ++i) by_expert[expert_of[i]].push_back(i);

    for (auto& [eid, idxs] : by_expert) {
      SgdMomentum opt(cfg.lr, cfg.momentum);  // momentum resets at task boundaries
      for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<std::size_t> order = idxs;
        deterministic_shuffle(
            order, rng.stream("shuffle/" + spec.name + "/" + std::to_string(eid), epoch));
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
          std::size_t stop = std::min(order.size(), start + cfg.batch_size);
          Batch batch;
          for (std::size_t t = start; t < stop; ++t) {
            const LabeledSample& s = train[order[t]];
            batch.x_raw.push_back(s.features);
            batch.y.push_back(s.label);
            batch.prompt_u.push_back(
                prompts.get(compose_prompt(s.scene, scene_of[order[t]], s.label)));
          }
          LossBreakdown lb;
          GradientSet g = gradients(batch, st.experts[eid], st.backbone, st.head, cfg.lambda, &lb);
          if (!std::isfinite(lb.total))
            throw std::runtime_error("non-finite loss in task '" + spec.name + "', expert " +
                                     std::to_string(eid) + ", epoch " + std::to_string(epoch));
          if (cfg.idom_on && epoch + 1 == cfg.epochs) st.states[eid].record_epoch_gradient(g);
          GradientSet w = cfg.idom_on ? st.states[eid].transform(g, icfg) : g;
          opt.step(st.experts[eid], st.head, w);
        }
      }
    }

    if (cfg.idom_on) {
      // Fisher importance at the task optimum
      for (std::size_t i = 0; i < train.size(); ++i) {
        GradientSet g = loglik_gradient(train[i].features, train[i].label,
                                        st.experts[expert_of[i]], st.backbone, st.head);
        st.states[expert_of[i]].accumulate_fisher(g, train[i].label, scene_of[i]);
      }
      for (auto& [eid, idxs] : by_expert)
        if (st.states[eid].finalize_task(cfg.alpha))
          std::cerr << "[warn] degenerate (all-zero) importance for expert " << eid
                    << " after task '" << spec.name << "'\n";
    }

    for (std::size_t j = 0; j <= k; ++j)
      rep.matrix.record(k + 1, j + 1, evaluate_accuracy(st, test_sets[j]));

    SessionRow row;
    row.session = k + 1;
    row.aa = rep.matrix.aa(k + 1);
    if (k + 1 >= 2) row.af = rep.matrix.af(k + 1);
    row.new_acc = rep.matrix.new_acc(k + 1);
    row.library_size = st.library.size();
    rep.sessions.push_back(row);
  }

  st.trained = true;
  rep.wall_clock_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

RunReport run_protocol(const RunConfig& cfg, TrainedState* state_out) {
  RunOutput out = run_protocol_full(cfg);
  if (state_out) *state_out = std::move(out.state);
  return std::move(out.report);
}

std::vector<OpenWorldRow> run_openworld(const RunConfig& cfg, const TrainedState& state) {
  if (!state.trained) throw std::runtime_error("run_openworld: state is untrained");
  std::vector<OpenWorldRow> rows;
  for (const auto& spec : cfg.protocol.holdout) {
    TaskData td = generate_task(spec);
    rows.push_back({spec.name, evaluate_accuracy(state, td.test)});
  }
  return rows;
}

std::string report_to_json_text(const RunReport& report) {
  ordered_json j;
  j["task_names"] = report.task_names;
  j["matrix"] = ordered_json::array();
  for (std::size_t k = 1; k <= report.matrix.sessions(); ++k) {
    ordered_json row = ordered_json::array();
    for (std::size_t t = 1; t <= k; ++t) row.push_back(report.matrix.at(k, t));
    j["matrix"].push_back(row);
  }
  j["sessions"] = ordered_json::array();
  for (const auto& s : report.sessions) {
    ordered_json sj;
    sj["session"] = s.session;
    sj["aa"] = s.aa;
    if (s.af)
      sj["af"] = *s.af;
    else
      sj["af"] = nullptr;
    sj["new_acc"] = s.new_acc;
    sj["library_size"] = s.library_size;
    j["sessions"].push_back(sj);
  }
  j["openworld"] = ordered_json::array();
  for (const auto& r : report.openworld) {
    ordered_json rj;
    rj["task"] = r.task;
    rj["accuracy"] = r.accuracy;
    j["openworld"].push_back(rj);
  }
  j["config"] = ordered_json::parse(report.config_json);
  j["wall_clock_sec"] = report.wall_clock_sec;
  return j.dump(2);
}

RunReport report_from_json_text(const std::string& text) {
  ordered_json j = ordered_json::parse(text);
  RunReport rep;
  rep.task_names = j.at("task_names").get<std::vector<std::string>>();
  std::size_t k = 1;
  for (const auto& row : j.at("matrix")) {
    std::size_t t = 1;
    for (const auto& v : row) rep.matrix.record(k, t++, v.get<double>());
    ++k;
  }
  for (const auto& sj : j.at("sessions")) {
    SessionRow s;
    s.session = sj.at("session").get<std::size_t>();
    s.aa = sj.at("aa").get<double>();
    if (!sj.at("af").is_null()) s.af = sj.at("af").get<double>();
    s.new_acc = sj.at("new_acc").get<double>();
    s.library_size = sj.at("library_size").get<std::size_t>();
    rep.sessions.push_back(s);
  }
  for (const auto& rj : j.at("openworld"))
    rep.openworld.push_back({rj.at("task").get<std::string>(), rj.at("accuracy").get<double>()});
  rep.config_json = ordered_json(j.at("config")).dump(2);
  rep.wall_clock_sec = j.at("wall_clock_sec").get<double>();
  return rep;
}

void emit_report(const RunReport& report, const std::string& out_dir) {
  fs::create_directories(out_dir);
  {
    std::ofstream os(fs::path(out_dir) / "report.json");
    if (!os) throw std::runtime_error("cannot write report.json in " + out_dir);
    os << report_to_json_text(report) << "\n";
  }
  {
    std::ofstream os(fs::path(out_dir) / "matrix.csv");
    if (!os) throw std::runtime_error("cannot write matrix.csv in " + out_dir);
    os << "session,task,accuracy\n";
    for (std::size_t k = 1; k <= report.matrix.sessions(); ++k)
      for (std::size_t t = 1; t <= k; ++t)
        os << k << "," << t << "," << format_double(report.matrix.at(k, t)) << "\n";
  }
  {
    std::ofstream os(fs::path(out_dir) / "sessions.csv");
    if (!os) throw std::runtime_error("cannot write sessions.csv in " + out_dir);
    os << "session,aa,af,new_acc,library_size\n";
    for (const auto& s : report.sessions) {
      os << s.session << "," << format_double(s.aa) << ",";
      if (s.af) os << format_double(*s.af);
      os << "," << format_double(s.new_acc) << "," << s.library_size << "\n";
    }
  }
}

namespace {

void write_block(std::ostream& os, const std::string& tag, const std::vector<double>& v) {
  os << tag;
  for (double x : v) os << " " << format_double(x);
  os << "\n";
}

std::vector<double> read_block(std::istream& is, const std::string& tag, std::size_t expect) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("checkpoint: truncated at " + tag);
  std::istringstream ls(line);
  std::string got;
  ls >> got;
  if (got != tag) throw std::runtime_error("checkpoint: expected '" + tag + "', got '" + got + "'");
  std::vector<double> v;
  std::string tok;
  while (ls >> tok) v.push_back(parse_double(tok));
  if (v.size() != expect)
    throw std::runtime_error("checkpoint: " + tag + " length mismatch");
  return v;
}

}  // namespace

void save_checkpoint(const TrainedState& state, const std::string& dir) {
  fs::create_directories(dir);
  {
    std::ofstream os(fs::path(dir) / "config.json");
    if (!os) throw std::runtime_error("cannot write config.json in " + dir);
    os << config_to_json_text(state.cfg) << "\n";
  }
  {
    std::ofstream os(fs::path(dir) / "scenes.txt");
    if (!os) throw std::runtime_error("cannot write scenes.txt in " + dir);
    state.library.save(os);
  }
  std::ofstream os(fs::path(dir) / "model.ckpt");
  if (!os) throw std::runtime_error("cannot write model.ckpt in " + dir);
  os << "saido-checkpoint v1\n";
  os << "backbone_seed " << state.backbone.seed() << " trained " << (state.trained ? 1 : 0)
     << "\n";
  write_block(os, "head_W", state.head.W.data);
  write_block(os, "head_b", state.head.b);
  os << "experts " << state.experts.size() << "\n";
  for (std::size_t i = 0; i < state.experts.size(); ++i) {
    os << "expert " << i << "\n";
    write_block(os, "A", state.experts[i].A.data);
    write_block(os, "B", state.experts[i].B.data);
    state.states[i].save(os);
  }
}

TrainedState load_checkpoint(const std::string& dir) {
  RunConfig cfg = load_config_file((fs::path(dir) / "config.json").string());
  TrainedState st(cfg);
  {
    std::ifstream is(fs::path(dir) / "scenes.txt");
    if (!is) throw std::runtime_error("checkpoint: missing scenes.txt in " + dir);
    st.library = SceneLibrary::load(is);
  }
  std::ifstream is(fs::path(dir) / "model.ckpt");
  if (!is) throw std::runtime_error("checkpoint: missing model.ckpt in " + dir);
  std::string line;
  std::getline(is, line);
  if (line != "saido-checkpoint v1") throw std::runtime_error("checkpoint: bad magic");
  std::getline(is, line);
  {
    std::istringstream ls(line);
    std::string k1, k2;
    std::uint64_t seed = 0;
    int trained = 0;
    ls >> k1 >> seed >> k2 >> trained;
    if (k1 != "backbone_seed" || k2 != "trained") throw std::runtime_error("checkpoint: bad header");
    if (seed != cfg.seed) throw std::runtime_error("checkpoint: backbone seed/config mismatch");
    st.trained = trained != 0;
  }
  st.head.W.data = read_block(is, "head_W", st.head.W.size());
  st.head.b = read_block(is, "head_b", st.head.b.size());
  std::getline(is, line);
  std::size_t n_experts = 0;
  {
    std::istringstream ls(line);
    std::string k;
    ls >> k >> n_experts;
    if (k != "experts") throw std::runtime_error("checkpoint: bad experts header");
  }
  if (n_experts > 0) st.ensure_expert(n_experts - 1);
  for (std::size_t i = 0; i < n_experts; ++i) {
    std::getline(is, line);
    std::istringstream ls(line);
    std::string k;
    std::size_t id = 0;
    ls >> k >> id;
    if (k != "expert" || id != i) throw std::runtime_error("checkpoint: bad expert header");
    st.experts[i].A = Mat(cfg.rank, cfg.d_feat);
    st.experts[i].B = Mat(cfg.d_feat, cfg.rank);
    st.experts[i].A.data = read_block(is, "A", st.experts[i].A.size());
    st.experts[i].B.data = read_block(is, "B", st.experts[i].B.size());
    st.states[i] = ImportanceState::load(is);
  }
  return st;
}

RunConfig make_reference_config(std::uint64_t seed) {
  RunConfig cfg;
  cfg.seed = seed;
  cfg.d_raw = 32;
  cfg.d_feat = 16;
  cfg.rank = 4;
  cfg.alpha = 0.9;
  cfg.e = 5.0;
  cfg.lr = 0.003;
  cfg.epochs = 5;
  cfg.novelty_tau = 14.0;
  cfg.batch_size = 64;

  auto axis = [&](std::size_t i, double scale) {
    Vec v(cfg.d_raw, 0.0);
    v[i] = scale;
    return v;
  };
  SceneSpec urban{"Urban", axis(0, 24.0), 1.0};
  SceneSpec nature{"Nature", axis(1, 24.0), 1.0};
  SceneSpec portrait{"Portrait", axis(2, 24.0), 1.0};

  // forgery signatures: each generator marks a fresh raw dimension, so a
  // sequentially fine-tuned detector lets old signature weights decay while
  // the joint problem stays linearly separable
  std::vector<TaskSpec> tasks(4);
  const char* names[4] = {"gen-a", "gen-b", "gen-c", "gen-d"};
  for (std::size_t i = 0; i < 4; ++i) {
    TaskSpec& t = tasks[i];
    t.name = names[i];
    t.n_train = 1000;
    t.n_test = 250;
    t.fake_scale = 10.0;
    t.fake_shift = axis(8 + i, 1.0);
    t.scenes = {urban, nature};
    if (i >= 2) t.scenes.push_back(portrait);  // third scene appears at task 3
    t.seed = seed * 1000 + i + 1;
  }
  cfg.protocol.tasks = std::move(tasks);

  // open-world holdouts: one in-distribution twin, one null-signal task
  TaskSpec twin = cfg.protocol.tasks[3];
  twin.name = "gen-d-twin";
  twin.seed = seed * 1000 + 77;
  TaskSpec null_task = cfg.protocol.tasks[3];
  null_task.name = "gen-null";
  null_task.fake_scale = 0.0;
  null_task.seed = seed * 1000 + 78;
  cfg.protocol.holdout = {twin, null_task};
  return cfg;
}

RunConfig make_scene_shift_config(std::uint64_t seed) {
  RunConfig cfg = make_reference_config(seed);
  cfg.protocol.holdout.clear();
  auto axis = [&](std::size_t i, double scale) {
    Vec v(cfg.d_raw, 0.0);
    v[i] = scale;
    return v;
  };
  SceneSpec urban{"Urban", axis(0, 20.0), 1.0};
  SceneSpec nature{"Nature", axis(1, 20.0), 1.0};
  SceneSpec portrait{"Portrait", axis(2, 20.0), 1.0};

  // scene membership shifts across tasks and the forgery signature flips
  // sign between the scene groups; a single expert cannot fit both signs
  std::vector<TaskSpec> tasks(4);
  const char* names[4] = {"shift-a", "shift-b", "shift-c", "shift-d"};
  for (std::size_t i = 0; i < 4; ++i) {
    TaskSpec& t = tasks[i];
    t.name = names[i];
    t.n_train = 1000;
    t.n_test = 250;
    t.fake_scale = 4.0;
    t.seed = seed * 2000 + i + 1;
  }
  tasks[0].scenes = {urban, nature};
  tasks[0].fake_shift = axis(8, 1.0);
  tasks[1].scenes = {portrait};
  tasks[1].fake_shift = axis(8, -1.0);
  tasks[2].scenes = {urban, nature};
  tasks[2].fake_shift = axis(9, 1.0);
  tasks[3].scenes = {portrait};
  tasks[3].fake_shift = axis(9, -1.0);
  cfg.protocol.tasks = std::move(tasks);
  return cfg;
}

}  // namespace saido
