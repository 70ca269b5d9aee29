#include "saido/data.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace saido {

void validate_task_spec(const TaskSpec& spec) {
  if (spec.name.empty()) throw std::invalid_argument("task spec: empty name");
  if (spec.n_train < 2 || spec.n_test < 2)
    throw std::invalid_argument("task spec '" + spec.name + "': splits need >= 2 samples");
  if (spec.scenes.empty()) throw std::invalid_argument("task spec '" + spec.name + "': no scenes");
  const std::size_t d = spec.fake_shift.size();
  for (const auto& sc : spec.scenes) {
    if (sc.token.empty()) throw std::invalid_argument("task spec: empty scene token");
    if (!(sc.stddev > 0.0))
      throw std::invalid_argument("task spec: scene std must be > 0 (" + sc.token + ")");
    if (sc.centroid.size() != d)
      throw std::invalid_argument("task spec '" + spec.name + "': centroid/shift dim mismatch");
  }
  if (spec.n_train < 2 * spec.scenes.size())
    throw std::invalid_argument("task spec '" + spec.name +
                                "': n_train too small to cover every scene in both classes");
}

namespace {

std::vector<LabeledSample> generate_split(const TaskSpec& spec, const char* tag,
                                          std::size_t n) {
  SeededRng rng(spec.seed);
  const std::size_t d = spec.fake_shift.size();
  const std::size_t n_scenes = spec.scenes.size();
  std::vector<LabeledSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto s = rng.stream(std::string(tag) + "/" + spec.name, i);
    const int label = static_cast<int>(i % 2);
    const SceneSpec& scene = spec.scenes[(i / 2) % n_scenes];
    LabeledSample sample;
    sample.label = label;
    sample.scene = scene.token;
    sample.task = spec.name;
    sample.features.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      double v = scene.centroid[j] + scene.stddev * s.gaussian();
      if (label == 1) v += spec.fake_scale * spec.fake_shift[j];
      sample.features[j] = v;
    }
    out.push_back(std::move(sample));
  }
  return out;
}

}  // namespace

TaskData generate_task(const TaskSpec& spec) {
  validate_task_spec(spec);
  TaskData data;
  data.train = generate_split(spec, "train", spec.n_train);
  data.test = generate_split(spec, "test", spec.n_test);
  return data;
}

void save_feature_file(const std::string& path, const std::vector<LabeledSample>& samples) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  const std::size_t d = samples.empty() ? 0 : samples.front().features.size();
  os << "label,scene,task";
  for (std::size_t j = 0; j < d; ++j) os << ",f" << j;
  os << "\n";
  for (const auto& s : samples) {
    os << s.label << "," << s.scene << "," << s.task;
    for (double v : s.features) os << "," << format_double(v);
    os << "\n";
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::vector<LabeledSample> load_feature_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error(path + ": missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 4 || header[0] != "label" || header[1] != "scene" || header[2] != "task")
    throw std::runtime_error(path + ": bad header (expected label,scene,task,f0,...)");
  for (std::size_t j = 3; j < header.size(); ++j)
    if (header[j] != "f" + std::to_string(j - 3))
      throw std::runtime_error(path + ": bad header feature column '" + header[j] + "'");
  const std::size_t d = header.size() - 3;

  std::vector<LabeledSample> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    auto fail = [&](const std::string& why) {
      throw std::runtime_error(path + ": line " + std::to_string(lineno) + ": " + why);
    };
    if (cells.size() != header.size()) fail("expected " + std::to_string(header.size()) +
                                            " fields, got " + std::to_string(cells.size()));
    LabeledSample s;
    if (cells[0] == "0")
      s.label = 0;
    else if (cells[0] == "1")
      s.label = 1;
    else
      fail("label must be 0 or 1, got '" + cells[0] + "'");
    if (cells[1].empty()) fail("empty scene token");
    s.scene = cells[1];
    s.task = cells[2];
    s.features.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      try {
        s.features[j] = parse_double(cells[3 + j]);
      } catch (const std::exception&) {
        fail("non-numeric feature '" + cells[3 + j] + "' in column f" + std::to_string(j));
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<LabeledSample> perturb_features(const std::vector<LabeledSample>& samples,
                                            double noise_std, std::uint64_t seed) {
  if (noise_std < 0.0) throw std::invalid_argument("perturb_features: negative noise_std");
  std::vector<LabeledSample> out = samples;
  if (noise_std == 0.0) return out;
  SeededRng rng(seed);
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto s = rng.stream("perturb", i);
    for (double& v : out[i].features) v += noise_std * s.gaussian();
  }
  return out;
}

}  // namespace saido
