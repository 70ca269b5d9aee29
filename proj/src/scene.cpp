#include "saido/scene.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace saido {

SceneLibrary::SceneLibrary(double novelty_tau, double temperature)
    : novelty_tau_(novelty_tau), temperature_(temperature) {
  if (!(novelty_tau > 0.0)) throw std::invalid_argument("novelty_tau must be > 0");
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
}

int SceneLibrary::find(const std::string& name) const {
  for (std::size_t i = 0; i < scenes_.size(); ++i)
    if (scenes_[i].name == name) return static_cast<int>(i);
  return -1;
}

SceneConfidence SceneLibrary::identify(const Vec& feature) const {
  check_finite(feature, "scene feature");
  const std::size_t n = scenes_.size();
  SceneConfidence out;
  out.p.assign(n + 1, 0.0);
  if (n == 0) {
    out.p[0] = 1.0;
    out.argmax_index = 1;
    return out;
  }
  const double neg_inf = -std::numeric_limits<double>::infinity();
  Vec logits(n + 1, neg_inf);
  for (std::size_t i = 0; i < n; ++i) {
    if (!scenes_[i].initialized()) continue;  // pre-seeded, no prototype yet
    Vec diff = feature;
    for (std::size_t j = 0; j < diff.size(); ++j) diff[j] -= scenes_[i].prototype[j];
    logits[i] = -norm2(diff) / temperature_;
  }
  logits[n] = -novelty_tau_ / temperature_;
  double mx = neg_inf;
  for (double l : logits) mx = std::max(mx, l);
  double sum = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    out.p[i] = std::isinf(logits[i]) ? 0.0 : std::exp(logits[i] - mx);
    sum += out.p[i];
  }
  std::size_t best = 0;
  for (std::size_t i = 0; i <= n; ++i) {
    out.p[i] /= sum;
    if (out.p[i] > out.p[best]) best = i;  // ties keep the lowest index
  }
  out.argmax_index = best + 1;
  return out;
}

std::size_t SceneLibrary::register_scene(const std::string& name, const Vec& feature) {
  if (name.empty()) throw std::invalid_argument("scene name must be nonempty");
  if (find(name) >= 0) throw std::invalid_argument("duplicate scene name: " + name);
  check_finite(feature, "scene feature");
  SceneRecord rec;
  rec.name = name;
  rec.prototype = feature;
  rec.count = 1;
  rec.expert_id = next_expert_id_++;
  scenes_.push_back(std::move(rec));
  return scenes_.back().expert_id;
}

std::size_t SceneLibrary::preseed_scene(const std::string& name) {
  if (name.empty()) throw std::invalid_argument("scene name must be nonempty");
  if (find(name) >= 0) throw std::invalid_argument("duplicate scene name: " + name);
  SceneRecord rec;
  rec.name = name;
  rec.expert_id = next_expert_id_++;
  scenes_.push_back(std::move(rec));
  return scenes_.back().expert_id;
}

SceneLibrary::Assignment SceneLibrary::assign_and_update(const Vec& feature,
                                                         const std::string& token) {
  if (!token.empty()) {
    int idx = find(token);
    if (idx >= 0 && !scenes_[idx].initialized()) {
      scenes_[idx].prototype = feature;
      scenes_[idx].count = 1;
      return {static_cast<std::size_t>(idx), scenes_[idx].expert_id, false};
    }
  }
  SceneConfidence conf = identify(feature);
  if (conf.argmax_index <= scenes_.size()) {
    SceneRecord& rec = scenes_[conf.argmax_index - 1];
    double c = static_cast<double>(rec.count);
    for (std::size_t j = 0; j < feature.size(); ++j)
      rec.prototype[j] = (c * rec.prototype[j] + feature[j]) / (c + 1.0);
    rec.count += 1;
    return {conf.argmax_index - 1, rec.expert_id, false};
  }
  std::string name = token;
  if (name.empty() || find(name) >= 0) {
    do {
      name = "scene_" + std::to_string(scenes_.size() + 1);
    } while (find(name) >= 0 && (name += "_", true));
  }
  std::size_t expert_id = register_scene(name, feature);
  return {scenes_.size() - 1, expert_id, true};
}

std::size_t SceneLibrary::route_frozen(const Vec& feature) const {
  if (scenes_.empty()) throw std::runtime_error("route_frozen: empty scene library");
  SceneConfidence conf = identify(feature);
  if (conf.argmax_index <= scenes_.size())
    return scenes_[conf.argmax_index - 1].expert_id;
  // novelty wins: fall back to the nearest initialized scene
  std::size_t best = scenes_.size();
  double best_p = -1.0;
  for (std::size_t i = 0; i < scenes_.size(); ++i) {
    if (!scenes_[i].initialized()) continue;
    if (conf.p[i] > best_p) {
      best_p = conf.p[i];
      best = i;
    }
  }
  if (best == scenes_.size()) throw std::runtime_error("route_frozen: no trained scene");
  return scenes_[best].expert_id;
}

void SceneLibrary::save(std::ostream& os) const {
  os << "# saido-scenes novelty_tau " << format_double(novelty_tau_) << " temperature "
     << format_double(temperature_) << " next_expert_id " << next_expert_id_ << "\n";
  for (const auto& rec : scenes_) {
    os << rec.name << " " << rec.count << " " << rec.expert_id;
    for (double v : rec.prototype) os << " " << format_double(v);
    os << "\n";
  }
}

SceneLibrary SceneLibrary::load(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("scene library: empty file");
  std::istringstream hdr(line);
  std::string hash, tag, k1, k2, k3;
  std::string tau_s, temp_s;
  std::size_t next_id = 0;
  hdr >> hash >> tag >> k1 >> tau_s >> k2 >> temp_s >> k3 >> next_id;
  if (hash != "#" || tag != "saido-scenes" || k1 != "novelty_tau" || k2 != "temperature" ||
      k3 != "next_expert_id")
    throw std::runtime_error("scene library: bad header");
  SceneLibrary lib(parse_double(tau_s), parse_double(temp_s));
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    SceneRecord rec;
    if (!(ls >> rec.name >> rec.count >> rec.expert_id))
      throw std::runtime_error("scene library: bad record: " + line);
    std::string tok;
    while (ls >> tok) rec.prototype.push_back(parse_double(tok));
    lib.scenes_.push_back(std::move(rec));
  }
  lib.next_expert_id_ = next_id;
  return lib;
}

std::string compose_prompt(const std::string& content, const std::string& scene_name,
                           int label) {
  if (scene_name.empty()) throw std::invalid_argument("compose_prompt: empty scene name");
  return content + " | scene: " + scene_name + " | " + (label == 0 ? "real" : "fake");
}

const std::vector<std::string>& default_scene_names() {
  static const std::vector<std::string> names = {"Activity", "Animal", "Building", "Food",
                                                 "Nature",   "Object", "Person",   "Vehicle"};
  return names;
}

}  // namespace saido
