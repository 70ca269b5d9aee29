#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "saido/numcore.hpp"

// Scene library with dynamic expansion: nearest-prototype identification with
// a fixed novelty pseudo-logit, running-mean prototypes, and prompt
// composition. The library only ever grows; records keep insertion order.

namespace saido {

struct SceneRecord {
  std::string name;
  Vec prototype;          // running mean of backbone features; empty until first sample
  std::size_t count = 0;  // samples absorbed
  std::size_t expert_id = 0;

  bool initialized() const { return count > 0; }
};

struct SceneConfidence {
  Vec p;                    // length N+1; last slot is novelty
  std::size_t argmax_index; // 1-based, N+1 means novel
};

class SceneLibrary {
 public:
  SceneLibrary(double novelty_tau, double temperature);

  // Confidence over the N known scenes plus the novelty slot. Distance
  // logits -d_i/temperature compete against the fixed pseudo-logit
  // -tau/temperature; uninitialized (pre-seeded) records score zero.
  SceneConfidence identify(const Vec& feature) const;

  // Adds a new scene bound to a fresh expert id. Throws on duplicate names.
  std::size_t register_scene(const std::string& name, const Vec& feature);

  // Pre-seeds a record whose prototype is filled by the first sample carrying
  // a matching token.
  std::size_t preseed_scene(const std::string& name);

  struct Assignment {
    std::size_t scene_index;  // 0-based
    std::size_t expert_id;
    bool created;             // a new scene was registered
  };

  // Routes a training sample: identify, then either absorb the feature into
  // the winning prototype (running mean) or expand the library. A nonempty
  // token initializes a matching pre-seeded record, and names novel scenes.
  Assignment assign_and_update(const Vec& feature, const std::string& token = "");

  // Routing only; never mutates the library. Returns the expert id of the
  // winning known scene, or the nearest scene when the novelty slot wins
  // (evaluation never expands the library).
  std::size_t route_frozen(const Vec& feature) const;

  std::size_t size() const { return scenes_.size(); }
  bool empty() const { return scenes_.empty(); }
  const SceneRecord& record(std::size_t i) const { return scenes_.at(i); }
  const std::vector<SceneRecord>& records() const { return scenes_; }
  double novelty_tau() const { return novelty_tau_; }
  double temperature() const { return temperature_; }
  std::size_t next_expert_id() const { return next_expert_id_; }
  int find(const std::string& name) const;  // -1 if absent

  void save(std::ostream& os) const;
  static SceneLibrary load(std::istream& is);

 private:
  std::vector<SceneRecord> scenes_;
  double novelty_tau_;
  double temperature_;
  std::size_t next_expert_id_ = 0;
};

// "{content} | scene: {name} | real/fake"
std::string compose_prompt(const std::string& content, const std::string& scene_name,
                           int label);

// Scene names used to preseed the library when preseed_scenes is enabled.
const std::vector<std::string>& default_scene_names();

}  // namespace saido
