#pragma once

#include <string>
#include <vector>

#include "saido/numcore.hpp"

// Synthetic continual-task generation and CSV feature ingestion. Generation
// is a pure function of the spec: real samples cluster around shared scene
// centroids, fakes are shifted along a task-specific signature direction.

namespace saido {

struct LabeledSample {
  Vec features;       // raw space, length d_raw
  int label = 0;      // 0 real, 1 fake
  std::string scene;  // scene token
  std::string task;   // task token
};

struct SceneSpec {
  std::string token;
  Vec centroid;  // raw space
  double stddev = 1.0;
};

struct TaskSpec {
  std::string name;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  Vec fake_shift;           // forgery signature direction, raw space
  double fake_scale = 0.0;
  std::vector<SceneSpec> scenes;
  std::uint64_t seed = 0;
};

struct ProtocolSpec {
  std::vector<TaskSpec> tasks;    // continual sequence
  std::vector<TaskSpec> holdout;  // open-world evaluation
};

struct TaskData {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> test;
};

// Deterministic per-spec generation; train/test draw from disjoint
// substreams. Classes are balanced and every scene appears in both classes
// of the train split.
TaskData generate_task(const TaskSpec& spec);

// CSV schema: header `label,scene,task,f0,...,f{d-1}`. Malformed rows are
// rejected with their line number.
std::vector<LabeledSample> load_feature_file(const std::string& path);
void save_feature_file(const std::string& path, const std::vector<LabeledSample>& samples);

// Adds i.i.d. N(0, noise_std^2) to every feature; labels and scenes unchanged.
std::vector<LabeledSample> perturb_features(const std::vector<LabeledSample>& samples,
                                            double noise_std, std::uint64_t seed);

void validate_task_spec(const TaskSpec& spec);

}  // namespace saido
