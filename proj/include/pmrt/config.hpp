#ifndef PMRT_CONFIG_HPP
#define PMRT_CONFIG_HPP

#include <cstdint>
#include <string>

#include "pmrt/evaluation.hpp"
#include "pmrt/network.hpp"
#include "pmrt/training.hpp"

namespace pmrt {

// Everything a run needs, loadable from a key=value file and serializable
// back so every output directory carries the exact configuration that
// produced it. load_run_config(resolved_config_text(c)) reproduces c.
struct RunConfig {
  // Corpus.
  std::string raw_dir;        // preprocess input directory
  std::string manifest;       // corpus manifest consumed by train/anonymize
  bool synthetic = false;     // generate the synthetic corpus instead
  int synth_actors = 4;
  int synth_actions = 6;
  int synth_cameras = 3;
  uint64_t synth_seed = 5;

  std::string out_root = "out";  // PMRT_OUT_ROOT overrides

  NetworkConfig net;   // y_action / y_actor of 0 resolve from the corpus
  TrainConfig train;   // includes LossWeights and the StagePlan
  std::string plan = "full";  // full | desk, then train.plan epochs override

  // Dummy policy for anonymization.
  std::string policy_mode = "constant";  // constant | random
  std::string policy_constant_ref;
  uint64_t policy_seed = 11;
  std::string policy_pool;  // train | eval; empty = per-policy default

  AttackTrainConfig attack;

  void validate() const;
};

// key=value per line, # comments and blank lines ignored. Unknown keys and
// unparsable values throw InvalidConfig.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config_text(const std::string& text);

// Applies one key=value assignment (the file format's line grammar).
void set_config_key(RunConfig& cfg, const std::string& key,
                    const std::string& value);

// Canonical serialization: every key exactly once, fixed order.
std::string resolved_config_text(const RunConfig& cfg);

// Writes resolved_config_text to dir/resolved_config.txt.
void write_resolved_config(const RunConfig& cfg, const std::string& dir);

// Environment overrides (PMRT_OUT_ROOT), applied after file parsing.
void apply_env_overrides(RunConfig& cfg);

}  // namespace pmrt

#endif  // PMRT_CONFIG_HPP
