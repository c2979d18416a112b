#pragma once

#include "greet/graph.hpp"
#include "greet/trainer.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace greet {

// Dataset directory layout: edges.tsv (two tab-separated integer columns per
// line), features.tsv (one row of tab-separated decimals per node),
// labels.tsv (optional, one integer per line), splits.json (optional object
// with "train"/"val"/"test" arrays).
Graph load_graph(const std::string& dir);
void save_graph(const std::string& dir, const Graph& g);

// Planted-partition generator with class-mean Gaussian features. Class means
// are mutually orthogonal unit vectors scaled by mu_sep; classes balanced.
struct SynthSpec {
  int n = 1000;
  int classes = 4;
  double p_in = 0.01;
  double p_out = 0.01;
  double mu_sep = 1.0;
  double sigma = 0.5;
  int d_f = 16;
  std::uint64_t seed = 0;
  // Stratified split fractions (remainder becomes test).
  double train_frac = 0.48;
  double val_frac = 0.32;
};

Graph synth_planted(const SynthSpec& spec);
void save_synth_spec(const std::string& dir, const SynthSpec& spec);

// Config round-trip. Unknown keys and type mismatches are rejected; omitted
// fixed hyperparameters keep their defaults.
TrainConfig load_config(const std::string& path);
TrainConfig parse_config_json(const std::string& json_text);
std::string config_to_json(const TrainConfig& cfg);
void save_config(const std::string& path, const TrainConfig& cfg);

// Named presets covering the benchmark hyperparameter grid rows plus a
// "synth" preset for the generator's graphs.
TrainConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

// Apply "key=value" overrides (CLI --set) on top of a config.
void apply_override(TrainConfig& cfg, const std::string& key_equals_value);

}  // namespace greet
