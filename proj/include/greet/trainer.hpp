#pragma once

#include "greet/encoder.hpp"
#include "greet/losses.hpp"
#include "greet/nn.hpp"
#include "greet/preprocess.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

namespace greet {

// Every tunable of a run. Serialized as a flat JSON object with these exact
// field names (see dataio).
struct TrainConfig {
  int t_o = 400;
  int t_i = 2;
  double mu_grl = 1e-3;
  double mu_disc = 1e-3;
  double alpha = 0.5;
  int l = 2;      // propagation depth of both encoders
  int l_p = 2;    // projection head depth
  int l_mlp = 2;  // encoder MLP depth
  double gamma_hm = 0.5;
  double gamma_ht = 0.5;
  int k = 20;
  int b = 0;  // contrastive batch size; 0 = full node set
  double p_f_hm = 0.1;
  double p_f_ht = 0.1;
  double p_e_hm = 0.1;
  double p_e_ht = 0.1;
  double tau_g = 1.0;
  double tau_c = 0.2;
  double lambda = 0.0;
  int d_s = 16;
  int d_i = 128;
  int d_r = 128;
  int d_p = 128;
  std::uint64_t seed = 0;
  std::string data;
  std::string out;
  std::string knn_mode = "auto";  // auto | exact | approx
  int b_k = 512;
  // Ablation: hold every edge weight at this constant and skip discriminator
  // updates. NaN = learned weights (default).
  double freeze_w = std::numeric_limits<double>::quiet_NaN();

  bool full_batch() const { return b <= 0; }
  bool frozen_w() const { return !std::isnan(freeze_w); }
  ModelDims model_dims(int d_f) const {
    return ModelDims{d_f, d_s, d_i, d_r, d_p, l_mlp, l_p};
  }
  void validate() const;
};

struct TrainOptions {
  std::string cache_dir;          // preprocess cache location ("" = none)
  std::string resume_checkpoint;  // resume from this checkpoint ("" = fresh)
};

struct TrainResult {
  ModelParams params;
  DualRepresentation repr;  // final noise-free forward
  Vector theta;             // final per-edge logits (m)
  Vector w;                 // final deterministic weights (m)
  std::vector<std::string> log_lines;
  StructuralEncoding structenc;
  NeighborSets neighbors;
};

// Alternating optimization: T_i encoder/head updates on the contrastive loss
// per outer iteration, then one discriminator update on the ranking loss,
// for T_o outer iterations. Deterministic given the seed. When cfg.out is
// set, appends train_log.jsonl lines and writes checkpoint.bin there.
TrainResult train(const Graph& g, const TrainConfig& cfg, const TrainOptions& opts = {});

struct ExportResult {
  DualRepresentation repr;
  Vector theta;
  Vector w;
};

// One forward pass without augmentation. Deterministic mode fixes the Gumbel
// noise at 0.5 (w = sigmoid(theta/tau_g)); sampled mode draws per-edge noise
// from the given seed.
ExportResult export_representations(const Graph& g, const TrainConfig& cfg,
                                    const ModelParams& params, const StructuralEncoding& enc,
                                    bool deterministic, std::uint64_t sample_seed = 0);

// repr.tsv + metadata sidecar (seed, config hash, channel split point).
void write_representation(const std::string& dir, const DualRepresentation& repr,
                          const TrainConfig& cfg);
// edgeweights.tsv: src, dst, theta, w_hat per undirected edge.
void write_edge_weights(const std::string& dir, const Graph& g, const Vector& theta,
                        const Vector& w);

// Full training state: parameters, both Adam states, progress counters, seed
// and config hash. Stored as f64 so resuming replays the run bit for bit.
struct Checkpoint {
  ModelParams params;
  AdamState adam_encoder;
  AdamState adam_discriminator;
  int outer_done = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path, const TrainConfig& cfg);

std::string config_hash(const TrainConfig& cfg);

}  // namespace greet
