#pragma once

#include "greet/ops.hpp"
#include "greet/tape.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace greet {

struct LinearLayer {
  Matrix weight;  // in x out
  Matrix bias;    // 1 x out
};

// Plain MLP: ReLU between layers, linear last layer.
struct Mlp {
  std::vector<LinearLayer> layers;
  int in_dim() const { return static_cast<int>(layers.front().weight.rows()); }
  int out_dim() const { return static_cast<int>(layers.back().weight.cols()); }
};

// Weights uniform in +-sqrt(6/(fan_in+fan_out)), biases zero.
Mlp make_mlp(const std::vector<int>& dims, std::mt19937_64& rng);

// Tape-side registration of an MLP's tensors.
struct MlpVars {
  std::vector<std::pair<Var, Var>> layers;  // (weight, bias)
};
MlpVars register_mlp(Tape& tape, const Mlp& mlp, bool requires_grad);
Var mlp_forward(Var x, const MlpVars& mlp);

struct ModelDims {
  int d_f = 0;   // feature dim
  int d_s = 16;  // structural encoding dim
  int d_i = 128; // discriminator intermediate dim
  int d_r = 128; // fused representation dim (d_r/2 per channel)
  int d_p = 128; // projection dim
  int l_mlp = 2; // encoder MLP depth
  int l_p = 1;   // projection head depth
};

// All trainable tensors: discriminator MLPs, per-channel encoder MLPs,
// per-channel projection heads.
struct ModelParams {
  Mlp disc_mlp1;  // d_f+d_s -> d_i; ReLU applied on its output (hidden layer)
  Mlp disc_mlp2;  // 2*d_i -> 1
  Mlp enc_hm;     // d_f -> d_r/2
  Mlp enc_ht;     // d_f -> d_r/2
  Mlp proj_hm;    // d_r/2 -> d_p
  Mlp proj_ht;    // d_r/2 -> d_p

  std::vector<std::pair<std::string, Matrix*>> named_tensors();
  std::vector<std::pair<std::string, const Matrix*>> named_tensors() const;
  std::vector<Matrix*> discriminator_tensors();
  std::vector<Matrix*> encoder_tensors();  // encoders + projection heads
};

ModelParams init_params(const ModelDims& dims, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState like(const std::vector<Matrix*>& params);
};

// Standard Adam; weight_decay adds lambda*param to the gradient before the
// moment updates (plain L2, inert at lambda = 0).
void adam_step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads,
               AdamState& state, double lr, double weight_decay);

// ---------------------------------------------------------------------------
// Finite-difference gradient checking (64-bit only).

struct GradCheckFailure {
  int param = 0;
  int row = 0;
  int col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
};

struct GradCheckReport {
  int checked = 0;
  double max_rel_err = 0.0;
  std::vector<GradCheckFailure> failures;
  bool ok() const { return failures.empty(); }
};

// `build` constructs the scalar loss on a fresh tape from leaves registered
// in the given order. Central differences with step h; a coordinate fails
// when |analytic - numeric| / max(1, |numeric|) > tol.
using LossBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;
GradCheckReport grad_check(const LossBuilder& build, const std::vector<Matrix>& params,
                           double h = 1e-4, double tol = 1e-4);

// ---------------------------------------------------------------------------
// Tensor container file: 8-byte magic, little-endian u64 header length, JSON
// header naming tensors (name/rows/cols/offset/dtype) plus free-form "meta",
// then the raw payload. dtype f32 is the interchange form for parameter
// exports; f64 preserves training state exactly.

void save_tensor_file(const std::string& path,
                      const std::vector<std::pair<std::string, const Matrix*>>& tensors,
                      const nlohmann::json& meta, bool as_f32);

struct TensorFile {
  std::map<std::string, Matrix> tensors;
  std::string meta_json;  // serialized "meta" object
};
TensorFile load_tensor_file(const std::string& path);

}  // namespace greet
