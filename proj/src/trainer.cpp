#include "greet/trainer.hpp"

#include "greet/dataio.hpp"
#include "greet/evaluate.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace greet {

namespace {

constexpr int kExactKnnLimit = 20000;

std::vector<Var> flatten(const std::vector<const MlpVars*>& mlps) {
  std::vector<Var> out;
  for (const MlpVars* m : mlps) {
    for (const auto& [w, b] : m->layers) {
      out.push_back(w);
      out.push_back(b);
    }
  }
  return out;
}

struct TrainContext {
  const Graph& g;
  const TrainConfig& cfg;
  const StructuralEncoding& enc;
  const NeighborSets& neighbors;
};

struct EdgeWeightVars {
  Var theta;
  Var w;
  DiscriminatorVars disc;  // empty MlpVars in frozen mode
};

// theta and w for one step; frozen mode yields constants.
EdgeWeightVars compute_edge_weights(Tape& tape, const TrainContext& ctx,
                                    const ModelParams& params, bool disc_requires_grad,
                                    const Vector& delta) {
  if (ctx.cfg.frozen_w()) {
    Var theta = tape.constant(Matrix::Zero(ctx.g.m, 1));
    Var w = tape.constant(Matrix::Constant(ctx.g.m, 1, ctx.cfg.freeze_w));
    return {theta, w, {}};
  }
  Var x = tape.constant(ctx.g.features);
  Var s = tape.constant(ctx.enc.S);
  DiscriminatorVars disc = register_discriminator(tape, params, disc_requires_grad);
  Var theta = edge_logits(x, s, ctx.g, disc);
  Var w = gumbel_weights(theta, delta, ctx.cfg.tau_g);
  return {theta, w, disc};
}

struct ChannelVars {
  MlpVars enc_hm, enc_ht, proj_hm, proj_ht;
};

ChannelVars register_channels(Tape& tape, const ModelParams& params, bool requires_grad) {
  return ChannelVars{register_mlp(tape, params.enc_hm, requires_grad),
                     register_mlp(tape, params.enc_ht, requires_grad),
                     register_mlp(tape, params.proj_hm, requires_grad),
                     register_mlp(tape, params.proj_ht, requires_grad)};
}

struct EncodeOut {
  Var h_hm;
  Var h_ht;
};

EncodeOut encode_channels(Tape& tape, const TrainContext& ctx, const ChannelVars& ch, Var w,
                          const AugmentPlan* aug_hm, const AugmentPlan* aug_ht) {
  ViewPlan plan_hm = plan_view(ctx.g, aug_hm);
  ViewPlan plan_ht = plan_view(ctx.g, aug_ht);
  Var x_hm = tape.constant(plan_hm.masked_features);
  Var x_ht = tape.constant(plan_ht.masked_features);
  Var vals_hm = view_values_vars(plan_hm, w, /*heterophilic=*/false);
  Var vals_ht = view_values_vars(plan_ht, w, /*heterophilic=*/true);
  Var h_hm = sgc_encode(x_hm, ch.enc_hm, plan_hm.pattern, vals_hm, ctx.cfg.l, kDegreeEps);
  Var h_ht = lapsgc_encode(x_ht, ch.enc_ht, plan_ht.pattern, vals_ht, ctx.cfg.l,
                           ctx.cfg.alpha, kDegreeEps);
  return {h_hm, h_ht};
}

// One encoder/head update on L_c; returns the loss value.
double encoder_step(const TrainContext& ctx, ModelParams& params, AdamState& adam, int outer,
                    int inner) {
  const TrainConfig& cfg = ctx.cfg;
  Tape tape;
  Vector delta = sample_edge_noise(
      ctx.g.m, derive_seed(cfg.seed, rng_tag::gumbel, static_cast<std::uint64_t>(outer),
                           static_cast<std::uint64_t>(inner)));
  EdgeWeightVars ew =
      compute_edge_weights(tape, ctx, params, /*disc_requires_grad=*/false, delta);

  int d_f = static_cast<int>(ctx.g.features.cols());
  AugmentPlan aug_hm = sample_augmentation(
      ctx.g.m, d_f, cfg.p_f_hm, cfg.p_e_hm,
      derive_seed(cfg.seed, rng_tag::augment, static_cast<std::uint64_t>(outer),
                  static_cast<std::uint64_t>(inner), 0));
  AugmentPlan aug_ht = sample_augmentation(
      ctx.g.m, d_f, cfg.p_f_ht, cfg.p_e_ht,
      derive_seed(cfg.seed, rng_tag::augment, static_cast<std::uint64_t>(outer),
                  static_cast<std::uint64_t>(inner), 1));

  ChannelVars ch = register_channels(tape, params, /*requires_grad=*/true);
  EncodeOut channels = encode_channels(tape, ctx, ch, ew.w, &aug_hm, &aug_ht);
  Var z_hm = project(channels.h_hm, ch.proj_hm);
  Var z_ht = project(channels.h_ht, ch.proj_ht);

  std::vector<int> batch = sample_contrastive_batch(
      ctx.g.n, cfg.b,
      derive_seed(cfg.seed, rng_tag::batch, static_cast<std::uint64_t>(outer),
                  static_cast<std::uint64_t>(inner)));
  Var loss = contrastive_loss(z_hm, z_ht, ctx.neighbors, cfg.tau_c, batch);
  tape.backward(loss);

  std::vector<Var> vars = flatten({&ch.enc_hm, &ch.enc_ht, &ch.proj_hm, &ch.proj_ht});
  std::vector<Matrix> grads;
  grads.reserve(vars.size());
  for (const Var& v : vars) grads.push_back(tape.grad(v));
  adam_step(params.encoder_tensors(), grads, adam, cfg.mu_grl, cfg.lambda);
  return tape.value(loss)(0, 0);
}

struct RankingValues {
  double total = 0.0;
  double hm = 0.0;
  double ht = 0.0;
};

// One discriminator update on L_r (no augmentation, encoders frozen). In
// frozen-w mode the loss is still evaluated for the log but nothing updates.
RankingValues discriminator_step(const TrainContext& ctx, ModelParams& params, AdamState& adam,
                                 int outer) {
  const TrainConfig& cfg = ctx.cfg;
  Tape tape;
  Vector delta = sample_edge_noise(
      ctx.g.m, derive_seed(cfg.seed, rng_tag::gumbel, static_cast<std::uint64_t>(outer), 0));
  bool learn = !cfg.frozen_w();
  EdgeWeightVars ew = compute_edge_weights(tape, ctx, params, /*disc_requires_grad=*/learn,
                                           delta);
  ChannelVars ch = register_channels(tape, params, /*requires_grad=*/false);
  EncodeOut channels = encode_channels(tape, ctx, ch, ew.w, nullptr, nullptr);
  Var h = ops::concat_cols(channels.h_hm, channels.h_ht);

  PivotBatch pivots = sample_pivots(
      ctx.g.n, ctx.g.m,
      derive_seed(cfg.seed, rng_tag::pivots, static_cast<std::uint64_t>(outer)));
  LossConfig loss_cfg;
  loss_cfg.gamma_hm = cfg.gamma_hm;
  loss_cfg.gamma_ht = cfg.gamma_ht;
  RankingLossVars ranking = ranking_loss_from_h(h, ctx.g, pivots, ew.w, loss_cfg);

  RankingValues values{tape.value(ranking.total)(0, 0), tape.value(ranking.hm_part)(0, 0),
                       tape.value(ranking.ht_part)(0, 0)};
  if (learn) {
    tape.backward(ranking.total);
    std::vector<Var> vars = flatten({&ew.disc.mlp1, &ew.disc.mlp2});
    std::vector<Matrix> grads;
    grads.reserve(vars.size());
    for (const Var& v : vars) grads.push_back(tape.grad(v));
    adam_step(params.discriminator_tensors(), grads, adam, cfg.mu_disc, cfg.lambda);
  }
  return values;
}

std::string log_line(int step, double l_c, const RankingValues& r) {
  std::ostringstream ss;
  ss << "{\"step\":" << step << ",\"L_c\":" << format_double(l_c)
     << ",\"L_r\":" << format_double(r.total) << ",\"L_r_hm\":" << format_double(r.hm)
     << ",\"L_r_ht\":" << format_double(r.ht) << "}";
  return ss.str();
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw DataError("config: " + msg); };
  if (t_o < 1) fail("t_o must be >= 1");
  if (t_i < 1) fail("t_i must be >= 1");
  if (mu_grl < 0 || mu_disc < 0) fail("learning rates must be nonnegative");
  if (alpha < 0 || alpha > 1) fail("alpha must lie in [0,1]");
  if (l < 1) fail("l must be >= 1");
  if (l_p < 1 || l_p > 2) fail("l_p must be 1 or 2");
  if (l_mlp < 1) fail("l_mlp must be >= 1");
  if (gamma_hm < 0 || gamma_ht < 0) fail("margins must be nonnegative");
  if (k < 0) fail("k must be nonnegative");
  if (b != 0 && b < 2) fail("b must be 0 (full-node) or >= 2");
  for (double p : {p_f_hm, p_f_ht, p_e_hm, p_e_ht}) {
    if (p < 0 || p >= 1) fail("masking/dropping rates must lie in [0,1)");
  }
  if (!(tau_g > 0)) fail("tau_g must be positive");
  if (!(tau_c > 0)) fail("tau_c must be positive");
  if (lambda < 0) fail("lambda must be nonnegative");
  if (d_s < 1 || d_i < 1 || d_r < 1 || d_p < 1) fail("dimensions must be positive");
  if (d_r % 2 != 0) fail("d_r must be even");
  if (b_k < 1) fail("b_k must be positive");
  if (knn_mode != "auto" && knn_mode != "exact" && knn_mode != "approx") {
    fail("knn_mode must be auto, exact or approx");
  }
  if (frozen_w() && (freeze_w < 0.0 || freeze_w > 1.0)) fail("freeze_w must lie in [0,1]");
}

std::string config_hash(const TrainConfig& cfg) {
  Fnv1a h;
  h.update(config_to_json(cfg));
  return h.hex_digest();
}

ExportResult export_representations(const Graph& g, const TrainConfig& cfg,
                                    const ModelParams& params, const StructuralEncoding& enc,
                                    bool deterministic, std::uint64_t sample_seed) {
  NeighborSets unused;
  TrainContext ctx{g, cfg, enc, unused};
  Tape tape;
  Vector delta = deterministic
                     ? noise_free(g.m)
                     : sample_edge_noise(g.m, derive_seed(sample_seed, rng_tag::gumbel));
  EdgeWeightVars ew = compute_edge_weights(tape, ctx, params, /*disc_requires_grad=*/false,
                                           delta);
  ChannelVars ch = register_channels(tape, params, /*requires_grad=*/false);
  EncodeOut channels = encode_channels(tape, ctx, ch, ew.w, nullptr, nullptr);
  ExportResult out;
  out.repr = fuse(tape.value(channels.h_hm), tape.value(channels.h_ht));
  out.theta = tape.value(ew.theta).col(0);
  out.w = tape.value(ew.w).col(0);
  return out;
}

void write_representation(const std::string& dir, const DualRepresentation& repr,
                          const TrainConfig& cfg) {
  std::ostringstream ss;
  for (Eigen::Index i = 0; i < repr.h.rows(); ++i) {
    for (Eigen::Index c = 0; c < repr.h.cols(); ++c) {
      if (c > 0) ss << '\t';
      ss << format_double(repr.h(i, c));
    }
    ss << '\n';
  }
  atomic_write_file(dir + "/repr.tsv", ss.str());
  nlohmann::json meta;
  meta["seed"] = cfg.seed;
  meta["config_hash"] = config_hash(cfg);
  meta["channel_split"] = repr.channel_dim();
  meta["rows"] = repr.h.rows();
  meta["cols"] = repr.h.cols();
  atomic_write_file(dir + "/repr.meta.json", meta.dump(2) + "\n");
}

void write_edge_weights(const std::string& dir, const Graph& g, const Vector& theta,
                        const Vector& w) {
  if (theta.size() != g.m || w.size() != g.m) {
    throw DataError("write_edge_weights: per-edge vectors do not match graph");
  }
  std::ostringstream ss;
  for (std::int64_t e = 0; e < g.m; ++e) {
    ss << g.edges[static_cast<std::size_t>(e)].first << '\t'
       << g.edges[static_cast<std::size_t>(e)].second << '\t' << format_double(theta[e]) << '\t'
       << format_double(w[e]) << '\n';
  }
  atomic_write_file(dir + "/edgeweights.tsv", ss.str());
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::vector<std::pair<std::string, const Matrix*>> tensors;
  for (const auto& [name, mat] : ckpt.params.named_tensors()) {
    tensors.emplace_back("param." + name, mat);
  }
  auto add_adam = [&tensors](const char* prefix, const AdamState& st) {
    for (std::size_t i = 0; i < st.m.size(); ++i) {
      tensors.emplace_back(std::string(prefix) + ".m" + std::to_string(i), &st.m[i]);
      tensors.emplace_back(std::string(prefix) + ".v" + std::to_string(i), &st.v[i]);
    }
  };
  add_adam("adam_enc", ckpt.adam_encoder);
  add_adam("adam_disc", ckpt.adam_discriminator);
  nlohmann::json meta;
  meta["outer_done"] = ckpt.outer_done;
  meta["enc_opt_step"] = ckpt.adam_encoder.step;
  meta["disc_opt_step"] = ckpt.adam_discriminator.step;
  meta["seed"] = ckpt.seed;
  meta["config_hash"] = ckpt.config_hash;
  save_tensor_file(path, tensors, meta, /*as_f32=*/false);
}

Checkpoint load_checkpoint(const std::string& path, const TrainConfig& cfg) {
  TensorFile tf = load_tensor_file(path);
  auto meta = nlohmann::json::parse(tf.meta_json);
  Checkpoint ckpt;
  ckpt.config_hash = meta.value("config_hash", "");
  if (ckpt.config_hash != config_hash(cfg)) {
    throw DataError("checkpoint config-hash mismatch: the run configuration changed");
  }
  ckpt.outer_done = meta.value("outer_done", 0);
  ckpt.seed = meta.value("seed", std::uint64_t{0});

  auto need = [&tf, &path](const std::string& name) -> const Matrix& {
    auto it = tf.tensors.find(name);
    if (it == tf.tensors.end()) throw DataError("checkpoint missing tensor " + name + ": " + path);
    return it->second;
  };
  int d_f = static_cast<int>(need("param.enc_hm.w0").rows());
  ckpt.params = init_params(cfg.model_dims(d_f), ckpt.seed);
  for (auto& [name, mat] : ckpt.params.named_tensors()) {
    const Matrix& stored = need("param." + name);
    if (stored.rows() != mat->rows() || stored.cols() != mat->cols()) {
      throw DataError("checkpoint tensor shape mismatch for " + name);
    }
    *mat = stored;
  }
  auto load_adam = [&need](const char* prefix, const std::vector<Matrix*>& params,
                           long step) {
    AdamState st = AdamState::like(params);
    st.step = step;
    for (std::size_t i = 0; i < params.size(); ++i) {
      st.m[i] = need(std::string(prefix) + ".m" + std::to_string(i));
      st.v[i] = need(std::string(prefix) + ".v" + std::to_string(i));
    }
    return st;
  };
  ckpt.adam_encoder = load_adam("adam_enc", ckpt.params.encoder_tensors(),
                                meta.value("enc_opt_step", 0L));
  ckpt.adam_discriminator = load_adam("adam_disc", ckpt.params.discriminator_tensors(),
                                      meta.value("disc_opt_step", 0L));
  return ckpt;
}

TrainResult train(const Graph& g, const TrainConfig& cfg, const TrainOptions& opts) {
  cfg.validate();
  if (g.n < 2) throw DataError("train: need at least two nodes");

  // Precompute (or load cached) structural encodings and neighbor sets.
  StructuralEncoding enc;
  std::string enc_key = structenc_cache_key(g, cfg.d_s);
  if (opts.cache_dir.empty() || !load_structural_encoding(opts.cache_dir, enc_key, &enc)) {
    enc = structural_encoding(g, cfg.d_s);
    if (!opts.cache_dir.empty()) save_structural_encoding(opts.cache_dir, enc, enc_key);
  }
  KnnMode mode = cfg.knn_mode == "exact"
                     ? KnnMode::exact
                     : cfg.knn_mode == "approx"
                           ? KnnMode::approx
                           : (g.n < kExactKnnLimit ? KnnMode::exact : KnnMode::approx);
  NeighborSets neighbors;
  std::string knn_key = knn_cache_key(g.features, cfg.k, mode, cfg.b_k, cfg.seed);
  if (opts.cache_dir.empty() || !load_neighbor_sets(opts.cache_dir, knn_key, &neighbors)) {
    neighbors = knn_neighbors(g.features, cfg.k, mode, cfg.b_k,
                              derive_seed(cfg.seed, rng_tag::knn));
    if (!opts.cache_dir.empty()) save_neighbor_sets(opts.cache_dir, neighbors, knn_key);
  }

  ModelParams params;
  AdamState adam_enc, adam_disc;
  int outer_start = 0;
  if (!opts.resume_checkpoint.empty()) {
    Checkpoint ckpt = load_checkpoint(opts.resume_checkpoint, cfg);
    params = std::move(ckpt.params);
    adam_enc = std::move(ckpt.adam_encoder);
    adam_disc = std::move(ckpt.adam_discriminator);
    outer_start = ckpt.outer_done;
    if (outer_start > cfg.t_o) {
      throw DataError("checkpoint is further along than t_o; nothing to resume");
    }
  } else {
    params = init_params(cfg.model_dims(static_cast<int>(g.features.cols())), cfg.seed);
    adam_enc = AdamState::like(params.encoder_tensors());
    adam_disc = AdamState::like(params.discriminator_tensors());
  }

  std::ofstream log_stream;
  if (!cfg.out.empty()) {
    log_stream.open(cfg.out + "/train_log.jsonl",
                    outer_start > 0 ? std::ios::app : std::ios::trunc);
    if (!log_stream) throw DataError("cannot open train log in " + cfg.out);
  }

  TrainContext ctx{g, cfg, enc, neighbors};
  TrainResult result;
  int monitor_every = std::max(1, cfg.t_o / 5);
  for (int outer = outer_start + 1; outer <= cfg.t_o; ++outer) {
    double l_c = 0.0;
    for (int inner = 1; inner <= cfg.t_i; ++inner) {
      l_c = encoder_step(ctx, params, adam_enc, outer, inner);
    }
    RankingValues ranking = discriminator_step(ctx, params, adam_disc, outer);
    std::string line = log_line(outer, l_c, ranking);
    result.log_lines.push_back(line);
    if (log_stream.is_open()) log_stream << line << '\n' << std::flush;

    bool debug = static_cast<int>(log_level()) >= static_cast<int>(LogLevel::debug);
    if (debug && outer % monitor_every == 0) {
      if (g.has_labels() && g.splits.present()) {
        // Monitoring only; never feeds back into training.
        ExportResult snap = export_representations(g, cfg, params, enc, true);
        LogRegModel probe = fit_logreg(select_rows(snap.repr.h, g.splits.train),
                                       select_labels(g.labels, g.splits.train),
                                       select_rows(snap.repr.h, g.splits.val),
                                       select_labels(g.labels, g.splits.val));
        double val_acc = accuracy(logreg_predict(probe, select_rows(snap.repr.h, g.splits.val)),
                                  select_labels(g.labels, g.splits.val));
        log_msg(LogLevel::debug,
                "outer " + std::to_string(outer) + " val-acc=" + format_double(val_acc));
      } else {
        log_msg(LogLevel::debug, "outer " + std::to_string(outer) + " L_c=" +
                                     format_double(l_c) + " L_r=" + format_double(ranking.total));
      }
    }
  }

  if (!cfg.out.empty()) {
    Checkpoint ckpt;
    ckpt.params = params;
    ckpt.adam_encoder = adam_enc;
    ckpt.adam_discriminator = adam_disc;
    ckpt.outer_done = cfg.t_o;
    ckpt.seed = cfg.seed;
    ckpt.config_hash = config_hash(cfg);
    save_checkpoint(cfg.out + "/checkpoint.bin", ckpt);
  }

  ExportResult final_fwd = export_representations(g, cfg, params, enc, /*deterministic=*/true);
  result.params = std::move(params);
  result.repr = std::move(final_fwd.repr);
  result.theta = std::move(final_fwd.theta);
  result.w = std::move(final_fwd.w);
  result.structenc = std::move(enc);
  result.neighbors = std::move(neighbors);
  return result;
}

}  // namespace greet
