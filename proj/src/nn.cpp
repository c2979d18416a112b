#include "greet/nn.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstring>

namespace greet {

Mlp make_mlp(const std::vector<int>& dims, std::mt19937_64& rng) {
  if (dims.size() < 2) throw std::logic_error("make_mlp: need at least in/out dims");
  Mlp mlp;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    int fan_in = dims[l];
    int fan_out = dims[l + 1];
    double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    LinearLayer layer;
    layer.weight = Matrix(fan_in, fan_out);
    for (int i = 0; i < fan_in; ++i) {
      for (int j = 0; j < fan_out; ++j) layer.weight(i, j) = dist(rng);
    }
    layer.bias = Matrix::Zero(1, fan_out);
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

MlpVars register_mlp(Tape& tape, const Mlp& mlp, bool requires_grad) {
  MlpVars vars;
  for (const auto& layer : mlp.layers) {
    vars.layers.emplace_back(tape.input(layer.weight, requires_grad),
                             tape.input(layer.bias, requires_grad));
  }
  return vars;
}

Var mlp_forward(Var x, const MlpVars& mlp) {
  Var h = x;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    h = ops::add_rowvec(ops::matmul(h, mlp.layers[l].first), mlp.layers[l].second);
    if (l + 1 < mlp.layers.size()) h = ops::relu(h);
  }
  return h;
}

namespace {

std::vector<int> mlp_dims(int in, int hidden, int out, int depth) {
  std::vector<int> dims{in};
  for (int l = 1; l < depth; ++l) dims.push_back(hidden);
  dims.push_back(out);
  return dims;
}

void collect(const char* prefix, Mlp& mlp,
             std::vector<std::pair<std::string, Matrix*>>& out) {
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    out.emplace_back(std::string(prefix) + ".w" + std::to_string(l), &mlp.layers[l].weight);
    out.emplace_back(std::string(prefix) + ".b" + std::to_string(l), &mlp.layers[l].bias);
  }
}

}  // namespace

std::vector<std::pair<std::string, Matrix*>> ModelParams::named_tensors() {
  std::vector<std::pair<std::string, Matrix*>> out;
  collect("disc_mlp1", disc_mlp1, out);
  collect("disc_mlp2", disc_mlp2, out);
  collect("enc_hm", enc_hm, out);
  collect("enc_ht", enc_ht, out);
  collect("proj_hm", proj_hm, out);
  collect("proj_ht", proj_ht, out);
  return out;
}

std::vector<std::pair<std::string, const Matrix*>> ModelParams::named_tensors() const {
  auto mut = const_cast<ModelParams*>(this)->named_tensors();
  std::vector<std::pair<std::string, const Matrix*>> out;
  out.reserve(mut.size());
  for (auto& [name, ptr] : mut) out.emplace_back(name, ptr);
  return out;
}

std::vector<Matrix*> ModelParams::discriminator_tensors() {
  std::vector<std::pair<std::string, Matrix*>> named;
  collect("disc_mlp1", disc_mlp1, named);
  collect("disc_mlp2", disc_mlp2, named);
  std::vector<Matrix*> out;
  for (auto& [_, ptr] : named) out.push_back(ptr);
  return out;
}

std::vector<Matrix*> ModelParams::encoder_tensors() {
  std::vector<std::pair<std::string, Matrix*>> named;
  collect("enc_hm", enc_hm, named);
  collect("enc_ht", enc_ht, named);
  collect("proj_hm", proj_hm, named);
  collect("proj_ht", proj_ht, named);
  std::vector<Matrix*> out;
  for (auto& [_, ptr] : named) out.push_back(ptr);
  return out;
}

ModelParams init_params(const ModelDims& dims, std::uint64_t seed) {
  if (dims.d_r % 2 != 0) throw DataError("init_params: d_r must be even");
  std::mt19937_64 rng(derive_seed(seed, rng_tag::init));
  ModelParams p;
  int half = dims.d_r / 2;
  p.disc_mlp1 = make_mlp({dims.d_f + dims.d_s, dims.d_i}, rng);
  p.disc_mlp2 = make_mlp({2 * dims.d_i, 1}, rng);
  p.enc_hm = make_mlp(mlp_dims(dims.d_f, half, half, dims.l_mlp), rng);
  p.enc_ht = make_mlp(mlp_dims(dims.d_f, half, half, dims.l_mlp), rng);
  p.proj_hm = make_mlp(mlp_dims(half, dims.d_p, dims.d_p, dims.l_p), rng);
  p.proj_ht = make_mlp(mlp_dims(half, dims.d_p, dims.d_p, dims.l_p), rng);
  return p;
}

AdamState AdamState::like(const std::vector<Matrix*>& params) {
  AdamState st;
  for (const Matrix* p : params) {
    st.m.push_back(Matrix::Zero(p->rows(), p->cols()));
    st.v.push_back(Matrix::Zero(p->rows(), p->cols()));
  }
  return st;
}

void adam_step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads,
               AdamState& state, double lr, double weight_decay) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::logic_error("adam_step: parameter/gradient/state count mismatch");
  }
  state.step += 1;
  double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i];
    if (grads[i].rows() != p.rows() || grads[i].cols() != p.cols()) {
      throw std::logic_error("adam_step: gradient shape mismatch");
    }
    if (!grads[i].allFinite()) throw NumericalError("adam_step: non-finite gradient");
    Matrix g = grads[i];
    if (weight_decay != 0.0) g += weight_decay * p;
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g.cwiseProduct(g);
    Matrix m_hat = state.m[i] / bc1;
    Matrix v_hat = state.v[i] / bc2;
    p.array() -= lr * m_hat.array() / (v_hat.array().sqrt() + state.eps);
  }
}

GradCheckReport grad_check(const LossBuilder& build, const std::vector<Matrix>& params,
                           double h, double tol) {
  GradCheckReport report;

  auto eval = [&](const std::vector<Matrix>& values, bool with_grad,
                  std::vector<Matrix>* grads) -> double {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(values.size());
    for (const Matrix& v : values) vars.push_back(tape.input(v, with_grad));
    Var loss = build(tape, vars);
    const Matrix& lv = tape.value(loss);
    if (lv.rows() != 1 || lv.cols() != 1) throw std::logic_error("grad_check: loss must be 1x1");
    if (with_grad) {
      tape.backward(loss);
      grads->clear();
      for (const Var& v : vars) grads->push_back(tape.grad(v));
    }
    return lv(0, 0);
  };

  std::vector<Matrix> analytic;
  eval(params, true, &analytic);

  std::vector<Matrix> work = params;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (Eigen::Index r = 0; r < params[p].rows(); ++r) {
      for (Eigen::Index c = 0; c < params[p].cols(); ++c) {
        double saved = work[p](r, c);
        work[p](r, c) = saved + h;
        double fp = eval(work, false, nullptr);
        work[p](r, c) = saved - h;
        double fm = eval(work, false, nullptr);
        work[p](r, c) = saved;
        double numeric = (fp - fm) / (2.0 * h);
        double a = analytic[p](r, c);
        double rel = std::abs(a - numeric) / std::max(1.0, std::abs(numeric));
        report.checked += 1;
        report.max_rel_err = std::max(report.max_rel_err, rel);
        if (rel > tol) {
          report.failures.push_back({static_cast<int>(p), static_cast<int>(r),
                                     static_cast<int>(c), a, numeric, rel});
        }
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Tensor container

namespace {
constexpr char kMagic[8] = {'G', 'R', 'E', 'E', 'T', 'T', 'F', '1'};

void append_le_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t read_le_u64(const char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}
}  // namespace

void save_tensor_file(const std::string& path,
                      const std::vector<std::pair<std::string, const Matrix*>>& tensors,
                      const nlohmann::json& meta, bool as_f32) {
  nlohmann::json header;
  header["version"] = 1;
  header["meta"] = meta;
  nlohmann::json list = nlohmann::json::array();
  std::string payload;
  for (const auto& [name, mat] : tensors) {
    nlohmann::json t;
    t["name"] = name;
    t["rows"] = mat->rows();
    t["cols"] = mat->cols();
    t["offset"] = payload.size();
    t["dtype"] = as_f32 ? "f32" : "f64";
    list.push_back(t);
    if (as_f32) {
      for (Eigen::Index i = 0; i < mat->size(); ++i) {
        float f = static_cast<float>(mat->data()[i]);
        char buf[4];
        std::memcpy(buf, &f, 4);
        payload.append(buf, 4);
      }
    } else {
      payload.append(reinterpret_cast<const char*>(mat->data()),
                     sizeof(double) * static_cast<std::size_t>(mat->size()));
    }
  }
  header["tensors"] = list;
  std::string header_str = header.dump();
  std::string out;
  out.append(kMagic, 8);
  append_le_u64(out, header_str.size());
  out += header_str;
  out += payload;
  atomic_write_file(path, out);
}

TensorFile load_tensor_file(const std::string& path) {
  std::string raw = read_file(path);
  if (raw.size() < 16 || std::memcmp(raw.data(), kMagic, 8) != 0) {
    throw DataError("not a tensor file: " + path);
  }
  std::uint64_t hlen = read_le_u64(raw.data() + 8);
  if (raw.size() < 16 + hlen) throw DataError("truncated tensor file header: " + path);
  auto header = nlohmann::json::parse(raw.substr(16, hlen), nullptr, false);
  if (!header.is_object() || !header.contains("tensors")) {
    throw DataError("corrupt tensor file header: " + path);
  }
  const char* payload = raw.data() + 16 + hlen;
  std::size_t payload_len = raw.size() - 16 - static_cast<std::size_t>(hlen);

  TensorFile tf;
  tf.meta_json = header.contains("meta") ? header["meta"].dump() : "{}";
  for (const auto& t : header["tensors"]) {
    std::string name = t.at("name");
    Eigen::Index rows = t.at("rows");
    Eigen::Index cols = t.at("cols");
    std::size_t offset = t.at("offset");
    std::string dtype = t.at("dtype");
    std::size_t elem = dtype == "f32" ? 4 : 8;
    std::size_t bytes = elem * static_cast<std::size_t>(rows * cols);
    if (offset + bytes > payload_len) throw DataError("truncated tensor payload: " + path);
    Matrix mat(rows, cols);
    if (dtype == "f32") {
      for (Eigen::Index i = 0; i < mat.size(); ++i) {
        float f;
        std::memcpy(&f, payload + offset + 4 * static_cast<std::size_t>(i), 4);
        mat.data()[i] = static_cast<double>(f);
      }
    } else if (dtype == "f64") {
      std::memcpy(mat.data(), payload + offset, bytes);
    } else {
      throw DataError("unknown dtype in tensor file: " + dtype);
    }
    tf.tensors.emplace(std::move(name), std::move(mat));
  }
  return tf;
}

}  // namespace greet
