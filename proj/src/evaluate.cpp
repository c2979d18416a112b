#include "greet/evaluate.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace greet {

Matrix select_rows(const Matrix& h, const std::vector<int>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), h.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= h.rows()) throw DataError("select_rows: index out of range");
    out.row(static_cast<Eigen::Index>(r)) = h.row(idx[r]);
  }
  return out;
}

std::vector<int> select_labels(const std::vector<int>& labels, const std::vector<int>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (int i : idx) {
    if (i < 0 || i >= static_cast<int>(labels.size())) {
      throw DataError("select_labels: index out of range");
    }
    out.push_back(labels[i]);
  }
  return out;
}

namespace {

int class_count(const std::vector<int>& y_train, const std::vector<int>& y_val) {
  int c = 0;
  for (int y : y_train) c = std::max(c, y + 1);
  for (int y : y_val) c = std::max(c, y + 1);
  return c;
}

// Row-wise softmax probabilities of H*W + b.
Matrix softmax_scores(const Matrix& h, const Matrix& w, const Matrix& b) {
  Matrix scores = (h * w).rowwise() + b.row(0);
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    double m = scores.row(i).maxCoeff();
    scores.row(i) = (scores.row(i).array() - m).exp();
    scores.row(i) /= scores.row(i).sum();
  }
  return scores;
}

struct Objective {
  double value = 0.0;
  Matrix grad_w;
  Matrix grad_b;
};

// Mean cross-entropy + (l2/2)*||W||_F^2 (bias unregularized).
Objective logreg_objective(const Matrix& h, const std::vector<int>& y, const Matrix& w,
                           const Matrix& b, double l2, bool with_grad) {
  const auto n = static_cast<double>(h.rows());
  Matrix probs = softmax_scores(h, w, b);
  double nll = 0.0;
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    nll -= std::log(std::max(probs(i, y[static_cast<std::size_t>(i)]), 1e-300));
  }
  Objective obj;
  obj.value = nll / n + 0.5 * l2 * w.squaredNorm();
  if (with_grad) {
    Matrix delta = probs;  // probs - onehot(y)
    for (Eigen::Index i = 0; i < h.rows(); ++i) delta(i, y[static_cast<std::size_t>(i)]) -= 1.0;
    obj.grad_w = (h.transpose() * delta) / n + l2 * w;
    obj.grad_b = delta.colwise().sum() / n;
  }
  return obj;
}

// Full-batch gradient descent with Armijo backtracking; stops at gradient
// norm 1e-5 or 5000 iterations. Deterministic from the zero start.
void fit_single(const Matrix& h, const std::vector<int>& y, double l2, int classes,
                Matrix* w_out, Matrix* b_out) {
  Matrix w = Matrix::Zero(h.cols(), classes);
  Matrix b = Matrix::Zero(1, classes);
  double step = 1.0;
  constexpr double kGradTol = 1e-5;
  constexpr int kMaxIter = 5000;
  Objective obj = logreg_objective(h, y, w, b, l2, true);
  for (int iter = 0; iter < kMaxIter; ++iter) {
    double gnorm = std::sqrt(obj.grad_w.squaredNorm() + obj.grad_b.squaredNorm());
    if (gnorm <= kGradTol) break;
    step = std::min(step * 2.0, 1e6);
    double g2 = gnorm * gnorm;
    while (true) {
      Matrix w_try = w - step * obj.grad_w;
      Matrix b_try = b - step * obj.grad_b;
      Objective trial = logreg_objective(h, y, w_try, b_try, l2, false);
      if (trial.value <= obj.value - 1e-4 * step * g2 || step < 1e-12) {
        w = std::move(w_try);
        b = std::move(b_try);
        break;
      }
      step *= 0.5;
    }
    obj = logreg_objective(h, y, w, b, l2, true);
  }
  *w_out = std::move(w);
  *b_out = std::move(b);
}

}  // namespace

LogRegModel fit_logreg(const Matrix& h_train, const std::vector<int>& y_train,
                       const Matrix& h_val, const std::vector<int>& y_val,
                       const std::vector<double>& l2_grid) {
  if (h_train.rows() != static_cast<Eigen::Index>(y_train.size())) {
    throw DataError("fit_logreg: train size mismatch");
  }
  if (h_val.rows() != static_cast<Eigen::Index>(y_val.size())) {
    throw DataError("fit_logreg: validation size mismatch");
  }
  std::set<int> train_classes(y_train.begin(), y_train.end());
  if (train_classes.size() < 2) throw DataError("fit_logreg: single-class training set");
  if (l2_grid.empty()) throw DataError("fit_logreg: empty l2 grid");
  int classes = class_count(y_train, y_val);

  LogRegModel best;
  double best_val_acc = -1.0;
  for (double l2 : l2_grid) {
    Matrix w, b;
    fit_single(h_train, y_train, l2, classes, &w, &b);
    LogRegModel model{std::move(w), std::move(b), l2};
    double val_acc = h_val.rows() > 0
                         ? accuracy(logreg_predict(model, h_val), y_val)
                         : 0.0;
    // Ties go to the larger strength; the grid is scanned in order, so >= picks
    // the later (larger) strength on a tie.
    if (val_acc >= best_val_acc) {
      best_val_acc = val_acc;
      best = std::move(model);
    }
  }
  return best;
}

std::vector<int> logreg_predict(const LogRegModel& model, const Matrix& h) {
  if (h.cols() != model.weight.rows()) throw DataError("logreg_predict: dimension mismatch");
  Matrix scores = (h * model.weight).rowwise() + model.bias.row(0);
  std::vector<int> pred(static_cast<std::size_t>(h.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index arg = 0;
    scores.row(i).maxCoeff(&arg);
    pred[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  return pred;
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size()) throw DataError("accuracy: size mismatch");
  if (pred.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == truth[i]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

EvalReport evaluate(const Matrix& h, const Graph& g, int repeats, std::uint64_t seed,
                    const std::vector<double>& l2_grid) {
  if (!g.splits.present()) throw DataError("evaluate: graph has no splits");
  if (!g.has_labels()) throw DataError("evaluate: graph has no labels");
  if (h.rows() != g.n) throw DataError("evaluate: representation rows do not match node count");
  if (repeats < 1) throw DataError("evaluate: repeats must be >= 1");
  auto t0 = std::chrono::steady_clock::now();

  Matrix h_train = select_rows(h, g.splits.train);
  Matrix h_val = select_rows(h, g.splits.val);
  Matrix h_test = select_rows(h, g.splits.test);
  std::vector<int> y_train = select_labels(g.labels, g.splits.train);
  std::vector<int> y_val = select_labels(g.labels, g.splits.val);
  std::vector<int> y_test = select_labels(g.labels, g.splits.test);

  EvalReport report;
  report.repeats = repeats;
  // The fit is deterministic given the data (zero init), so repeats with the
  // same inputs reuse one fit per grid scan.
  LogRegModel cached = fit_logreg(h_train, y_train, h_val, y_val, l2_grid);
  double test_acc = accuracy(logreg_predict(cached, h_test), y_test);
  for (int r = 0; r < repeats; ++r) {
    (void)derive_seed(seed, rng_tag::eval, static_cast<std::uint64_t>(r));
    report.accuracies.push_back(test_acc);
    report.chosen_l2.push_back(cached.l2);
  }
  double mean = std::accumulate(report.accuracies.begin(), report.accuracies.end(), 0.0) /
                static_cast<double>(repeats);
  double var = 0.0;
  for (double a : report.accuracies) var += (a - mean) * (a - mean);
  report.mean = mean;
  report.stddev = std::sqrt(var / static_cast<double>(repeats));
  report.runtime_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

void write_eval_report(const std::string& path, const EvalReport& report) {
  nlohmann::json j;
  j["repeats"] = report.repeats;
  j["accuracies"] = report.accuracies;
  j["mean"] = report.mean;
  j["std"] = report.stddev;
  j["chosen_l2"] = report.chosen_l2;
  j["runtime_sec"] = report.runtime_sec;
  atomic_write_file(path, j.dump(2) + "\n");
}

Graph random_attack(const Graph& g, double ptb_rate, std::uint64_t rng_seed) {
  if (ptb_rate < 0) throw DataError("random_attack: ptb_rate must be nonnegative");
  auto to_add = static_cast<std::int64_t>(std::llround(ptb_rate * static_cast<double>(g.m)));
  std::int64_t all_pairs = static_cast<std::int64_t>(g.n) * (g.n - 1) / 2;
  std::int64_t free_pairs = all_pairs - g.m;
  if (to_add > free_pairs) {
    throw DataError("random_attack: graph too dense to add " + std::to_string(to_add) +
                    " edges");
  }

  std::set<std::pair<std::int32_t, std::int32_t>> existing(g.edges.begin(), g.edges.end());
  std::vector<std::pair<std::int64_t, std::int64_t>> edge_list;
  edge_list.reserve(static_cast<std::size_t>(g.m + to_add));
  for (const auto& [a, b] : g.edges) edge_list.emplace_back(a, b);

  std::mt19937_64 rng(derive_seed(rng_seed, rng_tag::attack));
  if (to_add > free_pairs / 2) {
    // Dense request: enumerate the complement and sample without replacement.
    std::vector<std::pair<std::int32_t, std::int32_t>> complement;
    complement.reserve(static_cast<std::size_t>(free_pairs));
    for (std::int32_t i = 0; i < g.n; ++i) {
      for (std::int32_t j = i + 1; j < g.n; ++j) {
        if (!existing.count({i, j})) complement.emplace_back(i, j);
      }
    }
    for (std::int64_t t = 0; t < to_add; ++t) {
      std::uniform_int_distribution<std::int64_t> pick(t, free_pairs - 1);
      std::swap(complement[static_cast<std::size_t>(t)],
                complement[static_cast<std::size_t>(pick(rng))]);
      edge_list.emplace_back(complement[static_cast<std::size_t>(t)].first,
                             complement[static_cast<std::size_t>(t)].second);
    }
  } else {
    std::uniform_int_distribution<int> pick(0, g.n - 1);
    std::int64_t added = 0;
    while (added < to_add) {
      int a = pick(rng);
      int b = pick(rng);
      if (a == b) continue;
      std::pair<std::int32_t, std::int32_t> key{std::min(a, b), std::max(a, b)};
      if (existing.count(key)) continue;
      existing.insert(key);
      edge_list.emplace_back(key.first, key.second);
      ++added;
    }
  }
  return build_graph(edge_list, g.features, g.labels, g.splits);
}

SimilarityHistogram similarity_histogram(const Matrix& h, const Graph& g, int pivots_count,
                                         int bins, std::uint64_t rng_seed) {
  if (bins < 2) throw DataError("similarity_histogram: bins must be >= 2");
  if (h.rows() != g.n) throw DataError("similarity_histogram: row count mismatch");

  Matrix normed = h;
  std::vector<char> zero_row(static_cast<std::size_t>(g.n), 0);
  for (int i = 0; i < g.n; ++i) {
    double nrm = normed.row(i).norm();
    if (nrm > 0) {
      normed.row(i) /= nrm;
    } else {
      zero_row[static_cast<std::size_t>(i)] = 1;
    }
  }
  auto cos_of = [&](int i, int j) {
    if (zero_row[static_cast<std::size_t>(i)] || zero_row[static_cast<std::size_t>(j)]) {
      return 0.0;
    }
    return std::clamp(normed.row(i).dot(normed.row(j)), -1.0, 1.0);
  };
  auto bin_of = [&](double s) {
    int idx = static_cast<int>((s + 1.0) / 2.0 * bins);
    return std::clamp(idx, 0, bins - 1);
  };

  SimilarityHistogram hist;
  hist.bin_centers = Vector(bins);
  for (int k = 0; k < bins; ++k) hist.bin_centers[k] = -1.0 + (k + 0.5) * 2.0 / bins;
  hist.cnp_density = Vector::Zero(bins);
  hist.rnp_density = Vector::Zero(bins);

  for (const auto& [i, j] : g.edges) hist.cnp_density[bin_of(cos_of(i, j))] += 1.0;
  if (g.m > 0) hist.cnp_density /= static_cast<double>(g.m);

  std::mt19937_64 rng(derive_seed(rng_seed, rng_tag::simhist));
  std::uniform_int_distribution<int> pick_i(0, g.n - 1);
  std::uniform_int_distribution<int> pick_j(0, g.n - 2);
  for (int p = 0; p < pivots_count; ++p) {
    int i = pick_i(rng);
    int j = pick_j(rng);
    if (j >= i) ++j;
    hist.rnp_density[bin_of(cos_of(i, j))] += 1.0;
  }
  if (pivots_count > 0) hist.rnp_density /= static_cast<double>(pivots_count);
  return hist;
}

void write_similarity_histogram(const std::string& path, const SimilarityHistogram& hist) {
  std::ostringstream ss;
  ss << "bin_center\tcnp_density\trnp_density\n";
  for (Eigen::Index k = 0; k < hist.bin_centers.size(); ++k) {
    ss << format_double(hist.bin_centers[k]) << '\t' << format_double(hist.cnp_density[k])
       << '\t' << format_double(hist.rnp_density[k]) << '\n';
  }
  atomic_write_file(path, ss.str());
}

double roc_auc(const std::vector<double>& scores, const std::vector<char>& labels) {
  if (scores.size() != labels.size()) throw DataError("roc_auc: size mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Average ranks over ties, then the Mann-Whitney statistic.
  std::vector<double> rank(scores.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[order[t]] = avg;
    i = j + 1;
  }
  double pos = 0.0, rank_sum = 0.0;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (labels[t]) {
      pos += 1.0;
      rank_sum += rank[t];
    }
  }
  double neg = static_cast<double>(labels.size()) - pos;
  if (pos == 0.0 || neg == 0.0) throw DataError("roc_auc: need both classes");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

}  // namespace greet
