#pragma once

#include "greet/graph.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace greet {

// Multinomial logistic regression, zero-initialized and fit by full-batch
// gradient descent with backtracking; deterministic given the data.
struct LogRegModel {
  Matrix weight;  // d x c
  Matrix bias;    // 1 x c
  double l2 = 0.0;
};

inline const std::vector<double> kDefaultL2Grid{1e-2, 1e-1, 1.0, 10.0};

// Picks the L2 strength from the grid by validation accuracy, ties resolved
// toward the larger strength. Throws on a single-class training set.
LogRegModel fit_logreg(const Matrix& h_train, const std::vector<int>& y_train,
                       const Matrix& h_val, const std::vector<int>& y_val,
                       const std::vector<double>& l2_grid = kDefaultL2Grid);

std::vector<int> logreg_predict(const LogRegModel& model, const Matrix& h);
double accuracy(const std::vector<int>& pred, const std::vector<int>& truth);

Matrix select_rows(const Matrix& h, const std::vector<int>& idx);
std::vector<int> select_labels(const std::vector<int>& labels, const std::vector<int>& idx);

struct EvalReport {
  std::vector<double> accuracies;  // per repeat
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> chosen_l2;  // per repeat
  int repeats = 0;
  double runtime_sec = 0.0;
};

// Frozen-representation protocol: repeated classifier fits on fixed H using
// the graph's splits; reports mean and population std of test accuracy.
EvalReport evaluate(const Matrix& h, const Graph& g, int repeats, std::uint64_t seed,
                    const std::vector<double>& l2_grid = kDefaultL2Grid);

void write_eval_report(const std::string& path, const EvalReport& report);

// Adds round(ptb_rate*m) uniformly sampled non-existing undirected edges;
// features, labels and splits are untouched.
Graph random_attack(const Graph& g, double ptb_rate, std::uint64_t rng_seed);

// Binned cosine-similarity densities of connected node pairs vs. randomly
// sampled node pairs over rows of `h` (bins over [-1,1]; densities sum to 1
// per series).
struct SimilarityHistogram {
  Vector bin_centers;
  Vector cnp_density;
  Vector rnp_density;
};
SimilarityHistogram similarity_histogram(const Matrix& h, const Graph& g, int pivots_count,
                                         int bins, std::uint64_t rng_seed);
void write_similarity_histogram(const std::string& path, const SimilarityHistogram& hist);

// Ranking quality of scores against binary labels (average-rank tie handling).
double roc_auc(const std::vector<double>& scores, const std::vector<char>& labels);

}  // namespace greet
