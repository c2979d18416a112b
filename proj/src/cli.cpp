#include "greet/cli.hpp"

#include "greet/dataio.hpp"
#include "greet/evaluate.hpp"
#include "greet/trainer.hpp"

#include <CLI11.hpp>

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>

namespace greet {

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir + ": " + ec.message());
}

Matrix load_matrix_tsv(const std::string& path) {
  if (!file_exists(path)) throw DataError("missing file: " + path);
  std::string text = read_file(path);
  std::vector<std::vector<double>> rows;
  std::size_t start = 0, line_no = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    if (end > start) {
      std::vector<double> row;
      const char* p = text.data() + start;
      const char* stop = text.data() + end;
      while (p < stop) {
        char* next = nullptr;
        double v = std::strtod(p, &next);
        if (next == p) throw DataError(path + ":" + std::to_string(line_no) + ": malformed row");
        row.push_back(v);
        p = next;
        while (p < stop && (*p == '\t' || *p == ' ' || *p == '\r')) ++p;
      }
      if (!rows.empty() && row.size() != rows[0].size()) {
        throw DataError(path + ":" + std::to_string(line_no) + ": ragged row");
      }
      rows.push_back(std::move(row));
    }
    start = end + 1;
  }
  if (rows.empty()) throw DataError(path + ": empty matrix");
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < rows[i].size(); ++c) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
    }
  }
  return out;
}

struct TrainArgs {
  std::string data, config, preset, out, cache, resume;
  std::vector<std::string> overrides;
  std::int64_t seed = -1;
  bool seed_given = false;
};

int cmd_train(const TrainArgs& args) {
  if (args.preset.empty() && args.config.empty()) {
    std::cerr << "train: either --preset or --config is required\n";
    return 1;
  }
  TrainConfig cfg = args.preset.empty() ? TrainConfig{} : preset_config(args.preset);
  if (!args.config.empty()) {
    TrainConfig base = cfg;
    // Config file keys override the preset; unspecified keys keep preset values.
    auto file_json = nlohmann::json::parse(read_file(args.config), nullptr, false);
    if (!file_json.is_object()) throw DataError("config: not a JSON object");
    for (auto it = file_json.begin(); it != file_json.end(); ++it) {
      apply_override(base, it.key() + "=" + it.value().dump());
    }
    cfg = base;
  }
  for (const std::string& kv : args.overrides) apply_override(cfg, kv);
  if (!args.data.empty()) cfg.data = args.data;
  if (!args.out.empty()) cfg.out = args.out;
  if (args.seed_given) cfg.seed = static_cast<std::uint64_t>(args.seed);
  cfg.validate();
  if (cfg.data.empty()) {
    std::cerr << "train: no dataset directory (--data or config 'data')\n";
    return 1;
  }
  if (cfg.out.empty()) {
    std::cerr << "train: no output directory (--out or config 'out')\n";
    return 1;
  }
  ensure_dir(cfg.out);

  Graph g = load_graph(cfg.data);
  auto t0 = std::chrono::steady_clock::now();
  TrainOptions opts;
  opts.cache_dir = args.cache;
  opts.resume_checkpoint = args.resume;
  if (!args.cache.empty()) ensure_dir(args.cache);
  TrainResult result = train(g, cfg, opts);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  write_representation(cfg.out, result.repr, cfg);
  write_edge_weights(cfg.out, g, result.theta, result.w);
  save_config(cfg.out + "/config.json", cfg);

  std::cout << "trained " << cfg.t_o << " outer iterations (" << cfg.t_i
            << " encoder steps each) on n=" << g.n << " m=" << g.m << " in "
            << format_double(secs) << "s\n";
  if (!result.log_lines.empty()) {
    std::cout << "final " << result.log_lines.back() << "\n";
  }
  std::cout << "artifacts: " << cfg.out << "/repr.tsv, edgeweights.tsv, checkpoint.bin, "
            << "train_log.jsonl, config.json\n";
  return 0;
}

int cmd_eval(const std::string& repr_path, const std::string& data, int repeats,
             std::uint64_t seed, const std::string& out) {
  Graph g = load_graph(data);
  Matrix h = load_matrix_tsv(repr_path);
  if (h.rows() != g.n) {
    throw DataError("eval: representation has " + std::to_string(h.rows()) + " rows for " +
                    std::to_string(g.n) + " nodes");
  }
  EvalReport report = evaluate(h, g, repeats, seed);
  ensure_dir(out);
  write_eval_report(out + "/eval_report.json", report);
  std::printf("acc = %.4f ± %.4f (%d repeats, l2=%s)\n", report.mean, report.stddev,
              report.repeats, format_double(report.chosen_l2.front()).c_str());
  return 0;
}

int cmd_attack(const std::string& data, double ptb_rate, std::uint64_t seed,
               const std::string& out) {
  Graph g = load_graph(data);
  Graph attacked = random_attack(g, ptb_rate, seed);
  ensure_dir(out);
  save_graph(out, attacked);
  std::cout << "attack: m " << g.m << " -> " << attacked.m << " (+"
            << (attacked.m - g.m) << " edges) written to " << out << "\n";
  return 0;
}

int cmd_synth(const SynthSpec& spec, const std::string& out) {
  Graph g = synth_planted(spec);
  ensure_dir(out);
  save_graph(out, g);
  save_synth_spec(out, spec);
  std::cout << "synth: n=" << g.n << " m=" << g.m
            << " H_edge=" << format_double(edge_homophily(g))
            << " H_node=" << format_double(node_homophily(g)) << " -> " << out << "\n";
  return 0;
}

int cmd_stats(const std::string& data) {
  Graph g = load_graph(data);
  std::cout << "n: " << g.n << "\n";
  std::cout << "m_undirected: " << g.m << "\n";
  std::cout << "adjacency_entries: " << 2 * g.m << "\n";
  if (g.has_labels()) {
    std::printf("H_edge: %.3f\n", edge_homophily(g));
    std::printf("H_node: %.3f\n", node_homophily(g));
  } else {
    std::cout << "H_edge: n/a (no labels)\nH_node: n/a (no labels)\n";
  }
  if (g.splits.present()) {
    std::cout << "splits: " << g.splits.train.size() << "/" << g.splits.val.size() << "/"
              << g.splits.test.size() << "\n";
  }
  return 0;
}

int cmd_simhist(const std::string& data, const std::string& repr_path, int pivots, int bins,
                std::uint64_t seed, const std::string& out) {
  Graph g = load_graph(data);
  Matrix h = repr_path.empty() ? g.features : load_matrix_tsv(repr_path);
  if (h.rows() != g.n) throw DataError("simhist: representation rows do not match node count");
  SimilarityHistogram hist = similarity_histogram(h, g, pivots, bins, seed);
  ensure_dir(out);
  write_similarity_histogram(out + "/simhist.tsv", hist);
  std::cout << "simhist: " << bins << " bins over " << g.m << " connected and " << pivots
            << " random pairs -> " << out << "/simhist.tsv\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"GREET: unsupervised node representations via edge-heterophily "
               "discrimination and dual-channel filtering"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Cap worker threads (0 = hardware)");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train and export representations");
  train_cmd->add_option("--data", train_args.data, "Dataset directory");
  train_cmd->add_option("--config", train_args.config, "Config JSON file");
  train_cmd->add_option("--preset", train_args.preset, "Named preset");
  train_cmd->add_option("--out", train_args.out, "Output directory");
  train_cmd->add_option("--cache", train_args.cache, "Preprocess cache directory");
  train_cmd->add_option("--resume", train_args.resume, "Resume from checkpoint file");
  train_cmd->add_option("--set", train_args.overrides, "Override config key=value")
      ->take_all();
  train_cmd->add_option("--seed", train_args.seed, "Run seed")
      ->check(CLI::NonNegativeNumber);

  std::string eval_repr, eval_data, eval_out = ".";
  int eval_repeats = 10;
  std::uint64_t eval_seed = 0;
  auto* eval_cmd = app.add_subcommand("eval", "Frozen-representation classification");
  eval_cmd->add_option("--repr", eval_repr, "repr.tsv file")->required();
  eval_cmd->add_option("--data", eval_data, "Dataset directory")->required();
  eval_cmd->add_option("--repeats", eval_repeats, "Evaluation repeats");
  eval_cmd->add_option("--seed", eval_seed, "Evaluation seed");
  eval_cmd->add_option("--out", eval_out, "Directory for eval_report.json");

  std::string attack_data, attack_out;
  double ptb_rate = 0.0;
  std::uint64_t attack_seed = 0;
  auto* attack_cmd = app.add_subcommand("attack", "Random structure attack (edge insertion)");
  attack_cmd->add_option("--data", attack_data, "Dataset directory")->required();
  attack_cmd->add_option("--ptb-rate", ptb_rate, "New edges as a fraction of m")->required();
  attack_cmd->add_option("--seed", attack_seed, "Attack seed");
  attack_cmd->add_option("--out", attack_out, "Output dataset directory")->required();

  SynthSpec spec;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Planted-partition synthetic graph");
  synth_cmd->add_option("--n", spec.n, "Node count");
  synth_cmd->add_option("--classes", spec.classes, "Class count");
  synth_cmd->add_option("--p-in", spec.p_in, "Intra-class edge probability");
  synth_cmd->add_option("--p-out", spec.p_out, "Inter-class edge probability");
  synth_cmd->add_option("--mu-sep", spec.mu_sep, "Class mean separation");
  synth_cmd->add_option("--sigma", spec.sigma, "Feature noise std");
  synth_cmd->add_option("--d-f", spec.d_f, "Feature dimension");
  synth_cmd->add_option("--seed", spec.seed, "Generator seed");
  synth_cmd->add_option("--train-frac", spec.train_frac, "Train split fraction");
  synth_cmd->add_option("--val-frac", spec.val_frac, "Validation split fraction");
  synth_cmd->add_option("--out", synth_out, "Output dataset directory")->required();

  std::string stats_data;
  auto* stats_cmd = app.add_subcommand("stats", "Graph statistics and homophily");
  stats_cmd->add_option("--data", stats_data, "Dataset directory")->required();

  std::string sim_data, sim_repr, sim_out = ".";
  int sim_pivots = 10000, sim_bins = 50;
  std::uint64_t sim_seed = 0;
  auto* sim_cmd = app.add_subcommand("simhist", "Cosine-similarity histogram (CNP vs RNP)");
  sim_cmd->add_option("--data", sim_data, "Dataset directory")->required();
  sim_cmd->add_option("--repr", sim_repr, "Optional repr.tsv (default: raw features)");
  sim_cmd->add_option("--pivots", sim_pivots, "Random pair count");
  sim_cmd->add_option("--bins", sim_bins, "Histogram bins");
  sim_cmd->add_option("--seed", sim_seed, "Pair-sampling seed");
  sim_cmd->add_option("--out", sim_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (threads > 0) set_max_threads(threads);
  train_args.seed_given = train_cmd->count("--seed") > 0;

  try {
    if (*train_cmd) return cmd_train(train_args);
    if (*eval_cmd) return cmd_eval(eval_repr, eval_data, eval_repeats, eval_seed, eval_out);
    if (*attack_cmd) return cmd_attack(attack_data, ptb_rate, attack_seed, attack_out);
    if (*synth_cmd) return cmd_synth(spec, synth_out);
    if (*stats_cmd) return cmd_stats(stats_data);
    if (*sim_cmd) return cmd_simhist(sim_data, sim_repr, sim_pivots, sim_bins, sim_seed, sim_out);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace greet
