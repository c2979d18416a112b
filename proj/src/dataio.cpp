#include "greet/dataio.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace greet {

namespace {

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

long parse_int_field(const std::string& field, const std::string& file, std::size_t line_no) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw DataError(file + ":" + std::to_string(line_no) + ": malformed integer '" + field +
                    "'");
  }
  return v;
}

double parse_double_field(const std::string& field, const std::string& file,
                          std::size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw DataError(file + ":" + std::to_string(line_no) + ": malformed number '" + field +
                    "'");
  }
  return v;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t end = line.find('\t', start);
    if (end == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, end - start));
    start = end + 1;
  }
  return fields;
}

}  // namespace

Graph load_graph(const std::string& dir) {
  const std::string features_path = dir + "/features.tsv";
  const std::string edges_path = dir + "/edges.tsv";
  if (!file_exists(features_path)) throw DataError("missing file: " + features_path);
  if (!file_exists(edges_path)) throw DataError("missing file: " + edges_path);

  auto feature_lines = split_lines(read_file(features_path));
  if (feature_lines.empty()) throw DataError(features_path + ": no rows");
  std::size_t d_f = split_tabs(feature_lines[0]).size();
  Matrix features(static_cast<Eigen::Index>(feature_lines.size()),
                  static_cast<Eigen::Index>(d_f));
  for (std::size_t i = 0; i < feature_lines.size(); ++i) {
    auto fields = split_tabs(feature_lines[i]);
    if (fields.size() != d_f) {
      throw DataError(features_path + ":" + std::to_string(i + 1) +
                      ": expected " + std::to_string(d_f) + " columns, got " +
                      std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < d_f; ++c) {
      features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          parse_double_field(fields[c], features_path, i + 1);
    }
  }

  std::vector<std::pair<std::int64_t, std::int64_t>> edge_list;
  auto edge_lines = split_lines(read_file(edges_path));
  for (std::size_t i = 0; i < edge_lines.size(); ++i) {
    if (edge_lines[i].empty()) continue;
    auto fields = split_tabs(edge_lines[i]);
    if (fields.size() != 2) {
      throw DataError(edges_path + ":" + std::to_string(i + 1) +
                      ": expected two tab-separated node ids");
    }
    edge_list.emplace_back(parse_int_field(fields[0], edges_path, i + 1),
                           parse_int_field(fields[1], edges_path, i + 1));
  }

  std::vector<int> labels;
  const std::string labels_path = dir + "/labels.tsv";
  if (file_exists(labels_path)) {
    auto label_lines = split_lines(read_file(labels_path));
    if (label_lines.size() != feature_lines.size()) {
      throw DataError(labels_path + ": " + std::to_string(label_lines.size()) +
                      " labels for " + std::to_string(feature_lines.size()) + " nodes");
    }
    labels.reserve(label_lines.size());
    for (std::size_t i = 0; i < label_lines.size(); ++i) {
      labels.push_back(static_cast<int>(parse_int_field(label_lines[i], labels_path, i + 1)));
    }
  }

  Splits splits;
  const std::string splits_path = dir + "/splits.json";
  if (file_exists(splits_path)) {
    auto j = nlohmann::json::parse(read_file(splits_path), nullptr, false);
    if (!j.is_object()) throw DataError(splits_path + ": not a JSON object");
    auto read_part = [&](const char* key) {
      std::vector<int> out;
      if (j.contains(key)) {
        if (!j[key].is_array()) throw DataError(splits_path + ": '" + key + "' is not an array");
        out = j[key].get<std::vector<int>>();
      }
      return out;
    };
    splits.train = read_part("train");
    splits.val = read_part("val");
    splits.test = read_part("test");
  }

  Graph g = build_graph(edge_list, std::move(features), std::move(labels), std::move(splits));
  std::string stats = "loaded " + dir + ": n=" + std::to_string(g.n) +
                      " m=" + std::to_string(g.m) +
                      " (directed entries=" + std::to_string(2 * g.m) + ")";
  if (g.has_labels()) {
    stats += " H_edge=" + format_double(edge_homophily(g)) +
             " H_node=" + format_double(node_homophily(g));
  }
  log_msg(LogLevel::info, stats);
  return g;
}

void save_graph(const std::string& dir, const Graph& g) {
  std::ostringstream edges;
  for (const auto& [i, j] : g.edges) edges << i << '\t' << j << '\n';
  atomic_write_file(dir + "/edges.tsv", edges.str());

  std::ostringstream feats;
  for (Eigen::Index i = 0; i < g.features.rows(); ++i) {
    for (Eigen::Index c = 0; c < g.features.cols(); ++c) {
      if (c > 0) feats << '\t';
      feats << format_double(g.features(i, c));
    }
    feats << '\n';
  }
  atomic_write_file(dir + "/features.tsv", feats.str());

  if (g.has_labels()) {
    std::ostringstream labels;
    for (int y : g.labels) labels << y << '\n';
    atomic_write_file(dir + "/labels.tsv", labels.str());
  }
  if (g.splits.present()) {
    nlohmann::json j;
    j["train"] = g.splits.train;
    j["val"] = g.splits.val;
    j["test"] = g.splits.test;
    atomic_write_file(dir + "/splits.json", j.dump() + "\n");
  }
}

Graph synth_planted(const SynthSpec& spec) {
  if (spec.classes < 2) throw DataError("synth_planted: need at least two classes");
  if (spec.classes > spec.d_f) {
    throw DataError("synth_planted: cannot build orthogonal class means with classes > d_f");
  }
  if (spec.p_in < 0 || spec.p_in > 1 || spec.p_out < 0 || spec.p_out > 1) {
    throw DataError("synth_planted: probabilities must lie in [0,1]");
  }
  if (!(spec.sigma > 0)) throw DataError("synth_planted: sigma must be positive");
  if (spec.n < 2) throw DataError("synth_planted: need at least two nodes");

  std::vector<int> labels(static_cast<std::size_t>(spec.n));
  for (int i = 0; i < spec.n; ++i) labels[static_cast<std::size_t>(i)] = i % spec.classes;

  std::mt19937_64 rng(derive_seed(spec.seed, rng_tag::synth));
  std::normal_distribution<double> noise(0.0, spec.sigma);
  Matrix features(spec.n, spec.d_f);
  for (int i = 0; i < spec.n; ++i) {
    for (int c = 0; c < spec.d_f; ++c) {
      double mean = (c == labels[static_cast<std::size_t>(i)]) ? spec.mu_sep : 0.0;
      features(i, c) = mean + noise(rng);
    }
  }

  std::vector<std::pair<std::int64_t, std::int64_t>> edges;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int i = 0; i < spec.n; ++i) {
    for (int j = i + 1; j < spec.n; ++j) {
      double p = labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]
                     ? spec.p_in
                     : spec.p_out;
      if (coin(rng) < p) edges.emplace_back(i, j);
    }
  }

  // Stratified splits so every class appears in every part.
  Splits splits;
  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(spec.classes));
  for (int i = 0; i < spec.n; ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  for (auto& ids : by_class) {
    std::shuffle(ids.begin(), ids.end(), rng);
    auto n_train = static_cast<std::size_t>(std::floor(spec.train_frac * ids.size()));
    auto n_val = static_cast<std::size_t>(std::floor(spec.val_frac * ids.size()));
    for (std::size_t t = 0; t < ids.size(); ++t) {
      if (t < n_train) {
        splits.train.push_back(ids[t]);
      } else if (t < n_train + n_val) {
        splits.val.push_back(ids[t]);
      } else {
        splits.test.push_back(ids[t]);
      }
    }
  }
  std::sort(splits.train.begin(), splits.train.end());
  std::sort(splits.val.begin(), splits.val.end());
  std::sort(splits.test.begin(), splits.test.end());

  return build_graph(edges, std::move(features), std::move(labels), std::move(splits));
}

void save_synth_spec(const std::string& dir, const SynthSpec& spec) {
  nlohmann::ordered_json j;
  j["n"] = spec.n;
  j["classes"] = spec.classes;
  j["p_in"] = spec.p_in;
  j["p_out"] = spec.p_out;
  j["mu_sep"] = spec.mu_sep;
  j["sigma"] = spec.sigma;
  j["d_f"] = spec.d_f;
  j["seed"] = spec.seed;
  j["train_frac"] = spec.train_frac;
  j["val_frac"] = spec.val_frac;
  atomic_write_file(dir + "/spec.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Config

namespace {

// Central field table; load, save and --set all go through it.
struct FieldSetter {
  const char* name;
  std::function<void(TrainConfig&, const nlohmann::json&)> set;
  std::function<nlohmann::json(const TrainConfig&)> get;
};

template <typename T>
T checked_number(const nlohmann::json& v, const char* name) {
  if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw DataError(std::string("config: '") + name + "' must be a string");
    return v.get<std::string>();
  } else {
    if (!v.is_number()) throw DataError(std::string("config: '") + name + "' must be a number");
    return v.get<T>();
  }
}

const std::vector<FieldSetter>& field_table() {
  static const std::vector<FieldSetter> fields = [] {
    std::vector<FieldSetter> f;
    auto add_int = [&f](const char* name, int TrainConfig::* member) {
      f.push_back({name,
                   [name, member](TrainConfig& c, const nlohmann::json& v) {
                     c.*member = checked_number<int>(v, name);
                   },
                   [member](const TrainConfig& c) { return nlohmann::json(c.*member); }});
    };
    auto add_double = [&f](const char* name, double TrainConfig::* member) {
      f.push_back({name,
                   [name, member](TrainConfig& c, const nlohmann::json& v) {
                     c.*member = checked_number<double>(v, name);
                   },
                   [member](const TrainConfig& c) { return nlohmann::json(c.*member); }});
    };
    auto add_string = [&f](const char* name, std::string TrainConfig::* member) {
      f.push_back({name,
                   [name, member](TrainConfig& c, const nlohmann::json& v) {
                     c.*member = checked_number<std::string>(v, name);
                   },
                   [member](const TrainConfig& c) { return nlohmann::json(c.*member); }});
    };
    add_int("t_o", &TrainConfig::t_o);
    add_int("t_i", &TrainConfig::t_i);
    add_double("mu_grl", &TrainConfig::mu_grl);
    add_double("mu_disc", &TrainConfig::mu_disc);
    add_double("alpha", &TrainConfig::alpha);
    add_int("l", &TrainConfig::l);
    add_int("l_p", &TrainConfig::l_p);
    add_int("l_mlp", &TrainConfig::l_mlp);
    add_double("gamma_hm", &TrainConfig::gamma_hm);
    add_double("gamma_ht", &TrainConfig::gamma_ht);
    add_int("k", &TrainConfig::k);
    // b accepts "fn" (full node) or an integer.
    f.push_back({"b",
                 [](TrainConfig& c, const nlohmann::json& v) {
                   if (v.is_string()) {
                     std::string s = v.get<std::string>();
                     std::transform(s.begin(), s.end(), s.begin(), ::tolower);
                     if (s != "fn" && s != "full-node") {
                       throw DataError("config: 'b' must be an integer or \"fn\"");
                     }
                     c.b = 0;
                   } else if (v.is_number()) {
                     c.b = v.get<int>();
                   } else {
                     throw DataError("config: 'b' must be an integer or \"fn\"");
                   }
                 },
                 [](const TrainConfig& c) {
                   return c.b <= 0 ? nlohmann::json("fn") : nlohmann::json(c.b);
                 }});
    add_double("p_f_hm", &TrainConfig::p_f_hm);
    add_double("p_f_ht", &TrainConfig::p_f_ht);
    add_double("p_e_hm", &TrainConfig::p_e_hm);
    add_double("p_e_ht", &TrainConfig::p_e_ht);
    add_double("tau_g", &TrainConfig::tau_g);
    add_double("tau_c", &TrainConfig::tau_c);
    add_double("lambda", &TrainConfig::lambda);
    add_int("d_s", &TrainConfig::d_s);
    add_int("d_i", &TrainConfig::d_i);
    add_int("d_r", &TrainConfig::d_r);
    add_int("d_p", &TrainConfig::d_p);
    f.push_back({"seed",
                 [](TrainConfig& c, const nlohmann::json& v) {
                   if (!v.is_number_unsigned() && !v.is_number_integer()) {
                     throw DataError("config: 'seed' must be a nonnegative integer");
                   }
                   c.seed = v.get<std::uint64_t>();
                 },
                 [](const TrainConfig& c) { return nlohmann::json(c.seed); }});
    add_string("data", &TrainConfig::data);
    add_string("out", &TrainConfig::out);
    add_string("knn_mode", &TrainConfig::knn_mode);
    add_int("b_k", &TrainConfig::b_k);
    // freeze_w: absent or null = learned weights.
    f.push_back({"freeze_w",
                 [](TrainConfig& c, const nlohmann::json& v) {
                   if (v.is_null()) {
                     c.freeze_w = std::numeric_limits<double>::quiet_NaN();
                   } else if (v.is_number()) {
                     c.freeze_w = v.get<double>();
                   } else {
                     throw DataError("config: 'freeze_w' must be a number or null");
                   }
                 },
                 [](const TrainConfig& c) {
                   return c.frozen_w() ? nlohmann::json(c.freeze_w) : nlohmann::json(nullptr);
                 }});
    return f;
  }();
  return fields;
}

}  // namespace

TrainConfig parse_config_json(const std::string& json_text) {
  auto j = nlohmann::json::parse(json_text, nullptr, false);
  if (!j.is_object()) throw DataError("config: not a JSON object");
  TrainConfig cfg;
  const auto& fields = field_table();
  for (auto it = j.begin(); it != j.end(); ++it) {
    auto match = std::find_if(fields.begin(), fields.end(),
                              [&](const FieldSetter& f) { return it.key() == f.name; });
    if (match == fields.end()) throw DataError("config: unknown key '" + it.key() + "'");
    match->set(cfg, it.value());
  }
  return cfg;
}

TrainConfig load_config(const std::string& path) {
  if (!file_exists(path)) throw DataError("missing config file: " + path);
  return parse_config_json(read_file(path));
}

std::string config_to_json(const TrainConfig& cfg) {
  nlohmann::ordered_json j;
  for (const auto& f : field_table()) j[f.name] = f.get(cfg);
  return j.dump(2) + "\n";
}

void save_config(const std::string& path, const TrainConfig& cfg) {
  atomic_write_file(path, config_to_json(cfg));
}

void apply_override(TrainConfig& cfg, const std::string& key_equals_value) {
  std::size_t eq = key_equals_value.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw DataError("--set expects key=value, got '" + key_equals_value + "'");
  }
  std::string key = key_equals_value.substr(0, eq);
  std::string value = key_equals_value.substr(eq + 1);
  const auto& fields = field_table();
  auto match = std::find_if(fields.begin(), fields.end(),
                            [&](const FieldSetter& f) { return key == f.name; });
  if (match == fields.end()) throw DataError("config: unknown key '" + key + "'");
  // Interpret the value as JSON when it parses, else as a bare string.
  nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
  if (parsed.is_discarded()) parsed = nlohmann::json(value);
  match->set(cfg, parsed);
}

namespace {

struct PresetRow {
  const char* name;
  int t_o;
  int t_i;
  double mu_disc;
  double alpha;
  int l_p;
  double gamma_hm;
  double gamma_ht;
  int k;
  int b;  // 0 = full node
  double p_f_hm;
  double p_f_ht;
  double p_e_hm;
  double p_e_ht;
};

// Benchmark grid rows plus the generator preset.
constexpr PresetRow kPresets[] = {
    {"cora", 400, 2, 1e-3, 0.5, 1, 0.5, 0.5, 20, 0, 0.8, 0.1, 0.8, 0.8},
    {"citeseer", 400, 2, 1e-3, 0.1, 2, 0.5, 0.5, 30, 0, 0.1, 0.1, 0.8, 0.1},
    {"pubmed", 800, 2, 1e-3, 0.1, 2, 0.5, 0.5, 0, 5000, 0.1, 0.5, 0.5, 0.1},
    {"wikics", 1500, 2, 1e-3, 0.1, 1, 0.5, 0.5, 30, 3000, 0.1, 0.1, 0.5, 0.5},
    {"amzcomp", 1500, 3, 1e-4, 0.3, 1, 0.1, 0.5, 10, 5000, 0.1, 0.1, 0.5, 0.1},
    {"amzphoto", 1500, 3, 1e-4, 0.3, 1, 0.5, 0.5, 30, 5000, 0.1, 0.1, 0.8, 0.5},
    {"cocs", 1500, 2, 1e-3, 0.5, 1, 0.1, 0.5, 30, 5000, 0.1, 0.5, 0.5, 0.1},
    {"cophysics", 800, 2, 1e-3, 0.1, 1, 0.5, 0.5, 25, 2000, 0.1, 0.5, 0.5, 0.1},
    {"cornell", 400, 2, 1e-3, 0.3, 2, 0.3, 0.3, 25, 0, 0.1, 0.5, 0.5, 0.1},
    {"texas", 400, 2, 1e-3, 0.5, 2, 0.5, 0.5, 20, 0, 0.5, 0.1, 0.1, 0.1},
    {"wisconsin", 400, 2, 1e-3, 0.5, 2, 0.5, 0.5, 25, 0, 0.1, 0.1, 0.1, 0.5},
    {"chameleon", 600, 2, 1e-3, 0.1, 1, 0.5, 0.5, 0, 0, 0.1, 0.5, 0.5, 0.1},
    {"squirrel", 1000, 2, 1e-3, 0.1, 2, 0.1, 0.3, 0, 0, 0.1, 0.1, 0.1, 0.8},
    {"actor", 1000, 2, 1e-3, 0.1, 2, 0.1, 0.5, 20, 0, 0.1, 0.5, 0.5, 0.8},
    // Texas-like settings sized for the bundled planted-partition graphs.
    {"synth", 150, 2, 1e-3, 0.5, 2, 0.5, 0.5, 20, 0, 0.1, 0.1, 0.1, 0.1},
};

}  // namespace

TrainConfig preset_config(const std::string& name) {
  for (const PresetRow& row : kPresets) {
    if (name == row.name) {
      TrainConfig cfg;
      cfg.t_o = row.t_o;
      cfg.t_i = row.t_i;
      cfg.mu_disc = row.mu_disc;
      cfg.alpha = row.alpha;
      cfg.l_p = row.l_p;
      cfg.gamma_hm = row.gamma_hm;
      cfg.gamma_ht = row.gamma_ht;
      cfg.k = row.k;
      cfg.b = row.b;
      cfg.p_f_hm = row.p_f_hm;
      cfg.p_f_ht = row.p_f_ht;
      cfg.p_e_hm = row.p_e_hm;
      cfg.p_e_ht = row.p_e_ht;
      return cfg;
    }
  }
  throw DataError("unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const PresetRow& row : kPresets) names.emplace_back(row.name);
  return names;
}

}  // namespace greet
