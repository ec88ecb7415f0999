#include "iidwb/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string_view>

#include "iidwb/rng.hpp"

namespace iidwb {

std::string to_string(Method m) { return m == Method::iid ? "iid" : "icp"; }

Method parse_method(const std::string& name) {
  if (name == "iid") return Method::iid;
  if (name == "icp") return Method::icp;
  throw std::invalid_argument("unknown method '" + name + "' (expected iid or icp)");
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.num_dags < 1) throw std::invalid_argument("num_dags must be >= 1");
  if (cfg.samples_per_env < 10) throw std::invalid_argument("samples_per_env must be >= 10");
  if (cfg.confounder_levels.empty()) throw std::invalid_argument("confounder_levels is empty");
  for (int c : cfg.confounder_levels)
    if (c < 0 || c > 2) throw std::invalid_argument("confounder_levels entries must be 0, 1 or 2");
  if (cfg.methods.empty()) throw std::invalid_argument("methods is empty");
  const auto g = cfg.gen;
  if (g.nodes_min < 2 || g.nodes_max < g.nodes_min)
    throw std::invalid_argument("gen: need 2 <= nodes_min <= nodes_max");
  if (!(g.edge_prob >= 0.0 && g.edge_prob <= 1.0))
    throw std::invalid_argument("gen: edge_prob must lie in [0, 1]");
  if (!(g.weight_min > 0.0 && g.weight_max >= g.weight_min))
    throw std::invalid_argument("gen: need 0 < weight_min <= weight_max");
  if (!(g.sign_flip_prob >= 0.0 && g.sign_flip_prob <= 1.0))
    throw std::invalid_argument("gen: sign_flip_prob must lie in [0, 1]");
  if (!(g.noise_std_min > 0.0 && g.noise_std_max >= g.noise_std_min))
    throw std::invalid_argument("gen: need 0 < noise_std_min <= noise_std_max");
  if (!(g.intervention_value_max >= g.intervention_value_min))
    throw std::invalid_argument("gen: intervention_value_max < intervention_value_min");
  if (g.max_attempts < 1) throw std::invalid_argument("gen: max_attempts must be >= 1");
  validate(cfg.train);
  validate(cfg.icp);
}

ConfigError::ConfigError(std::size_t line, std::string key, const std::string& message)
    : std::runtime_error(
          (line ? "line " + std::to_string(line) + ": " : std::string()) +
          (key.empty() ? std::string() : "key '" + key + "': ") + message),
      line_(line),
      key_(std::move(key)) {}

namespace {

std::string trim(std::string_view s) {
  auto b = s.begin();
  auto e = s.end();
  while (b != e && std::isspace(static_cast<unsigned char>(*b))) ++b;
  while (e != b && std::isspace(static_cast<unsigned char>(*(e - 1)))) --e;
  return std::string(b, e);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) throw std::invalid_argument("empty list entry");
    out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw std::invalid_argument("not a valid number: '" + v + "'");
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw std::invalid_argument("expected true or false, got '" + v + "'");
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}
std::string fmt(std::size_t v) { return std::to_string(v); }
std::string fmt(std::uint64_t v, int) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

struct Field {
  const char* section;
  const char* key;
  const char* comment;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

#define IIDWB_SIZE(sec, name, member, doc)                                              \
  Field {                                                                               \
    sec, name, doc, [](const ExperimentConfig& c) { return fmt(c.member); },            \
        [](ExperimentConfig& c, const std::string& v) { c.member = parse_number<std::size_t>(v); } \
  }
#define IIDWB_REAL(sec, name, member, doc)                                              \
  Field {                                                                               \
    sec, name, doc, [](const ExperimentConfig& c) { return fmt(c.member); },            \
        [](ExperimentConfig& c, const std::string& v) { c.member = parse_number<double>(v); } \
  }
#define IIDWB_SEED(sec, name, member, doc)                                              \
  Field {                                                                               \
    sec, name, doc, [](const ExperimentConfig& c) { return fmt(c.member, 0); },         \
        [](ExperimentConfig& c, const std::string& v) { c.member = parse_number<std::uint64_t>(v); } \
  }
#define IIDWB_BOOL(sec, name, member, doc)                                              \
  Field {                                                                               \
    sec, name, doc, [](const ExperimentConfig& c) { return fmt(c.member); },            \
        [](ExperimentConfig& c, const std::string& v) { c.member = parse_bool(v); }     \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      IIDWB_SIZE("experiment", "num_dags", num_dags, "random DAGs per sweep"),
      IIDWB_SIZE("experiment", "samples_per_env", samples_per_env, "draws per environment (>= 10)"),
      IIDWB_SEED("experiment", "master_seed", master_seed,
                 "root of every derived seed; --seed and WORKBENCH_SEED override it"),
      Field{"experiment", "confounder_levels", "comma-separated subset of 0, 1, 2",
            [](const ExperimentConfig& c) {
              std::string s;
              for (std::size_t i = 0; i < c.confounder_levels.size(); ++i)
                s += (i ? ", " : "") + std::to_string(c.confounder_levels[i]);
              return s;
            },
            [](ExperimentConfig& c, const std::string& v) {
              c.confounder_levels.clear();
              for (const std::string& item : split_list(v)) c.confounder_levels.push_back(parse_number<int>(item));
            }},
      Field{"experiment", "methods", "comma-separated subset of iid, icp",
            [](const ExperimentConfig& c) {
              std::string s;
              for (std::size_t i = 0; i < c.methods.size(); ++i)
                s += (i ? ", " : "") + to_string(c.methods[i]);
              return s;
            },
            [](ExperimentConfig& c, const std::string& v) {
              c.methods.clear();
              for (const std::string& item : split_list(v)) c.methods.push_back(parse_method(item));
            }},
      IIDWB_BOOL("experiment", "observational_env", observational_env,
                 "also sample an environment without interventions"),
      IIDWB_BOOL("experiment", "fixed_example", fixed_example,
                 "use the fixed x0 <- x1, x2; x3 <- x0 model instead of random DAGs"),

      IIDWB_SIZE("gen", "nodes_min", gen.nodes_min, "observed nodes, lower bound"),
      IIDWB_SIZE("gen", "nodes_max", gen.nodes_max, "observed nodes, upper bound"),
      IIDWB_REAL("gen", "edge_prob", gen.edge_prob, "probability of each forward edge"),
      IIDWB_REAL("gen", "weight_min", gen.weight_min, "edge weight magnitude range"),
      IIDWB_REAL("gen", "weight_max", gen.weight_max, nullptr),
      IIDWB_REAL("gen", "sign_flip_prob", gen.sign_flip_prob, "probability an edge weight is negative"),
      IIDWB_REAL("gen", "noise_std_min", gen.noise_std_min, "noise standard deviation range"),
      IIDWB_REAL("gen", "noise_std_max", gen.noise_std_max, nullptr),
      IIDWB_REAL("gen", "intervention_value_min", gen.intervention_value_min,
                 "do() values are uniform on this range"),
      IIDWB_REAL("gen", "intervention_value_max", gen.intervention_value_max, nullptr),
      IIDWB_SEED("gen", "seed", gen.seed, "standalone generation only; sweeps derive seeds from master_seed"),
      IIDWB_BOOL("gen", "require_outcome_parent", gen.require_outcome_parent,
                 "redraw DAGs in which x0 has no parent"),
      IIDWB_SIZE("gen", "max_attempts", gen.max_attempts, nullptr),

      IIDWB_SIZE("train", "epochs_per_round", train.epochs_per_round,
                 "mini-batch gradient steps per training run"),
      IIDWB_SIZE("train", "rounds", train.rounds, "cap on penalties; 0 means one per candidate"),
      IIDWB_SIZE("train", "hidden_width", train.hidden_width, nullptr),
      IIDWB_REAL("train", "lr", train.learning_rate, "initial step size, cosine-decayed to zero"),
      IIDWB_REAL("train", "momentum", train.momentum, nullptr),
      IIDWB_SIZE("train", "batch_size", train.batch_size, nullptr),
      IIDWB_REAL("train", "tau", train.penalty_threshold, "absolute FID threshold, used when tau_auto = false"),
      IIDWB_BOOL("train", "tau_auto", train.tau_auto, "calibrate tau from label permutations"),
      IIDWB_REAL("train", "tau_factor", train.tau_factor, "tau = factor x median permuted max FID"),
      IIDWB_SIZE("train", "calibration_permutations", train.calibration_permutations, nullptr),
      IIDWB_REAL("train", "holdout_fraction", train.holdout_fraction,
                 "tail fraction of each batch used for scoring"),

      IIDWB_REAL("icp", "alpha", icp.alpha, "level of each subset test"),
      IIDWB_SIZE("icp", "max_subset_size", icp.max_subset_size, "0 means no limit"),
      Field{"icp", "test", "mean_variance or energy_permutation",
            [](const ExperimentConfig& c) {
              return std::string(c.icp.test == InvarianceTest::mean_variance ? "mean_variance"
                                                                             : "energy_permutation");
            },
            [](ExperimentConfig& c, const std::string& v) {
              if (v == "mean_variance")
                c.icp.test = InvarianceTest::mean_variance;
              else if (v == "energy_permutation")
                c.icp.test = InvarianceTest::energy_permutation;
              else
                throw std::invalid_argument("unknown test '" + v + "'");
            }},
      IIDWB_SIZE("icp", "max_subsets", icp.max_subsets, "refuse to enumerate more subsets than this"),
      IIDWB_SIZE("icp", "permutations", icp.permutations, "energy_permutation only"),
      IIDWB_SEED("icp", "seed", icp.seed, "energy_permutation only"),
  };
  return table;
}

#undef IIDWB_SIZE
#undef IIDWB_REAL
#undef IIDWB_SEED
#undef IIDWB_BOOL

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string section;
  std::set<std::string> seen;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto cut = raw.find_first_of("#;");
    const std::string line = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(line_no, "", "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      const bool known = std::any_of(fields().begin(), fields().end(),
                                     [&](const Field& f) { return section == f.section; });
      if (!known) throw ConfigError(line_no, "", "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line_no, "", "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError(line_no, key, "key outside of a section");
    const std::string full = section + "." + key;
    const auto it = std::find_if(fields().begin(), fields().end(), [&](const Field& f) {
      return section == f.section && key == f.key;
    });
    if (it == fields().end()) throw ConfigError(line_no, full, "unknown key");
    if (!seen.insert(full).second) throw ConfigError(line_no, full, "duplicate key");
    if (value.empty()) throw ConfigError(line_no, full, "missing value");
    try {
      it->set(cfg, value);
    } catch (const std::exception& e) {
      throw ConfigError(line_no, full, e.what());
    }
  }
  try {
    validate(cfg);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(0, "", e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "", "cannot read " + path.string());
  return parse_config(in);
}

void write_config(std::ostream& out, const ExperimentConfig& cfg, bool commented) {
  if (commented) {
    out << "# iidwb experiment configuration.\n"
           "# Flat [section] key = value; '#' or ';' starts a comment.\n";
  }
  std::string section;
  for (const Field& f : fields()) {
    if (section != f.section) {
      section = f.section;
      out << (commented ? "\n" : "") << '[' << section << "]\n";
    }
    if (commented && f.comment) out << "# " << f.comment << '\n';
    out << f.key << " = " << f.get(cfg) << '\n';
  }
}

std::vector<ConfigEntry> config_entries(const ExperimentConfig& cfg) {
  std::vector<ConfigEntry> out;
  for (const Field& f : fields()) out.push_back(ConfigEntry{f.section, f.key, f.get(cfg)});
  return out;
}

std::string canonical_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  write_config(out, cfg, false);
  return out.str();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  const std::string text = canonical_config(cfg);
  return fnv1a(text.data(), text.size());
}

}  // namespace iidwb
