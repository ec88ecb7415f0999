#include "iidwb/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <optional>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "iidwb/icp.hpp"
#include "iidwb/identifier.hpp"
#include "iidwb/rng.hpp"

namespace iidwb {

double jaccard(const NodeSet& z, const NodeSet& pa) {
  if (z.empty() && pa.empty()) return 1.0;
  std::size_t common = 0;
  for (NodeId v : z) common += pa.count(v);
  const std::size_t uni = z.size() + pa.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

double fwer(std::span<const RunRecord> records) {
  if (records.empty()) throw std::invalid_argument("fwer: no records");
  std::size_t violated = 0;
  for (const RunRecord& r : records) violated += r.violated ? 1 : 0;
  return static_cast<double>(violated) / static_cast<double>(records.size());
}

Summaries aggregate(std::span<const RunRecord> records) {
  std::map<std::pair<Method, int>, std::vector<RunRecord>> groups;
  for (const RunRecord& r : records) groups[{r.method, r.confounders}].push_back(r);
  Summaries out;
  for (auto& [key, rs] : groups) {
    std::sort(rs.begin(), rs.end(),
              [](const RunRecord& a, const RunRecord& b) { return a.dag_id < b.dag_id; });
    CellSummary s;
    s.n = rs.size();
    double sum = 0.0;
    for (const RunRecord& r : rs) sum += r.js;
    s.mean_js = sum / static_cast<double>(s.n);
    if (s.n > 1) {
      double ss = 0.0;
      for (const RunRecord& r : rs) ss += (r.js - s.mean_js) * (r.js - s.mean_js);
      s.sd_js = std::sqrt(ss / static_cast<double>(s.n - 1));
    }
    s.fwer = fwer(rs);
    out[key.first][key.second] = s;
  }
  return out;
}

std::uint64_t batch_fingerprint(std::span<const SampleBatch> batches) {
  std::uint64_t h = fnv1a(nullptr, 0);
  for (const SampleBatch& b : batches) {
    const std::int64_t dims[3] = {b.env.id, b.rows(), b.cols()};
    h = fnv1a(dims, sizeof dims, h);
    for (const Intervention& iv : b.env.interventions) {
      h = fnv1a(&iv.target, sizeof iv.target, h);
      h = fnv1a(&iv.value, sizeof iv.value, h);
    }
    h = fnv1a(b.data.data(), static_cast<std::size_t>(b.data.size()) * sizeof(double), h);
  }
  return h;
}

CellData generate_cell(const ExperimentConfig& cfg, std::size_t dag_id, int confounders) {
  Rng dag_rng = make_rng(cfg.master_seed, {tag("dag"), dag_id});
  const LinearGaussianScm base = cfg.fixed_example ? four_node_example() : random_scm(cfg.gen, dag_rng);
  Rng rng = make_rng(cfg.master_seed, {tag("cell"), dag_id, static_cast<std::uint64_t>(confounders)});
  LinearGaussianScm scm = add_confounders(base, confounders, rng, cfg.gen);
  const std::vector<Environment> envs =
      single_target_environments(scm, cfg.gen, rng, cfg.observational_env);
  std::vector<SampleBatch> batches;
  batches.reserve(envs.size());
  for (const Environment& env : envs) batches.push_back(sample(scm, env, cfg.samples_per_env, rng));
  return CellData{std::move(scm), std::move(batches)};
}

namespace {

struct TaskOutput {
  std::vector<RunRecord> records;
  std::vector<CellFailure> failures;
};

TaskOutput run_task(const ExperimentConfig& cfg, std::size_t dag_id, int level) {
  TaskOutput out;
  std::optional<CellData> generated;
  try {
    generated = generate_cell(cfg, dag_id, level);
  } catch (const std::exception& e) {
    for (Method m : cfg.methods)
      out.failures.push_back(CellFailure{dag_id, m, level, std::string("data generation: ") + e.what()});
    return out;
  }
  const CellData& cell = *generated;
  const NodeSet pa0 = parents(cell.scm, kOutcome);
  const std::uint64_t fingerprint = batch_fingerprint(cell.batches);
  const auto lvl = static_cast<std::uint64_t>(level);

  for (Method m : cfg.methods) {
    try {
      const auto t0 = std::chrono::steady_clock::now();
      NodeSet z;
      if (m == Method::iid) {
        Rng rng = make_rng(cfg.master_seed, {tag("iid"), dag_id, lvl});
        z = identify_parents(cell.batches, cfg.train, rng).estimated_set;
      } else {
        IcpConfig icp = cfg.icp;
        icp.seed = derive_seed(cfg.master_seed, {tag("icp"), dag_id, lvl, cfg.icp.seed});
        z = icp_identify(cell.batches, icp).estimated_set;
      }
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      RunRecord r;
      r.dag_id = dag_id;
      r.method = m;
      r.confounders = level;
      r.js = jaccard(z, pa0);
      r.violated = !std::includes(pa0.begin(), pa0.end(), z.begin(), z.end());
      r.z = std::move(z);
      r.pa0 = pa0;
      r.wall_time = secs;
      r.batch_hash = fingerprint;
      out.records.push_back(std::move(r));
    } catch (const std::exception& e) {
      out.failures.push_back(CellFailure{dag_id, m, level, e.what()});
    }
  }
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string render_set(const NodeSet& s) {
  std::string out;
  for (NodeId v : s) {
    if (!out.empty()) out += '|';
    out += std::to_string(v);
  }
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::size_t threads) {
  validate(cfg);
  std::vector<int> levels = cfg.confounder_levels;
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  std::vector<std::pair<std::size_t, int>> tasks;
  for (std::size_t d = 0; d < cfg.num_dags; ++d)
    for (int level : levels) tasks.emplace_back(d, level);

  std::vector<TaskOutput> outputs(tasks.size());
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = std::min(threads, tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++)
      outputs[i] = run_task(cfg, tasks[i].first, tasks[i].second);
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  ExperimentResult result;
  for (TaskOutput& o : outputs) {
    for (RunRecord& r : o.records) result.records.push_back(std::move(r));
    for (CellFailure& f : o.failures) result.report.failures.push_back(std::move(f));
  }
  auto key = [](const auto& r) { return std::make_tuple(r.dag_id, r.confounders, r.method); };
  std::sort(result.records.begin(), result.records.end(),
            [&](const RunRecord& a, const RunRecord& b) { return key(a) < key(b); });
  std::sort(result.report.failures.begin(), result.report.failures.end(),
            [&](const CellFailure& a, const CellFailure& b) { return key(a) < key(b); });

  result.report.cells = aggregate(result.records);
  result.report.config = cfg;
  result.report.config_hash = config_hash(cfg);
  result.report.master_seed = cfg.master_seed;
  result.report.timestamp = utc_timestamp();
  return result;
}

void write_records_csv(std::ostream& out, std::span<const RunRecord> records) {
  out << kRecordHeader << '\n';
  char num[64];
  for (const RunRecord& r : records) {
    out << r.dag_id << ',' << to_string(r.method) << ',' << r.confounders << ',' << render_set(r.z)
        << ',' << render_set(r.pa0) << ',';
    std::snprintf(num, sizeof num, "%.17g", r.js);
    out << num << ',' << (r.violated ? "true" : "false") << ',';
    std::snprintf(num, sizeof num, "%.6f", r.wall_time);
    out << num << '\n';
  }
}

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cols;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cols.push_back(cell);
  if (!line.empty() && line.back() == ',') cols.emplace_back();
  return cols;
}

const std::vector<std::string>& expected_columns() {
  static const std::vector<std::string> cols = split_row(kRecordHeader);
  return cols;
}

template <typename T>
T parse_field(const std::string& text, std::size_t line, std::size_t col) {
  std::istringstream in(text);
  T v{};
  in >> v;
  if (text.empty() || in.fail() || !in.eof())
    throw CsvSchemaError("line " + std::to_string(line) + ", column '" + expected_columns()[col] +
                         "': cannot parse '" + text + "'");
  return v;
}

NodeSet parse_set(const std::string& text, std::size_t line, std::size_t col) {
  NodeSet s;
  if (text.empty()) return s;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, '|')) s.insert(parse_field<NodeId>(item, line, col));
  return s;
}

}  // namespace

std::vector<RunRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw CsvSchemaError("missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_row(line);
  const std::vector<std::string>& want = expected_columns();
  for (std::size_t c = 0; c < std::max(header.size(), want.size()); ++c) {
    if (c >= header.size())
      throw CsvSchemaError("header: missing column '" + want[c] + "'");
    if (c >= want.size())
      throw CsvSchemaError("header: unexpected column '" + header[c] + "'");
    if (header[c] != want[c])
      throw CsvSchemaError("header: column " + std::to_string(c + 1) + " is '" + header[c] +
                           "', expected '" + want[c] + "'");
  }

  std::vector<RunRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cols = split_row(line);
    if (cols.size() != want.size())
      throw CsvSchemaError("line " + std::to_string(line_no) + ": expected " +
                           std::to_string(want.size()) + " columns, found " +
                           std::to_string(cols.size()));
    RunRecord r;
    r.dag_id = parse_field<std::size_t>(cols[0], line_no, 0);
    try {
      r.method = parse_method(cols[1]);
    } catch (const std::invalid_argument&) {
      throw CsvSchemaError("line " + std::to_string(line_no) + ", column 'method': unknown method '" +
                           cols[1] + "'");
    }
    r.confounders = parse_field<int>(cols[2], line_no, 2);
    r.z = parse_set(cols[3], line_no, 3);
    r.pa0 = parse_set(cols[4], line_no, 4);
    r.js = parse_field<double>(cols[5], line_no, 5);
    if (!(r.js >= 0.0 && r.js <= 1.0))
      throw CsvSchemaError("line " + std::to_string(line_no) + ", column 'js': bad value '" +
                           cols[5] + "'");
    if (cols[6] != "true" && cols[6] != "false")
      throw CsvSchemaError("line " + std::to_string(line_no) + ", column 'violated': bad value '" +
                           cols[6] + "'");
    r.violated = cols[6] == "true";
    r.wall_time = parse_field<double>(cols[7], line_no, 7);
    records.push_back(std::move(r));
  }
  return records;
}

std::string report_json(const Report& report, bool with_timestamp) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["master_seed"] = report.master_seed;
  char hash[24];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(report.config_hash));
  j["config_hash"] = hash;
  if (with_timestamp) j["timestamp"] = report.timestamp;

  ordered_json results = ordered_json::object();
  for (const auto& [method, levels] : report.cells) {
    ordered_json per_level = ordered_json::object();
    for (const auto& [level, s] : levels) {
      per_level[std::to_string(level)] =
          ordered_json{{"mean_js", s.mean_js}, {"sd_js", s.sd_js}, {"fwer", s.fwer}, {"n", s.n}};
    }
    results[to_string(method)] = std::move(per_level);
  }
  j["results"] = std::move(results);

  ordered_json failures = ordered_json::array();
  for (const CellFailure& f : report.failures) {
    failures.push_back(ordered_json{{"dag_id", f.dag_id},
                                    {"method", to_string(f.method)},
                                    {"confounders", f.confounders},
                                    {"error", f.message}});
  }
  j["failures"] = std::move(failures);

  ordered_json config = ordered_json::object();
  for (const ConfigEntry& e : config_entries(report.config)) config[e.section][e.key] = e.value;
  j["config"] = std::move(config);
  return j.dump(2) + "\n";
}

}  // namespace iidwb
