#include "cli.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

namespace iidwb::cli {

namespace fs = std::filesystem;

std::optional<std::uint64_t> resolve_seed(std::optional<std::uint64_t> flag) {
  if (flag) return flag;
  const char* env = std::getenv("WORKBENCH_SEED");
  if (!env || !*env) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (errno || *end || *env == '-')
    throw std::invalid_argument(std::string("WORKBENCH_SEED is not an unsigned integer: ") + env);
  return static_cast<std::uint64_t>(v);
}

ExperimentConfig demo_config() {
  ExperimentConfig cfg;
  cfg.num_dags = 1;
  cfg.fixed_example = true;
  cfg.confounder_levels = {0};
  cfg.methods = {Method::icp};
  cfg.samples_per_env = 5000;
  return cfg;
}

int cli_init(const fs::path& path, bool force, std::ostream& out, std::ostream& err) {
  if (fs::exists(path) && !force) {
    err << "error: " << path.string() << " exists; pass --force to overwrite\n";
    return kExitUsage;
  }
  std::ofstream file(path, std::ios::trunc);
  if (!file) {
    err << "error: cannot write " << path.string() << '\n';
    return kExitUsage;
  }
  write_config(file, ExperimentConfig{});
  out << "wrote " << path.string() << '\n';
  return kExitOk;
}

int run_and_write(ExperimentConfig cfg, const fs::path& out_dir, std::optional<std::uint64_t> seed,
                  std::size_t threads, std::ostream& out, std::ostream& err) {
  if (seed) cfg.master_seed = *seed;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    err << "error: cannot create " << out_dir.string() << ": " << ec.message() << '\n';
    return kExitUsage;
  }
  const ExperimentResult result = run_experiment(cfg, threads);
  {
    std::ofstream csv(out_dir / kRecordsFile, std::ios::trunc);
    write_records_csv(csv, result.records);
    std::ofstream json(out_dir / kReportFile, std::ios::trunc);
    json << report_json(result.report);
    if (!csv || !json) {
      err << "error: failed writing results to " << out_dir.string() << '\n';
      return kExitUsage;
    }
  }
  out << render_table(result.report.cells);
  out << result.records.size() << " records written to " << (out_dir / kRecordsFile).string() << '\n';
  if (!result.report.failures.empty()) {
    for (const CellFailure& f : result.report.failures) {
      err << "cell failed: dag " << f.dag_id << ", " << to_string(f.method) << ", "
          << f.confounders << " confounders: " << f.message << '\n';
    }
    return kExitPartial;
  }
  return kExitOk;
}

int cli_run(const fs::path& config_path, const fs::path& out_dir, std::optional<std::uint64_t> seed,
            std::size_t threads, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
    seed = resolve_seed(seed);
  } catch (const std::exception& e) {
    err << "error: " << config_path.string() << ": " << e.what() << '\n';
    return kExitUsage;
  }
  return run_and_write(std::move(cfg), out_dir, seed, threads, out, err);
}

std::string render_table(const Summaries& cells) {
  static const int columns[] = {2, 1, 0};
  std::ostringstream s;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-8s", "method");
  s << buf;
  for (int c : columns) {
    std::snprintf(buf, sizeof buf, "  %-14s", (std::to_string(c) + " confounders").c_str());
    s << buf;
  }
  s << '\n';
  for (const auto& [method, levels] : cells) {
    std::snprintf(buf, sizeof buf, "%-8s", to_string(method).c_str());
    s << buf;
    for (int c : columns) {
      const auto it = levels.find(c);
      if (it == levels.end()) {
        std::snprintf(buf, sizeof buf, "  %-14s", "-");
      } else {
        char cell[32];
        std::snprintf(cell, sizeof cell, "%.3f (%.2f)", it->second.mean_js, it->second.fwer);
        std::snprintf(buf, sizeof buf, "  %-14s", cell);
      }
      s << buf;
    }
    s << '\n';
  }
  return s.str();
}

int cli_report(const fs::path& csv_path, std::ostream& out, std::ostream& err) {
  std::ifstream in(csv_path);
  if (!in) {
    err << "error: cannot read " << csv_path.string() << '\n';
    return kExitUsage;
  }
  std::vector<RunRecord> records;
  try {
    if (in.peek() == std::ifstream::traits_type::eof()) {
      err << "no records in " << csv_path.string() << '\n';
      return kExitUsage;
    }
    records = read_records_csv(in);
  } catch (const CsvSchemaError& e) {
    err << "error: " << csv_path.string() << ": " << e.what() << '\n';
    return kExitUsage;
  }
  if (records.empty()) {
    err << "no records in " << csv_path.string() << '\n';
    return kExitUsage;
  }
  const std::string table = render_table(aggregate(records));
  out << table;
  const fs::path table_path = csv_path.parent_path() / kTableFile;
  std::ofstream file(table_path, std::ios::trunc);
  file << table;
  if (!file) {
    err << "error: cannot write " << table_path.string() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

int cli_demo(const fs::path& out_dir, std::optional<std::uint64_t> seed, std::size_t threads,
             std::ostream& out, std::ostream& err) {
  try {
    seed = resolve_seed(seed);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  out << "x0 <- 1.5 x1 - 1.0 x2; x3 <- 1.2 x0; one do() per candidate, 5000 draws each\n";
  return run_and_write(demo_config(), out_dir, seed, threads, out, err);
}

}  // namespace iidwb::cli
