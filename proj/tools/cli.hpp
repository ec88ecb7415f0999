#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "iidwb/config.hpp"
#include "iidwb/harness.hpp"

namespace iidwb::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitPartial = 2;

inline constexpr const char* kRecordsFile = "records.csv";
inline constexpr const char* kReportFile = "report.json";
inline constexpr const char* kTableFile = "table.txt";

/// Flag value if given, else WORKBENCH_SEED if set, else nothing. Throws
/// std::invalid_argument if the variable is not an unsigned integer.
std::optional<std::uint64_t> resolve_seed(std::optional<std::uint64_t> flag);

/// One DAG, the fixed four-node model, no confounders, ICP only.
ExperimentConfig demo_config();

int cli_init(const std::filesystem::path& path, bool force, std::ostream& out, std::ostream& err);

int cli_run(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
            std::optional<std::uint64_t> seed, std::size_t threads, std::ostream& out,
            std::ostream& err);

/// Runs `cfg` and writes records.csv and report.json into `out_dir`.
int run_and_write(ExperimentConfig cfg, const std::filesystem::path& out_dir,
                  std::optional<std::uint64_t> seed, std::size_t threads, std::ostream& out,
                  std::ostream& err);

/// Prints the method x confounder table and writes it to table.txt next to
/// the CSV.
int cli_report(const std::filesystem::path& csv_path, std::ostream& out, std::ostream& err);

int cli_demo(const std::filesystem::path& out_dir, std::optional<std::uint64_t> seed,
             std::size_t threads, std::ostream& out, std::ostream& err);

/// Rows: methods; columns: 2, 1, 0 confounders; cells "mean_js (fwer)".
std::string render_table(const Summaries& cells);

}  // namespace iidwb::cli
