#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "iidwb/config.hpp"
#include "iidwb/scm.hpp"

namespace iidwb {

struct RunRecord {
  std::size_t dag_id = 0;
  Method method = Method::iid;
  int confounders = 0;
  NodeSet z;
  NodeSet pa0;
  double js = 0.0;
  bool violated = false;
  double wall_time = 0.0;  // seconds
  std::uint64_t batch_hash = 0;  // fingerprint of the data the method saw; not written to CSV
};

struct CellFailure {
  std::size_t dag_id = 0;
  Method method = Method::iid;
  int confounders = 0;
  std::string message;
};

struct CellSummary {
  double mean_js = 0.0;
  double sd_js = 0.0;  // sample SD across DAGs, 0 for a single record
  double fwer = 0.0;
  std::size_t n = 0;

  bool operator==(const CellSummary&) const = default;
};

using Summaries = std::map<Method, std::map<int, CellSummary>>;

struct Report {
  Summaries cells;
  std::vector<CellFailure> failures;
  ExperimentConfig config;
  std::uint64_t config_hash = 0;
  std::uint64_t master_seed = 0;
  std::string timestamp;  // UTC, ISO 8601
};

struct ExperimentResult {
  std::vector<RunRecord> records;  // sorted by (dag_id, confounders, method)
  Report report;
};

/// |z & pa| / |z | pa|, and 1 when both sets are empty.
double jaccard(const NodeSet& z, const NodeSet& pa);

/// Fraction of records with z not contained in pa0. Throws
/// std::invalid_argument on an empty span.
double fwer(std::span<const RunRecord> records);

/// Per (method, confounders) summaries. Records are folded in (dag_id)
/// order within each cell, so the result does not depend on input order.
Summaries aggregate(std::span<const RunRecord> records);

/// Runs the sweep on `threads` workers (0: hardware concurrency). Each
/// (dag, level) task derives its seeds from master_seed alone, samples its
/// batches once and hands the same batches to every method. Exceptions
/// inside a task become CellFailure entries.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::size_t threads = 0);

/// The data-generating SCM and batches of one (dag, level) task.
struct CellData {
  LinearGaussianScm scm;
  std::vector<SampleBatch> batches;
};
CellData generate_cell(const ExperimentConfig& cfg, std::size_t dag_id, int confounders);

std::uint64_t batch_fingerprint(std::span<const SampleBatch> batches);

class CsvSchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kRecordHeader = "dag_id,method,confounders,z,pa0,js,violated,wall_time";

void write_records_csv(std::ostream& out, std::span<const RunRecord> records);

/// Inverse of write_records_csv (batch_hash is left at zero). Throws
/// CsvSchemaError naming the offending column or line.
std::vector<RunRecord> read_records_csv(std::istream& in);

/// JSON text of the report; the timestamp is omitted when `with_timestamp`
/// is false.
std::string report_json(const Report& report, bool with_timestamp = true);

}  // namespace iidwb
