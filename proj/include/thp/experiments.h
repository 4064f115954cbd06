#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "thp/sampling.h"
#include "thp/se_design.h"
#include "thp/system.h"

namespace thp {

enum class ExperimentKind {
  kSweepPower,   // SE design, robust vs non-robust SMSE over P_max in dB
  kSweepSigma,   // SE design over sigma_E^2 at fixed P_max
  kSweepDelta,   // NBE min-max SMSE vs non-robust over delta
  kPowerVsEta,   // MSE-constrained transmit power over eta, per delta
  kFeasibility,  // infeasible fraction of the MSE-constrained design
  kConvergence,  // per-iteration power of the MSE-constrained design
  kBalance,      // min-max MSE over P_max in dB, per delta
};

const std::vector<ExperimentKind>& all_experiment_kinds();
const char* to_string(ExperimentKind kind);
/// One-line description used by `list-experiments`.
const char* describe(ExperimentKind kind);
/// Throws SpecError for an unknown name.
ExperimentKind parse_experiment_kind(const std::string& name);

/// Malformed or invalid experiment spec. `key()` names the offending entry
/// as section.key when there is one.
class SpecError : public std::invalid_argument {
 public:
  SpecError(std::string key, const std::string& message);
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::kSweepPower;
  std::string name;  // output file stem; defaults to the kind name

  // [system]
  int n_tx = 8;
  int users = 3;
  int n_rx = 2;
  int streams = 2;
  double noise_var = 1.0;

  // [experiment]
  int channels = 200;
  std::uint64_t seed = 1;
  bool json = false;

  // [design]
  double error_var = 0.1;
  ErrorConvention error_convention = ErrorConvention::kPerEntry;
  int error_samples = 100;
  double power_db = 15.0;
  double delta = 0.1;
  double threshold = 1e-3;
  int max_iterations = 50;
  ReceiverVariant receiver = ReceiverVariant::kInclusive;

  // [sweep]
  std::vector<double> values;
  std::vector<double> series;

  SystemConfig system() const;
  /// Throws SpecError naming the violated invariant.
  void validate() const;
  /// Canonical key = value listing of every field, in file order.
  std::vector<std::pair<std::string, std::string>> entries() const;
};

ExperimentSpec parse_spec(std::istream& in);
ExperimentSpec load_spec(const std::string& path);

/// Fixed-schema table of one run. Rows follow the sweep order.
struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

ResultTable run_experiment(const ExperimentSpec& spec);

/// Column names of `kind`, in output order.
const std::vector<std::string>& experiment_columns(ExperimentKind kind);

/// `#` header with the spec and column list, then a CSV header line and rows.
void write_csv(const ExperimentSpec& spec, const ResultTable& table, std::ostream& out);
void write_json(const ExperimentSpec& spec, const ResultTable& table, std::ostream& out);

/// Formats doubles the way the writers do: shortest round-trip decimal,
/// "nan" for undefined values.
std::string format_number(double value);

/// P = 10^(db / 10).
double db_to_linear(double db);

}  // namespace thp
