#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <boost/accumulators/accumulators.hpp>
#include <boost/accumulators/statistics/count.hpp>
#include <boost/accumulators/statistics/mean.hpp>
#include <boost/accumulators/statistics/stats.hpp>
#include <boost/accumulators/statistics/variance.hpp>

#include "thp/experiments.h"
#include "thp/mse.h"
#include "thp/nbe_design.h"
#include "thp/oracle.h"

namespace thp {
namespace {

namespace acc = boost::accumulators;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Mean and standard error of the mean over the added samples.
class Summary {
 public:
  void add(double x) { acc_(x); }
  int count() const { return static_cast<int>(acc::count(acc_)); }
  double mean() const { return count() ? acc::mean(acc_) : kNan; }
  double std_error() const {
    const double n = count();
    if (n < 2) return n == 1 ? 0.0 : kNan;
    // variance() is the population variance.
    return std::sqrt(acc::variance(acc_) * n / (n - 1.0) / n);
  }

 private:
  acc::accumulator_set<double, acc::stats<acc::tag::count, acc::tag::mean, acc::tag::variance>>
      acc_;
};

double Median(std::vector<double> v) {
  if (v.empty()) return kNan;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Channel NominalChannel(const ExperimentSpec& spec, const SystemConfig& config, int index) {
  Rng rng = make_rng(spec.seed, static_cast<std::uint64_t>(index), 0);
  return sample_channel(config, rng);
}

// Unit-variance error draws of one channel, shared by every design and grid
// point so that comparisons use common random numbers.
std::vector<std::vector<Eigen::MatrixXcd>> UnitErrors(const ExperimentSpec& spec,
                                                      const SystemConfig& config,
                                                      int index) {
  Rng rng = make_rng(spec.seed, static_cast<std::uint64_t>(index), 1);
  std::vector<std::vector<Eigen::MatrixXcd>> out(spec.error_samples);
  for (auto& sample : out) {
    for (int k = 0; k < config.num_users(); ++k) {
      sample.push_back(complex_gaussian(config.user(k).n_rx, config.n_tx(), 1.0, rng));
    }
  }
  return out;
}

// Mean SMSE of `tx` over the true channels h_hat + sqrt(var) * unit.
double TrueChannelSmse(const Transceiver& tx, const Channel& h_hat,
                       const std::vector<std::vector<Eigen::MatrixXcd>>& unit, double var,
                       double noise_var) {
  const double scale = std::sqrt(var);
  double sum = 0.0;
  for (const auto& sample : unit) {
    std::vector<Eigen::MatrixXcd> err;
    for (const auto& e : sample) err.push_back(scale * e);
    sum += smse(tx, h_hat + err, noise_var).smse;
  }
  return sum / static_cast<double>(unit.size());
}

std::optional<DesignResult> RunSe(const ExperimentSpec& spec, const SystemConfig& config,
                                  const Channel& h, double power, double error_var) {
  SeDesignParams params;
  params.error_var = error_var;
  params.power_limit = power;
  params.threshold = spec.threshold;
  params.max_iterations = spec.max_iterations;
  params.variant = spec.receiver;
  try {
    DesignResult res = se_design(h, config, params);
    if (res.trace.termination == Termination::kSolverFailure) return std::nullopt;
    return res;
  } catch (const std::domain_error&) {
    return std::nullopt;
  }
}

NbeDesignParams NbeParams(const ExperimentSpec& spec, double delta) {
  NbeDesignParams params;
  params.delta.assign(spec.users, delta);
  params.threshold = spec.threshold;
  params.max_iterations = spec.max_iterations;
  return params;
}

struct PairSummary {
  Summary robust, nonrobust, gap, iterations;
  int excluded = 0;

  void add(double r, double n, int iters) {
    robust.add(r);
    nonrobust.add(n);
    gap.add(n - r);
    iterations.add(iters);
  }
  std::vector<double> columns() const {
    return {robust.mean(),  robust.std_error(), nonrobust.mean(),  nonrobust.std_error(),
            gap.mean(),     gap.std_error(),    iterations.mean(), double(robust.count()),
            double(excluded)};
  }
};

// Design-time variance matching the evaluation draws, so that the robust
// objective is the exact expectation of the evaluated SMSE.
double SeDesignVar(const ExperimentSpec& spec, const SystemConfig& config, double error_var) {
  return per_entry_error_var(config, error_var, spec.error_convention);
}

ResultTable SweepPower(const ExperimentSpec& spec) {
  const SystemConfig config = spec.system();
  const double var = SeDesignVar(spec, config, spec.error_var);
  std::vector<PairSummary> acc(spec.values.size());
  for (int ch = 0; ch < spec.channels; ++ch) {
    const Channel h = NominalChannel(spec, config, ch);
    const auto unit = UnitErrors(spec, config, ch);
    for (std::size_t i = 0; i < spec.values.size(); ++i) {
      const double power = db_to_linear(spec.values[i]);
      const auto robust = RunSe(spec, config, h, power, var);
      const auto naive = RunSe(spec, config, h, power, 0.0);
      if (!robust || !naive) {
        ++acc[i].excluded;
        continue;
      }
      acc[i].add(TrueChannelSmse(robust->tx, h, unit, var, spec.noise_var),
                 TrueChannelSmse(naive->tx, h, unit, var, spec.noise_var),
                 robust->trace.iterations);
    }
  }
  ResultTable table{experiment_columns(spec.kind), {}};
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    std::vector<double> row = {spec.values[i], db_to_linear(spec.values[i])};
    const auto cols = acc[i].columns();
    row.insert(row.end(), cols.begin(), cols.end());
    table.rows.push_back(std::move(row));
  }
  return table;
}

ResultTable SweepSigma(const ExperimentSpec& spec) {
  const SystemConfig config = spec.system();
  const double power = db_to_linear(spec.power_db);
  std::vector<PairSummary> acc(spec.values.size());
  for (int ch = 0; ch < spec.channels; ++ch) {
    const Channel h = NominalChannel(spec, config, ch);
    const auto unit = UnitErrors(spec, config, ch);
    const auto naive = RunSe(spec, config, h, power, 0.0);
    for (std::size_t i = 0; i < spec.values.size(); ++i) {
      const double var = SeDesignVar(spec, config, spec.values[i]);
      const auto robust = RunSe(spec, config, h, power, var);
      if (!robust || !naive) {
        ++acc[i].excluded;
        continue;
      }
      acc[i].add(TrueChannelSmse(robust->tx, h, unit, var, spec.noise_var),
                 TrueChannelSmse(naive->tx, h, unit, var, spec.noise_var),
                 robust->trace.iterations);
    }
  }
  ResultTable table{experiment_columns(spec.kind), {}};
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    std::vector<double> row = {spec.values[i]};
    const auto cols = acc[i].columns();
    row.insert(row.end(), cols.begin(), cols.end());
    table.rows.push_back(std::move(row));
  }
  return table;
}

ResultTable SweepDelta(const ExperimentSpec& spec) {
  const SystemConfig config = spec.system();
  const double power = db_to_linear(spec.power_db);
  std::vector<PairSummary> acc(spec.values.size());
  for (int ch = 0; ch < spec.channels; ++ch) {
    const Channel h = NominalChannel(spec, config, ch);
    const auto naive = RunSe(spec, config, h, power, 0.0);
    for (std::size_t i = 0; i < spec.values.size(); ++i) {
      NbeDesignParams params = NbeParams(spec, spec.values[i]);
      params.power_limit = power;
      const DesignResult robust = nbe_smse_design(h, config, params);
      if (!naive || robust.trace.termination == Termination::kSolverFailure) {
        ++acc[i].excluded;
        continue;
      }
      acc[i].add(worst_case_smse(robust.tx, h, params.delta, spec.noise_var).smse,
                 worst_case_smse(naive->tx, h, params.delta, spec.noise_var).smse,
                 robust.trace.iterations);
    }
  }
  ResultTable table{experiment_columns(spec.kind), {}};
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    std::vector<double> row = {spec.values[i]};
    const auto cols = acc[i].columns();
    row.insert(row.end(), cols.begin(), cols.end());
    table.rows.push_back(std::move(row));
  }
  return table;
}

ResultTable PowerVsEta(const ExperimentSpec& spec) {
  const SystemConfig config = spec.system();
  const std::size_t nv = spec.values.size();
  struct Cell {
    Summary power, iterations;
    int infeasible = 0, excluded = 0;
  };
  std::vector<Cell> cells(spec.series.size() * nv);
  for (int ch = 0; ch < spec.channels; ++ch) {
    const Channel h = NominalChannel(spec, config, ch);
    for (std::size_t s = 0; s < spec.series.size(); ++s) {
      for (std::size_t i = 0; i < nv; ++i) {
        NbeDesignParams params = NbeParams(spec, spec.series[s]);
        params.mse_targets.assign(spec.users, spec.values[i]);
        const ConstrainedDesignResult res = mse_constrained_design(h, config, params);
        Cell& cell = cells[s * nv + i];
        if (res.trace.termination == Termination::kSolverFailure) {
          ++cell.excluded;
        } else if (!res.feasible) {
          ++cell.infeasible;
        } else {
          cell.power.add(res.tx.transmit_power());
          cell.iterations.add(res.trace.iterations);
        }
      }
    }
  }
  ResultTable table{experiment_columns(spec.kind), {}};
  for (std::size_t s = 0; s < spec.series.size(); ++s) {
    for (std::size_t i = 0; i < nv; ++i) {
      const Cell& cell = cells[s * nv + i];
      const int used = cell.power.count() + cell.infeasible;
      table.rows.push_back({spec.series[s], spec.values[i], cell.power.mean(),
                            cell.power.std_error(), cell.iterations.mean(),
                            double(cell.power.count()),
                            used ? double(cell.infeasible) / used : kNan, double(used),
                            double(cell.excluded)});
    }
  }
  return table;
}

ResultTable Feasibility(const ExperimentSpec& spec) {
  const SystemConfig config = spec.system();
  const std::size_t nv = spec.values.size();
  struct Cell {
    int infeasible = 0, used = 0, excluded = 0;
  };
  std::vector<Cell> cells(spec.series.size() * nv);
  for (int ch = 0; ch < spec.channels; ++ch) {
    const Channel h = NominalChannel(spec, config, ch);
    for (std::size_t s = 0; s < spec.series.size(); ++s) {
      for (std::size_t i = 0; i < nv; ++i) {
        NbeDesignParams params = NbeParams(spec, spec.values[i]);
        params.mse_targets.assign(spec.users, spec.series[s]);
        const conic::SolveStatus status = mse_constrained_first_status(h, config, params);
        Cell& cell = cells[s * nv + i];
        if (status == conic::SolveStatus::kOptimal) {
          ++cell.used;
        } else if (status == conic::SolveStatus::kInfeasible) {
          ++cell.used;
          ++cell.infeasible;
        } else {
          ++cell.excluded;
        }
      }
    }
  }
  ResultTable table{experiment_columns(spec.kind), {}};
  for (std::size_t s = 0; s < spec.series.size(); ++s) {
    for (std::size_t i = 0; i < nv; ++i) {
      const Cell& cell = cells[s * nv + i];
      const double p = cell.used ? double(cell.infeasible) / cell.used : kNan;
      const double se = cell.used ? std::sqrt(p * (1.0 - p) / cell.used) : kNan;
      table.rows.push_back({spec.values[i], spec.series[s], p, se, double(cell.infeasible),
                            double(cell.used), double(cell.excluded)});
    }
  }
  return table;
}

ResultTable Convergence(const ExperimentSpec& spec) {
  const SystemConfig config = spec.system();
  ResultTable table{experiment_columns(spec.kind), {}};
  for (double eta : spec.values) {
    std::vector<std::vector<double>> traces;
    std::vector<double> iterations;
    int excluded = 0;
    for (int ch = 0; ch < spec.channels; ++ch) {
      const Channel h = NominalChannel(spec, config, ch);
      NbeDesignParams params = NbeParams(spec, spec.delta);
      params.mse_targets.assign(spec.users, eta);
      const ConstrainedDesignResult res = mse_constrained_design(h, config, params);
      if (res.trace.termination == Termination::kSolverFailure) {
        ++excluded;
      } else if (res.feasible) {
        traces.push_back(res.trace.objective);
        iterations.push_back(res.trace.iterations);
      }
    }
    std::size_t longest = 0;
    for (const auto& t : traces) longest = std::max(longest, t.size());
    Summary iters;
    for (double n : iterations) iters.add(n);
    const double median = Median(iterations);
    for (std::size_t n = 0; n < std::max<std::size_t>(longest, 1); ++n) {
      // Finished runs hold their final power.
      Summary power;
      for (const auto& t : traces) power.add(t[std::min(n, t.size() - 1)]);
      table.rows.push_back({eta, double(n + 1), power.mean(), power.std_error(), median,
                            iters.mean(), double(traces.size()), double(excluded)});
    }
  }
  return table;
}

ResultTable Balance(const ExperimentSpec& spec) {
  const SystemConfig config = spec.system();
  const std::size_t nv = spec.values.size();
  struct Cell {
    Summary mse, iterations;
    int excluded = 0;
  };
  std::vector<Cell> cells(spec.series.size() * nv);
  for (int ch = 0; ch < spec.channels; ++ch) {
    const Channel h = NominalChannel(spec, config, ch);
    for (std::size_t s = 0; s < spec.series.size(); ++s) {
      for (std::size_t i = 0; i < nv; ++i) {
        NbeDesignParams params = NbeParams(spec, spec.series[s]);
        params.power_limit = db_to_linear(spec.values[i]);
        const DesignResult res = mse_balancing_design(h, config, params);
        Cell& cell = cells[s * nv + i];
        if (res.trace.termination == Termination::kSolverFailure) {
          ++cell.excluded;
        } else {
          cell.mse.add(res.trace.final_objective());
          cell.iterations.add(res.trace.iterations);
        }
      }
    }
  }
  ResultTable table{experiment_columns(spec.kind), {}};
  for (std::size_t s = 0; s < spec.series.size(); ++s) {
    for (std::size_t i = 0; i < nv; ++i) {
      const Cell& cell = cells[s * nv + i];
      table.rows.push_back({spec.series[s], spec.values[i], db_to_linear(spec.values[i]),
                            cell.mse.mean(), cell.mse.std_error(), cell.iterations.mean(),
                            double(cell.mse.count()), double(cell.excluded)});
    }
  }
  return table;
}

}  // namespace

const std::vector<std::string>& experiment_columns(ExperimentKind kind) {
  static const std::vector<std::string> pair_tail = {
      "robust_mean",     "robust_stderr", "nonrobust_mean", "nonrobust_stderr",
      "gap_mean",        "gap_stderr",    "robust_iterations_mean",
      "channels",        "excluded"};
  auto with_head = [](std::vector<std::string> head) {
    head.insert(head.end(), pair_tail.begin(), pair_tail.end());
    return head;
  };
  static const std::vector<std::string> sweep_power = with_head({"power_db", "power"});
  static const std::vector<std::string> sweep_sigma = with_head({"error_var"});
  static const std::vector<std::string> sweep_delta = with_head({"delta"});
  static const std::vector<std::string> power_vs_eta = {
      "delta",    "eta",       "power_mean", "power_stderr", "iterations_mean", "feasible",
      "infeasible_fraction", "channels",   "excluded"};
  static const std::vector<std::string> feasibility = {
      "delta",    "eta",      "infeasible_fraction", "infeasible_fraction_stderr",
      "infeasible", "channels", "excluded"};
  static const std::vector<std::string> convergence = {
      "eta",     "iteration",       "power_mean", "power_stderr", "median_iterations",
      "iterations_mean", "feasible", "excluded"};
  static const std::vector<std::string> balance = {
      "delta", "power_db", "power", "minmax_mse_mean", "minmax_mse_stderr",
      "iterations_mean", "channels", "excluded"};
  switch (kind) {
    case ExperimentKind::kSweepPower: return sweep_power;
    case ExperimentKind::kSweepSigma: return sweep_sigma;
    case ExperimentKind::kSweepDelta: return sweep_delta;
    case ExperimentKind::kPowerVsEta: return power_vs_eta;
    case ExperimentKind::kFeasibility: return feasibility;
    case ExperimentKind::kConvergence: return convergence;
    case ExperimentKind::kBalance: return balance;
  }
  throw std::logic_error("unknown experiment kind");
}

ResultTable run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case ExperimentKind::kSweepPower: return SweepPower(spec);
    case ExperimentKind::kSweepSigma: return SweepSigma(spec);
    case ExperimentKind::kSweepDelta: return SweepDelta(spec);
    case ExperimentKind::kPowerVsEta: return PowerVsEta(spec);
    case ExperimentKind::kFeasibility: return Feasibility(spec);
    case ExperimentKind::kConvergence: return Convergence(spec);
    case ExperimentKind::kBalance: return Balance(spec);
  }
  throw std::logic_error("unknown experiment kind");
}

}  // namespace thp
