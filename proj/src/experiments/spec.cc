#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "thp/experiments.h"

namespace thp {
namespace {

using boost::property_tree::ptree;

struct KindInfo {
  ExperimentKind kind;
  const char* name;
  const char* description;
};

constexpr KindInfo kKinds[] = {
    {ExperimentKind::kSweepPower, "sweep-power",
     "SE design: robust vs non-robust SMSE on sampled true channels over P_max [dB]"},
    {ExperimentKind::kSweepSigma, "sweep-sigma",
     "SE design: robust vs non-robust SMSE over the error variance at fixed P_max"},
    {ExperimentKind::kSweepDelta, "sweep-delta",
     "NBE min-max SMSE design vs non-robust design, worst-case SMSE over delta"},
    {ExperimentKind::kPowerVsEta, "power-vs-eta",
     "MSE-constrained design: transmit power over eta, one series per delta"},
    {ExperimentKind::kFeasibility, "feasibility",
     "MSE-constrained design: infeasible fraction over delta, one series per eta"},
    {ExperimentKind::kConvergence, "convergence",
     "MSE-constrained design: transmit power per iteration, one block per eta"},
    {ExperimentKind::kBalance, "balance",
     "MSE-balancing design: min-max MSE over P_max [dB], one series per delta"},
};

const KindInfo& Info(ExperimentKind kind) {
  for (const KindInfo& info : kKinds) {
    if (info.kind == kind) return info;
  }
  throw std::logic_error("unknown experiment kind");
}

const std::map<std::string, std::set<std::string>>& KnownKeys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"experiment", {"kind", "name", "channels", "seed", "json"}},
      {"system", {"n_tx", "users", "n_rx", "streams", "noise_var"}},
      {"design",
       {"error_var", "error_convention", "error_samples", "power_db", "delta",
        "threshold", "max_iterations", "receiver"}},
      {"sweep", {"values", "series"}},
  };
  return keys;
}

template <typename T>
T ParseScalar(const std::string& key, const std::string& raw) {
  const std::string text = boost::algorithm::trim_copy(raw);
  T value{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty()) {
    throw SpecError(key, "cannot parse '" + text + "' as a number");
  }
  return value;
}

std::vector<double> ParseList(const std::string& key, const std::string& raw) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, raw, boost::algorithm::is_any_of(","));
  std::vector<double> out;
  for (const std::string& part : parts) {
    if (boost::algorithm::trim_copy(part).empty()) continue;
    out.push_back(ParseScalar<double>(key, part));
  }
  return out;
}

bool ParseBool(const std::string& key, const std::string& raw) {
  const std::string text = boost::algorithm::to_lower_copy(boost::algorithm::trim_copy(raw));
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw SpecError(key, "expected true or false, got '" + text + "'");
}

std::string JoinList(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += format_number(values[i]);
  }
  return out;
}

void Require(bool ok, const std::string& key, const std::string& message) {
  if (!ok) throw SpecError(key, message);
}

bool UsesSeries(ExperimentKind kind) {
  return kind == ExperimentKind::kPowerVsEta || kind == ExperimentKind::kFeasibility ||
         kind == ExperimentKind::kBalance;
}

}  // namespace

SpecError::SpecError(std::string key, const std::string& message)
    : std::invalid_argument(key.empty() ? message : key + ": " + message),
      key_(std::move(key)) {}

const std::vector<ExperimentKind>& all_experiment_kinds() {
  static const std::vector<ExperimentKind> kinds = [] {
    std::vector<ExperimentKind> out;
    for (const KindInfo& info : kKinds) out.push_back(info.kind);
    return out;
  }();
  return kinds;
}

const char* to_string(ExperimentKind kind) { return Info(kind).name; }

const char* describe(ExperimentKind kind) { return Info(kind).description; }

ExperimentKind parse_experiment_kind(const std::string& name) {
  for (const KindInfo& info : kKinds) {
    if (name == info.name) return info.kind;
  }
  throw SpecError("experiment.kind", "unknown experiment kind '" + name + "'");
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

SystemConfig ExperimentSpec::system() const {
  return SystemConfig::Uniform(n_tx, users, n_rx, streams, noise_var);
}

void ExperimentSpec::validate() const {
  Require(channels >= 1, "experiment.channels", "channel count >= 1 violated");
  Require(!name.empty(), "experiment.name", "name must be nonempty");
  Require(name.find('/') == std::string::npos, "experiment.name",
          "name must not contain '/'");
  try {
    (void)system();
  } catch (const std::invalid_argument& e) {
    throw SpecError("system", e.what());
  }
  Require(std::isfinite(error_var) && error_var >= 0.0, "design.error_var",
          "error_var >= 0 violated");
  Require(error_samples >= 1, "design.error_samples", "error_samples >= 1 violated");
  Require(std::isfinite(power_db), "design.power_db", "power_db must be finite");
  Require(std::isfinite(delta) && delta >= 0.0, "design.delta", "delta >= 0 violated");
  Require(std::isfinite(threshold) && threshold > 0.0, "design.threshold",
          "threshold > 0 violated");
  Require(max_iterations >= 1, "design.max_iterations", "max_iterations >= 1 violated");

  Require(!values.empty(), "sweep.values", "grid nonempty violated");
  for (double v : values) Require(std::isfinite(v), "sweep.values", "values must be finite");
  for (double v : series) Require(std::isfinite(v), "sweep.series", "values must be finite");
  if (UsesSeries(kind)) {
    Require(!series.empty(), "sweep.series",
            std::string("series nonempty violated for ") + to_string(kind));
  } else {
    Require(series.empty(), "sweep.series",
            std::string("series is not used by ") + to_string(kind));
  }

  auto all_nonneg = [](const std::vector<double>& v) {
    for (double x : v) {
      if (x < 0.0) return false;
    }
    return true;
  };
  auto all_positive = [](const std::vector<double>& v) {
    for (double x : v) {
      if (x <= 0.0) return false;
    }
    return true;
  };
  switch (kind) {
    case ExperimentKind::kSweepPower:
      break;
    case ExperimentKind::kSweepDelta:
      Require(all_nonneg(values), "sweep.values", "delta >= 0 violated");
      break;
    case ExperimentKind::kSweepSigma:
      Require(all_nonneg(values), "sweep.values", "error_var >= 0 violated");
      break;
    case ExperimentKind::kPowerVsEta:
      Require(all_positive(values), "sweep.values", "eta > 0 violated");
      Require(all_nonneg(series), "sweep.series", "delta >= 0 violated");
      break;
    case ExperimentKind::kFeasibility:
      Require(all_nonneg(values), "sweep.values", "delta >= 0 violated");
      Require(all_positive(series), "sweep.series", "eta > 0 violated");
      break;
    case ExperimentKind::kConvergence:
      Require(all_positive(values), "sweep.values", "eta > 0 violated");
      break;
    case ExperimentKind::kBalance:
      Require(all_nonneg(series), "sweep.series", "delta >= 0 violated");
      break;
  }
}

std::vector<std::pair<std::string, std::string>> ExperimentSpec::entries() const {
  return {
      {"experiment.kind", to_string(kind)},
      {"experiment.name", name},
      {"experiment.channels", std::to_string(channels)},
      {"experiment.seed", std::to_string(seed)},
      {"experiment.json", json ? "true" : "false"},
      {"system.n_tx", std::to_string(n_tx)},
      {"system.users", std::to_string(users)},
      {"system.n_rx", std::to_string(n_rx)},
      {"system.streams", std::to_string(streams)},
      {"system.noise_var", format_number(noise_var)},
      {"design.error_var", format_number(error_var)},
      {"design.error_convention", error_convention == ErrorConvention::kPerEntry
                                      ? "per-entry"
                                      : "covariance-normalized"},
      {"design.error_samples", std::to_string(error_samples)},
      {"design.power_db", format_number(power_db)},
      {"design.delta", format_number(delta)},
      {"design.threshold", format_number(threshold)},
      {"design.max_iterations", std::to_string(max_iterations)},
      {"design.receiver",
       receiver == ReceiverVariant::kInclusive ? "inclusive" : "strictly-later"},
      {"sweep.values", JoinList(values)},
      {"sweep.series", JoinList(series)},
  };
}

ExperimentSpec parse_spec(std::istream& in) {
  ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw SpecError("", std::string("malformed spec file: ") + e.message() + " (line " +
                            std::to_string(e.line()) + ")");
  }

  for (const auto& [section, body] : tree) {
    const auto known = KnownKeys().find(section);
    if (known == KnownKeys().end()) {
      throw SpecError(section, "unknown section");
    }
    if (body.empty() && !body.data().empty()) {
      throw SpecError(section, "expected a [section], found a top-level key");
    }
    for (const auto& entry : body) {
      if (!known->second.count(entry.first)) {
        throw SpecError(section + "." + entry.first, "unknown key");
      }
    }
  }

  auto raw = [&](const std::string& key) -> std::optional<std::string> {
    const auto node = tree.get_optional<std::string>(ptree::path_type(key, '.'));
    if (!node) return std::nullopt;
    return *node;
  };

  ExperimentSpec spec;
  const auto kind = raw("experiment.kind");
  if (!kind) throw SpecError("experiment.kind", "required key missing");
  spec.kind = parse_experiment_kind(boost::algorithm::trim_copy(*kind));
  spec.name = to_string(spec.kind);
  if (auto v = raw("experiment.name")) spec.name = boost::algorithm::trim_copy(*v);
  if (auto v = raw("experiment.channels")) {
    spec.channels = ParseScalar<int>("experiment.channels", *v);
  }
  if (auto v = raw("experiment.seed")) {
    spec.seed = ParseScalar<std::uint64_t>("experiment.seed", *v);
  }
  if (auto v = raw("experiment.json")) spec.json = ParseBool("experiment.json", *v);

  if (auto v = raw("system.n_tx")) spec.n_tx = ParseScalar<int>("system.n_tx", *v);
  if (auto v = raw("system.users")) spec.users = ParseScalar<int>("system.users", *v);
  if (auto v = raw("system.n_rx")) spec.n_rx = ParseScalar<int>("system.n_rx", *v);
  if (auto v = raw("system.streams")) spec.streams = ParseScalar<int>("system.streams", *v);
  if (auto v = raw("system.noise_var")) {
    spec.noise_var = ParseScalar<double>("system.noise_var", *v);
  }

  if (auto v = raw("design.error_var")) {
    spec.error_var = ParseScalar<double>("design.error_var", *v);
  }
  if (auto v = raw("design.error_convention")) {
    const std::string text = boost::algorithm::trim_copy(*v);
    if (text == "per-entry") {
      spec.error_convention = ErrorConvention::kPerEntry;
    } else if (text == "covariance-normalized") {
      spec.error_convention = ErrorConvention::kCovarianceNormalized;
    } else {
      throw SpecError("design.error_convention",
                      "expected per-entry or covariance-normalized, got '" + text + "'");
    }
  }
  if (auto v = raw("design.error_samples")) {
    spec.error_samples = ParseScalar<int>("design.error_samples", *v);
  }
  if (auto v = raw("design.power_db")) {
    spec.power_db = ParseScalar<double>("design.power_db", *v);
  }
  if (auto v = raw("design.delta")) spec.delta = ParseScalar<double>("design.delta", *v);
  if (auto v = raw("design.threshold")) {
    spec.threshold = ParseScalar<double>("design.threshold", *v);
  }
  if (auto v = raw("design.max_iterations")) {
    spec.max_iterations = ParseScalar<int>("design.max_iterations", *v);
  }
  if (auto v = raw("design.receiver")) {
    const std::string text = boost::algorithm::trim_copy(*v);
    if (text == "inclusive") {
      spec.receiver = ReceiverVariant::kInclusive;
    } else if (text == "strictly-later") {
      spec.receiver = ReceiverVariant::kStrictlyLater;
    } else {
      throw SpecError("design.receiver",
                      "expected inclusive or strictly-later, got '" + text + "'");
    }
  }

  if (auto v = raw("sweep.values")) spec.values = ParseList("sweep.values", *v);
  if (auto v = raw("sweep.series")) spec.series = ParseList("sweep.series", *v);
  return spec;
}

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("", "cannot open spec file '" + path + "'");
  return parse_spec(in);
}

}  // namespace thp
