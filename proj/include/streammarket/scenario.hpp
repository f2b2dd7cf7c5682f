#pragma once

#include "streammarket/allocation.hpp"
#include "streammarket/control.hpp"
#include "streammarket/dynamics.hpp"
#include "streammarket/equilibrium.hpp"
#include "streammarket/stability.hpp"
#include "streammarket/welfare.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace streammarket {

using Json = nlohmann::json;

/// Schema or value violation in a scenario document; message carries the
/// offending JSON path. Maps to exit code 2 in the CLI.
class ScenarioError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// File could not be read or written. Maps to exit code 3 in the CLI.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A solver finished without reaching its tolerance. Maps to exit code 1.
class NotConvergedError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class StateAnchor { Equilibrium, Initial };

struct WelfareCommandConfig {
    StateAnchor at = StateAnchor::Equilibrium;
    bool head_effect_comparison = false;
    HeadEffectComparisonOptions comparison;
};

struct AllocationCommandConfig {
    AllocationOptions options;
    std::optional<Vector> start;  ///< defaults to the uniform allocation
    StateAnchor at = StateAnchor::Equilibrium;
};

struct SweepAxis {
    std::string parameter;
    std::vector<double> values;
};

struct SweepConfig {
    SweepAxis primary;
    std::optional<SweepAxis> secondary;
    std::string metric = "hhi";
};

struct Scenario {
    Scenario(MarketParams p, MarketState s) : params(std::move(p)), initial(std::move(s)) {}

    MarketParams params;
    MarketState initial;
    IntegratorConfig integrator;
    SteadyStateOptions equilibrium;
    int probe_starts = 0;
    StabilityOptions stability;
    CriticalBetaOptions critical_beta;
    WelfareCommandConfig welfare;
    AllocationCommandConfig allocation;
    ControlOptions control;
    std::optional<SweepConfig> sweep;
};

Scenario parse_scenario(const Json& document);
Scenario load_scenario(const std::string& path);

/// One sweep grid cell in long format.
struct SweepRow {
    double value = 0.0;
    std::optional<double> value2;
    double metric_value = 0.0;
};

struct SweepResult {
    std::string parameter;
    std::optional<std::string> parameter2;
    std::string metric;
    std::vector<SweepRow> rows;  ///< ordered by (outer value, inner value)
};

SweepResult run_sweep(const Scenario& scenario);

// Report serialization. JSON writers/readers round-trip exactly; CSV numbers
// are printed with 17 significant digits (double round-trip safe).
std::string format_double(double x);

Json to_json(const MarketState& state);
Json to_json(const EquilibriumReport& report);
Json to_json(const StabilityReport& report);
Json to_json(const CriticalBetaReport& report);
Json to_json(const WelfareBreakdown& breakdown);
Json to_json(const HeadEffectComparison& comparison);
Json to_json(const AllocationSolution& solution);
Json to_json(const ControlSolution& solution);

MarketState state_from_json(const Json& j);
EquilibriumReport equilibrium_from_json(const Json& j);
StabilityReport stability_from_json(const Json& j);
CriticalBetaReport critical_beta_from_json(const Json& j);
WelfareBreakdown welfare_from_json(const Json& j);
AllocationSolution allocation_from_json(const Json& j);
ControlSolution control_from_json(const Json& j);

/// Columns: t, n_1..n_N, q_1..q_N, s_1..s_N, hhi.
void trajectory_to_csv(std::ostream& os, const Trajectory& trajectory);
Trajectory trajectory_from_csv(std::istream& is);

/// Columns: t, theta_1..theta_N, lambda_1..lambda_N, n_1..n_N, w.
void control_to_csv(std::ostream& os, const ControlSolution& solution);

/// Columns: parameter, value[, parameter2, value2], metric, metric_value.
void sweep_to_csv(std::ostream& os, const SweepResult& result);

/// Columns: consumer_surplus, producer_surplus, platform_profit, total, hhi,
/// head_effect, s_1..s_N.
void welfare_to_csv(std::ostream& os, const WelfareBreakdown& breakdown);

}  // namespace streammarket
