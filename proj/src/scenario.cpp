#include "streammarket/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <sstream>

namespace streammarket {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
    throw ScenarioError(path.empty() ? message : path + ": " + message);
}

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

const Json& expect_object(const Json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    return j;
}

void check_keys(const Json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* name : allowed)
            if (key == name) known = true;
        if (!known) fail(path, "unknown key \"" + key + "\"");
    }
}

double expect_number(const Json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

int expect_int(const Json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<int>();
}

bool expect_bool(const Json& j, const std::string& path) {
    if (!j.is_boolean()) fail(path, "expected a boolean");
    return j.get<bool>();
}

std::string expect_string(const Json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

double number_or(const Json& parent, const std::string& path, const char* key,
                 double fallback) {
    if (!parent.contains(key)) return fallback;
    return expect_number(parent.at(key), join(path, key));
}

int int_or(const Json& parent, const std::string& path, const char* key, int fallback) {
    if (!parent.contains(key)) return fallback;
    return expect_int(parent.at(key), join(path, key));
}

bool bool_or(const Json& parent, const std::string& path, const char* key, bool fallback) {
    if (!parent.contains(key)) return fallback;
    return expect_bool(parent.at(key), join(path, key));
}

/// Array of n numbers, or {"uniform": x}. `extra` optionally admits one more
/// shorthand key handled by the caller.
Vector parse_vector(const Json& j, const std::string& path, int n) {
    if (j.is_array()) {
        if (static_cast<int>(j.size()) != n)
            fail(path, "expected " + std::to_string(n) + " entries");
        Vector out(n);
        for (int i = 0; i < n; ++i) out[i] = expect_number(j[i], path + "[" + std::to_string(i) + "]");
        return out;
    }
    if (j.is_object()) {
        check_keys(j, path, {"uniform"});
        if (!j.contains("uniform")) fail(path, "expected an array or {\"uniform\": x}");
        return Vector::Constant(n, expect_number(j.at("uniform"), join(path, "uniform")));
    }
    fail(path, "expected an array or {\"uniform\": x}");
}

Vector parse_viewers(const Json& j, const std::string& path, int n, double m) {
    if (j.is_object() && j.contains("symmetric_perturbed")) {
        check_keys(j, path, {"symmetric_perturbed"});
        const double eps = expect_number(j.at("symmetric_perturbed"),
                                         join(path, "symmetric_perturbed"));
        if (n < 2) fail(path, "symmetric_perturbed needs at least two streamers");
        if (!(eps >= 0.0) || eps >= m / n)
            fail(join(path, "symmetric_perturbed"), "must lie in [0, M/N)");
        Vector out = Vector::Constant(n, m / n);
        out[0] += eps;
        out[1] -= eps;
        return out;
    }
    return parse_vector(j, path, n);
}

CostSpec parse_cost(const Json& j, const std::string& path) {
    expect_object(j, path);
    if (!j.contains("kind")) fail(path, "missing \"kind\"");
    const std::string kind = expect_string(j.at("kind"), join(path, "kind"));
    try {
        if (kind == "quadratic") {
            check_keys(j, path, {"kind", "kappa"});
            if (!j.contains("kappa")) fail(path, "missing \"kappa\"");
            return CostSpec::quadratic(expect_number(j.at("kappa"), join(path, "kappa")));
        }
        if (kind == "cubic") {
            check_keys(j, path, {"kind", "a", "b"});
            if (!j.contains("a") || !j.contains("b")) fail(path, "missing \"a\" or \"b\"");
            return CostSpec::cubic(expect_number(j.at("a"), join(path, "a")),
                                   expect_number(j.at("b"), join(path, "b")));
        }
    } catch (const std::invalid_argument& e) {
        fail(path, e.what());
    }
    fail(join(path, "kind"), "must be \"quadratic\" or \"cubic\"");
}

MarketParams parse_params(const Json& j, const std::string& path) {
    expect_object(j, path);
    check_keys(j, path,
               {"n_streamers", "total_viewers", "attractiveness", "price", "network_effect",
                "viewer_speed", "quality_speed", "platform_cut", "revenue_rate",
                "traffic_sensitivity", "discount_rate", "cost"});
    for (const char* key : {"n_streamers", "total_viewers", "attractiveness", "price",
                            "network_effect", "viewer_speed", "quality_speed", "platform_cut",
                            "revenue_rate", "traffic_sensitivity", "discount_rate", "cost"})
        if (!j.contains(key)) fail(path, std::string("missing \"") + key + "\"");

    const int n = expect_int(j.at("n_streamers"), join(path, "n_streamers"));
    if (n < 1) fail(join(path, "n_streamers"), "must be >= 1");
    try {
        return MarketParams(
            n, expect_number(j.at("total_viewers"), join(path, "total_viewers")),
            parse_vector(j.at("attractiveness"), join(path, "attractiveness"), n),
            parse_vector(j.at("price"), join(path, "price"), n),
            expect_number(j.at("network_effect"), join(path, "network_effect")),
            expect_number(j.at("viewer_speed"), join(path, "viewer_speed")),
            expect_number(j.at("quality_speed"), join(path, "quality_speed")),
            expect_number(j.at("platform_cut"), join(path, "platform_cut")),
            expect_number(j.at("revenue_rate"), join(path, "revenue_rate")),
            expect_number(j.at("traffic_sensitivity"), join(path, "traffic_sensitivity")),
            expect_number(j.at("discount_rate"), join(path, "discount_rate")),
            parse_cost(j.at("cost"), join(path, "cost")));
    } catch (const std::invalid_argument& e) {
        fail(path, e.what());
    }
}

MarketState parse_initial(const Json* j, const std::string& path, const MarketParams& params) {
    const int n = params.n_streamers;
    const double m = params.total_viewers;
    Vector viewers = Vector::Constant(n, m / n);
    Vector quality = Vector::Zero(n);
    Vector allocation = Vector::Constant(n, 1.0 / n);
    if (j != nullptr) {
        expect_object(*j, path);
        check_keys(*j, path, {"viewers", "quality", "allocation"});
        if (j->contains("viewers"))
            viewers = parse_viewers(j->at("viewers"), join(path, "viewers"), n, m);
        if (j->contains("quality"))
            quality = parse_vector(j->at("quality"), join(path, "quality"), n);
        if (j->contains("allocation"))
            allocation = parse_vector(j->at("allocation"), join(path, "allocation"), n);
    }
    try {
        return MarketState(std::move(viewers), std::move(quality), std::move(allocation));
    } catch (const std::invalid_argument& e) {
        fail(path, e.what());
    }
}

StateAnchor parse_anchor(const Json& parent, const std::string& path, const char* key) {
    if (!parent.contains(key)) return StateAnchor::Equilibrium;
    const std::string value = expect_string(parent.at(key), join(path, key));
    if (value == "equilibrium") return StateAnchor::Equilibrium;
    if (value == "initial") return StateAnchor::Initial;
    fail(join(path, key), "must be \"equilibrium\" or \"initial\"");
}

std::vector<double> parse_axis_values(const Json& j, const std::string& path) {
    if (j.is_array()) {
        std::vector<double> out;
        for (std::size_t i = 0; i < j.size(); ++i)
            out.push_back(expect_number(j[i], path + "[" + std::to_string(i) + "]"));
        if (out.empty()) fail(path, "needs at least one value");
        return out;
    }
    if (j.is_object()) {
        check_keys(j, path, {"from", "to", "count"});
        for (const char* key : {"from", "to", "count"})
            if (!j.contains(key)) fail(path, std::string("missing \"") + key + "\"");
        const double from = expect_number(j.at("from"), join(path, "from"));
        const double to = expect_number(j.at("to"), join(path, "to"));
        const int count = expect_int(j.at("count"), join(path, "count"));
        if (count < 1) fail(join(path, "count"), "must be >= 1");
        std::vector<double> out(count);
        for (int i = 0; i < count; ++i)
            out[i] = count == 1 ? from : from + (to - from) * i / (count - 1);
        return out;
    }
    fail(path, "expected an array or {from, to, count}");
}

const std::initializer_list<const char*> kSweepableParameters = {
    "network_effect", "viewer_speed",        "quality_speed", "platform_cut",
    "revenue_rate",   "traffic_sensitivity", "discount_rate", "total_viewers"};

SweepAxis parse_axis(const Json& j, const std::string& path) {
    expect_object(j, path);
    check_keys(j, path, {"parameter", "values"});
    if (!j.contains("parameter") || !j.contains("values"))
        fail(path, "missing \"parameter\" or \"values\"");
    SweepAxis axis;
    axis.parameter = expect_string(j.at("parameter"), join(path, "parameter"));
    bool known = false;
    for (const char* name : kSweepableParameters)
        if (axis.parameter == name) known = true;
    if (!known) fail(join(path, "parameter"), "not a sweepable parameter");
    axis.values = parse_axis_values(j.at("values"), join(path, "values"));
    return axis;
}

MarketParams with_parameter(const MarketParams& params, const std::string& name, double value) {
    MarketParams out = params;
    if (name == "network_effect") out.network_effect = value;
    else if (name == "viewer_speed") out.viewer_speed = value;
    else if (name == "quality_speed") out.quality_speed = value;
    else if (name == "platform_cut") out.platform_cut = value;
    else if (name == "revenue_rate") out.revenue_rate = value;
    else if (name == "traffic_sensitivity") out.traffic_sensitivity = value;
    else if (name == "discount_rate") out.discount_rate = value;
    else if (name == "total_viewers") out.total_viewers = value;
    else throw ScenarioError("sweep: not a sweepable parameter: " + name);
    try {
        out.validate();
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(std::string("sweep: ") + e.what());
    }
    return out;
}

double sweep_metric(const Scenario& scenario, const MarketParams& params,
                    const std::string& metric) {
    const EquilibriumReport eq =
        solve_steady_state(params, scenario.initial, scenario.equilibrium);
    if (!eq.converged) {
        std::ostringstream os;
        os << "sweep: equilibrium did not converge (residual_n=" << eq.residual_n
           << ", residual_q=" << eq.residual_q << ")";
        throw NotConvergedError(os.str());
    }
    if (metric == "max_re_lambda")
        return classify_stability(params, eq.state, scenario.stability).max_real_part;
    const WelfareBreakdown w = welfare_breakdown(params, eq.state);
    if (metric == "hhi") return w.hhi;
    if (metric == "max_share") return w.shares.maxCoeff();
    if (metric == "welfare") return w.total;
    if (metric == "consumer_surplus") return w.consumer_surplus;
    if (metric == "producer_surplus") return w.producer_surplus;
    if (metric == "platform_profit") return w.platform_profit;
    throw ScenarioError("sweep.metric: unknown metric \"" + metric + "\"");
}

Json vector_to_json(const Vector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

Vector vector_from_json(const Json& j) {
    Vector out(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) out[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    return out;
}

Json matrix_to_json(const Matrix& m) {
    Json out = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(std::move(row));
    }
    return out;
}

Matrix matrix_from_json(const Json& j) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0) return Matrix(0, 0);
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Matrix out(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            out(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
    return out;
}

void csv_row(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) os << ',';
        os << cells[i];
    }
    os << '\n';
}

}  // namespace

Scenario parse_scenario(const Json& document) {
    expect_object(document, "");
    check_keys(document, "",
               {"params", "initial", "integrator", "equilibrium", "stability", "critical_beta",
                "welfare", "allocation", "control", "sweep"});
    if (!document.contains("params")) fail("", "missing \"params\"");

    MarketParams params = parse_params(document.at("params"), "params");
    const Json* initial_json =
        document.contains("initial") ? &document.at("initial") : nullptr;

    Scenario scenario{params, parse_initial(initial_json, "initial", params)};

    if (document.contains("integrator")) {
        const Json& j = expect_object(document.at("integrator"), "integrator");
        check_keys(j, "integrator", {"step", "horizon", "method", "record_every"});
        scenario.integrator.step = number_or(j, "integrator", "step", scenario.integrator.step);
        scenario.integrator.horizon =
            number_or(j, "integrator", "horizon", scenario.integrator.horizon);
        scenario.integrator.record_every =
            int_or(j, "integrator", "record_every", scenario.integrator.record_every);
        if (j.contains("method")) {
            const std::string method = expect_string(j.at("method"), "integrator.method");
            if (method == "rk4") scenario.integrator.method = IntegratorMethod::RK4;
            else if (method == "euler") scenario.integrator.method = IntegratorMethod::Euler;
            else fail("integrator.method", "must be \"rk4\" or \"euler\"");
        }
        try {
            scenario.integrator.validate();
        } catch (const std::invalid_argument& e) {
            fail("integrator", e.what());
        }
    }

    if (document.contains("equilibrium")) {
        const Json& j = expect_object(document.at("equilibrium"), "equilibrium");
        check_keys(j, "equilibrium",
                   {"tol_n", "tol_q", "damping", "max_iter", "freeze_quality", "probe_starts"});
        scenario.equilibrium.tol_n = number_or(j, "equilibrium", "tol_n", -1.0);
        scenario.equilibrium.tol_q = number_or(j, "equilibrium", "tol_q", -1.0);
        scenario.equilibrium.damping =
            number_or(j, "equilibrium", "damping", scenario.equilibrium.damping);
        scenario.equilibrium.max_iter =
            int_or(j, "equilibrium", "max_iter", scenario.equilibrium.max_iter);
        scenario.equilibrium.freeze_quality =
            bool_or(j, "equilibrium", "freeze_quality", false);
        scenario.probe_starts = int_or(j, "equilibrium", "probe_starts", 0);
        if (!(scenario.equilibrium.damping > 0.0 && scenario.equilibrium.damping <= 1.0))
            fail("equilibrium.damping", "must be in (0, 1]");
        if (scenario.probe_starts < 0) fail("equilibrium.probe_starts", "must be >= 0");
    }

    if (document.contains("stability")) {
        const Json& j = expect_object(document.at("stability"), "stability");
        check_keys(j, "stability",
                   {"tol_eig", "newton_normalized_qdot", "quality_frozen", "method"});
        scenario.stability.tol_eig =
            number_or(j, "stability", "tol_eig", scenario.stability.tol_eig);
        scenario.stability.newton_normalized_qdot =
            bool_or(j, "stability", "newton_normalized_qdot", false);
        scenario.stability.quality_frozen = bool_or(j, "stability", "quality_frozen", false);
        if (j.contains("method")) {
            const std::string method = expect_string(j.at("method"), "stability.method");
            if (method == "analytic") scenario.stability.method = JacobianMethod::Analytic;
            else if (method == "finite-difference")
                scenario.stability.method = JacobianMethod::FiniteDifference;
            else fail("stability.method", "must be \"analytic\" or \"finite-difference\"");
        }
    }

    scenario.critical_beta.bracket = {0.0, 1.0};
    if (document.contains("critical_beta")) {
        const Json& j = expect_object(document.at("critical_beta"), "critical_beta");
        check_keys(j, "critical_beta", {"bracket", "tol", "quality_frozen",
                                        "newton_normalized_qdot"});
        if (j.contains("bracket")) {
            const Json& b = j.at("bracket");
            if (!b.is_array() || b.size() != 2) fail("critical_beta.bracket", "expected [lo, hi]");
            scenario.critical_beta.bracket = {expect_number(b[0], "critical_beta.bracket[0]"),
                                              expect_number(b[1], "critical_beta.bracket[1]")};
        }
        scenario.critical_beta.tol_beta =
            number_or(j, "critical_beta", "tol", scenario.critical_beta.tol_beta);
        scenario.critical_beta.quality_frozen =
            bool_or(j, "critical_beta", "quality_frozen", true);
        scenario.critical_beta.newton_normalized_qdot =
            bool_or(j, "critical_beta", "newton_normalized_qdot", false);
    }
    scenario.critical_beta.initial_quality = scenario.initial.quality;
    scenario.critical_beta.solve = scenario.equilibrium;

    if (document.contains("welfare")) {
        const Json& j = expect_object(document.at("welfare"), "welfare");
        check_keys(j, "welfare",
                   {"at", "head_effect_comparison", "perturbation", "horizon_over_gamma"});
        scenario.welfare.at = parse_anchor(j, "welfare", "at");
        scenario.welfare.head_effect_comparison =
            bool_or(j, "welfare", "head_effect_comparison", false);
        scenario.welfare.comparison.perturbation =
            number_or(j, "welfare", "perturbation", scenario.welfare.comparison.perturbation);
        scenario.welfare.comparison.horizon_over_gamma = number_or(
            j, "welfare", "horizon_over_gamma", scenario.welfare.comparison.horizon_over_gamma);
    }
    scenario.welfare.comparison.solve = scenario.equilibrium;

    if (document.contains("allocation")) {
        const Json& j = expect_object(document.at("allocation"), "allocation");
        check_keys(j, "allocation", {"mode", "tol", "max_iter", "coupled", "start", "at"});
        if (j.contains("mode")) {
            const std::string mode = expect_string(j.at("mode"), "allocation.mode");
            if (mode == "exact_gradient")
                scenario.allocation.options.mode = AllocationMode::ExactGradient;
            else if (mode == "paper_foc")
                scenario.allocation.options.mode = AllocationMode::PaperFoc;
            else fail("allocation.mode", "must be \"exact_gradient\" or \"paper_foc\"");
        }
        scenario.allocation.options.tol =
            number_or(j, "allocation", "tol", scenario.allocation.options.tol);
        scenario.allocation.options.max_iter =
            int_or(j, "allocation", "max_iter", scenario.allocation.options.max_iter);
        scenario.allocation.options.equilibrium_coupled =
            bool_or(j, "allocation", "coupled", false);
        if (j.contains("start"))
            scenario.allocation.start =
                parse_vector(j.at("start"), "allocation.start", params.n_streamers);
        scenario.allocation.at = parse_anchor(j, "allocation", "at");
    }
    scenario.allocation.options.solve = scenario.equilibrium;

    if (document.contains("control")) {
        const Json& j = expect_object(document.at("control"), "control");
        check_keys(j, "control",
                   {"horizon", "steps", "tol", "max_sweeps", "relaxation",
                    "include_quality_dynamics"});
        scenario.control.horizon = number_or(j, "control", "horizon", scenario.control.horizon);
        scenario.control.steps = int_or(j, "control", "steps", scenario.control.steps);
        scenario.control.tol = number_or(j, "control", "tol", scenario.control.tol);
        scenario.control.max_sweeps =
            int_or(j, "control", "max_sweeps", scenario.control.max_sweeps);
        scenario.control.relaxation =
            number_or(j, "control", "relaxation", scenario.control.relaxation);
        scenario.control.include_quality_dynamics =
            bool_or(j, "control", "include_quality_dynamics", false);
        if (!(scenario.control.horizon > 0.0)) fail("control.horizon", "must be > 0");
        if (scenario.control.steps < 1) fail("control.steps", "must be >= 1");
        if (!(scenario.control.relaxation > 0.0 && scenario.control.relaxation <= 1.0))
            fail("control.relaxation", "must be in (0, 1]");
    }

    if (document.contains("sweep")) {
        const Json& j = expect_object(document.at("sweep"), "sweep");
        check_keys(j, "sweep", {"parameter", "values", "secondary", "metric"});
        if (!j.contains("parameter") || !j.contains("values"))
            fail("sweep", "missing \"parameter\" or \"values\"");
        SweepConfig sweep;
        sweep.primary.parameter = expect_string(j.at("parameter"), "sweep.parameter");
        bool known = false;
        for (const char* name : kSweepableParameters)
            if (sweep.primary.parameter == name) known = true;
        if (!known) fail("sweep.parameter", "not a sweepable parameter");
        sweep.primary.values = parse_axis_values(j.at("values"), "sweep.values");
        if (j.contains("secondary"))
            sweep.secondary = parse_axis(j.at("secondary"), "sweep.secondary");
        if (j.contains("metric")) sweep.metric = expect_string(j.at("metric"), "sweep.metric");
        scenario.sweep = std::move(sweep);
    }

    return scenario;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw IoError("cannot open scenario file: " + path);
    Json document;
    try {
        document = Json::parse(file);
    } catch (const Json::parse_error& e) {
        throw ScenarioError(std::string("scenario is not valid JSON: ") + e.what());
    }
    return parse_scenario(document);
}

SweepResult run_sweep(const Scenario& scenario) {
    if (!scenario.sweep) throw ScenarioError("scenario has no \"sweep\" section");
    const SweepConfig& cfg = *scenario.sweep;
    SweepResult result;
    result.parameter = cfg.primary.parameter;
    result.metric = cfg.metric;
    if (cfg.secondary) result.parameter2 = cfg.secondary->parameter;

    for (double v1 : cfg.primary.values) {
        const MarketParams outer = with_parameter(scenario.params, cfg.primary.parameter, v1);
        if (cfg.secondary) {
            for (double v2 : cfg.secondary->values) {
                const MarketParams cell = with_parameter(outer, cfg.secondary->parameter, v2);
                result.rows.push_back({v1, v2, sweep_metric(scenario, cell, cfg.metric)});
            }
        } else {
            result.rows.push_back({v1, std::nullopt, sweep_metric(scenario, outer, cfg.metric)});
        }
    }
    return result;
}

std::string format_double(double x) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", x);
    return buffer;
}

Json to_json(const MarketState& state) {
    return Json{{"viewers", vector_to_json(state.viewers)},
                {"quality", vector_to_json(state.quality)},
                {"allocation", vector_to_json(state.allocation)}};
}

MarketState state_from_json(const Json& j) {
    return MarketState::unchecked(vector_from_json(j.at("viewers")),
                                  vector_from_json(j.at("quality")),
                                  vector_from_json(j.at("allocation")));
}

Json to_json(const EquilibriumReport& report) {
    Json probe = Json::array();
    for (const auto& [start, attained] : report.basin_probe)
        probe.push_back(Json{{"start", to_json(start)}, {"attained", to_json(attained)}});
    return Json{{"state", to_json(report.state)},     {"residual_n", report.residual_n},
                {"residual_q", report.residual_q},    {"iterations", report.iterations},
                {"converged", report.converged},      {"basin_probe", std::move(probe)}};
}

EquilibriumReport equilibrium_from_json(const Json& j) {
    EquilibriumReport report{state_from_json(j.at("state"))};
    report.residual_n = j.at("residual_n").get<double>();
    report.residual_q = j.at("residual_q").get<double>();
    report.iterations = j.at("iterations").get<int>();
    report.converged = j.at("converged").get<bool>();
    for (const Json& pair : j.at("basin_probe"))
        report.basin_probe.emplace_back(state_from_json(pair.at("start")),
                                        state_from_json(pair.at("attained")));
    return report;
}

Json to_json(const StabilityReport& report) {
    Json eigs = Json::array();
    for (const auto& z : report.eigenvalues) eigs.push_back(Json::array({z.real(), z.imag()}));
    return Json{
        {"jacobian", matrix_to_json(report.jacobian)},
        {"eigenvalues", std::move(eigs)},
        {"max_real_part", report.max_real_part},
        {"stable", report.stable},
        {"method",
         report.method == JacobianMethod::Analytic ? "analytic" : "finite-difference"},
        {"at_steady_state", report.at_steady_state}};
}

StabilityReport stability_from_json(const Json& j) {
    StabilityReport report;
    report.jacobian = matrix_from_json(j.at("jacobian"));
    for (const Json& z : j.at("eigenvalues"))
        report.eigenvalues.emplace_back(z[0].get<double>(), z[1].get<double>());
    report.max_real_part = j.at("max_real_part").get<double>();
    report.stable = j.at("stable").get<bool>();
    report.method = j.at("method").get<std::string>() == "analytic"
                        ? JacobianMethod::Analytic
                        : JacobianMethod::FiniteDifference;
    report.at_steady_state = j.at("at_steady_state").get<bool>();
    return report;
}

Json to_json(const CriticalBetaReport& report) {
    Json out{{"beta_star", report.beta_star},
             {"bracket", Json::array({report.bracket.first, report.bracket.second})},
             {"quality_frozen", report.quality_frozen}};
    out["analytic_reference"] =
        report.analytic_reference ? Json(*report.analytic_reference) : Json(nullptr);
    return out;
}

CriticalBetaReport critical_beta_from_json(const Json& j) {
    CriticalBetaReport report;
    report.beta_star = j.at("beta_star").get<double>();
    report.bracket = {j.at("bracket")[0].get<double>(), j.at("bracket")[1].get<double>()};
    report.quality_frozen = j.at("quality_frozen").get<bool>();
    if (!j.at("analytic_reference").is_null())
        report.analytic_reference = j.at("analytic_reference").get<double>();
    return report;
}

Json to_json(const WelfareBreakdown& breakdown) {
    return Json{{"consumer_surplus", breakdown.consumer_surplus},
                {"producer_surplus", breakdown.producer_surplus},
                {"platform_profit", breakdown.platform_profit},
                {"total", breakdown.total},
                {"shares", vector_to_json(breakdown.shares)},
                {"hhi", breakdown.hhi},
                {"head_effect", breakdown.head_effect}};
}

WelfareBreakdown welfare_from_json(const Json& j) {
    WelfareBreakdown w;
    w.consumer_surplus = j.at("consumer_surplus").get<double>();
    w.producer_surplus = j.at("producer_surplus").get<double>();
    w.platform_profit = j.at("platform_profit").get<double>();
    w.total = j.at("total").get<double>();
    w.shares = vector_from_json(j.at("shares"));
    w.hhi = j.at("hhi").get<double>();
    w.head_effect = j.at("head_effect").get<bool>();
    return w;
}

Json to_json(const HeadEffectComparison& comparison) {
    return Json{{"beta_star", comparison.beta_star},
                {"beta_high", comparison.beta_high},
                {"beta_low", comparison.beta_low},
                {"concentrated", to_json(comparison.concentrated)},
                {"balanced", to_json(comparison.balanced)},
                {"symmetric_at_high_beta", to_json(comparison.symmetric_at_high_beta)},
                {"concentrated_at_high_beta", to_json(comparison.concentrated_at_high_beta)},
                {"cs_delta", comparison.cs_delta},
                {"ps_delta", comparison.ps_delta}};
}

Json to_json(const AllocationSolution& solution) {
    Json corners = Json::array();
    for (int i : solution.active_corners) corners.push_back(i);
    return Json{{"theta", vector_to_json(solution.theta)},
                {"lambda", solution.lambda},
                {"mu", vector_to_json(solution.mu)},
                {"gradient", vector_to_json(solution.gradient)},
                {"welfare", solution.welfare},
                {"foc_residual", solution.foc_residual},
                {"active_corners", std::move(corners)},
                {"mode", to_string(solution.mode)},
                {"converged", solution.converged},
                {"infeasible", solution.infeasible},
                {"iterations", solution.iterations}};
}

AllocationSolution allocation_from_json(const Json& j) {
    AllocationSolution solution;
    solution.theta = vector_from_json(j.at("theta"));
    solution.lambda = j.at("lambda").get<double>();
    solution.mu = vector_from_json(j.at("mu"));
    solution.gradient = vector_from_json(j.at("gradient"));
    solution.welfare = j.at("welfare").get<double>();
    solution.foc_residual = j.at("foc_residual").get<double>();
    for (const Json& i : j.at("active_corners")) solution.active_corners.push_back(i.get<int>());
    solution.mode = j.at("mode").get<std::string>() == "exact_gradient"
                        ? AllocationMode::ExactGradient
                        : AllocationMode::PaperFoc;
    solution.converged = j.at("converged").get<bool>();
    solution.infeasible = j.at("infeasible").get<bool>();
    solution.iterations = j.at("iterations").get<int>();
    return solution;
}

Json to_json(const ControlSolution& solution) {
    Json states = Json::array();
    for (const MarketState& s : solution.states) states.push_back(to_json(s));
    return Json{{"times", solution.times},
                {"theta_path", matrix_to_json(solution.theta_path)},
                {"costates", matrix_to_json(solution.costates)},
                {"quality_costates", matrix_to_json(solution.quality_costates)},
                {"states", std::move(states)},
                {"welfare_path", solution.welfare_path},
                {"foc_residual_path", solution.foc_residual_path},
                {"discounted_welfare", solution.discounted_welfare},
                {"converged", solution.converged},
                {"sweeps", solution.sweeps}};
}

ControlSolution control_from_json(const Json& j) {
    ControlSolution solution;
    solution.times = j.at("times").get<std::vector<double>>();
    solution.theta_path = matrix_from_json(j.at("theta_path"));
    solution.costates = matrix_from_json(j.at("costates"));
    solution.quality_costates = matrix_from_json(j.at("quality_costates"));
    for (const Json& s : j.at("states")) solution.states.push_back(state_from_json(s));
    solution.welfare_path = j.at("welfare_path").get<std::vector<double>>();
    solution.foc_residual_path = j.at("foc_residual_path").get<std::vector<double>>();
    solution.discounted_welfare = j.at("discounted_welfare").get<double>();
    solution.converged = j.at("converged").get<bool>();
    solution.sweeps = j.at("sweeps").get<int>();
    return solution;
}

void trajectory_to_csv(std::ostream& os, const Trajectory& trajectory) {
    const int n = trajectory.states.empty() ? 0 : trajectory.states.front().size();
    std::vector<std::string> header{"t"};
    for (int i = 1; i <= n; ++i) header.push_back("n_" + std::to_string(i));
    for (int i = 1; i <= n; ++i) header.push_back("q_" + std::to_string(i));
    for (int i = 1; i <= n; ++i) header.push_back("s_" + std::to_string(i));
    header.push_back("hhi");
    csv_row(os, header);

    std::vector<std::string> cells;
    for (std::size_t k = 0; k < trajectory.times.size(); ++k) {
        cells.clear();
        cells.push_back(format_double(trajectory.times[k]));
        const MarketState& s = trajectory.states[k];
        for (int i = 0; i < n; ++i) cells.push_back(format_double(s.viewers[i]));
        for (int i = 0; i < n; ++i) cells.push_back(format_double(s.quality[i]));
        for (int i = 0; i < n; ++i) cells.push_back(format_double(trajectory.shares[k][i]));
        cells.push_back(format_double(trajectory.hhi[k]));
        csv_row(os, cells);
    }
}

Trajectory trajectory_from_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw IoError("empty trajectory CSV");
    int columns = 1;
    for (char c : line) columns += c == ',';
    const int n = (columns - 2) / 3;
    if (n < 1 || columns != 2 + 3 * n) throw IoError("malformed trajectory CSV header");

    Trajectory out;
    const Vector theta = Vector::Constant(n, 1.0 / n);  // allocation is not serialized
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<double> values;
        while (std::getline(row, cell, ',')) values.push_back(std::stod(cell));
        if (static_cast<int>(values.size()) != columns)
            throw IoError("malformed trajectory CSV row");
        out.times.push_back(values[0]);
        Vector viewers(n), quality(n), shares(n);
        for (int i = 0; i < n; ++i) viewers[i] = values[1 + i];
        for (int i = 0; i < n; ++i) quality[i] = values[1 + n + i];
        for (int i = 0; i < n; ++i) shares[i] = values[1 + 2 * n + i];
        out.states.push_back(MarketState::unchecked(viewers, quality, theta));
        out.shares.push_back(std::move(shares));
        out.hhi.push_back(values.back());
    }
    return out;
}

void control_to_csv(std::ostream& os, const ControlSolution& solution) {
    const int n = solution.states.empty() ? 0 : solution.states.front().size();
    std::vector<std::string> header{"t"};
    for (int i = 1; i <= n; ++i) header.push_back("theta_" + std::to_string(i));
    for (int i = 1; i <= n; ++i) header.push_back("lambda_" + std::to_string(i));
    for (int i = 1; i <= n; ++i) header.push_back("n_" + std::to_string(i));
    header.push_back("w");
    csv_row(os, header);

    std::vector<std::string> cells;
    for (std::size_t k = 0; k < solution.times.size(); ++k) {
        cells.clear();
        cells.push_back(format_double(solution.times[k]));
        for (int i = 0; i < n; ++i)
            cells.push_back(format_double(solution.theta_path(static_cast<Eigen::Index>(k), i)));
        for (int i = 0; i < n; ++i)
            cells.push_back(format_double(solution.costates(static_cast<Eigen::Index>(k), i)));
        for (int i = 0; i < n; ++i)
            cells.push_back(format_double(solution.states[k].viewers[i]));
        cells.push_back(format_double(solution.welfare_path[k]));
        csv_row(os, cells);
    }
}

void sweep_to_csv(std::ostream& os, const SweepResult& result) {
    std::vector<std::string> header{"parameter", "value"};
    if (result.parameter2) {
        header.push_back("parameter2");
        header.push_back("value2");
    }
    header.push_back("metric");
    header.push_back("metric_value");
    csv_row(os, header);

    for (const SweepRow& row : result.rows) {
        std::vector<std::string> cells{result.parameter, format_double(row.value)};
        if (result.parameter2) {
            cells.push_back(*result.parameter2);
            cells.push_back(format_double(*row.value2));
        }
        cells.push_back(result.metric);
        cells.push_back(format_double(row.metric_value));
        csv_row(os, cells);
    }
}

void welfare_to_csv(std::ostream& os, const WelfareBreakdown& breakdown) {
    std::vector<std::string> header{"consumer_surplus", "producer_surplus", "platform_profit",
                                    "total",            "hhi",              "head_effect"};
    const int n = static_cast<int>(breakdown.shares.size());
    for (int i = 1; i <= n; ++i) header.push_back("s_" + std::to_string(i));
    csv_row(os, header);

    std::vector<std::string> cells{
        format_double(breakdown.consumer_surplus), format_double(breakdown.producer_surplus),
        format_double(breakdown.platform_profit),  format_double(breakdown.total),
        format_double(breakdown.hhi),              breakdown.head_effect ? "1" : "0"};
    for (int i = 0; i < n; ++i) cells.push_back(format_double(breakdown.shares[i]));
    csv_row(os, cells);
}

}  // namespace streammarket
