#include "streammarket/allocation.hpp"
#include "streammarket/control.hpp"
#include "streammarket/dynamics.hpp"
#include "streammarket/equilibrium.hpp"
#include "streammarket/market.hpp"
#include "streammarket/stability.hpp"
#include "streammarket/welfare.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace streammarket;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Attention-market simulation and optimization toolkit";
    m.attr("__version__") = "0.1.0";

    py::enum_<CostSpec::Kind>(m, "CostKind")
        .value("Quadratic", CostSpec::Kind::Quadratic)
        .value("Cubic", CostSpec::Kind::Cubic);

    py::class_<CostSpec>(m, "CostSpec")
        .def_static("quadratic", &CostSpec::quadratic, py::arg("kappa"))
        .def_static("cubic", &CostSpec::cubic, py::arg("a"), py::arg("b"))
        .def_property_readonly("kind", &CostSpec::kind)
        .def("value", &CostSpec::value, py::arg("q"))
        .def("derivative", &CostSpec::derivative, py::arg("q"))
        .def("second_derivative", &CostSpec::second_derivative, py::arg("q"))
        .def("third_derivative", &CostSpec::third_derivative, py::arg("q"));

    py::class_<MarketParams>(m, "MarketParams")
        .def(py::init<int, double, Vector, Vector, double, double, double, double, double,
                      double, double, CostSpec>(),
             py::arg("n_streamers"), py::arg("total_viewers"), py::arg("attractiveness"),
             py::arg("price"), py::arg("network_effect"), py::arg("viewer_speed"),
             py::arg("quality_speed"), py::arg("platform_cut"), py::arg("revenue_rate"),
             py::arg("traffic_sensitivity"), py::arg("discount_rate"), py::arg("cost"))
        .def_static("symmetric", &MarketParams::symmetric, py::arg("n_streamers"),
                    py::arg("total_viewers"), py::arg("alpha"), py::arg("p"),
                    py::arg("network_effect"), py::arg("viewer_speed"), py::arg("quality_speed"),
                    py::arg("platform_cut"), py::arg("revenue_rate"),
                    py::arg("traffic_sensitivity"), py::arg("discount_rate"), py::arg("cost"))
        .def_readonly("n_streamers", &MarketParams::n_streamers)
        .def_readonly("total_viewers", &MarketParams::total_viewers)
        .def_readonly("attractiveness", &MarketParams::attractiveness)
        .def_readonly("price", &MarketParams::price)
        .def_readwrite("network_effect", &MarketParams::network_effect)
        .def_readonly("viewer_speed", &MarketParams::viewer_speed)
        .def_readonly("quality_speed", &MarketParams::quality_speed)
        .def_readonly("platform_cut", &MarketParams::platform_cut)
        .def_readonly("revenue_rate", &MarketParams::revenue_rate)
        .def_readonly("traffic_sensitivity", &MarketParams::traffic_sensitivity)
        .def_readonly("discount_rate", &MarketParams::discount_rate)
        .def_readonly("cost", &MarketParams::cost)
        .def("is_symmetric", &MarketParams::is_symmetric, py::arg("tol") = 0.0)
        .def("with_network_effect", &MarketParams::with_network_effect, py::arg("beta"));

    py::class_<MarketState>(m, "MarketState")
        .def(py::init<Vector, Vector, Vector>(), py::arg("viewers"), py::arg("quality"),
             py::arg("allocation"))
        .def_readonly("viewers", &MarketState::viewers)
        .def_readonly("quality", &MarketState::quality)
        .def_readonly("allocation", &MarketState::allocation)
        .def("__len__", &MarketState::size);

    py::enum_<QualityLaw>(m, "QualityLaw")
        .value("GradientAscent", QualityLaw::GradientAscent)
        .value("NewtonNormalized", QualityLaw::NewtonNormalized);

    py::class_<ProbabilityJacobians>(m, "ProbabilityJacobians")
        .def_readonly("dn", &ProbabilityJacobians::dn)
        .def_readonly("dq", &ProbabilityJacobians::dq)
        .def_readonly("dtheta", &ProbabilityJacobians::dtheta);

    m.def("utilities", &utilities, py::arg("params"), py::arg("state"));
    m.def("choice_probabilities", &choice_probabilities, py::arg("utilities"));
    m.def("log_sum_exp", &log_sum_exp, py::arg("utilities"));
    m.def("probability_jacobians", &probability_jacobians, py::arg("params"), py::arg("state"));
    m.def("streamer_profit", &streamer_profit, py::arg("params"), py::arg("state"),
          py::arg("i"));
    m.def("quality_drift", &quality_drift, py::arg("params"), py::arg("state"),
          py::arg("law") = QualityLaw::GradientAscent);
    m.def("viewer_drift", &viewer_drift, py::arg("params"), py::arg("state"));

    py::enum_<IntegratorMethod>(m, "IntegratorMethod")
        .value("RK4", IntegratorMethod::RK4)
        .value("Euler", IntegratorMethod::Euler);

    py::class_<IntegratorConfig>(m, "IntegratorConfig")
        .def(py::init<>())
        .def_readwrite("step", &IntegratorConfig::step)
        .def_readwrite("horizon", &IntegratorConfig::horizon)
        .def_readwrite("method", &IntegratorConfig::method)
        .def_readwrite("record_every", &IntegratorConfig::record_every);

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("times", &Trajectory::times)
        .def_readonly("states", &Trajectory::states)
        .def_readonly("shares", &Trajectory::shares)
        .def_readonly("hhi", &Trajectory::hhi)
        .def_property_readonly("final_state", &Trajectory::final_state);

    py::class_<PathDependenceReport>(m, "PathDependenceReport")
        .def_readonly("times", &PathDependenceReport::times)
        .def_readonly("delta_n", &PathDependenceReport::delta_n)
        .def_readonly("dominant", &PathDependenceReport::dominant)
        .def_readonly("crossover", &PathDependenceReport::crossover)
        .def_readonly("trajectory", &PathDependenceReport::trajectory);

    m.def("integrate", &integrate, py::arg("params"), py::arg("initial"), py::arg("config"),
          py::arg("theta_schedule") = nullptr);
    m.def("path_dependence_experiment", &path_dependence_experiment, py::arg("params"),
          py::arg("epsilon"), py::arg("config"));

    py::class_<SteadyStateOptions>(m, "SteadyStateOptions")
        .def(py::init<>())
        .def_readwrite("tol_n", &SteadyStateOptions::tol_n)
        .def_readwrite("tol_q", &SteadyStateOptions::tol_q)
        .def_readwrite("damping", &SteadyStateOptions::damping)
        .def_readwrite("max_iter", &SteadyStateOptions::max_iter)
        .def_readwrite("freeze_quality", &SteadyStateOptions::freeze_quality);

    py::class_<EquilibriumReport>(m, "EquilibriumReport")
        .def_readonly("state", &EquilibriumReport::state)
        .def_readonly("residual_n", &EquilibriumReport::residual_n)
        .def_readonly("residual_q", &EquilibriumReport::residual_q)
        .def_readonly("iterations", &EquilibriumReport::iterations)
        .def_readonly("converged", &EquilibriumReport::converged)
        .def_readonly("basin_probe", &EquilibriumReport::basin_probe);

    m.def("solve_steady_state", &solve_steady_state, py::arg("params"), py::arg("start"),
          py::arg("options") = SteadyStateOptions{});
    m.def("quality_best_response", &quality_best_response, py::arg("params"), py::arg("state"),
          py::arg("i"));
    m.def("basin_probe", &basin_probe, py::arg("params"), py::arg("allocation"),
          py::arg("count"), py::arg("seed"), py::arg("options") = SteadyStateOptions{});

    py::enum_<JacobianMethod>(m, "JacobianMethod")
        .value("Analytic", JacobianMethod::Analytic)
        .value("FiniteDifference", JacobianMethod::FiniteDifference);

    py::class_<StabilityOptions>(m, "StabilityOptions")
        .def(py::init<>())
        .def_readwrite("tol_eig", &StabilityOptions::tol_eig)
        .def_readwrite("newton_normalized_qdot", &StabilityOptions::newton_normalized_qdot)
        .def_readwrite("quality_frozen", &StabilityOptions::quality_frozen)
        .def_readwrite("method", &StabilityOptions::method);

    py::class_<StabilityReport>(m, "StabilityReport")
        .def_readonly("jacobian", &StabilityReport::jacobian)
        .def_readonly("eigenvalues", &StabilityReport::eigenvalues)
        .def_readonly("max_real_part", &StabilityReport::max_real_part)
        .def_readonly("stable", &StabilityReport::stable)
        .def_readonly("method", &StabilityReport::method)
        .def_readonly("at_steady_state", &StabilityReport::at_steady_state);

    py::class_<CriticalBetaOptions>(m, "CriticalBetaOptions")
        .def(py::init<>())
        .def_readwrite("quality_frozen", &CriticalBetaOptions::quality_frozen)
        .def_readwrite("bracket", &CriticalBetaOptions::bracket)
        .def_readwrite("tol_beta", &CriticalBetaOptions::tol_beta)
        .def_readwrite("initial_quality", &CriticalBetaOptions::initial_quality)
        .def_readwrite("newton_normalized_qdot", &CriticalBetaOptions::newton_normalized_qdot)
        .def_readwrite("solve", &CriticalBetaOptions::solve);

    py::class_<CriticalBetaReport>(m, "CriticalBetaReport")
        .def_readonly("beta_star", &CriticalBetaReport::beta_star)
        .def_readonly("bracket", &CriticalBetaReport::bracket)
        .def_readonly("quality_frozen", &CriticalBetaReport::quality_frozen)
        .def_readonly("analytic_reference", &CriticalBetaReport::analytic_reference);

    m.def("jacobian_at", &jacobian_at, py::arg("params"), py::arg("state"),
          py::arg("law") = QualityLaw::GradientAscent);
    m.def("jacobian_fd", &jacobian_fd, py::arg("params"), py::arg("state"),
          py::arg("law") = QualityLaw::GradientAscent, py::arg("step") = 1e-6);
    m.def("eigenvalues", &eigenvalues, py::arg("matrix"));
    m.def("classify_stability", &classify_stability, py::arg("params"), py::arg("state"),
          py::arg("options") = StabilityOptions{});
    m.def("critical_beta", &critical_beta, py::arg("params"), py::arg("options"));
    m.def("perturbation_decay_rate", &perturbation_decay_rate, py::arg("params"),
          py::arg("state"), py::arg("relative_size") = 1e-4,
          py::arg("options") = StabilityOptions{});

    py::class_<WelfareBreakdown>(m, "WelfareBreakdown")
        .def_readonly("consumer_surplus", &WelfareBreakdown::consumer_surplus)
        .def_readonly("producer_surplus", &WelfareBreakdown::producer_surplus)
        .def_readonly("platform_profit", &WelfareBreakdown::platform_profit)
        .def_readonly("total", &WelfareBreakdown::total)
        .def_readonly("shares", &WelfareBreakdown::shares)
        .def_readonly("hhi", &WelfareBreakdown::hhi)
        .def_readonly("head_effect", &WelfareBreakdown::head_effect);

    py::class_<HeadEffectComparison>(m, "HeadEffectComparison")
        .def_readonly("beta_star", &HeadEffectComparison::beta_star)
        .def_readonly("beta_high", &HeadEffectComparison::beta_high)
        .def_readonly("beta_low", &HeadEffectComparison::beta_low)
        .def_readonly("concentrated", &HeadEffectComparison::concentrated)
        .def_readonly("balanced", &HeadEffectComparison::balanced)
        .def_readonly("symmetric_at_high_beta", &HeadEffectComparison::symmetric_at_high_beta)
        .def_readonly("concentrated_at_high_beta",
                      &HeadEffectComparison::concentrated_at_high_beta)
        .def_readonly("cs_delta", &HeadEffectComparison::cs_delta)
        .def_readonly("ps_delta", &HeadEffectComparison::ps_delta);

    py::class_<HeadEffectComparisonOptions>(m, "HeadEffectComparisonOptions")
        .def(py::init<>())
        .def_readwrite("perturbation", &HeadEffectComparisonOptions::perturbation)
        .def_readwrite("horizon_over_gamma", &HeadEffectComparisonOptions::horizon_over_gamma)
        .def_readwrite("solve", &HeadEffectComparisonOptions::solve);

    m.def("shares_and_hhi", &shares_and_hhi, py::arg("state"), py::arg("total_viewers"));
    m.def("consumer_surplus", &consumer_surplus, py::arg("params"), py::arg("state"));
    m.def("producer_surplus", &producer_surplus, py::arg("params"), py::arg("state"));
    m.def("platform_profit", &platform_profit, py::arg("params"), py::arg("state"));
    m.def("welfare_breakdown", &welfare_breakdown, py::arg("params"), py::arg("state"));
    m.def("head_effect_comparison", &head_effect_comparison, py::arg("params"),
          py::arg("options") = HeadEffectComparisonOptions{});

    py::enum_<AllocationMode>(m, "AllocationMode")
        .value("ExactGradient", AllocationMode::ExactGradient)
        .value("PaperFoc", AllocationMode::PaperFoc);

    py::class_<AllocationOptions>(m, "AllocationOptions")
        .def(py::init<>())
        .def_readwrite("mode", &AllocationOptions::mode)
        .def_readwrite("tol", &AllocationOptions::tol)
        .def_readwrite("max_iter", &AllocationOptions::max_iter)
        .def_readwrite("equilibrium_coupled", &AllocationOptions::equilibrium_coupled)
        .def_readwrite("solve", &AllocationOptions::solve);

    py::class_<AllocationSolution>(m, "AllocationSolution")
        .def_readonly("theta", &AllocationSolution::theta)
        .def_readonly("lambda_", &AllocationSolution::lambda)
        .def_readonly("mu", &AllocationSolution::mu)
        .def_readonly("gradient", &AllocationSolution::gradient)
        .def_readonly("welfare", &AllocationSolution::welfare)
        .def_readonly("foc_residual", &AllocationSolution::foc_residual)
        .def_readonly("active_corners", &AllocationSolution::active_corners)
        .def_readonly("mode", &AllocationSolution::mode)
        .def_readonly("converged", &AllocationSolution::converged)
        .def_readonly("infeasible", &AllocationSolution::infeasible)
        .def_readonly("iterations", &AllocationSolution::iterations);

    m.def("simplex_project", &simplex_project, py::arg("y"));
    m.def("welfare_of", &welfare_of, py::arg("params"), py::arg("base"), py::arg("theta"),
          py::arg("equilibrium_coupled") = false,
          py::arg("solve") = SteadyStateOptions{});
    m.def("optimize_allocation", &optimize_allocation, py::arg("params"), py::arg("base"),
          py::arg("start"), py::arg("options") = AllocationOptions{});

    py::class_<ControlOptions>(m, "ControlOptions")
        .def(py::init<>())
        .def_readwrite("horizon", &ControlOptions::horizon)
        .def_readwrite("steps", &ControlOptions::steps)
        .def_readwrite("tol", &ControlOptions::tol)
        .def_readwrite("max_sweeps", &ControlOptions::max_sweeps)
        .def_readwrite("relaxation", &ControlOptions::relaxation)
        .def_readwrite("include_quality_dynamics", &ControlOptions::include_quality_dynamics);

    py::class_<ControlSolution>(m, "ControlSolution")
        .def_readonly("times", &ControlSolution::times)
        .def_readonly("theta_path", &ControlSolution::theta_path)
        .def_readonly("costates", &ControlSolution::costates)
        .def_readonly("quality_costates", &ControlSolution::quality_costates)
        .def_readonly("states", &ControlSolution::states)
        .def_readonly("welfare_path", &ControlSolution::welfare_path)
        .def_readonly("foc_residual_path", &ControlSolution::foc_residual_path)
        .def_readonly("discounted_welfare", &ControlSolution::discounted_welfare)
        .def_readonly("converged", &ControlSolution::converged)
        .def_readonly("sweeps", &ControlSolution::sweeps);

    m.def("hamiltonian", &hamiltonian, py::arg("params"), py::arg("state"), py::arg("costate"));
    m.def("costate_drift", &costate_drift, py::arg("params"), py::arg("state"),
          py::arg("costate"));
    m.def("solve_fbsm", &solve_fbsm, py::arg("params"), py::arg("initial"), py::arg("options"));
}
