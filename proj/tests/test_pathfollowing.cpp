// SPDX-License-Identifier: Apache-2.0
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace pfcrack;
using namespace testing_support;

namespace {

SymTensor2 yy(double v) { return {0.0, v, 0.0}; }

/// Coarse GEO-T1-WHL path from initialization to a little crack growth, with
/// every converged state kept for invariant checks.
struct CoarseRun {
    std::shared_ptr<const Mesh> mesh;
    PhaseField alpha0;
    std::vector<FieldState> states;
    PathResult result;
    double lambda_c = 0.0;
    double f_c = 0.0;
};

CoarseRun coarse_run(const std::string& id, double max_growth, int max_steps = 400, double cap = 0.08)
{
    const double ell = 6e-5;
    const auto g = coarse_geometry(ell);
    const auto pf = coarse_phase(ell);
    const MaterialParams mat;
    CoarseRun run;
    const auto init = initialize(parse_technique(id), g, true, pf);
    run.mesh = init.mesh;
    run.alpha0 = init.alpha;
    const auto ref = lefm_unit_state(g, g.crack_length, mat, {1e-4, 3e-4});
    run.lambda_c = critical_load_factor(ref.g_bar, mat.gc);
    run.f_c = run.lambda_c * ref.f_bar;
    static std::vector<std::unique_ptr<FeSpace>> spaces; // outlive the follower below
    spaces.push_back(std::make_unique<FeSpace>(*init.mesh));
    const FeSpace& space = *spaces.back();
    ControlParams ctrl;
    ctrl.max_delta_eps = cap;
    PathFollower follower(space, mat, pf, ctrl);
    const Eigen::VectorXd ubar = follower.unit_solution(init.alpha.values);
    follower.set_delta(suggest_delta_eps(strain_at_quadrature(space, ubar), ctrl.measure, run.lambda_c, 50));
    StopCriteria stop;
    stop.max_steps = max_steps;
    stop.max_crack_growth = max_growth;
    run.result = run_equilibrium_path(follower, follower.initial_state(init.alpha), stop,
                                      [&](const FieldState& s, const LoadStepRecord&) { run.states.push_back(s); });
    return run;
}

const CoarseRun& whl_run()
{
    static const CoarseRun run = coarse_run("GEO-T1-WHL", 3e-5);
    return run;
}

} // namespace

TEST(ControlEquation, LinearSingleBranch)
{
    const std::vector<SymTensor2> bar{yy(0.5), yy(2.0), yy(-1.0)};
    const std::vector<SymTensor2> prev(3);
    const auto s = solve_control_equation(bar, prev, 1e-3, StrainMeasure::loading_component, 1e-12);
    ASSERT_TRUE(s.found);
    EXPECT_NEAR(s.lambda, 1e-3 / 2.0, 1e-12 * 5e-4);
    std::vector<SymTensor2> twice;
    for (const auto& t : bar) {
        twice.push_back(t * 2.0);
    }
    const auto s2 = solve_control_equation(twice, prev, 1e-3, StrainMeasure::loading_component, 1e-12);
    EXPECT_NEAR(s2.lambda, 0.5 * s.lambda, 1e-11 * s.lambda);
}

TEST(ControlEquation, CrossingBranchesPickLargestRoot)
{
    // A: lambda - 0.5, B: 0.2 lambda + 0.1.
    const std::vector<SymTensor2> bar{yy(1.0), yy(0.2)};
    const std::vector<SymTensor2> prev{yy(0.5), yy(-0.1)};
    const auto s = solve_control_equation(bar, prev, 0.7, StrainMeasure::loading_component, 1e-12);
    ASSERT_TRUE(s.found);
    const auto f = [](double l) { return std::max(l - 0.5, 0.2 * l + 0.1); };
    const double oracle = grid_largest_root(f, 0.7, 0.0, 10.0, 1e-6);
    EXPECT_NEAR(oracle, 1.2, 1e-9);
    EXPECT_NEAR(s.lambda, oracle, 1e-9);
    EXPECT_LE(std::abs(f(s.lambda) - 0.7), 1e-12 * 0.7);
}

TEST(ControlEquation, NonMonotoneMaximumUsesIncreasingBranch)
{
    // max(1 - lambda, lambda - 1.5) is 0.3 at lambda = 0.7 and at 1.8: the root right of the minimum wins.
    const std::vector<SymTensor2> bar{yy(-1.0), yy(1.0)};
    const std::vector<SymTensor2> prev{yy(-1.0), yy(1.5)};
    const auto s = solve_control_equation(bar, prev, 0.3, StrainMeasure::loading_component, 1e-12);
    ASSERT_TRUE(s.found);
    const auto f = [](double l) { return std::max(1 - l, l - 1.5); };
    EXPECT_NEAR(s.lambda, grid_largest_root(f, 0.3, 0.0, 10.0, 1e-6), 1e-9);
    EXPECT_NEAR(s.lambda, 1.8, 1e-9);
}

TEST(ControlEquation, NoRootWhenIncrementAlreadyExceeded)
{
    // max(lambda + 1) >= 1 > 0.7 for all lambda >= 0.
    const std::vector<SymTensor2> bar{yy(1.0)};
    const std::vector<SymTensor2> prev{yy(-1.0)};
    const auto s = solve_control_equation(bar, prev, 0.7, StrainMeasure::loading_component, 1e-12);
    EXPECT_FALSE(s.found);
    EXPECT_THROW(solve_control_equation({yy(-1.0)}, {yy(0.0)}, 0.7, StrainMeasure::loading_component, 1e-12),
                 ControlEquationError);
}

TEST(ControlEquation, PrincipalMeasureUsesLargestEigenvalue)
{
    const SymTensor2 t{0.1, -0.3, 0.2};
    const Eigen::Matrix2d m{{0.1, 0.2}, {0.2, -0.3}};
    EXPECT_NEAR(strain_measure(t, StrainMeasure::principal_max), m.selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff(),
                1e-15);
    EXPECT_EQ(strain_measure(t, StrainMeasure::loading_component), -0.3);
    EXPECT_EQ(parse_strain_measure("loading_component"), StrainMeasure::loading_component);
    EXPECT_EQ(to_string(StrainMeasure::principal_max), "principal_max");
    EXPECT_THROW(parse_strain_measure("l2"), Error);
}

TEST(LoadStep, ElasticRegimeTakesOneIterationAndLinearIncrements)
{
    const double ell = 6e-5;
    const auto g = coarse_geometry(ell);
    const auto pf = coarse_phase(ell);
    const MaterialParams mat;
    const auto init = initialize(parse_technique("GEO-T1-NEU"), g, true, pf);
    const FeSpace space(*init.mesh);
    ControlParams ctrl;
    ctrl.delta_eps_imp = 1e-5;
    PathFollower follower(space, mat, pf, ctrl);
    FieldState s = follower.initial_state(init.alpha);
    std::vector<double> lambdas{0.0};
    for (int n = 1; n <= 4; ++n) {
        const auto out = follower.load_step(s, n);
        EXPECT_EQ(out.record.iterations, 1);
        EXPECT_FALSE(out.record.reduced_increment);
        EXPECT_EQ(out.state.alpha.values.lpNorm<Eigen::Infinity>(), 0.0);
        EXPECT_NEAR(realized_increment(space, out.state.u.values, s.u.values, ctrl.measure), ctrl.delta_eps_imp,
                    1e-9 * ctrl.delta_eps_imp);
        s = out.state;
        lambdas.push_back(s.lambda);
    }
    for (std::size_t k = 1; k < lambdas.size(); ++k) {
        EXPECT_NEAR(lambdas[k] - lambdas[k - 1], lambdas[1], 1e-8 * lambdas[1]);
    }
}

TEST(LoadStep, StalledMinimizationRetriesWithSmallerIncrement)
{
    const double ell = 6e-5;
    const auto g = coarse_geometry(ell);
    const auto pf = coarse_phase(ell);
    const MaterialParams mat;
    const auto init = initialize(parse_technique("GEO-T1-WHL"), g, true, pf);
    const FeSpace space(*init.mesh);
    ControlParams ctrl;
    ctrl.delta_eps_imp = 0.5; // damages a large zone at once
    {
        PathFollower follower(space, mat, pf, ctrl, 1e-4, 3);
        const auto out = follower.load_step(follower.initial_state(init.alpha), 1);
        EXPECT_TRUE(out.record.reduced_increment);
        EXPECT_LT(out.record.delta_eps, ctrl.delta_eps_imp);
        EXPECT_LE(out.record.iterations, 3);
    }
    ctrl.max_halvings = 0;
    PathFollower follower(space, mat, pf, ctrl, 1e-4, 3);
    EXPECT_THROW(follower.load_step(follower.initial_state(init.alpha), 1), SolverError);
}

TEST(LoadStep, StallTreatmentKeepsIrreversibilityAndControl)
{
    const double ell = 6e-5;
    const auto g = coarse_geometry(ell);
    const auto pf = coarse_phase(ell);
    const MaterialParams mat;
    const auto init = initialize(parse_technique("GEO-T1-WHL"), g, true, pf);
    const FeSpace space(*init.mesh);
    ControlParams ctrl;
    ctrl.delta_eps_imp = 0.05;
    ctrl.stall_iterations = 2;
    PathFollower follower(space, mat, pf, ctrl);
    const FieldState s0 = follower.initial_state(init.alpha);
    const auto out = follower.load_step(s0, 1);
    ASSERT_GT(out.record.iterations, 2);
    EXPECT_TRUE(out.record.stalled);
    EXPECT_GE((out.state.alpha.values - s0.alpha.values).minCoeff(), 0.0);
    EXPECT_NO_THROW(out.state.alpha.check(0.0));
    const double inc = realized_increment(space, out.state.u.values, s0.u.values, ctrl.measure);
    EXPECT_LE(std::abs(inc - out.record.delta_eps), 1e-9 * out.record.delta_eps);

    ctrl.stall_iterations = 0;
    PathFollower plain(space, mat, pf, ctrl);
    EXPECT_FALSE(plain.load_step(s0, 1).record.stalled);
}

TEST(LoadStep, MissingRootAtEverySmallIncrementIsRetriedWithLargerOnes)
{
    const double ell = 6e-5;
    const auto g = coarse_geometry(ell);
    const auto pf = coarse_phase(ell);
    const MaterialParams mat;
    const auto init = initialize(parse_technique("GEO-T1-WHL"), g, true, pf);
    const FeSpace space(*init.mesh);
    ControlParams ctrl;
    ctrl.max_halvings = 3;
    PathFollower probe(space, mat, pf, ctrl);

    // Previous displacement taken from the undamaged specimen: its shape differs
    // from the damaged unit solution, so the measure has a positive minimum in lambda.
    FieldState s0 = probe.initial_state(init.alpha);
    s0.lambda = 1e-6;
    s0.u.values = s0.lambda * probe.unit_solution(Eigen::VectorXd::Zero(init.alpha.values.size()));
    const auto eps0 = strain_at_quadrature(space, s0.u.values);
    const auto eps_bar = strain_at_quadrature(space, probe.unit_solution(init.alpha.values));
    double floor = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 4000; ++i) {
        const double lam = 4e-6 * i / 4000.0;
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t q = 0; q < eps_bar.size(); ++q) {
            m = std::max(m, strain_measure(eps_bar[q] * lam - eps0[q], ctrl.measure));
        }
        floor = std::min(floor, m);
    }
    ASSERT_GT(floor, 0.0);

    ctrl.delta_eps_imp = floor / 8.0;
    PathFollower follower(space, mat, pf, ctrl);
    const auto out = follower.load_step(s0, 1);
    EXPECT_TRUE(out.record.enlarged_increment);
    EXPECT_FALSE(out.record.reduced_increment);
    EXPECT_GE(out.record.delta_eps, 0.99 * floor);
    EXPECT_LE(out.record.delta_eps, 256.0 * ctrl.delta_eps_imp);
    const double inc = realized_increment(space, out.state.u.values, s0.u.values, ctrl.measure);
    EXPECT_LE(std::abs(inc - out.record.delta_eps), 1e-9 * out.record.delta_eps);
    EXPECT_GE((out.state.alpha.values - s0.alpha.values).minCoeff(), 0.0);

    ctrl.max_enlargements = 0;
    PathFollower strict(space, mat, pf, ctrl);
    EXPECT_THROW(strict.load_step(s0, 1), ControlEquationError);
}

TEST(LoadStep, ZeroStepPathHoldsOnlyTheInitialState)
{
    const auto run = coarse_run("GEO-T1-WHL", 1.0, 0);
    ASSERT_EQ(run.result.records.size(), 1u);
    EXPECT_EQ(run.result.records[0].step, 0);
    EXPECT_EQ(run.result.records[0].force, 0.0);
    EXPECT_TRUE(run.result.completed);
}

TEST(EquilibriumPath, CoarseWhlRunReachesPropagation)
{
    const auto& run = whl_run();
    ASSERT_TRUE(run.result.completed) << run.result.error;
    EXPECT_EQ(run.result.stop_reason, "max_crack_growth");
    double peak = 0;
    std::size_t ipeak = 0;
    for (std::size_t k = 0; k < run.result.records.size(); ++k) {
        if (run.result.records[k].force > peak) {
            peak = run.result.records[k].force;
            ipeak = k;
        }
    }
    EXPECT_LT(ipeak + 1, run.result.records.size()) << "no post-peak point";
    // Coarse ell: the smeared crack is long relative to a0, so only a loose bracket.
    EXPECT_GT(peak, 0.7 * run.f_c);
    EXPECT_LT(peak, 1.1 * run.f_c);
}

TEST(EquilibriumPath, IrreversibilityBoundsPinsAndDissipation)
{
    const auto& run = whl_run();
    ASSERT_GT(run.states.size(), 2u);
    for (std::size_t k = 0; k < run.states.size(); ++k) {
        const auto& a = run.states[k].alpha;
        EXPECT_NO_THROW(a.check());
        for (int n : run.alpha0.pinned) {
            ASSERT_EQ(a.values[n], 1.0);
        }
        if (k > 0) {
            const Eigen::VectorXd d = a.values - run.states[k - 1].alpha.values;
            EXPECT_GE(d.minCoeff(), -1e-12) << "step " << k;
            EXPECT_GE(run.result.records[k].dissipation, run.result.records[k - 1].dissipation * (1 - 1e-14));
            EXPECT_GE(run.result.records[k].crack_length, run.result.records[k - 1].crack_length * (1 - 1e-14));
        }
    }
}

TEST(EquilibriumPath, ControlSatisfiedAndStatesRescaleExactly)
{
    const auto& run = whl_run();
    const FeSpace space(*run.mesh);
    const auto pf = coarse_phase();
    const MaterialParams mat;
    ControlParams ctrl;
    PathFollower check(space, mat, pf, ctrl);
    for (std::size_t k = 1; k < run.states.size(); ++k) {
        const auto& rec = run.result.records[k];
        const auto& s = run.states[k];
        const double inc = realized_increment(space, s.u.values, run.states[k - 1].u.values, ctrl.measure);
        EXPECT_LE(std::abs(inc - rec.delta_eps), 1e-9 * rec.delta_eps) << "step " << k;
        // Re-solving at the converged phase reproduces lambda and u = lambda * ubar.
        const Eigen::VectorXd ubar = check.unit_solution(s.alpha.values);
        const auto c = solve_control_equation(strain_at_quadrature(space, ubar),
                                              strain_at_quadrature(space, run.states[k - 1].u.values), rec.delta_eps,
                                              ctrl.measure, ctrl.root_tol, run.states[k - 1].lambda);
        ASSERT_TRUE(c.found);
        EXPECT_NEAR(c.lambda, s.lambda, 1e-8 * s.lambda);
        EXPECT_LE((s.u.values - s.lambda * ubar).lpNorm<Eigen::Infinity>(), 1e-14 * s.u.values.lpNorm<Eigen::Infinity>());
        EXPECT_EQ(rec.u_imp, s.lambda);
    }
}

TEST(EquilibriumPath, AdaptiveIncrementStaysWithinItsBounds)
{
    const auto& run = whl_run();
    const double base = run.result.records[1].delta_eps;
    for (std::size_t k = 1; k < run.result.records.size(); ++k) {
        const auto& r = run.result.records[k];
        EXPECT_LE(r.delta_eps, 0.08 * (1 + 1e-12));
        if (!r.reduced_increment) {
            EXPECT_GE(r.delta_eps, base * (1 - 1e-12));
        }
        if (k > 1 && !r.reduced_increment && !run.result.records[k - 1].reduced_increment) {
            EXPECT_LE(r.delta_eps, 1.5 * run.result.records[k - 1].delta_eps * (1 + 1e-12));
        }
    }
    // Growth only happens once damage slows the load factor down.
    EXPECT_GT(run.result.records.back().delta_eps, 2 * base);
}

TEST(EquilibriumPath, ConstantIncrementWithoutCap)
{
    const auto run = coarse_run("GEO-T1-WHL", 1e-6, 30, 0.0);
    for (std::size_t k = 1; k < run.result.records.size(); ++k) {
        if (!run.result.records[k].reduced_increment) {
            EXPECT_EQ(run.result.records[k].delta_eps, run.result.records[1].delta_eps);
        }
    }
}

TEST(EquilibriumPath, RerunIsIdentical)
{
    const auto a = coarse_run("GEO-T1-WHL", 5e-6, 80);
    const auto b = coarse_run("GEO-T1-WHL", 5e-6, 80);
    ASSERT_EQ(a.result.records.size(), b.result.records.size());
    std::ostringstream sa, sb;
    write_records_csv(sa, a.result.records);
    write_records_csv(sb, b.result.records);
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_EQ(a.states.back().alpha.values, b.states.back().alpha.values);
}
