#include "giht/experiments.hpp"
#include "giht/solver.hpp"
#include "giht/synth.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace giht;

namespace {

SynthSpec disjoint_spec(std::uint64_t seed) {
    SynthSpec s;
    s.M = 10;
    s.B = 4;
    s.overlap = 0;
    s.k_star = 2;
    s.n = 80;
    s.seed = seed;
    return s;
}

SynthSpec overlapping_spec(std::uint64_t seed) {
    SynthSpec s;
    s.M = 20;
    s.B = 8;
    s.overlap = 2;
    s.k_star = 3;
    s.n = 150;
    s.seed = seed;
    return s;
}

IhtConfig group_config(Index k, Projector projector = Projector::greedy) {
    IhtConfig c;
    c.budget = GroupBudget{k};
    c.projector = projector;
    return c;
}

} // namespace

TEST(Iht, ZeroResponseIsAFixedPoint) {
    const RegressionProblem prob(RowMatrix::Identity(4, 4), Vector::Zero(4));
    const auto layout = contiguous_layout(2, 2, 0);
    const auto r = iht_solve(LeastSquares(prob), layout, group_config(1));
    EXPECT_EQ(r.w, Vector::Zero(4));
    EXPECT_TRUE(r.trace.converged);
    EXPECT_EQ(r.trace.iterations_run, 1);
}

TEST(Iht, DisjointExactProjectorRecovers) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto inst = generate(disjoint_spec(seed));
        auto c = group_config(2, Projector::exact_disjoint);
        c.max_iters = 500;
        const auto r = iht_solve(LeastSquares(inst.problem), inst.layout, c, inst.w_star);
        EXPECT_LT(relative_error(r.w, inst.w_star), 1e-6) << "seed " << seed;
        EXPECT_LE(r.trace.iterations_run, 500);
    }
}

TEST(Iht, GreedyProjectorWithLargerBudgetRecovers) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto inst = generate(disjoint_spec(seed));
        auto c = group_config(4);
        c.max_iters = 2000;
        const auto r = iht_solve(LeastSquares(inst.problem), inst.layout, c, inst.w_star);
        EXPECT_LT(relative_error(r.w, inst.w_star), 1e-6) << "seed " << seed;
    }
}

TEST(Iht, BruteforceProjectorRecoversSmallOverlappingInstance) {
    SynthSpec s;
    s.M = 8;
    s.B = 5;
    s.overlap = 1;
    s.k_star = 2;
    s.n = 60;
    const auto inst = generate(s);
    auto c = group_config(3, Projector::bruteforce);
    c.step_rule = StepRule::inverse_curvature;
    const auto r = iht_solve(LeastSquares(inst.problem), inst.layout, c, inst.w_star);
    EXPECT_LT(relative_error(r.w, inst.w_star), 1e-6);
}

TEST(Iht, TraceIsConsistent) {
    const auto inst = generate(overlapping_spec(1));
    auto c = group_config(6);
    c.max_iters = 40;
    c.tol = 0.0;
    const auto r = iht_solve(LeastSquares(inst.problem), inst.layout, c, inst.w_star);
    const auto& t = r.trace;
    EXPECT_EQ(t.iterations_run, 40);
    EXPECT_FALSE(t.converged);
    EXPECT_EQ(t.objective_values.size(), 40u);
    EXPECT_EQ(t.iterate_change.size(), 40u);
    EXPECT_EQ(t.support_history.size(), 40u);
    EXPECT_EQ(t.error_to_reference.size(), 40u);
    EXPECT_TRUE(t.max_kept_per_group.empty());
    for (const auto& s : t.support_history) EXPECT_LE(s.size(), 6);
    for (double v : t.objective_values) EXPECT_TRUE(std::isfinite(v));
    EXPECT_DOUBLE_EQ(t.error_to_reference.back(), (r.w - inst.w_star).norm());
    EXPECT_DOUBLE_EQ(t.objective_values.back(), least_squares_value(inst.problem, r.w));
    EXPECT_DOUBLE_EQ(t.eta, estimate_step_size(inst.problem, 100, 1e-8, c.seed).eta);
}

TEST(Iht, DeterministicTraces) {
    const auto inst = generate(overlapping_spec(2));
    auto c = group_config(6);
    c.full_corrections = true;
    const auto a = iht_solve(LeastSquares(inst.problem), inst.layout, c, inst.w_star);
    const auto b = iht_solve(LeastSquares(inst.problem), inst.layout, c, inst.w_star);
    EXPECT_EQ(a.w, b.w);
    EXPECT_EQ(a.trace.objective_values, b.trace.objective_values);
    EXPECT_EQ(a.trace.iterate_change, b.trace.iterate_change);
    EXPECT_EQ(a.trace.support_history, b.trace.support_history);
}

TEST(Iht, FullCorrectionsNeverIncreaseTheObjective) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto spec = overlapping_spec(seed);
        spec.noise_lambda = 0.1;
        spec.kappa = 10.0;
        const auto inst = generate(spec);
        auto c = group_config(6);
        c.full_corrections = true;
        const auto r = iht_solve(LeastSquares(inst.problem), inst.layout, c);
        const auto& v = r.trace.objective_values;
        for (std::size_t i = 1; i < v.size(); ++i) EXPECT_LE(v[i], v[i - 1] + 1e-12) << "seed " << seed;
    }
}

TEST(Iht, GeometricContractionOnWellConditionedData) {
    auto spec = overlapping_spec(3);
    spec.n = 400;
    const auto inst = generate(spec);
    auto c = group_config(6);
    c.step_rule = StepRule::inverse_curvature;
    const auto r = iht_solve(LeastSquares(inst.problem), inst.layout, c, inst.w_star);
    const auto& e = r.trace.error_to_reference;
    std::vector<double> ratios;
    double prev = inst.w_star.norm();
    for (std::size_t i = 0; i < 20 && i < e.size(); ++i) {
        ratios.push_back(e[i] / prev);
        prev = e[i];
    }
    EXPECT_LT(median(ratios), 1.0);
    EXPECT_LT(relative_error(r.w, inst.w_star), 1e-6);
}

TEST(Iht, SogIteratesStayFeasible) {
    SynthSpec spec;
    spec.M = 20;
    spec.B = 10;
    spec.overlap = 3;
    spec.k_star = 2;
    spec.k2_star = 4;
    spec.n = 200;
    const auto inst = generate(spec);
    IhtConfig c = default_config_for(spec);
    ASSERT_EQ(c.projector, Projector::sog);
    const auto r = iht_solve(LeastSquares(inst.problem), inst.layout, c, inst.w_star);
    ASSERT_EQ(r.trace.max_kept_per_group.size(), r.trace.support_history.size());
    for (Index kept : r.trace.max_kept_per_group) EXPECT_LE(kept, 8);
    for (const auto& s : r.trace.support_history) EXPECT_LE(s.size(), 4);
}

TEST(Iht, SogWithInactiveCoordinateBudgetEqualsGroupIht) {
    SynthSpec spec = overlapping_spec(4);
    const auto inst = generate(spec);
    IhtConfig plain = group_config(6);
    IhtConfig sog = plain;
    sog.projector = Projector::sog;
    sog.budget = SogBudget{6, spec.B};
    for (bool fc : {false, true}) {
        plain.full_corrections = sog.full_corrections = fc;
        const auto a = iht_solve(LeastSquares(inst.problem), inst.layout, plain, inst.w_star);
        const auto b = iht_solve(LeastSquares(inst.problem), inst.layout, sog, inst.w_star);
        EXPECT_EQ(a.w, b.w);
        EXPECT_EQ(a.trace.objective_values, b.trace.objective_values);
        EXPECT_EQ(a.trace.support_history, b.trace.support_history);
    }
}

TEST(Iht, DivergenceNamesTheIteration) {
    const auto inst = generate(overlapping_spec(5));
    auto c = group_config(6);
    c.step_rule = StepRule::fixed;
    c.eta = 1e6;
    c.max_iters = 5000;
    try {
        iht_solve(LeastSquares(inst.problem), inst.layout, c);
        FAIL() << "expected divergence";
    } catch (const DivergenceError& e) {
        EXPECT_GT(e.iteration(), 1);
        EXPECT_NE(std::string(e.what()).find(std::to_string(e.iteration())), std::string::npos);
    }
}

TEST(Iht, ConfigValidation) {
    const auto inst = generate(overlapping_spec(6));
    const LeastSquares f(inst.problem);
    auto c = group_config(0);
    EXPECT_THROW(iht_solve(f, inst.layout, c), InvalidArgument);
    c = group_config(21);
    EXPECT_THROW(iht_solve(f, inst.layout, c), InvalidArgument);
    c = group_config(3, Projector::exact_disjoint);
    EXPECT_THROW(iht_solve(f, inst.layout, c), InvalidArgument);
    c = group_config(3, Projector::sog);
    EXPECT_THROW(iht_solve(f, inst.layout, c), InvalidArgument);
    c = group_config(3);
    c.max_iters = 0;
    EXPECT_THROW(iht_solve(f, inst.layout, c), InvalidArgument);
    c = group_config(3);
    c.tol = -1.0;
    EXPECT_THROW(iht_solve(f, inst.layout, c), InvalidArgument);
    c = group_config(3);
    c.step_rule = StepRule::fixed;
    EXPECT_THROW(iht_solve(f, inst.layout, c), InvalidArgument);
    c = group_config(3);
    c.init = Vector::Zero(3);
    EXPECT_THROW(iht_solve(f, inst.layout, c), InvalidArgument);
    EXPECT_THROW(iht_solve(f, inst.layout, group_config(3), Vector::Zero(2)), InvalidArgument);

    std::vector<std::vector<Index>> many;
    for (Index i = 0; i < inst.layout.p(); ++i) many.push_back({i});
    const auto wide = GroupLayout::create(inst.layout.p(), many);
    EXPECT_THROW(iht_solve(f, wide, group_config(3, Projector::bruteforce)), GuardError);
}

TEST(Iht, PartialCoverNeedsOverride) {
    const RegressionProblem prob(RowMatrix::Identity(4, 4), Vector::Ones(4));
    const auto layout = GroupLayout::create(4, {{0, 1}, {2}});
    auto c = group_config(2);
    EXPECT_THROW(iht_solve(LeastSquares(prob), layout, c), InvalidArgument);
    c.allow_partial_cover = true;
    c.step_rule = StepRule::inverse_curvature;
    const auto r = iht_solve(LeastSquares(prob), layout, c);
    EXPECT_EQ(r.w[3], 0.0);
    EXPECT_NEAR(r.w[0], 1.0, 1e-9);
}

TEST(Iht, UserSuppliedInit) {
    const auto inst = generate(disjoint_spec(7));
    auto c = group_config(2, Projector::exact_disjoint);
    c.init = inst.w_star;
    const auto r = iht_solve(LeastSquares(inst.problem), inst.layout, c, inst.w_star);
    EXPECT_EQ(r.trace.iterations_run, 1);
    EXPECT_LT(relative_error(r.w, inst.w_star), 1e-12);
}

TEST(TheoreticalBudget, Examples) {
    EXPECT_EQ(theoretical_budget(1.0, 1, std::exp(-1.0)), 8);
    EXPECT_EQ(theoretical_budget(2.0, 3, 0.01), 509);
    EXPECT_EQ(theoretical_budget(1.0, 4, 0.999), 4);
    EXPECT_EQ(theoretical_budget(2.0, 1, 0.5, BudgetRule::general, 2.0),
              static_cast<Index>(std::ceil(32.0 * 4.0 * std::log(8.0))));
}

TEST(TheoreticalBudget, RejectsBadInputs) {
    EXPECT_THROW(theoretical_budget(0.5, 1, 0.1), InvalidArgument);
    EXPECT_THROW(theoretical_budget(1.0, 1, 1.0), InvalidArgument);
    EXPECT_THROW(theoretical_budget(1.0, 1, 0.0), InvalidArgument);
    EXPECT_THROW(theoretical_budget(1.0, 0, 0.1), InvalidArgument);
}

// A generic objective without refit or curvature bound still drives the loop.
TEST(Iht, PlainSmoothObjective) {
    struct Quadratic {
        Vector target;
        [[nodiscard]] Index dimension() const { return target.size(); }
        [[nodiscard]] double value(const Vector& w) const { return 0.5 * (w - target).squaredNorm(); }
        [[nodiscard]] Vector gradient(const Vector& w) const { return w - target; }
    };
    const Quadratic q{(Vector(4) << 5, 0, 0, 1).finished()};
    const auto layout = contiguous_layout(2, 2, 0);
    auto c = group_config(1);
    c.step_rule = StepRule::fixed;
    c.eta = 0.5;
    const auto r = iht_solve(q, layout, c);
    EXPECT_NEAR(r.w[0], 5.0, 1e-9);
    EXPECT_EQ(r.w[3], 0.0);
    c.full_corrections = true;
    EXPECT_THROW(iht_solve(q, layout, c), InvalidArgument);
    c.full_corrections = false;
    c.step_rule = StepRule::quarter_inverse_curvature;
    EXPECT_THROW(iht_solve(q, layout, c), InvalidArgument);
}
