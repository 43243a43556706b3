#pragma once

// Iterative hard thresholding with pluggable projections and optional full corrections.

#include "giht/objective.hpp"
#include "giht/project.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace giht {

enum class Projector { greedy, exact_disjoint, bruteforce, sog };

/// How the gradient step size is chosen.
enum class StepRule {
    quarter_inverse_curvature,  // 1 / (4 lambda_max), the default
    inverse_curvature,          // 1 / lambda_max
    fixed,                      // IhtConfig::eta as given
};

struct GroupBudget {
    Index k = 1;
};

struct IhtConfig {
    std::variant<GroupBudget, SogBudget> budget = GroupBudget{1};
    StepRule step_rule = StepRule::quarter_inverse_curvature;
    double eta = 0.0;  // used when step_rule == fixed
    int max_iters = 500;
    double tol = 1e-10;
    bool full_corrections = false;
    Projector projector = Projector::greedy;
    std::uint64_t seed = 0;  // start vector of the power iteration behind the automatic step
    std::optional<Vector> init;  // defaults to the zero vector
    /// Solving normally requires the groups to cover every coordinate.
    bool allow_partial_cover = false;
    Index enumeration_guard = kDefaultEnumerationGuard;
};

struct IhtTrace {
    std::vector<double> objective_values;
    std::vector<double> iterate_change;
    std::vector<GroupSupport> support_history;
    /// SoG only: the largest number of coordinates kept within one group, per iteration.
    std::vector<Index> max_kept_per_group;
    std::vector<double> error_to_reference;  // empty when no reference was given
    int iterations_run = 0;
    bool converged = false;
    double eta = 0.0;
};

struct IhtResult {
    Vector w;
    IhtTrace trace;
};

namespace detail {

inline void validate_config(const IhtConfig& config, const GroupLayout& layout) {
    if (config.max_iters < 1) throw InvalidArgument("iht: max_iters must be at least 1");
    if (!(config.tol >= 0.0)) throw InvalidArgument("iht: tol must be non-negative");
    if (config.step_rule == StepRule::fixed && !(config.eta > 0.0 && std::isfinite(config.eta)))
        throw InvalidArgument("iht: a fixed step size must be positive and finite");
    if (!config.allow_partial_cover && !layout.covers_ambient())
        throw InvalidArgument("iht: groups do not cover every coordinate (set allow_partial_cover to override)");
    const bool sog_budget = std::holds_alternative<SogBudget>(config.budget);
    if (sog_budget != (config.projector == Projector::sog))
        throw InvalidArgument("iht: the sog projector requires a (k1, k2) budget and vice versa");
    if (sog_budget) {
        const auto& b = std::get<SogBudget>(config.budget);
        check_group_budget(b.k1, layout, "iht");
        if (b.k2 < 1) throw InvalidArgument("iht: k2 must be positive");
    } else {
        check_group_budget(std::get<GroupBudget>(config.budget).k, layout, "iht");
    }
    if (config.projector == Projector::exact_disjoint && !layout.disjoint())
        throw InvalidArgument("iht: exact_disjoint projector needs pairwise-disjoint groups");
    if (config.projector == Projector::bruteforce) check_enumeration_guard(layout, config.enumeration_guard, "iht");
}

inline ProjectionOutcome apply_projector(const Vector& g, const IhtConfig& config, const GroupLayout& layout) {
    switch (config.projector) {
    case Projector::greedy:
        return greedy_project(g, std::get<GroupBudget>(config.budget).k, layout);
    case Projector::exact_disjoint:
        return exact_project_disjoint(g, std::get<GroupBudget>(config.budget).k, layout);
    case Projector::bruteforce:
        return exact_project_bruteforce(g, std::get<GroupBudget>(config.budget).k, layout, config.enumeration_guard);
    case Projector::sog:
        return sog_greedy_project(g, std::get<SogBudget>(config.budget), layout);
    }
    throw InvalidArgument("iht: unknown projector");
}

template <SmoothObjective F>
double resolve_step(const F& objective, const IhtConfig& config) {
    if (config.step_rule == StepRule::fixed) return config.eta;
    if constexpr (CurvatureBounded<F>) {
        const double lambda = objective.max_curvature(config.seed);
        return config.step_rule == StepRule::inverse_curvature ? 1.0 / lambda : 1.0 / (4.0 * lambda);
    } else {
        throw InvalidArgument("iht: automatic step size needs an objective with a curvature bound");
    }
}

} // namespace detail

/**
 * Runs IHT: w <- P(w - eta grad f(w)), optionally followed by a refit of f on
 * the support chosen by the projection. Stops after max_iters iterations or
 * once ||w_{t+1} - w_t|| <= tol.
 *
 * Throws DivergenceError if the gradient or objective becomes non-finite.
 */
template <SmoothObjective F>
IhtResult iht_solve(const F& objective, const GroupLayout& layout, const IhtConfig& config,
                    const std::optional<Vector>& reference = std::nullopt) {
    if (objective.dimension() != layout.p())
        throw InvalidArgument("iht: objective dimension differs from layout dimension");
    detail::validate_config(config, layout);
    if (reference && reference->size() != layout.p())
        throw InvalidArgument("iht: reference vector has the wrong dimension");
    if constexpr (!SupportRefittable<F>) {
        if (config.full_corrections) throw InvalidArgument("iht: objective does not support full corrections");
    }

    IhtResult result;
    auto& trace = result.trace;
    trace.eta = detail::resolve_step(objective, config);
    if (!(trace.eta > 0.0) || !std::isfinite(trace.eta)) throw InvalidArgument("iht: step size is not positive");

    Vector w = config.init ? *config.init : Vector::Zero(layout.p());
    if (w.size() != layout.p()) throw InvalidArgument("iht: init vector has the wrong dimension");

    // Joint evaluation hands the gradient at w_{t+1} to the next iteration.
    Vector grad;
    if constexpr (JointlyEvaluable<F>) grad = objective.evaluate(w).gradient;

    for (int t = 1; t <= config.max_iters; ++t) {
        if constexpr (!JointlyEvaluable<F>) grad = objective.gradient(w);
        if (!grad.allFinite())
            throw DivergenceError("iht: non-finite gradient at iteration " + std::to_string(t) +
                                      " (step size too large?)",
                                  t);
        const Vector g = w - trace.eta * grad;
        auto projection = detail::apply_projector(g, config, layout);

        Vector next;
        if constexpr (SupportRefittable<F>) {
            next = config.full_corrections ? Vector(objective.refit(projection.active_coords()))
                                           : std::move(projection.u);
        } else {
            next = std::move(projection.u);
        }
        double value;
        if constexpr (JointlyEvaluable<F>) {
            auto eval = objective.evaluate(next);
            value = eval.value;
            grad = std::move(eval.gradient);
        } else {
            value = objective.value(next);
        }
        if (!std::isfinite(value))
            throw DivergenceError("iht: non-finite objective at iteration " + std::to_string(t) +
                                      " (step size too large?)",
                                  t);
        const double change = (next - w).norm();
        trace.objective_values.push_back(value);
        trace.iterate_change.push_back(change);
        if (projection.within_group_support) {
            Index most = 0;
            for (const auto& s : *projection.within_group_support) most = std::max(most, static_cast<Index>(s.size()));
            trace.max_kept_per_group.push_back(most);
        }
        trace.support_history.push_back(std::move(projection.selected));
        if (reference) trace.error_to_reference.push_back((next - *reference).norm());
        trace.iterations_run = t;
        w = std::move(next);
        if (change <= config.tol) {
            trace.converged = true;
            break;
        }
    }
    result.w = std::move(w);
    return result;
}

/// Which sparsity-budget rule theoretical_budget evaluates.
enum class BudgetRule {
    least_squares,  // ceil(8 kappa^2 k* log(kappa / eps))
    general,        // ceil(32 kappa^2 k* log(kappa ||w*|| / eps)), kappa = L/alpha
};

/**
 * Group budget k prescribed by the convergence analysis, clamped below at k*.
 * Requires kappa >= 1, k* >= 1 and eps in (0, 1).
 */
inline Index theoretical_budget(double kappa, Index k_star, double epsilon,
                                BudgetRule rule = BudgetRule::least_squares, double signal_norm = 1.0) {
    if (!(kappa >= 1.0) || !std::isfinite(kappa)) throw InvalidArgument("theoretical_budget: kappa must be >= 1");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("theoretical_budget: epsilon must lie in (0, 1)");
    if (k_star < 1) throw InvalidArgument("theoretical_budget: k* must be positive");
    if (!(signal_norm > 0.0)) throw InvalidArgument("theoretical_budget: signal norm must be positive");
    const double constant = rule == BudgetRule::least_squares ? 8.0 : 32.0;
    const double ratio = rule == BudgetRule::least_squares ? kappa / epsilon : kappa * signal_norm / epsilon;
    const double raw = constant * kappa * kappa * static_cast<double>(k_star) * std::log(ratio);
    // absorb rounding noise such as log(e) evaluating to 1 + ulp
    const double budget = std::ceil(raw * (1.0 - 1e-12));
    return std::max(k_star, static_cast<Index>(budget));
}

} // namespace giht
