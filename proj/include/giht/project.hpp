#pragma once

// Projections onto group-sparse and sparse-overlapping-group sets.
//
// Every projector copies entries of its input onto the chosen coordinates and
// zeroes everything else, so coordinates outside the union of the groups always
// project to zero.

#include "giht/groups.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace giht {

struct ProjectionOutcome {
    Vector u;                  // projected point
    GroupSupport selected;     // chosen groups and their coordinate union
    std::vector<Index> order;  // group ids in the order they were chosen
    std::vector<double> gains; // energy added by each step
    /// SoG only: kept coordinates of each chosen group, aligned with `order`.
    std::optional<std::vector<std::vector<Index>>> within_group_support;

    /// Coordinates the projector was allowed to populate.
    [[nodiscard]] std::vector<Index> active_coords() const {
        if (!within_group_support) return selected.coords;
        std::vector<Index> out;
        for (const auto& s : *within_group_support) out.insert(out.end(), s.begin(), s.end());
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }
};

/// Budget for the sparse-overlapping-group set: at most k1 groups, at most k2
/// entries per group.
struct SogBudget {
    Index k1 = 1;
    Index k2 = 1;
};

namespace detail {

inline void check_group_budget(Index k, const GroupLayout& layout, const char* who) {
    if (k < 1 || k > layout.size())
        throw InvalidArgument(std::string(who) + ": budget " + std::to_string(k) + " outside [1, " +
                              std::to_string(layout.size()) + "]");
}

inline double group_energy(const Vector& v, std::span<const Index> group) {
    double e = 0.0;
    for (Index c : group) e += v[c] * v[c];
    return e;
}

/// Unselected group with the largest residual energy; ties go to the lowest id.
inline Index argmax_group(const Vector& v, const GroupLayout& layout, const std::vector<char>& taken) {
    Index best = -1;
    double best_energy = -1.0;
    for (Index id = 0; id < layout.size(); ++id) {
        if (taken[static_cast<std::size_t>(id)]) continue;
        const double e = group_energy(v, layout.group(id));
        if (e > best_energy) {
            best_energy = e;
            best = id;
        }
    }
    if (best < 0) throw InvalidArgument("projection: every group is already selected");
    return best;
}

inline ProjectionOutcome outcome_from_groups(const Vector& g, const GroupLayout& layout,
                                             std::vector<Index> order, std::vector<double> gains) {
    ProjectionOutcome out;
    out.selected = GroupSupport::from_groups(layout, order);
    out.u = Vector::Zero(g.size());
    for (Index c : out.selected.coords) out.u[c] = g[c];
    out.order = std::move(order);
    out.gains = std::move(gains);
    return out;
}

} // namespace detail

/**
 * Greedy projection onto {w : ||w||_0^G <= k_tilde}.
 *
 * Each of the k_tilde steps picks the unselected group with the largest
 * residual norm, moves the residual entries of that group into u and zeroes
 * them in the residual. Exactly k_tilde groups are selected even when the
 * residual is already exhausted; such steps record a zero gain.
 */
inline ProjectionOutcome greedy_project(const Vector& g, Index k_tilde, const GroupLayout& layout) {
    detail::check_dimension(g, layout, "greedy_project");
    detail::check_group_budget(k_tilde, layout, "greedy_project");
    Vector v = g;
    Vector u = Vector::Zero(g.size());
    std::vector<char> taken(static_cast<std::size_t>(layout.size()), 0);
    std::vector<Index> order;
    std::vector<double> gains;
    for (Index step = 0; step < k_tilde; ++step) {
        const Index best = detail::argmax_group(v, layout, taken);
        taken[static_cast<std::size_t>(best)] = 1;
        const auto group = layout.group(best);
        gains.push_back(detail::group_energy(v, group));
        for (Index c : group) {
            u[c] += v[c];
            v[c] = 0.0;
        }
        order.push_back(best);
    }
    ProjectionOutcome out;
    out.selected = GroupSupport::from_groups(layout, order);
    out.u = std::move(u);
    out.order = std::move(order);
    out.gains = std::move(gains);
    return out;
}

/// Exact projection for pairwise-disjoint groups: keep the k groups of largest
/// norm (ties by lower id).
inline ProjectionOutcome exact_project_disjoint(const Vector& g, Index k, const GroupLayout& layout) {
    detail::check_dimension(g, layout, "exact_project_disjoint");
    detail::check_group_budget(k, layout, "exact_project_disjoint");
    if (!layout.disjoint()) throw InvalidArgument("exact_project_disjoint: groups overlap");
    const Index M = layout.size();
    std::vector<double> energy(static_cast<std::size_t>(M));
    for (Index id = 0; id < M; ++id) energy[static_cast<std::size_t>(id)] = detail::group_energy(g, layout.group(id));
    std::vector<Index> ids(static_cast<std::size_t>(M));
    std::iota(ids.begin(), ids.end(), Index{0});
    std::stable_sort(ids.begin(), ids.end(), [&](Index a, Index b) {
        return energy[static_cast<std::size_t>(a)] > energy[static_cast<std::size_t>(b)];
    });
    ids.resize(static_cast<std::size_t>(k));
    std::vector<double> gains;
    for (Index id : ids) gains.push_back(energy[static_cast<std::size_t>(id)]);
    return detail::outcome_from_groups(g, layout, std::move(ids), std::move(gains));
}

/**
 * Exact projection for arbitrary layouts by enumerating all C(M, k) group
 * subsets and keeping the one with the largest coverage energy. Ties go to the
 * lexicographically smallest id set. Gains are the marginal energies of the
 * winning groups taken in ascending id order.
 */
inline ProjectionOutcome exact_project_bruteforce(const Vector& g, Index k, const GroupLayout& layout,
                                                  Index max_groups = kDefaultEnumerationGuard) {
    detail::check_dimension(g, layout, "exact_project_bruteforce");
    detail::check_enumeration_guard(layout, max_groups, "exact_project_bruteforce");
    detail::check_group_budget(k, layout, "exact_project_bruteforce");
    const Index M = layout.size();
    std::vector<Index> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::vector<Index> best = idx;
    double best_energy = -1.0;
    do {
        const double e = coverage_energy(idx, g, layout);
        if (e > best_energy) {
            best_energy = e;
            best = idx;
        }
    } while (detail::next_combination(idx, M));

    std::vector<double> gains;
    Vector v = g;
    for (Index id : best) {
        const auto group = layout.group(id);
        gains.push_back(detail::group_energy(v, group));
        for (Index c : group) v[c] = 0.0;
    }
    return detail::outcome_from_groups(g, layout, std::move(best), std::move(gains));
}

/**
 * Greedy projection onto the sparse-overlapping-group set.
 *
 * Round t picks the unselected group with the largest residual norm, keeps
 * the k2 residual entries of that group with the largest magnitude (ties by
 * lower coordinate), adds them to u and removes them from the residual.
 */
inline ProjectionOutcome sog_greedy_project(const Vector& g, SogBudget budget, const GroupLayout& layout) {
    detail::check_dimension(g, layout, "sog_greedy_project");
    detail::check_group_budget(budget.k1, layout, "sog_greedy_project");
    if (budget.k2 < 1) throw InvalidArgument("sog_greedy_project: k2 must be positive");
    Vector v = g;
    Vector u = Vector::Zero(g.size());
    std::vector<char> taken(static_cast<std::size_t>(layout.size()), 0);
    std::vector<Index> order;
    std::vector<double> gains;
    std::vector<std::vector<Index>> kept_sets;
    for (Index round = 0; round < budget.k1; ++round) {
        const Index best = detail::argmax_group(v, layout, taken);
        taken[static_cast<std::size_t>(best)] = 1;
        const auto group = layout.group(best);
        std::vector<Index> kept(group.begin(), group.end());
        if (static_cast<Index>(kept.size()) > budget.k2) {
            std::stable_sort(kept.begin(), kept.end(),
                             [&](Index a, Index b) { return std::abs(v[a]) > std::abs(v[b]); });
            kept.resize(static_cast<std::size_t>(budget.k2));
            std::sort(kept.begin(), kept.end());
        }
        gains.push_back(detail::group_energy(v, kept));
        for (Index c : kept) {
            u[c] += v[c];
            v[c] = 0.0;
        }
        order.push_back(best);
        kept_sets.push_back(std::move(kept));
    }
    ProjectionOutcome out;
    out.selected = GroupSupport::from_groups(layout, order);
    out.u = std::move(u);
    out.order = std::move(order);
    out.gains = std::move(gains);
    out.within_group_support = std::move(kept_sets);
    return out;
}

} // namespace giht
