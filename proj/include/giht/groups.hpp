#pragma once

// Overlapping group structures over coordinates {0..p-1}.

#include "giht/core.hpp"

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace giht {

/// Default cap on M for the exhaustive oracles (2^M or C(M,k) enumeration).
inline constexpr Index kDefaultEnumerationGuard = 20;

/**
 * An immutable, validated collection of M groups over [0, p).
 *
 * Group i is the i-th list handed to create(); each group is stored as a
 * sorted, duplicate-free coordinate array. Instances are safe to share
 * read-only between threads.
 */
class GroupLayout {
public:
    /// Validates and normalizes. Throws InvalidArgument on p < 1, M = 0,
    /// an empty group, or an index outside [0, p).
    static GroupLayout create(Index p, std::vector<std::vector<Index>> groups) {
        if (p < 1) throw InvalidArgument("group layout: p must be positive");
        if (groups.empty()) throw InvalidArgument("group layout: at least one group is required");
        GroupLayout layout;
        layout.p_ = p;
        std::vector<char> covered(static_cast<std::size_t>(p), 0);
        for (std::size_t i = 0; i < groups.size(); ++i) {
            auto& g = groups[i];
            if (g.empty()) throw InvalidArgument("group layout: group " + std::to_string(i) + " is empty");
            for (Index c : g) {
                if (c < 0 || c >= p)
                    throw InvalidArgument("group layout: group " + std::to_string(i) + " has index " +
                                          std::to_string(c) + " outside [0, " + std::to_string(p) + ")");
                covered[static_cast<std::size_t>(c)] = 1;
            }
            std::sort(g.begin(), g.end());
            g.erase(std::unique(g.begin(), g.end()), g.end());
            layout.max_group_size_ = std::max(layout.max_group_size_, static_cast<Index>(g.size()));
            layout.total_size_ += static_cast<Index>(g.size());
        }
        layout.covers_ambient_ = std::all_of(covered.begin(), covered.end(), [](char c) { return c != 0; });
        layout.disjoint_ = layout.total_size_ == static_cast<Index>(std::count(covered.begin(), covered.end(), 1));
        layout.groups_ = std::move(groups);
        return layout;
    }

    [[nodiscard]] Index p() const noexcept { return p_; }
    [[nodiscard]] Index size() const noexcept { return static_cast<Index>(groups_.size()); }
    [[nodiscard]] std::span<const Index> group(Index id) const {
        return groups_.at(static_cast<std::size_t>(id));
    }
    [[nodiscard]] const std::vector<std::vector<Index>>& groups() const noexcept { return groups_; }

    /// True iff the union of all groups is {0..p-1}.
    [[nodiscard]] bool covers_ambient() const noexcept { return covers_ambient_; }
    [[nodiscard]] bool disjoint() const noexcept { return disjoint_; }
    [[nodiscard]] Index max_group_size() const noexcept { return max_group_size_; }
    /// Sum of group sizes, counting shared coordinates once per group.
    [[nodiscard]] Index total_size() const noexcept { return total_size_; }

    [[nodiscard]] bool contains(Index id, Index coord) const {
        const auto g = group(id);
        return std::binary_search(g.begin(), g.end(), coord);
    }

    /// Sorted union of the coordinates of the given groups.
    [[nodiscard]] std::vector<Index> union_of(std::span<const Index> ids) const {
        std::vector<char> mark(static_cast<std::size_t>(p_), 0);
        for (Index id : ids)
            for (Index c : group(id)) mark[static_cast<std::size_t>(c)] = 1;
        std::vector<Index> out;
        for (Index c = 0; c < p_; ++c)
            if (mark[static_cast<std::size_t>(c)]) out.push_back(c);
        return out;
    }

    friend bool operator==(const GroupLayout&, const GroupLayout&) = default;

private:
    GroupLayout() = default;

    Index p_ = 0;
    std::vector<std::vector<Index>> groups_;
    bool covers_ambient_ = false;
    bool disjoint_ = false;
    Index max_group_size_ = 0;
    Index total_size_ = 0;
};

inline GroupLayout validate_layout(Index p, std::vector<std::vector<Index>> groups) {
    return GroupLayout::create(p, std::move(groups));
}

/// An explicit group-support: a set of group ids and the union of their coordinates.
struct GroupSupport {
    std::vector<Index> group_ids;  // ascending
    std::vector<Index> coords;     // ascending, = union of the referenced groups

    [[nodiscard]] Index size() const noexcept { return static_cast<Index>(group_ids.size()); }

    static GroupSupport from_groups(const GroupLayout& layout, std::vector<Index> ids) {
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        for (Index id : ids)
            if (id < 0 || id >= layout.size())
                throw InvalidArgument("group support: group id " + std::to_string(id) + " out of range");
        GroupSupport s;
        s.coords = layout.union_of(ids);
        s.group_ids = std::move(ids);
        return s;
    }

    friend bool operator==(const GroupSupport&, const GroupSupport&) = default;
};

/// Coordinates with a nonzero entry, ascending.
inline std::vector<Index> support_of(const Vector& w) {
    std::vector<Index> out;
    for (Index i = 0; i < w.size(); ++i)
        if (w[i] != 0.0) out.push_back(i);
    return out;
}

namespace detail {

inline void check_dimension(const Vector& w, const GroupLayout& layout, const char* who) {
    if (w.size() != layout.p())
        throw InvalidArgument(std::string(who) + ": vector has dimension " + std::to_string(w.size()) +
                              ", layout has p = " + std::to_string(layout.p()));
}

inline void check_enumeration_guard(const GroupLayout& layout, Index max_groups, const char* who) {
    if (layout.size() > max_groups)
        throw GuardError(std::string(who) + ": layout has M = " + std::to_string(layout.size()) +
                         " groups, exhaustive enumeration is limited to " + std::to_string(max_groups));
}

/// Advance `idx` (strictly increasing, values < n) to the next k-combination in
/// lexicographic order. Returns false after the last one.
inline bool next_combination(std::vector<Index>& idx, Index n) {
    const auto k = static_cast<Index>(idx.size());
    for (Index i = k - 1; i >= 0; --i) {
        auto& slot = idx[static_cast<std::size_t>(i)];
        if (slot < n - k + i) {
            ++slot;
            for (Index j = i + 1; j < k; ++j)
                idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
            return true;
        }
    }
    return false;
}

} // namespace detail

/**
 * Group-l0 pseudo-norm: the minimum number of groups whose union contains
 * supp(w), found by enumerating group subsets in increasing cardinality.
 *
 * Throws GuardError when M > max_groups and InfeasibleError when supp(w) is not
 * contained in the union of all groups.
 */
inline Index group_l0_bruteforce(const Vector& w, const GroupLayout& layout,
                                 Index max_groups = kDefaultEnumerationGuard) {
    detail::check_dimension(w, layout, "group_l0_bruteforce");
    detail::check_enumeration_guard(layout, max_groups, "group_l0_bruteforce");
    const auto supp = support_of(w);
    if (supp.empty()) return 0;

    // Each group becomes a bitmask over the positions of supp(w).
    const std::size_t words = (supp.size() + 63) / 64;
    const Index M = layout.size();
    std::vector<std::vector<std::uint64_t>> masks(static_cast<std::size_t>(M),
                                                  std::vector<std::uint64_t>(words, 0));
    std::vector<std::uint64_t> all(words, 0);
    for (Index id = 0; id < M; ++id) {
        for (std::size_t j = 0; j < supp.size(); ++j) {
            if (layout.contains(id, supp[j])) {
                masks[static_cast<std::size_t>(id)][j / 64] |= std::uint64_t{1} << (j % 64);
                all[j / 64] |= std::uint64_t{1} << (j % 64);
            }
        }
    }
    std::vector<std::uint64_t> target(words, 0);
    for (std::size_t j = 0; j < supp.size(); ++j) target[j / 64] |= std::uint64_t{1} << (j % 64);
    if (all != target) throw InfeasibleError("group_l0_bruteforce: supp(w) is not covered by the groups");

    std::vector<std::uint64_t> acc(words);
    for (Index r = 1; r <= M; ++r) {
        std::vector<Index> idx(static_cast<std::size_t>(r));
        for (Index i = 0; i < r; ++i) idx[static_cast<std::size_t>(i)] = i;
        do {
            std::fill(acc.begin(), acc.end(), 0);
            for (Index id : idx)
                for (std::size_t wd = 0; wd < words; ++wd) acc[wd] |= masks[static_cast<std::size_t>(id)][wd];
            if (acc == target) return r;
        } while (detail::next_combination(idx, M));
    }
    return M;  // unreachable: the full set covers supp(w)
}

/// Bounds on s, the largest support of a k-group-sparse vector.
struct MaxSupportEstimate {
    Index upper_bound = 0;      // sum of the k largest group sizes
    Index greedy_estimate = 0;  // coverage-greedy union size of k groups
};

inline MaxSupportEstimate max_support_size(const GroupLayout& layout, Index k) {
    const Index M = layout.size();
    if (k < 1 || k > M)
        throw InvalidArgument("max_support_size: k = " + std::to_string(k) + " outside [1, " +
                              std::to_string(M) + "]");
    std::vector<Index> sizes;
    sizes.reserve(static_cast<std::size_t>(M));
    for (const auto& g : layout.groups()) sizes.push_back(static_cast<Index>(g.size()));
    std::sort(sizes.begin(), sizes.end(), std::greater<>());
    MaxSupportEstimate est;
    for (Index i = 0; i < k; ++i) est.upper_bound += sizes[static_cast<std::size_t>(i)];

    std::vector<char> covered(static_cast<std::size_t>(layout.p()), 0);
    std::vector<char> taken(static_cast<std::size_t>(M), 0);
    for (Index step = 0; step < k; ++step) {
        Index best = -1, best_gain = -1;
        for (Index id = 0; id < M; ++id) {
            if (taken[static_cast<std::size_t>(id)]) continue;
            Index gain = 0;
            for (Index c : layout.group(id)) gain += covered[static_cast<std::size_t>(c)] ? 0 : 1;
            if (gain > best_gain) {
                best_gain = gain;
                best = id;
            }
        }
        taken[static_cast<std::size_t>(best)] = 1;
        for (Index c : layout.group(best)) covered[static_cast<std::size_t>(c)] = 1;
        est.greedy_estimate += best_gain;
    }
    return est;
}

/// z(S) = sum of g_j^2 over j in the union of the groups in S.
inline double coverage_energy(std::span<const Index> group_ids, const Vector& g, const GroupLayout& layout) {
    detail::check_dimension(g, layout, "coverage_energy");
    for (Index id : group_ids)
        if (id < 0 || id >= layout.size())
            throw InvalidArgument("coverage_energy: group id " + std::to_string(id) + " out of range");
    double energy = 0.0;
    for (Index c : layout.union_of(group_ids)) energy += g[c] * g[c];
    return energy;
}

} // namespace giht
