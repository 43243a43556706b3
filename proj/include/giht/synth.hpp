#pragma once

// Synthetic recovery instances: contiguous overlapping layouts, conditioned
// Gaussian designs, group-sparse and sparse-overlapping-group signals.
//
// Random streams (all derived from SynthSpec::seed, see rng.hpp):
//   stream 1          active group selection
//   stream 2          signal entries
//   stream 3          observation noise
//   stream 4          covariance rotation
//   stream 2^32 + i   standard-normal draws for design row i

#include "giht/groups.hpp"
#include "giht/objective.hpp"
#include "giht/rng.hpp"

#include <Eigen/QR>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace giht {

namespace stream {
inline constexpr std::uint64_t active_groups = 1;
inline constexpr std::uint64_t signal = 2;
inline constexpr std::uint64_t noise = 3;
inline constexpr std::uint64_t rotation = 4;
inline constexpr std::uint64_t row_base = std::uint64_t{1} << 32;
} // namespace stream

/// M groups of B contiguous indices, consecutive groups sharing `overlap` coordinates.
inline GroupLayout contiguous_layout(Index M, Index B, Index overlap) {
    if (M < 1) throw InvalidArgument("contiguous_layout: M must be positive");
    if (B < 1) throw InvalidArgument("contiguous_layout: B must be positive");
    if (overlap < 0 || overlap >= B) throw InvalidArgument("contiguous_layout: overlap must lie in [0, B)");
    const Index stride = B - overlap;
    const Index p = M * B - (M - 1) * overlap;
    std::vector<std::vector<Index>> groups(static_cast<std::size_t>(M));
    for (Index i = 0; i < M; ++i) {
        auto& g = groups[static_cast<std::size_t>(i)];
        g.resize(static_cast<std::size_t>(B));
        for (Index j = 0; j < B; ++j) g[static_cast<std::size_t>(j)] = i * stride + j;
    }
    return GroupLayout::create(p, std::move(groups));
}

/**
 * Covariance with eigenvalues 1, kappa^{-1/(p-1)}, ..., 1/kappa, optionally
 * conjugated by a seeded random orthogonal matrix. Without rotation the
 * operator is diagonal and never materialized.
 */
class Covariance {
public:
    Covariance(Index p, double kappa, bool rotate, std::uint64_t seed) : eigenvalues_(p) {
        if (p < 1) throw InvalidArgument("make_covariance: p must be positive");
        if (!(kappa >= 1.0) || !std::isfinite(kappa)) throw InvalidArgument("make_covariance: kappa must be >= 1");
        for (Index i = 0; i < p; ++i)
            eigenvalues_[i] = p == 1 ? 1.0 : std::pow(kappa, -static_cast<double>(i) / static_cast<double>(p - 1));
        eigenvalues_[p - 1] = 1.0 / kappa;
        sqrt_eigenvalues_ = eigenvalues_.cwiseSqrt();
        if (rotate) {
            Rng rng(seed, stream::rotation);
            Matrix gauss(p, p);
            for (Index j = 0; j < p; ++j)
                for (Index i = 0; i < p; ++i) gauss(i, j) = rng.normal();
            Eigen::HouseholderQR<Matrix> qr(gauss);
            Matrix q = qr.householderQ();
            // sign-normalize so Q is Haar distributed
            const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
            for (Index j = 0; j < p; ++j)
                if (r(j, j) < 0) q.col(j) = -q.col(j);
            rotation_ = std::move(q);
        }
    }

    [[nodiscard]] Index dimension() const noexcept { return eigenvalues_.size(); }
    [[nodiscard]] const Vector& eigenvalues() const noexcept { return eigenvalues_; }
    [[nodiscard]] bool rotated() const noexcept { return rotation_.has_value(); }
    [[nodiscard]] double condition_number() const {
        return eigenvalues_.maxCoeff() / eigenvalues_.minCoeff();
    }

    /// v -> Sigma^{1/2} v using the symmetric square root.
    [[nodiscard]] Vector sqrt_apply(const Vector& v) const {
        if (!rotation_) return sqrt_eigenvalues_.cwiseProduct(v);
        const Vector inner = rotation_->transpose() * v;
        return *rotation_ * sqrt_eigenvalues_.cwiseProduct(inner);
    }

    /// Row-wise sqrt_apply: row i of the result is (Sigma^{1/2} z_i)^T.
    [[nodiscard]] RowMatrix sqrt_apply_rows(const RowMatrix& Z) const {
        if (!rotation_) return Z * sqrt_eigenvalues_.asDiagonal();
        if (!root_) {
            root_ = Matrix(*rotation_ * sqrt_eigenvalues_.asDiagonal() * rotation_->transpose());
            *root_ = 0.5 * (*root_ + root_->transpose());
        }
        return Z * *root_;
    }

    [[nodiscard]] Matrix dense() const {
        if (!rotation_) return eigenvalues_.asDiagonal();
        return *rotation_ * eigenvalues_.asDiagonal() * rotation_->transpose();
    }

private:
    Vector eigenvalues_;
    Vector sqrt_eigenvalues_;
    std::optional<Matrix> rotation_;
    mutable std::optional<Matrix> root_;  // symmetric square root, built on first use
};

inline Covariance make_covariance(Index p, double kappa, bool rotate, std::uint64_t seed) {
    return Covariance(p, kappa, rotate, seed);
}

/// Recipe for one synthetic recovery instance.
struct SynthSpec {
    Index M = 100;
    Index B = 25;
    Index overlap = 5;
    Index k_star = 10;
    std::optional<Index> k2_star;  // set for sparse-overlapping-group signals
    double kappa = 1.0;
    double noise_lambda = 0.0;
    Index n = 100;
    bool rotate = false;
    std::uint64_t seed = 0;

    [[nodiscard]] Index p() const { return M * B - (M - 1) * overlap; }

    void validate() const {
        if (M < 1 || B < 1) throw InfeasibleError("synth spec: M and B must be positive");
        if (overlap < 0 || overlap >= B) throw InfeasibleError("synth spec: overlap must lie in [0, B)");
        if (k_star < 1 || k_star > M) throw InfeasibleError("synth spec: k_star must lie in [1, M]");
        if (k2_star && (*k2_star < 1 || *k2_star > B)) throw InfeasibleError("synth spec: k2_star must lie in [1, B]");
        if (!(kappa >= 1.0) || !std::isfinite(kappa)) throw InfeasibleError("synth spec: kappa must be >= 1");
        if (!(noise_lambda >= 0.0) || !std::isfinite(noise_lambda))
            throw InfeasibleError("synth spec: noise_lambda must be >= 0");
        if (n < 1) throw InfeasibleError("synth spec: n must be positive");
    }
};

struct SynthInstance {
    RegressionProblem problem;
    GroupLayout layout;
    Vector w_star;
    GroupSupport active_groups;
};

namespace detail {

inline Vector draw_signal(const SynthSpec& spec, const GroupLayout& layout, const GroupSupport& active) {
    Vector w = Vector::Zero(layout.p());
    Rng rng(spec.seed, stream::signal);
    for (Index c : active.coords) w[c] = rng.uniform(-1.0, 1.0);
    if (!spec.k2_star) return w;

    // Keep the k2* largest entries of each active group; a coordinate survives
    // if any active group keeps it.
    std::vector<char> keep(static_cast<std::size_t>(layout.p()), 0);
    for (Index id : active.group_ids) {
        const auto g = layout.group(id);
        std::vector<Index> order(g.begin(), g.end());
        std::stable_sort(order.begin(), order.end(),
                         [&](Index a, Index b) { return std::abs(w[a]) > std::abs(w[b]); });
        for (Index j = 0; j < *spec.k2_star; ++j) keep[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])] = 1;
    }
    for (Index c = 0; c < layout.p(); ++c)
        if (!keep[static_cast<std::size_t>(c)]) w[c] = 0.0;
    return w;
}

} // namespace detail

/**
 * Draws an instance: k* active groups uniformly without replacement,
 * Uniform[-1, 1] entries on their union (then per-group top-k2* pruning for
 * SoG specs), design rows x_i = Sigma^{1/2} z_i, and y = X w* + lambda xi.
 */
inline SynthInstance generate(const SynthSpec& spec) {
    spec.validate();
    GroupLayout layout = contiguous_layout(spec.M, spec.B, spec.overlap);
    const Index p = layout.p();
    const Covariance sigma(p, spec.kappa, spec.rotate, spec.seed);

    Rng group_rng(spec.seed, stream::active_groups);
    GroupSupport active = GroupSupport::from_groups(layout, group_rng.sample_without_replacement(spec.M, spec.k_star));
    Vector w_star = detail::draw_signal(spec, layout, active);

    RowMatrix Z(spec.n, p);
    for (Index i = 0; i < spec.n; ++i) {
        Rng row_rng(spec.seed, stream::row_base + static_cast<std::uint64_t>(i));
        Z.row(i) = row_rng.normal_vector(p).transpose();
    }
    RowMatrix X = sigma.sqrt_apply_rows(Z);
    Vector y = X * w_star;
    if (spec.noise_lambda > 0.0) {
        Rng noise_rng(spec.seed, stream::noise);
        y += spec.noise_lambda * noise_rng.normal_vector(spec.n);
    }
    return SynthInstance{RegressionProblem(std::move(X), std::move(y)), std::move(layout), std::move(w_star),
                         std::move(active)};
}

} // namespace giht
