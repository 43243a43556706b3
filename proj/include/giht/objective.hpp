#pragma once

// Smooth objectives, the least-squares instance, and restricted-spectrum diagnostics.

#include "giht/groups.hpp"
#include "giht/rng.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace giht {

/// What IHT needs from a loss: its dimension, value and exact gradient.
template <class F>
concept SmoothObjective = requires(const F& f, const Vector& w) {
    { f.dimension() } -> std::convertible_to<Index>;
    { f.value(w) } -> std::convertible_to<double>;
    { f.gradient(w) } -> std::convertible_to<Vector>;
};

/// Objectives that can be re-minimized over a fixed coordinate support.
template <class F>
concept SupportRefittable = SmoothObjective<F> && requires(const F& f, std::span<const Index> s) {
    { f.refit(s) } -> std::convertible_to<Vector>;
};

/// Objectives that compute value and gradient together more cheaply than apart.
template <class F>
concept JointlyEvaluable = SmoothObjective<F> && requires(const F& f, const Vector& w) {
    { f.evaluate(w).value } -> std::convertible_to<double>;
    { f.evaluate(w).gradient } -> std::convertible_to<Vector>;
};

/// Objectives that can bound the largest eigenvalue of their Hessian.
template <class F>
concept CurvatureBounded = SmoothObjective<F> && requires(const F& f, std::uint64_t seed) {
    { f.max_curvature(seed) } -> std::convertible_to<double>;
};

/// Design matrix X (n x p, one sample per row) and response y.
class RegressionProblem {
public:
    RegressionProblem(RowMatrix X, Vector y) : X_(std::move(X)), y_(std::move(y)) {
        if (X_.rows() < 1 || X_.cols() < 1) throw InvalidArgument("regression problem: X must be non-empty");
        if (y_.size() != X_.rows())
            throw InvalidArgument("regression problem: X has " + std::to_string(X_.rows()) + " rows but y has " +
                                  std::to_string(y_.size()) + " entries");
        if (!X_.allFinite() || !y_.allFinite()) throw InvalidArgument("regression problem: non-finite entries");
    }

    [[nodiscard]] const RowMatrix& X() const noexcept { return X_; }
    [[nodiscard]] const Vector& y() const noexcept { return y_; }
    [[nodiscard]] Index n() const noexcept { return X_.rows(); }
    [[nodiscard]] Index p() const noexcept { return X_.cols(); }

private:
    RowMatrix X_;
    Vector y_;
};

namespace detail {

/// Xw, touching only the columns where w is nonzero when w is sparse.
inline Vector apply_design(const RowMatrix& X, const Vector& w) {
    // maximal runs [start, end) of nonzero coordinates
    std::vector<std::pair<Index, Index>> runs;
    Index nnz = 0;
    for (Index j = 0; j < w.size();) {
        if (w[j] == 0.0) {
            ++j;
            continue;
        }
        Index end = j;
        while (end < w.size() && w[end] != 0.0) ++end;
        runs.emplace_back(j, end);
        nnz += end - j;
        j = end;
    }
    if (2 * nnz > w.size()) return X * w;
    Vector out = Vector::Zero(X.rows());
    for (const auto& [start, end] : runs)
        out.noalias() += X.middleCols(start, end - start) * w.segment(start, end - start);
    return out;
}

inline void check_weights(const RegressionProblem& problem, const Vector& w, const char* who) {
    if (w.size() != problem.p())
        throw InvalidArgument(std::string(who) + ": w has dimension " + std::to_string(w.size()) +
                              ", expected " + std::to_string(problem.p()));
}
} // namespace detail

/// (1/2n) ||y - Xw||^2
inline double least_squares_value(const RegressionProblem& problem, const Vector& w) {
    detail::check_weights(problem, w, "least_squares_value");
    return 0.5 * (detail::apply_design(problem.X(), w) - problem.y()).squaredNorm() / static_cast<double>(problem.n());
}

/// (1/n) X^T (Xw - y)
inline Vector least_squares_gradient(const RegressionProblem& problem, const Vector& w) {
    detail::check_weights(problem, w, "least_squares_gradient");
    const Vector residual = detail::apply_design(problem.X(), w) - problem.y();
    return problem.X().transpose() * residual / static_cast<double>(problem.n());
}

struct ValueAndGradient {
    double value = 0.0;
    Vector gradient;
};

/// Value and gradient from a single residual computation.
inline ValueAndGradient least_squares_evaluate(const RegressionProblem& problem, const Vector& w) {
    detail::check_weights(problem, w, "least_squares_evaluate");
    const Vector residual = detail::apply_design(problem.X(), w) - problem.y();
    const auto n = static_cast<double>(problem.n());
    return {0.5 * residual.squaredNorm() / n, problem.X().transpose() * residual / n};
}

/// Largest eigenvalue of X^T X / n and the default step 1/(4 lambda_max).
struct StepSizeEstimate {
    double lambda_max = 0.0;
    double eta = 0.0;
    int iterations = 0;
};

/**
 * Power iteration on X^T X / n from a fixed pseudo-random start vector.
 * Stops after `max_iters` iterations or once the Rayleigh quotient changes by
 * less than `rel_tol` relative. Throws InvalidArgument for a zero matrix.
 */
inline StepSizeEstimate estimate_step_size(const RegressionProblem& problem, int max_iters = 100,
                                           double rel_tol = 1e-8, std::uint64_t seed = 0x9e3779b97f4a7c15ULL) {
    const auto& X = problem.X();
    const double inv_n = 1.0 / static_cast<double>(problem.n());
    Rng rng(seed, 0);
    Vector v = rng.normal_vector(problem.p());
    v.normalize();
    StepSizeEstimate est;
    double lambda = 0.0;
    for (int it = 1; it <= max_iters; ++it) {
        const Vector Xv = X * v;
        Vector next = X.transpose() * Xv * inv_n;
        const double rayleigh = v.dot(next);
        const double norm = next.norm();
        est.iterations = it;
        if (norm == 0.0 || !std::isfinite(norm)) {
            lambda = rayleigh;
            break;
        }
        const bool settled = it > 1 && std::abs(rayleigh - lambda) <= rel_tol * std::abs(rayleigh);
        lambda = rayleigh;
        v = next / norm;
        if (settled) break;
    }
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw InvalidArgument("estimate_step_size: X^T X has no positive eigenvalue (zero design)");
    est.lambda_max = lambda;
    est.eta = 1.0 / (4.0 * lambda);
    return est;
}

/**
 * Minimizes the least-squares loss over vectors supported on `support` by
 * solving (X_S^T X_S / n) w_S = X_S^T y / n with a Cholesky factorization. A
 * ridge of 1e-10 is added when the restricted Gram matrix is numerically
 * singular. Returns the zero vector for an empty support.
 */
inline Vector fully_correct(const RegressionProblem& problem, std::span<const Index> support) {
    const Index p = problem.p();
    Vector w = Vector::Zero(p);
    if (support.empty()) return w;
    for (Index c : support)
        if (c < 0 || c >= p) throw InvalidArgument("fully_correct: support index out of range");
    const auto s = static_cast<Index>(support.size());
    const Index n = problem.n();
    Matrix Xs(n, s);
    for (Index j = 0; j < s; ++j) Xs.col(j) = problem.X().col(support[static_cast<std::size_t>(j)]);
    const double inv_n = 1.0 / static_cast<double>(n);
    Matrix gram = Matrix::Zero(s, s);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(Xs.transpose(), inv_n);
    const Vector rhs = Xs.transpose() * problem.y() * inv_n;

    Eigen::LLT<Matrix> llt(gram.selfadjointView<Eigen::Lower>());
    Vector ws;
    bool ok = llt.info() == Eigen::Success && llt.rcond() > 1e-13;
    if (ok) {
        ws = llt.solve(rhs);
        ok = ws.allFinite();
    }
    if (!ok) {
        constexpr double ridge = 1e-10;
        gram.diagonal().array() += ridge;
        llt.compute(gram.selfadjointView<Eigen::Lower>());
        ws = llt.solve(rhs);
        if (llt.info() != Eigen::Success || !ws.allFinite())
            throw InfeasibleError("fully_correct: restricted normal equations could not be solved");
    }
    for (Index j = 0; j < s; ++j) w[support[static_cast<std::size_t>(j)]] = ws[j];
    return w;
}

/// The least-squares loss as a SmoothObjective. Holds a reference to the problem.
class LeastSquares {
public:
    explicit LeastSquares(const RegressionProblem& problem) : problem_(&problem) {}

    [[nodiscard]] Index dimension() const noexcept { return problem_->p(); }
    [[nodiscard]] double value(const Vector& w) const { return least_squares_value(*problem_, w); }
    [[nodiscard]] Vector gradient(const Vector& w) const { return least_squares_gradient(*problem_, w); }
    [[nodiscard]] ValueAndGradient evaluate(const Vector& w) const { return least_squares_evaluate(*problem_, w); }
    [[nodiscard]] Vector refit(std::span<const Index> support) const { return fully_correct(*problem_, support); }
    [[nodiscard]] double max_curvature(std::uint64_t seed) const {
        return estimate_step_size(*problem_, 100, 1e-8, seed).lambda_max;
    }
    [[nodiscard]] const RegressionProblem& problem() const noexcept { return *problem_; }

private:
    const RegressionProblem* problem_;
};

/**
 * Central-difference gradient check. Returns
 * ||analytic - numeric||_inf / max(||analytic||_inf, ||numeric||_inf),
 * or 0 when both gradients vanish.
 */
template <SmoothObjective F>
double check_gradient(const F& objective, const Vector& w, double h = 1e-5) {
    if (!(h > 0.0)) throw InvalidArgument("check_gradient: step must be positive");
    const Vector analytic = objective.gradient(w);
    Vector numeric(w.size());
    Vector probe = w;
    for (Index i = 0; i < w.size(); ++i) {
        const double keep = probe[i];
        probe[i] = keep + h;
        const double up = objective.value(probe);
        probe[i] = keep - h;
        const double down = objective.value(probe);
        probe[i] = keep;
        numeric[i] = (up - down) / (2.0 * h);
    }
    const double scale = std::max(analytic.lpNorm<Eigen::Infinity>(), numeric.lpNorm<Eigen::Infinity>());
    if (scale == 0.0) return 0.0;
    return (analytic - numeric).lpNorm<Eigen::Infinity>() / scale;
}

/// Extreme Rayleigh quotients ||Xw||^2 / (n ||w||^2) observed over random k-group-sparse w.
struct RestrictedSpectrumEstimate {
    double alpha_hat = 0.0;
    double L_hat = 0.0;
    Index trials = 0;
    Index k = 0;
    /// Some probed support had more coordinates than samples, so the restricted
    /// minimum eigenvalue is exactly zero; alpha_hat is reported as 0.
    bool rank_deficient = false;
};

/**
 * Monte-Carlo probe of the restricted eigenvalues of X^T X / n. Trial t draws
 * k distinct groups uniformly and standard-normal entries on their union, using
 * the random stream (seed, t).
 */
inline RestrictedSpectrumEstimate estimate_restricted_spectrum(const RegressionProblem& problem,
                                                               const GroupLayout& layout, Index k, Index trials,
                                                               std::uint64_t seed) {
    if (trials < 1) throw InvalidArgument("estimate_restricted_spectrum: trials must be positive");
    if (k < 1 || k > layout.size())
        throw InvalidArgument("estimate_restricted_spectrum: k outside [1, M]");
    if (problem.p() != layout.p())
        throw InvalidArgument("estimate_restricted_spectrum: problem and layout dimensions differ");
    RestrictedSpectrumEstimate est;
    est.trials = trials;
    est.k = k;
    est.alpha_hat = std::numeric_limits<double>::infinity();
    est.L_hat = 0.0;
    const double n = static_cast<double>(problem.n());
    for (Index t = 0; t < trials; ++t) {
        Rng rng(seed, static_cast<std::uint64_t>(t));
        const auto groups = rng.sample_without_replacement(layout.size(), k);
        const auto coords = layout.union_of(groups);
        if (static_cast<Index>(coords.size()) > problem.n()) est.rank_deficient = true;
        Vector ws;
        do {
            ws = rng.normal_vector(static_cast<Index>(coords.size()));
        } while (ws.squaredNorm() == 0.0);
        Vector Xw = Vector::Zero(problem.n());
        for (std::size_t j = 0; j < coords.size(); ++j)
            Xw.noalias() += problem.X().col(coords[j]) * ws[static_cast<Index>(j)];
        const double q = Xw.squaredNorm() / (n * ws.squaredNorm());
        est.alpha_hat = std::min(est.alpha_hat, q);
        est.L_hat = std::max(est.L_hat, q);
    }
    if (est.rank_deficient) est.alpha_hat = 0.0;
    return est;
}

} // namespace giht
