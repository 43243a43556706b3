#pragma once

// Experiment drivers behind the command-line tool: single solves, recovery
// phase transitions, restricted-spectrum checks and the SoG demo.

#include "giht/io.hpp"
#include "giht/objective.hpp"
#include "giht/parallel.hpp"
#include "giht/solver.hpp"
#include "giht/synth.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace giht {

inline double relative_error(const Vector& w, const Vector& reference) {
    const double scale = reference.norm();
    const double err = (w - reference).norm();
    return scale > 0.0 ? err / scale : err;
}

/// Median of a sample; the mean of the two middle values for even sizes.
inline double median(std::vector<double> values) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) return values[mid];
    return 0.5 * (values[mid - 1] + values[mid]);
}

/// k = 2 k* group budget (capped at M), or (2 k1*, 2 k2*) for SoG specs.
inline IhtConfig default_config_for(const SynthSpec& spec) {
    IhtConfig config;
    if (spec.k2_star) {
        config.projector = Projector::sog;
        config.budget = SogBudget{std::min(2 * spec.k_star, spec.M), 2 * *spec.k2_star};
    } else {
        config.budget = GroupBudget{std::min(2 * spec.k_star, spec.M)};
    }
    return config;
}

struct SolveSummary {
    double final_rel_error = 0.0;
    int iterations = 0;
    bool converged = false;
    double objective = 0.0;
    double wall_time_ms = 0.0;
    /// Every truly active group is among the groups selected at the last iteration.
    bool groups_recovered = false;
};

struct SolveRun {
    IhtResult result;
    SolveSummary summary;
};

inline SolveRun run_solve(const SynthInstance& inst, const IhtConfig& config) {
    const LeastSquares objective(inst.problem);
    const auto start = std::chrono::steady_clock::now();
    SolveRun run{iht_solve(objective, inst.layout, config, inst.w_star), {}};
    const auto stop = std::chrono::steady_clock::now();
    auto& s = run.summary;
    const auto& trace = run.result.trace;
    s.final_rel_error = relative_error(run.result.w, inst.w_star);
    s.iterations = trace.iterations_run;
    s.converged = trace.converged;
    s.objective = trace.objective_values.back();
    s.wall_time_ms = std::chrono::duration<double, std::milli>(stop - start).count();
    const auto& chosen = trace.support_history.back().group_ids;
    s.groups_recovered = std::includes(chosen.begin(), chosen.end(), inst.active_groups.group_ids.begin(),
                                       inst.active_groups.group_ids.end());
    return run;
}

inline nlohmann::json summary_to_json(const SolveSummary& s) {
    return {{"final_rel_error", s.final_rel_error}, {"iterations", s.iterations},
            {"converged", s.converged},             {"objective", s.objective},
            {"wall_time_ms", s.wall_time_ms},       {"groups_recovered", s.groups_recovered}};
}

// ---------------------------------------------------------------- phase transitions

struct PhaseGrid {
    std::vector<Index> n_values;
    std::vector<double> kappa_values;
    Index trials = 10;
    double success_tol = 1e-3;
};

struct PhaseCell {
    Index n = 0;
    double kappa = 1.0;
    Index trials = 0;
    Index successes = 0;
    double success_rate = 0.0;
    double median_rel_error = 0.0;
};

/// Seed of one trial. Depends only on the base seed, kappa, n and the trial index.
inline std::uint64_t trial_seed(std::uint64_t base, double kappa, Index n, Index trial) {
    const std::uint64_t per_kappa = derive_seed(base, std::bit_cast<std::uint64_t>(kappa));
    return derive_seed(per_kappa, static_cast<std::uint64_t>(n) * 1000003ULL + static_cast<std::uint64_t>(trial));
}

/**
 * For every (kappa, n) cell, draws `trials` noiseless instances from `base`
 * (its n, kappa, noise and seed are overridden), solves each with `config`
 * and counts recoveries with relative error <= success_tol. A trial whose
 * solve diverges counts as a failure with infinite error. Rows are ordered by
 * kappa, then n, and do not depend on `jobs`.
 */
inline std::vector<PhaseCell> phase_transition(const SynthSpec& base, const PhaseGrid& grid, const IhtConfig& config,
                                               int jobs = 1) {
    if (grid.n_values.empty() || grid.kappa_values.empty()) throw InvalidArgument("phase transition: empty grid");
    if (grid.trials < 1) throw InvalidArgument("phase transition: trials must be positive");
    const std::size_t n_cells = grid.n_values.size() * grid.kappa_values.size();
    const auto trials = static_cast<std::size_t>(grid.trials);
    std::vector<double> errors(n_cells * trials);

    parallel_for(errors.size(), jobs, [&](std::size_t task) {
        const std::size_t cell = task / trials;
        const auto trial = static_cast<Index>(task % trials);
        SynthSpec spec = base;
        spec.kappa = grid.kappa_values[cell / grid.n_values.size()];
        spec.n = grid.n_values[cell % grid.n_values.size()];
        spec.noise_lambda = 0.0;
        spec.seed = trial_seed(base.seed, spec.kappa, spec.n, trial);
        const SynthInstance inst = generate(spec);
        double err = std::numeric_limits<double>::infinity();
        try {
            err = run_solve(inst, config).summary.final_rel_error;
        } catch (const DivergenceError&) {
        } catch (const InfeasibleError&) {
        }
        errors[task] = err;
    });

    std::vector<PhaseCell> cells;
    cells.reserve(n_cells);
    for (std::size_t cell = 0; cell < n_cells; ++cell) {
        PhaseCell c;
        c.kappa = grid.kappa_values[cell / grid.n_values.size()];
        c.n = grid.n_values[cell % grid.n_values.size()];
        c.trials = grid.trials;
        std::vector<double> cell_errors(errors.begin() + static_cast<std::ptrdiff_t>(cell * trials),
                                        errors.begin() + static_cast<std::ptrdiff_t>((cell + 1) * trials));
        for (double e : cell_errors) c.successes += e <= grid.success_tol ? 1 : 0;
        c.success_rate = static_cast<double>(c.successes) / static_cast<double>(c.trials);
        c.median_rel_error = median(std::move(cell_errors));
        cells.push_back(c);
    }
    return cells;
}

inline constexpr std::string_view kPhaseHeader = "n,kappa,trials,successes,success_rate,median_rel_error";

inline std::string format_phase_csv(const std::vector<PhaseCell>& cells) {
    std::string out(kPhaseHeader);
    out += '\n';
    for (const auto& c : cells)
        out += std::to_string(c.n) + ',' + io::format_real(c.kappa) + ',' + std::to_string(c.trials) + ',' +
               std::to_string(c.successes) + ',' + io::format_real(c.success_rate) + ',' +
               io::format_real(c.median_rel_error) + '\n';
    return out;
}

inline std::vector<PhaseCell> parse_phase_csv(std::string_view text) {
    std::vector<PhaseCell> cells;
    std::size_t line_no = 0, pos = 0;
    while (pos < text.size()) {
        const auto end = text.find('\n', pos);
        const std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        pos = end == std::string_view::npos ? text.size() : end + 1;
        ++line_no;
        if (line_no == 1) {
            if (line != kPhaseHeader) throw ParseError("unexpected phase CSV header", 1);
            continue;
        }
        if (line.empty()) continue;
        std::vector<double> v;
        std::size_t start = 0;
        for (;;) {
            const auto comma = line.find(',', start);
            v.push_back(io::parse_real(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                           : comma - start),
                                       line_no));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (v.size() != 6) throw ParseError("phase CSV rows have 6 columns", line_no);
        cells.push_back({static_cast<Index>(v[0]), v[1], static_cast<Index>(v[2]), static_cast<Index>(v[3]), v[4], v[5]});
    }
    return cells;
}

// ---------------------------------------------------------------- restricted spectrum

struct RscReport {
    RestrictedSpectrumEstimate estimate;
    double kappa_hat = 0.0;  // L_hat / alpha_hat, infinite when alpha_hat = 0
    Index n = 0;
    Index p = 0;
    MaxSupportEstimate s;
};

inline RscReport rsc_check(const SynthSpec& spec, Index k, Index trials) {
    const SynthInstance inst = generate(spec);
    RscReport r;
    r.estimate = estimate_restricted_spectrum(inst.problem, inst.layout, k, trials, spec.seed);
    r.kappa_hat = r.estimate.alpha_hat > 0.0 ? r.estimate.L_hat / r.estimate.alpha_hat
                                             : std::numeric_limits<double>::infinity();
    r.n = inst.problem.n();
    r.p = inst.problem.p();
    r.s = max_support_size(inst.layout, k);
    return r;
}

inline nlohmann::json rsc_to_json(const RscReport& r) {
    return {{"alpha_hat", r.estimate.alpha_hat},
            {"L_hat", r.estimate.L_hat},
            {"kappa_hat", std::isfinite(r.kappa_hat) ? nlohmann::json(r.kappa_hat) : nlohmann::json("inf")},
            {"trials", r.estimate.trials},
            {"k", r.estimate.k},
            {"rank_deficient", r.estimate.rank_deficient},
            {"n", r.n},
            {"p", r.p},
            {"s_upper_bound", r.s.upper_bound},
            {"s_greedy_estimate", r.s.greedy_estimate}};
}

} // namespace giht
