#pragma once

// The `giht` command-line tool. run_cli() is the whole program minus main(),
// so tests can drive it in-process with string streams.
//
// Exit codes: 0 success, 1 usage / parse / I/O error, 2 numerical divergence,
// 3 infeasible synthetic spec.

#include "giht/experiments.hpp"
#include "giht/io.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace giht::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDivergence = 2, kInfeasible = 3 };

/// Default seed: $GIHT_SEED when set, else 0.
inline std::uint64_t default_seed() {
    const char* env = std::getenv("GIHT_SEED");
    if (env == nullptr || *env == '\0') return 0;
    std::uint64_t seed = 0;
    const std::string_view s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw InvalidArgument("GIHT_SEED must be an unsigned integer, got '" + std::string(s) + "'");
    return seed;
}

namespace detail {

struct SpecFlags {
    SynthSpec spec;
    std::optional<Index> k2_star;
};

inline void add_spec_flags(CLI::App* cmd, SpecFlags& f) {
    auto& s = f.spec;
    cmd->add_option("--M", s.M, "number of groups")->capture_default_str();
    cmd->add_option("--B", s.B, "group size")->capture_default_str();
    cmd->add_option("--overlap,-o", s.overlap, "coordinates shared by consecutive groups")->capture_default_str();
    cmd->add_option("--k-star,--k_star", s.k_star, "active groups in w*")->capture_default_str();
    cmd->add_option("--k2-star,--k2_star", f.k2_star, "nonzeros kept per active group (SoG signal)");
    cmd->add_option("--kappa", s.kappa, "condition number of the feature covariance")->capture_default_str();
    cmd->add_option("--noise-lambda,--noise_lambda,--lambda", s.noise_lambda, "noise standard deviation")
        ->capture_default_str();
    cmd->add_option("--n", s.n, "number of samples")->capture_default_str();
    cmd->add_flag("--rotate", s.rotate, "conjugate the covariance by a seeded random rotation");
    cmd->add_option("--seed", s.seed, "base seed (default: $GIHT_SEED or 0)")->capture_default_str();
}

inline SynthSpec finish_spec(const SpecFlags& f) {
    SynthSpec s = f.spec;
    s.k2_star = f.k2_star;
    return s;
}

struct ConfigFlags {
    std::optional<Index> k, k1, k2;
    std::string step_rule = "quarter";
    std::optional<double> eta;
    int max_iters = 500;
    double tol = 1e-10;
    bool fc = false;
    std::string projector = "auto";
};

inline void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
    cmd->add_option("--k", f.k, "group budget (default 2 k*, capped at M)");
    cmd->add_option("--k1", f.k1, "SoG group budget (default 2 k*)");
    cmd->add_option("--k2", f.k2, "SoG per-group budget (default 2 k2*)");
    cmd->add_option("--step-rule,--step_rule", f.step_rule, "quarter: 1/(4L), inverse: 1/L, fixed: --eta")
        ->check(CLI::IsMember({"quarter", "inverse", "fixed"}))
        ->capture_default_str();
    cmd->add_option("--eta", f.eta, "fixed step size (implies --step-rule fixed)");
    cmd->add_option("--max-iters,--max_iters", f.max_iters, "iteration cap")->capture_default_str();
    cmd->add_option("--tol", f.tol, "stop once ||w_{t+1} - w_t|| <= tol")->capture_default_str();
    cmd->add_flag("--fc,--full-corrections,--full_corrections", f.fc, "refit on the selected support each step");
    cmd->add_option("--projector", f.projector, "greedy, exact_disjoint, bruteforce, sog, or auto")
        ->check(CLI::IsMember({"auto", "greedy", "exact_disjoint", "bruteforce", "sog"}))
        ->capture_default_str();
}

inline IhtConfig make_config(const ConfigFlags& f, const SynthSpec& spec, std::uint64_t seed) {
    IhtConfig c = default_config_for(spec);
    const bool sog = f.projector == "sog" || (f.projector == "auto" && (spec.k2_star || f.k2));
    if (sog) {
        if (f.k) throw InvalidArgument("--k applies to group budgets; use --k1/--k2 with the sog projector");
        SogBudget b{std::min(2 * spec.k_star, spec.M), 2 * spec.k2_star.value_or(spec.B)};
        if (f.k1) b.k1 = *f.k1;
        if (f.k2) b.k2 = *f.k2;
        c.budget = b;
        c.projector = Projector::sog;
    } else {
        if (f.k1 || f.k2) throw InvalidArgument("--k1/--k2 need the sog projector");
        c.budget = GroupBudget{f.k.value_or(std::min(2 * spec.k_star, spec.M))};
        c.projector = f.projector == "exact_disjoint" ? Projector::exact_disjoint
                      : f.projector == "bruteforce"   ? Projector::bruteforce
                                                      : Projector::greedy;
    }
    c.step_rule = f.step_rule == "inverse" ? StepRule::inverse_curvature
                  : f.step_rule == "fixed" ? StepRule::fixed
                                           : StepRule::quarter_inverse_curvature;
    if (f.eta) {
        c.step_rule = StepRule::fixed;
        c.eta = *f.eta;
    }
    if (c.step_rule == StepRule::fixed && !f.eta) throw InvalidArgument("--step-rule fixed needs --eta");
    c.max_iters = f.max_iters;
    c.tol = f.tol;
    c.full_corrections = f.fc;
    c.seed = seed;
    return c;
}

inline void emit(const std::string& path, std::string_view text, std::ostream& out) {
    if (path == "-")
        out << text;
    else
        io::write_file(path, text);
}

inline nlohmann::json outcome_to_json(const ProjectionOutcome& r) {
    nlohmann::json u = nlohmann::json::array();
    for (Index i = 0; i < r.u.size(); ++i)
        if (r.u[i] != 0.0) u.push_back({i, r.u[i]});
    nlohmann::json j = {{"p", r.u.size()},
                        {"u", u},
                        {"selected_groups", r.selected.group_ids},
                        {"order", r.order},
                        {"gains", r.gains},
                        {"squared_norm", r.u.squaredNorm()}};
    j["within_group_support"] = r.within_group_support ? nlohmann::json(*r.within_group_support) : nlohmann::json(nullptr);
    return j;
}

inline nlohmann::json solve_json(const IhtResult& r, const std::optional<Vector>& reference, double wall_ms) {
    const auto& t = r.trace;
    nlohmann::json j = {{"iterations", t.iterations_run},
                        {"converged", t.converged},
                        {"objective", t.objective_values.back()},
                        {"eta", t.eta},
                        {"wall_time_ms", wall_ms},
                        {"selected_groups", t.support_history.back().group_ids}};
    j["final_rel_error"] = reference ? nlohmann::json(relative_error(r.w, *reference)) : nlohmann::json(nullptr);
    return j;
}

} // namespace detail

/**
 * Parses argv and runs one subcommand. Results go to `out` (or to the files
 * named by --out/--trace/--weights), diagnostics to `err`.
 */
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Iterative hard thresholding under overlapping group sparsity"};
    app.name("giht");
    app.require_subcommand(1);
    app.set_version_flag("--version", "giht 1.0.0");

    std::uint64_t seed_default = 0;
    try {
        seed_default = default_seed();
    } catch (const std::exception& e) {
        err << "giht: " << e.what() << '\n';
        return kUsage;
    }

    // project
    auto* project = app.add_subcommand("project", "project a vector onto the group-sparse (or SoG) set, print JSON");
    std::string p_vector, p_layout;
    std::optional<Index> p_k, p_k1, p_k2;
    bool p_exact = false, p_brute = false;
    Index p_guard = kDefaultEnumerationGuard;
    project->add_option("--vector,-v", p_vector, "vector file: whitespace/comma separated reals, # comments")
        ->required();
    project->add_option("--layout,-l", p_layout, "layout JSON: {\"p\": ..., \"groups\": [[...], ...]}")->required();
    project->add_option("--k", p_k, "number of groups");
    project->add_option("--k1", p_k1, "SoG: number of groups");
    project->add_option("--k2", p_k2, "SoG: nonzeros per group");
    project->add_flag("--exact", p_exact, "exact projection for disjoint layouts");
    project->add_flag("--bruteforce", p_brute, "exhaustive projection (small M only)");
    project->add_option("--max-groups", p_guard, "refuse --bruteforce above this many groups")->capture_default_str();

    // solve
    auto* solve = app.add_subcommand("solve", "run IHT on a saved instance or a freshly generated one");
    detail::SpecFlags s_spec;
    s_spec.spec.seed = seed_default;
    detail::ConfigFlags s_cfg;
    std::string s_instance, s_trace, s_weights, s_summary = "-";
    detail::add_spec_flags(solve, s_spec);
    detail::add_config_flags(solve, s_cfg);
    solve->add_option("--instance", s_instance, "instance directory written by `giht gen`");
    solve->add_option("--trace", s_trace, "write the per-iteration trace CSV here ('-' for stdout)");
    solve->add_option("--weights", s_weights, "write the final vector here, one value per line");
    solve->add_option("--summary", s_summary, "write the JSON summary here ('-' for stdout)")->capture_default_str();

    // phase-transition
    auto* phase = app.add_subcommand("phase-transition", "recovery success rates over an (n, kappa) grid, CSV");
    detail::SpecFlags ph_spec;
    ph_spec.spec.M = 100;
    ph_spec.spec.B = 15;
    ph_spec.spec.overlap = 5;
    ph_spec.spec.k_star = 5;
    ph_spec.spec.seed = seed_default;
    detail::ConfigFlags ph_cfg;
    std::vector<Index> ph_n{100, 200, 300, 400, 500, 600, 700, 800, 900, 1000};
    std::vector<double> ph_kappa{1.0, 50.0, 100.0};
    Index ph_trials = 10;
    double ph_tol = 1e-3;
    int ph_jobs = 1;
    std::string ph_out = "-";
    detail::add_spec_flags(phase, ph_spec);
    detail::add_config_flags(phase, ph_cfg);
    phase->add_option("--n-list,--n_list", ph_n, "sample counts, comma separated")->delimiter(',')->capture_default_str();
    phase->add_option("--kappa-list,--kappa_list", ph_kappa, "condition numbers, comma separated")
        ->delimiter(',')
        ->capture_default_str();
    phase->add_option("--trials", ph_trials, "instances per cell")->capture_default_str();
    phase->add_option("--success-tol,--success_tol", ph_tol, "success means rel. error <= this")->capture_default_str();
    phase->add_option("--jobs,-j", ph_jobs, "worker threads; output does not depend on it")->capture_default_str();
    phase->add_option("--out", ph_out, "CSV destination ('-' for stdout)")->capture_default_str();

    // rsc-check
    auto* rsc = app.add_subcommand("rsc-check", "Monte-Carlo restricted eigenvalues of X^T X / n, JSON");
    detail::SpecFlags r_spec;
    r_spec.spec.seed = seed_default;
    Index r_k = 2, r_trials = 100;
    detail::add_spec_flags(rsc, r_spec);
    rsc->add_option("--k", r_k, "groups per random support")->capture_default_str();
    rsc->add_option("--trials", r_trials, "random supports to sample")->capture_default_str();

    // sog-demo
    auto* sog = app.add_subcommand("sog-demo", "IHT with the SoG projector on a sparse-overlapping-group signal");
    detail::SpecFlags so_spec;
    so_spec.spec.M = 40;
    so_spec.spec.B = 20;
    so_spec.spec.overlap = 5;
    so_spec.spec.k_star = 3;
    so_spec.k2_star = 8;
    so_spec.spec.n = 400;
    so_spec.spec.seed = seed_default;
    detail::ConfigFlags so_cfg;
    so_cfg.projector = "sog";
    std::string so_trace;
    detail::add_spec_flags(sog, so_spec);
    detail::add_config_flags(sog, so_cfg);
    sog->add_option("--trace", so_trace, "write the per-iteration trace CSV here ('-' for stdout)");

    // gen
    auto* gen = app.add_subcommand("gen", "generate an instance and save problem.csv, layout.json, meta.json");
    detail::SpecFlags g_spec;
    g_spec.spec.seed = seed_default;
    std::string g_out;
    detail::add_spec_flags(gen, g_spec);
    gen->add_option("--out", g_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*project) {
            const Vector v = io::read_vector(p_vector);
            const GroupLayout layout = io::read_layout(p_layout);
            if (v.size() != layout.p())
                throw InvalidArgument("vector has " + std::to_string(v.size()) + " entries but the layout has p = " +
                                      std::to_string(layout.p()));
            const bool sog_mode = p_k1 || p_k2;
            if (sog_mode && (p_k || p_exact || p_brute))
                throw InvalidArgument("--k1/--k2 cannot be combined with --k, --exact or --bruteforce");
            if (p_exact && p_brute) throw InvalidArgument("choose one of --exact and --bruteforce");
            ProjectionOutcome r;
            if (sog_mode) {
                if (!p_k1 || !p_k2) throw InvalidArgument("SoG projection needs both --k1 and --k2");
                r = sog_greedy_project(v, SogBudget{*p_k1, *p_k2}, layout);
            } else {
                if (!p_k) throw InvalidArgument("--k is required");
                r = p_brute   ? exact_project_bruteforce(v, *p_k, layout, p_guard)
                    : p_exact ? exact_project_disjoint(v, *p_k, layout)
                              : greedy_project(v, *p_k, layout);
            }
            out << detail::outcome_to_json(r).dump(1) << '\n';
        } else if (*solve) {
            SynthSpec spec = detail::finish_spec(s_spec);
            std::optional<Vector> reference;
            const SynthInstance inst = [&] {
                if (s_instance.empty()) {
                    SynthInstance fresh = generate(spec);
                    reference = fresh.w_star;
                    return fresh;
                }
                auto loaded = io::load_instance(s_instance);
                if (loaded.spec) {
                    spec = *loaded.spec;
                    reference = loaded.instance.w_star;
                } else {
                    spec.M = loaded.instance.layout.size();
                    spec.B = loaded.instance.layout.max_group_size();
                    spec.overlap = 0;
                }
                return std::move(loaded.instance);
            }();
            const IhtConfig config = detail::make_config(s_cfg, spec, spec.seed);
            const LeastSquares objective(inst.problem);
            const auto start = std::chrono::steady_clock::now();
            const IhtResult r = iht_solve(objective, inst.layout, config, reference);
            const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
            if (!s_trace.empty()) detail::emit(s_trace, io::format_trace_csv(r.trace), out);
            if (!s_weights.empty()) detail::emit(s_weights, io::format_vector(r.w), out);
            detail::emit(s_summary, detail::solve_json(r, reference, ms).dump(1) + "\n", out);
        } else if (*phase) {
            const SynthSpec base = detail::finish_spec(ph_spec);
            const IhtConfig config = detail::make_config(ph_cfg, base, base.seed);
            const PhaseGrid grid{ph_n, ph_kappa, ph_trials, ph_tol};
            if (ph_jobs < 1) throw InvalidArgument("--jobs must be at least 1");
            detail::emit(ph_out, format_phase_csv(phase_transition(base, grid, config, ph_jobs)), out);
        } else if (*rsc) {
            const SynthSpec spec = detail::finish_spec(r_spec);
            const RscReport report = rsc_check(spec, r_k, r_trials);
            out << rsc_to_json(report).dump(1) << '\n';
            if (report.estimate.rank_deficient)
                err << "giht: some sampled supports exceed n = " << report.n << "; alpha_hat reported as 0\n";
        } else if (*sog) {
            const SynthSpec spec = detail::finish_spec(so_spec);
            if (!spec.k2_star) throw InvalidArgument("sog-demo needs --k2-star");
            IhtConfig config = detail::make_config(so_cfg, spec, spec.seed);
            const SynthInstance inst = generate(spec);
            const SolveRun run = run_solve(inst, config);
            if (!so_trace.empty()) detail::emit(so_trace, io::format_trace_csv(run.result.trace), out);
            nlohmann::json j = summary_to_json(run.summary);
            j["selected_groups"] = run.result.trace.support_history.back().group_ids;
            j["true_groups"] = inst.active_groups.group_ids;
            const auto& budget = std::get<SogBudget>(config.budget);
            j["k1"] = budget.k1;
            j["k2"] = budget.k2;
            out << j.dump(1) << '\n';
        } else if (*gen) {
            const SynthSpec spec = detail::finish_spec(g_spec);
            const SynthInstance inst = generate(spec);
            io::save_instance(g_out, inst, spec);
            out << "wrote " << g_out << " (n = " << inst.problem.n() << ", p = " << inst.problem.p() << ")\n";
        }
    } catch (const DivergenceError& e) {
        err << "giht: diverged: " << e.what() << '\n';
        return kDivergence;
    } catch (const InfeasibleError& e) {
        err << "giht: infeasible: " << e.what() << '\n';
        return kInfeasible;
    } catch (const ParseError& e) {
        err << "giht: parse error: " << e.what() << '\n';
        return kUsage;
    } catch (const GuardError& e) {
        err << "giht: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "giht: " << e.what() << '\n';
        return kUsage;
    }
    return kOk;
}

} // namespace giht::cli
