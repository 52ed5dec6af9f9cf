#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "zeromerge/harness.hpp"

namespace {

// Flag-level mistakes: reported with the offending flag, exit code 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BudgetFlags {
    int64_t bc = 4;  // worked-example split, see README
    int64_t br = 2;
    int64_t bp = 3;
    int64_t window = 0;
    int64_t sink = 0;
    int64_t hh_budget = 0;
    double budget_frac = 0.0;
    bool bc_given = false;
    bool br_given = false;
    bool bp_given = false;
    bool window_given = false;
    bool sink_given = false;
    bool hh_given = false;
    bool frac_given = false;
};

struct RunFlags {
    std::string trace_path;
    double decay = 0.98;
    double alpha = 0.6;
    uint64_t seed = 0;
    std::string out_path;
    BudgetFlags budget;
};

void add_budget_flags(CLI::App* cmd, BudgetFlags& flags) {
    cmd->add_option("--bc", flags.bc, "context budget (top-scored slots)");
    cmd->add_option("--br", flags.br, "residual budget (merged slots)");
    cmd->add_option("--bp", flags.bp, "proximity budget (newest tokens)");
    cmd->add_option("--window", flags.window,
                    "recent window for window/sink-window/heavy-hitter");
    cmd->add_option("--sink", flags.sink, "persistent prefix for sink-window");
    cmd->add_option("--hh-budget", flags.hh_budget,
                    "scored slots for heavy-hitter");
    cmd->add_option("--budget-frac", flags.budget_frac,
                    "total budget as a fraction of the trace length, split "
                    "bp:bc:br = 3:4:2 unless overridden");
}

void add_run_flags(CLI::App* cmd, RunFlags& flags) {
    cmd->add_option("--trace", flags.trace_path, "input KVTR trace")
        ->required();
    cmd->add_option("--decay", flags.decay, "score decay (default 0.98)");
    cmd->add_option("--alpha", flags.alpha,
                    "fusion compensation strength (default 0.6)");
    cmd->add_option("--seed", flags.seed, "run seed recorded in the config");
    cmd->add_option("--out", flags.out_path, "output CSV path")->required();
    add_budget_flags(cmd, flags.budget);
    cmd->set_config("--config", "",
                    "key=value file; flags override file values");
}

void read_given(const CLI::App* cmd, BudgetFlags& flags) {
    flags.bc_given = cmd->count("--bc") > 0;
    flags.br_given = cmd->count("--br") > 0;
    flags.bp_given = cmd->count("--bp") > 0;
    flags.window_given = cmd->count("--window") > 0;
    flags.sink_given = cmd->count("--sink") > 0;
    flags.hh_given = cmd->count("--hh-budget") > 0;
    flags.frac_given = cmd->count("--budget-frac") > 0;
}

void check_run_flags(const RunFlags& flags) {
    if (!(flags.decay >= 0.0 && flags.decay <= 1.0)) {
        throw UsageError("--decay must lie in [0, 1]");
    }
    if (!(flags.alpha > 0.0 && flags.alpha <= 1.0)) {
        throw UsageError("--alpha must lie in (0, 1]");
    }
    if (flags.budget.frac_given &&
        !(flags.budget.budget_frac > 0.0 && flags.budget.budget_frac <= 1.0)) {
        throw UsageError("--budget-frac must lie in (0, 1]");
    }
}

int64_t frac_total(double frac, std::size_t trace_len) {
    return std::max<int64_t>(1, llround(frac * double(trace_len)));
}

/// Resolves the capacities of one policy from the flag set. With
/// --budget-frac the total is split bp:bc:br = 3:4:2 (zeromerge), taken
/// whole (window), split 1/4 sink + rest (sink-window) or split into the
/// proximity share as window + rest as heavy slots (heavy-hitter); explicit
/// flags override the derived parts.
zm::PolicyKind resolve_policy(zm::PolicyKind::Tag tag, const BudgetFlags& flags,
                              std::size_t trace_len) {
    using Tag = zm::PolicyKind::Tag;
    const bool frac = flags.frac_given;
    const int64_t total = frac ? frac_total(flags.budget_frac, trace_len) : 0;

    switch (tag) {
        case Tag::full:
            return zm::PolicyKind::full();
        case Tag::window: {
            int64_t w = flags.window_given ? flags.window : (frac ? total : 0);
            if (w == 0) {
                throw UsageError("--window is required for the window policy");
            }
            if (w < 1) {
                throw UsageError("--window must be at least 1");
            }
            return zm::PolicyKind::window_only(w);
        }
        case Tag::sink_window: {
            int64_t sink = flags.sink;
            int64_t w = flags.window;
            if (frac) {
                if (!flags.sink_given) {
                    sink = total / 4;
                }
                if (!flags.window_given) {
                    w = std::max<int64_t>(1, total - sink);
                }
            }
            if (!flags.window_given && !frac) {
                throw UsageError(
                    "--window is required for the sink-window policy");
            }
            if (sink < 0) {
                throw UsageError("--sink must be non-negative");
            }
            if (w < 1) {
                throw UsageError("--window must be at least 1");
            }
            return zm::PolicyKind::sink_window(sink, w);
        }
        case Tag::heavy_hitter: {
            int64_t w = flags.window;
            int64_t hh = flags.hh_budget;
            if (frac) {
                if (!flags.window_given) {
                    w = std::max<int64_t>(1, llround(double(total) * 3.0 / 9.0));
                }
                if (!flags.hh_given) {
                    hh = std::max<int64_t>(0, total - w);
                }
            }
            if (!flags.window_given && !frac) {
                throw UsageError(
                    "--window is required for the heavy-hitter policy");
            }
            if (!flags.hh_given && !frac) {
                throw UsageError(
                    "--hh-budget is required for the heavy-hitter policy");
            }
            if (w < 1) {
                throw UsageError("--window must be at least 1");
            }
            if (hh < 0) {
                throw UsageError("--hh-budget must be non-negative");
            }
            return zm::PolicyKind::heavy_hitter(hh, w);
        }
        case Tag::zeromerge: {
            int64_t bc = flags.bc;
            int64_t br = flags.br;
            int64_t bp = flags.bp;
            if (frac) {
                bp = std::max<int64_t>(1, llround(double(total) * 3.0 / 9.0));
                bc = llround(double(total) * 4.0 / 9.0);
                br = total - bp - bc;
                if (br < 0) {
                    bc += br;
                    br = 0;
                }
                if (flags.bp_given) bp = flags.bp;
                if (flags.bc_given) bc = flags.bc;
                if (flags.br_given) br = flags.br;
            }
            if (bp < 1) {
                throw UsageError("--bp must be at least 1");
            }
            if (bc < 0) {
                throw UsageError("--bc must be non-negative");
            }
            if (br < 0) {
                throw UsageError("--br must be non-negative");
            }
            return zm::PolicyKind::zeromerge(zm::make_budgets(bc, br, bp));
        }
    }
    throw UsageError("--policy: unknown policy");
}

zm::PolicyKind::Tag tag_from_name(const std::string& name) {
    using Tag = zm::PolicyKind::Tag;
    for (Tag tag : {Tag::full, Tag::window, Tag::sink_window,
                    Tag::heavy_hitter, Tag::zeromerge}) {
        if (name == zm::policy_name(tag)) {
            return tag;
        }
    }
    throw UsageError("--policy: unknown policy '" + name + "'");
}

zm::Trace load_trace(const std::string& path) {
    if (!std::filesystem::exists(path)) {
        throw UsageError("--trace: cannot open '" + path + "'");
    }
    return zm::read_trace(path);
}

void print_report(const zm::MetricsReport& report) {
    std::printf("label: %s\n", report.label.c_str());
    std::printf("steps: %zu  peak_entries: %lld\n", report.per_step.size(),
                (long long)report.summary.peak_cache_entries);
    std::printf("mean_l2_rel_error: %.6g  max_l2_rel_error: %.6g\n",
                report.summary.mean_l2_rel_error,
                report.summary.max_l2_rel_error);
    std::printf("mean_cosine_sim: %.6g\n", report.summary.mean_cosine_sim);
    std::printf("ms_per_step: %.4g\n",
                report.summary.step_wall_seconds * 1e3);
}

// --- subcommand payloads -------------------------------------------------

struct TraceGenFlags {
    std::string kind = "gaussian";
    int64_t steps = 0;
    int64_t dim = 0;
    int64_t n_hot = 0;
    double gain = 0.0;
    uint64_t seed = 0;
    std::string out_path;
};

int run_trace_gen(const TraceGenFlags& flags) {
    if (flags.steps < 1) {
        throw UsageError("--steps must be at least 1");
    }
    if (flags.dim < 1) {
        throw UsageError("--dim must be at least 1");
    }
    zm::Trace trace;
    if (flags.kind == "gaussian") {
        trace = zm::gen_gaussian(flags.steps, flags.dim, flags.seed);
    } else if (flags.kind == "heavy-hitter") {
        if (flags.n_hot < 0 || flags.n_hot > flags.steps) {
            throw UsageError("--n-hot must lie in [0, steps]");
        }
        if (flags.gain < 0.0) {
            throw UsageError("--gain must be non-negative");
        }
        trace = zm::gen_heavy_hitter(flags.steps, flags.dim, flags.n_hot,
                                     flags.gain, flags.seed);
    } else {
        throw UsageError("--kind must be gaussian or heavy-hitter");
    }
    zm::write_trace(trace, flags.out_path);
    std::printf("wrote %s: %lld steps, dim %lld, kind %s\n",
                flags.out_path.c_str(), (long long)flags.steps,
                (long long)flags.dim, flags.kind.c_str());
    return 0;
}

int run_bench(const RunFlags& flags, const std::string& policy_str) {
    check_run_flags(flags);
    const zm::Trace trace = load_trace(flags.trace_path);
    const zm::PolicyKind kind =
        resolve_policy(tag_from_name(policy_str), flags.budget,
                       trace.steps.size());
    zm::RunConfig config;
    config.head_dim = trace.head_dim;
    config.decay = flags.decay;
    config.compensation = flags.alpha;
    config.budgets = kind.tag == zm::PolicyKind::Tag::zeromerge
                         ? kind.budgets
                         : zm::Budgets{};
    config.seed = flags.seed;

    const zm::MetricsReport report = zm::run_policy(trace, kind, config);
    zm::write_report_csv(report, flags.out_path);
    print_report(report);
    std::printf("wrote %s\n", flags.out_path.c_str());
    return 0;
}

int run_compare(const RunFlags& flags, const std::string& policies_csv) {
    check_run_flags(flags);
    const zm::Trace trace = load_trace(flags.trace_path);

    std::vector<zm::PolicyKind> kinds;
    std::string token;
    for (std::size_t i = 0; i <= policies_csv.size(); ++i) {
        if (i == policies_csv.size() || policies_csv[i] == ',') {
            if (!token.empty()) {
                kinds.push_back(resolve_policy(tag_from_name(token),
                                               flags.budget,
                                               trace.steps.size()));
                token.clear();
            }
        } else {
            token.push_back(policies_csv[i]);
        }
    }
    if (kinds.empty()) {
        throw UsageError("--policies must name at least one policy");
    }

    zm::RunConfig base;
    base.head_dim = trace.head_dim;
    base.decay = flags.decay;
    base.compensation = flags.alpha;
    base.seed = flags.seed;

    // One independent run per policy; assembly stays in list order.
    std::vector<zm::MetricsReport> reports(kinds.size());
    std::vector<std::exception_ptr> errors(kinds.size());
    std::vector<std::thread> workers;
    workers.reserve(kinds.size());
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        workers.emplace_back([&, i] {
            try {
                zm::RunConfig config = base;
                if (kinds[i].tag == zm::PolicyKind::Tag::zeromerge) {
                    config.budgets = kinds[i].budgets;
                }
                reports[i] = zm::run_policy(trace, kinds[i], config);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
    }
    for (auto& w : workers) {
        w.join();
    }
    for (const auto& err : errors) {
        if (err) {
            std::rethrow_exception(err);
        }
    }

    zm::write_compare_csv(reports, flags.out_path);

    std::printf("%-36s %6s %6s %12s %12s %10s %10s\n", "policy", "steps",
                "peak", "mean_l2", "max_l2", "mean_cos", "ms/step");
    for (const zm::MetricsReport& r : reports) {
        std::printf("%-36s %6zu %6lld %12.6g %12.6g %10.6g %10.4g\n",
                    r.label.c_str(), r.per_step.size(),
                    (long long)r.summary.peak_cache_entries,
                    r.summary.mean_l2_rel_error, r.summary.max_l2_rel_error,
                    r.summary.mean_cosine_sim,
                    r.summary.step_wall_seconds * 1e3);
    }
    std::printf("wrote %s\n", flags.out_path.c_str());
    return 0;
}

int run_verify(int64_t trials, uint64_t seed) {
    if (trials < 1) {
        throw UsageError("--trials must be at least 1");
    }
    const zm::PreservationStats stats =
        zm::run_preservation_campaign(trials, seed);
    std::printf("trials: %lld\n", (long long)trials);
    std::printf("checks: %lld\n", (long long)stats.checks);
    std::printf("violations: %lld\n", (long long)stats.violations);
    std::printf("worst_margin: %.6g\n", stats.worst_margin);
    return stats.violations == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"streaming KV-cache compression workbench"};
    app.require_subcommand(1);

    TraceGenFlags gen_flags;
    CLI::App* gen = app.add_subcommand("trace-gen", "generate a KVTR trace");
    gen->add_option("--kind", gen_flags.kind, "gaussian or heavy-hitter");
    gen->add_option("--steps", gen_flags.steps, "trace length")->required();
    gen->add_option("--dim", gen_flags.dim, "head dimension")->required();
    gen->add_option("--n-hot", gen_flags.n_hot,
                    "hot tokens (heavy-hitter only)");
    gen->add_option("--gain", gen_flags.gain,
                    "hot alignment strength (heavy-hitter only)");
    gen->add_option("--seed", gen_flags.seed, "generator seed");
    gen->add_option("--out", gen_flags.out_path, "output path")->required();
    gen->set_config("--config", "",
                    "key=value file; flags override file values");

    RunFlags bench_flags;
    std::string bench_policy;
    CLI::App* bench =
        app.add_subcommand("bench", "run one policy over a trace");
    bench->add_option("--policy", bench_policy,
                      "full|window|sink-window|heavy-hitter|zeromerge")
        ->required();
    add_run_flags(bench, bench_flags);

    RunFlags compare_flags;
    std::string compare_policies =
        "full,window,sink-window,heavy-hitter,zeromerge";
    CLI::App* compare =
        app.add_subcommand("compare", "run several policies over one trace");
    compare->add_option("--policies", compare_policies,
                        "comma-separated policy list");
    add_run_flags(compare, compare_flags);

    int64_t trials = 1000;
    uint64_t verify_seed = 0;
    CLI::App* verify = app.add_subcommand(
        "verify", "randomized weight-preservation campaign");
    verify->add_option("--trials", trials, "randomized trials");
    verify->add_option("--seed", verify_seed, "campaign seed");
    verify->set_config("--config", "",
                       "key=value file; flags override file values");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) {
            return run_trace_gen(gen_flags);
        }
        if (bench->parsed()) {
            read_given(bench, bench_flags.budget);
            return run_bench(bench_flags, bench_policy);
        }
        if (compare->parsed()) {
            read_given(compare, compare_flags.budget);
            return run_compare(compare_flags, compare_policies);
        }
        if (verify->parsed()) {
            return run_verify(trials, verify_seed);
        }
    } catch (const UsageError& e) {
        std::fprintf(stderr, "zmerge: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "zmerge: %s\n", e.what());
        return 2;
    }
    return 1;
}
