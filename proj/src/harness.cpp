#include "zeromerge/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace zm {

namespace {

double l2_norm(const Vector& v) {
    double acc = 0.0;
    for (double x : v) {
        acc += x * x;
    }
    return std::sqrt(acc);
}

/// Shortest-ish deterministic rendering that still round-trips doubles.
std::string fmt_double(double x) {
    if (std::isnan(x)) {
        return "nan";
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string fmt_param(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", x);
    return buf;
}

std::string policy_label(const PolicyKind& kind, const RunConfig& config) {
    std::string label = policy_name(kind.tag);
    switch (kind.tag) {
        case PolicyKind::Tag::full:
            break;
        case PolicyKind::Tag::window:
            label += "(w=" + std::to_string(kind.window) + ")";
            break;
        case PolicyKind::Tag::sink_window:
            label += "(sink=" + std::to_string(kind.sink) +
                     ",w=" + std::to_string(kind.window) + ")";
            break;
        case PolicyKind::Tag::heavy_hitter:
            label += "(hh=" + std::to_string(kind.hh_budget) +
                     ",w=" + std::to_string(kind.window) +
                     ",decay=" + fmt_param(config.decay) + ")";
            break;
        case PolicyKind::Tag::zeromerge:
            label += "(bc=" + std::to_string(kind.budgets.context) +
                     ",br=" + std::to_string(kind.budgets.residual) +
                     ",bp=" + std::to_string(kind.budgets.proximity) +
                     ",decay=" + fmt_param(config.decay) +
                     ",alpha=" + fmt_param(config.compensation) + ")";
            break;
    }
    return label;
}

void check_trace(const Trace& trace, const RunConfig& config) {
    if (trace.head_dim != config.head_dim) {
        throw std::invalid_argument(
            "harness: trace/config head dimension mismatch");
    }
    if (trace.steps.empty()) {
        throw std::invalid_argument("harness: empty trace");
    }
}

void append_summary(std::string& out, const MetricsReport& report) {
    out += "# summary: label=" + report.label + "\n";
    out += "# summary: steps=" + std::to_string(report.per_step.size()) +
           " peak_entries=" +
           std::to_string(report.summary.peak_cache_entries) + "\n";
    out += "# summary: mean_l2_rel_error=" +
           fmt_double(report.summary.mean_l2_rel_error) +
           " max_l2_rel_error=" + fmt_double(report.summary.max_l2_rel_error) +
           " mean_cosine_sim=" + fmt_double(report.summary.mean_cosine_sim) +
           "\n";
}

void write_text_file(const std::string& body,
                     const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("report: cannot open " + path.string() +
                                 " for writing");
    }
    out.write(body.data(), std::streamsize(body.size()));
    out.flush();
    if (!out) {
        throw std::runtime_error("report: write failed for " + path.string());
    }
}

}  // namespace

ErrorStats attention_error(const Vector& reference, const Vector& approx) {
    if (reference.size() != approx.size()) {
        throw std::invalid_argument("error: dimension mismatch");
    }
    const double ref_norm = l2_norm(reference);
    if (ref_norm == 0.0) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        return {nan, nan, true};
    }
    double diff_sq = 0.0;
    double dot_ra = 0.0;
    for (std::size_t j = 0; j < reference.size(); ++j) {
        const double d = approx[j] - reference[j];
        diff_sq += d * d;
        dot_ra += reference[j] * approx[j];
    }
    ErrorStats stats;
    stats.l2_rel = std::sqrt(diff_sq) / ref_norm;
    const double approx_norm = l2_norm(approx);
    stats.cosine = std::clamp(dot_ra / (ref_norm * approx_norm), -1.0, 1.0);
    return stats;
}

MetricsReport run_policy(const Trace& trace, const PolicyKind& kind,
                         const RunConfig& config) {
    check_trace(trace, config);
    validate_config(config);

    auto policy = make_policy(kind, config);
    FullCache reference(config.head_dim);

    MetricsReport report;
    report.policy = policy_name(kind.tag);
    report.label = policy_label(kind, config);
    report.per_step.reserve(trace.steps.size());

    const auto start = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        const StepRecord& rec = trace.steps[i];
        const AttentionResult ref = reference.step(rec.q, rec.k, rec.v);
        const AttentionResult out = policy->step(rec.q, rec.k, rec.v);
        const ErrorStats err = attention_error(ref.output, out.output);
        report.per_step.push_back(StepMetrics{
            int64_t(i) + 1, int64_t(policy->size()), err.l2_rel, err.cosine,
            policy->last_uncompressed_mass()});
    }
    const auto stop = std::chrono::steady_clock::now();

    auto& s = report.summary;
    s.mean_l2_rel_error = 0.0;
    s.max_l2_rel_error = 0.0;
    s.mean_cosine_sim = 0.0;
    s.peak_cache_entries = 0;
    for (const StepMetrics& m : report.per_step) {
        s.mean_l2_rel_error += m.l2_rel_error;
        s.max_l2_rel_error = std::max(s.max_l2_rel_error, m.l2_rel_error);
        s.mean_cosine_sim += m.cosine_sim;
        s.peak_cache_entries = std::max(s.peak_cache_entries, m.cache_entries);
    }
    const double n = double(report.per_step.size());
    s.mean_l2_rel_error /= n;
    s.mean_cosine_sim /= n;
    s.step_wall_seconds =
        std::chrono::duration<double>(stop - start).count() / n;
    return report;
}

PreservationStats verify_weight_preservation(const Trace& trace,
                                             const RunConfig& config) {
    check_trace(trace, config);
    ZeroMergeCache cache(config);
    FullCache reference(config.head_dim);

    PreservationStats stats;
    stats.worst_margin = std::numeric_limits<double>::infinity();
    for (const StepRecord& rec : trace.steps) {
        const AttentionResult ref = reference.step(rec.q, rec.k, rec.v);
        const StepDetail detail = cache.step_detailed(rec.q, rec.k, rec.v);
        for (std::size_t t = 0; t < detail.fusion_count.size(); ++t) {
            if (detail.fusion_count[t] != 1) {
                continue;  // merged slots have no single reference weight
            }
            const auto pos = std::size_t(detail.origin_pos[t]);
            const double margin =
                detail.attention.weights[t] - ref.weights[pos];
            stats.checks += 1;
            if (margin < -preservation_slack) {
                stats.violations += 1;
            }
            stats.worst_margin = std::min(stats.worst_margin, margin);
        }
    }
    if (stats.checks == 0) {
        stats.worst_margin = 0.0;
    }
    return stats;
}

PreservationStats run_preservation_campaign(int64_t trials, uint64_t seed) {
    if (trials < 1) {
        throw std::invalid_argument("campaign: trials must be at least 1");
    }
    static constexpr int64_t dims[] = {4, 16, 64};
    static constexpr int64_t lengths[] = {32, 128, 256};
    static constexpr double alphas[] = {0.1, 0.5, 1.0};

    Prng rng(seed);
    PreservationStats total;
    total.worst_margin = std::numeric_limits<double>::infinity();
    for (int64_t trial = 0; trial < trials; ++trial) {
        const int64_t d = dims[rng.below(3)];
        const int64_t len = lengths[rng.below(3)];
        const double alpha = alphas[rng.below(3)];

        // Budget at 5-50% of the length with a random tripartite split so
        // the degenerate corners (no context, no residual) get exercised.
        const double frac = 0.05 + 0.45 * rng.uniform();
        const auto budget = std::max<int64_t>(1, std::llround(frac * double(len)));
        const int64_t bp = 1 + int64_t(rng.below(uint64_t(budget)));
        const int64_t bc = int64_t(rng.below(uint64_t(budget - bp) + 1));
        const int64_t br = budget - bp - bc;

        const uint64_t trace_seed = rng.bits();
        Trace trace;
        if (rng.below(2) == 0) {
            trace = gen_gaussian(len, d, trace_seed);
        } else {
            const int64_t n_hot =
                int64_t(rng.below(uint64_t(std::min<int64_t>(len / 4, 8)) + 1));
            const double gain = 4.0 * rng.uniform();
            trace = gen_heavy_hitter(len, d, n_hot, gain, trace_seed);
        }

        RunConfig config;
        config.head_dim = d;
        config.decay = rng.uniform();
        config.compensation = alpha;
        config.budgets = make_budgets(bc, br, bp);
        config.seed = trace_seed;

        const PreservationStats stats = verify_weight_preservation(trace, config);
        total.checks += stats.checks;
        total.violations += stats.violations;
        total.worst_margin = std::min(total.worst_margin, stats.worst_margin);
    }
    return total;
}

void write_report_csv(const MetricsReport& report,
                      const std::filesystem::path& path) {
    std::string body =
        "step,cache_entries,l2_rel_error,cosine_sim,uncompressed_mass\n";
    for (const StepMetrics& m : report.per_step) {
        body += std::to_string(m.step) + "," +
                std::to_string(m.cache_entries) + "," +
                fmt_double(m.l2_rel_error) + "," + fmt_double(m.cosine_sim) +
                "," + fmt_double(m.uncompressed_mass) + "\n";
    }
    append_summary(body, report);
    write_text_file(body, path);
}

void write_compare_csv(std::span<const MetricsReport> reports,
                       const std::filesystem::path& path) {
    std::string body =
        "policy,step,cache_entries,l2_rel_error,cosine_sim,"
        "uncompressed_mass\n";
    for (const MetricsReport& report : reports) {
        for (const StepMetrics& m : report.per_step) {
            body += report.policy + "," + std::to_string(m.step) + "," +
                    std::to_string(m.cache_entries) + "," +
                    fmt_double(m.l2_rel_error) + "," +
                    fmt_double(m.cosine_sim) + "," +
                    fmt_double(m.uncompressed_mass) + "\n";
        }
    }
    for (const MetricsReport& report : reports) {
        append_summary(body, report);
    }

    const MetricsReport* merged = nullptr;
    const MetricsReport* window = nullptr;
    for (const MetricsReport& report : reports) {
        if (report.policy == policy_name(PolicyKind::Tag::zeromerge)) {
            merged = &report;
        } else if (report.policy == policy_name(PolicyKind::Tag::window)) {
            window = &report;
        }
    }
    if (merged != nullptr && window != nullptr) {
        const bool pass = merged->summary.mean_l2_rel_error <=
                          window->summary.mean_l2_rel_error;
        body += std::string("# summary: lower_error_than_window=") +
                (pass ? "1" : "0") +
                " zeromerge_mean_l2=" +
                fmt_double(merged->summary.mean_l2_rel_error) +
                " window_mean_l2=" +
                fmt_double(window->summary.mean_l2_rel_error) + "\n";
    }
    write_text_file(body, path);
}

}  // namespace zm
