#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "zeromerge/baselines.hpp"
#include "zeromerge/workload.hpp"

namespace zm {

struct StepMetrics {
    int64_t step = 0;  // 1-based decoding step
    int64_t cache_entries = 0;
    double l2_rel_error = 0.0;
    double cosine_sim = 1.0;
    double uncompressed_mass = 1.0;
};

struct MetricsReport {
    std::string policy;  // short tag, e.g. "zeromerge"
    std::string label;   // tag plus parameters
    std::vector<StepMetrics> per_step;
    struct Summary {
        double mean_l2_rel_error = 0.0;
        double max_l2_rel_error = 0.0;
        double mean_cosine_sim = 1.0;
        int64_t peak_cache_entries = 0;
        double step_wall_seconds = 0.0;  // reported, never asserted
    } summary;
};

struct ErrorStats {
    double l2_rel = 0.0;
    double cosine = 1.0;
    bool reference_zero = false;  // metrics are NaN when set
};

/// l2_rel = |approx - reference| / |reference|, cosine clamped to [-1, 1].
/// A zero-norm reference is flagged rather than silently reported as 0.
ErrorStats attention_error(const Vector& reference, const Vector& approx);

/// Steps the policy over the trace in lockstep with a full-cache
/// reference, recording per-step output error, occupancy and the attention
/// mass left on unfused entries.
MetricsReport run_policy(const Trace& trace, const PolicyKind& kind,
                         const RunConfig& config);

/// Slack for the weight-preservation bound below: covers the float gap
/// between the running-mean merge and an exact mean.
inline constexpr double preservation_slack = 1e-9;

struct PreservationStats {
    int64_t checks = 0;
    int64_t violations = 0;
    double worst_margin = 0.0;  // min over (compensated - reference) weights
};

/// Verifies that compression never suppresses unfused tokens: at every
/// step, every surviving fusion_count == 1 entry's compensated weight must
/// be >= the weight full attention over the complete history assigns that
/// token, within preservation_slack.
PreservationStats verify_weight_preservation(const Trace& trace,
                                             const RunConfig& config);

/// Randomized verification campaign: `trials` runs over head dims
/// {4, 16, 64}, lengths {32, 128, 256}, compensation {0.1, 0.5, 1.0},
/// budgets at 5-50% of the length with a random tripartite split, random
/// decay, both generators.
PreservationStats run_preservation_campaign(int64_t trials, uint64_t seed);

/// CSV with header step,cache_entries,l2_rel_error,cosine_sim,
/// uncompressed_mass, one row per step and a "# summary:" trailer block.
/// UTF-8, LF endings, deterministic float formatting; wall time is kept
/// out so identical runs produce identical bytes.
void write_report_csv(const MetricsReport& report,
                      const std::filesystem::path& path);

/// Same rows for several policies behind a leading policy column, one
/// trailer line per policy. When both zeromerge and window reports are
/// present a lower_error_than_window comparison line is recorded.
void write_compare_csv(std::span<const MetricsReport> reports,
                       const std::filesystem::path& path);

}  // namespace zm
