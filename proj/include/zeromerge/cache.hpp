#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "zeromerge/attention.hpp"
#include "zeromerge/core.hpp"
#include "zeromerge/scoring.hpp"

namespace zm {

/// Attention-time view of one decoding step: the result plus per-entry
/// metadata in weight order, captured before the overflow cascade runs.
/// Used for mass accounting and weight-preservation checks.
struct StepDetail {
    AttentionResult attention;
    std::vector<int64_t> origin_pos;
    std::vector<int64_t> fusion_count;
};

/// Most compatible residual slot for a key: argmax of slot_key . key,
/// ties broken toward the lowest index.
std::size_t select_merge_slot(std::span<const CacheEntry> residual,
                              const Vector& key);

/// Folds (key, value) into a slot as a running mean and bumps the fusion
/// count: k <- (w*k + key)/(w+1), v <- (w*v + value)/(w+1), w <- w+1.
void merge_into_slot(CacheEntry& slot, const Vector& key, const Vector& value);

/// Tripartite streaming cache: a FIFO proximity window feeding a
/// score-ranked context segment, whose evictees are absorbed into a fixed
/// number of mean-merged residual slots. Capacity never exceeds
/// budgets.total() at any observable point.
class ZeroMergeCache {
public:
    explicit ZeroMergeCache(const RunConfig& config);

    /// One decoding step: appends (k, v), runs compensated attention of q
    /// over the whole cache, folds the weights into the contribution
    /// scores, then restores all capacity bounds.
    AttentionResult step(const Vector& q, const Vector& k, const Vector& v);

    /// step() plus the attention-time entry metadata.
    StepDetail step_detailed(const Vector& q, const Vector& k, const Vector& v);

    /// Cascade alone, without attention or score updates: appends the entry
    /// to proximity and handles the overflow chain
    /// proximity -> context -> residual -> merge/drop. The entry must be
    /// unfused (fusion_count == 1); the cache assigns its identity and
    /// registers it with prior score 0.
    void ingest_cascade(CacheEntry entry);

    /// Entries in concatenation order context | residual | proximity.
    /// Scores are stamped from the tracker; residual slots report 0.
    std::vector<CacheEntry> snapshot() const;

    std::array<std::size_t, 3> segment_sizes() const;
    std::size_t size() const;
    int64_t steps() const { return m_steps; }
    const RunConfig& config() const { return m_config; }

    /// Positions of every token folded into the slot holding entry `id`,
    /// oldest first; size equals the slot's fusion count.
    const std::vector<int64_t>& merge_log(uint64_t id) const;

private:
    void append(CacheEntry entry);
    void overflow_cascade();

    RunConfig m_config;
    ScoreTracker m_tracker;
    std::vector<CacheEntry> m_context;
    std::vector<CacheEntry> m_residual;
    std::vector<CacheEntry> m_proximity;  // FIFO by position
    int64_t m_steps = 0;
    uint64_t m_next_id = 0;
    std::unordered_map<uint64_t, std::vector<int64_t>> m_merge_log;
    std::vector<std::pair<uint64_t, double>> m_weight_scratch;
};

/// Independent caches for a set of attention heads. Heads may be stepped
/// from different threads; there is no shared state between them.
std::vector<ZeroMergeCache> make_head_caches(const RunConfig& config,
                                             std::span<const Budgets> per_head);
std::vector<ZeroMergeCache> make_head_caches(const RunConfig& config,
                                             std::size_t heads);

}  // namespace zm
