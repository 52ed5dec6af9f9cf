#pragma once

#include <deque>
#include <memory>
#include <string>

#include "zeromerge/attention.hpp"
#include "zeromerge/cache.hpp"
#include "zeromerge/core.hpp"
#include "zeromerge/scoring.hpp"

namespace zm {

/// Step interface shared by every cache policy. Instances are
/// single-writer; independent instances may run on different threads.
class CachePolicy {
public:
    virtual ~CachePolicy() = default;
    virtual AttentionResult step(const Vector& q, const Vector& k,
                                 const Vector& v) = 0;
    virtual std::vector<CacheEntry> snapshot() const = 0;
    virtual std::size_t size() const = 0;
    /// Attention mass the last step placed on unfused (fusion_count == 1)
    /// entries. 1 up to rounding for every eviction-only policy.
    virtual double last_uncompressed_mass() const = 0;
};

struct PolicyKind {
    enum class Tag { full, window, sink_window, heavy_hitter, zeromerge };

    Tag tag = Tag::full;
    int64_t window = 0;     // recent size for window/sink_window/heavy_hitter
    int64_t sink = 0;       // persistent prefix for sink_window
    int64_t hh_budget = 0;  // scored slots for heavy_hitter
    Budgets budgets;        // zeromerge

    static PolicyKind full();
    static PolicyKind window_only(int64_t window);
    static PolicyKind sink_window(int64_t sink, int64_t window);
    static PolicyKind heavy_hitter(int64_t hh_budget, int64_t window);
    static PolicyKind zeromerge(const Budgets& budgets);
};

const char* policy_name(PolicyKind::Tag tag);

/// Caches every token; the ground-truth reference for error metrics.
class FullCache final : public CachePolicy {
public:
    explicit FullCache(int64_t head_dim);

    AttentionResult step(const Vector& q, const Vector& k,
                         const Vector& v) override;
    std::vector<CacheEntry> snapshot() const override;
    std::size_t size() const override { return m_keys.size(); }
    double last_uncompressed_mass() const override { return m_last_mass; }

private:
    int64_t m_head_dim;
    std::vector<Vector> m_keys;
    std::vector<Vector> m_values;
    double m_last_mass = 1.0;
};

/// Keeps only the newest `window` tokens.
class WindowCache final : public CachePolicy {
public:
    WindowCache(int64_t head_dim, int64_t window);

    AttentionResult step(const Vector& q, const Vector& k,
                         const Vector& v) override;
    std::vector<CacheEntry> snapshot() const override;
    std::size_t size() const override { return m_entries.size(); }
    double last_uncompressed_mass() const override { return m_last_mass; }

private:
    int64_t m_head_dim;
    int64_t m_window;
    std::deque<CacheEntry> m_entries;
    int64_t m_pos = 0;
    double m_last_mass = 1.0;
};

/// Keeps the first `sink` tokens forever plus the newest `window`.
class SinkWindowCache final : public CachePolicy {
public:
    SinkWindowCache(int64_t head_dim, int64_t sink, int64_t window);

    AttentionResult step(const Vector& q, const Vector& k,
                         const Vector& v) override;
    std::vector<CacheEntry> snapshot() const override;
    std::size_t size() const override {
        return m_sink.size() + m_window.size();
    }
    double last_uncompressed_mass() const override { return m_last_mass; }

private:
    int64_t m_head_dim;
    int64_t m_sink_size;
    int64_t m_window_size;
    std::vector<CacheEntry> m_sink;
    std::deque<CacheEntry> m_window;
    int64_t m_pos = 0;
    double m_last_mass = 1.0;
};

/// Keeps the newest `window` tokens plus the `hh_budget` best tokens by
/// decayed cumulative attention, evicting the lowest-scored permanently.
/// Content-identical to a zero-residual ZeroMergeCache run with the same
/// decay and window.
class HeavyHitterCache final : public CachePolicy {
public:
    HeavyHitterCache(int64_t head_dim, int64_t hh_budget, int64_t window,
                     double decay);

    AttentionResult step(const Vector& q, const Vector& k,
                         const Vector& v) override;
    std::vector<CacheEntry> snapshot() const override;
    std::size_t size() const override {
        return m_heavy.size() + m_window.size();
    }
    double last_uncompressed_mass() const override { return m_last_mass; }

private:
    int64_t m_head_dim;
    int64_t m_hh_budget;
    int64_t m_window_size;
    ScoreTracker m_tracker;
    std::vector<CacheEntry> m_heavy;
    std::vector<CacheEntry> m_window;
    int64_t m_pos = 0;
    uint64_t m_next_id = 0;
    double m_last_mass = 1.0;
    std::vector<Vector> m_key_scratch;
    std::vector<Vector> m_value_scratch;
    std::vector<std::pair<uint64_t, double>> m_weight_scratch;
};

/// ZeroMergeCache behind the shared policy interface.
class ZeroMergePolicy final : public CachePolicy {
public:
    explicit ZeroMergePolicy(const RunConfig& config);

    AttentionResult step(const Vector& q, const Vector& k,
                         const Vector& v) override;
    std::vector<CacheEntry> snapshot() const override;
    std::size_t size() const override { return m_cache.size(); }
    double last_uncompressed_mass() const override { return m_last_mass; }

    const ZeroMergeCache& cache() const { return m_cache; }

private:
    ZeroMergeCache m_cache;
    double m_last_mass = 1.0;
};

/// Builds a policy instance; head_dim and (for scored policies) decay come
/// from the config, capacities from the kind.
std::unique_ptr<CachePolicy> make_policy(const PolicyKind& kind,
                                         const RunConfig& config);

}  // namespace zm
