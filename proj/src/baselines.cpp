#include "zeromerge/baselines.hpp"

#include <numeric>
#include <stdexcept>
#include <utility>

namespace zm {

namespace {

double weight_sum(const std::vector<double>& weights) {
    return std::accumulate(weights.begin(), weights.end(), 0.0);
}

void check_dims(int64_t head_dim, const Vector& q, const Vector& k,
                const Vector& v) {
    if (int64_t(q.size()) != head_dim || int64_t(k.size()) != head_dim ||
        int64_t(v.size()) != head_dim) {
        throw std::invalid_argument("policy: dimension mismatch");
    }
}

CacheEntry make_entry(const Vector& k, const Vector& v, int64_t pos,
                      uint64_t id) {
    CacheEntry e;
    e.key = k;
    e.value = v;
    e.origin_pos = pos;
    e.id = id;
    return e;
}

}  // namespace

PolicyKind PolicyKind::full() { return PolicyKind{}; }

PolicyKind PolicyKind::window_only(int64_t window) {
    PolicyKind kind;
    kind.tag = Tag::window;
    kind.window = window;
    return kind;
}

PolicyKind PolicyKind::sink_window(int64_t sink, int64_t window) {
    PolicyKind kind;
    kind.tag = Tag::sink_window;
    kind.sink = sink;
    kind.window = window;
    return kind;
}

PolicyKind PolicyKind::heavy_hitter(int64_t hh_budget, int64_t window) {
    PolicyKind kind;
    kind.tag = Tag::heavy_hitter;
    kind.hh_budget = hh_budget;
    kind.window = window;
    return kind;
}

PolicyKind PolicyKind::zeromerge(const Budgets& budgets) {
    PolicyKind kind;
    kind.tag = Tag::zeromerge;
    kind.budgets = budgets;
    return kind;
}

const char* policy_name(PolicyKind::Tag tag) {
    switch (tag) {
        case PolicyKind::Tag::full: return "full";
        case PolicyKind::Tag::window: return "window";
        case PolicyKind::Tag::sink_window: return "sink-window";
        case PolicyKind::Tag::heavy_hitter: return "heavy-hitter";
        case PolicyKind::Tag::zeromerge: return "zeromerge";
    }
    throw std::invalid_argument("policy: unknown tag");
}

FullCache::FullCache(int64_t head_dim) : m_head_dim(head_dim) {
    if (head_dim < 1) {
        throw std::invalid_argument("policy: head_dim must be at least 1");
    }
}

AttentionResult FullCache::step(const Vector& q, const Vector& k,
                                const Vector& v) {
    check_dims(m_head_dim, q, k, v);
    m_keys.push_back(k);
    m_values.push_back(v);
    AttentionResult res = full_attention(q, m_keys, m_values);
    m_last_mass = weight_sum(res.weights);
    return res;
}

std::vector<CacheEntry> FullCache::snapshot() const {
    std::vector<CacheEntry> out;
    out.reserve(m_keys.size());
    for (std::size_t i = 0; i < m_keys.size(); ++i) {
        out.push_back(make_entry(m_keys[i], m_values[i], int64_t(i), i));
    }
    return out;
}

WindowCache::WindowCache(int64_t head_dim, int64_t window)
    : m_head_dim(head_dim), m_window(window) {
    if (head_dim < 1) {
        throw std::invalid_argument("policy: head_dim must be at least 1");
    }
    if (window < 1) {
        throw std::invalid_argument("policy: window must be at least 1");
    }
}

AttentionResult WindowCache::step(const Vector& q, const Vector& k,
                                  const Vector& v) {
    check_dims(m_head_dim, q, k, v);
    m_entries.push_back(make_entry(k, v, m_pos, uint64_t(m_pos)));
    m_pos += 1;
    if (int64_t(m_entries.size()) > m_window) {
        m_entries.pop_front();
    }
    std::vector<Vector> keys, values;
    keys.reserve(m_entries.size());
    values.reserve(m_entries.size());
    for (const CacheEntry& e : m_entries) {
        keys.push_back(e.key);
        values.push_back(e.value);
    }
    AttentionResult res = full_attention(q, keys, values);
    m_last_mass = weight_sum(res.weights);
    return res;
}

std::vector<CacheEntry> WindowCache::snapshot() const {
    return {m_entries.begin(), m_entries.end()};
}

SinkWindowCache::SinkWindowCache(int64_t head_dim, int64_t sink, int64_t window)
    : m_head_dim(head_dim), m_sink_size(sink), m_window_size(window) {
    if (head_dim < 1) {
        throw std::invalid_argument("policy: head_dim must be at least 1");
    }
    if (sink < 0) {
        throw std::invalid_argument("policy: sink must be non-negative");
    }
    if (window < 1) {
        throw std::invalid_argument("policy: window must be at least 1");
    }
}

AttentionResult SinkWindowCache::step(const Vector& q, const Vector& k,
                                      const Vector& v) {
    check_dims(m_head_dim, q, k, v);
    m_window.push_back(make_entry(k, v, m_pos, uint64_t(m_pos)));
    m_pos += 1;
    if (int64_t(m_window.size()) > m_window_size) {
        CacheEntry old = std::move(m_window.front());
        m_window.pop_front();
        if (old.origin_pos < m_sink_size) {
            m_sink.push_back(std::move(old));  // first tokens are kept forever
        }
    }
    std::vector<Vector> keys, values;
    keys.reserve(size());
    values.reserve(size());
    for (const CacheEntry& e : m_sink) {
        keys.push_back(e.key);
        values.push_back(e.value);
    }
    for (const CacheEntry& e : m_window) {
        keys.push_back(e.key);
        values.push_back(e.value);
    }
    AttentionResult res = full_attention(q, keys, values);
    m_last_mass = weight_sum(res.weights);
    return res;
}

std::vector<CacheEntry> SinkWindowCache::snapshot() const {
    std::vector<CacheEntry> out;
    out.reserve(size());
    out.insert(out.end(), m_sink.begin(), m_sink.end());
    out.insert(out.end(), m_window.begin(), m_window.end());
    return out;
}

HeavyHitterCache::HeavyHitterCache(int64_t head_dim, int64_t hh_budget,
                                   int64_t window, double decay)
    : m_head_dim(head_dim),
      m_hh_budget(hh_budget),
      m_window_size(window),
      m_tracker(decay) {
    if (head_dim < 1) {
        throw std::invalid_argument("policy: head_dim must be at least 1");
    }
    if (hh_budget < 0) {
        throw std::invalid_argument("policy: hh_budget must be non-negative");
    }
    if (window < 1) {
        throw std::invalid_argument("policy: window must be at least 1");
    }
}

AttentionResult HeavyHitterCache::step(const Vector& q, const Vector& k,
                                       const Vector& v) {
    check_dims(m_head_dim, q, k, v);
    CacheEntry entry = make_entry(k, v, m_pos, m_next_id++);
    m_pos += 1;
    m_tracker.track(entry.id);
    m_window.push_back(std::move(entry));

    m_key_scratch.clear();
    m_value_scratch.clear();
    for (const CacheEntry& e : m_heavy) {
        m_key_scratch.push_back(e.key);
        m_value_scratch.push_back(e.value);
    }
    for (const CacheEntry& e : m_window) {
        m_key_scratch.push_back(e.key);
        m_value_scratch.push_back(e.value);
    }
    AttentionResult res = full_attention(q, m_key_scratch, m_value_scratch);
    m_last_mass = weight_sum(res.weights);

    m_weight_scratch.clear();
    std::size_t t = 0;
    for (const CacheEntry& e : m_heavy) {
        m_weight_scratch.emplace_back(e.id, res.weights[t++]);
    }
    for (const CacheEntry& e : m_window) {
        m_weight_scratch.emplace_back(e.id, res.weights[t++]);
    }
    m_tracker.update(m_weight_scratch);
    for (CacheEntry& e : m_heavy) {
        e.score = m_tracker.score(e.id);
    }
    for (CacheEntry& e : m_window) {
        e.score = m_tracker.score(e.id);
    }

    if (int64_t(m_window.size()) > m_window_size) {
        m_heavy.push_back(std::move(m_window.front()));
        m_window.erase(m_window.begin());
        if (int64_t(m_heavy.size()) > m_hh_budget) {
            // Same rule as the merging cache's context eviction: lowest
            // score wins, ties fall to the lowest insertion index.
            std::size_t victim = 0;
            double victim_score = m_tracker.score(m_heavy[0].id);
            for (std::size_t i = 1; i < m_heavy.size(); ++i) {
                const double s = m_tracker.score(m_heavy[i].id);
                if (s < victim_score) {
                    victim = i;
                    victim_score = s;
                }
            }
            m_tracker.untrack(m_heavy[victim].id);
            m_heavy.erase(m_heavy.begin() + victim);
        }
    }
    return res;
}

std::vector<CacheEntry> HeavyHitterCache::snapshot() const {
    std::vector<CacheEntry> out;
    out.reserve(size());
    out.insert(out.end(), m_heavy.begin(), m_heavy.end());
    out.insert(out.end(), m_window.begin(), m_window.end());
    return out;
}

ZeroMergePolicy::ZeroMergePolicy(const RunConfig& config) : m_cache(config) {}

AttentionResult ZeroMergePolicy::step(const Vector& q, const Vector& k,
                                      const Vector& v) {
    StepDetail detail = m_cache.step_detailed(q, k, v);
    double mass = 0.0;
    for (std::size_t t = 0; t < detail.fusion_count.size(); ++t) {
        if (detail.fusion_count[t] == 1) {
            mass += detail.attention.weights[t];
        }
    }
    m_last_mass = mass;
    return std::move(detail.attention);
}

std::vector<CacheEntry> ZeroMergePolicy::snapshot() const {
    return m_cache.snapshot();
}

std::unique_ptr<CachePolicy> make_policy(const PolicyKind& kind,
                                         const RunConfig& config) {
    switch (kind.tag) {
        case PolicyKind::Tag::full:
            return std::make_unique<FullCache>(config.head_dim);
        case PolicyKind::Tag::window:
            return std::make_unique<WindowCache>(config.head_dim, kind.window);
        case PolicyKind::Tag::sink_window:
            return std::make_unique<SinkWindowCache>(config.head_dim, kind.sink,
                                                     kind.window);
        case PolicyKind::Tag::heavy_hitter:
            return std::make_unique<HeavyHitterCache>(
                config.head_dim, kind.hh_budget, kind.window, config.decay);
        case PolicyKind::Tag::zeromerge: {
            RunConfig cache_config = config;
            cache_config.budgets = kind.budgets;
            return std::make_unique<ZeroMergePolicy>(cache_config);
        }
    }
    throw std::invalid_argument("policy: unknown tag");
}

}  // namespace zm
