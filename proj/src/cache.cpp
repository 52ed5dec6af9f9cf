#include "zeromerge/cache.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace zm {

std::size_t select_merge_slot(std::span<const CacheEntry> residual,
                              const Vector& key) {
    if (residual.empty()) {
        throw std::invalid_argument("merge: empty residual segment");
    }
    std::size_t best = 0;
    double best_dot = dot(residual[0].key, key);
    for (std::size_t i = 1; i < residual.size(); ++i) {
        const double d = dot(residual[i].key, key);
        if (d > best_dot) {  // strict: ties keep the lowest index
            best = i;
            best_dot = d;
        }
    }
    return best;
}

void merge_into_slot(CacheEntry& slot, const Vector& key, const Vector& value) {
    if (slot.fusion_count < 1) {
        throw std::invalid_argument("merge: fusion count must be at least 1");
    }
    if (key.size() != slot.key.size() || value.size() != slot.value.size()) {
        throw std::invalid_argument("merge: dimension mismatch");
    }
    const double w = double(slot.fusion_count);
    for (std::size_t j = 0; j < key.size(); ++j) {
        slot.key[j] = (w * slot.key[j] + key[j]) / (w + 1.0);
        slot.value[j] = (w * slot.value[j] + value[j]) / (w + 1.0);
    }
    slot.fusion_count += 1;
}

ZeroMergeCache::ZeroMergeCache(const RunConfig& config)
    : m_config(config), m_tracker(config.decay) {
    validate_config(config);
}

void ZeroMergeCache::append(CacheEntry entry) {
    if (int64_t(entry.key.size()) != m_config.head_dim ||
        int64_t(entry.value.size()) != m_config.head_dim) {
        throw std::invalid_argument("cache: dimension mismatch");
    }
    if (entry.fusion_count != 1) {
        throw std::invalid_argument("cache: ingested entries must be unfused");
    }
    entry.id = m_next_id++;
    entry.score = 0.0;
    m_tracker.track(entry.id);
    m_merge_log[entry.id] = {entry.origin_pos};
    m_proximity.push_back(std::move(entry));
}

void ZeroMergeCache::overflow_cascade() {
    if (int64_t(m_proximity.size()) <= m_config.budgets.proximity) {
        return;
    }
    // Oldest proximity token graduates into the context segment.
    CacheEntry old = std::move(m_proximity.front());
    m_proximity.erase(m_proximity.begin());
    m_context.push_back(std::move(old));

    if (int64_t(m_context.size()) <= m_config.budgets.context) {
        return;
    }
    // Context overflow: evict the lowest-score entry. Context is ordered by
    // insertion, so a strict comparison breaks ties toward the lowest id.
    std::size_t victim = 0;
    double victim_score = m_tracker.score(m_context[0].id);
    for (std::size_t i = 1; i < m_context.size(); ++i) {
        const double s = m_tracker.score(m_context[i].id);
        if (s < victim_score) {
            victim = i;
            victim_score = s;
        }
    }
    CacheEntry evicted = std::move(m_context[victim]);
    m_context.erase(m_context.begin() + victim);
    m_tracker.untrack(evicted.id);  // residual slots are never score-ranked
    evicted.score = 0.0;

    if (int64_t(m_residual.size()) < m_config.budgets.residual) {
        m_residual.push_back(std::move(evicted));
        return;
    }
    if (m_config.budgets.residual > 0) {
        const std::size_t slot = select_merge_slot(m_residual, evicted.key);
        merge_into_slot(m_residual[slot], evicted.key, evicted.value);
        auto& log = m_merge_log[m_residual[slot].id];
        log.push_back(evicted.origin_pos);
    }
    // With no residual budget the evictee is simply dropped.
    m_merge_log.erase(evicted.id);
}

void ZeroMergeCache::ingest_cascade(CacheEntry entry) {
    append(std::move(entry));
    overflow_cascade();
}

StepDetail ZeroMergeCache::step_detailed(const Vector& q, const Vector& k,
                                         const Vector& v) {
    if (int64_t(q.size()) != m_config.head_dim) {
        throw std::invalid_argument("cache: dimension mismatch");
    }
    CacheEntry entry;
    entry.key = k;
    entry.value = v;
    entry.origin_pos = m_steps;
    append(std::move(entry));
    m_steps += 1;

    const std::array<std::span<const CacheEntry>, 3> segments{
        std::span<const CacheEntry>(m_context),
        std::span<const CacheEntry>(m_residual),
        std::span<const CacheEntry>(m_proximity)};

    StepDetail detail;
    detail.attention = compensated_attention(q, segments, m_config.compensation);

    detail.origin_pos.reserve(size());
    detail.fusion_count.reserve(size());
    for (const auto& seg : segments) {
        for (const CacheEntry& e : seg) {
            detail.origin_pos.push_back(e.origin_pos);
            detail.fusion_count.push_back(e.fusion_count);
        }
    }

    // Fold this step's weights into the contribution scores. Residual slots
    // are skipped: overflow there is handled by merging, never by ranking.
    m_weight_scratch.clear();
    std::size_t t = 0;
    for (CacheEntry& e : m_context) {
        m_weight_scratch.emplace_back(e.id, detail.attention.weights[t++]);
    }
    t += m_residual.size();
    for (CacheEntry& e : m_proximity) {
        m_weight_scratch.emplace_back(e.id, detail.attention.weights[t++]);
    }
    m_tracker.update(m_weight_scratch);
    for (CacheEntry& e : m_context) {
        e.score = m_tracker.score(e.id);
    }
    for (CacheEntry& e : m_proximity) {
        e.score = m_tracker.score(e.id);
    }

    overflow_cascade();
    return detail;
}

AttentionResult ZeroMergeCache::step(const Vector& q, const Vector& k,
                                     const Vector& v) {
    return std::move(step_detailed(q, k, v).attention);
}

std::vector<CacheEntry> ZeroMergeCache::snapshot() const {
    std::vector<CacheEntry> out;
    out.reserve(size());
    for (const CacheEntry& e : m_context) {
        if (e.fusion_count != 1) {
            throw std::logic_error("cache: fused entry outside residual");
        }
        out.push_back(e);
        out.back().score = m_tracker.score(e.id);
    }
    for (const CacheEntry& e : m_residual) {
        out.push_back(e);
        out.back().score = 0.0;
    }
    for (const CacheEntry& e : m_proximity) {
        if (e.fusion_count != 1) {
            throw std::logic_error("cache: fused entry outside residual");
        }
        out.push_back(e);
        out.back().score = m_tracker.score(e.id);
    }
    return out;
}

std::array<std::size_t, 3> ZeroMergeCache::segment_sizes() const {
    return {m_context.size(), m_residual.size(), m_proximity.size()};
}

std::size_t ZeroMergeCache::size() const {
    return m_context.size() + m_residual.size() + m_proximity.size();
}

const std::vector<int64_t>& ZeroMergeCache::merge_log(uint64_t id) const {
    auto it = m_merge_log.find(id);
    if (it == m_merge_log.end()) {
        throw std::invalid_argument("cache: unknown entry identity");
    }
    return it->second;
}

std::vector<ZeroMergeCache> make_head_caches(const RunConfig& config,
                                             std::span<const Budgets> per_head) {
    std::vector<ZeroMergeCache> heads;
    heads.reserve(per_head.size());
    for (const Budgets& b : per_head) {
        RunConfig head_config = config;
        head_config.budgets = b;
        heads.emplace_back(head_config);
    }
    return heads;
}

std::vector<ZeroMergeCache> make_head_caches(const RunConfig& config,
                                             std::size_t heads) {
    const std::vector<Budgets> per_head(heads, config.budgets);
    return make_head_caches(config, per_head);
}

}  // namespace zm
