#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <utility>

namespace zm {

/// Online contribution scores: s <- decay * s + a each step, where a is the
/// attention weight the entry received. Entries are identified by the
/// insertion counter assigned by the owning cache, so identity survives
/// segment migration.
class ScoreTracker {
public:
    explicit ScoreTracker(double decay);

    /// Registers an entry with prior score 0. Re-registering is an error.
    void track(uint64_t id);
    void untrack(uint64_t id);
    bool tracked(uint64_t id) const;

    /// Score of a tracked entry; throws on unknown identity.
    double score(uint64_t id) const;

    /// Applies s <- decay * s + a for every (id, a) pair. Weights must be
    /// finite and non-negative and every id must be tracked.
    void update(std::span<const std::pair<uint64_t, double>> weights);

    double decay() const { return m_decay; }
    std::size_t size() const { return m_scores.size(); }

private:
    double m_decay;
    std::unordered_map<uint64_t, double> m_scores;
};

/// Unrolled form of the recurrence: sum_t decay^(n-1-t) * history[t].
/// Serves as the independent oracle for ScoreTracker::update.
double closed_form_score(std::span<const double> weight_history, double decay);

}  // namespace zm
