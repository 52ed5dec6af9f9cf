#include "zeromerge/scoring.hpp"

#include <cmath>
#include <stdexcept>

namespace zm {

ScoreTracker::ScoreTracker(double decay) : m_decay(decay) {
    if (!(decay >= 0.0 && decay <= 1.0)) {
        throw std::invalid_argument("scores: decay must lie in [0, 1]");
    }
}

void ScoreTracker::track(uint64_t id) {
    auto [it, inserted] = m_scores.emplace(id, 0.0);
    if (!inserted) {
        throw std::invalid_argument("scores: identity already tracked");
    }
}

void ScoreTracker::untrack(uint64_t id) { m_scores.erase(id); }

bool ScoreTracker::tracked(uint64_t id) const {
    return m_scores.find(id) != m_scores.end();
}

double ScoreTracker::score(uint64_t id) const {
    auto it = m_scores.find(id);
    if (it == m_scores.end()) {
        throw std::invalid_argument("scores: unknown entry identity");
    }
    return it->second;
}

void ScoreTracker::update(
    std::span<const std::pair<uint64_t, double>> weights) {
    for (const auto& [id, a] : weights) {
        if (!std::isfinite(a) || a < 0.0) {
            throw std::invalid_argument("scores: weight must be finite and >= 0");
        }
        auto it = m_scores.find(id);
        if (it == m_scores.end()) {
            throw std::invalid_argument("scores: unknown entry identity");
        }
        it->second = m_decay * it->second + a;
    }
}

double closed_form_score(std::span<const double> weight_history, double decay) {
    if (!(decay >= 0.0 && decay <= 1.0)) {
        throw std::invalid_argument("scores: decay must lie in [0, 1]");
    }
    // Evaluated with explicit powers, front to back, so it stays an
    // independent route from the iterated recurrence it checks.
    const std::size_t n = weight_history.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = weight_history[i];
        if (!std::isfinite(a) || a < 0.0) {
            throw std::invalid_argument("scores: weight must be finite and >= 0");
        }
        acc += std::pow(decay, double(n - 1 - i)) * a;
    }
    return acc;
}

}  // namespace zm
