#pragma once

#include <cstdint>
#include <vector>

namespace zm {

/// One head-dimension worth of real components (a key, value or query).
using Vector = std::vector<double>;

double dot(const Vector& a, const Vector& b);

/// Capacity split of the cache: context (top-scored), residual (merged
/// slots) and proximity (newest tokens).
struct Budgets {
    int64_t context = 0;
    int64_t residual = 0;
    int64_t proximity = 1;

    int64_t total() const { return context + residual + proximity; }
};

/// Validates and builds a budget split. proximity must be >= 1 so the
/// newest token always has a slot; context and residual must be >= 0.
Budgets make_budgets(int64_t context, int64_t residual, int64_t proximity);

/// Element of every cache segment. fusion_count is 1 everywhere except
/// residual slots, which hold the running mean of the tokens merged into
/// them. origin_pos is the position of the first token fused into the slot.
struct CacheEntry {
    Vector key;
    Vector value;
    int64_t fusion_count = 1;
    double score = 0.0;
    int64_t origin_pos = 0;
    uint64_t id = 0;  // insertion counter, stable across segment moves
};

struct RunConfig {
    int64_t head_dim = 1;
    double decay = 0.98;        // momentum on contribution scores
    double compensation = 0.6;  // log-fusion-count bonus strength
    Budgets budgets;
    uint64_t seed = 0;
};

void validate_config(const RunConfig& config);

}  // namespace zm
