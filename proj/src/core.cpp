#include "zeromerge/core.hpp"

#include <cmath>
#include <stdexcept>

namespace zm {

double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("dot: dimension mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

Budgets make_budgets(int64_t context, int64_t residual, int64_t proximity) {
    if (proximity < 1) {
        throw std::invalid_argument("budgets: proximity must be at least 1");
    }
    if (context < 0) {
        throw std::invalid_argument("budgets: context must be non-negative");
    }
    if (residual < 0) {
        throw std::invalid_argument("budgets: residual must be non-negative");
    }
    return Budgets{context, residual, proximity};
}

void validate_config(const RunConfig& config) {
    if (config.head_dim < 1) {
        throw std::invalid_argument("config: head_dim must be at least 1");
    }
    if (!(config.decay >= 0.0 && config.decay <= 1.0)) {
        throw std::invalid_argument("config: decay must lie in [0, 1]");
    }
    if (!(config.compensation > 0.0 && config.compensation <= 1.0)) {
        throw std::invalid_argument("config: compensation must lie in (0, 1]");
    }
    make_budgets(config.budgets.context, config.budgets.residual,
                 config.budgets.proximity);
}

}  // namespace zm
