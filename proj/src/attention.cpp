#include "zeromerge/attention.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace zm {

std::vector<double> stable_softmax(std::span<const double> logits) {
    if (logits.empty()) {
        throw std::invalid_argument("softmax: empty input");
    }
    double max_logit = logits[0];
    for (double l : logits) {
        if (!std::isfinite(l)) {
            throw std::invalid_argument("softmax: non-finite logit");
        }
        max_logit = std::max(max_logit, l);
    }
    std::vector<double> weights(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        weights[i] = std::exp(logits[i] - max_logit);
        sum += weights[i];
    }
    for (double& w : weights) {
        w /= sum;
    }
    return weights;
}

AttentionResult full_attention(const Vector& q, std::span<const Vector> keys,
                               std::span<const Vector> values) {
    if (keys.empty()) {
        throw std::invalid_argument("attention: empty cache");
    }
    if (keys.size() != values.size()) {
        throw std::invalid_argument("attention: keys/values length mismatch");
    }
    const std::size_t d = q.size();
    const double sqrt_d = std::sqrt(double(d));

    std::vector<double> logits(keys.size());
    for (std::size_t t = 0; t < keys.size(); ++t) {
        if (keys[t].size() != d || values[t].size() != d) {
            throw std::invalid_argument("attention: dimension mismatch");
        }
        logits[t] = dot(q, keys[t]) / sqrt_d;
    }

    AttentionResult res;
    res.weights = stable_softmax(logits);
    res.output.assign(d, 0.0);
    for (std::size_t t = 0; t < values.size(); ++t) {
        const double w = res.weights[t];
        for (std::size_t j = 0; j < d; ++j) {
            res.output[j] += w * values[t][j];
        }
    }
    return res;
}

AttentionResult compensated_attention(
    const Vector& q, std::span<const std::span<const CacheEntry>> segments,
    double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("attention: alpha must lie in (0, 1]");
    }
    std::size_t total = 0;
    for (const auto& seg : segments) {
        total += seg.size();
    }
    if (total == 0) {
        throw std::invalid_argument("attention: empty cache");
    }
    const std::size_t d = q.size();
    const double sqrt_d = std::sqrt(double(d));

    std::vector<double> logits;
    logits.reserve(total);
    for (const auto& seg : segments) {
        for (const CacheEntry& e : seg) {
            if (e.key.size() != d || e.value.size() != d) {
                throw std::invalid_argument("attention: dimension mismatch");
            }
            if (e.fusion_count < 1) {
                throw std::invalid_argument(
                    "attention: fusion count must be at least 1");
            }
            logits.push_back(dot(q, e.key) / sqrt_d +
                             alpha * std::log(double(e.fusion_count)));
        }
    }

    AttentionResult res;
    res.weights = stable_softmax(logits);
    res.output.assign(d, 0.0);
    std::size_t t = 0;
    for (const auto& seg : segments) {
        for (const CacheEntry& e : seg) {
            const double w = res.weights[t++];
            for (std::size_t j = 0; j < d; ++j) {
                res.output[j] += w * e.value[j];
            }
        }
    }
    return res;
}

AttentionResult compensated_attention(const Vector& q,
                                      std::span<const CacheEntry> entries,
                                      double alpha) {
    const std::array<std::span<const CacheEntry>, 1> segments{entries};
    return compensated_attention(q, segments, alpha);
}

}  // namespace zm
