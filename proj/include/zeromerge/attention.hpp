#pragma once

#include <span>

#include "zeromerge/core.hpp"

namespace zm {

struct AttentionResult {
    std::vector<double> weights;  // one per cache entry, sums to 1
    Vector output;
};

/// Max-subtracted softmax. Rejects empty and non-finite input.
std::vector<double> stable_softmax(std::span<const double> logits);

/// Exact scaled dot-product attention over an uncompressed cache:
/// weights = softmax(q.k_t / sqrt(d)), output = sum weights_t * v_t.
AttentionResult full_attention(const Vector& q, std::span<const Vector> keys,
                               std::span<const Vector> values);

/// Fusion-compensated attention: each entry's logit gets an
/// alpha * ln(fusion_count) bonus so merged slots keep the attention mass
/// of the tokens folded into them. alpha must lie in (0, 1].
AttentionResult compensated_attention(const Vector& q,
                                      std::span<const CacheEntry> entries,
                                      double alpha);

/// Same kernel over several entry segments, treated as one concatenated
/// cache (left to right). The single-span overload delegates here, so the
/// arithmetic is identical either way.
AttentionResult compensated_attention(
    const Vector& q, std::span<const std::span<const CacheEntry>> segments,
    double alpha);

}  // namespace zm
