#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "zeromerge/core.hpp"

namespace zm {

/// One decoding step's (query, key, value) triple.
struct StepRecord {
    Vector q;
    Vector k;
    Vector v;
};

enum class TraceKind : uint8_t {
    gaussian = 0,
    heavy_hitter = 1,
    external = 2,
};

struct Trace {
    int64_t head_dim = 0;
    std::vector<StepRecord> steps;
    uint64_t seed = 0;
    TraceKind kind = TraceKind::external;
};

/// Deterministic cross-platform source: mt19937_64 for bits, Box-Muller
/// for normals, masked rejection for bounded integers. The standard
/// library distributions are implementation-defined and must not be used
/// where golden files depend on the stream.
class Prng {
public:
    explicit Prng(uint64_t seed) : m_engine(seed) {}

    uint64_t bits() { return m_engine(); }

    /// Uniform in [0, 1), 53 random bits.
    double uniform() { return double(m_engine() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller, one spare cached per pair.
    double gaussian();

    /// Uniform integer in [0, n), n >= 1.
    uint64_t below(uint64_t n);

private:
    std::mt19937_64 m_engine;
    double m_spare = 0.0;
    bool m_has_spare = false;
};

/// i.i.d. standard-normal q/k/v components at every step.
Trace gen_gaussian(int64_t steps, int64_t head_dim, uint64_t seed);

/// Gaussian base trace where n_hot early tokens get `gain` added to the
/// first key component and every query after the first hot token gets the
/// same boost, so the hot tokens persistently attract attention mass.
/// gain = 0 leaves the base trace untouched.
Trace gen_heavy_hitter(int64_t steps, int64_t head_dim, int64_t n_hot,
                       double gain, uint64_t seed);

/// Binary trace codec. Layout, all little-endian:
///   magic "KVTR", u32 version = 1, u32 head_dim, u64 step count,
///   u64 seed, u8 kind, then per step 3*head_dim f64 in q, k, v order.
/// Fixed-stride records, so a reader can seek to any step.
void write_trace(const Trace& trace, const std::filesystem::path& path);
Trace read_trace(const std::filesystem::path& path);

}  // namespace zm
