#include "zeromerge/workload.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace zm {

double Prng::gaussian() {
    if (m_has_spare) {
        m_has_spare = false;
        return m_spare;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    m_spare = r * std::sin(a);
    m_has_spare = true;
    return r * std::cos(a);
}

uint64_t Prng::below(uint64_t n) {
    if (n == 0) {
        throw std::invalid_argument("prng: bound must be at least 1");
    }
    const uint64_t mask = std::bit_ceil(n) - 1;
    for (;;) {
        const uint64_t r = m_engine() & mask;
        if (r < n) {
            return r;
        }
    }
}

namespace {

void check_gen_args(int64_t steps, int64_t head_dim) {
    if (steps < 1) {
        throw std::invalid_argument("workload: steps must be at least 1");
    }
    if (head_dim < 1) {
        throw std::invalid_argument("workload: head_dim must be at least 1");
    }
}

void fill_gaussian(Vector& v, int64_t head_dim, Prng& rng) {
    v.resize(std::size_t(head_dim));
    for (double& x : v) {
        x = rng.gaussian();
    }
}

Trace gen_base(int64_t steps, int64_t head_dim, uint64_t seed, TraceKind kind,
               Prng& rng) {
    Trace trace;
    trace.head_dim = head_dim;
    trace.seed = seed;
    trace.kind = kind;
    trace.steps.resize(std::size_t(steps));
    for (StepRecord& rec : trace.steps) {
        fill_gaussian(rec.q, head_dim, rng);
        fill_gaussian(rec.k, head_dim, rng);
        fill_gaussian(rec.v, head_dim, rng);
    }
    return trace;
}

}  // namespace

Trace gen_gaussian(int64_t steps, int64_t head_dim, uint64_t seed) {
    check_gen_args(steps, head_dim);
    Prng rng(seed);
    return gen_base(steps, head_dim, seed, TraceKind::gaussian, rng);
}

Trace gen_heavy_hitter(int64_t steps, int64_t head_dim, int64_t n_hot,
                       double gain, uint64_t seed) {
    check_gen_args(steps, head_dim);
    if (n_hot < 0 || n_hot > steps) {
        throw std::invalid_argument("workload: n_hot must lie in [0, steps]");
    }
    if (!(gain >= 0.0)) {
        throw std::invalid_argument("workload: gain must be non-negative");
    }
    // The base follows the exact gen_gaussian stream for this seed; the hot
    // structure is layered on top afterwards.
    Prng rng(seed);
    Trace trace = gen_base(steps, head_dim, seed, TraceKind::heavy_hitter, rng);
    if (n_hot == 0) {
        return trace;
    }

    // Hot tokens sit in the early part of the trace: the first quarter, or
    // just enough positions to fit n_hot.
    const int64_t early = std::min(steps, std::max(n_hot, (steps + 3) / 4));
    std::vector<int64_t> pool(static_cast<std::size_t>(early));
    std::iota(pool.begin(), pool.end(), int64_t{0});
    for (int64_t i = 0; i < n_hot; ++i) {
        const auto j = std::size_t(i) + rng.below(uint64_t(early - i));
        std::swap(pool[std::size_t(i)], pool[j]);
    }
    std::vector<int64_t> hot(pool.begin(), pool.begin() + n_hot);
    std::sort(hot.begin(), hot.end());

    // Hot keys lean along the first axis; every later query leans the same
    // way, so the hot tokens keep pulling attention mass.
    for (int64_t p : hot) {
        trace.steps[std::size_t(p)].k[0] += gain;
    }
    for (std::size_t t = std::size_t(hot.front()) + 1; t < trace.steps.size();
         ++t) {
        trace.steps[t].q[0] += gain;
    }
    return trace;
}

namespace {

constexpr char trace_magic[4] = {'K', 'V', 'T', 'R'};
constexpr uint32_t trace_version = 1;
constexpr std::size_t header_bytes = 4 + 4 + 4 + 8 + 8 + 1;

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(char(uint8_t(v >> (8 * i))));
    }
}

void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(char(uint8_t(v >> (8 * i))));
    }
}

void put_f64(std::string& out, double x) {
    put_u64(out, std::bit_cast<uint64_t>(x));
}

uint32_t get_u32(const char* p) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= uint32_t(uint8_t(p[i])) << (8 * i);
    }
    return v;
}

uint64_t get_u64(const char* p) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= uint64_t(uint8_t(p[i])) << (8 * i);
    }
    return v;
}

double get_f64(const char* p) { return std::bit_cast<double>(get_u64(p)); }

}  // namespace

void write_trace(const Trace& trace, const std::filesystem::path& path) {
    if (trace.head_dim < 1) {
        throw std::invalid_argument("trace: head_dim must be at least 1");
    }
    const auto d = std::size_t(trace.head_dim);
    std::string buf;
    buf.reserve(header_bytes + trace.steps.size() * 3 * d * 8);
    buf.append(trace_magic, 4);
    put_u32(buf, trace_version);
    put_u32(buf, uint32_t(trace.head_dim));
    put_u64(buf, uint64_t(trace.steps.size()));
    put_u64(buf, trace.seed);
    buf.push_back(char(uint8_t(trace.kind)));
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        const StepRecord& rec = trace.steps[i];
        if (rec.q.size() != d || rec.k.size() != d || rec.v.size() != d) {
            throw std::invalid_argument("trace: dimension mismatch at record " +
                                        std::to_string(i));
        }
        for (double x : rec.q) put_f64(buf, x);
        for (double x : rec.k) put_f64(buf, x);
        for (double x : rec.v) put_f64(buf, x);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("trace: cannot open " + path.string() +
                                 " for writing");
    }
    out.write(buf.data(), std::streamsize(buf.size()));
    out.flush();
    if (!out) {
        throw std::runtime_error("trace: write failed for " + path.string());
    }
}

Trace read_trace(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("trace: cannot open " + path.string());
    }
    std::string buf((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
    if (buf.size() < header_bytes) {
        throw std::runtime_error("trace: malformed header (file too short)");
    }
    if (std::memcmp(buf.data(), trace_magic, 4) != 0) {
        throw std::runtime_error("trace: malformed header (bad magic)");
    }
    const uint32_t version = get_u32(buf.data() + 4);
    if (version != trace_version) {
        throw std::runtime_error("trace: unsupported version " +
                                 std::to_string(version));
    }
    const uint32_t head_dim = get_u32(buf.data() + 8);
    if (head_dim < 1) {
        throw std::runtime_error("trace: malformed header (head_dim 0)");
    }
    const uint64_t count = get_u64(buf.data() + 12);
    const uint64_t seed = get_u64(buf.data() + 20);
    const uint8_t kind = uint8_t(buf[28]);
    if (kind > uint8_t(TraceKind::external)) {
        throw std::runtime_error("trace: unknown generator tag " +
                                 std::to_string(int(kind)));
    }

    const std::size_t record_bytes = std::size_t(3) * head_dim * 8;
    const std::size_t payload = buf.size() - header_bytes;
    if (payload < count * record_bytes) {
        const std::size_t whole = payload / record_bytes;
        throw std::runtime_error("trace: truncated at record " +
                                 std::to_string(whole) + " of " +
                                 std::to_string(count));
    }
    if (payload > count * record_bytes) {
        throw std::runtime_error("trace: trailing data after " +
                                 std::to_string(count) + " records");
    }

    Trace trace;
    trace.head_dim = int64_t(head_dim);
    trace.seed = seed;
    trace.kind = TraceKind(kind);
    trace.steps.resize(count);
    const char* p = buf.data() + header_bytes;
    for (StepRecord& rec : trace.steps) {
        rec.q.resize(head_dim);
        rec.k.resize(head_dim);
        rec.v.resize(head_dim);
        for (double& x : rec.q) { x = get_f64(p); p += 8; }
        for (double& x : rec.k) { x = get_f64(p); p += 8; }
        for (double& x : rec.v) { x = get_f64(p); p += 8; }
    }
    return trace;
}

}  // namespace zm
