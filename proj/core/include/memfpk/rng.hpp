#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace memfpk::rng {

/// Philox4x32-10 counter-based generator. A (key, counter) pair maps to four
/// 32-bit words; distinct counters give independent outputs, so per-path
/// substreams are just disjoint counter ranges. Bit-reproducible everywhere.
struct Philox4x32 {
    std::array<std::uint32_t, 2> key;

    static constexpr std::uint32_t M0 = 0xD2511F53u;
    static constexpr std::uint32_t M1 = 0xCD9E8D57u;
    static constexpr std::uint32_t W0 = 0x9E3779B9u;
    static constexpr std::uint32_t W1 = 0xBB67AE85u;

    static std::array<std::uint32_t, 4> round(std::array<std::uint32_t, 4> c,
                                              std::array<std::uint32_t, 2> k) {
        const std::uint64_t p0 = std::uint64_t(M0) * c[0];
        const std::uint64_t p1 = std::uint64_t(M1) * c[2];
        return {std::uint32_t(p1 >> 32) ^ c[1] ^ k[0], std::uint32_t(p1),
                std::uint32_t(p0 >> 32) ^ c[3] ^ k[1], std::uint32_t(p0)};
    }

    std::array<std::uint32_t, 4> operator()(std::array<std::uint32_t, 4> ctr) const {
        auto k = key;
        for (int r = 0; r < 10; ++r) {
            ctr = round(ctr, k);
            k[0] += W0;
            k[1] += W1;
        }
        return ctr;
    }
};

/// Stream domains keep draws for different purposes non-overlapping.
enum class Domain : std::uint32_t { fgn = 0, gwn = 1, init = 2, generic = 3 };

/// Deterministic stream of N(0,1) draws for one (seed, domain, stream) triple.
/// Draw i is a pure function of the triple and i, so any number of streams can
/// be consumed concurrently.
class NormalStream {
  public:
    NormalStream(std::uint64_t seed, Domain domain, std::uint64_t stream)
        : philox_{{std::uint32_t(seed), std::uint32_t(seed >> 32)}},
          hi_(std::uint32_t(stream >> 32)), lo_(std::uint32_t(stream)),
          domain_(std::uint32_t(domain)) {}

    /// i-th normal of the stream (random access).
    double normal(std::uint64_t i) const {
        const std::uint64_t block = i >> 1;
        const auto w = philox_({std::uint32_t(block), std::uint32_t(block >> 32), lo_,
                                hi_ ^ (domain_ << 30)});
        const double u1 = to_unit(w[0], w[1]);
        const double u2 = to_unit(w[2], w[3]);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        return (i & 1) ? r * std::sin(a) : r * std::cos(a);
    }

  private:
    // uniform on (0,1): 53 mantissa bits, offset keeps log() finite
    static double to_unit(std::uint32_t a, std::uint32_t b) {
        const std::uint64_t x = (std::uint64_t(a) << 32) | b;
        return double(x >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    Philox4x32 philox_;
    std::uint32_t hi_, lo_, domain_;
};

} // namespace memfpk::rng
