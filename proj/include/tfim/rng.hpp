#pragma once

#include <array>
#include <cstdint>

namespace tfim {

/// Counter-based random generator (Philox-4x32-10). Output depends only on
/// (seed, stream, sweep, draw index), so runs are bit-reproducible and
/// independent streams never overlap.
class CounterRng {
  public:
    CounterRng(std::uint64_t seed = 0, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream) {}

    /// Rebase the counter; draws restart at zero within the new sweep.
    void set_sweep(std::uint64_t sweep) {
        sweep_ = sweep;
        draw_ = 0;
        have_ = 0;
    }

    std::uint32_t next_u32() {
        if (have_ == 0) {
            buf_ = block(draw_++);
            have_ = 4;
        }
        return buf_[--have_];
    }

    std::uint64_t next_u64() {
        const std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    /// Uniform in [0, 1) with 53 significant bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_below(std::uint64_t n) {
        // multiply-shift; bias < 2^-64 is irrelevant at Monte Carlo precision
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }
    std::uint64_t sweep() const { return sweep_; }
    std::uint64_t draw() const { return draw_; }

    /// Restore an exact position in the stream (for checkpoint resume).
    void restore(std::uint64_t sweep, std::uint64_t draw) {
        sweep_ = sweep;
        draw_ = draw;
        have_ = 0;
    }

  private:
    static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                        std::uint32_t& lo) {
        const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
        hi = static_cast<std::uint32_t>(p >> 32);
        lo = static_cast<std::uint32_t>(p);
    }

    std::array<std::uint32_t, 4> block(std::uint64_t draw) const {
        std::uint32_t c0 = static_cast<std::uint32_t>(draw);
        std::uint32_t c1 = static_cast<std::uint32_t>(draw >> 32);
        std::uint32_t c2 = static_cast<std::uint32_t>(sweep_);
        std::uint32_t c3 = static_cast<std::uint32_t>(sweep_ >> 32);
        std::uint32_t k0 = static_cast<std::uint32_t>(seed_) ^
                           static_cast<std::uint32_t>(stream_ >> 32);
        std::uint32_t k1 = static_cast<std::uint32_t>(seed_ >> 32) ^
                           static_cast<std::uint32_t>(stream_);
        for (int round = 0; round < 10; ++round) {
            std::uint32_t hi0, lo0, hi1, lo1;
            mulhilo(0xD2511F53u, c0, hi0, lo0);
            mulhilo(0xCD9E8D57u, c2, hi1, lo1);
            c0 = hi1 ^ c1 ^ k0;
            c1 = lo1;
            c2 = hi0 ^ c3 ^ k1;
            c3 = lo0;
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        return {c0, c1, c2, c3};
    }

    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    std::uint64_t sweep_ = 0;
    std::uint64_t draw_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int have_ = 0;
};

}  // namespace tfim
