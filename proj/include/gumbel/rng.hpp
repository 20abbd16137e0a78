#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace gumbel {

// Philox4x64-10 counter-based generator. Each (seed, stream) pair keys an
// independent sequence, so replicate i of a campaign can draw from stream i
// without any coordination between threads. Matches numpy.random.Philox with
// key = [seed, stream]: the counter advances before each block is encrypted.
class Philox4x64 {
  public:
    Philox4x64(std::uint64_t seed, std::uint64_t stream)
        : key_{seed, stream}, counter_{0, 0, 0, 0} {}

    std::array<std::uint64_t, 4> next_block() {
        increment_counter();  // numpy advances before encrypting
        std::array<std::uint64_t, 4> x = counter_;
        std::uint64_t k0 = key_[0];
        std::uint64_t k1 = key_[1];
        for (int round = 0; round < 10; ++round) {
            x = round_once(x, k0, k1);
            k0 += kWeyl0;
            k1 += kWeyl1;
        }
        return x;
    }

  private:
    static constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
    static constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
    static constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
    static constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

    static void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                        std::uint64_t& lo) {
        unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
        hi = static_cast<std::uint64_t>(p >> 64);
        lo = static_cast<std::uint64_t>(p);
    }

    static std::array<std::uint64_t, 4> round_once(
        const std::array<std::uint64_t, 4>& x, std::uint64_t k0, std::uint64_t k1) {
        std::uint64_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, x[0], hi0, lo0);
        mulhilo(kMul1, x[2], hi1, lo1);
        return {hi1 ^ x[1] ^ k0, lo1, hi0 ^ x[3] ^ k1, lo0};
    }

    void increment_counter() {
        for (int w = 0; w < 4; ++w) {
            if (++counter_[w] != 0) break;
        }
    }

    std::array<std::uint64_t, 2> key_;
    std::array<std::uint64_t, 4> counter_;
};

// Buffered stream of uniforms over one Philox key.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream)
        : gen_(seed, stream), pos_(4) {}

    std::uint64_t next_u64() {
        if (pos_ == 4) {
            buffer_ = gen_.next_block();
            pos_ = 0;
        }
        return buffer_[pos_++];
    }

    // Uniform double in [0, 1) with 53 random bits, numpy's convention.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  private:
    Philox4x64 gen_;
    std::array<std::uint64_t, 4> buffer_{};
    int pos_;
};

// Cumulative table for sampling a discrete distribution by binary search.
class CumTable {
  public:
    explicit CumTable(const std::vector<double>& probs) : cum_(probs.size()) {
        double run = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            run += probs[i];
            cum_[i] = run;
        }
        if (!cum_.empty()) cum_.back() = 1.0;  // absorb rounding in the last atom
    }

    CumTable() = default;

    int sample(double u) const {
        int lo = 0, hi = static_cast<int>(cum_.size()) - 1;
        while (lo < hi) {
            int mid = (lo + hi) / 2;
            if (cum_[mid] > u)
                hi = mid;
            else
                lo = mid + 1;
        }
        return lo;
    }

    int sample(RngStream& rng) const { return sample(rng.uniform()); }

    std::size_t size() const { return cum_.size(); }

  private:
    std::vector<double> cum_;
};

}  // namespace gumbel
