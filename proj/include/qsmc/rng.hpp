#pragma once

// Counter-based random number generation (Philox4x32-10) with explicit
// substreams, so that replica i of an ensemble can be simulated on any worker
// in any order and still consume exactly the same random numbers.
//
// Stream layout:
//   key     = (seed_lo32, seed_hi32 XOR purpose)
//   counter = (block_lo32, block_hi32, substream_lo32, substream_hi32)
// Each 128-bit block yields four 32-bit words; consecutive blocks increment
// the 64-bit block index.  The `purpose` tag separates the independent random
// inputs of one replica (path noise, killing threshold, initial state) without
// any coordination between them.
//
// Normal variates use the trigonometric Box-Muller transform rather than
// std::normal_distribution, whose output sequence is implementation-defined;
// bit-level reproducibility of simulations is part of the library contract.

#include <cstdint>
#include <cmath>

#include "common.hpp"

namespace qsmc {

namespace detail {

struct PhiloxBlock {
    uint32_t v[4];
};

// One application of the Philox 4x32 S-P network round function.
inline void philox4x32_round(uint32_t ctr[4], const uint32_t key[2]) {
    const uint64_t p0 = uint64_t{0xD2511F53u} * ctr[0];
    const uint64_t p1 = uint64_t{0xCD9E8D57u} * ctr[2];
    const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
    const uint32_t lo0 = static_cast<uint32_t>(p0);
    const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
    const uint32_t lo1 = static_cast<uint32_t>(p1);
    const uint32_t out0 = hi1 ^ ctr[1] ^ key[0];
    const uint32_t out2 = hi0 ^ ctr[3] ^ key[1];
    ctr[0] = out0;
    ctr[1] = lo1;
    ctr[2] = out2;
    ctr[3] = lo0;
}

// Philox4x32 with 10 rounds (the standard choice).
inline PhiloxBlock philox4x32_10(const uint32_t counter[4], const uint32_t key_in[2]) {
    uint32_t key[2] = {key_in[0], key_in[1]};
    PhiloxBlock out;
    for (int i = 0; i < 4; ++i) out.v[i] = counter[i];
    philox4x32_round(out.v, key);
    for (int r = 1; r < 10; ++r) {
        key[0] += 0x9E3779B9u;  // golden-ratio Weyl constant
        key[1] += 0xBB67AE85u;  // sqrt(3)-1 Weyl constant
        philox4x32_round(out.v, key);
    }
    return out;
}

}  // namespace detail

// Purpose tags keying the statistically independent per-replica streams.
namespace stream_purpose {
constexpr uint32_t path = 0x50415448u;  // diffusion driving noise
constexpr uint32_t kill = 0x4B494C4Cu;  // unit-exponential killing threshold
constexpr uint32_t init = 0x494E4954u;  // initial-state sampling
}  // namespace stream_purpose

class RngStream {
  public:
    explicit RngStream(uint64_t seed, uint64_t substream = 0, uint32_t purpose = 0) noexcept
        : seed_(seed), substream_(substream), purpose_(purpose) {
        key_[0] = static_cast<uint32_t>(seed);
        key_[1] = static_cast<uint32_t>(seed >> 32) ^ purpose;
        base_[0] = static_cast<uint32_t>(substream);
        base_[1] = static_cast<uint32_t>(substream >> 32);
    }

    uint64_t seed() const noexcept { return seed_; }
    uint64_t substream() const noexcept { return substream_; }

    // A fresh stream over the same (seed, substream) under a different
    // purpose tag; its block counter starts at 0 regardless of how much of
    // this stream has been consumed.
    RngStream derived(uint32_t purpose) const noexcept {
        return RngStream(seed_, substream_, purpose);
    }

    uint32_t next_u32() {
        if (word_pos_ == 4) {
            const uint32_t ctr[4] = {static_cast<uint32_t>(block_),
                                     static_cast<uint32_t>(block_ >> 32),
                                     base_[0], base_[1]};
            block_buf_ = detail::philox4x32_10(ctr, key_);
            ++block_;
            word_pos_ = 0;
        }
        return block_buf_.v[word_pos_++];
    }

    uint64_t next_u64() {
        const uint64_t lo = next_u32();
        const uint64_t hi = next_u32();
        return lo | (hi << 32);
    }

    // Uniform on the open interval (0,1): 53 random bits, offset by half a
    // unit in the last place so 0 and 1 are never produced (log-safe).
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
    }

    // Standard normal via Box-Muller; generates pairs, caches the second.
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;  // 2*pi*u2
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    // Exponential with the given rate (mean 1/rate).
    double exponential(double rate = 1.0) {
        if (!(rate > 0.0)) throw contract_violation("exponential: rate must be > 0");
        return -std::log(uniform()) / rate;
    }

  private:
    uint64_t seed_;
    uint64_t substream_;
    uint32_t purpose_;
    uint32_t key_[2];
    uint32_t base_[2];          // substream half of the counter
    uint64_t block_ = 0;        // low half of the counter, incremented per block
    detail::PhiloxBlock block_buf_{};
    int word_pos_ = 4;          // force generation on first use
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace qsmc
