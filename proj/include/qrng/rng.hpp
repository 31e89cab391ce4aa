#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace qrng {

/// Counter-based PRNG: Philox4x32-10 (Salmon et al., "Parallel random
/// numbers: as easy as 1, 2, 3", SC'11).
///
/// Output is a pure function of (key, counter), so identical seeds produce
/// identical streams on every platform, and disjoint counter ranges give
/// independent streams. The 64-bit seed forms the key; `stream` selects an
/// independent substream by occupying the high counter words.
class Philox {
public:
    explicit Philox(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          ctr_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

    std::uint32_t next_u32() noexcept {
        if (idx_ == 4) refill();
        return buf_[idx_++];
    }

    std::uint64_t next_u64() noexcept {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return lo | (hi << 32);
    }

    /// Uniform double in the open interval (0, 1): 53-bit mantissa, offset
    /// by half an ulp so 0 and 1 are never returned.
    double next_double() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
    }

    /// Standard normal deviate via Box-Muller; the paired value is cached.
    double next_gaussian() noexcept {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_double();
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Jump to an absolute 64-bit block position within this stream (one
    /// block = 4 u32 outputs). Discards buffered output.
    void seek_block(std::uint64_t block) noexcept {
        ctr_[0] = static_cast<std::uint32_t>(block);
        ctr_[1] = static_cast<std::uint32_t>(block >> 32);
        idx_ = 4;
        have_spare_ = false;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;  // golden ratio
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;  // sqrt(3) - 1

    void refill() noexcept {
        std::uint32_t x0 = ctr_[0], x1 = ctr_[1], x2 = ctr_[2], x3 = ctr_[3];
        std::uint32_t k0 = key_[0], k1 = key_[1];
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * x0;
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * x2;
            const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            x0 = hi1 ^ x1 ^ k0;
            x1 = lo1;
            x2 = hi0 ^ x3 ^ k1;
            x3 = lo0;
            k0 += kWeyl0;
            k1 += kWeyl1;
        }
        buf_[0] = x0;
        buf_[1] = x1;
        buf_[2] = x2;
        buf_[3] = x3;
        idx_ = 0;
        if (++ctr_[0] == 0) ++ctr_[1];  // 64-bit block counter within the stream
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> ctr_;
    std::array<std::uint32_t, 4> buf_{};
    int idx_ = 4;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// 256-bit master seed (four 64-bit words, little-endian order as parsed
/// from a 64-hex-digit string).
struct MasterSeed {
    std::array<std::uint64_t, 4> words{};
};

/// SplitMix64 finalizer (Steele et al., "Fast splittable pseudorandom
/// number generators"). Used only for seed derivation, not for streams.
inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Derives a 64-bit subsystem seed from the master seed and a purpose tag.
/// The derivation is a SplitMix64 fold over the seed words and the tag
/// bytes; distinct tags give independent generator keys.
std::uint64_t derive_seed(const MasterSeed& master, std::string_view tag) noexcept;

/// Parses exactly 64 hex digits into a MasterSeed. Throws std::invalid_argument.
MasterSeed parse_master_seed(std::string_view hex);

/// 64-bit fingerprint of a master seed (for artifact metadata).
std::uint64_t seed_fingerprint(const MasterSeed& master) noexcept;

}  // namespace qrng
