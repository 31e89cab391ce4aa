#include "qrng/rng.hpp"

#include <cctype>
#include <stdexcept>
#include <string>

namespace qrng {

std::uint64_t derive_seed(const MasterSeed& master, std::string_view tag) noexcept {
    std::uint64_t h = 0x6A09E667F3BCC908ull;  // sqrt(2) fraction
    for (std::uint64_t w : master.words) h = splitmix64(h ^ w);
    for (unsigned char c : tag) h = splitmix64(h ^ c);
    return h;
}

MasterSeed parse_master_seed(std::string_view hex) {
    if (hex.size() != 64)
        throw std::invalid_argument("master seed must be exactly 64 hex digits (256 bits), got " +
                                    std::to_string(hex.size()));
    MasterSeed out;
    for (int w = 0; w < 4; ++w) {
        std::uint64_t v = 0;
        for (int i = 0; i < 16; ++i) {
            const char c = hex[static_cast<std::size_t>(w) * 16 + i];
            std::uint64_t d;
            if (c >= '0' && c <= '9') d = static_cast<std::uint64_t>(c - '0');
            else if (c >= 'a' && c <= 'f') d = static_cast<std::uint64_t>(c - 'a' + 10);
            else if (c >= 'A' && c <= 'F') d = static_cast<std::uint64_t>(c - 'A' + 10);
            else throw std::invalid_argument("master seed contains a non-hex character");
            v = (v << 4) | d;
        }
        out.words[static_cast<std::size_t>(w)] = v;
    }
    return out;
}

std::uint64_t seed_fingerprint(const MasterSeed& master) noexcept {
    return derive_seed(master, "fingerprint");
}

}  // namespace qrng
