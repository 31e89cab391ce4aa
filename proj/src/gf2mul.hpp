#pragma once

// Carryless (GF(2)[z]) polynomial multiplication over 64-bit limbs.
// Bit order matches BitStream: bit i of the polynomial is limb i/64,
// position i%64. Hardware PCLMULQDQ when available, 4-bit windowed
// software multiply otherwise; both paths are exact.

#include <cstddef>
#include <cstdint>
#include <vector>

namespace qrng::detail {

bool has_hardware_clmul() noexcept;

// c[0 .. la+lb) = a[0 .. la) * b[0 .. lb). c must not alias a or b.
// Karatsuba above a small schoolbook threshold; the longer operand is
// processed in chunks of the shorter one's length.
void gf2_mul(const std::uint64_t* a, std::size_t la, const std::uint64_t* b, std::size_t lb,
             std::uint64_t* c);

// Convenience wrapper returning la+lb limbs.
std::vector<std::uint64_t> gf2_mul(const std::vector<std::uint64_t>& a,
                                   const std::vector<std::uint64_t>& b);

}  // namespace qrng::detail
