#include "gf2mul.hpp"

#include <algorithm>
#include <cstring>

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define QRNG_X86 1
#endif

namespace qrng::detail {
namespace {

// ---------------------------------------------------------------------------
// 64x64 -> 128 carryless multiply, portable fallback (4-bit window)
// ---------------------------------------------------------------------------
inline void clmul_sw(std::uint64_t a, std::uint64_t b, std::uint64_t& lo, std::uint64_t& hi) {
    unsigned __int128 tab[16];
    tab[0] = 0;
    tab[1] = b;
    for (int i = 2; i < 16; i += 2) {
        tab[i] = tab[i / 2] << 1;
        tab[i + 1] = tab[i] ^ b;
    }
    unsigned __int128 r = 0;
    for (int k = 0; k < 64; k += 4) r ^= tab[(a >> k) & 0xF] << k;
    lo = static_cast<std::uint64_t>(r);
    hi = static_cast<std::uint64_t>(r >> 64);
}

// Row kernels: c[0 .. lb] ^= a * b[0 .. lb), one 64-bit coefficient `a`
// against the whole row `b`, with the rolling high-half carry folded in.

void row_acc_sw(std::uint64_t a, const std::uint64_t* b, std::size_t lb, std::uint64_t* c) {
    std::uint64_t carry = 0, lo, hi;
    for (std::size_t j = 0; j < lb; ++j) {
        clmul_sw(a, b[j], lo, hi);
        c[j] ^= lo ^ carry;
        carry = hi;
    }
    c[lb] ^= carry;
}

#if QRNG_X86

__attribute__((target("pclmul,sse2,sse4.1"))) void row_acc_clmul(std::uint64_t a,
                                                                 const std::uint64_t* b,
                                                                 std::size_t lb,
                                                                 std::uint64_t* c) {
    const __m128i va = _mm_cvtsi64_si128(static_cast<long long>(a));
    std::uint64_t carry = 0;
    std::size_t j = 0;
    for (; j + 2 <= lb; j += 2) {
        const __m128i vb = _mm_loadu_si128(reinterpret_cast<const __m128i*>(b + j));
        const __m128i p0 = _mm_clmulepi64_si128(va, vb, 0x00);  // a * b[j]
        const __m128i p1 = _mm_clmulepi64_si128(va, vb, 0x10);  // a * b[j+1]
        // c[j] ^= lo0 ^ carry ; c[j+1] ^= hi0 ^ lo1 ; carry = hi1
        __m128i mix = _mm_xor_si128(p0, _mm_slli_si128(p1, 8));
        mix = _mm_xor_si128(mix, _mm_cvtsi64_si128(static_cast<long long>(carry)));
        const __m128i cc = _mm_loadu_si128(reinterpret_cast<const __m128i*>(c + j));
        _mm_storeu_si128(reinterpret_cast<__m128i*>(c + j), _mm_xor_si128(cc, mix));
        carry = static_cast<std::uint64_t>(_mm_extract_epi64(p1, 1));
    }
    if (j < lb) {
        const __m128i p = _mm_clmulepi64_si128(va, _mm_cvtsi64_si128(static_cast<long long>(b[j])),
                                               0x00);
        c[j] ^= static_cast<std::uint64_t>(_mm_cvtsi128_si64(p)) ^ carry;
        carry = static_cast<std::uint64_t>(_mm_extract_epi64(p, 1));
        ++j;
    }
    c[j] ^= carry;
}

// 8 limb-products per iteration via the 4-lane vector carryless multiply.
__attribute__((target("vpclmulqdq,avx512f,avx512dq,avx512vl,avx512bw,pclmul,sse4.1"))) void
row_acc_vpclmul(std::uint64_t a, const std::uint64_t* b, std::size_t lb, std::uint64_t* c) {
    const __m512i va = _mm512_set1_epi64(static_cast<long long>(a));
    __m512i prev = _mm512_setzero_si512();  // lane 7 feeds the next iteration's low limb
    std::size_t j = 0;
    for (; j + 16 <= lb; j += 16) {
        const __m512i vb0 = _mm512_loadu_si512(b + j);
        const __m512i vb1 = _mm512_loadu_si512(b + j + 8);
        const __m512i pe0 = _mm512_clmulepi64_epi128(va, vb0, 0x00);
        const __m512i po0 = _mm512_clmulepi64_epi128(va, vb0, 0x10);
        const __m512i pe1 = _mm512_clmulepi64_epi128(va, vb1, 0x00);
        const __m512i po1 = _mm512_clmulepi64_epi128(va, vb1, 0x10);
        const __m512i sh0 = _mm512_alignr_epi64(po0, prev, 7);
        const __m512i sh1 = _mm512_alignr_epi64(po1, po0, 7);
        prev = po1;
        const __m512i cc0 = _mm512_loadu_si512(c + j);
        const __m512i cc1 = _mm512_loadu_si512(c + j + 8);
        _mm512_storeu_si512(c + j, _mm512_xor_si512(cc0, _mm512_xor_si512(pe0, sh0)));
        _mm512_storeu_si512(c + j + 8, _mm512_xor_si512(cc1, _mm512_xor_si512(pe1, sh1)));
    }
    for (; j + 8 <= lb; j += 8) {
        const __m512i vb = _mm512_loadu_si512(b + j);
        // even products land on c[j+2t, j+2t+1], odd ones a limb later
        const __m512i pe = _mm512_clmulepi64_epi128(va, vb, 0x00);
        const __m512i po = _mm512_clmulepi64_epi128(va, vb, 0x10);
        const __m512i po_shift = _mm512_alignr_epi64(po, prev, 7);
        prev = po;
        const __m512i cc = _mm512_loadu_si512(c + j);
        _mm512_storeu_si512(c + j,
                            _mm512_xor_si512(cc, _mm512_xor_si512(pe, po_shift)));
    }
    std::uint64_t carry =
        static_cast<std::uint64_t>(_mm_extract_epi64(_mm512_extracti64x2_epi64(prev, 3), 1));
    const __m128i va1 = _mm512_castsi512_si128(va);
    for (; j < lb; ++j) {
        const __m128i p =
            _mm_clmulepi64_si128(va1, _mm_cvtsi64_si128(static_cast<long long>(b[j])), 0x00);
        c[j] ^= static_cast<std::uint64_t>(_mm_cvtsi128_si64(p)) ^ carry;
        carry = static_cast<std::uint64_t>(_mm_extract_epi64(p, 1));
    }
    c[j] ^= carry;
}

__attribute__((target("avx512f"))) void xor2_avx512(std::uint64_t* dst, const std::uint64_t* a,
                                                    const std::uint64_t* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm512_storeu_si512(dst + i,
                            _mm512_xor_si512(_mm512_loadu_si512(a + i), _mm512_loadu_si512(b + i)));
    for (; i < n; ++i) dst[i] = a[i] ^ b[i];
}

__attribute__((target("avx512f"))) void xoracc_avx512(std::uint64_t* dst, const std::uint64_t* src,
                                                      std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm512_storeu_si512(
            dst + i, _mm512_xor_si512(_mm512_loadu_si512(dst + i), _mm512_loadu_si512(src + i)));
    for (; i < n; ++i) dst[i] ^= src[i];
}

__attribute__((target("avx2"))) void xor2_avx2(std::uint64_t* dst, const std::uint64_t* a,
                                               const std::uint64_t* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_si256(
            reinterpret_cast<__m256i*>(dst + i),
            _mm256_xor_si256(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i)),
                             _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i))));
    for (; i < n; ++i) dst[i] = a[i] ^ b[i];
}

__attribute__((target("avx2"))) void xoracc_avx2(std::uint64_t* dst, const std::uint64_t* src,
                                                 std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_si256(
            reinterpret_cast<__m256i*>(dst + i),
            _mm256_xor_si256(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(dst + i)),
                             _mm256_loadu_si256(reinterpret_cast<const __m256i*>(src + i))));
    for (; i < n; ++i) dst[i] ^= src[i];
}

#endif  // QRNG_X86

void xor2_sw(std::uint64_t* dst, const std::uint64_t* a, const std::uint64_t* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] ^ b[i];
}

void xoracc_sw(std::uint64_t* dst, const std::uint64_t* src, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] ^= src[i];
}

using RowFn = void (*)(std::uint64_t, const std::uint64_t*, std::size_t, std::uint64_t*);
using Xor2Fn = void (*)(std::uint64_t*, const std::uint64_t*, const std::uint64_t*, std::size_t);
using XorAccFn = void (*)(std::uint64_t*, const std::uint64_t*, std::size_t);

struct Kernel {
    RowFn row = row_acc_sw;
    std::size_t threshold = 24;  // schoolbook cutoff, in limbs
    bool hw = false;
    Xor2Fn xor2 = xor2_sw;
    XorAccFn xoracc = xoracc_sw;
};

Kernel pick_kernel() noexcept {
    Kernel k;
#if QRNG_X86
    if (__builtin_cpu_supports("vpclmulqdq") && __builtin_cpu_supports("avx512f") &&
        __builtin_cpu_supports("avx512dq") && __builtin_cpu_supports("avx512vl") &&
        __builtin_cpu_supports("avx512bw")) {
        return {row_acc_vpclmul, 96, true, xor2_avx512, xoracc_avx512};
    }
    if (__builtin_cpu_supports("pclmul") && __builtin_cpu_supports("sse4.1")) {
        if (__builtin_cpu_supports("avx2")) return {row_acc_clmul, 32, true, xor2_avx2, xoracc_avx2};
        return {row_acc_clmul, 32, true, xor2_sw, xoracc_sw};
    }
#endif
    return k;
}

const Kernel g_kernel = pick_kernel();

void schoolbook_acc(const std::uint64_t* a, std::size_t la, const std::uint64_t* b, std::size_t lb,
                    std::uint64_t* c) {
    for (std::size_t i = 0; i < la; ++i)
        if (a[i]) g_kernel.row(a[i], b, lb, c + i);
}

// c[0 .. 2L) = a[0 .. L) * b[0 .. L), overwriting c. scratch >= 4*ceil(L/2) per level.
void kara(const std::uint64_t* a, const std::uint64_t* b, std::size_t L, std::uint64_t* c,
          std::uint64_t* scratch) {
    if (L <= g_kernel.threshold) {
        std::memset(c, 0, 2 * L * sizeof(std::uint64_t));
        schoolbook_acc(a, L, b, L, c);
        return;
    }
    const std::size_t h = (L + 1) / 2;    // low halves
    const std::size_t r = L - h;          // high halves, r <= h
    std::uint64_t* t = scratch;           // h limbs: a0 ^ a1
    std::uint64_t* u = scratch + h;       // h limbs: b0 ^ b1
    std::uint64_t* p1 = scratch + 2 * h;  // 2h limbs
    std::uint64_t* next = scratch + 4 * h;

    g_kernel.xor2(t, a, a + h, r);
    g_kernel.xor2(u, b, b + h, r);
    if (h > r) {
        std::memcpy(t + r, a + r, (h - r) * sizeof(std::uint64_t));
        std::memcpy(u + r, b + r, (h - r) * sizeof(std::uint64_t));
    }
    kara(a, b, h, c, next);                  // p0 -> c[0 .. 2h)
    kara(a + h, b + h, r, c + 2 * h, next);  // p2 -> c[2h .. 2L)
    kara(t, u, h, p1, next);

    // middle term: c[h .. 3h) ^= p1 ^ p0 ^ p2
    g_kernel.xoracc(p1, c, 2 * h);
    g_kernel.xoracc(p1, c + 2 * h, 2 * r);
    g_kernel.xoracc(c + h, p1, 2 * h);
}

std::size_t kara_scratch_limbs(std::size_t L) {
    std::size_t s = 0;
    while (L > g_kernel.threshold) {
        const std::size_t h = (L + 1) / 2;
        s += 4 * h;
        L = h;
    }
    return s + 8;
}

}  // namespace

bool has_hardware_clmul() noexcept { return g_kernel.hw; }

void gf2_mul(const std::uint64_t* a, std::size_t la, const std::uint64_t* b, std::size_t lb,
             std::uint64_t* c) {
    std::memset(c, 0, (la + lb) * sizeof(std::uint64_t));
    if (la == 0 || lb == 0) return;
    if (la < lb) {
        std::swap(a, b);
        std::swap(la, lb);
    }
    if (lb <= g_kernel.threshold) {
        schoolbook_acc(a, la, b, lb, c);
        return;
    }
    // Chunk the longer operand into lb-limb pieces; each piece is a balanced
    // Karatsuba product accumulated at its offset.
    std::vector<std::uint64_t> scratch(kara_scratch_limbs(lb));
    std::vector<std::uint64_t> prod(2 * lb);
    std::vector<std::uint64_t> padded(lb);
    for (std::size_t off = 0; off < la; off += lb) {
        const std::size_t len = std::min(lb, la - off);
        const std::uint64_t* chunk = a + off;
        if (len < lb) {
            std::memset(padded.data(), 0, lb * sizeof(std::uint64_t));
            std::memcpy(padded.data(), chunk, len * sizeof(std::uint64_t));
            chunk = padded.data();
        }
        kara(chunk, b, lb, prod.data(), scratch.data());
        const std::size_t take = std::min(2 * lb, la + lb - off);
        g_kernel.xoracc(c + off, prod.data(), take);
    }
}

std::vector<std::uint64_t> gf2_mul(const std::vector<std::uint64_t>& a,
                                   const std::vector<std::uint64_t>& b) {
    std::vector<std::uint64_t> c(a.size() + b.size());
    gf2_mul(a.data(), a.size(), b.data(), b.size(), c.data());
    return c;
}

}  // namespace qrng::detail
