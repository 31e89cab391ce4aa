#include "qrng/extractor.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <future>
#include <stdexcept>
#include <thread>

#include "gf2mul.hpp"

namespace qrng {

namespace {

std::size_t env_thread_cap() {
    const char* v = std::getenv("QRNG_THREADS");
    if (!v) return std::max(1u, std::thread::hardware_concurrency());
    const long n = std::strtol(v, nullptr, 10);
    return n > 0 ? static_cast<std::size_t>(n) : 1;
}

// bits [first, first+count) of the limb array, as a BitStream
BitStream bits_from_limbs(const std::uint64_t* limbs, std::size_t first, std::size_t count) {
    BitStream out(count);
    auto dst = out.words();
    const std::size_t shift = first & 63;
    const std::size_t w0 = first >> 6;
    const std::size_t nw = dst.size();
    for (std::size_t k = 0; k < nw; ++k) {
        std::uint64_t v = limbs[w0 + k] >> shift;
        if (shift) v |= limbs[w0 + k + 1] << (64 - shift);
        dst[k] = v;
    }
    if (count & 63) dst[nw - 1] &= (~std::uint64_t{0}) >> (64 - (count & 63));
    return out;
}

}  // namespace

void ToeplitzSpec::validate() const {
    if (m == 0 || n == 0 || m > n)
        throw std::invalid_argument("Toeplitz dimensions require 1 <= m <= n");
    if (seed.size() != n + m - 1)
        throw std::invalid_argument("Toeplitz seed must have exactly n + m - 1 bits");
}

void ExtractionPolicy::validate() const {
    if (!(hmin_per_bit > 0.0) || hmin_per_bit > 1.0)
        throw std::invalid_argument("hmin_per_bit must lie in (0, 1]");
    if (!(epsilon > 0.0) || epsilon > 1.0)
        throw std::invalid_argument("epsilon must lie in (0, 1]");
    if (block_n == 0) throw std::invalid_argument("block_n must be positive");
}

BitStream toeplitz_extract(const ToeplitzSpec& spec, const BitStream& input) {
    spec.validate();
    if (input.size() != spec.n)
        throw std::invalid_argument("input length does not match Toeplitz n");
    // y_i = sum_j seed[n-1+i-j] x_j = coefficient (n-1+i) of seed(z)*x(z)
    const auto sw = spec.seed.words();
    const auto xw = input.words();
    // one spare limb so the shifted read in bits_from_limbs never runs off the end
    std::vector<std::uint64_t> prod(sw.size() + xw.size() + 1, 0);
    detail::gf2_mul(sw.data(), sw.size(), xw.data(), xw.size(), prod.data());
    return bits_from_limbs(prod.data(), spec.n - 1, spec.m);
}

BitStream toeplitz_extract_naive(const ToeplitzSpec& spec, const BitStream& input) {
    spec.validate();
    if (input.size() != spec.n)
        throw std::invalid_argument("input length does not match Toeplitz n");
    BitStream out(spec.m);
    for (std::size_t i = 0; i < spec.m; ++i) {
        unsigned acc = 0;
        for (std::size_t j = 0; j < spec.n; ++j)
            acc ^= static_cast<unsigned>(spec.seed.get(i + spec.n - 1 - j) & input.get(j));
        out.set(i, acc != 0);
    }
    return out;
}

std::size_t output_length(std::size_t n, const ExtractionPolicy& policy) {
    policy.validate();
    if (n == 0) throw std::invalid_argument("n must be positive");
    const long double budget = static_cast<long double>(n) * policy.hmin_per_bit -
                               2.0L * std::log2(1.0L / static_cast<long double>(policy.epsilon));
    if (budget < 1.0L)
        throw std::runtime_error("insufficient entropy budget: n*hmin - 2*log2(1/eps) < 1");
    return static_cast<std::size_t>(std::floor(budget));
}

BitStream expand_toeplitz_seed(const MasterSeed& master, std::size_t n, std::size_t m) {
    const std::size_t len = n + m - 1;
    BitStream seed(len);
    Philox rng(derive_seed(master, "toeplitz-seed"));
    auto w = seed.words();
    for (auto& word : w) word = rng.next_u64();
    if (len & 63) w[w.size() - 1] &= (~std::uint64_t{0}) >> (64 - (len & 63));
    return seed;
}

ToeplitzSpec make_spec(const MasterSeed& master, std::size_t n, std::size_t m) {
    ToeplitzSpec spec{n, m, expand_toeplitz_seed(master, n, m)};
    spec.validate();
    return spec;
}

BitStream extract_stream(const ToeplitzSpec& spec, const BitStream& input, TailPolicy tail) {
    spec.validate();
    const std::size_t blocks = input.size() / spec.n;
    const std::size_t rem = input.size() % spec.n;
    if (rem != 0 && tail == TailPolicy::reject)
        throw std::runtime_error("input is not a whole number of blocks (" +
                                 std::to_string(rem) + " trailing bits)");
    BitStream out;
    if (blocks == 0) return out;

    const std::size_t threads = std::min(env_thread_cap(), blocks);
    if (threads <= 1) {
        for (std::size_t b = 0; b < blocks; ++b)
            out.append(toeplitz_extract(spec, input.slice(b * spec.n, spec.n)));
        return out;
    }
    std::vector<BitStream> results(blocks);
    std::vector<std::future<void>> workers;
    workers.reserve(threads);
    std::atomic<std::size_t> next{0};
    for (std::size_t t = 0; t < threads; ++t) {
        workers.push_back(std::async(std::launch::async, [&] {
            for (std::size_t b = next.fetch_add(1); b < blocks; b = next.fetch_add(1))
                results[b] = toeplitz_extract(spec, input.slice(b * spec.n, spec.n));
        }));
    }
    for (auto& w : workers) w.get();
    for (auto& r : results) out.append(r);  // deterministic input order
    return out;
}

BenchResult bench_throughput(const ToeplitzSpec& spec, double min_seconds, bool naive) {
    spec.validate();
    using clock = std::chrono::steady_clock;
    BitStream block(spec.n);
    {
        Philox rng(0x9d5bc44e9ae6f2c1ull);
        auto w = block.words();
        for (auto& word : w) word = rng.next_u64();
        if (spec.n & 63) w[w.size() - 1] &= (~std::uint64_t{0}) >> (64 - (spec.n & 63));
    }
    BenchResult res;
    res.path = naive ? "naive" : "fast";
    if (!naive) {
        volatile std::uint64_t sink = 0;
        auto warm = toeplitz_extract(spec, block);  // warm-up, untimed
        sink ^= warm.words()[0];
        const auto t0 = clock::now();
        std::size_t blocks = 0;
        double elapsed = 0.0;
        do {
            auto y = toeplitz_extract(spec, block);
            sink ^= y.words()[0];
            ++blocks;
            elapsed = std::chrono::duration<double>(clock::now() - t0).count();
        } while (elapsed < min_seconds);
        res.blocks = blocks;
        res.input_mbps = static_cast<double>(blocks) * static_cast<double>(spec.n) / elapsed / 1e6;
        res.output_mbps = static_cast<double>(blocks) * static_cast<double>(spec.m) / elapsed / 1e6;
        res.block_latency_ms = elapsed / static_cast<double>(blocks) * 1e3;
        return res;
    }
    // The naive path is row-uniform, so a timed partial pass over one block
    // gives its steady-state rate without waiting hours at production sizes.
    const auto t0 = clock::now();
    std::size_t rows = 0;
    volatile unsigned sink = 0;
    double elapsed = 0.0;
    while (rows < spec.m) {
        unsigned acc = 0;
        for (std::size_t j = 0; j < spec.n; ++j)
            acc ^= static_cast<unsigned>(spec.seed.get(rows + spec.n - 1 - j) & block.get(j));
        sink ^= acc;
        ++rows;
        if ((rows & 0xFF) == 0) {
            elapsed = std::chrono::duration<double>(clock::now() - t0).count();
            if (elapsed >= min_seconds) break;
        }
    }
    elapsed = std::chrono::duration<double>(clock::now() - t0).count();
    const double frac = static_cast<double>(rows) / static_cast<double>(spec.m);
    res.blocks = rows == spec.m ? 1 : 0;
    res.input_mbps = frac * static_cast<double>(spec.n) / elapsed / 1e6;
    res.output_mbps = static_cast<double>(rows) / elapsed / 1e6;
    res.block_latency_ms = elapsed / frac * 1e3;
    return res;
}

}  // namespace qrng
