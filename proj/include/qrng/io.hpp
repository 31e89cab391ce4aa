#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qrng/bitstream.hpp"
#include "qrng/noisemodel.hpp"
#include "qrng/physsim.hpp"

namespace qrng {

/// Raw trace artifact: flat unsigned 8-bit codes (code i at byte offset i)
/// plus a JSON sidecar carrying acquisition metadata and, for simulated
/// traces, the generating config.
void write_trace(const VoltageTrace& trace, const std::string& bin_path,
                 const std::string& meta_path, const SimConfig* config_echo = nullptr);
VoltageTrace read_trace(const std::string& bin_path, const std::string& meta_path);

/// Whitespace-delimited text: power_mw variance_mv2 n_samples, one point
/// per line, '#' comments allowed.
void write_variance_table(const std::vector<VariancePoint>& points, const std::string& path);
std::vector<VariancePoint> read_variance_table(const std::string& path);

/// Packed-bit container: magic "QTBS", u32 version, u64 bit length
/// (little-endian), then the packed bytes (LSB-first). Used for Toeplitz
/// seeds and extracted output alike.
void write_bits(const BitStream& bits, const std::string& path);
BitStream read_bits(const std::string& path);

/// Export forms accepted by external statistical suites.
void write_bits_ascii(const BitStream& bits, const std::string& path);  // '0'/'1' characters
void write_bits_raw(const BitStream& bits, const std::string& path);    // bare packed bytes

/// Sidecar for extracted output.
struct ExtractionMeta {
    std::size_t n = 0;
    std::size_t m = 0;
    std::size_t block_count = 0;
    std::string master_seed_fingerprint;  // 16 hex digits
};
void write_extraction_meta(const ExtractionMeta& meta, const std::string& path);
ExtractionMeta read_extraction_meta(const std::string& path);

}  // namespace qrng
