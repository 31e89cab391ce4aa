#include "qrng/io.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qrng {

namespace {

using nlohmann::json;

void write_file(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void put_u32(std::string& s, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& s, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(const std::string& s, std::size_t off) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i)
        v = (v << 8) | static_cast<std::uint8_t>(s[off + static_cast<std::size_t>(i)]);
    return v;
}

constexpr char kBitsMagic[4] = {'Q', 'T', 'B', 'S'};

}  // namespace

void write_trace(const VoltageTrace& trace, const std::string& bin_path,
                 const std::string& meta_path, const SimConfig* config_echo) {
    std::string raw(trace.codes.begin(), trace.codes.end());
    write_file(bin_path, raw);

    json meta;
    meta["schema_version"] = 1;
    meta["sample_rate_gsps"] = trace.sample_rate_gsps;
    meta["volts_per_code"] = trace.adc.volts_per_code;
    meta["offset_mv"] = trace.adc.offset_mv;
    meta["adc_bits"] = trace.adc.bits;
    meta["rng_seed"] = trace.rng_seed;
    meta["origin"] = trace.origin;
    meta["clipped_fraction"] = trace.clipped_fraction;
    meta["samples"] = trace.codes.size();
    if (config_echo) {
        meta["config"] = {
            {"power_mw", config_echo->power_mw},
            {"q_coeff", config_echo->q_coeff},
            {"c_coeff", config_echo->c_coeff},
            {"a_gain", config_echo->a_gain},
            {"f_noise", config_echo->f_noise},
            {"delay_ns", config_echo->delay_ns},
            {"sample_rate_gsps", config_echo->sample_rate_gsps},
            {"classical_corr_time_ns", config_echo->classical_corr_time_ns},
            {"transfer_mode",
             config_echo->transfer_mode == Transfer::full_sine ? "full-sine" : "small-angle"},
            {"rng_seed", config_echo->rng_seed},
        };
    }
    write_file(meta_path, meta.dump(2) + "\n");
}

VoltageTrace read_trace(const std::string& bin_path, const std::string& meta_path) {
    const std::string raw = read_file(bin_path);
    const json meta = json::parse(read_file(meta_path));

    VoltageTrace trace;
    trace.codes.assign(raw.begin(), raw.end());
    if (trace.codes.empty()) throw std::runtime_error("trace is empty: " + bin_path);
    trace.sample_rate_gsps = meta.at("sample_rate_gsps").get<double>();
    trace.adc.volts_per_code = meta.at("volts_per_code").get<double>();
    trace.adc.offset_mv = meta.at("offset_mv").get<double>();
    trace.adc.bits = meta.value("adc_bits", 8);
    trace.rng_seed = meta.value("rng_seed", std::uint64_t{0});
    trace.origin = meta.value("origin", std::string("file"));
    trace.clipped_fraction = meta.value("clipped_fraction", 0.0);
    trace.adc.validate();
    return trace;
}

void write_variance_table(const std::vector<VariancePoint>& points, const std::string& path) {
    std::string out = "# power_mw variance_mv2 n_samples\n";
    char line[128];
    for (const auto& p : points) {
        std::snprintf(line, sizeof line, "%.9g %.9g %zu\n", p.power_mw, p.variance_mv2,
                      p.n_samples);
        out += line;
    }
    write_file(path, out);
}

std::vector<VariancePoint> read_variance_table(const std::string& path) {
    std::istringstream in(read_file(path));
    std::vector<VariancePoint> points;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        VariancePoint p;
        if (ls >> p.power_mw >> p.variance_mv2) {
            if (!(ls >> p.n_samples)) p.n_samples = 0;
            points.push_back(p);
        }
    }
    if (points.empty()) throw std::runtime_error("no variance points in " + path);
    return points;
}

void write_bits(const BitStream& bits, const std::string& path) {
    std::string out(kBitsMagic, 4);
    put_u32(out, 1);  // version
    put_u64(out, bits.size());
    const auto bytes = bits.to_bytes();
    out.append(bytes.begin(), bytes.end());
    write_file(path, out);
}

BitStream read_bits(const std::string& path) {
    const std::string raw = read_file(path);
    if (raw.size() < 16 || raw.compare(0, 4, kBitsMagic, 4) != 0)
        throw std::runtime_error("not a packed-bit file: " + path);
    const std::uint64_t len = get_u64(raw, 8);
    if (raw.size() - 16 < (len + 7) / 8)
        throw std::runtime_error("truncated packed-bit file: " + path);
    std::vector<std::uint8_t> bytes(raw.begin() + 16, raw.end());
    BitStream all = BitStream::from_bytes(bytes);
    return all.slice(0, len);
}

void write_bits_ascii(const BitStream& bits, const std::string& path) {
    std::string out;
    out.reserve(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) out.push_back(bits.get(i) ? '1' : '0');
    write_file(path, out);
}

void write_bits_raw(const BitStream& bits, const std::string& path) {
    const auto bytes = bits.to_bytes();
    write_file(path, std::string(bytes.begin(), bytes.end()));
}

void write_extraction_meta(const ExtractionMeta& meta, const std::string& path) {
    json j;
    j["schema_version"] = 1;
    j["n"] = meta.n;
    j["m"] = meta.m;
    j["block_count"] = meta.block_count;
    j["master_seed_fingerprint"] = meta.master_seed_fingerprint;
    write_file(path, j.dump(2) + "\n");
}

ExtractionMeta read_extraction_meta(const std::string& path) {
    const json j = json::parse(read_file(path));
    ExtractionMeta meta;
    meta.n = j.at("n").get<std::size_t>();
    meta.m = j.at("m").get<std::size_t>();
    meta.block_count = j.at("block_count").get<std::size_t>();
    meta.master_seed_fingerprint = j.value("master_seed_fingerprint", std::string{});
    return meta;
}

}  // namespace qrng
