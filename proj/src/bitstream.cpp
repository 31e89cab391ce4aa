#include "qrng/bitstream.hpp"

#include <bit>
#include <stdexcept>
#include <string_view>

namespace qrng {

BitStream::BitStream(std::initializer_list<int> bits) : BitStream(bits.size()) {
    std::size_t i = 0;
    for (int b : bits) set(i++, b != 0);
}

BitStream BitStream::from_bytes(std::span<const std::uint8_t> bytes) {
    BitStream out(bytes.size() * 8);
    auto w = out.words();
    for (std::size_t i = 0; i < bytes.size(); ++i)
        w[i >> 3] |= static_cast<std::uint64_t>(bytes[i]) << ((i & 7) * 8);
    return out;
}

BitStream BitStream::from_string(std::string_view s) {
    BitStream out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '1') out.set(i, true);
        else if (s[i] != '0') throw std::invalid_argument("bit string must contain only 0/1");
    }
    return out;
}

void BitStream::append(const BitStream& other) {
    if ((len_ & 63) == 0) {
        // word-aligned: bulk copy
        words_.resize((len_ + other.len_ + 63) / 64, 0);
        const std::size_t base = len_ >> 6;
        for (std::size_t w = 0; w < other.words_.size(); ++w) words_[base + w] = other.words_[w];
        len_ += other.len_;
        return;
    }
    const std::size_t shift = len_ & 63;
    words_.resize((len_ + other.len_ + 63) / 64, 0);
    std::size_t w = len_ >> 6;
    for (std::size_t k = 0; k < other.words_.size(); ++k) {
        const std::uint64_t v = other.words_[k];
        words_[w + k] |= v << shift;
        if (w + k + 1 < words_.size()) words_[w + k + 1] |= v >> (64 - shift);
    }
    len_ += other.len_;
    // clear any bits the resize math left beyond len_
    if (len_ & 63) words_.back() &= (~std::uint64_t{0}) >> (64 - (len_ & 63));
}

BitStream BitStream::slice(std::size_t begin, std::size_t count) const {
    if (begin + count > len_) throw std::out_of_range("BitStream::slice out of range");
    BitStream out(count);
    auto dst = out.words();
    const std::size_t shift = begin & 63;
    const std::size_t w0 = begin >> 6;
    for (std::size_t k = 0; k < dst.size(); ++k) {
        std::uint64_t v = words_[w0 + k] >> shift;
        if (shift && w0 + k + 1 < words_.size()) v |= words_[w0 + k + 1] << (64 - shift);
        dst[k] = v;
    }
    if (count & 63) dst[dst.size() - 1] &= (~std::uint64_t{0}) >> (64 - (count & 63));
    return out;
}

std::size_t BitStream::count_ones() const noexcept {
    std::size_t c = 0;
    for (std::uint64_t w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
}

std::vector<std::uint8_t> BitStream::to_bytes() const {
    std::vector<std::uint8_t> out((len_ + 7) / 8, 0);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<std::uint8_t>(words_[i >> 3] >> ((i & 7) * 8));
    return out;
}

BitStream BitStream::operator^(const BitStream& rhs) const {
    if (len_ != rhs.len_) throw std::invalid_argument("BitStream XOR length mismatch");
    BitStream out(len_);
    for (std::size_t w = 0; w < words_.size(); ++w) out.words_[w] = words_[w] ^ rhs.words_[w];
    return out;
}

}  // namespace qrng
