#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace qrng {

/// Packed bit sequence. Bit i lives at byte i/8, position i%8 (LSB-first),
/// which is also the order raw ADC samples unpack into bits. Trailing pad
/// bits in the last word are kept zero so whole-word operations (XOR,
/// popcount, carryless multiply) need no masking by callers.
class BitStream {
public:
    BitStream() = default;
    explicit BitStream(std::size_t len) : len_(len), words_((len + 63) / 64, 0) {}
    BitStream(std::initializer_list<int> bits);

    /// Unpacks bytes into 8 bits each, LSB first.
    static BitStream from_bytes(std::span<const std::uint8_t> bytes);
    /// Parses a string of '0'/'1' characters.
    static BitStream from_string(std::string_view s);

    std::size_t size() const noexcept { return len_; }
    bool empty() const noexcept { return len_ == 0; }

    bool get(std::size_t i) const noexcept { return (words_[i >> 6] >> (i & 63)) & 1u; }
    void set(std::size_t i, bool v) noexcept {
        const std::uint64_t mask = std::uint64_t{1} << (i & 63);
        if (v) words_[i >> 6] |= mask;
        else words_[i >> 6] &= ~mask;
    }
    void push_back(bool v) {
        if ((len_ & 63) == 0) words_.push_back(0);
        if (v) words_[len_ >> 6] |= std::uint64_t{1} << (len_ & 63);
        ++len_;
    }

    /// Appends all bits of `other`, preserving order.
    void append(const BitStream& other);

    /// Bit slice [begin, begin+count).
    BitStream slice(std::size_t begin, std::size_t count) const;

    std::size_t count_ones() const noexcept;

    std::span<const std::uint64_t> words() const noexcept { return words_; }
    std::span<std::uint64_t> words() noexcept { return words_; }

    /// Packs into bytes (LSB-first within each byte); the final partial
    /// byte, if any, is zero-padded.
    std::vector<std::uint8_t> to_bytes() const;

    BitStream operator^(const BitStream& rhs) const;
    bool operator==(const BitStream& rhs) const noexcept = default;

private:
    std::size_t len_ = 0;
    std::vector<std::uint64_t> words_;
};

}  // namespace qrng
