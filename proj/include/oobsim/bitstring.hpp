#ifndef OOBSIM_BITSTRING_HPP
#define OOBSIM_BITSTRING_HPP

#include <cstddef>
#include <cstdint>
#include <string>

#include "oobsim/common.hpp"

namespace oobsim {

/// Ordered bit sequence. Index 0 is the most significant / leftmost bit;
/// that single convention is shared by the crypto, the LED frames and the
/// hex packing (pad bits in the last byte are zero).
class BitString {
public:
    BitString() = default;

    explicit BitString(std::size_t length) : bits_(length, 0) {}

    static BitString from_uint(std::uint64_t value, std::size_t length) {
        if (length > 64) throw LengthMismatchError("BitString::from_uint: length > 64");
        BitString out(length);
        for (std::size_t i = 0; i < length; ++i)
            out.bits_[i] = static_cast<std::uint8_t>((value >> (length - 1 - i)) & 1);
        return out;
    }

    static BitString from_bytes(const Bytes& packed, std::size_t length) {
        if (packed.size() != (length + 7) / 8)
            throw LengthMismatchError("BitString::from_bytes: wrong byte count");
        BitString out(length);
        for (std::size_t i = 0; i < length; ++i)
            out.bits_[i] = (packed[i / 8] >> (7 - i % 8)) & 1;
        return out;
    }

    static BitString from_hex(const std::string& hex, std::size_t length) {
        return from_bytes(oobsim::from_hex(hex), length);
    }

    std::size_t size() const { return bits_.size(); }
    bool empty() const { return bits_.empty(); }

    bool bit(std::size_t i) const { return bits_.at(i) != 0; }
    void set_bit(std::size_t i, bool v) { bits_.at(i) = v ? 1 : 0; }
    void flip_bit(std::size_t i) { bits_.at(i) ^= 1; }

    std::uint64_t to_uint() const {
        if (size() > 64) throw LengthMismatchError("BitString::to_uint: length > 64");
        std::uint64_t v = 0;
        for (std::uint8_t b : bits_) v = (v << 1) | b;
        return v;
    }

    Bytes to_bytes() const {
        Bytes out((size() + 7) / 8, 0);
        for (std::size_t i = 0; i < size(); ++i)
            if (bits_[i]) out[i / 8] |= static_cast<std::uint8_t>(1u << (7 - i % 8));
        return out;
    }

    std::string to_hex() const { return oobsim::to_hex(to_bytes()); }

    BitString operator^(const BitString& other) const {
        if (size() != other.size())
            throw LengthMismatchError("BitString XOR: length mismatch");
        BitString out(size());
        for (std::size_t i = 0; i < size(); ++i) out.bits_[i] = bits_[i] ^ other.bits_[i];
        return out;
    }

    bool operator==(const BitString& other) const = default;

private:
    std::vector<std::uint8_t> bits_;  // one byte per bit, values 0/1
};

}  // namespace oobsim

#endif  // OOBSIM_BITSTRING_HPP
