#ifndef OOBSIM_COMMON_HPP
#define OOBSIM_COMMON_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace oobsim {

using Bytes = std::vector<std::uint8_t>;
using TimeMs = std::uint64_t;

// Contract violations (caller bugs) and simulation-level failures share one
// exception root so harness code can localize per-session errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidStateError : Error {
    using Error::Error;
};
struct LengthMismatchError : Error {
    using Error::Error;
};
struct MalformedMessageError : Error {
    using Error::Error;
};
struct CommitmentMismatchError : Error {
    using Error::Error;
};
struct MalformedKeyError : Error {
    using Error::Error;
};
struct DimensionMismatchError : Error {
    using Error::Error;
};
struct OutOfBoundsError : Error {
    using Error::Error;
};
struct EmptyLayoutError : Error {
    using Error::Error;
};
struct ClusterInvalidError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

struct DetectionIncompleteError : Error {
    int found;
    int expected;
    DetectionIncompleteError(int found_count, int expected_count)
        : Error("LED detection incomplete: found " + std::to_string(found_count) +
                " of " + std::to_string(expected_count)),
          found(found_count),
          expected(expected_count) {}
};

inline std::string to_hex(const Bytes& data) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (std::uint8_t b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xF]);
    }
    return out;
}

inline Bytes from_hex(const std::string& hex) {
    if (hex.size() % 2 != 0) throw ConfigError("odd-length hex string");
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw ConfigError("invalid hex digit");
    };
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
    return out;
}

inline void append_u32_be(std::uint32_t v, Bytes& out) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline void append_u32_le(std::uint32_t v, Bytes& out) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void append_u64_le(std::uint64_t v, Bytes& out) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

}  // namespace oobsim

#endif  // OOBSIM_COMMON_HPP
