#ifndef OOBSIM_CRYPTO_HPP
#define OOBSIM_CRYPTO_HPP

#include <openssl/evp.h>

#include <bit>
#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>

#include "oobsim/bitstring.hpp"
#include "oobsim/common.hpp"
#include "oobsim/hash.hpp"
#include "oobsim/rng.hpp"

namespace oobsim {

// Protocol configurations transmit between 8 and 32 SAS bits; the primitives
// below stay mechanical down to 1 bit so attack experiments can shrink k far
// enough to brute-force.
constexpr std::size_t kMinProtocolSasBits = 8;
constexpr std::size_t kMaxProtocolSasBits = 32;

// ---------------------------------------------------------------------------
// Key agreement (X25519, raw 32-byte keys). The pairing protocol only needs
// public keys that are authenticated end to end plus a symmetric link key to
// wrap the bootstrap keying material afterwards.
// ---------------------------------------------------------------------------

struct KeyPair {
    Bytes public_key;   // 32 bytes, canonical raw encoding
    Bytes private_key;  // 32 bytes
};

namespace detail {

struct EvpPkeyDeleter {
    void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct EvpCtxDeleter {
    void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, EvpPkeyDeleter>;
using PkeyCtxPtr = std::unique_ptr<EVP_PKEY_CTX, EvpCtxDeleter>;

inline PkeyPtr x25519_private(const Bytes& raw) {
    if (raw.size() != 32) throw MalformedKeyError("X25519 private key must be 32 bytes");
    PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_X25519, nullptr, raw.data(), raw.size()));
    if (!key) throw MalformedKeyError("X25519 private key rejected");
    return key;
}

inline PkeyPtr x25519_public(const Bytes& raw) {
    if (raw.size() != 32) throw MalformedKeyError("X25519 public key must be 32 bytes");
    PkeyPtr key(EVP_PKEY_new_raw_public_key(EVP_PKEY_X25519, nullptr, raw.data(), raw.size()));
    if (!key) throw MalformedKeyError("X25519 public key rejected");
    return key;
}

}  // namespace detail

/// Deterministic key pair from a 32-byte seed (the seed is the private key).
inline KeyPair keygen(const Bytes& seed) {
    auto priv = detail::x25519_private(seed);
    Bytes pub(32);
    std::size_t len = pub.size();
    if (EVP_PKEY_get_raw_public_key(priv.get(), pub.data(), &len) != 1 || len != 32)
        throw MalformedKeyError("X25519 public key derivation failed");
    return KeyPair{pub, seed};
}

/// Symmetric link key: derive_link_key(a_priv, B_pub) == derive_link_key(b_priv, A_pub).
inline Bytes derive_link_key(const Bytes& own_private, const Bytes& peer_public) {
    auto priv = detail::x25519_private(own_private);
    auto peer = detail::x25519_public(peer_public);
    detail::PkeyCtxPtr ctx(EVP_PKEY_CTX_new(priv.get(), nullptr));
    if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1 ||
        EVP_PKEY_derive_set_peer(ctx.get(), peer.get()) != 1)
        throw MalformedKeyError("X25519 derive init failed");
    Bytes shared(32);
    std::size_t len = shared.size();
    if (EVP_PKEY_derive(ctx.get(), shared.data(), &len) != 1 || len != 32)
        throw MalformedKeyError("X25519 shared secret derivation failed");
    static constexpr std::string_view tag = "oobsim.linkkey.1";
    Bytes pre(tag.begin(), tag.end());
    pre.insert(pre.end(), shared.begin(), shared.end());
    return sha256(pre);
}

// ---------------------------------------------------------------------------
// Commitment scheme: hash commitment with a 16-byte salt and explicit domain
// separation. Binding to the public key means a tampered pk is caught at open
// time.
// ---------------------------------------------------------------------------

constexpr std::size_t kSaltBytes = 16;

struct Commitment {
    Bytes digest;  // 32 bytes
    bool operator==(const Commitment&) const = default;
};

struct Decommitment {
    BitString nonce;  // the committed bit string
    Bytes salt;       // 16 bytes
};

namespace detail {

inline Bytes commit_preimage(const Bytes& pk, const BitString& r, const Bytes& salt) {
    static constexpr std::string_view tag = "oobsim.commit.v1";
    Bytes pre(tag.begin(), tag.end());
    append_u32_be(static_cast<std::uint32_t>(pk.size()), pre);
    pre.insert(pre.end(), pk.begin(), pk.end());
    append_u32_be(static_cast<std::uint32_t>(r.size()), pre);
    Bytes packed = r.to_bytes();
    pre.insert(pre.end(), packed.begin(), packed.end());
    pre.insert(pre.end(), salt.begin(), salt.end());
    return pre;
}

}  // namespace detail

inline std::pair<Commitment, Decommitment> commit(const Bytes& pk, const BitString& r,
                                                  const Bytes& salt) {
    if (r.empty()) throw LengthMismatchError("commit: empty nonce");
    if (salt.size() != kSaltBytes) throw LengthMismatchError("commit: salt must be 16 bytes");
    return {Commitment{sha256(detail::commit_preimage(pk, r, salt))}, Decommitment{r, salt}};
}

/// Returns the committed nonce; throws CommitmentMismatchError when the
/// recomputed digest differs (wireless tampering — the session must abort).
inline BitString open(const Bytes& pk, const Commitment& c, const Decommitment& d) {
    if (d.nonce.empty() || d.salt.size() != kSaltBytes || c.digest.size() != 32)
        throw CommitmentMismatchError("open: malformed commitment or decommitment");
    if (sha256(detail::commit_preimage(pk, d.nonce, d.salt)) != c.digest)
        throw CommitmentMismatchError("open: digest mismatch");
    return d.nonce;
}

// ---------------------------------------------------------------------------
// Almost-universal hash: polynomial evaluation over GF(2^64) truncated to the
// low k bits. Message is split into 64-bit big-endian blocks m_1..m_t (last
// block zero-padded) and sum_{i=1..t} m_i * x^i is evaluated at x = key.
// ---------------------------------------------------------------------------

namespace detail {

// GF(2^64) with reduction polynomial X^64 + X^4 + X^3 + X + 1.
inline std::uint64_t gf64_mul(std::uint64_t a, std::uint64_t b) {
    std::uint64_t acc = 0;
    while (b != 0) {
        if (b & 1) acc ^= a;
        bool carry = (a >> 63) != 0;
        a <<= 1;
        if (carry) a ^= 0x1B;
        b >>= 1;
    }
    return acc;
}

}  // namespace detail

inline BitString uhash(const BitString& key, const Bytes& msg) {
    const std::size_t k = key.size();
    if (k == 0 || k > 64) throw LengthMismatchError("uhash: key length out of range");
    const std::uint64_t x = key.to_uint();
    const std::size_t t = (msg.size() + 7) / 8;
    std::uint64_t acc = 0;
    for (std::size_t i = t; i-- > 0;) {
        std::uint64_t block = 0;
        for (std::size_t j = 0; j < 8; ++j) {
            std::uint8_t byte = (8 * i + j < msg.size()) ? msg[8 * i + j] : 0;
            block = (block << 8) | byte;
        }
        acc = detail::gf64_mul(acc ^ block, x);
    }
    if (k < 64) acc &= (std::uint64_t{1} << k) - 1;
    return BitString::from_uint(acc, k);
}

// ---------------------------------------------------------------------------
// SAS values
// ---------------------------------------------------------------------------

struct SasValue {
    BitString value;

    SasValue() = default;
    explicit SasValue(BitString bits) : value(std::move(bits)) {
        if (value.empty() || value.size() > 64)
            throw LengthMismatchError("SasValue: length out of range");
    }

    std::size_t k() const { return value.size(); }
    std::string to_hex() const { return value.to_hex(); }
    bool operator==(const SasValue&) const = default;
};

inline SasValue compute_sas(const BitString& r_b, const BitString& r_a, const Bytes& pk_b) {
    if (r_b.size() != r_a.size())
        throw LengthMismatchError("compute_sas: nonce lengths differ");
    return SasValue{r_b ^ uhash(r_a, pk_b)};
}

/// SAS bit length for an n-node batch: 15-bit two-party baseline plus
/// headroom for the many-to-one union bound. Batches of more than one node
/// are provisioned for a 32-node minimum capacity (published sizing:
/// 16 nodes -> 20 bits, 128 nodes -> 22 bits), so an adversarially deflated
/// node count cannot shrink k below the deployable default.
inline std::size_t sas_length(std::size_t n) {
    if (n == 0) throw ConfigError("sas_length: n must be >= 1");
    if (n == 1) return 15;
    std::size_t capacity = n < 32 ? 32 : n;
    return 15 + std::bit_width(capacity - 1);  // 15 + ceil(log2(capacity))
}

}  // namespace oobsim

#endif  // OOBSIM_CRYPTO_HPP
