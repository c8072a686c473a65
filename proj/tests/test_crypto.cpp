#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oobsim/crypto.hpp"

using namespace oobsim;

namespace {

std::vector<std::vector<std::string>> load_vectors(const std::string& name) {
    std::ifstream in(std::string(OOBSIM_VECTOR_DIR) + "/" + name);
    REQUIRE(in.good());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, '\t')) fields.push_back(field);
        rows.push_back(std::move(fields));
    }
    return rows;
}

BitString random_bits(std::mt19937_64& rng, std::size_t k) {
    BitString out(k);
    for (std::size_t i = 0; i < k; ++i) out.set_bit(i, rng() & 1);
    return out;
}

}  // namespace

TEST_CASE("BitString basics") {
    BitString b = BitString::from_uint(0b10110, 5);
    CHECK(b.bit(0));       // index 0 is the most significant bit
    CHECK_FALSE(b.bit(1));
    CHECK(b.to_uint() == 0b10110);
    CHECK(b.size() == 5);

    // hex packing is MSB-first with zero pad bits
    CHECK(BitString::from_uint(0xABCDE, 20).to_hex() == "abcde0");
    CHECK(BitString::from_hex("abcde0", 20) == BitString::from_uint(0xABCDE, 20));
    CHECK(BitString::from_uint(0x1, 1).to_hex() == "80");

    SECTION("XOR requires equal lengths") {
        CHECK_THROWS_AS(BitString(4) ^ BitString(5), LengthMismatchError);
        BitString a = BitString::from_uint(0b1100, 4);
        BitString c = BitString::from_uint(0b1010, 4);
        CHECK((a ^ c) == BitString::from_uint(0b0110, 4));
        CHECK((a ^ c ^ c) == a);
    }

    SECTION("equality is positional") {
        CHECK(BitString::from_uint(1, 4) != BitString::from_uint(1, 5));
        CHECK(BitString::from_uint(5, 4) == BitString::from_uint(5, 4));
    }
}

TEST_CASE("uhash golden vectors") {
    for (const auto& row : load_vectors("uhash.txt")) {
        REQUIRE(row.size() == 4);
        std::size_t k = std::stoul(row[0]);
        BitString key = BitString::from_hex(row[1], k);
        Bytes msg = from_hex(row[2]);
        BitString expected = BitString::from_hex(row[3], k);
        CHECK(uhash(key, msg) == expected);
    }
}

TEST_CASE("uhash zero key annihilates every message") {
    for (const char* text : {"", "a", "hello world", "0123456789abcdefghij"}) {
        Bytes msg(text, text + std::string(text).size());
        CHECK(uhash(BitString(20), msg) == BitString(20));
        CHECK(uhash(BitString(8), msg) == BitString(8));
    }
}

TEST_CASE("uhash is deterministic") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 20; ++i) {
        BitString key = random_bits(rng, 20);
        Bytes msg(32);
        for (auto& b : msg) b = static_cast<std::uint8_t>(rng());
        CHECK(uhash(key, msg) == uhash(key, msg));
    }
}

TEST_CASE("uhash collision probability at k=8, exact brute force") {
    // Counts verified against the reference oracle; bound is t * 2^-8 over
    // all 256 keys, i.e. at most t colliding keys (the zero key always
    // collides, so each count is at least 1).
    struct Pair {
        const char* m1;
        const char* m2;
        std::size_t t;
        int expected_count;
    };
    const Pair pairs[] = {
        {"4141414141414131", "4141414141414132", 1, 1},
        {"0000000000000001", "0000000000000002", 1, 1},
        {"73656e736f722d31206e6f64652d6161", "73656e736f722d30206e6f64652d6162", 2, 2},
        {"000102030405060708090a0b0c0d0e0f1011121314151617",
         "0102030405060708090a0b0c0d0e0f101112131415161718", 3, 1},
        {"21557d384ec023b0769a488ffb5a2aaa6bfdc6956b9627b1e0ec1473e986a27d",
         "21557d384ec023b1769a488ffb5a2af06bfdc6956b962782e0ec1473e986a20a", 4, 1},
    };
    for (const auto& pair : pairs) {
        Bytes m1 = from_hex(pair.m1);
        Bytes m2 = from_hex(pair.m2);
        REQUIRE(m1 != m2);
        int collisions = 0;
        for (int keyval = 0; keyval < 256; ++keyval) {
            BitString key = BitString::from_uint(static_cast<std::uint64_t>(keyval), 8);
            if (uhash(key, m1) == uhash(key, m2)) ++collisions;
        }
        CHECK(collisions == pair.expected_count);
        CHECK(collisions <= static_cast<int>(pair.t));  // t * 2^-8 * 256 keys
    }
}

TEST_CASE("commitment golden vectors") {
    for (const auto& row : load_vectors("commit.txt")) {
        REQUIRE(row.size() == 5);
        Bytes pk = from_hex(row[0]);
        std::size_t k = std::stoul(row[1]);
        BitString r = BitString::from_hex(row[2], k);
        Bytes salt = from_hex(row[3]);
        auto [c, d] = commit(pk, r, salt);
        CHECK(to_hex(c.digest) == row[4]);
        CHECK(open(pk, c, d) == r);
    }
}

TEST_CASE("commit with distinct salts yields distinct digests") {
    Bytes pk = from_hex("00112233445566778899aabbccddeeff00112233445566778899aabbccddeeff");
    BitString r = BitString::from_uint(0x5a5a5, 20);
    auto [c1, d1] = commit(pk, r, Bytes(16, 0x01));
    auto [c2, d2] = commit(pk, r, Bytes(16, 0x02));
    CHECK(c1.digest != c2.digest);
}

TEST_CASE("commitment binding rejects every single-bit perturbation") {
    std::mt19937_64 rng(99);
    Bytes pk(32);
    for (auto& b : pk) b = static_cast<std::uint8_t>(rng());
    BitString r = random_bits(rng, 20);
    Bytes salt(16);
    for (auto& b : salt) b = static_cast<std::uint8_t>(rng());
    auto [c, d] = commit(pk, r, salt);
    REQUIRE(open(pk, c, d) == r);

    for (std::size_t bit = 0; bit < pk.size() * 8; ++bit) {
        Bytes bad = pk;
        bad[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        CHECK_THROWS_AS(open(bad, c, d), CommitmentMismatchError);
    }
    for (std::size_t bit = 0; bit < c.digest.size() * 8; ++bit) {
        Commitment bad = c;
        bad.digest[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        CHECK_THROWS_AS(open(pk, bad, d), CommitmentMismatchError);
    }
    for (std::size_t bit = 0; bit < r.size(); ++bit) {
        Decommitment bad = d;
        bad.nonce.flip_bit(bit);
        CHECK_THROWS_AS(open(pk, c, bad), CommitmentMismatchError);
    }
    for (std::size_t bit = 0; bit < salt.size() * 8; ++bit) {
        Decommitment bad = d;
        bad.salt[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        CHECK_THROWS_AS(open(pk, c, bad), CommitmentMismatchError);
    }
}

TEST_CASE("compute_sas golden vectors") {
    for (const auto& row : load_vectors("sas.txt")) {
        REQUIRE(row.size() == 5);
        std::size_t k = std::stoul(row[0]);
        BitString r_b = BitString::from_hex(row[1], k);
        BitString r_a = BitString::from_hex(row[2], k);
        Bytes pk = from_hex(row[3]);
        CHECK(compute_sas(r_b, r_a, pk).to_hex() == row[4]);
    }
}

TEST_CASE("compute_sas algebra") {
    std::mt19937_64 rng(1234);
    SECTION("zero r_b reduces to the hash") {
        for (int i = 0; i < 10; ++i) {
            BitString r_a = random_bits(rng, 20);
            Bytes pk(32);
            for (auto& b : pk) b = static_cast<std::uint8_t>(rng());
            CHECK(compute_sas(BitString(20), r_a, pk).value == uhash(r_a, pk));
        }
    }
    SECTION("XOR involution and bilinearity in r_b") {
        for (int i = 0; i < 50; ++i) {
            std::size_t k = 8 + rng() % 25;
            BitString r_a = random_bits(rng, k);
            BitString r_b = random_bits(rng, k);
            BitString delta = random_bits(rng, k);
            Bytes pk(32);
            for (auto& b : pk) b = static_cast<std::uint8_t>(rng());
            SasValue sas = compute_sas(r_b, r_a, pk);
            CHECK((sas.value ^ r_b) == uhash(r_a, pk));
            CHECK(compute_sas(r_b ^ delta, r_a, pk).value == (sas.value ^ delta));
        }
    }
    SECTION("length mismatch") {
        CHECK_THROWS_AS(compute_sas(BitString(8), BitString(9), Bytes{1, 2}),
                        LengthMismatchError);
    }
}

TEST_CASE("sas_length published sizes") {
    CHECK(sas_length(16) == 20);
    CHECK(sas_length(1) == 15);
    CHECK(sas_length(128) == 22);
    CHECK(sas_length(32) == 20);
    CHECK(sas_length(2) == 20);  // provisioned for the 32-node minimum capacity
}

TEST_CASE("sas_length is nondecreasing") {
    std::size_t prev = sas_length(1);
    for (std::size_t n = 2; n <= 4096; ++n) {
        std::size_t cur = sas_length(n);
        CHECK(cur >= prev);
        prev = cur;
    }
    CHECK(sas_length(4096) <= 32);
}

TEST_CASE("keygen golden vector and determinism") {
    auto rows = load_vectors("keys.txt");
    std::map<std::string, std::string> kv;
    for (const auto& row : rows) {
        REQUIRE(row.size() == 2);
        kv[row[0]] = row[1];
    }
    Bytes seed_a = from_hex(kv["seed_a"]);
    Bytes seed_b = from_hex(kv["seed_b"]);
    KeyPair a = keygen(seed_a);
    KeyPair b = keygen(seed_b);
    CHECK(to_hex(a.public_key) == kv["pub_a"]);
    CHECK(to_hex(b.public_key) == kv["pub_b"]);
    CHECK(a.public_key != b.public_key);

    SECTION("same seed twice") {
        KeyPair again = keygen(seed_a);
        CHECK(again.public_key == a.public_key);
        CHECK(again.private_key == a.private_key);
    }
    SECTION("public key re-derives from the private key") {
        CHECK(keygen(a.private_key).public_key == a.public_key);
    }
    SECTION("link key symmetry matches the golden value") {
        Bytes ab = derive_link_key(a.private_key, b.public_key);
        Bytes ba = derive_link_key(b.private_key, a.public_key);
        CHECK(ab == ba);
        CHECK(to_hex(ab) == kv["link_key"]);
    }
}

TEST_CASE("derive_link_key across 100 pairs") {
    std::mt19937_64 rng(555);
    std::set<std::string> seen;
    Bytes base_seed(32, 0);
    for (int i = 0; i < 100; ++i) {
        Bytes sa(32), sb(32);
        for (auto& x : sa) x = static_cast<std::uint8_t>(rng());
        for (auto& x : sb) x = static_cast<std::uint8_t>(rng());
        KeyPair a = keygen(sa);
        KeyPair b = keygen(sb);
        Bytes ab = derive_link_key(a.private_key, b.public_key);
        CHECK(ab == derive_link_key(b.private_key, a.public_key));
        CHECK(seen.insert(to_hex(ab)).second);  // no collisions across pairs
    }
}

TEST_CASE("derive_link_key rejects malformed keys and detects tampering") {
    KeyPair a = keygen(Bytes(32, 0x11));
    KeyPair b = keygen(Bytes(32, 0x22));
    CHECK_THROWS_AS(derive_link_key(a.private_key, Bytes(31, 0)), MalformedKeyError);
    CHECK_THROWS_AS(derive_link_key(Bytes(5, 0), b.public_key), MalformedKeyError);

    Bytes honest = derive_link_key(a.private_key, b.public_key);
    Bytes tampered_pub = b.public_key;
    tampered_pub[7] ^= 0x40;
    CHECK(derive_link_key(a.private_key, tampered_pub) != honest);
}

TEST_CASE("commit input validation") {
    CHECK_THROWS_AS(commit(Bytes{1}, BitString(), Bytes(16, 0)), LengthMismatchError);
    CHECK_THROWS_AS(commit(Bytes{1}, BitString(8), Bytes(15, 0)), LengthMismatchError);
}
