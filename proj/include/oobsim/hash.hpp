#ifndef OOBSIM_HASH_HPP
#define OOBSIM_HASH_HPP

#include <openssl/evp.h>

#include "oobsim/common.hpp"

namespace oobsim {

inline Bytes sha256(const Bytes& data) {
    Bytes digest(32);
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != 32)
        throw Error("SHA-256 failed");
    return digest;
}

}  // namespace oobsim

#endif  // OOBSIM_HASH_HPP
