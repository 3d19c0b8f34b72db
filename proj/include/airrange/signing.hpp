#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace airrange {

using Bytes = std::vector<std::uint8_t>;
using PublicKey = std::array<std::uint8_t, 32>;
using SecretKey = std::array<std::uint8_t, 64>;
using Digest = std::array<std::uint8_t, 32>;

struct KeyPair {
    PublicKey public_key{};
    SecretKey secret_key{};
};

/// Ed25519 keypair derived from a text seed (SHA-256 of the text).
KeyPair keypair_from_seed(std::string_view seed_text);

/// The firmware vendor's release key. The device ships with its public half.
const KeyPair& vendor_keypair();

Bytes sign_detached(std::span<const std::uint8_t> message, const SecretKey& key);
bool verify_detached(std::span<const std::uint8_t> message, std::span<const std::uint8_t> signature,
                     const PublicKey& key);

Digest sha256(std::span<const std::uint8_t> data);

std::string to_hex(std::span<const std::uint8_t> bytes);
std::optional<Bytes> from_hex(std::string_view hex);

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace airrange
