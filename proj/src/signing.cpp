#include "airrange/signing.hpp"

#include <sodium.h>

#include <stdexcept>

namespace airrange {

namespace {

void ensure_sodium() {
    static const bool ready = [] { return sodium_init() >= 0; }();
    if (!ready) throw std::runtime_error("libsodium initialisation failed");
}

}  // namespace

KeyPair keypair_from_seed(std::string_view seed_text) {
    ensure_sodium();
    Digest seed = sha256(as_bytes(seed_text));
    KeyPair kp;
    crypto_sign_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed.data());
    return kp;
}

const KeyPair& vendor_keypair() {
    static const KeyPair kp = keypair_from_seed("mdr2i-vendor-release-key");
    return kp;
}

Bytes sign_detached(std::span<const std::uint8_t> message, const SecretKey& key) {
    ensure_sodium();
    Bytes sig(crypto_sign_BYTES);
    crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), key.data());
    return sig;
}

bool verify_detached(std::span<const std::uint8_t> message, std::span<const std::uint8_t> signature,
                     const PublicKey& key) {
    ensure_sodium();
    if (signature.size() != crypto_sign_BYTES) return false;
    return crypto_sign_verify_detached(signature.data(), message.data(), message.size(), key.data()) == 0;
}

Digest sha256(std::span<const std::uint8_t> data) {
    ensure_sodium();
    Digest d{};
    crypto_hash_sha256(d.data(), data.data(), data.size());
    return d;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
    std::string out(bytes.size() * 2 + 1, '\0');
    sodium_bin2hex(out.data(), out.size(), bytes.data(), bytes.size());
    out.pop_back();
    return out;
}

std::optional<Bytes> from_hex(std::string_view hex) {
    ensure_sodium();
    if (hex.size() % 2 != 0) return std::nullopt;
    Bytes out(hex.size() / 2);
    std::size_t written = 0;
    const char* end = nullptr;
    if (sodium_hex2bin(out.data(), out.size(), hex.data(), hex.size(), nullptr, &written, &end) != 0 ||
        written != out.size() || end != hex.data() + hex.size()) {
        return std::nullopt;
    }
    return out;
}

}  // namespace airrange
