// SPDX-License-Identifier: Apache-2.0

#include "nextsense/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>

#include "nextsense/core.hpp"

namespace nextsense::digest {

struct Sha256::State {
    EVP_MD_CTX* ctx = nullptr;
    bool finished = false;
};

Sha256::Sha256() : state_(std::make_unique<State>())
{
    state_->ctx = EVP_MD_CTX_new();
    if (state_->ctx == nullptr || EVP_DigestInit_ex(state_->ctx, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256: cannot initialise digest context");
    }
}

Sha256::~Sha256()
{
    EVP_MD_CTX_free(state_->ctx);
}

void Sha256::update(std::span<const std::byte> bytes)
{
    if (state_->finished) {
        throw std::logic_error("sha256: update after hex_digest");
    }
    if (!bytes.empty()) {
        EVP_DigestUpdate(state_->ctx, bytes.data(), bytes.size());
    }
}

void Sha256::update(std::string_view text)
{
    update(std::as_bytes(std::span<const char>(text.data(), text.size())));
}

std::string Sha256::hex_digest()
{
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(state_->ctx, md.data(), &len);
    state_->finished = true;
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[md[i] >> 4]);
        out.push_back(kHex[md[i] & 0xF]);
    }
    return out;
}

std::string sha256_hex(std::span<const std::byte> bytes)
{
    Sha256 h;
    h.update(bytes);
    return h.hex_digest();
}

std::string sha256_hex(std::string_view text)
{
    Sha256 h;
    h.update(text);
    return h.hex_digest();
}

std::string sha256_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(path.string() + ": cannot open for reading");
    }
    Sha256 h;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        const auto got = in.gcount();
        if (got > 0) {
            h.update(std::string_view(buf.data(), static_cast<std::size_t>(got)));
        }
    }
    if (in.bad()) {
        throw IoError(path.string() + ": read failed");
    }
    return h.hex_digest();
}

} // namespace nextsense::digest
