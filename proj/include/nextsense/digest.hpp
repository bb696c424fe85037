// SPDX-License-Identifier: Apache-2.0
//
// SHA-256 digests of dataset payloads, rendered as lowercase hex.

#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace nextsense::digest {

class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(std::span<const std::byte> bytes);
    void update(std::string_view text);

    /// Finishes the hash; the object must not be updated afterwards.
    std::string hex_digest();

private:
    struct State;
    std::unique_ptr<State> state_;
};

std::string sha256_hex(std::span<const std::byte> bytes);
std::string sha256_hex(std::string_view text);

/// Streams a file through SHA-256. Throws IoError if it cannot be read.
std::string sha256_file(const std::filesystem::path& path);

} // namespace nextsense::digest
