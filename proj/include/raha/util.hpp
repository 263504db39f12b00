// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace raha {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input data or configuration.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Template loading/rendering problems.
class TemplateError : public Error {
public:
    using Error::Error;
};

// Backend transport / generation failures. Transient errors are retried
// by the gateway; terminal ones propagate to the caller.
class GatewayError : public Error {
public:
    explicit GatewayError(const std::string& msg, bool transient = false)
        : Error(msg), transient_(transient) {}
    bool transient() const { return transient_; }

private:
    bool transient_;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Lowercase hex SHA-256 of the input bytes.
std::string sha256_hex(std::string_view data);

// First 8 bytes of SHA-256, big-endian. Stable across platforms, used
// wherever a reproducible 64-bit key for a string is needed.
std::uint64_t stable_hash64(std::string_view data);

// Write-to-temp-then-rename. Creates parent directories as needed.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

std::string trim(std::string_view s);

// Truncate to at most `max_chars` code points without splitting a
// multi-byte UTF-8 sequence.
std::string utf8_truncate(std::string_view s, std::size_t max_chars);

// Fixed-decimal formatting ("%.4f" style); used for prompt rendering.
std::string format_fixed(double value, int decimals);

// Restrict a sample id to a filesystem-safe token; bytes outside
// [A-Za-z0-9._-] are hex-escaped as %XX.
std::string sanitize_filename(std::string_view id);

// splitmix64: the project-wide deterministic PRNG step. All seeded
// randomness goes through this so runs reproduce bit-exactly across
// platforms (std:: distributions do not guarantee that).
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Map 64 random bits to [0, 1).
inline double unit_double(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Map 64 random bits to [-1, 1).
inline double symmetric_double(std::uint64_t bits) {
    return 2.0 * unit_double(bits) - 1.0;
}

}  // namespace raha
