#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mathforge {

// Collapses every run of whitespace (spaces, tabs, CR, LF, FF, VT) to a single
// space and trims both ends. Idempotent; total on arbitrary bytes.
std::string normalize_text(const std::string& raw);

// 128-bit FNV-1a digest of normalize_text(text), as 32 lowercase hex chars.
// Whitespace-equivalent texts hash identically.
std::string content_hash(const std::string& text);

// Same digest over the raw bytes, no normalization.
std::string digest_hex(const std::string& bytes);

// 64-bit FNV-1a over raw bytes (no normalization).
std::uint64_t fnv1a64(const std::string& bytes);

// Fully specified 64-bit mixer, stable across platforms.
std::uint64_t splitmix64(std::uint64_t x);

std::vector<std::string> split_whitespace(const std::string& text);

}  // namespace mathforge
