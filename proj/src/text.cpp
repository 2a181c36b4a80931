#include "mathforge/text.hpp"

#include <cctype>

namespace mathforge {

namespace {

bool is_space_byte(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
}

}  // namespace

std::string normalize_text(const std::string& raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (unsigned char c : raw) {
        if (is_space_byte(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(c));
    }
    return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::string digest_hex(const std::string& bytes) {
    // FNV-1a with 128-bit state via unsigned __int128.
    using u128 = unsigned __int128;
    constexpr u128 kPrime = (u128(0x0000000001000000ull) << 64) | 0x000000000000013Bull;
    u128 h = (u128(0x6c62272e07bb0142ull) << 64) | 0x62b821756295c58dull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= kPrime;
    }
    static const char* hex = "0123456789abcdef";
    std::string out(32, '0');
    for (int i = 31; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = hex[static_cast<unsigned>(h & 0xF)];
        h >>= 4;
    }
    return out;
}

std::string content_hash(const std::string& text) {
    return digest_hex(normalize_text(text));
}

std::vector<std::string> split_whitespace(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (is_space_byte(c)) {
            if (!cur.empty()) {
                out.push_back(cur);
                cur.clear();
            }
        } else {
            cur.push_back(static_cast<char>(c));
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

}  // namespace mathforge
