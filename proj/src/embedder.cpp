#include "mathforge/embedder.hpp"

#include <stdexcept>

#include "mathforge/text.hpp"

namespace mathforge::llm {

HashingEmbedder::HashingEmbedder(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim <= 0) throw std::invalid_argument("embedding dim must be positive");
}

EmbeddingVector HashingEmbedder::embed(const std::string& text) const {
    EmbeddingVector v;
    v.values.assign(static_cast<std::size_t>(dim_), 0.0);

    const auto tokens = split_whitespace(normalize_text(text));
    auto bump = [&](const std::string& feature) {
        const std::uint64_t h = splitmix64(fnv1a64(feature) ^ seed_);
        const std::size_t idx = static_cast<std::size_t>(h % static_cast<std::uint64_t>(dim_));
        v.values[idx] += (h >> 63) ? -1.0 : 1.0;
    };
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        bump(tokens[i]);
        if (i + 1 < tokens.size()) bump(tokens[i] + "\x1f" + tokens[i + 1]);
    }

    if (v.norm() == 0.0) {
        // Empty or fully cancelling text: a fixed deterministic direction.
        v.values[static_cast<std::size_t>(splitmix64(seed_) % static_cast<std::uint64_t>(dim_))] = 1.0;
    }
    v.normalize();
    return v;
}

}  // namespace mathforge::llm
