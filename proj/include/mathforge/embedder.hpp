#pragma once

#include <cstdint>
#include <string>

#include "mathforge/types.hpp"

namespace mathforge::llm {

// Deterministic feature-hashing embedder: unigram and bigram tokens of the
// normalized text are hashed into a fixed-dim signed bag, then unit-normd.
// Backs mock mode so tests and offline runs need no network, yet identical
// texts still land on identical vectors and related texts stay close.
class HashingEmbedder {
public:
    static constexpr std::uint64_t kDefaultSeed = 0x5eedfacecafe1234ull;

    explicit HashingEmbedder(int dim, std::uint64_t seed = kDefaultSeed);

    EmbeddingVector embed(const std::string& text) const;

    int dim() const { return dim_; }

private:
    int dim_;
    std::uint64_t seed_;
};

}  // namespace mathforge::llm
