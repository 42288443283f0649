#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "mbrcomb/vocabulary.hpp"

namespace mbrcomb {

// FNV-1a over token ids.
inline std::size_t hash_tokens(std::span<const TokenId> tokens) {
  std::uint64_t h = 1469598103934665603ull;
  for (TokenId t : tokens) {
    for (int shift = 0; shift < 32; shift += 8) {
      h ^= (t >> shift) & 0xffu;
      h *= 1099511628211ull;
    }
  }
  return static_cast<std::size_t>(h);
}

struct TokenSeqHash {
  std::size_t operator()(const TokenSeq& seq) const { return hash_tokens(seq); }
};

}  // namespace mbrcomb
