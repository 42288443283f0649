#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mbrcomb {

using TokenId = std::uint32_t;
using TokenSeq = std::vector<TokenId>;

inline constexpr TokenId kBos = 0;
inline constexpr TokenId kEos = 1;
inline constexpr TokenId kUnk = 2;

inline constexpr std::string_view kBosSurface = "<s>";
inline constexpr std::string_view kEosSurface = "</s>";
inline constexpr std::string_view kUnkSurface = "<unk>";

// Bidirectional surface <-> id map. Ids are dense and assigned in insertion
// order; the three sentinels always occupy ids 0, 1, 2.
class Vocabulary {
 public:
  Vocabulary();

  // Returns the existing id when the surface is already known.
  TokenId add(std::string_view surface);

  std::optional<TokenId> find(std::string_view surface) const;
  // Unknown surfaces map to kUnk.
  TokenId lookup(std::string_view surface) const;
  // Throws VocabularyError for unknown surfaces.
  TokenId at(std::string_view surface) const;

  const std::string& surface(TokenId id) const;
  bool contains(TokenId id) const { return id < surfaces_.size(); }
  std::size_t size() const { return surfaces_.size(); }

  TokenSeq encode(const std::vector<std::string>& words) const;
  TokenSeq encode_line(std::string_view line) const;
  // Space-joined surfaces; sentinels are dropped when strip_sentinels is set.
  std::string decode(const TokenSeq& tokens, bool strip_sentinels = true) const;

  // One surface per line, line number = id; the first three lines must be
  // the sentinels.
  static Vocabulary read(std::istream& in);
  static Vocabulary load(const std::string& path);
  void write(std::ostream& out) const;
  void save(const std::string& path) const;

  bool operator==(const Vocabulary& other) const { return surfaces_ == other.surfaces_; }

 private:
  std::vector<std::string> surfaces_;
  std::unordered_map<std::string, TokenId> ids_;
};

// Splits on ASCII whitespace.
std::vector<std::string> split_words(std::string_view line);

}  // namespace mbrcomb
