#include "mbrcomb/vocabulary.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "mbrcomb/errors.hpp"

namespace mbrcomb {

Vocabulary::Vocabulary() {
  add(kBosSurface);
  add(kEosSurface);
  add(kUnkSurface);
}

TokenId Vocabulary::add(std::string_view surface) {
  auto it = ids_.find(std::string(surface));
  if (it != ids_.end()) return it->second;
  auto id = static_cast<TokenId>(surfaces_.size());
  surfaces_.emplace_back(surface);
  ids_.emplace(surfaces_.back(), id);
  return id;
}

std::optional<TokenId> Vocabulary::find(std::string_view surface) const {
  auto it = ids_.find(std::string(surface));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::lookup(std::string_view surface) const {
  return find(surface).value_or(kUnk);
}

TokenId Vocabulary::at(std::string_view surface) const {
  auto id = find(surface);
  if (!id) throw VocabularyError("unknown token '" + std::string(surface) + "'");
  return *id;
}

const std::string& Vocabulary::surface(TokenId id) const {
  if (!contains(id)) {
    throw VocabularyError("token id " + std::to_string(id) + " outside vocabulary of size " +
                          std::to_string(size()));
  }
  return surfaces_[id];
}

TokenSeq Vocabulary::encode(const std::vector<std::string>& words) const {
  TokenSeq out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(lookup(w));
  return out;
}

TokenSeq Vocabulary::encode_line(std::string_view line) const {
  return encode(split_words(line));
}

std::string Vocabulary::decode(const TokenSeq& tokens, bool strip_sentinels) const {
  std::string out;
  for (TokenId t : tokens) {
    if (strip_sentinels && (t == kBos || t == kEos)) continue;
    if (!out.empty()) out += ' ';
    out += surface(t);
  }
  return out;
}

Vocabulary Vocabulary::read(std::istream& in) {
  Vocabulary v;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno <= 3) {
      if (line != v.surfaces_[lineno - 1]) {
        throw ParseError(lineno, "expected sentinel '" + v.surfaces_[lineno - 1] + "', found '" +
                                     line + "'");
      }
      continue;
    }
    if (line.empty() || line.find_first_of(" \t") != std::string::npos) {
      throw ParseError(lineno, "vocabulary entries must be non-empty and contain no whitespace");
    }
    if (v.find(line)) throw ParseError(lineno, "duplicate vocabulary entry '" + line + "'");
    v.add(line);
  }
  if (lineno < 3) throw ParseError(lineno, "vocabulary file lacks the three sentinel lines");
  return v;
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary file " + path);
  return read(in);
}

void Vocabulary::write(std::ostream& out) const {
  for (const auto& s : surfaces_) out << s << '\n';
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write vocabulary file " + path);
  write(out);
}

std::vector<std::string> split_words(std::string_view line) {
  std::vector<std::string> words;
  std::size_t i = 0;
  auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  };
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) words.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return words;
}

}  // namespace mbrcomb
