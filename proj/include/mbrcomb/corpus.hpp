#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mbrcomb {

struct SentencePair {
  std::string src;
  std::string tgt;
  std::string corpus_tag;

  bool operator==(const SentencePair&) const = default;
};

// Rules in evaluation order.
enum class FilterRule : int {
  kMalformed = 0,
  kCharLength,
  kWordLength,
  kLanguage,
  kMaxWordLength,
  kHtmlTag,
  kMinLength,
  kCharRatio,
  kDigitMismatch,
  kTerminalPunct,
};
inline constexpr std::size_t kFilterRuleCount = 10;

std::string_view rule_name(FilterRule rule);
std::optional<FilterRule> parse_rule_name(std::string_view name);

struct FilterVerdict {
  bool keep = true;
  std::optional<FilterRule> rejected_by;
};

enum class Side { kSource, kTarget };

// Language check hook: returns true when text plausibly is in `language`.
using LanguagePredicate = std::function<bool(std::u32string_view text, std::string_view language)>;

// Script proportions separate CJK from Latin text; stopword counts and
// German-specific letters separate English from German. Latin text without
// any evidence passes for either.
bool default_language_predicate(std::u32string_view text, std::string_view language);

struct FilterOptions {
  // Gentle checks, applied to each side.
  std::size_t min_words = 1;
  std::size_t max_words = 250;
  std::size_t min_chars = 1;
  std::size_t max_chars = 2000;
  // Empty: language check disabled for that side.
  std::string src_language;
  std::string tgt_language;
  LanguagePredicate language_predicate = default_language_predicate;

  // Aggressive (web-crawl) rules.
  std::size_t max_word_chars = 40;
  std::size_t aggressive_min_words = 4;
  double max_char_ratio = 3.0;
  std::u32string terminal_punctuation = U".!?…。！？；";
  std::u32string closing_marks = U"\"')]}»”’」』》〉】";
};

// Evaluates the gentle rules, then (when aggressive) the web-crawl rules, and
// reports the first failure. Throws InputError with the byte offset when a
// side is not valid UTF-8.
FilterVerdict filter_pair(const SentencePair& pair, bool aggressive, const FilterOptions& options = {});

struct FilterStats {
  std::array<std::uint64_t, kFilterRuleCount> rejected{};
  std::uint64_t seen = 0;
  std::uint64_t kept = 0;

  std::uint64_t rejected_total() const;
  std::uint64_t count(FilterRule rule) const { return rejected[static_cast<std::size_t>(rule)]; }
  // "rule\tcount" for every rule, in evaluation order.
  void write(std::ostream& out) const;
};

struct FilterResult {
  std::vector<SentencePair> kept;
  FilterStats stats;
};

// Order-preserving. Invalid UTF-8 is counted under `malformed`.
FilterResult filter_corpus(const std::vector<SentencePair>& pairs, bool aggressive, const FilterOptions& options = {},
                           std::size_t jobs = 1);

// Individual predicates, exposed for testing.
bool contains_html_tag(std::u32string_view text);
std::string digit_signature(std::u32string_view text);
bool ends_with_terminal_punct(std::u32string_view text, const FilterOptions& options);

struct CorpusSpec {
  std::string path;
  std::size_t factor = 1;
};

struct CompositionPlan {
  std::vector<CorpusSpec> corpora;
  std::uint64_t seed = 0;
};

// Each corpus repeated `factor` times, then one global seeded shuffle.
// Throws ConfigError for factor 0.
std::vector<SentencePair> compose(const std::vector<std::vector<SentencePair>>& corpora,
                                  const std::vector<std::size_t>& factors, std::uint64_t seed);
// Reads every corpus as a tab-separated file; unreadable files raise
// ConfigError naming the path.
std::vector<SentencePair> compose(const CompositionPlan& plan);

// Fisher-Yates driven by mt19937_64 with rejection sampling, so the result
// is identical on every platform.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

// "src\ttgt" per line. The tag is attached to every pair.
std::vector<SentencePair> read_tsv(std::istream& in, const std::string& tag);
std::vector<SentencePair> read_parallel(std::istream& src, std::istream& tgt, const std::string& tag);
void write_tsv(std::ostream& out, const std::vector<SentencePair>& pairs);

}  // namespace mbrcomb
