#include "mbrcomb/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>

#include "mbrcomb/errors.hpp"
#include "mbrcomb/parallel.hpp"
#include "mbrcomb/utf8.hpp"

namespace mbrcomb {

namespace {

constexpr std::array<std::string_view, kFilterRuleCount> kRuleNames = {
    "malformed", "length-chars", "length-words",   "language",       "max-word-length",
    "html-tag",  "min-length",   "char-ratio",     "digit-mismatch", "terminal-punct",
};

struct Side32 {
  std::u32string text;  // trimmed
  std::vector<std::u32string_view> words;
};

Side32 analyse(std::string_view raw, const char* side) {
  Side32 s;
  try {
    s.text = utf8::decode(raw);
  } catch (const InputError& e) {
    throw InputError(std::string(side) + ": " + e.what());
  }
  std::size_t b = 0;
  std::size_t e = s.text.size();
  while (b < e && utf8::is_space(s.text[b])) ++b;
  while (e > b && utf8::is_space(s.text[e - 1])) --e;
  s.text = s.text.substr(b, e - b);
  std::u32string_view view(s.text);
  std::size_t i = 0;
  while (i < view.size()) {
    while (i < view.size() && utf8::is_space(view[i])) ++i;
    std::size_t j = i;
    while (j < view.size() && !utf8::is_space(view[j])) ++j;
    if (j > i) s.words.push_back(view.substr(i, j - i));
    i = j;
  }
  return s;
}

bool is_ascii_letter(char32_t c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

std::u32string lower_ascii(std::u32string_view w) {
  std::u32string out(w);
  for (auto& c : out)
    if (c >= 'A' && c <= 'Z') c = c - 'A' + 'a';
  return out;
}

const std::set<std::u32string>& english_stopwords() {
  static const std::set<std::u32string> words = {
      U"the", U"and", U"of",  U"to",   U"is",    U"that", U"it",   U"for",  U"with",
      U"was", U"on",  U"are", U"this", U"be",    U"by",   U"as",   U"at",   U"from",
      U"have", U"not", U"or", U"which", U"you",  U"we",   U"they", U"has",  U"were"};
  return words;
}

const std::set<std::u32string>& german_stopwords() {
  static const std::set<std::u32string> words = {
      U"der", U"die", U"das",  U"und", U"ist",  U"nicht", U"ein",  U"eine", U"zu",
      U"mit", U"den", U"von",  U"auf", U"für",  U"sich",  U"des",  U"dem",  U"im",
      U"es",  U"auch", U"wir", U"sie", U"ich",  U"wird",  U"werden", U"sind", U"wurde"};
  return words;
}

}  // namespace

std::string_view rule_name(FilterRule rule) { return kRuleNames[static_cast<std::size_t>(rule)]; }

std::optional<FilterRule> parse_rule_name(std::string_view name) {
  for (std::size_t i = 0; i < kRuleNames.size(); ++i)
    if (kRuleNames[i] == name) return static_cast<FilterRule>(i);
  return std::nullopt;
}

bool default_language_predicate(std::u32string_view text, std::string_view language) {
  std::size_t cjk = 0;
  std::size_t latin = 0;
  for (char32_t c : text) {
    if (utf8::is_cjk(c)) {
      ++cjk;
    } else if (utf8::is_latin_letter(c)) {
      ++latin;
    }
  }
  if (language == "zh" || language == "ja") return cjk > 0 && 2 * cjk >= cjk + latin;
  if (latin == 0 || 2 * latin < cjk + latin) return false;
  if (language != "en" && language != "de") return true;

  std::size_t en = 0;
  std::size_t de = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !(is_ascii_letter(text[i]) || utf8::is_latin_letter(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && (is_ascii_letter(text[j]) || utf8::is_latin_letter(text[j]))) ++j;
    if (j > i) {
      std::u32string w = lower_ascii(text.substr(i, j - i));
      if (english_stopwords().count(w)) ++en;
      if (german_stopwords().count(w)) ++de;
      for (char32_t c : w)
        if (c == U'ä' || c == U'ö' || c == U'ü' || c == U'ß' || c == U'Ä' || c == U'Ö' || c == U'Ü') ++de;
    }
    i = j;
  }
  return language == "en" ? en >= de : de >= en;
}

bool contains_html_tag(std::u32string_view text) {
  for (std::size_t i = 0; i + 1 < text.size(); ++i) {
    if (text[i] != U'<') continue;
    const char32_t start = text[i + 1];
    if (!(is_ascii_letter(start) || start == U'/' || start == U'!')) continue;
    for (std::size_t j = i + 2; j < text.size(); ++j) {
      const char32_t c = text[j];
      if (c == U'>') return true;
      if (c == U'<' || c == U'\n') break;
    }
  }
  return false;
}

std::string digit_signature(std::u32string_view text) {
  std::string sig;
  for (char32_t c : text) {
    int d = utf8::digit_value(c);
    if (d >= 0) sig.push_back(static_cast<char>('0' + d));
  }
  return sig;
}

bool ends_with_terminal_punct(std::u32string_view text, const FilterOptions& options) {
  if (text.empty()) return false;
  auto is_terminal = [&](char32_t c) { return options.terminal_punctuation.find(c) != std::u32string::npos; };
  char32_t last = text.back();
  if (is_terminal(last)) return true;
  if (options.closing_marks.find(last) != std::u32string::npos && text.size() >= 2) {
    return is_terminal(text[text.size() - 2]);
  }
  return false;
}

FilterVerdict filter_pair(const SentencePair& pair, bool aggressive, const FilterOptions& options) {
  const Side32 src = analyse(pair.src, "source");
  const Side32 tgt = analyse(pair.tgt, "target");
  auto reject = [](FilterRule rule) { return FilterVerdict{false, rule}; };

  for (const Side32* s : {&src, &tgt}) {
    if (s->text.size() < options.min_chars || s->text.size() > options.max_chars) return reject(FilterRule::kCharLength);
  }
  for (const Side32* s : {&src, &tgt}) {
    if (s->words.size() < options.min_words || s->words.size() > options.max_words) {
      return reject(FilterRule::kWordLength);
    }
  }
  if (options.language_predicate) {
    if (!options.src_language.empty() && !options.language_predicate(src.text, options.src_language)) {
      return reject(FilterRule::kLanguage);
    }
    if (!options.tgt_language.empty() && !options.language_predicate(tgt.text, options.tgt_language)) {
      return reject(FilterRule::kLanguage);
    }
  }
  if (!aggressive) return {};

  for (const Side32* s : {&src, &tgt})
    for (auto w : s->words)
      if (w.size() > options.max_word_chars) return reject(FilterRule::kMaxWordLength);
  if (contains_html_tag(src.text) || contains_html_tag(tgt.text)) return reject(FilterRule::kHtmlTag);
  if (src.words.size() < options.aggressive_min_words || tgt.words.size() < options.aggressive_min_words) {
    return reject(FilterRule::kMinLength);
  }
  const double sc = static_cast<double>(src.text.size());
  const double tc = static_cast<double>(tgt.text.size());
  if (sc > options.max_char_ratio * tc || tc > options.max_char_ratio * sc) return reject(FilterRule::kCharRatio);
  if (digit_signature(src.text) != digit_signature(tgt.text)) return reject(FilterRule::kDigitMismatch);
  if (!ends_with_terminal_punct(src.text, options) || !ends_with_terminal_punct(tgt.text, options)) {
    return reject(FilterRule::kTerminalPunct);
  }
  return {};
}

std::uint64_t FilterStats::rejected_total() const {
  std::uint64_t total = 0;
  for (auto n : rejected) total += n;
  return total;
}

void FilterStats::write(std::ostream& out) const {
  for (std::size_t i = 0; i < kFilterRuleCount; ++i) out << kRuleNames[i] << '\t' << rejected[i] << '\n';
}

FilterResult filter_corpus(const std::vector<SentencePair>& pairs, bool aggressive, const FilterOptions& options,
                           std::size_t jobs) {
  std::vector<FilterVerdict> verdicts(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t i) {
    try {
      verdicts[i] = filter_pair(pairs[i], aggressive, options);
    } catch (const InputError&) {
      verdicts[i] = FilterVerdict{false, FilterRule::kMalformed};
    }
  });
  FilterResult result;
  result.stats.seen = pairs.size();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (verdicts[i].keep) {
      result.kept.push_back(pairs[i]);
    } else {
      ++result.stats.rejected[static_cast<std::size_t>(*verdicts[i].rejected_by)];
    }
  }
  result.stats.kept = result.kept.size();
  return result;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::uint64_t bound = i;
    const std::uint64_t limit = std::mt19937_64::max() - (std::mt19937_64::max() % bound + 1) % bound;
    std::uint64_t r;
    do {
      r = rng();
    } while (r > limit);
    std::swap(perm[i - 1], perm[static_cast<std::size_t>(r % bound)]);
  }
  return perm;
}

std::vector<SentencePair> compose(const std::vector<std::vector<SentencePair>>& corpora,
                                  const std::vector<std::size_t>& factors, std::uint64_t seed) {
  if (corpora.size() != factors.size()) throw ConfigError("one oversampling factor per corpus required");
  std::vector<const SentencePair*> pool;
  for (std::size_t c = 0; c < corpora.size(); ++c) {
    if (factors[c] < 1) throw ConfigError("oversampling factors must be >= 1");
    for (std::size_t rep = 0; rep < factors[c]; ++rep)
      for (const auto& p : corpora[c]) pool.push_back(&p);
  }
  std::vector<SentencePair> out;
  out.reserve(pool.size());
  for (std::size_t i : seeded_permutation(pool.size(), seed)) out.push_back(*pool[i]);
  return out;
}

std::vector<SentencePair> compose(const CompositionPlan& plan) {
  std::vector<std::vector<SentencePair>> corpora;
  std::vector<std::size_t> factors;
  for (const auto& spec : plan.corpora) {
    std::ifstream in(spec.path);
    if (!in) throw ConfigError("cannot read corpus " + spec.path);
    std::string tag = spec.path.substr(spec.path.find_last_of('/') + 1);
    try {
      corpora.push_back(read_tsv(in, tag));
    } catch (const ParseError& e) {
      throw ConfigError(spec.path + ": " + e.what());
    }
    factors.push_back(spec.factor);
  }
  return compose(corpora, factors, plan.seed);
}

std::vector<SentencePair> read_tsv(std::istream& in, const std::string& tag) {
  std::vector<SentencePair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(lineno, "expected 'source<TAB>target'");
    pairs.push_back(SentencePair{line.substr(0, tab), line.substr(tab + 1), tag});
  }
  return pairs;
}

std::vector<SentencePair> read_parallel(std::istream& src, std::istream& tgt, const std::string& tag) {
  std::vector<SentencePair> pairs;
  std::string a, b;
  while (true) {
    bool has_a = static_cast<bool>(std::getline(src, a));
    bool has_b = static_cast<bool>(std::getline(tgt, b));
    if (!has_a && !has_b) break;
    if (has_a != has_b) throw InputError("source and target files differ in line count");
    if (!a.empty() && a.back() == '\r') a.pop_back();
    if (!b.empty() && b.back() == '\r') b.pop_back();
    pairs.push_back(SentencePair{a, b, tag});
  }
  return pairs;
}

void write_tsv(std::ostream& out, const std::vector<SentencePair>& pairs) {
  for (const auto& p : pairs) out << p.src << '\t' << p.tgt << '\n';
}

}  // namespace mbrcomb
