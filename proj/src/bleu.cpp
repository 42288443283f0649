#include "mbrcomb/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "mbrcomb/errors.hpp"
#include "mbrcomb/format.hpp"
#include "mbrcomb/utf8.hpp"
#include "mbrcomb/vocabulary.hpp"

namespace mbrcomb {

BleuMode parse_bleu_mode(std::string_view name) {
  if (name == "pretokenized") return BleuMode::kPretokenized;
  if (name == "international") return BleuMode::kInternational;
  throw ConfigError("unknown BLEU mode '" + std::string(name) + "' (pretokenized | international)");
}

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  for (int n = 0; n < kBleuOrder; ++n) {
    matches[n] += other.matches[n];
    totals[n] += other.totals[n];
  }
  hyp_length += other.hyp_length;
  ref_length += other.ref_length;
  return *this;
}

std::string BleuReport::to_string() const {
  std::string s = "bleu = " + format_fixed(bleu, 2);
  for (int n = 0; n < kBleuOrder; ++n) s += " p" + std::to_string(n + 1) + " = " + format_fixed(precisions[n], 6);
  s += " bp = " + format_fixed(brevity_penalty, 6);
  s += " hyp_len = " + std::to_string(hyp_length) + " ref_len = " + std::to_string(ref_length);
  return s;
}

namespace {

using NgramCounts = std::map<std::vector<std::string_view>, std::uint64_t>;

NgramCounts count_ngrams(const std::vector<std::string>& words, std::size_t n) {
  NgramCounts counts;
  if (words.size() < n) return counts;
  for (std::size_t i = 0; i + n <= words.size(); ++i) {
    std::vector<std::string_view> g(words.begin() + static_cast<std::ptrdiff_t>(i),
                                    words.begin() + static_cast<std::ptrdiff_t>(i + n));
    ++counts[g];
  }
  return counts;
}

}  // namespace

BleuStats sentence_stats(const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
  BleuStats stats;
  stats.hyp_length = hyp.size();
  stats.ref_length = ref.size();
  for (std::size_t n = 1; n <= kBleuOrder; ++n) {
    NgramCounts h = count_ngrams(hyp, n);
    NgramCounts r = count_ngrams(ref, n);
    std::uint64_t total = hyp.size() >= n ? hyp.size() - n + 1 : 0;
    std::uint64_t matched = 0;
    for (const auto& [g, c] : h) {
      auto it = r.find(g);
      if (it != r.end()) matched += std::min(c, it->second);
    }
    stats.matches[n - 1] = matched;
    stats.totals[n - 1] = total;
  }
  return stats;
}

BleuReport bleu_from_stats(const BleuStats& stats) {
  BleuReport report;
  report.hyp_length = stats.hyp_length;
  report.ref_length = stats.ref_length;
  bool all_positive = true;
  double log_sum = 0.0;
  for (int n = 0; n < kBleuOrder; ++n) {
    double p = stats.totals[n] ? static_cast<double>(stats.matches[n]) / static_cast<double>(stats.totals[n]) : 0.0;
    report.precisions[n] = p;
    if (p > 0.0) {
      log_sum += std::log(p);
    } else {
      all_positive = false;
    }
  }
  // An empty hypothesis side is treated as length 1 so BP stays positive.
  const double hyp_len = std::max<double>(1.0, static_cast<double>(stats.hyp_length));
  const double ref_len = static_cast<double>(stats.ref_length);
  double bp = hyp_len >= ref_len ? 1.0 : std::exp(1.0 - ref_len / hyp_len);
  report.brevity_penalty = std::max(bp, std::numeric_limits<double>::min());
  report.bleu = all_positive ? 100.0 * report.brevity_penalty * std::exp(log_sum / kBleuOrder) : 0.0;
  report.bleu = std::min(report.bleu, 100.0);
  return report;
}

BleuReport corpus_bleu_tokens(const std::vector<std::vector<std::string>>& hyps,
                              const std::vector<std::vector<std::string>>& refs) {
  if (hyps.size() != refs.size()) {
    throw InputError("BLEU needs one reference per hypothesis (" + std::to_string(hyps.size()) + " vs " +
                     std::to_string(refs.size()) + ")");
  }
  if (hyps.empty()) throw InputError("BLEU of an empty corpus is undefined");
  BleuStats total;
  for (std::size_t i = 0; i < hyps.size(); ++i) total += sentence_stats(hyps[i], refs[i]);
  return bleu_from_stats(total);
}

BleuReport corpus_bleu(const std::vector<std::string>& hyps, const std::vector<std::string>& refs, BleuMode mode) {
  if (hyps.size() != refs.size()) {
    throw InputError("BLEU needs one reference per hypothesis (" + std::to_string(hyps.size()) + " vs " +
                     std::to_string(refs.size()) + ")");
  }
  std::vector<std::vector<std::string>> h, r;
  h.reserve(hyps.size());
  r.reserve(refs.size());
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    if (mode == BleuMode::kInternational) {
      h.push_back(tokenize_international(hyps[i]));
      r.push_back(tokenize_international(refs[i]));
    } else {
      h.push_back(split_words(hyps[i]));
      r.push_back(split_words(refs[i]));
    }
  }
  return corpus_bleu_tokens(h, r);
}

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    auto hit = s.find(from, pos);
    if (hit == std::string::npos) break;
    out.append(s, pos, hit - pos);
    out.append(to);
    pos = hit + from.size();
  }
  out.append(s, pos, std::string::npos);
  s = std::move(out);
}

bool is_split_punct(char c) {
  return (c >= '{' && c <= '~') || (c >= '[' && c <= '`') || (c >= ' ' && c <= '&') || (c >= '(' && c <= '+') ||
         (c >= ':' && c <= '@') || c == '/';
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Perl-style s/(A)(B)/.../g over byte pairs: non-overlapping, left to right.
template <typename First, typename Second, typename Emit>
std::string pair_rule(const std::string& s, First first, Second second, Emit emit) {
  std::string out;
  out.reserve(s.size() + 8);
  std::size_t i = 0;
  while (i < s.size()) {
    if (i + 1 < s.size() && first(s[i]) && second(s[i + 1])) {
      emit(out, s[i], s[i + 1]);
      i += 2;
    } else {
      out.push_back(s[i]);
      ++i;
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> tokenize_international(std::string_view text) {
  std::string s(text);
  replace_all(s, "<skipped>", "");
  replace_all(s, "-\n", "");
  replace_all(s, "\n", " ");
  replace_all(s, "&quot;", "\"");
  replace_all(s, "&amp;", "&");
  replace_all(s, "&lt;", "<");
  replace_all(s, "&gt;", ">");

  std::string padded = " ";
  for (char c : s) {
    if (is_split_punct(c)) {
      padded += ' ';
      padded += c;
      padded += ' ';
    } else {
      padded += c;
    }
  }
  padded += ' ';

  auto period_comma = [](char c) { return c == '.' || c == ','; };
  auto non_digit = [](char c) { return !is_digit(c); };
  padded = pair_rule(padded, non_digit, period_comma, [](std::string& o, char a, char b) {
    o += a;
    o += ' ';
    o += b;
    o += ' ';
  });
  padded = pair_rule(padded, period_comma, non_digit, [](std::string& o, char a, char b) {
    o += ' ';
    o += a;
    o += ' ';
    o += b;
  });
  padded = pair_rule(padded, is_digit, [](char c) { return c == '-'; }, [](std::string& o, char a, char b) {
    o += a;
    o += ' ';
    o += b;
    o += ' ';
  });

  std::vector<std::string> tokens;
  const std::u32string cps = utf8::decode(padded);
  std::u32string current;
  for (char32_t c : cps) {
    if (utf8::is_space(c)) {
      if (!current.empty()) tokens.push_back(utf8::encode(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) tokens.push_back(utf8::encode(current));
  return tokens;
}

}  // namespace mbrcomb
