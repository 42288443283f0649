#include "mbrcomb/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mbrcomb/errors.hpp"

namespace mbrcomb {

bool Hypothesis::complete() const {
  return !tokens.empty() && tokens.back() == kEos &&
         std::count(tokens.begin(), tokens.end(), kEos) == 1;
}

bool ranks_before(double score_a, const TokenSeq& a, double score_b, const TokenSeq& b) {
  if (score_a != score_b) return score_a > score_b;
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

void NbestList::canonicalize() {
  std::stable_sort(entries.begin(), entries.end(), [](const Hypothesis& x, const Hypothesis& y) {
    return ranks_before(x.logprob, x.tokens, y.logprob, y.tokens);
  });
  std::vector<Hypothesis> unique;
  unique.reserve(entries.size());
  for (auto& h : entries) {
    bool seen = std::any_of(unique.begin(), unique.end(),
                            [&](const Hypothesis& u) { return u.tokens == h.tokens; });
    if (!seen) unique.push_back(std::move(h));
  }
  entries = std::move(unique);
}

bool NbestList::is_canonical() const {
  for (std::size_t i = 1; i < entries.size(); ++i) {
    const auto& a = entries[i - 1];
    const auto& b = entries[i];
    if (!ranks_before(a.logprob, a.tokens, b.logprob, b.tokens)) return false;
  }
  for (std::size_t i = 0; i < entries.size(); ++i)
    for (std::size_t j = i + 1; j < entries.size(); ++j)
      if (entries[i].tokens == entries[j].tokens) return false;
  return true;
}

namespace {

void check_ids(const FullPosteriorScorer& scorer, std::span<const TokenId> ids, const char* what) {
  for (TokenId t : ids) {
    if (t >= scorer.vocab_size()) {
      throw VocabularyError(std::string(what) + " token id " + std::to_string(t) +
                            " outside vocabulary of size " + std::to_string(scorer.vocab_size()));
    }
  }
}

}  // namespace

double score_step(const FullPosteriorScorer& scorer, std::span<const TokenId> source,
                  std::span<const TokenId> prefix, TokenId token) {
  check_ids(scorer, prefix, "prefix");
  check_ids(scorer, std::span<const TokenId>(&token, 1), "target");
  if (std::find(prefix.begin(), prefix.end(), kEos) != prefix.end()) {
    throw InputError("prefix already contains EOS");
  }
  std::vector<double> row;
  scorer.step(source, prefix, row);
  return row[token];
}

double sequence_logprob(const FullPosteriorScorer& scorer, std::span<const TokenId> source,
                        const TokenSeq& hypothesis) {
  Hypothesis h{hypothesis, 0.0};
  if (!h.complete()) throw InputError("sequence_logprob requires a complete hypothesis");
  check_ids(scorer, hypothesis, "hypothesis");
  double total = 0.0;
  std::vector<double> row;
  std::span<const TokenId> all(hypothesis);
  for (std::size_t t = 0; t < hypothesis.size(); ++t) {
    scorer.step(source, all.first(t), row);
    total += row[hypothesis[t]];
  }
  return total;
}

TableScorer::TableScorer(std::size_t vocab_size, std::size_t context_length,
                         std::vector<double> default_row)
    : vocab_size_(vocab_size),
      context_length_(context_length),
      max_logprob_(-std::numeric_limits<double>::infinity()) {
  if (vocab_size <= kUnk) throw ConfigError("table scorer vocabulary must include the sentinels");
  check_row(default_row);
  default_row_ = std::move(default_row);
}

TableScorer TableScorer::uniform(std::size_t vocab_size, std::span<const TokenId> support) {
  if (support.empty()) throw ConfigError("uniform scorer needs a non-empty support");
  std::vector<double> row(vocab_size, -std::numeric_limits<double>::infinity());
  const double lp = -std::log(static_cast<double>(support.size()));
  for (TokenId t : support) {
    if (t >= vocab_size) throw VocabularyError("support token outside vocabulary");
    row[t] = lp;
  }
  return TableScorer(vocab_size, 0, std::move(row));
}

void TableScorer::check_row(const std::vector<double>& row) {
  if (row.size() != vocab_size_) {
    throw ConfigError("table row has " + std::to_string(row.size()) + " entries, expected " +
                      std::to_string(vocab_size_));
  }
  for (double v : row)
    if (std::isfinite(v)) max_logprob_ = std::max(max_logprob_, v);
}

void TableScorer::set(const TokenSeq& context, std::vector<double> row) {
  if (context.size() != context_length_) throw ConfigError("table context has the wrong length");
  for (TokenId t : context)
    if (t >= vocab_size_) throw VocabularyError("table context token outside vocabulary");
  check_row(row);
  rows_[context] = std::move(row);
}

void TableScorer::step(std::span<const TokenId> /*source*/, std::span<const TokenId> prefix,
                       std::vector<double>& out) const {
  for (TokenId t : prefix)
    if (t >= vocab_size_) throw VocabularyError("prefix token outside table vocabulary");
  const std::vector<double>* row = &default_row_;
  if (context_length_ > 0 && !rows_.empty()) {
    TokenSeq context(context_length_, kBos);
    std::size_t take = std::min(context_length_, prefix.size());
    std::copy(prefix.end() - static_cast<std::ptrdiff_t>(take), prefix.end(),
              context.end() - static_cast<std::ptrdiff_t>(take));
    auto it = rows_.find(context);
    if (it != rows_.end()) row = &it->second;
  } else if (context_length_ == 0 && !rows_.empty()) {
    row = &rows_.begin()->second;
  }
  out = *row;
}

}  // namespace mbrcomb
