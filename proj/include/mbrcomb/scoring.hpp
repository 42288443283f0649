#pragma once

#include <map>
#include <span>
#include <vector>

#include "mbrcomb/vocabulary.hpp"

namespace mbrcomb {

struct Hypothesis {
  TokenSeq tokens;
  // Natural-log score. Not necessarily <= 0: combined scores include raw
  // n-gram posteriors.
  double logprob = 0.0;

  // Exactly one EOS, at the end.
  bool complete() const;
};

struct NbestList {
  std::size_t source_id = 0;
  TokenSeq source;
  std::vector<Hypothesis> entries;

  // Sorts descending by logprob (ties: ascending token-id lexicographic
  // order) and drops repeated token sequences, keeping the best-scored copy.
  void canonicalize();
  bool is_canonical() const;
};

// Strict weak order used for every ranking in the toolkit: higher score
// first, then lexicographically smaller token sequence.
bool ranks_before(double score_a, const TokenSeq& a, double score_b, const TokenSeq& b);

// A left-to-right model: log P(y_t | y_<t, x) for every vocabulary entry.
class FullPosteriorScorer {
 public:
  virtual ~FullPosteriorScorer() = default;

  virtual std::size_t vocab_size() const = 0;

  // Writes vocab_size() log-probabilities into out (resized as needed).
  // Tokens the model cannot emit get -infinity. Implementations must be
  // pure reads so scorers can be shared across decoding threads.
  virtual void step(std::span<const TokenId> source, std::span<const TokenId> prefix,
                    std::vector<double>& out) const = 0;

  // Upper bound on any finite value step() returns. Normalized models
  // return 0.
  virtual double max_step_logprob() const { return 0.0; }

  std::vector<double> step(std::span<const TokenId> source, std::span<const TokenId> prefix) const {
    std::vector<double> out;
    step(source, prefix, out);
    return out;
  }
};

// log P(token | prefix, source). Throws VocabularyError for ids outside the
// scorer vocabulary and InputError when the prefix already holds EOS.
double score_step(const FullPosteriorScorer& scorer, std::span<const TokenId> source,
                  std::span<const TokenId> prefix, TokenId token);

// Left-to-right sum of score_step over a complete hypothesis (EOS included).
double sequence_logprob(const FullPosteriorScorer& scorer, std::span<const TokenId> source,
                        const TokenSeq& hypothesis);

// Explicit conditional tables keyed on the last context_length prefix tokens
// (BOS-padded). Contexts without an entry fall back to the default row. Any
// out-of-vocabulary id is an error.
class TableScorer final : public FullPosteriorScorer {
 public:
  using FullPosteriorScorer::step;
  TableScorer(std::size_t vocab_size, std::size_t context_length, std::vector<double> default_row);

  // Uniform over support, -infinity elsewhere.
  static TableScorer uniform(std::size_t vocab_size, std::span<const TokenId> support);

  void set(const TokenSeq& context, std::vector<double> row);

  std::size_t vocab_size() const override { return vocab_size_; }
  std::size_t context_length() const { return context_length_; }
  void step(std::span<const TokenId> source, std::span<const TokenId> prefix,
            std::vector<double>& out) const override;
  double max_step_logprob() const override { return max_logprob_; }

 private:
  void check_row(const std::vector<double>& row);

  std::size_t vocab_size_;
  std::size_t context_length_;
  std::vector<double> default_row_;
  std::map<TokenSeq, std::vector<double>> rows_;
  double max_logprob_;
};

}  // namespace mbrcomb
