#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "mbrcomb/hashing.hpp"
#include "mbrcomb/scoring.hpp"

namespace mbrcomb {

// Successor counts for one conditioning context.
struct ContextCounts {
  std::uint64_t total = 0;
  std::vector<std::pair<TokenId, std::uint64_t>> successors;  // sorted by id
};

// Sparse conditional count table with additive smoothing over the predictive
// support (every vocabulary entry except BOS).
class AdditiveTable {
 public:
  AdditiveTable() = default;
  AdditiveTable(std::size_t vocab_size, double add_k);

  void add(const TokenSeq& context, TokenId token, std::uint64_t count = 1);
  // Call once after the last add().
  void finalize();

  double prob(const TokenSeq& context, TokenId token) const;
  // Fills out[v] = P(v | context) for every id; BOS gets 0.
  void distribution(const TokenSeq& context, std::vector<double>& out) const;

  std::size_t vocab_size() const { return vocab_size_; }
  double add_k() const { return add_k_; }
  const ContextCounts* find(const TokenSeq& context) const;

 private:
  std::size_t vocab_size_ = 0;
  double add_k_ = 1.0;
  std::unordered_map<TokenSeq, std::unordered_map<TokenId, std::uint64_t>, TokenSeqHash> raw_;
  std::unordered_map<TokenSeq, ContextCounts, TokenSeqHash> counts_;
};

// Add-k smoothed n-gram language model over the target side. Ignores the
// source sentence. Sentences are modelled as BOS^(order-1) w_1 .. w_n EOS.
class NgramLm final : public FullPosteriorScorer {
 public:
  using FullPosteriorScorer::step;
  NgramLm(Vocabulary vocab, int order, double add_k, AdditiveTable table);

  std::size_t vocab_size() const override { return vocab_.size(); }
  void step(std::span<const TokenId> source, std::span<const TokenId> prefix,
            std::vector<double>& out) const override;

  double prob(std::span<const TokenId> prefix, TokenId token) const;

  const Vocabulary& vocabulary() const { return vocab_; }
  int order() const { return order_; }
  double add_k() const { return add_k_; }

 private:
  TokenSeq context_of(std::span<const TokenId> prefix) const;

  Vocabulary vocab_;
  int order_;
  double add_k_;
  AdditiveTable table_;
};

// Builds the vocabulary from base plus every corpus word, then counts.
// Throws ConfigError on an empty corpus, order outside 1..4 or add_k <= 0.
NgramLm train_ngram_lm(const std::vector<std::vector<std::string>>& corpus, int order, double add_k,
                       Vocabulary base = Vocabulary());

enum class Direction { kLeftToRight, kRightToLeft };

// Desk-scale translation stand-in: a position-aligned lexical channel
// P(y_t | x_t) mixed with a target n-gram LM,
//   P(y_t | y_<t, x) = mix * P_lex(y_t | x_t) + (1 - mix) * P_lm(y_t | y_<t).
// Source positions past the end read as EOS. A right-to-left instance is
// trained on reversed sentence pairs and reads its source back to front, so
// its hypotheses come out reversed.
class ChannelLmScorer final : public FullPosteriorScorer {
 public:
  using FullPosteriorScorer::step;
  struct Options {
    int order = 2;
    double add_k = 0.1;
    double lexical_add_k = 0.01;
    double mix = 0.7;
    Direction direction = Direction::kLeftToRight;
  };

  ChannelLmScorer(Vocabulary vocab, Options options, NgramLm lm, AdditiveTable lexicon);

  std::size_t vocab_size() const override { return vocab_.size(); }
  void step(std::span<const TokenId> source, std::span<const TokenId> prefix,
            std::vector<double>& out) const override;

  const Vocabulary& vocabulary() const { return vocab_; }
  const Options& options() const { return options_; }

 private:
  Vocabulary vocab_;
  Options options_;
  NgramLm lm_;
  AdditiveTable lexicon_;
};

// Throws ConfigError when the pair lists differ in length, are empty, or an
// option is out of range (mix outside [0,1]).
ChannelLmScorer train_channel_lm(const std::vector<std::vector<std::string>>& sources,
                                 const std::vector<std::vector<std::string>>& targets,
                                 ChannelLmScorer::Options options, Vocabulary base = Vocabulary());

}  // namespace mbrcomb
