#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "mbrcomb/hashing.hpp"
#include "mbrcomb/scoring.hpp"

namespace mbrcomb {

inline constexpr int kMaxNgramOrder = 4;

struct Ngram {
  std::array<TokenId, kMaxNgramOrder> tokens{};
  std::uint8_t length = 0;

  // Throws ConfigError unless 1 <= size <= 4.
  static Ngram of(std::span<const TokenId> seq);

  std::span<const TokenId> view() const { return {tokens.data(), length}; }
  friend bool operator==(const Ngram& a, const Ngram& b) {
    return a.length == b.length && std::equal(a.tokens.begin(), a.tokens.begin() + a.length, b.tokens.begin());
  }
  friend bool operator<(const Ngram& a, const Ngram& b);
};

struct NgramHash {
  std::size_t operator()(const Ngram& g) const { return hash_tokens(g.view()); }
};

// Posterior probabilities that an n-gram occurs in the translation of one
// source sentence. Lookups of absent n-grams return the smoothing floor.
class NgramTable {
 public:
  explicit NgramTable(std::size_t source_id = 0, int max_order = kMaxNgramOrder, double epsilon = 0.0);

  std::size_t source_id() const { return source_id_; }
  int max_order() const { return max_order_; }
  double epsilon() const { return epsilon_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  // Stored posterior must lie in (0, 1] and the n-gram may not exceed
  // max_order; violations throw ConfigError.
  void set(const Ngram& ngram, double posterior);
  std::optional<double> stored(const Ngram& ngram) const;
  double lookup(const Ngram& ngram) const;
  double lookup(std::span<const TokenId> ngram) const { return lookup(Ngram::of(ngram)); }
  double max_posterior() const;

  // Entries ordered by (length, token ids).
  std::vector<std::pair<Ngram, double>> sorted_entries() const;

  bool operator==(const NgramTable& other) const;

 private:
  friend NgramTable smooth(const NgramTable& table, double epsilon);

  std::size_t source_id_;
  int max_order_;
  double epsilon_;
  std::unordered_map<Ngram, double, NgramHash> entries_;
};

// Number of BOS tokens placed before (and EOS tokens ending) a hypothesis
// when its n-grams are enumerated: max(max_order - 1, 1).
std::size_t padding_width(int max_order);

// BOS^w body EOS^w for a complete hypothesis (its own EOS counts as the
// first of the trailing ones).
TokenSeq pad_hypothesis(const TokenSeq& hypothesis, int max_order);

// Softmax of the entry scores; each weight is positive and they sum to 1.
std::vector<double> hypothesis_weights(const NbestList& nbest);

// P(u) = sum of weights of hypotheses whose padded form contains u at least
// once. Unsmoothed (epsilon 0). Throws EvidenceError on an empty list and
// InputError on incomplete hypotheses.
NgramTable extract_posteriors(const NbestList& nbest, int max_order = kMaxNgramOrder);

// Floors every stored posterior and the absent-key lookup at epsilon.
// Throws ConfigError unless 0 <= epsilon < 1.
NgramTable smooth(const NgramTable& table, double epsilon);

// Token order of every n-gram is reversed and BOS/EOS are swapped, mapping
// posteriors from a right-to-left evidence space onto left-to-right n-grams.
NgramTable reverse_table(const NgramTable& table);

// Sum over n = 1..max_order of the posterior of the n-gram ending at the last
// element of padded, which must be BOS-padded as by pad_hypothesis. Raw
// probabilities, not logs.
double mbr_step_score(const NgramTable& table, std::span<const TokenId> padded);

// Posterior tables for a corpus, indexed by source sentence id.
class PosteriorSet {
 public:
  PosteriorSet() = default;
  explicit PosteriorSet(std::vector<NgramTable> tables, double missing_epsilon = 0.0);

  // Sentences without a block get an empty table floored at missing_epsilon.
  const NgramTable& table_for(std::size_t source_id) const;
  const std::map<std::size_t, NgramTable>& tables() const { return tables_; }
  double max_posterior() const;

 private:
  std::map<std::size_t, NgramTable> tables_;
  NgramTable missing_;
};

// N-gram posterior file: per sentence a block
//   # sent <id>
//   <space-joined n-gram surfaces>\t<posterior>
// with blank lines between blocks.
void write_ngram_file(std::ostream& out, const std::vector<NgramTable>& tables, const Vocabulary& vocab);

struct NgramFileOptions {
  double epsilon = 0.0;
  int max_order = kMaxNgramOrder;
  // Add unseen surfaces to the vocabulary; otherwise n-grams containing
  // them are skipped (they cannot match any hypothesis).
  bool extend_vocabulary = false;
};

std::vector<NgramTable> read_ngram_file(std::istream& in, Vocabulary& vocab, const NgramFileOptions& options);

}  // namespace mbrcomb
