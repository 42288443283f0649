#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "mbrcomb/ngram_posterior.hpp"
#include "mbrcomb/scoring.hpp"

namespace mbrcomb {

struct FullMember {
  std::shared_ptr<const FullPosteriorScorer> scorer;
  double weight = 1.0;
  std::string name;
};

struct MbrMember {
  std::shared_ptr<const PosteriorSet> posteriors;
  double weight = 1.0;
  std::string name;
};

// Model split and weights of the combined score
//   S(y|x) = sum_t [ sum_i w_i log P_i(y_t | y_<t, x)
//                  + sum_j w_j sum_{n=1..4} P_j(y_{t-n+1..t} | x) ].
struct CombinationConfig {
  std::vector<FullMember> full_members;
  std::vector<MbrMember> mbr_members;
  double length_norm_alpha = 0.0;
  bool length_normalization = true;
  std::size_t beam_size = 8;
  // 0 means 2 * |source| + 10.
  std::size_t max_target_length = 0;
  // Needed only when there are no full-posterior members.
  std::size_t vocab_size = 0;

  std::size_t member_count() const { return full_members.size() + mbr_members.size(); }
  // Full-posterior weights first, then MBR weights.
  std::vector<double> weights() const;
  void set_weights(const std::vector<double>& weights);
  std::size_t target_vocab_size() const;
  std::size_t max_length_for(std::size_t source_length) const;

  // Throws ConfigError when no member exists, a weight is negative or
  // non-finite, all weights are zero, alpha < 0, beam_size == 0 or the full
  // members disagree on vocabulary size.
  void validate() const;
};

struct Source {
  std::size_t id = 0;
  TokenSeq tokens;
};

// Combined step score of every vocabulary token after prefix. Full-posterior
// terms are added first in member order, then MBR terms; members with zero
// weight are skipped.
void combined_step_scores(const CombinationConfig& config, const Source& source, std::span<const TokenId> prefix,
                          std::vector<double>& out);

double combined_step_score(const CombinationConfig& config, const Source& source, std::span<const TokenId> prefix,
                           TokenId token);

// Unnormalized sum of step scores over a complete hypothesis.
double combined_score(const CombinationConfig& config, const Source& source, const TokenSeq& hypothesis);

// score / length^alpha. Throws ConfigError for length 0.
double length_normalize(double score, std::size_t length, double alpha);

// Ranking score: length_normalize when normalization is enabled, else score.
double ranking_score(const CombinationConfig& config, double score, std::size_t length);

// Upper bound on any single combined step score for this source.
double step_score_bound(const CombinationConfig& config, const Source& source);

// Length-synchronous beam search under the combined score. Returned entries
// carry their ranking score in logprob, best first. Throws DecodeError when
// nothing completes within the length limit.
NbestList beam_search(const CombinationConfig& config, const Source& source);

// Sentence-parallel decoding; the output does not depend on jobs.
std::vector<NbestList> decode_corpus(const CombinationConfig& config, const std::vector<Source>& sources,
                                     std::size_t jobs = 1);

// "<sent_id> ||| <tokens> ||| <score, 6 decimals>" per hypothesis.
void write_nbest(std::ostream& out, const std::vector<NbestList>& lists, const Vocabulary& vocab,
                 std::size_t max_entries = 0);
// Groups consecutive lines by sentence id; hypotheses get their EOS back.
std::vector<NbestList> read_nbest(std::istream& in, Vocabulary& vocab, bool extend_vocabulary);

}  // namespace mbrcomb
