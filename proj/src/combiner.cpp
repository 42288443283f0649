#include "mbrcomb/combiner.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "mbrcomb/errors.hpp"
#include "mbrcomb/format.hpp"
#include "mbrcomb/parallel.hpp"

namespace mbrcomb {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

std::vector<double> CombinationConfig::weights() const {
  std::vector<double> w;
  for (const auto& m : full_members) w.push_back(m.weight);
  for (const auto& m : mbr_members) w.push_back(m.weight);
  return w;
}

void CombinationConfig::set_weights(const std::vector<double>& weights) {
  if (weights.size() != member_count()) throw ConfigError("weight vector does not match the member count");
  std::size_t k = 0;
  for (auto& m : full_members) m.weight = weights[k++];
  for (auto& m : mbr_members) m.weight = weights[k++];
}

std::size_t CombinationConfig::target_vocab_size() const {
  if (!full_members.empty()) return full_members.front().scorer->vocab_size();
  return vocab_size;
}

std::size_t CombinationConfig::max_length_for(std::size_t source_length) const {
  return max_target_length ? max_target_length : 2 * source_length + 10;
}

void CombinationConfig::validate() const {
  if (member_count() == 0) throw ConfigError("combination needs at least one member");
  bool any_positive = false;
  for (double w : weights()) {
    if (!std::isfinite(w) || w < 0.0) throw ConfigError("member weights must be finite and >= 0");
    any_positive = any_positive || w > 0.0;
  }
  if (!any_positive) throw ConfigError("at least one member weight must be positive");
  if (!std::isfinite(length_norm_alpha) || length_norm_alpha < 0.0) throw ConfigError("alpha must be >= 0");
  if (beam_size == 0) throw ConfigError("beam size must be >= 1");
  for (const auto& m : full_members) {
    if (!m.scorer) throw ConfigError("full-posterior member without a scorer");
    if (m.scorer->vocab_size() != target_vocab_size()) {
      throw ConfigError("full-posterior members disagree on vocabulary size");
    }
  }
  for (const auto& m : mbr_members)
    if (!m.posteriors) throw ConfigError("MBR member without posteriors");
  if (target_vocab_size() <= kUnk) throw ConfigError("combination vocabulary size unknown or too small");
}

void combined_step_scores(const CombinationConfig& config, const Source& source, std::span<const TokenId> prefix,
                          std::vector<double>& out) {
  const std::size_t vocab = config.target_vocab_size();
  out.assign(vocab, 0.0);
  thread_local std::vector<double> row;
  for (const auto& m : config.full_members) {
    if (m.weight == 0.0) continue;
    m.scorer->step(source.tokens, prefix, row);
    for (std::size_t v = 0; v < vocab; ++v) out[v] += m.weight * row[v];
  }
  if (config.mbr_members.empty()) return;
  thread_local TokenSeq padded;
  const std::size_t pad = padding_width(kMaxNgramOrder);
  padded.assign(pad, kBos);
  padded.insert(padded.end(), prefix.begin(), prefix.end());
  padded.push_back(kBos);
  for (const auto& m : config.mbr_members) {
    if (m.weight == 0.0) continue;
    const NgramTable& table = m.posteriors->table_for(source.id);
    for (std::size_t v = 0; v < vocab; ++v) {
      padded.back() = static_cast<TokenId>(v);
      out[v] += m.weight * mbr_step_score(table, padded);
    }
  }
}

double combined_step_score(const CombinationConfig& config, const Source& source, std::span<const TokenId> prefix,
                           TokenId token) {
  const std::size_t vocab = config.target_vocab_size();
  if (token >= vocab) throw VocabularyError("token id " + std::to_string(token) + " outside vocabulary");
  for (TokenId t : prefix)
    if (t >= vocab) throw VocabularyError("prefix token id " + std::to_string(t) + " outside vocabulary");
  std::vector<double> scores;
  combined_step_scores(config, source, prefix, scores);
  return scores[token];
}

double combined_score(const CombinationConfig& config, const Source& source, const TokenSeq& hypothesis) {
  if (!Hypothesis{hypothesis, 0.0}.complete()) throw InputError("combined_score requires a complete hypothesis");
  const std::size_t vocab = config.target_vocab_size();
  for (TokenId t : hypothesis)
    if (t >= vocab) throw VocabularyError("hypothesis token id " + std::to_string(t) + " outside vocabulary");
  double total = 0.0;
  std::vector<double> scores;
  std::span<const TokenId> all(hypothesis);
  for (std::size_t t = 0; t < hypothesis.size(); ++t) {
    combined_step_scores(config, source, all.first(t), scores);
    total += scores[hypothesis[t]];
  }
  return total;
}

double length_normalize(double score, std::size_t length, double alpha) {
  if (length == 0) throw ConfigError("length normalization needs length >= 1");
  if (alpha == 0.0) return score;
  return score / std::pow(static_cast<double>(length), alpha);
}

double ranking_score(const CombinationConfig& config, double score, std::size_t length) {
  return config.length_normalization ? length_normalize(score, length, config.length_norm_alpha) : score;
}

double step_score_bound(const CombinationConfig& config, const Source& source) {
  double bound = 0.0;
  for (const auto& m : config.full_members)
    if (m.weight > 0.0) bound += m.weight * m.scorer->max_step_logprob();
  for (const auto& m : config.mbr_members) {
    if (m.weight == 0.0) continue;
    const NgramTable& table = m.posteriors->table_for(source.id);
    bound += m.weight * table.max_order() * table.max_posterior();
  }
  return bound;
}

namespace {

struct Partial {
  TokenSeq tokens;
  double score;
};

bool partial_before(const Partial& a, const Partial& b) {
  return ranks_before(a.score, a.tokens, b.score, b.tokens);
}

// Best ranking score any completion of a live hypothesis could reach, given
// that no step adds more than step_bound.
double completion_bound(const CombinationConfig& config, const Partial& h, std::size_t max_length,
                        double step_bound) {
  double best = kNegInf;
  const std::size_t len = h.tokens.size();
  for (std::size_t total = len + 1; total <= max_length; ++total) {
    double s = h.score + static_cast<double>(total - len) * step_bound;
    best = std::max(best, ranking_score(config, s, total));
  }
  return best;
}

}  // namespace

NbestList beam_search(const CombinationConfig& config, const Source& source) {
  config.validate();
  const std::size_t vocab = config.target_vocab_size();
  const std::size_t max_length = config.max_length_for(source.tokens.size());
  const std::size_t beam = config.beam_size;
  const double step_bound = step_score_bound(config, source);

  std::vector<Partial> live{Partial{{}, 0.0}};
  std::vector<Partial> completed;  // score holds the ranking score
  std::vector<Partial> candidates;
  std::vector<double> scores;

  for (std::size_t t = 1; t <= max_length && !live.empty(); ++t) {
    candidates.clear();
    const bool last = t == max_length;
    for (const auto& h : live) {
      combined_step_scores(config, source, h.tokens, scores);
      for (std::size_t v = 0; v < vocab; ++v) {
        if (v == kBos || (last && v != kEos)) continue;
        const double s = h.score + scores[v];
        if (std::isnan(s) || s == kNegInf) continue;
        Partial c{h.tokens, s};
        c.tokens.push_back(static_cast<TokenId>(v));
        candidates.push_back(std::move(c));
      }
    }
    if (candidates.size() > beam) {
      std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(beam),
                        candidates.end(), partial_before);
      candidates.resize(beam);
    } else {
      std::sort(candidates.begin(), candidates.end(), partial_before);
    }

    live.clear();
    for (auto& c : candidates) {
      if (c.tokens.back() == kEos) {
        const std::size_t len = c.tokens.size();
        completed.push_back(Partial{std::move(c.tokens), ranking_score(config, c.score, len)});
      } else {
        live.push_back(std::move(c));
      }
    }
    std::sort(completed.begin(), completed.end(), partial_before);
    if (completed.size() > beam) completed.resize(beam);

    if (completed.size() >= beam && !live.empty()) {
      const double worst = completed.back().score;
      double best_live = kNegInf;
      for (const auto& h : live) best_live = std::max(best_live, completion_bound(config, h, max_length, step_bound));
      if (best_live < worst) break;
    }
  }

  if (completed.empty()) {
    throw DecodeError(source.id, "no complete hypothesis within max target length " + std::to_string(max_length));
  }
  NbestList out;
  out.source_id = source.id;
  out.source = source.tokens;
  for (auto& c : completed) out.entries.push_back(Hypothesis{std::move(c.tokens), c.score});
  return out;
}

std::vector<NbestList> decode_corpus(const CombinationConfig& config, const std::vector<Source>& sources,
                                     std::size_t jobs) {
  config.validate();
  std::vector<NbestList> out(sources.size());
  parallel_for(sources.size(), jobs, [&](std::size_t i) { out[i] = beam_search(config, sources[i]); });
  return out;
}

void write_nbest(std::ostream& out, const std::vector<NbestList>& lists, const Vocabulary& vocab,
                 std::size_t max_entries) {
  for (const auto& list : lists) {
    std::size_t n = 0;
    for (const auto& h : list.entries) {
      if (max_entries && n++ >= max_entries) break;
      out << list.source_id << " ||| " << vocab.decode(h.tokens) << " ||| " << format_fixed(h.logprob, 6) << '\n';
    }
  }
}

std::vector<NbestList> read_nbest(std::istream& in, Vocabulary& vocab, bool extend_vocabulary) {
  std::vector<NbestList> lists;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto first = line.find(" ||| ");
    auto second = first == std::string::npos ? first : line.find(" ||| ", first + 5);
    if (second == std::string::npos) throw ParseError(lineno, "expected '<id> ||| <tokens> ||| <score>'");
    long long id = 0;
    double score = 0.0;
    if (!parse_int(trim(std::string_view(line).substr(0, first)), id) || id < 0) {
      throw ParseError(lineno, "bad sentence id");
    }
    if (!parse_double(trim(std::string_view(line).substr(second + 5)), score)) {
      throw ParseError(lineno, "bad hypothesis score");
    }
    std::string_view text;
    if (second > first + 5) text = std::string_view(line).substr(first + 5, second - first - 5);
    TokenSeq tokens;
    for (const auto& w : split_words(text)) {
      if (w == kBosSurface || w == kEosSurface) throw ParseError(lineno, "sentinel inside hypothesis");
      tokens.push_back(extend_vocabulary ? vocab.add(w) : vocab.lookup(w));
    }
    tokens.push_back(kEos);
    if (lists.empty() || lists.back().source_id != static_cast<std::size_t>(id)) {
      for (const auto& l : lists)
        if (l.source_id == static_cast<std::size_t>(id))
          throw ParseError(lineno, "hypotheses for sentence " + std::to_string(id) + " are not contiguous");
      lists.emplace_back();
      lists.back().source_id = static_cast<std::size_t>(id);
    }
    lists.back().entries.push_back(Hypothesis{std::move(tokens), score});
  }
  for (auto& l : lists) l.canonicalize();
  return lists;
}

}  // namespace mbrcomb
