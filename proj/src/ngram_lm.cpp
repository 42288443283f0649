#include "mbrcomb/ngram_lm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mbrcomb/errors.hpp"

namespace mbrcomb {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

AdditiveTable::AdditiveTable(std::size_t vocab_size, double add_k)
    : vocab_size_(vocab_size), add_k_(add_k) {
  if (!(add_k > 0.0)) throw ConfigError("additive smoothing constant must be > 0");
  if (vocab_size <= kUnk) throw ConfigError("vocabulary must include the sentinels");
}

void AdditiveTable::add(const TokenSeq& context, TokenId token, std::uint64_t count) {
  raw_[context][token] += count;
}

void AdditiveTable::finalize() {
  for (auto& [context, successors] : raw_) {
    ContextCounts& c = counts_[context];
    for (const auto& [token, n] : successors) {
      c.successors.emplace_back(token, n);
    }
    c.total = 0;
    std::sort(c.successors.begin(), c.successors.end());
    // Merge with counts from a previous finalize().
    std::vector<std::pair<TokenId, std::uint64_t>> merged;
    for (const auto& s : c.successors) {
      if (!merged.empty() && merged.back().first == s.first) {
        merged.back().second += s.second;
      } else {
        merged.push_back(s);
      }
    }
    c.successors = std::move(merged);
    for (const auto& s : c.successors) c.total += s.second;
  }
  raw_.clear();
}

const ContextCounts* AdditiveTable::find(const TokenSeq& context) const {
  auto it = counts_.find(context);
  return it == counts_.end() ? nullptr : &it->second;
}

double AdditiveTable::prob(const TokenSeq& context, TokenId token) const {
  if (token == kBos) return 0.0;
  const double support = static_cast<double>(vocab_size_ - 1);
  const ContextCounts* c = find(context);
  if (!c) return 1.0 / support;
  auto it = std::lower_bound(c->successors.begin(), c->successors.end(),
                             std::make_pair(token, std::uint64_t{0}));
  double count = (it != c->successors.end() && it->first == token) ? static_cast<double>(it->second) : 0.0;
  return (count + add_k_) / (static_cast<double>(c->total) + add_k_ * support);
}

void AdditiveTable::distribution(const TokenSeq& context, std::vector<double>& out) const {
  const double support = static_cast<double>(vocab_size_ - 1);
  out.assign(vocab_size_, 0.0);
  const ContextCounts* c = find(context);
  if (!c) {
    std::fill(out.begin() + 1, out.end(), 1.0 / support);
    return;
  }
  const double denom = static_cast<double>(c->total) + add_k_ * support;
  std::fill(out.begin() + 1, out.end(), add_k_ / denom);
  for (const auto& [token, n] : c->successors) {
    out[token] = (static_cast<double>(n) + add_k_) / denom;
  }
  out[kBos] = 0.0;
}

NgramLm::NgramLm(Vocabulary vocab, int order, double add_k, AdditiveTable table)
    : vocab_(std::move(vocab)), order_(order), add_k_(add_k), table_(std::move(table)) {}

TokenSeq NgramLm::context_of(std::span<const TokenId> prefix) const {
  const std::size_t n = static_cast<std::size_t>(order_ - 1);
  TokenSeq context(n, kBos);
  std::size_t take = std::min(n, prefix.size());
  std::copy(prefix.end() - static_cast<std::ptrdiff_t>(take), prefix.end(),
            context.end() - static_cast<std::ptrdiff_t>(take));
  return context;
}

double NgramLm::prob(std::span<const TokenId> prefix, TokenId token) const {
  return table_.prob(context_of(prefix), token);
}

void NgramLm::step(std::span<const TokenId> /*source*/, std::span<const TokenId> prefix,
                   std::vector<double>& out) const {
  table_.distribution(context_of(prefix), out);
  for (double& p : out) p = p > 0.0 ? std::log(p) : kNegInf;
}

namespace {

void check_lm_options(int order, double add_k) {
  if (order < 1 || order > 4) throw ConfigError("n-gram order must be in 1..4");
  if (!(add_k > 0.0)) throw ConfigError("add_k must be > 0");
}

AdditiveTable count_ngrams(const std::vector<TokenSeq>& corpus, std::size_t vocab_size, int order,
                           double add_k) {
  AdditiveTable table(vocab_size, add_k);
  const std::size_t history = static_cast<std::size_t>(order - 1);
  for (const auto& sentence : corpus) {
    TokenSeq padded(history, kBos);
    padded.insert(padded.end(), sentence.begin(), sentence.end());
    padded.push_back(kEos);
    for (std::size_t i = history; i < padded.size(); ++i) {
      TokenSeq context(padded.begin() + static_cast<std::ptrdiff_t>(i - history),
                       padded.begin() + static_cast<std::ptrdiff_t>(i));
      table.add(context, padded[i]);
    }
  }
  table.finalize();
  return table;
}

}  // namespace

NgramLm train_ngram_lm(const std::vector<std::vector<std::string>>& corpus, int order, double add_k,
                       Vocabulary base) {
  if (corpus.empty()) throw ConfigError("cannot train a language model on an empty corpus");
  check_lm_options(order, add_k);
  for (const auto& sentence : corpus)
    for (const auto& w : sentence) base.add(w);
  std::vector<TokenSeq> ids;
  ids.reserve(corpus.size());
  for (const auto& sentence : corpus) ids.push_back(base.encode(sentence));
  AdditiveTable table = count_ngrams(ids, base.size(), order, add_k);
  return NgramLm(std::move(base), order, add_k, std::move(table));
}

ChannelLmScorer::ChannelLmScorer(Vocabulary vocab, Options options, NgramLm lm, AdditiveTable lexicon)
    : vocab_(std::move(vocab)), options_(options), lm_(std::move(lm)), lexicon_(std::move(lexicon)) {}

void ChannelLmScorer::step(std::span<const TokenId> source, std::span<const TokenId> prefix,
                           std::vector<double>& out) const {
  const std::size_t pos = prefix.size();
  TokenId aligned = kEos;
  if (pos < source.size()) {
    aligned = options_.direction == Direction::kLeftToRight ? source[pos]
                                                            : source[source.size() - 1 - pos];
  }
  thread_local std::vector<double> lex;
  lexicon_.distribution(TokenSeq{aligned}, lex);
  lm_.step(source, prefix, out);
  const double mix = options_.mix;
  for (std::size_t v = 0; v < out.size(); ++v) {
    double p = mix * lex[v] + (1.0 - mix) * (v == kBos ? 0.0 : std::exp(out[v]));
    out[v] = p > 0.0 ? std::log(p) : kNegInf;
  }
}

ChannelLmScorer train_channel_lm(const std::vector<std::vector<std::string>>& sources,
                                 const std::vector<std::vector<std::string>>& targets,
                                 ChannelLmScorer::Options options, Vocabulary base) {
  if (sources.size() != targets.size()) {
    throw ConfigError("channel model needs aligned corpora (" + std::to_string(sources.size()) +
                      " sources vs " + std::to_string(targets.size()) + " targets)");
  }
  if (sources.empty()) throw ConfigError("cannot train a channel model on an empty corpus");
  check_lm_options(options.order, options.add_k);
  if (!(options.lexical_add_k > 0.0)) throw ConfigError("lexical_add_k must be > 0");
  if (!(options.mix >= 0.0 && options.mix <= 1.0)) throw ConfigError("mix must be in [0, 1]");

  for (const auto& s : sources)
    for (const auto& w : s) base.add(w);
  for (const auto& s : targets)
    for (const auto& w : s) base.add(w);

  const bool reversed = options.direction == Direction::kRightToLeft;
  std::vector<TokenSeq> src_ids, tgt_ids;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    src_ids.push_back(base.encode(sources[i]));
    tgt_ids.push_back(base.encode(targets[i]));
    if (reversed) {
      std::reverse(src_ids.back().begin(), src_ids.back().end());
      std::reverse(tgt_ids.back().begin(), tgt_ids.back().end());
    }
  }

  AdditiveTable lexicon(base.size(), options.lexical_add_k);
  for (std::size_t i = 0; i < src_ids.size(); ++i) {
    const auto& src = src_ids[i];
    const auto& tgt = tgt_ids[i];
    for (std::size_t t = 0; t <= tgt.size(); ++t) {
      TokenId s = t < src.size() ? src[t] : kEos;
      TokenId y = t < tgt.size() ? tgt[t] : kEos;
      lexicon.add(TokenSeq{s}, y);
    }
  }
  lexicon.finalize();

  AdditiveTable lm_table = count_ngrams(tgt_ids, base.size(), options.order, options.add_k);
  NgramLm lm(base, options.order, options.add_k, std::move(lm_table));
  return ChannelLmScorer(std::move(base), options, std::move(lm), std::move(lexicon));
}

}  // namespace mbrcomb
