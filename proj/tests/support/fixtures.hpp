#pragma once

// Test-only helpers: a deterministic RNG, random scorers and n-best lists,
// the copy-with-noise translation task, and brute-force oracles that share
// no code with the library paths they check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <unistd.h>
#include <sstream>
#include <string>
#include <vector>

#include "mbrcomb/combiner.hpp"
#include "mbrcomb/corpus.hpp"
#include "mbrcomb/ngram_posterior.hpp"
#include "mbrcomb/scoring.hpp"
#include "mbrcomb/vocabulary.hpp"

namespace fixtures {

using mbrcomb::TokenId;
using mbrcomb::TokenSeq;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Inclusive range.
  std::size_t index(std::size_t lo, std::size_t hi) { return lo + static_cast<std::size_t>(engine_() % (hi - lo + 1)); }
  bool coin(double p) { return uniform() < p; }
  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Random log-distribution over ids [first, vocab), -inf elsewhere.
inline std::vector<double> random_log_row(Rng& rng, std::size_t vocab, TokenId first = mbrcomb::kEos) {
  std::vector<double> p(vocab, 0.0);
  double sum = 0.0;
  for (std::size_t v = first; v < vocab; ++v) {
    p[v] = rng.uniform(0.05, 1.0);
    sum += p[v];
  }
  std::vector<double> row(vocab, kNegInf);
  for (std::size_t v = first; v < vocab; ++v) row[v] = std::log(p[v] / sum);
  return row;
}

// Table scorer with a random row for every context over the emitted ids.
inline mbrcomb::TableScorer random_table_scorer(Rng& rng, std::size_t vocab, std::size_t context_length,
                                                std::size_t max_len, const std::vector<TokenId>& support) {
  auto make_row = [&] {
    std::vector<double> row(vocab, kNegInf);
    std::vector<double> p(support.size());
    double sum = 0.0;
    for (auto& x : p) sum += (x = rng.uniform(0.05, 1.0));
    for (std::size_t k = 0; k < support.size(); ++k) row[support[k]] = std::log(p[k] / sum);
    return row;
  };
  mbrcomb::TableScorer scorer(vocab, context_length, make_row());
  // Every context reachable within max_len gets its own row.
  std::vector<TokenSeq> frontier{TokenSeq(context_length, mbrcomb::kBos)};
  std::vector<TokenSeq> all = frontier;
  std::vector<TokenId> body;
  for (TokenId t : support)
    if (t != mbrcomb::kEos) body.push_back(t);
  for (std::size_t depth = 0; depth < std::min(max_len, context_length) && context_length > 0; ++depth) {
    std::vector<TokenSeq> next;
    for (const auto& ctx : frontier)
      for (TokenId t : body) {
        TokenSeq c(ctx.begin() + 1, ctx.end());
        c.push_back(t);
        next.push_back(c);
      }
    for (auto& c : next) all.push_back(c);
    frontier = std::move(next);
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  for (const auto& c : all) scorer.set(c, make_row());
  return scorer;
}

// Random n-best list over body tokens [first_body, vocab).
inline mbrcomb::NbestList random_nbest(Rng& rng, std::size_t vocab, std::size_t max_entries, std::size_t max_len,
                                       TokenId first_body = 3) {
  mbrcomb::NbestList list;
  const std::size_t n = rng.index(1, max_entries);
  for (std::size_t i = 0; i < n; ++i) {
    mbrcomb::Hypothesis h;
    const std::size_t len = rng.index(0, max_len);
    for (std::size_t t = 0; t < len; ++t) h.tokens.push_back(static_cast<TokenId>(rng.index(first_body, vocab - 1)));
    h.tokens.push_back(mbrcomb::kEos);
    h.logprob = rng.uniform(-12.0, 0.0);
    list.entries.push_back(h);
  }
  return list;
}

// ---- oracles

// Weighted presence by direct enumeration of every window of every padded
// hypothesis, with weights computed from scratch.
inline std::map<TokenSeq, double> posterior_oracle(const mbrcomb::NbestList& list, int max_order) {
  double top = kNegInf;
  for (const auto& h : list.entries) top = std::max(top, h.logprob);
  std::vector<double> w;
  double z = 0.0;
  for (const auto& h : list.entries) {
    w.push_back(std::exp(h.logprob - top));
    z += w.back();
  }
  const std::size_t pad = static_cast<std::size_t>(std::max(max_order - 1, 1));
  std::map<TokenSeq, double> out;
  for (std::size_t i = 0; i < list.entries.size(); ++i) {
    TokenSeq padded(pad, mbrcomb::kBos);
    for (TokenId t : list.entries[i].tokens) padded.push_back(t);
    for (std::size_t k = 1; k < pad; ++k) padded.push_back(mbrcomb::kEos);
    std::map<TokenSeq, bool> seen;
    for (std::size_t n = 1; n <= static_cast<std::size_t>(max_order); ++n)
      for (std::size_t s = 0; s + n <= padded.size(); ++s) seen[TokenSeq(padded.begin() + s, padded.begin() + s + n)];
    for (const auto& [g, _] : seen) out[g] += w[i] / z;
  }
  return out;
}

inline std::vector<std::string> words(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

struct BleuCounts {
  double matches[4] = {0, 0, 0, 0};
  double totals[4] = {0, 0, 0, 0};
  double hyp_len = 0;
  double ref_len = 0;
};

// Corpus BLEU by listing every n-gram occurrence and clipping per type.
inline double bleu_oracle(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
                          BleuCounts* counts = nullptr) {
  BleuCounts c;
  for (std::size_t s = 0; s < hyps.size(); ++s) {
    auto h = words(hyps[s]);
    auto r = words(refs[s]);
    c.hyp_len += static_cast<double>(h.size());
    c.ref_len += static_cast<double>(r.size());
    for (std::size_t n = 1; n <= 4; ++n) {
      std::map<std::vector<std::string>, int> hc, rc;
      for (std::size_t i = 0; i + n <= h.size(); ++i) hc[{h.begin() + i, h.begin() + i + n}]++;
      for (std::size_t i = 0; i + n <= r.size(); ++i) rc[{r.begin() + i, r.begin() + i + n}]++;
      for (const auto& [g, k] : hc) {
        c.totals[n - 1] += k;
        c.matches[n - 1] += std::min(k, rc.count(g) ? rc[g] : 0);
      }
    }
  }
  if (counts) *counts = c;
  double log_sum = 0.0;
  for (int n = 0; n < 4; ++n) {
    if (c.totals[n] == 0 || c.matches[n] == 0) return 0.0;
    log_sum += std::log(c.matches[n] / c.totals[n]);
  }
  const double bp = c.hyp_len >= c.ref_len ? 1.0 : std::exp(1.0 - c.ref_len / c.hyp_len);
  return 100.0 * bp * std::exp(log_sum / 4.0);
}

struct Scored {
  TokenSeq tokens;
  double score = kNegInf;  // ranking score
};

// Exhaustive search over every complete hypothesis of length <= max_len
// (EOS included) built from body tokens; the combined score is summed per
// step in member order, full members first.
inline Scored enumerate_best(const mbrcomb::CombinationConfig& config, const mbrcomb::Source& source,
                             const std::vector<TokenId>& body, std::size_t max_len) {
  Scored best;
  std::vector<TokenSeq> prefixes{{}};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<TokenSeq> next;
    for (const auto& p : prefixes) {
      TokenSeq y = p;
      y.push_back(mbrcomb::kEos);
      double total = 0.0;
      for (std::size_t t = 0; t < y.size(); ++t) {
        std::span<const TokenId> prefix(y.data(), t);
        double step = 0.0;
        for (const auto& m : config.full_members) {
          if (m.weight == 0.0) continue;
          step += m.weight * m.scorer->step(source.tokens, prefix)[y[t]];
        }
        for (const auto& m : config.mbr_members) {
          if (m.weight == 0.0) continue;
          const auto& table = m.posteriors->table_for(source.id);
          TokenSeq padded(3, mbrcomb::kBos);
          padded.insert(padded.end(), y.begin(), y.begin() + static_cast<std::ptrdiff_t>(t) + 1);
          double s = 0.0;
          for (std::size_t n = 1; n <= 4; ++n) s += table.lookup(std::span<const TokenId>(padded).last(n));
          step += m.weight * s;
        }
        total += step;
      }
      double rank = total;
      if (config.length_normalization && config.length_norm_alpha != 0.0)
        rank = total / std::pow(static_cast<double>(y.size()), config.length_norm_alpha);
      if (rank > best.score || (rank == best.score && y < best.tokens)) best = Scored{y, rank};
      if (len < max_len)
        for (TokenId t : body) {
          TokenSeq q = p;
          q.push_back(t);
          next.push_back(q);
        }
    }
    prefixes = std::move(next);
  }
  return best;
}

// Puts mass `peak` on source[t + shift] (EOS once past the end) and spreads
// the rest over the other emitted ids. shift = 0 reproduces the source.
class ShiftScorer final : public mbrcomb::FullPosteriorScorer {
 public:
  using mbrcomb::FullPosteriorScorer::step;
  ShiftScorer(std::size_t vocab, std::size_t shift, double peak) : vocab_(vocab), shift_(shift), peak_(peak) {}
  std::size_t vocab_size() const override { return vocab_; }
  void step(std::span<const TokenId> source, std::span<const TokenId> prefix, std::vector<double>& out) const override {
    const std::size_t pos = prefix.size() + shift_;
    const TokenId target = pos < source.size() ? source[pos] : mbrcomb::kEos;
    const double rest = std::log((1.0 - peak_) / static_cast<double>(vocab_ - 2));
    out.assign(vocab_, rest);
    out[mbrcomb::kBos] = kNegInf;
    out[target] = std::log(peak_);
  }

 private:
  std::size_t vocab_;
  std::size_t shift_;
  double peak_;
};

// Dev set of random token strings over `types` words; references equal the
// sources, so a ShiftScorer with shift 0 is a perfect member.
struct CopyDev {
  mbrcomb::Vocabulary vocab;
  std::vector<mbrcomb::Source> sources;
  std::vector<std::vector<std::string>> references;
};

inline CopyDev copy_dev(Rng& rng, std::size_t sentences, std::size_t types) {
  CopyDev d;
  for (std::size_t k = 0; k < types; ++k) d.vocab.add("w" + std::to_string(k));
  for (std::size_t i = 0; i < sentences; ++i) {
    mbrcomb::Source s{i, {}};
    std::vector<std::string> ref;
    const std::size_t len = rng.index(4, 8);
    for (std::size_t t = 0; t < len; ++t) {
      TokenId id = static_cast<TokenId>(3 + rng.index(0, types - 1));
      s.tokens.push_back(id);
      ref.push_back(d.vocab.surface(id));
    }
    d.sources.push_back(s);
    d.references.push_back(ref);
  }
  return d;
}

// Textbook length-synchronous beam search over one scorer, run to the
// length limit without early stopping. The last step may only emit EOS.
inline std::vector<Scored> reference_beam(const mbrcomb::FullPosteriorScorer& scorer, std::span<const TokenId> source,
                                          std::size_t beam, std::size_t max_len, bool normalize, double alpha) {
  auto before = [](const Scored& x, const Scored& y) {
    return x.score != y.score ? x.score > y.score : x.tokens < y.tokens;
  };
  std::vector<Scored> live{Scored{{}, 0.0}};
  std::vector<Scored> done;
  for (std::size_t t = 1; t <= max_len && !live.empty(); ++t) {
    std::vector<Scored> cand;
    for (const auto& h : live) {
      auto row = scorer.step(source, h.tokens);
      for (TokenId v = 0; v < row.size(); ++v) {
        if (v == mbrcomb::kBos || (t == max_len && v != mbrcomb::kEos)) continue;
        if (row[v] == kNegInf) continue;
        Scored c{h.tokens, h.score + row[v]};
        c.tokens.push_back(v);
        cand.push_back(c);
      }
    }
    std::sort(cand.begin(), cand.end(), before);
    if (cand.size() > beam) cand.resize(beam);
    live.clear();
    for (auto& c : cand) {
      if (c.tokens.back() == mbrcomb::kEos) {
        double r = c.score;
        if (normalize && alpha != 0.0) r = c.score / std::pow(static_cast<double>(c.tokens.size()), alpha);
        done.push_back(Scored{c.tokens, r});
      } else {
        live.push_back(c);
      }
    }
    std::sort(done.begin(), done.end(), before);
    if (done.size() > beam) done.resize(beam);
  }
  return done;
}

// ---- copy-with-noise task

struct Task {
  std::vector<std::string> train_src, train_tgt, dev_src, dev_tgt;
};

// Source sentences follow a sparse Markov chain over `words` types; the
// target copies the source through a fixed lexicon, with random
// substitutions and occasional adjacent swaps.
inline Task copy_with_noise(std::uint64_t seed, std::size_t train, std::size_t dev, std::size_t types = 24,
                            double noise = 0.1) {
  Rng rng(seed);
  auto sentence_pair = [&] {
    const std::size_t len = rng.index(3, 9);
    std::vector<std::size_t> src;
    std::size_t w = rng.index(0, types - 1);
    for (std::size_t t = 0; t < len; ++t) {
      src.push_back(w);
      w = (w * 7 + rng.index(1, 3)) % types;
    }
    std::vector<std::size_t> tgt = src;
    for (auto& x : tgt)
      if (rng.coin(noise)) x = rng.index(0, types - 1);
    if (len >= 4 && rng.coin(noise)) {
      std::size_t i = rng.index(0, len - 2);
      std::swap(tgt[i], tgt[i + 1]);
    }
    std::string s, t;
    for (std::size_t i = 0; i < len; ++i) {
      s += (i ? " " : "") + std::string("s") + std::to_string(src[i]);
      t += (i ? " " : "") + std::string("t") + std::to_string(tgt[i]);
    }
    return std::make_pair(s, t);
  };
  Task task;
  for (std::size_t i = 0; i < train; ++i) {
    auto [s, t] = sentence_pair();
    task.train_src.push_back(s);
    task.train_tgt.push_back(t);
  }
  for (std::size_t i = 0; i < dev; ++i) {
    auto [s, t] = sentence_pair();
    task.dev_src.push_back(s);
    task.dev_tgt.push_back(t);
  }
  return task;
}

inline std::vector<std::vector<std::string>> split_all(const std::vector<std::string>& lines) {
  std::vector<std::vector<std::string>> out;
  for (const auto& l : lines) out.push_back(words(l));
  return out;
}

// ---- planted-fault corpus

struct PlantedCorpus {
  std::vector<mbrcomb::SentencePair> pairs;
  std::array<std::size_t, mbrcomb::kFilterRuleCount> planted{};
};

// German-English pairs that pass every rule with src_language "de" and
// tgt_language "en", except for planted[r] pairs carrying exactly one fault
// that rule r (and no earlier rule) catches.
inline PlantedCorpus planted_fault_corpus(std::uint64_t seed, std::size_t size,
                                          const std::array<std::size_t, mbrcomb::kFilterRuleCount>& counts) {
  using mbrcomb::FilterRule;
  Rng rng(seed);
  const std::vector<std::pair<std::string, std::string>> nouns = {
      {"Haus", "house"}, {"Auto", "car"}, {"Buch", "book"}, {"Kind", "child"}, {"Land", "country"},
      {"Jahr", "year"},  {"Tag", "day"},  {"Weg", "way"},   {"Zug", "train"}, {"Garten", "garden"}};
  const std::vector<std::pair<std::string, std::string>> adjectives = {
      {"gutes", "good"}, {"neues", "new"}, {"altes", "old"}, {"kleines", "small"}, {"großes", "big"}};
  auto clean = [&]() {
    const auto& n = nouns[rng.index(0, nouns.size() - 1)];
    const auto& a = adjectives[rng.index(0, adjectives.size() - 1)];
    std::string src = "das ist ein " + a.first + " " + n.first + " und wir sind hier";
    std::string tgt = "this is a " + a.second + " " + n.second + " and we are here";
    if (rng.coin(0.3)) {
      std::string year = std::to_string(1900 + rng.index(0, 120));
      src += " im Jahr " + year;
      tgt += " in the year " + year;
    }
    return mbrcomb::SentencePair{src + " .", tgt + " .", "planted"};
  };
  auto fault = [&](FilterRule rule) {
    mbrcomb::SentencePair p = clean();
    switch (rule) {
      case FilterRule::kMalformed:
        p.src.insert(4, "\xFF");
        break;
      case FilterRule::kCharLength:
        p.tgt = rng.coin(0.5) ? std::string() : std::string(2100, 'x');
        break;
      case FilterRule::kWordLength: {
        std::string many;
        for (int i = 0; i < 260; ++i) many += "and ";
        p.tgt = many + ".";
        break;
      }
      case FilterRule::kLanguage:
        p.src = p.tgt;
        break;
      case FilterRule::kMaxWordLength:
        p.src.insert(0, std::string(45, 'z') + " ");
        break;
      case FilterRule::kHtmlTag:
        p.tgt = "this is <b>bold</b> and we are here .";
        break;
      case FilterRule::kMinLength:
        p.src = "das ist .";
        p.tgt = "this is .";
        break;
      case FilterRule::kCharRatio:
        p.src = "das ist ein Haus .";
        p.tgt = "this is a house and we are here with many more words than the source side has got .";
        break;
      case FilterRule::kDigitMismatch:
        p.src = "das ist ein Haus aus dem Jahr 1990 .";
        p.tgt = "this is a house from the year 1991 .";
        break;
      case FilterRule::kTerminalPunct:
        p.tgt.resize(p.tgt.size() - 2);
        break;
    }
    return p;
  };
  std::vector<int> labels;
  for (std::size_t r = 0; r < counts.size(); ++r)
    for (std::size_t k = 0; k < counts[r]; ++k) labels.push_back(static_cast<int>(r));
  while (labels.size() < size) labels.push_back(-1);
  for (std::size_t i = labels.size(); i > 1; --i) std::swap(labels[i - 1], labels[rng.index(0, i - 1)]);
  PlantedCorpus out;
  out.planted = counts;
  for (int l : labels) out.pairs.push_back(l < 0 ? clean() : fault(static_cast<FilterRule>(l)));
  return out;
}

// ---- files

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("mbrcomb_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  for (const auto& l : lines) out << l << '\n';
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::size_t read_nonempty_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) n += !line.empty();
  return n;
}

}  // namespace fixtures
