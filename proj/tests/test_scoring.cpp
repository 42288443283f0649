#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mbrcomb/errors.hpp"
#include "mbrcomb/format.hpp"
#include "mbrcomb/ngram_lm.hpp"
#include "mbrcomb/scoring.hpp"
#include "mbrcomb/vocabulary.hpp"
#include "support/fixtures.hpp"

using namespace mbrcomb;

TEST_CASE("vocabulary keeps sentinels at fixed ids") {
  Vocabulary v;
  CHECK(v.size() == 3);
  CHECK(v.surface(kBos) == "<s>");
  CHECK(v.surface(kEos) == "</s>");
  CHECK(v.surface(kUnk) == "<unk>");
  const TokenId a = v.add("a");
  CHECK(a == 3);
  CHECK(v.add("a") == a);
  CHECK(v.lookup("zzz") == kUnk);
  CHECK_THROWS_AS(v.at("zzz"), VocabularyError);
  CHECK(v.decode({a, a, kEos}) == "a a");
  CHECK(v.decode({kBos, a, kEos}, false) == "<s> a </s>");

  std::stringstream io;
  v.write(io);
  CHECK(Vocabulary::read(io) == v);

  std::stringstream bad("<s>\nx\n<unk>\n");
  CHECK_THROWS_AS(Vocabulary::read(bad), ParseError);
}

TEST_CASE("uniform table scorer gives ln 0.25 over four emitted tokens") {
  Vocabulary v;
  const TokenId a = v.add("a"), b = v.add("b"), c = v.add("c");
  TokenSeq support{kEos, a, b, c};
  auto s = TableScorer::uniform(v.size(), support);
  CHECK(score_step(s, {}, {}, a) == doctest::Approx(std::log(0.25)).epsilon(1e-15));
  TokenSeq prefix{a, b};
  CHECK(score_step(s, {}, prefix, kEos) == doctest::Approx(-1.3862943611198906));
  CHECK(score_step(s, {}, prefix, kBos) == -INFINITY);
  CHECK(sequence_logprob(s, {}, {a, b, kEos}) == doctest::Approx(3 * std::log(0.25)));
}

TEST_CASE("deterministic table scorer") {
  const std::size_t V = 5;
  const TokenId a = 3, b = 4;
  std::vector<double> default_row(V, -INFINITY);
  default_row[a] = 0.0;
  TableScorer s(V, 1, default_row);
  std::vector<double> after_a(V, -INFINITY);
  after_a[b] = 0.0;
  std::vector<double> after_b(V, -INFINITY);
  after_b[kEos] = 0.0;
  s.set({a}, after_a);
  s.set({b}, after_b);
  TokenSeq pa{a};
  CHECK(score_step(s, {}, pa, b) == 0.0);
  CHECK(sequence_logprob(s, {}, {a, b, kEos}) == 0.0);
  CHECK(sequence_logprob(s, {}, {kEos}) == score_step(s, {}, {}, kEos));
}

TEST_CASE("scorer contract errors") {
  auto s = TableScorer::uniform(4, std::vector<TokenId>{kEos, 3});
  TokenSeq bad_prefix{7};
  CHECK_THROWS_AS(score_step(s, {}, {}, 9), VocabularyError);
  CHECK_THROWS_AS(score_step(s, {}, bad_prefix, 3), VocabularyError);
  TokenSeq finished{3, kEos};
  CHECK_THROWS_AS(score_step(s, {}, finished, 3), InputError);
  CHECK_THROWS_AS(sequence_logprob(s, {}, {3}), InputError);
}

TEST_CASE("random table scorers are normalized") {
  fixtures::Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = fixtures::random_table_scorer(rng, 5, 2, 4, {kEos, 2, 3, 4});
    TokenSeq prefix;
    for (int t = 0; t < 4; ++t) {
      auto row = s.step({}, prefix);
      double z = 0.0;
      for (double x : row) z += std::exp(x);
      CHECK(z == doctest::Approx(1.0).epsilon(1e-12));
      prefix.push_back(static_cast<TokenId>(rng.index(2, 4)));
    }
  }
}

TEST_CASE("add-1 bigram LM: P(b|a) = 3/7") {
  // Corpus "a b . a b ." as two sentences "a b ." ; |V| = 6 with <unk>, so
  // the predictive support is 5.
  auto lm = train_ngram_lm({{"a", "b", "."}, {"a", "b", "."}}, 2, 1.0);
  const Vocabulary& v = lm.vocabulary();
  REQUIRE(v.size() == 6);
  TokenSeq prefix{v.at("a")};
  CHECK(lm.prob(prefix, v.at("b")) == doctest::Approx(3.0 / 7.0));
  CHECK(score_step(lm, {}, prefix, v.at("b")) == doctest::Approx(std::log(3.0 / 7.0)));
  CHECK(score_step(lm, {}, prefix, v.at("b")) == doctest::Approx(-0.8473).epsilon(1e-4));
}

TEST_CASE("add-1 unigram LM: P(a) = 0.4") {
  auto lm = train_ngram_lm({{"a"}}, 1, 1.0);
  const Vocabulary& v = lm.vocabulary();
  REQUIRE(v.size() == 4);
  CHECK(lm.prob({}, v.at("a")) == doctest::Approx(0.4));
  CHECK(lm.prob({}, kEos) == doctest::Approx(0.4));
  CHECK(lm.prob({}, kUnk) == doctest::Approx(0.2));
  CHECK(lm.prob({}, kBos) == 0.0);
}

// Relative frequencies of the next token after a context, counted directly.
static double frequency_oracle(const std::vector<std::vector<std::string>>& corpus, const std::vector<std::string>& ctx,
                               const std::string& next) {
  double hits = 0, total = 0;
  for (const auto& s : corpus) {
    std::vector<std::string> padded(ctx.size(), "<s>");
    padded.insert(padded.end(), s.begin(), s.end());
    padded.push_back("</s>");
    for (std::size_t i = ctx.size(); i < padded.size(); ++i) {
      if (!std::equal(ctx.begin(), ctx.end(), padded.begin() + static_cast<std::ptrdiff_t>(i - ctx.size()))) continue;
      total += 1;
      hits += padded[i] == next;
    }
  }
  return total ? hits / total : 0.0;
}

TEST_CASE("small-k LM approaches empirical conditionals") {
  std::vector<std::vector<std::string>> corpus(5, {"x", "y", "x", "z", "x", "y"});
  auto lm = train_ngram_lm(corpus, 2, 1e-9);
  const Vocabulary& v = lm.vocabulary();
  for (const char* ctx : {"x", "y", "z", "<s>"}) {
    for (const char* next : {"x", "y", "z", "</s>"}) {
      TokenSeq prefix;
      if (std::string(ctx) != "<s>") prefix.push_back(v.at(ctx));
      INFO(ctx << " -> " << next);
      CHECK(lm.prob(prefix, v.at(next)) == doctest::Approx(frequency_oracle(corpus, {ctx}, next)).epsilon(1e-6));
    }
  }
}

TEST_CASE("LM rows sum to one and training rejects bad input") {
  auto lm = train_ngram_lm({{"a", "b"}, {"b", "c", "a"}}, 3, 0.5);
  TokenSeq prefix{lm.vocabulary().at("b")};
  auto row = lm.step({}, prefix);
  double z = 0.0;
  for (double x : row) z += std::exp(x);
  CHECK(z == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(train_ngram_lm({}, 2, 1.0), ConfigError);
  CHECK_THROWS_AS(train_ngram_lm({{"a"}}, 5, 1.0), ConfigError);
  CHECK_THROWS_AS(train_ngram_lm({{"a"}}, 2, 0.0), ConfigError);
}

TEST_CASE("channel scorer prefers the aligned translation") {
  std::vector<std::vector<std::string>> src{{"s1", "s2"}, {"s2", "s1"}, {"s1", "s1"}};
  std::vector<std::vector<std::string>> tgt{{"t1", "t2"}, {"t2", "t1"}, {"t1", "t1"}};
  auto ch = train_channel_lm(src, tgt, {});
  const Vocabulary& v = ch.vocabulary();
  TokenSeq source{v.at("s2"), v.at("s1")};
  auto row = ch.step(source, {});
  CHECK(row[v.at("t2")] > row[v.at("t1")]);
  double z = 0.0;
  for (double x : row) z += std::exp(x);
  CHECK(z == doctest::Approx(1.0).epsilon(1e-12));

  ChannelLmScorer::Options r2l;
  r2l.direction = Direction::kRightToLeft;
  auto rev = train_channel_lm(src, tgt, r2l);
  auto first = rev.step(source, {});
  CHECK(first[v.at("t1")] > first[v.at("t2")]);  // reads the source back to front
  CHECK_THROWS_AS(train_channel_lm(src, {{"t1"}}, {}), ConfigError);
}

TEST_CASE("number formatting round-trips") {
  CHECK(format_shortest(0.1) == "0.1");
  CHECK(format_shortest(0.25) == "0.25");
  CHECK(format_fixed(-0.0000001, 2) == "0.00");
  double d = 0;
  CHECK(parse_double("1e-3", d));
  CHECK(d == 0.001);
  CHECK_FALSE(parse_double("1.0x", d));
  long long i = 0;
  CHECK(parse_int("+12", i));
  CHECK(i == 12);
  CHECK_FALSE(parse_int("1.5", i));
}
