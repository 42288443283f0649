#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mbrcomb/errors.hpp"
#include "mbrcomb/ngram_posterior.hpp"
#include "support/fixtures.hpp"

using namespace mbrcomb;

namespace {

constexpr TokenId a = 3, b = 4, c = 5;

NbestList list_of(std::vector<std::pair<TokenSeq, double>> entries) {
  NbestList l;
  for (auto& [t, s] : entries) l.entries.push_back(Hypothesis{t, s});
  return l;
}

double P(const NgramTable& t, TokenSeq g) { return t.lookup(g); }

}  // namespace

TEST_CASE("single hypothesis: every contained n-gram has posterior 1") {
  auto t = extract_posteriors(list_of({{{a, b, kEos}, -3.0}}));
  CHECK(P(t, {kBos, kBos, kBos, a}) == 1.0);
  CHECK(P(t, {a}) == 1.0);
  CHECK(P(t, {a, b}) == 1.0);
  CHECK(P(t, {b, kEos}) == 1.0);
  CHECK(P(t, {a, b, kEos}) == 1.0);
  CHECK(P(t, {b, a}) == 0.0);
  for (const auto& [g, p] : t.sorted_entries()) CHECK(p == 1.0);
}

TEST_CASE("equal scores split the evidence") {
  auto t = extract_posteriors(list_of({{{a, b, kEos}, -1.0}, {{a, c, kEos}, -1.0}}));
  CHECK(P(t, {a}) == 1.0);
  CHECK(P(t, {b}) == 0.5);
  CHECK(P(t, {c}) == 0.5);
  CHECK(P(t, {a, b}) == 0.5);
  CHECK(P(t, {a, c}) == 0.5);
}

TEST_CASE("softmax weights 0.75 / 0.25") {
  auto l = list_of({{{a, kEos}, std::log(3.0)}, {{b, kEos}, std::log(1.0)}});
  auto w = hypothesis_weights(l);
  CHECK(w[0] == doctest::Approx(0.75));
  CHECK(w[1] == doctest::Approx(0.25));
  auto t = extract_posteriors(l);
  CHECK(P(t, {a}) == doctest::Approx(0.75));
  CHECK(P(t, {kEos}) == doctest::Approx(1.0));
}

TEST_CASE("presence, not count") {
  auto t = extract_posteriors(list_of({{{a, a, a, kEos}, 0.0}, {{b, kEos}, 0.0}}));
  CHECK(P(t, {a}) == 0.5);
  CHECK(P(t, {a, a}) == 0.5);
}

TEST_CASE("extraction errors") {
  CHECK_THROWS_AS(extract_posteriors(NbestList{}), EvidenceError);
  CHECK_THROWS_AS(extract_posteriors(list_of({{{a, b}, 0.0}})), InputError);
}

TEST_CASE("smoothing floor") {
  NgramTable t;
  t.set(Ngram::of(TokenSeq{a}), 0.0001);
  t.set(Ngram::of(TokenSeq{b}), 1.0);
  auto s = smooth(t, 0.01);
  CHECK(P(s, {a}) == 0.01);
  CHECK(P(s, {b}) == 1.0);
  CHECK(P(s, {c, a}) == 0.01);
  CHECK_THROWS_AS(smooth(t, 1.0), ConfigError);
  CHECK_THROWS_AS(t.set(Ngram::of(TokenSeq{c}), 0.0), ConfigError);
}

TEST_CASE("reversal") {
  NgramTable t;
  t.set(Ngram::of(TokenSeq{a, b}), 0.5);
  auto r = reverse_table(t);
  CHECK(r.size() == 1);
  CHECK(r.stored(Ngram::of(TokenSeq{b, a})) == 0.5);
  NgramTable s;
  s.set(Ngram::of(TokenSeq{kBos, a}), 0.25);
  CHECK(reverse_table(s).stored(Ngram::of(TokenSeq{a, kEos})) == 0.25);
  CHECK(reverse_table(reverse_table(s)) == s);
}

TEST_CASE("mbr step scores") {
  auto t = extract_posteriors(list_of({{{a, b, kEos}, 0.0}}));
  TokenSeq padded{kBos, kBos, kBos, a};
  CHECK(mbr_step_score(t, padded) == 4.0);

  NgramTable empty = smooth(NgramTable(), 0.01);
  CHECK(mbr_step_score(empty, padded) == doctest::Approx(0.04));

  NgramTable uni;
  uni.set(Ngram::of(TokenSeq{a}), 0.6);
  CHECK(mbr_step_score(uni, padded) == doctest::Approx(0.6));
}

TEST_CASE("extraction matches the enumeration oracle on random lists") {
  fixtures::Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto l = fixtures::random_nbest(rng, 7, 6, 5);
    int order = static_cast<int>(rng.index(1, 4));
    auto t = extract_posteriors(l, order);
    auto oracle = fixtures::posterior_oracle(l, order);
    CHECK(t.size() == oracle.size());
    for (const auto& [g, p] : oracle) CHECK(t.lookup(g) == doctest::Approx(std::min(p, 1.0)).epsilon(1e-12));
  }
}

TEST_CASE("n-gram file round trip") {
  Vocabulary v;
  v.add("a");
  v.add("b");
  auto t1 = extract_posteriors(list_of({{{a, b, kEos}, 0.0}, {{b, kEos}, -1.0}}));
  NgramTable t2(4);
  t2.set(Ngram::of(TokenSeq{b}), 0.125);
  std::stringstream io;
  write_ngram_file(io, {t1, t2}, v);
  const std::string text = io.str();
  CHECK(text.rfind("# sent 0\n", 0) == 0);
  CHECK(text.find("\n\n# sent 4\nb\t0.125\n") != std::string::npos);

  Vocabulary v2;
  NgramFileOptions opt;
  opt.extend_vocabulary = true;
  auto back = read_ngram_file(io, v2, opt);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == t1);
  CHECK(back[1] == t2);

  std::stringstream again;
  write_ngram_file(again, back, v2);
  CHECK(again.str() == text);

  std::istringstream bad("# sent 0\na\t1.5\n");
  CHECK_THROWS_AS(read_ngram_file(bad, v2, opt), ParseError);
}

TEST_CASE("posterior set falls back to an epsilon table") {
  NgramTable t(2);
  t.set(Ngram::of(TokenSeq{a}), 0.5);
  PosteriorSet set({t}, 0.01);
  CHECK(set.table_for(2).lookup(TokenSeq{a}) == 0.5);
  CHECK(set.table_for(9).lookup(TokenSeq{a}) == 0.01);
  CHECK_THROWS_AS(PosteriorSet({t, t}), InputError);
}
