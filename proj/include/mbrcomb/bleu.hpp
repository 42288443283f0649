#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mbrcomb {

inline constexpr int kBleuOrder = 4;

enum class BleuMode {
  kPretokenized,   // split on whitespace only
  kInternational,  // tokenize_international first
};

BleuMode parse_bleu_mode(std::string_view name);

// Sufficient statistics; corpus BLEU is a function of their sum.
struct BleuStats {
  std::array<std::uint64_t, kBleuOrder> matches{};
  std::array<std::uint64_t, kBleuOrder> totals{};
  std::uint64_t hyp_length = 0;
  std::uint64_t ref_length = 0;

  BleuStats& operator+=(const BleuStats& other);
};

struct BleuReport {
  double bleu = 0.0;  // 0..100
  std::array<double, kBleuOrder> precisions{};
  double brevity_penalty = 1.0;
  std::uint64_t hyp_length = 0;
  std::uint64_t ref_length = 0;

  // "bleu = 31.70 p1 = ... p4 = ... bp = ... hyp_len = ... ref_len = ..."
  std::string to_string() const;
};

// Clipped n-gram matches of one hypothesis against one reference.
BleuStats sentence_stats(const std::vector<std::string>& hyp, const std::vector<std::string>& ref);

// bleu = 100 * BP * exp(mean log p_n); 0 when any p_n is 0.
// BP = min(1, exp(1 - ref_len / hyp_len)).
BleuReport bleu_from_stats(const BleuStats& stats);

// Case-sensitive corpus BLEU-4 with one reference per hypothesis. Throws
// InputError on a length mismatch or an empty corpus.
BleuReport corpus_bleu(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
                       BleuMode mode = BleuMode::kPretokenized);
BleuReport corpus_bleu_tokens(const std::vector<std::vector<std::string>>& hyps,
                              const std::vector<std::vector<std::string>>& refs);

// International tokenization, modelled on the mteval-v13a rules:
//   1. drop "<skipped>", join "-\n", newlines become spaces
//   2. unescape &quot; &amp; &lt; &gt;
//   3. split off ASCII punctuation except . , ' -
//   4. split . and , unless preceded by a digit
//   5. split . and , unless followed by a digit
//   6. split - after a digit
//   7. split on Unicode whitespace
// Case is kept. The output re-tokenizes to itself.
std::vector<std::string> tokenize_international(std::string_view text);

}  // namespace mbrcomb
