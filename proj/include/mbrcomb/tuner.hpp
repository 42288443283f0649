#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "mbrcomb/bleu.hpp"
#include "mbrcomb/combiner.hpp"

namespace mbrcomb {

struct LineSearchResult {
  double step = 0.0;
  double value = 0.0;
  int evaluations = 0;
};

inline constexpr int kMaxGoldenIterations = 64;

// Maximizes f over [lo, hi] by golden-section bracketing until the bracket
// is narrower than tol (or 64 iterations). Both endpoints are evaluated; the
// best evaluated point is returned, so the result is never worse than
// either endpoint. Throws ConfigError unless lo < hi and tol > 0.
LineSearchResult golden_section_maximize(const std::function<double(double)>& f, double lo, double hi, double tol);

// f restricted to base + step * direction.
LineSearchResult golden_line_search(const std::function<double(const std::vector<double>&)>& objective,
                                    const std::vector<double>& base, const std::vector<double>& direction,
                                    double lo, double hi, double tol);

struct TracePoint {
  int iteration = 0;
  std::vector<double> weights;  // member weights, then alpha when tuned
  double objective = 0.0;
};

struct TuneState {
  std::vector<double> weights;
  std::vector<std::vector<double>> directions;
  double best_objective = 0.0;
  std::vector<TracePoint> trace;
  int rounds = 0;
  int evaluations = 0;
};

struct TuneOptions {
  double tol = 1e-3;        // minimum BLEU gain per round to continue
  int max_rounds = 3;
  double line_tol = 0.05;   // golden-section bracket width
  double alpha_max = 2.0;
  std::size_t jobs = 1;
  // One line per objective evaluation when set.
  std::ostream* log = nullptr;
};

struct TuneResult {
  CombinationConfig config;
  TuneState state;
  double initial_objective = 0.0;
};

// Corpus BLEU (pretokenized) of the 1-best decodes of sources.
double dev_bleu(const CombinationConfig& config, const std::vector<Source>& sources,
                const std::vector<std::vector<std::string>>& references, const Vocabulary& vocab, std::size_t jobs);

// Powell direction-set search over the member weights, plus alpha when
// length normalization is enabled. Weights are clamped to >= 0 and rescaled
// to sum to one after every line search; only improving moves are accepted.
// Starts from the best of the initial point, every single-member corner and
// the uniform point. Decode failures propagate as DecodeError.
TuneResult powell_tune(const CombinationConfig& config, const std::vector<Source>& dev_sources,
                       const std::vector<std::vector<std::string>>& dev_references, const Vocabulary& vocab,
                       const TuneOptions& options = {});

}  // namespace mbrcomb
