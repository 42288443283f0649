#include "mbrcomb/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

#include "mbrcomb/errors.hpp"
#include "mbrcomb/format.hpp"

namespace mbrcomb {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

LineSearchResult golden_section_maximize(const std::function<double(double)>& f, double lo, double hi, double tol) {
  if (!(lo < hi)) throw ConfigError("line search needs lo < hi");
  if (!(tol > 0.0)) throw ConfigError("line search tolerance must be > 0");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;

  LineSearchResult best{lo, kNegInf, 0};
  auto eval = [&](double x) {
    double v = f(x);
    ++best.evaluations;
    if (v > best.value) {
      best.value = v;
      best.step = x;
    }
    return v;
  };

  eval(lo);
  eval(hi);
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = eval(c);
  double fd = eval(d);
  for (int it = 0; it < kMaxGoldenIterations && (b - a) >= tol; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = eval(d);
    }
  }
  return best;
}

LineSearchResult golden_line_search(const std::function<double(const std::vector<double>&)>& objective,
                                    const std::vector<double>& base, const std::vector<double>& direction,
                                    double lo, double hi, double tol) {
  if (base.size() != direction.size()) throw ConfigError("line search base and direction differ in size");
  std::vector<double> point(base.size());
  return golden_section_maximize(
      [&](double step) {
        for (std::size_t k = 0; k < base.size(); ++k) point[k] = base[k] + step * direction[k];
        return objective(point);
      },
      lo, hi, tol);
}

double dev_bleu(const CombinationConfig& config, const std::vector<Source>& sources,
                const std::vector<std::vector<std::string>>& references, const Vocabulary& vocab, std::size_t jobs) {
  std::vector<NbestList> lists = decode_corpus(config, sources, jobs);
  std::vector<std::vector<std::string>> hyps;
  hyps.reserve(lists.size());
  for (const auto& l : lists) hyps.push_back(split_words(vocab.decode(l.entries.front().tokens)));
  return corpus_bleu_tokens(hyps, references).bleu;
}

namespace {

class PowellSearch {
 public:
  PowellSearch(const CombinationConfig& config, const std::vector<Source>& sources,
               const std::vector<std::vector<std::string>>& references, const Vocabulary& vocab,
               const TuneOptions& options)
      : config_(config),
        sources_(sources),
        references_(references),
        vocab_(vocab),
        options_(options),
        members_(config.member_count()),
        tune_alpha_(config.length_normalization),
        dims_(members_ + (tune_alpha_ ? 1 : 0)) {}

  TuneResult run();

 private:
  // Clamps weights to >= 0 and rescales them to sum to one; false when no
  // positive weight is left.
  bool project(std::vector<double>& point) const {
    double sum = 0.0;
    for (std::size_t k = 0; k < members_; ++k) {
      point[k] = std::max(point[k], 0.0);
      sum += point[k];
    }
    if (!(sum > 0.0)) return false;
    for (std::size_t k = 0; k < members_; ++k) point[k] /= sum;
    if (tune_alpha_) point[members_] = std::clamp(point[members_], 0.0, options_.alpha_max);
    return true;
  }

  double evaluate(std::vector<double> point, int round, int direction, double step) {
    if (!project(point)) return kNegInf;
    auto it = memo_.find(point);
    double value;
    if (it != memo_.end()) {
      value = it->second;
    } else {
      CombinationConfig c = config_;
      c.set_weights(std::vector<double>(point.begin(), point.begin() + static_cast<std::ptrdiff_t>(members_)));
      if (tune_alpha_) c.length_norm_alpha = point[members_];
      value = dev_bleu(c, sources_, references_, vocab_, options_.jobs);
      memo_.emplace(point, value);
      ++evaluations_;
    }
    if (options_.log) {
      *options_.log << "round=" << round << "\tdirection=" << direction << "\tstep=" << format_shortest(step)
                    << "\tbleu=" << format_fixed(value, 4) << '\n';
    }
    return value;
  }

  // Step interval keeping weights >= 0 and alpha within bounds.
  std::pair<double, double> bracket(const std::vector<double>& point, const std::vector<double>& dir) const {
    double lo = -1.0;
    double hi = 1.0;
    for (std::size_t k = 0; k < dims_; ++k) {
      if (dir[k] == 0.0) continue;
      double lower_bound = 0.0;
      double upper_bound = std::numeric_limits<double>::infinity();
      if (tune_alpha_ && k == members_) upper_bound = options_.alpha_max;
      // lower_bound <= point + t * dir <= upper_bound
      double t1 = (lower_bound - point[k]) / dir[k];
      double t2 = (upper_bound - point[k]) / dir[k];
      if (dir[k] > 0) {
        lo = std::max(lo, t1);
        hi = std::min(hi, t2);
      } else {
        hi = std::min(hi, t1);
        lo = std::max(lo, t2);
      }
    }
    return {lo, hi};
  }

  const CombinationConfig& config_;
  const std::vector<Source>& sources_;
  const std::vector<std::vector<std::string>>& references_;
  const Vocabulary& vocab_;
  const TuneOptions& options_;
  std::size_t members_;
  bool tune_alpha_;
  std::size_t dims_;
  std::map<std::vector<double>, double> memo_;
  int evaluations_ = 0;
};

TuneResult PowellSearch::run() {
  TuneResult result;
  TuneState& state = result.state;

  std::vector<double> initial = config_.weights();
  if (tune_alpha_) initial.push_back(config_.length_norm_alpha);
  if (!project(initial)) throw ConfigError("initial weights must contain a positive entry");

  std::vector<std::vector<double>> starts{initial};
  for (std::size_t k = 0; k < members_; ++k) {
    std::vector<double> corner(dims_, 0.0);
    corner[k] = 1.0;
    if (tune_alpha_) corner[members_] = initial[members_];
    starts.push_back(corner);
  }
  std::vector<double> uniform(dims_, 1.0 / static_cast<double>(members_));
  if (tune_alpha_) uniform[members_] = initial[members_];
  starts.push_back(uniform);

  std::vector<double> point;
  double value = kNegInf;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    double v = evaluate(starts[s], 0, -1, 0.0);
    if (s == 0) result.initial_objective = v;
    if (v > value) {
      value = v;
      point = starts[s];
      project(point);
    }
  }

  int accepted = 0;
  state.trace.push_back(TracePoint{accepted, point, value});
  for (std::size_t k = 0; k < dims_; ++k) {
    std::vector<double> dir(dims_, 0.0);
    dir[k] = 1.0;
    state.directions.push_back(dir);
  }

  auto search_along = [&](const std::vector<double>& dir, int round, int index) -> double {
    auto [lo, hi] = bracket(point, dir);
    if (!(lo < hi)) return 0.0;
    const std::vector<double> base = point;
    LineSearchResult r = golden_line_search(
        [&](const std::vector<double>& p) {
          // Recover the step for logging from the first moving coordinate.
          double step = 0.0;
          for (std::size_t k = 0; k < dims_; ++k) {
            if (dir[k] != 0.0) {
              step = (p[k] - base[k]) / dir[k];
              break;
            }
          }
          return evaluate(p, round, index, step);
        },
        base, dir, lo, hi, options_.line_tol);
    if (!(r.value > value)) return 0.0;
    std::vector<double> next = base;
    for (std::size_t k = 0; k < dims_; ++k) next[k] += r.step * dir[k];
    project(next);
    const double gain = r.value - value;
    point = std::move(next);
    value = r.value;
    state.trace.push_back(TracePoint{++accepted, point, value});
    return gain;
  };

  for (int round = 1; round <= options_.max_rounds; ++round) {
    state.rounds = round;
    const std::vector<double> start = point;
    const double start_value = value;
    double largest_gain = 0.0;
    std::ptrdiff_t largest_index = -1;
    for (std::size_t d = 0; d < state.directions.size(); ++d) {
      const std::vector<double> dir = state.directions[d];
      double gain = search_along(dir, round, static_cast<int>(d));
      if (gain > largest_gain) {
        largest_gain = gain;
        largest_index = static_cast<std::ptrdiff_t>(d);
      }
    }
    std::vector<double> displacement(dims_);
    bool moved = false;
    for (std::size_t k = 0; k < dims_; ++k) {
      displacement[k] = point[k] - start[k];
      moved = moved || displacement[k] != 0.0;
    }
    if (moved && dims_ > 1) {
      search_along(displacement, round, static_cast<int>(state.directions.size()));
      if (largest_index >= 0) {
        state.directions.erase(state.directions.begin() + largest_index);
        state.directions.push_back(displacement);
      }
    }
    if (value - start_value < options_.tol) break;
  }

  state.weights = point;
  state.best_objective = value;
  state.evaluations = evaluations_;
  result.config = config_;
  result.config.set_weights(
      std::vector<double>(point.begin(), point.begin() + static_cast<std::ptrdiff_t>(members_)));
  if (tune_alpha_) result.config.length_norm_alpha = point[members_];
  return result;
}

}  // namespace

TuneResult powell_tune(const CombinationConfig& config, const std::vector<Source>& dev_sources,
                       const std::vector<std::vector<std::string>>& dev_references, const Vocabulary& vocab,
                       const TuneOptions& options) {
  config.validate();
  if (dev_sources.empty()) throw ConfigError("tuning needs a non-empty dev set");
  if (dev_sources.size() != dev_references.size()) throw InputError("dev sources and references differ in length");
  if (options.max_rounds < 0) throw ConfigError("max_rounds must be >= 0");
  PowellSearch search(config, dev_sources, dev_references, vocab, options);
  return search.run();
}

}  // namespace mbrcomb
