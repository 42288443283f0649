#include "mbrcomb/grad_accum.hpp"

#include <algorithm>
#include <cmath>

#include "mbrcomb/errors.hpp"

namespace mbrcomb::accum {

EffectiveBatch effective_batch(std::int64_t physical, std::int64_t delay, std::int64_t batch) {
  if (physical < 1 || delay < 1 || batch < 1) {
    throw ConfigError("g, d and b must all be positive (got " + std::to_string(physical) + ", " +
                      std::to_string(delay) + ", " + std::to_string(batch) + ")");
  }
  BatchPlan plan{physical, delay, batch};
  return {plan.effective_devices(), plan.effective_batch()};
}

namespace {

double logit(const Params& params, const Example& ex) {
  double z = params.back();
  for (std::size_t k = 0; k < ex.features.size(); ++k) z += params[k] * ex.features[k];
  return z;
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void check_size(const Params& params, std::size_t dim) {
  if (params.size() != dim) throw ConfigError("parameter vector has the wrong dimension");
}

}  // namespace

double LogisticModel::loss(const Params& params, const Batch& batch) const {
  check_size(params, dimension());
  if (batch.empty()) return 0.0;
  double total = 0.0;
  for (const auto& ex : batch) {
    const double z = logit(params, ex);
    // -[y log s(z) + (1-y) log(1 - s(z))]
    total += softplus(z) - ex.label * z;
  }
  return total / static_cast<double>(batch.size());
}

Params LogisticModel::gradient_sum(const Params& params, const Batch& batch) const {
  check_size(params, dimension());
  Params g(dimension(), 0.0);
  for (const auto& ex : batch) {
    const double z = logit(params, ex);
    const double residual = 1.0 / (1.0 + std::exp(-z)) - ex.label;
    for (std::size_t k = 0; k < features_; ++k) g[k] += residual * ex.features[k];
    g[features_] += residual;
  }
  return g;
}

double QuadraticModel::loss(const Params& params, const Batch& batch) const {
  check_size(params, dimension());
  if (batch.empty()) return 0.0;
  double sq = 0.0;
  for (std::size_t k = 0; k < target_.size(); ++k) sq += (params[k] - target_[k]) * (params[k] - target_[k]);
  return 0.5 * sq;
}

Params QuadraticModel::gradient_sum(const Params& params, const Batch& batch) const {
  check_size(params, dimension());
  Params g(dimension(), 0.0);
  const double n = static_cast<double>(batch.size());
  for (std::size_t k = 0; k < target_.size(); ++k) g[k] = n * (params[k] - target_[k]);
  return g;
}

void Sgd::update(Params& params, const Params& mean_gradient) {
  for (std::size_t k = 0; k < params.size(); ++k) params[k] -= lr_ * mean_gradient[k];
}

void Adam::update(Params& params, const Params& mean_gradient) {
  if (m_.empty()) {
    m_.assign(params.size(), 0.0);
    v_.assign(params.size(), 0.0);
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = mean_gradient[k];
    m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * g;
    v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * g * g;
    params[k] -= lr_ * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + eps_);
  }
}

Params accumulated_gradient(const Model& model, const Params& params, const std::vector<Batch>& batches) {
  Params sum(model.dimension(), 0.0);
  std::size_t examples = 0;
  for (const auto& b : batches) {
    Params g = model.gradient_sum(params, b);
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += g[k];
    examples += b.size();
  }
  if (examples == 0) throw ConfigError("accumulation group holds no examples");
  for (double& x : sum) x /= static_cast<double>(examples);
  return sum;
}

Params train_accumulated(const Model& model, Params params, const std::vector<Batch>& batches, std::int64_t delay,
                         Optimizer& optimizer) {
  if (delay < 1) throw ConfigError("delay factor must be >= 1");
  const auto d = static_cast<std::size_t>(delay);
  if (batches.size() % d != 0) {
    throw ConfigError(std::to_string(batches.size()) + " batches cannot be split into groups of " +
                      std::to_string(d));
  }
  for (std::size_t start = 0; start < batches.size(); start += d) {
    std::vector<Batch> group(batches.begin() + static_cast<std::ptrdiff_t>(start),
                             batches.begin() + static_cast<std::ptrdiff_t>(start + d));
    optimizer.update(params, accumulated_gradient(model, params, group));
  }
  return params;
}

Params train_large_batch(const Model& model, Params params, const std::vector<Batch>& batches, std::int64_t group,
                         Optimizer& optimizer) {
  if (group < 1) throw ConfigError("group size must be >= 1");
  const auto n = static_cast<std::size_t>(group);
  if (batches.size() % n != 0) throw ConfigError("batch count is not a multiple of the group size");
  for (std::size_t start = 0; start < batches.size(); start += n) {
    Batch merged;
    for (std::size_t i = start; i < start + n; ++i) merged.insert(merged.end(), batches[i].begin(), batches[i].end());
    if (merged.empty()) throw ConfigError("large batch holds no examples");
    Params g = model.gradient_sum(params, merged);
    for (double& x : g) x /= static_cast<double>(merged.size());
    optimizer.update(params, g);
  }
  return params;
}

Params numeric_gradient_sum(const Model& model, const Params& params, const Batch& batch, double h) {
  Params g(params.size());
  const double n = static_cast<double>(batch.size());
  Params p = params;
  for (std::size_t k = 0; k < params.size(); ++k) {
    p[k] = params[k] + h;
    const double up = model.loss(p, batch) * n;
    p[k] = params[k] - h;
    const double down = model.loss(p, batch) * n;
    p[k] = params[k];
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

double relative_distance(const Params& a, const Params& b) {
  if (a.size() != b.size()) throw ConfigError("parameter vectors differ in size");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    worst = std::max(worst, std::abs(a[k] - b[k]) / std::max(1.0, std::abs(b[k])));
  }
  return worst;
}

}  // namespace mbrcomb::accum
