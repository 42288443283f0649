#pragma once

#include <cstdint>
#include <memory>
#include <vector>

namespace mbrcomb::accum {

// g physical devices (batches per step), delay factor d, batch size b.
struct BatchPlan {
  std::int64_t physical = 1;  // g
  std::int64_t delay = 1;     // d
  std::int64_t batch = 1;     // b

  std::int64_t effective_devices() const { return physical * delay; }          // g' = g d
  std::int64_t effective_batch() const { return batch * effective_devices(); }  // b' = b g'
};

struct EffectiveBatch {
  std::int64_t devices;  // g'
  std::int64_t batch;    // b'
  bool operator==(const EffectiveBatch&) const = default;
};

// (g d, b g d). Throws ConfigError unless all inputs are >= 1.
EffectiveBatch effective_batch(std::int64_t physical, std::int64_t delay, std::int64_t batch);

struct Example {
  std::vector<double> features;
  double label = 0.0;  // 0 or 1 for the logistic model
};
using Batch = std::vector<Example>;
using Params = std::vector<double>;

class Model {
 public:
  virtual ~Model() = default;
  virtual std::size_t dimension() const = 0;
  // Mean loss over the batch.
  virtual double loss(const Params& params, const Batch& batch) const = 0;
  // Gradient of the summed (not mean) loss, so batches combine by addition.
  virtual Params gradient_sum(const Params& params, const Batch& batch) const = 0;
};

// Logistic regression; params = weights then bias. Mean binary cross-entropy.
class LogisticModel final : public Model {
 public:
  explicit LogisticModel(std::size_t features) : features_(features) {}
  std::size_t dimension() const override { return features_ + 1; }
  double loss(const Params& params, const Batch& batch) const override;
  Params gradient_sum(const Params& params, const Batch& batch) const override;

 private:
  std::size_t features_;
};

// Per-example loss 1/2 ||w - target||^2, independent of the features.
class QuadraticModel final : public Model {
 public:
  explicit QuadraticModel(Params target) : target_(std::move(target)) {}
  std::size_t dimension() const override { return target_.size(); }
  double loss(const Params& params, const Batch& batch) const override;
  Params gradient_sum(const Params& params, const Batch& batch) const override;

 private:
  Params target_;
};

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void update(Params& params, const Params& mean_gradient) = 0;
  virtual std::unique_ptr<Optimizer> clone() const = 0;
};

class Sgd final : public Optimizer {
 public:
  explicit Sgd(double lr) : lr_(lr) {}
  void update(Params& params, const Params& mean_gradient) override;
  std::unique_ptr<Optimizer> clone() const override { return std::make_unique<Sgd>(*this); }

 private:
  double lr_;
};

class Adam final : public Optimizer {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void update(Params& params, const Params& mean_gradient) override;
  std::unique_ptr<Optimizer> clone() const override { return std::make_unique<Adam>(*this); }

 private:
  double lr_, beta1_, beta2_, eps_;
  Params m_, v_;
  std::int64_t t_ = 0;
};

// Example-weighted mean gradient over several batches.
Params accumulated_gradient(const Model& model, const Params& params, const std::vector<Batch>& batches);

// For each consecutive group of `delay` batches: sum gradients, divide by the
// group's example count, apply one optimizer update. Throws ConfigError when
// the batch count is not a multiple of delay.
Params train_accumulated(const Model& model, Params params, const std::vector<Batch>& batches, std::int64_t delay,
                         Optimizer& optimizer);

// Reference regimen: each group of `group` batches is merged into one large
// batch before computing its mean gradient.
Params train_large_batch(const Model& model, Params params, const std::vector<Batch>& batches, std::int64_t group,
                         Optimizer& optimizer);

// Central finite-difference gradient of the summed loss.
Params numeric_gradient_sum(const Model& model, const Params& params, const Batch& batch, double h = 1e-5);

// max_k |a_k - b_k| / max(1, |b_k|).
double relative_distance(const Params& a, const Params& b);

}  // namespace mbrcomb::accum
