#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "blade/core.hpp"
#include "blade/rng.hpp"

namespace blade::nn {

// A named block inside a flat parameter vector. Values live in one buffer
// owned by ParamStore; gradients go into caller-provided buffers of the same
// layout, so data-parallel workers can accumulate independently and reduce
// in a fixed order.
struct ParamRef {
  std::size_t offset = 0;
  Eigen::Index rows = 0, cols = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows * cols); }

  Eigen::Map<const Matrix> view(const std::vector<double>& buf) const {
    return {buf.data() + offset, rows, cols};
  }
  Eigen::Map<Matrix> view(std::vector<double>& buf) const {
    return {buf.data() + offset, rows, cols};
  }
};

class ParamStore {
 public:
  enum class Init { kFanIn, kZero, kSmall };

  ParamRef add(const std::string& name, Eigen::Index rows, Eigen::Index cols, Init init = Init::kFanIn) {
    ParamRef ref{total_, rows, cols};
    blocks_.push_back({name, ref, init});
    total_ += ref.size();
    return ref;
  }

  void seal() { values_.assign(total_, 0.0); }

  void init_weights(Rng& rng) {
    for (const auto& b : blocks_) {
      double* p = values_.data() + b.ref.offset;
      switch (b.init) {
        case Init::kZero:
          std::fill(p, p + b.ref.size(), 0.0);
          break;
        case Init::kSmall:
          for (std::size_t i = 0; i < b.ref.size(); ++i) p[i] = rng.uniform(-0.1, 0.1);
          break;
        case Init::kFanIn: {
          double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(1, b.ref.rows)));
          for (std::size_t i = 0; i < b.ref.size(); ++i) p[i] = rng.uniform(-bound, bound);
          break;
        }
      }
    }
  }

  std::size_t size() const { return total_; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

 private:
  struct Block {
    std::string name;
    ParamRef ref;
    Init init;
  };
  std::vector<Block> blocks_;
  std::size_t total_ = 0;
  std::vector<double> values_;
};

// Adaptive-moment gradient descent over a flat parameter vector.
class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::vector<double>& params, const std::vector<double>& grad) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
      params[i] -= lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps_);
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace blade::nn
