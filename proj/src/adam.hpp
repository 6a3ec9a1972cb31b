#pragma once

#include <cstdint>
#include <vector>

#include "layers.hpp"

namespace gatc {

/// Adam over a fixed set of parameter views, first and second moments kept in
/// two flat arrays so they can ride along in checkpoints.
class Adam {
  public:
    explicit Adam(std::vector<ParamView> params, double lr, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8);

    /// One update from the gradients currently behind the views.
    void step();

    std::int64_t steps() const { return t_; }
    /// Restores the bias-correction clock on resume.
    void set_steps(std::int64_t t);

    /// Moment arrays, named optimizer.m / optimizer.v.
    std::vector<StateView> state();

  private:
    std::vector<ParamView> params_;
    std::vector<double> m_, v_;
    double lr_, beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
};

}  // namespace gatc
