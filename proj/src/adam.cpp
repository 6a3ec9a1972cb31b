#include "adam.hpp"

#include <cmath>

#include "error.hpp"

namespace gatc {

Adam::Adam(std::vector<ParamView> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    if (lr <= 0.0) throw InvalidArgument("Adam: learning rate must be positive");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw InvalidArgument("Adam: betas must lie in [0, 1)");
    std::size_t total = 0;
    for (const auto& p : params_) total += p.n;
    m_.assign(total, 0.0);
    v_.assign(total, 0.0);
}

void Adam::step() {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    std::size_t off = 0;
    for (const auto& p : params_) {
        for (std::size_t i = 0; i < p.n; ++i, ++off) {
            const double g = p.grad[i];
            m_[off] = beta1_ * m_[off] + (1.0 - beta1_) * g;
            v_[off] = beta2_ * v_[off] + (1.0 - beta2_) * g * g;
            const double mhat = m_[off] / c1;
            const double vhat = v_[off] / c2;
            p.value[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

void Adam::set_steps(std::int64_t t) {
    if (t < 0) throw InvalidArgument("Adam: negative step counter");
    t_ = t;
}

std::vector<StateView> Adam::state() {
    return {{"optimizer.m", m_.data(), m_.size()}, {"optimizer.v", v_.data(), v_.size()}};
}

}  // namespace gatc
