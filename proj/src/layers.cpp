#include "layers.hpp"

#include <cmath>

#include "error.hpp"

namespace gatc {

namespace {

void check_input(const Tensor& x, int channels, const char* who) {
    if (x.n < 1) throw InvalidArgument(std::string(who) + ": empty batch");
    if (x.c != channels) throw InvalidArgument(std::string(who) + ": channel count mismatch");
}

// One column per output position; rows run over (channel, kernel row, kernel
// column) of the receptive field.
void im2col(const Tensor& x, int i, int kernel, int oh, int ow, Matrix& col) {
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            const Eigen::Index cidx = static_cast<Eigen::Index>(oy) * ow + ox;
            Eigen::Index row = 0;
            for (int c = 0; c < x.c; ++c) {
                const double* plane = x.plane(i, c);
                for (int dy = 0; dy < kernel; ++dy) {
                    const double* src = plane + static_cast<std::size_t>(oy + dy) * x.w + ox;
                    for (int dx = 0; dx < kernel; ++dx) col(row++, cidx) = src[dx];
                }
            }
        }
    }
}

}  // namespace

Conv2d::Conv2d(int in_c, int out_c, int kernel) : in_c_(in_c), out_c_(out_c), kernel_(kernel) {
    if (in_c < 1 || out_c < 1 || kernel < 1) throw InvalidArgument("Conv2d: bad geometry");
    const Eigen::Index cols = static_cast<Eigen::Index>(in_c) * kernel * kernel;
    w_ = Matrix::Zero(out_c, cols);
    b_ = Vector::Zero(out_c);
    dw_ = Matrix::Zero(out_c, cols);
    db_ = Vector::Zero(out_c);
}

void Conv2d::init(Rng& rng) {
    const double scale = std::sqrt(2.0 / static_cast<double>(w_.cols()));
    for (Eigen::Index i = 0; i < w_.rows(); ++i)
        for (Eigen::Index j = 0; j < w_.cols(); ++j) w_(i, j) = rng.normal() * scale;
    b_.setZero();
}

Tensor Conv2d::forward(const Tensor& x, bool keep_cache) {
    check_input(x, in_c_, "Conv2d");
    const int oh = out_h(x.h);
    const int ow = out_w(x.w);
    if (oh < 1 || ow < 1) throw InvalidArgument("Conv2d: input smaller than kernel");

    Tensor out(x.n, out_c_, oh, ow);
    const Eigen::Index patch = static_cast<Eigen::Index>(in_c_) * kernel_ * kernel_;
    Matrix col(patch, static_cast<Eigen::Index>(oh) * ow);
    for (int i = 0; i < x.n; ++i) {
        im2col(x, i, kernel_, oh, ow, col);
        Eigen::Map<RowMatrix> out_map(out.sample(i), out_c_, static_cast<Eigen::Index>(oh) * ow);
        out_map.noalias() = w_ * col;
        out_map.colwise() += b_;
    }
    if (keep_cache)
        x_ = x;
    else
        x_ = Tensor();
    return out;
}

Tensor Conv2d::backward(const Tensor& dout) {
    if (x_.n != dout.n || dout.c != out_c_ || dout.h != out_h(x_.h) || dout.w != out_w(x_.w))
        throw NumericError("Conv2d: backward without cached forward");
    Tensor dx(dout.n, in_c_, x_.h, x_.w);

    const Eigen::Index patch = static_cast<Eigen::Index>(in_c_) * kernel_ * kernel_;
    Matrix col(patch, static_cast<Eigen::Index>(dout.h) * dout.w);
    for (int i = 0; i < dout.n; ++i) {
        im2col(x_, i, kernel_, dout.h, dout.w, col);
        Eigen::Map<const RowMatrix> dout_map(dout.sample(i), out_c_,
                                             static_cast<Eigen::Index>(dout.h) * dout.w);
        dw_.noalias() += dout_map * col.transpose();
        db_ += dout_map.rowwise().sum();

        const Matrix dcol = w_.transpose() * dout_map;
        // col2im: scatter-add patches back onto the input plane.
        for (int oy = 0; oy < dout.h; ++oy) {
            for (int ox = 0; ox < dout.w; ++ox) {
                const Eigen::Index cidx = static_cast<Eigen::Index>(oy) * dout.w + ox;
                Eigen::Index row = 0;
                for (int c = 0; c < in_c_; ++c) {
                    double* plane = dx.plane(i, c);
                    for (int dy = 0; dy < kernel_; ++dy) {
                        double* dst = plane + static_cast<std::size_t>(oy + dy) * x_.w + ox;
                        for (int dxk = 0; dxk < kernel_; ++dxk) dst[dxk] += dcol(row++, cidx);
                    }
                }
            }
        }
    }
    return dx;
}

void Conv2d::zero_grad() {
    dw_.setZero();
    db_.setZero();
}

void Conv2d::collect_params(std::vector<ParamView>& out) {
    out.push_back({w_.data(), dw_.data(), static_cast<std::size_t>(w_.size())});
    out.push_back({b_.data(), db_.data(), static_cast<std::size_t>(b_.size())});
}

void Conv2d::collect_state(const std::string& prefix, std::vector<StateView>& out) {
    out.push_back({prefix + ".weight", w_.data(), static_cast<std::size_t>(w_.size())});
    out.push_back({prefix + ".bias", b_.data(), static_cast<std::size_t>(b_.size())});
}

BatchNorm2d::BatchNorm2d(int channels, double momentum, double eps)
    : c_(channels), momentum_(momentum), eps_(eps) {
    gamma_ = Vector::Ones(channels);
    beta_ = Vector::Zero(channels);
    dgamma_ = Vector::Zero(channels);
    dbeta_ = Vector::Zero(channels);
    running_mean_ = Vector::Zero(channels);
    running_var_ = Vector::Ones(channels);
}

Tensor BatchNorm2d::forward(const Tensor& x, bool train) {
    check_input(x, c_, "BatchNorm2d");
    const std::size_t plane = x.plane_size();
    const double count = static_cast<double>(x.n) * static_cast<double>(plane);
    Tensor out(x.n, x.c, x.h, x.w);

    if (train) {
        Vector mean = Vector::Zero(c_), var = Vector::Zero(c_);
        for (int i = 0; i < x.n; ++i) {
            for (int c = 0; c < c_; ++c) {
                const double* p = x.plane(i, c);
                for (std::size_t k = 0; k < plane; ++k) mean[c] += p[k];
            }
        }
        mean /= count;
        for (int i = 0; i < x.n; ++i) {
            for (int c = 0; c < c_; ++c) {
                const double* p = x.plane(i, c);
                for (std::size_t k = 0; k < plane; ++k) {
                    const double d = p[k] - mean[c];
                    var[c] += d * d;
                }
            }
        }
        var /= count;

        inv_std_ = (var.array() + eps_).rsqrt();
        xhat_ = Tensor(x.n, x.c, x.h, x.w);
        for (int i = 0; i < x.n; ++i) {
            for (int c = 0; c < c_; ++c) {
                const double* p = x.plane(i, c);
                double* xh = xhat_.plane(i, c);
                double* o = out.plane(i, c);
                for (std::size_t k = 0; k < plane; ++k) {
                    xh[k] = (p[k] - mean[c]) * inv_std_[c];
                    o[k] = gamma_[c] * xh[k] + beta_[c];
                }
            }
        }

        // Running estimates track the unbiased variance, as is conventional.
        const double unbias = count > 1.0 ? count / (count - 1.0) : 1.0;
        running_mean_ = (1.0 - momentum_) * running_mean_ + momentum_ * mean;
        running_var_ = (1.0 - momentum_) * running_var_ + momentum_ * (var * unbias);
    } else {
        xhat_ = Tensor();
        for (int i = 0; i < x.n; ++i) {
            for (int c = 0; c < c_; ++c) {
                const double inv = 1.0 / std::sqrt(running_var_[c] + eps_);
                const double* p = x.plane(i, c);
                double* o = out.plane(i, c);
                for (std::size_t k = 0; k < plane; ++k)
                    o[k] = gamma_[c] * ((p[k] - running_mean_[c]) * inv) + beta_[c];
            }
        }
    }
    return out;
}

Tensor BatchNorm2d::backward(const Tensor& dout) {
    if (!xhat_.same_shape(dout)) throw NumericError("BatchNorm2d: backward without cached forward");
    const std::size_t plane = dout.plane_size();
    const double count = static_cast<double>(dout.n) * static_cast<double>(plane);

    Vector sum_dout = Vector::Zero(c_), sum_dout_xhat = Vector::Zero(c_);
    for (int i = 0; i < dout.n; ++i) {
        for (int c = 0; c < c_; ++c) {
            const double* d = dout.plane(i, c);
            const double* xh = xhat_.plane(i, c);
            for (std::size_t k = 0; k < plane; ++k) {
                sum_dout[c] += d[k];
                sum_dout_xhat[c] += d[k] * xh[k];
            }
        }
    }
    dbeta_ += sum_dout;
    dgamma_ += sum_dout_xhat;

    Tensor dx(dout.n, dout.c, dout.h, dout.w);
    for (int i = 0; i < dout.n; ++i) {
        for (int c = 0; c < c_; ++c) {
            const double* d = dout.plane(i, c);
            const double* xh = xhat_.plane(i, c);
            double* o = dx.plane(i, c);
            const double scale = gamma_[c] * inv_std_[c];
            const double mean_dout = sum_dout[c] / count;
            const double mean_dout_xhat = sum_dout_xhat[c] / count;
            for (std::size_t k = 0; k < plane; ++k)
                o[k] = scale * (d[k] - mean_dout - xh[k] * mean_dout_xhat);
        }
    }
    return dx;
}

void BatchNorm2d::zero_grad() {
    dgamma_.setZero();
    dbeta_.setZero();
}

void BatchNorm2d::collect_params(std::vector<ParamView>& out) {
    out.push_back({gamma_.data(), dgamma_.data(), static_cast<std::size_t>(gamma_.size())});
    out.push_back({beta_.data(), dbeta_.data(), static_cast<std::size_t>(beta_.size())});
}

void BatchNorm2d::collect_state(const std::string& prefix, std::vector<StateView>& out) {
    out.push_back({prefix + ".gamma", gamma_.data(), static_cast<std::size_t>(gamma_.size())});
    out.push_back({prefix + ".beta", beta_.data(), static_cast<std::size_t>(beta_.size())});
    out.push_back({prefix + ".running_mean", running_mean_.data(),
                   static_cast<std::size_t>(running_mean_.size())});
    out.push_back({prefix + ".running_var", running_var_.data(),
                   static_cast<std::size_t>(running_var_.size())});
}

Tensor Relu::forward(const Tensor& x, bool keep_cache) {
    Tensor out = x;
    if (keep_cache)
        mask_.assign(x.size(), false);
    else
        mask_.clear();
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        if (out.data[i] > 0.0) {
            if (keep_cache) mask_[i] = true;
        } else {
            out.data[i] = 0.0;
        }
    }
    return out;
}

Tensor Relu::backward(const Tensor& dout) const {
    if (mask_.size() != dout.size()) throw NumericError("Relu: backward without cached forward");
    Tensor dx = dout;
    for (std::size_t i = 0; i < dx.data.size(); ++i) {
        if (!mask_[i]) dx.data[i] = 0.0;
    }
    return dx;
}

Matrix Relu::forward_rows(const Matrix& x, bool keep_cache) {
    Matrix out = x;
    if (keep_cache)
        mask_.assign(static_cast<std::size_t>(x.size()), false);
    else
        mask_.clear();
    double* d = out.data();
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        if (d[i] > 0.0) {
            if (keep_cache) mask_[static_cast<std::size_t>(i)] = true;
        } else {
            d[i] = 0.0;
        }
    }
    return out;
}

Matrix Relu::backward_rows(const Matrix& dout) const {
    if (mask_.size() != static_cast<std::size_t>(dout.size()))
        throw NumericError("Relu: backward without cached forward");
    Matrix dx = dout;
    double* d = dx.data();
    for (Eigen::Index i = 0; i < dx.size(); ++i) {
        if (!mask_[static_cast<std::size_t>(i)]) d[i] = 0.0;
    }
    return dx;
}

Tensor MaxPool2::forward(const Tensor& x, bool keep_cache) {
    const int oh = x.h / 2;
    const int ow = x.w / 2;
    if (oh < 1 || ow < 1) throw InvalidArgument("MaxPool2: input too small");
    in_n_ = x.n;
    in_c_ = x.c;
    in_h_ = x.h;
    in_w_ = x.w;

    Tensor out(x.n, x.c, oh, ow);
    if (keep_cache)
        argmax_.assign(static_cast<std::size_t>(x.n) * x.c * oh * ow, 0);
    else
        argmax_.clear();

    std::size_t cell = 0;
    for (int i = 0; i < x.n; ++i) {
        for (int c = 0; c < x.c; ++c) {
            const double* plane = x.plane(i, c);
            double* o = out.plane(i, c);
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox, ++cell) {
                    int best_idx = (2 * oy) * x.w + 2 * ox;
                    double best = plane[best_idx];
                    for (int dy = 0; dy < 2; ++dy) {
                        for (int dx = 0; dx < 2; ++dx) {
                            const int idx = (2 * oy + dy) * x.w + 2 * ox + dx;
                            if (plane[idx] > best) {
                                best = plane[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    o[static_cast<std::size_t>(oy) * ow + ox] = best;
                    if (keep_cache) argmax_[cell] = best_idx;
                }
            }
        }
    }
    return out;
}

Tensor MaxPool2::backward(const Tensor& dout) const {
    if (argmax_.size() != dout.size()) throw NumericError("MaxPool2: backward without cached forward");
    Tensor dx(in_n_, in_c_, in_h_, in_w_);
    std::size_t cell = 0;
    for (int i = 0; i < dout.n; ++i) {
        for (int c = 0; c < dout.c; ++c) {
            const double* d = dout.plane(i, c);
            double* o = dx.plane(i, c);
            const std::size_t cells = dout.plane_size();
            for (std::size_t k = 0; k < cells; ++k, ++cell) o[argmax_[cell]] += d[k];
        }
    }
    return dx;
}

Linear::Linear(int in_features, int out_features) : in_(in_features), out_(out_features) {
    if (in_features < 1 || out_features < 1) throw InvalidArgument("Linear: bad geometry");
    w_ = Matrix::Zero(out_, in_);
    b_ = Vector::Zero(out_);
    dw_ = Matrix::Zero(out_, in_);
    db_ = Vector::Zero(out_);
}

void Linear::init(Rng& rng) {
    const double scale = std::sqrt(2.0 / static_cast<double>(in_));
    for (Eigen::Index i = 0; i < w_.rows(); ++i)
        for (Eigen::Index j = 0; j < w_.cols(); ++j) w_(i, j) = rng.normal() * scale;
    b_.setZero();
}

Matrix Linear::forward(const Matrix& x, bool keep_cache) {
    if (x.cols() != in_) throw InvalidArgument("Linear: feature size mismatch");
    if (keep_cache)
        x_ = x;
    else
        x_.resize(0, 0);
    Matrix y = x * w_.transpose();
    y.rowwise() += b_.transpose();
    return y;
}

Matrix Linear::backward(const Matrix& dout) {
    if (x_.rows() != dout.rows() || dout.cols() != out_)
        throw NumericError("Linear: backward without cached forward");
    dw_.noalias() += dout.transpose() * x_;
    db_ += dout.colwise().sum().transpose();
    return dout * w_;
}

void Linear::zero_grad() {
    dw_.setZero();
    db_.setZero();
}

void Linear::collect_params(std::vector<ParamView>& out) {
    out.push_back({w_.data(), dw_.data(), static_cast<std::size_t>(w_.size())});
    out.push_back({b_.data(), db_.data(), static_cast<std::size_t>(b_.size())});
}

void Linear::collect_state(const std::string& prefix, std::vector<StateView>& out) {
    out.push_back({prefix + ".weight", w_.data(), static_cast<std::size_t>(w_.size())});
    out.push_back({prefix + ".bias", b_.data(), static_cast<std::size_t>(b_.size())});
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix probs(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double m = logits.row(i).maxCoeff();
        probs.row(i) = (logits.row(i).array() - m).exp();
        probs.row(i) /= probs.row(i).sum();
    }
    return probs;
}

Matrix Softmax::forward(const Matrix& logits, bool keep_cache) {
    Matrix probs = softmax_rows(logits);
    if (keep_cache)
        probs_ = probs;
    else
        probs_.resize(0, 0);
    return probs;
}

Matrix Softmax::backward(const Matrix& dprobs) const {
    if (probs_.rows() != dprobs.rows() || probs_.cols() != dprobs.cols())
        throw NumericError("Softmax: backward without cached forward");
    Matrix dlogits(dprobs.rows(), dprobs.cols());
    for (Eigen::Index i = 0; i < dprobs.rows(); ++i) {
        const double dot = dprobs.row(i).dot(probs_.row(i));
        dlogits.row(i) = probs_.row(i).array() * (dprobs.row(i).array() - dot);
    }
    return dlogits;
}

}  // namespace gatc
