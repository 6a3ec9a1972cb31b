#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace gatc {

/// A trainable array: the optimizer walks these, one Adam moment pair per
/// entry.
struct ParamView {
    double* value = nullptr;
    double* grad = nullptr;
    std::size_t n = 0;
};

/// A named persistent array (parameters and buffers alike) for checkpoints.
struct StateView {
    std::string name;
    double* data = nullptr;
    std::size_t n = 0;
};

/// 2D convolution, stride 1, no padding ("valid"), square kernel. Forward
/// caches its input when asked; backward rebuilds the im2col patches from it,
/// which is far cheaper on memory than keeping the expanded patch matrices.
class Conv2d {
  public:
    Conv2d(int in_c, int out_c, int kernel);

    void init(Rng& rng);
    Tensor forward(const Tensor& x, bool keep_cache);
    Tensor backward(const Tensor& dout);
    void zero_grad();
    void collect_params(std::vector<ParamView>& out);
    void collect_state(const std::string& prefix, std::vector<StateView>& out);

    int out_h(int h) const { return h - kernel_ + 1; }
    int out_w(int w) const { return w - kernel_ + 1; }
    int out_channels() const { return out_c_; }

  private:
    int in_c_, out_c_, kernel_;
    Matrix w_;   ///< out_c x (in_c * kernel^2)
    Vector b_;
    Matrix dw_;
    Vector db_;
    Tensor x_;  ///< cached input, kept for backward
};

/// Batch normalization over (sample, spatial) per channel. Training mode uses
/// batch statistics and updates the running estimates; evaluation mode reads
/// the running estimates only, keeping per-sample results independent of the
/// batch around them.
class BatchNorm2d {
  public:
    explicit BatchNorm2d(int channels, double momentum = 0.1, double eps = 1e-5);

    Tensor forward(const Tensor& x, bool train);
    Tensor backward(const Tensor& dout);
    void zero_grad();
    void collect_params(std::vector<ParamView>& out);
    void collect_state(const std::string& prefix, std::vector<StateView>& out);

  private:
    int c_;
    double momentum_, eps_;
    Vector gamma_, beta_, dgamma_, dbeta_;
    Vector running_mean_, running_var_;
    // training-pass cache
    Tensor xhat_;
    Vector inv_std_;
};

/// ReLU with a cached activity mask.
class Relu {
  public:
    Tensor forward(const Tensor& x, bool keep_cache);
    Tensor backward(const Tensor& dout) const;
    Matrix forward_rows(const Matrix& x, bool keep_cache);
    Matrix backward_rows(const Matrix& dout) const;

  private:
    std::vector<bool> mask_;
};

/// 2x2 max pooling with stride 2; odd trailing rows/columns are dropped.
class MaxPool2 {
  public:
    Tensor forward(const Tensor& x, bool keep_cache);
    Tensor backward(const Tensor& dout) const;

  private:
    std::vector<std::int32_t> argmax_;  ///< flat input index per output cell
    int in_h_ = 0, in_w_ = 0, in_c_ = 0, in_n_ = 0;
};

/// Fully connected layer on row-matrices (one sample per row).
class Linear {
  public:
    Linear(int in_features, int out_features);

    void init(Rng& rng);
    Matrix forward(const Matrix& x, bool keep_cache);
    Matrix backward(const Matrix& dout);
    void zero_grad();
    void collect_params(std::vector<ParamView>& out);
    void collect_state(const std::string& prefix, std::vector<StateView>& out);

  private:
    int in_, out_;
    Matrix w_;  ///< out x in
    Vector b_;
    Matrix dw_;
    Vector db_;
    Matrix x_;  ///< cached input
};

/// Row-wise softmax with the max subtracted before exponentiation, so logits
/// of magnitude up to about 700 stay finite.
class Softmax {
  public:
    Matrix forward(const Matrix& logits, bool keep_cache);
    Matrix backward(const Matrix& dprobs) const;

  private:
    Matrix probs_;
};

Matrix softmax_rows(const Matrix& logits);

}  // namespace gatc
