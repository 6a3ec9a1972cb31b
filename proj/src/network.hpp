#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "gaussian_attention.hpp"
#include "layers.hpp"
#include "tensor.hpp"

namespace gatc {

/// Network geometry. The image feature module is a stack of blocks, each a
/// run of 3x3 valid convolutions (one entry per conv, giving its channel
/// count) followed by a 2x2 max pool, and ends in a 1x1 convolution down to
/// `cluster_count` channels. `attention_h`/`attention_w` state the expected
/// spatial size at that point; construction fails if the conv stack disagrees,
/// so a config typo surfaces immediately instead of as a weight-shape crash.
struct ModelConfig {
    int height = 0;
    int width = 0;
    int in_channels = 0;
    int cluster_count = 0;
    std::vector<std::vector<int>> conv_blocks;
    int attention_h = 0;
    int attention_w = 0;
    double alpha = kAttentionAlpha;

    /// Spatial size after the conv stack (which the 1x1 tail preserves).
    std::pair<int, int> feature_map_size() const;
    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

/// Everything the network says about one image in evaluation mode.
struct ModelOutput {
    Vector label;            ///< soft cluster assignment, sums to 1
    Vector attention_label;  ///< same, computed from the attended features
    AttentionParams params;
    Matrix attention_map;    ///< attention_h x attention_w, values in (0,1]
};

/// Label features for a training mini-batch, one row per sample.
struct TrainOutputs {
    Matrix label;
    Matrix attention_label;
};

/// Multiplies every channel of each sample by that sample's attention map.
Tensor apply_attention(const Tensor& features, const std::vector<Matrix>& maps);

/// Lowest index among the maxima.
int argmax_lowest(const Vector& v);

/// The clustering network: a convolutional image feature module shared by a
/// fully connected label head and a Gaussian-attention head that re-reads the
/// same features through a learned spatial window.
class GatNetwork {
  public:
    GatNetwork(const ModelConfig& cfg, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }

    /// Training pass: batch statistics in the norm layers, caches kept so
    /// backward() can run. One row per sample in each returned matrix.
    TrainOutputs forward_train(const Tensor& x);

    /// Accumulates parameter gradients from d(loss)/d(label features). Call
    /// zero_grad() first for fresh gradients.
    void backward(const Matrix& dlabel, const Matrix& dattention_label);
    void zero_grad();

    /// Evaluation pass, one sample at a time: results are independent of the
    /// batch each sample arrives in, and running statistics stay untouched.
    std::vector<ModelOutput> forward_eval(const Tensor& x);

    /// Row i holds the label feature of sample i (evaluation mode).
    Matrix label_features_eval(const Tensor& x);

    /// Cluster id per sample: argmax of the label feature, ties to the lowest
    /// index (evaluation mode).
    std::vector<int> inference_assign(const Tensor& x);

    /// Trainable arrays in a fixed traversal order (stable across runs).
    std::vector<ParamView> parameters();
    /// Named persistent arrays: parameters plus normalization statistics.
    std::vector<StateView> state();

  private:
    struct ConvUnit {
        Conv2d conv;
        BatchNorm2d bn;
        Relu relu;

        ConvUnit(int in_c, int out_c, int kernel) : conv(in_c, out_c, kernel), bn(out_c) {}
        Tensor forward(const Tensor& x, bool train, bool cache) {
            return relu.forward(bn.forward(conv.forward(x, cache), train), cache);
        }
        Tensor backward(const Tensor& dout) {
            return conv.backward(bn.backward(relu.backward(dout)));
        }
    };

    Tensor trunk_forward(const Tensor& x, bool train, bool cache);
    Tensor trunk_backward(const Tensor& dfeatures);
    Matrix label_head_forward(const Matrix& pooled, bool cache);
    Matrix attention_head_forward(const Matrix& pooled, bool cache);
    ModelOutput forward_one_eval(const Tensor& x1);

    ModelConfig cfg_;
    int map_h_ = 0, map_w_ = 0;

    std::vector<std::vector<ConvUnit>> blocks_;
    std::vector<MaxPool2> pools_;
    ConvUnit to_clusters_;  ///< 1x1 conv closing the image feature module
    ConvUnit label_conv_;   ///< 1x1 conv opening the label feature module

    Linear fc1_, fc2_, fc3_;
    Relu fc_relu1_, fc_relu2_;
    Softmax fc_softmax_;

    Linear param_fc_;  ///< spatial mean of the features -> (mu_r, mu_c, delta)
    Linear afc1_, afc2_, afc3_;
    Relu afc_relu1_, afc_relu2_;
    Softmax afc_softmax_;

    // training-pass caches
    Tensor features_;                   ///< conv features F feeding both heads
    std::vector<Matrix> maps_;          ///< per-sample attention maps
    std::vector<AttentionParams> phi_;  ///< per-sample kernel parameters
};

}  // namespace gatc
