#include "network.hpp"

#include <cmath>
#include <string>

#include "error.hpp"
#include "rng.hpp"

namespace gatc {

namespace {

constexpr double kDeltaFloor = 1e-3;

double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

/// Plane means: one row per sample, one column per channel.
Matrix global_avg_pool(const Tensor& t) {
    Matrix out(t.n, t.c);
    const double inv = 1.0 / static_cast<double>(t.plane_size());
    for (int i = 0; i < t.n; ++i) {
        for (int c = 0; c < t.c; ++c) {
            const double* p = t.plane(i, c);
            double s = 0.0;
            for (std::size_t k = 0; k < t.plane_size(); ++k) s += p[k];
            out(i, c) = s * inv;
        }
    }
    return out;
}

/// Channel means flattened row-major: one row per sample, H*W columns.
Matrix channel_mean_rows(const Tensor& t) {
    Matrix out = Matrix::Zero(t.n, static_cast<Eigen::Index>(t.plane_size()));
    for (int i = 0; i < t.n; ++i) {
        for (int c = 0; c < t.c; ++c) {
            const double* p = t.plane(i, c);
            for (std::size_t k = 0; k < t.plane_size(); ++k)
                out(i, static_cast<Eigen::Index>(k)) += p[k];
        }
    }
    out /= static_cast<double>(t.c);
    return out;
}

const ModelConfig& validated(const ModelConfig& cfg) {
    cfg.validate();
    return cfg;
}

}  // namespace

std::pair<int, int> ModelConfig::feature_map_size() const {
    int h = height, w = width;
    for (std::size_t b = 0; b < conv_blocks.size(); ++b) {
        for (std::size_t j = 0; j < conv_blocks[b].size(); ++j) {
            h -= 2;
            w -= 2;
            if (h < 1 || w < 1)
                throw InvalidArgument("ModelConfig: conv stack collapses the spatial size");
        }
        if (h < 2 || w < 2)
            throw InvalidArgument("ModelConfig: conv stack collapses the spatial size");
        h /= 2;
        w /= 2;
    }
    return {h, w};
}

void ModelConfig::validate() const {
    if (height < 1 || width < 1) throw InvalidArgument("ModelConfig: bad input size");
    if (in_channels < 1) throw InvalidArgument("ModelConfig: bad channel count");
    if (cluster_count < 2) throw InvalidArgument("ModelConfig: need at least two clusters");
    if (alpha <= 0.0) throw InvalidArgument("ModelConfig: kernel temperature must be positive");
    if (conv_blocks.empty()) throw InvalidArgument("ModelConfig: no conv blocks");
    for (const auto& block : conv_blocks) {
        if (block.empty()) throw InvalidArgument("ModelConfig: empty conv block");
        for (int c : block)
            if (c < 1) throw InvalidArgument("ModelConfig: bad conv channel count");
    }
    const auto [h, w] = feature_map_size();
    if (h != attention_h || w != attention_w)
        throw InvalidArgument("ModelConfig: attention map size does not match the conv stack");
}

Tensor apply_attention(const Tensor& features, const std::vector<Matrix>& maps) {
    if (maps.size() != static_cast<std::size_t>(features.n))
        throw InvalidArgument("apply_attention: one map per sample required");
    Tensor out(features.n, features.c, features.h, features.w);
    for (int i = 0; i < features.n; ++i) {
        const Matrix& a = maps[static_cast<std::size_t>(i)];
        if (a.rows() != features.h || a.cols() != features.w)
            throw InvalidArgument("apply_attention: map size mismatch");
        for (int c = 0; c < features.c; ++c) {
            const double* src = features.plane(i, c);
            double* dst = out.plane(i, c);
            for (int y = 0; y < features.h; ++y)
                for (int x = 0; x < features.w; ++x)
                    dst[static_cast<std::size_t>(y) * features.w + x] =
                        src[static_cast<std::size_t>(y) * features.w + x] * a(y, x);
        }
    }
    return out;
}

int argmax_lowest(const Vector& v) {
    if (v.size() == 0) throw InvalidArgument("argmax_lowest: empty vector");
    int best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = static_cast<int>(i);
    return best;
}

GatNetwork::GatNetwork(const ModelConfig& cfg, std::uint64_t seed)
    : cfg_(validated(cfg)),
      map_h_(cfg_.attention_h),
      map_w_(cfg_.attention_w),
      to_clusters_(cfg_.conv_blocks.back().back(), cfg_.cluster_count, 1),
      label_conv_(cfg_.cluster_count, cfg_.cluster_count, 1),
      fc1_(cfg_.cluster_count, cfg_.cluster_count),
      fc2_(cfg_.cluster_count, cfg_.cluster_count),
      fc3_(cfg_.cluster_count, cfg_.cluster_count),
      param_fc_(map_h_ * map_w_, 3),
      afc1_(cfg_.cluster_count, cfg_.cluster_count),
      afc2_(cfg_.cluster_count, cfg_.cluster_count),
      afc3_(cfg_.cluster_count, cfg_.cluster_count) {
    int in_c = cfg_.in_channels;
    for (const auto& block : cfg_.conv_blocks) {
        blocks_.emplace_back();
        for (int out_c : block) {
            blocks_.back().emplace_back(in_c, out_c, 3);
            in_c = out_c;
        }
        pools_.emplace_back();
    }

    Rng rng(derive_seed(seed, "init"));
    for (auto& block : blocks_)
        for (auto& unit : block) unit.conv.init(rng);
    to_clusters_.conv.init(rng);
    label_conv_.conv.init(rng);
    fc1_.init(rng);
    fc2_.init(rng);
    fc3_.init(rng);
    param_fc_.init(rng);
    afc1_.init(rng);
    afc2_.init(rng);
    afc3_.init(rng);
}

Tensor GatNetwork::trunk_forward(const Tensor& x, bool train, bool cache) {
    if (x.c != cfg_.in_channels || x.h != cfg_.height || x.w != cfg_.width)
        throw InvalidArgument("GatNetwork: batch shape does not match the configured input size");
    Tensor t = x;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        for (auto& unit : blocks_[b]) t = unit.forward(t, train, cache);
        t = pools_[b].forward(t, cache);
    }
    t = to_clusters_.forward(t, train, cache);
    return label_conv_.forward(t, train, cache);
}

Tensor GatNetwork::trunk_backward(const Tensor& dfeatures) {
    Tensor t = label_conv_.backward(dfeatures);
    t = to_clusters_.backward(t);
    for (std::size_t b = blocks_.size(); b-- > 0;) {
        t = pools_[b].backward(t);
        for (std::size_t j = blocks_[b].size(); j-- > 0;) t = blocks_[b][j].backward(t);
    }
    return t;
}

Matrix GatNetwork::label_head_forward(const Matrix& pooled, bool cache) {
    Matrix t = fc_relu1_.forward_rows(fc1_.forward(pooled, cache), cache);
    t = fc_relu2_.forward_rows(fc2_.forward(t, cache), cache);
    return fc_softmax_.forward(fc3_.forward(t, cache), cache);
}

Matrix GatNetwork::attention_head_forward(const Matrix& pooled, bool cache) {
    Matrix t = afc_relu1_.forward_rows(afc1_.forward(pooled, cache), cache);
    t = afc_relu2_.forward_rows(afc2_.forward(t, cache), cache);
    return afc_softmax_.forward(afc3_.forward(t, cache), cache);
}

TrainOutputs GatNetwork::forward_train(const Tensor& x) {
    features_ = trunk_forward(x, true, true);
    const Matrix pooled = global_avg_pool(features_);
    Matrix label = label_head_forward(pooled, true);

    const Matrix spatial = channel_mean_rows(features_);
    const Matrix theta = param_fc_.forward(spatial, true);
    phi_.resize(static_cast<std::size_t>(x.n));
    maps_.resize(static_cast<std::size_t>(x.n));
    for (int i = 0; i < x.n; ++i) {
        AttentionParams p;
        p.mu_r = sigmoid(theta(i, 0));
        p.mu_c = sigmoid(theta(i, 1));
        p.delta = softplus(theta(i, 2)) + kDeltaFloor;
        phi_[static_cast<std::size_t>(i)] = p;
        maps_[static_cast<std::size_t>(i)] = gaussian_attention_map(p, map_h_, map_w_, cfg_.alpha);
    }
    const Tensor attended = apply_attention(features_, maps_);
    Matrix attention_label = attention_head_forward(global_avg_pool(attended), true);
    return {std::move(label), std::move(attention_label)};
}

void GatNetwork::backward(const Matrix& dlabel, const Matrix& dattention_label) {
    const int m = features_.n;
    const int k = cfg_.cluster_count;
    if (m == 0) throw NumericError("GatNetwork: backward without cached forward");
    if (dlabel.rows() != m || dlabel.cols() != k || dattention_label.rows() != m ||
        dattention_label.cols() != k)
        throw InvalidArgument("GatNetwork: gradient shape mismatch");

    // Label head down to its pooled input.
    Matrix d = fc_softmax_.backward(dlabel);
    d = fc3_.backward(d);
    d = fc_relu2_.backward_rows(d);
    d = fc2_.backward(d);
    d = fc_relu1_.backward_rows(d);
    const Matrix dpooled = fc1_.backward(d);

    // Attention head down to the pooled attended features.
    Matrix da = afc_softmax_.backward(dattention_label);
    da = afc3_.backward(da);
    da = afc_relu2_.backward_rows(da);
    da = afc2_.backward(da);
    da = afc_relu1_.backward_rows(da);
    const Matrix dpooled_att = afc1_.backward(da);

    const std::size_t plane = features_.plane_size();
    const double inv_plane = 1.0 / static_cast<double>(plane);
    Tensor dfeatures(m, k, map_h_, map_w_);
    Matrix dtheta(m, 3);
    for (int i = 0; i < m; ++i) {
        const AttentionParams& p = phi_[static_cast<std::size_t>(i)];
        const Matrix& a = maps_[static_cast<std::size_t>(i)];

        // Both pooling paths broadcast a per-channel constant over the plane;
        // the attended path additionally rides on the map (product rule).
        Matrix dmap = Matrix::Zero(map_h_, map_w_);
        for (int c = 0; c < k; ++c) {
            const double g_label = dpooled(i, c) * inv_plane;
            const double g_att = dpooled_att(i, c) * inv_plane;
            const double* f = features_.plane(i, c);
            double* df = dfeatures.plane(i, c);
            for (int y = 0; y < map_h_; ++y) {
                for (int x = 0; x < map_w_; ++x) {
                    const std::size_t idx = static_cast<std::size_t>(y) * map_w_ + x;
                    df[idx] = g_label + g_att * a(y, x);
                    dmap(y, x) += g_att * f[idx];
                }
            }
        }

        const AttentionParams pg = gaussian_attention_map_grad(p, map_h_, map_w_, dmap, cfg_.alpha);
        // Chain through the range maps: sigmoid for the center, softplus for
        // the width. sigmoid(t) of the softplus input equals 1 - e^{-softplus(t)}.
        dtheta(i, 0) = pg.mu_r * p.mu_r * (1.0 - p.mu_r);
        dtheta(i, 1) = pg.mu_c * p.mu_c * (1.0 - p.mu_c);
        dtheta(i, 2) = pg.delta * (1.0 - std::exp(-(p.delta - kDeltaFloor)));
    }

    const Matrix dspatial = param_fc_.backward(dtheta);
    const double inv_k = 1.0 / static_cast<double>(k);
    for (int i = 0; i < m; ++i) {
        for (int c = 0; c < k; ++c) {
            double* df = dfeatures.plane(i, c);
            for (std::size_t idx = 0; idx < plane; ++idx)
                df[idx] += dspatial(i, static_cast<Eigen::Index>(idx)) * inv_k;
        }
    }

    trunk_backward(dfeatures);
}

void GatNetwork::zero_grad() {
    for (auto& block : blocks_)
        for (auto& unit : block) {
            unit.conv.zero_grad();
            unit.bn.zero_grad();
        }
    to_clusters_.conv.zero_grad();
    to_clusters_.bn.zero_grad();
    label_conv_.conv.zero_grad();
    label_conv_.bn.zero_grad();
    fc1_.zero_grad();
    fc2_.zero_grad();
    fc3_.zero_grad();
    param_fc_.zero_grad();
    afc1_.zero_grad();
    afc2_.zero_grad();
    afc3_.zero_grad();
}

ModelOutput GatNetwork::forward_one_eval(const Tensor& x1) {
    const Tensor f = trunk_forward(x1, false, false);
    const Matrix label = label_head_forward(global_avg_pool(f), false);

    const Matrix theta = param_fc_.forward(channel_mean_rows(f), false);
    AttentionParams p;
    p.mu_r = sigmoid(theta(0, 0));
    p.mu_c = sigmoid(theta(0, 1));
    p.delta = softplus(theta(0, 2)) + kDeltaFloor;
    Matrix a = gaussian_attention_map(p, map_h_, map_w_, cfg_.alpha);

    const Tensor attended = apply_attention(f, {a});
    const Matrix attention_label = attention_head_forward(global_avg_pool(attended), false);

    ModelOutput out;
    out.label = label.row(0).transpose();
    out.attention_label = attention_label.row(0).transpose();
    out.params = p;
    out.attention_map = std::move(a);
    return out;
}

std::vector<ModelOutput> GatNetwork::forward_eval(const Tensor& x) {
    if (x.n < 1) throw InvalidArgument("GatNetwork: empty batch");
    std::vector<ModelOutput> outs;
    outs.reserve(static_cast<std::size_t>(x.n));
    Tensor one(1, x.c, x.h, x.w);
    for (int i = 0; i < x.n; ++i) {
        std::copy(x.sample(i), x.sample(i) + x.sample_size(), one.data.begin());
        outs.push_back(forward_one_eval(one));
    }
    return outs;
}

Matrix GatNetwork::label_features_eval(const Tensor& x) {
    const auto outs = forward_eval(x);
    Matrix l(static_cast<Eigen::Index>(outs.size()), cfg_.cluster_count);
    for (std::size_t i = 0; i < outs.size(); ++i) l.row(static_cast<Eigen::Index>(i)) = outs[i].label.transpose();
    return l;
}

std::vector<int> GatNetwork::inference_assign(const Tensor& x) {
    const auto outs = forward_eval(x);
    std::vector<int> ids;
    ids.reserve(outs.size());
    for (const auto& o : outs) ids.push_back(argmax_lowest(o.label));
    return ids;
}

std::vector<ParamView> GatNetwork::parameters() {
    std::vector<ParamView> out;
    for (auto& block : blocks_)
        for (auto& unit : block) {
            unit.conv.collect_params(out);
            unit.bn.collect_params(out);
        }
    to_clusters_.conv.collect_params(out);
    to_clusters_.bn.collect_params(out);
    label_conv_.conv.collect_params(out);
    label_conv_.bn.collect_params(out);
    fc1_.collect_params(out);
    fc2_.collect_params(out);
    fc3_.collect_params(out);
    param_fc_.collect_params(out);
    afc1_.collect_params(out);
    afc2_.collect_params(out);
    afc3_.collect_params(out);
    return out;
}

std::vector<StateView> GatNetwork::state() {
    std::vector<StateView> out;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        for (std::size_t j = 0; j < blocks_[b].size(); ++j) {
            const std::string prefix =
                "features.b" + std::to_string(b) + ".c" + std::to_string(j);
            blocks_[b][j].conv.collect_state(prefix + ".conv", out);
            blocks_[b][j].bn.collect_state(prefix + ".bn", out);
        }
    }
    to_clusters_.conv.collect_state("features.to_clusters.conv", out);
    to_clusters_.bn.collect_state("features.to_clusters.bn", out);
    label_conv_.conv.collect_state("label.conv.conv", out);
    label_conv_.bn.collect_state("label.conv.bn", out);
    fc1_.collect_state("label.fc1", out);
    fc2_.collect_state("label.fc2", out);
    fc3_.collect_state("label.fc3", out);
    param_fc_.collect_state("attention.param_fc", out);
    afc1_.collect_state("attention.fc1", out);
    afc2_.collect_state("attention.fc2", out);
    afc3_.collect_state("attention.fc3", out);
    return out;
}

}  // namespace gatc
