#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "doctest.h"
#include "error.hpp"
#include "network.hpp"
#include "rng.hpp"
#include "tensor.hpp"

using namespace gatc;

namespace {

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.height = 10;
    cfg.width = 10;
    cfg.in_channels = 1;
    cfg.cluster_count = 3;
    cfg.conv_blocks = {{4}};
    cfg.attention_h = 4;
    cfg.attention_w = 4;
    return cfg;
}

Tensor random_batch(int n, const ModelConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    Tensor t(n, cfg.in_channels, cfg.height, cfg.width);
    for (auto& v : t.data) v = rng.uniform();
    return t;
}

void check_simplex(const Vector& v, int k) {
    REQUIRE(v.size() == k);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        CHECK(v[i] >= 0.0);
        CHECK(v[i] <= 1.0);
        sum += v[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
}

}  // namespace

TEST_CASE("ModelConfig derives the feature map size from the conv stack") {
    ModelConfig stl;
    stl.height = 96;
    stl.width = 96;
    stl.in_channels = 3;
    stl.cluster_count = 10;
    stl.conv_blocks = {{64, 64, 64}, {128, 128, 128}, {256, 256, 256}};
    stl.attention_h = 6;
    stl.attention_w = 6;
    const auto [h, w] = stl.feature_map_size();
    CHECK(h == 6);
    CHECK(w == 6);
    CHECK_NOTHROW(stl.validate());

    ModelConfig rect = tiny_config();
    rect.height = 12;
    const auto [rh, rw] = rect.feature_map_size();
    CHECK(rh == 5);
    CHECK(rw == 4);
}

TEST_CASE("ModelConfig rejects inconsistent or degenerate geometry") {
    ModelConfig cfg = tiny_config();
    CHECK_NOTHROW(cfg.validate());

    ModelConfig wrong_map = cfg;
    wrong_map.attention_h = 5;
    CHECK_THROWS_AS(wrong_map.validate(), InvalidArgument);
    CHECK_THROWS_AS(GatNetwork(wrong_map, 1), InvalidArgument);

    ModelConfig collapsed = cfg;
    collapsed.height = 4;
    collapsed.width = 4;
    collapsed.conv_blocks = {{4}, {4}};
    CHECK_THROWS_AS(collapsed.validate(), InvalidArgument);

    ModelConfig few = cfg;
    few.cluster_count = 1;
    CHECK_THROWS_AS(few.validate(), InvalidArgument);

    ModelConfig empty_block = cfg;
    empty_block.conv_blocks = {{}};
    CHECK_THROWS_AS(empty_block.validate(), InvalidArgument);

    ModelConfig no_blocks = cfg;
    no_blocks.conv_blocks = {};
    CHECK_THROWS_AS(no_blocks.validate(), InvalidArgument);

    ModelConfig bad_alpha = cfg;
    bad_alpha.alpha = 0.0;
    CHECK_THROWS_AS(bad_alpha.validate(), InvalidArgument);
}

TEST_CASE("Evaluation outputs satisfy the label feature and map contracts") {
    const ModelConfig cfg = tiny_config();
    GatNetwork net(cfg, 11);
    const Tensor batch = random_batch(4, cfg, 100);

    const auto outs = net.forward_eval(batch);
    REQUIRE(outs.size() == 4);
    for (const auto& o : outs) {
        check_simplex(o.label, cfg.cluster_count);
        check_simplex(o.attention_label, cfg.cluster_count);
        CHECK(o.params.mu_r > 0.0);
        CHECK(o.params.mu_r < 1.0);
        CHECK(o.params.mu_c > 0.0);
        CHECK(o.params.mu_c < 1.0);
        CHECK(o.params.delta > 1e-3);
        REQUIRE(o.attention_map.rows() == cfg.attention_h);
        REQUIRE(o.attention_map.cols() == cfg.attention_w);
        for (Eigen::Index y = 0; y < o.attention_map.rows(); ++y)
            for (Eigen::Index x = 0; x < o.attention_map.cols(); ++x) {
                CHECK(o.attention_map(y, x) > 0.0);
                CHECK(o.attention_map(y, x) <= 1.0);
            }
    }
}

TEST_CASE("Full-size configuration produces the documented shapes") {
    ModelConfig cfg;
    cfg.height = 96;
    cfg.width = 96;
    cfg.in_channels = 3;
    cfg.cluster_count = 10;
    cfg.conv_blocks = {{64, 64, 64}, {128, 128, 128}, {256, 256, 256}};
    cfg.attention_h = 6;
    cfg.attention_w = 6;
    GatNetwork net(cfg, 3);

    const Tensor batch = random_batch(1, cfg, 5);
    const auto outs = net.forward_eval(batch);
    REQUIRE(outs.size() == 1);
    CHECK(outs[0].label.size() == 10);
    CHECK(outs[0].attention_map.rows() == 6);
    CHECK(outs[0].attention_map.cols() == 6);
    check_simplex(outs[0].label, 10);
}

TEST_CASE("Initialization is reproducible from the seed") {
    const ModelConfig cfg = tiny_config();
    GatNetwork a(cfg, 77);
    GatNetwork b(cfg, 77);
    GatNetwork c(cfg, 78);

    auto sa = a.state();
    auto sb = b.state();
    auto sc = c.state();
    REQUIRE(sa.size() == sb.size());
    bool any_diff_c = false;
    for (std::size_t i = 0; i < sa.size(); ++i) {
        CHECK(sa[i].name == sb[i].name);
        REQUIRE(sa[i].n == sb[i].n);
        for (std::size_t j = 0; j < sa[i].n; ++j) {
            CHECK(sa[i].data[j] == sb[i].data[j]);
            if (sa[i].data[j] != sc[i].data[j]) any_diff_c = true;
        }
    }
    CHECK(any_diff_c);
}

TEST_CASE("Evaluation is independent of batch composition and repeatable") {
    const ModelConfig cfg = tiny_config();
    GatNetwork net(cfg, 21);
    const Tensor batch = random_batch(3, cfg, 9);

    const auto together = net.forward_eval(batch);
    const auto again = net.forward_eval(batch);
    for (int i = 0; i < 3; ++i) {
        Tensor one(1, batch.c, batch.h, batch.w);
        std::copy(batch.sample(i), batch.sample(i) + batch.sample_size(), one.data.begin());
        const auto solo = net.forward_eval(one);
        for (int j = 0; j < cfg.cluster_count; ++j) {
            CHECK(together[static_cast<std::size_t>(i)].label[j] == solo[0].label[j]);
            CHECK(together[static_cast<std::size_t>(i)].label[j] ==
                  again[static_cast<std::size_t>(i)].label[j]);
        }
    }
}

TEST_CASE("Training passes move the normalization statistics, evaluation does not") {
    const ModelConfig cfg = tiny_config();
    GatNetwork net(cfg, 31);
    const Tensor batch = random_batch(4, cfg, 13);

    const Matrix before = net.label_features_eval(batch);
    const Matrix before_again = net.label_features_eval(batch);
    CHECK((before - before_again).cwiseAbs().maxCoeff() == 0.0);

    const TrainOutputs t = net.forward_train(batch);
    REQUIRE(t.label.rows() == 4);
    REQUIRE(t.label.cols() == cfg.cluster_count);
    for (Eigen::Index i = 0; i < t.label.rows(); ++i) {
        CHECK(t.label.row(i).sum() == doctest::Approx(1.0).epsilon(1e-5));
        CHECK(t.attention_label.row(i).sum() == doctest::Approx(1.0).epsilon(1e-5));
    }
    // Batch statistics, not running ones: differs from the eval result.
    CHECK((t.label - before).cwiseAbs().maxCoeff() > 0.0);

    const Matrix after = net.label_features_eval(batch);
    CHECK((after - before).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("Constant-zero batches stay finite in both modes") {
    const ModelConfig cfg = tiny_config();
    GatNetwork net(cfg, 41);
    Tensor zeros(2, cfg.in_channels, cfg.height, cfg.width);

    const TrainOutputs t = net.forward_train(zeros);
    for (Eigen::Index i = 0; i < t.label.size(); ++i) CHECK(std::isfinite(t.label.data()[i]));
    for (Eigen::Index i = 0; i < t.attention_label.size(); ++i)
        CHECK(std::isfinite(t.attention_label.data()[i]));

    const auto outs = net.forward_eval(zeros);
    for (const auto& o : outs) {
        for (Eigen::Index i = 0; i < o.label.size(); ++i) CHECK(std::isfinite(o.label[i]));
        CHECK(std::isfinite(o.params.delta));
    }
}

TEST_CASE("Network gradients agree with finite differences") {
    ModelConfig cfg;
    cfg.height = 8;
    cfg.width = 8;
    cfg.in_channels = 1;
    cfg.cluster_count = 2;
    cfg.conv_blocks = {{3}};
    cfg.attention_h = 3;
    cfg.attention_w = 3;
    GatNetwork net(cfg, 51);
    const Tensor batch = random_batch(2, cfg, 19);

    // Scalar readout with fixed weights over both heads.
    Matrix wl(2, 2), wa(2, 2);
    wl << 0.7, -0.4, 0.2, 1.1;
    wa << -0.3, 0.9, 0.5, -0.8;
    auto scalar = [&]() {
        const TrainOutputs out = net.forward_train(batch);
        return (wl.array() * out.label.array()).sum() +
               (wa.array() * out.attention_label.array()).sum();
    };

    net.zero_grad();
    net.forward_train(batch);
    net.backward(wl, wa);

    auto params = net.parameters();
    double worst = 0.0;
    const double eps = 1e-6;
    for (auto& p : params) {
        for (std::size_t i = 0; i < p.n; ++i) {
            const double orig = p.value[i];
            p.value[i] = orig + eps;
            const double fp = scalar();
            p.value[i] = orig - eps;
            const double fm = scalar();
            p.value[i] = orig;
            const double numeric = (fp - fm) / (2.0 * eps);
            worst = std::max(worst,
                             std::abs(numeric - p.grad[i]) / std::max(1.0, std::abs(numeric)));
        }
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("argmax_lowest breaks ties toward the lowest index") {
    Vector v(3);
    v << 0.1, 0.7, 0.2;
    CHECK(argmax_lowest(v) == 1);
    Vector tie(2);
    tie << 0.5, 0.5;
    CHECK(argmax_lowest(tie) == 0);
    Vector flat(3);
    flat << 0.3, 0.3, 0.3;
    CHECK(argmax_lowest(flat) == 0);
    CHECK_THROWS_AS(argmax_lowest(Vector()), InvalidArgument);
}

TEST_CASE("inference_assign returns one id in range per sample") {
    const ModelConfig cfg = tiny_config();
    GatNetwork net(cfg, 61);
    const Tensor batch = random_batch(5, cfg, 23);

    const auto ids = net.inference_assign(batch);
    const auto outs = net.forward_eval(batch);
    REQUIRE(ids.size() == 5);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        CHECK(ids[i] >= 0);
        CHECK(ids[i] < cfg.cluster_count);
        CHECK(ids[i] == argmax_lowest(outs[i].label));
    }
}

TEST_CASE("label_features_eval stacks the per-sample label features") {
    const ModelConfig cfg = tiny_config();
    GatNetwork net(cfg, 71);
    const Tensor batch = random_batch(3, cfg, 29);

    const Matrix l = net.label_features_eval(batch);
    const auto outs = net.forward_eval(batch);
    REQUIRE(l.rows() == 3);
    REQUIRE(l.cols() == cfg.cluster_count);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < cfg.cluster_count; ++j)
            CHECK(l(i, j) == outs[static_cast<std::size_t>(i)].label[j]);
}

TEST_CASE("apply_attention scales every channel by the sample's map") {
    Rng rng(83);
    Tensor f(2, 3, 4, 5);
    for (auto& v : f.data) v = rng.uniform(-1.0, 1.0);

    std::vector<Matrix> maps{Matrix::Ones(4, 5), Matrix::Constant(4, 5, 0.5)};
    const Tensor out = apply_attention(f, maps);
    CHECK(out.same_shape(f));
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 5; ++x) {
                CHECK(out.at(0, c, y, x) == f.at(0, c, y, x));
                CHECK(out.at(1, c, y, x) == 0.5 * f.at(1, c, y, x));
            }

    std::vector<Matrix> too_few{Matrix::Ones(4, 5)};
    CHECK_THROWS_AS(apply_attention(f, too_few), InvalidArgument);
    std::vector<Matrix> wrong_size{Matrix::Ones(4, 5), Matrix::Ones(5, 4)};
    CHECK_THROWS_AS(apply_attention(f, wrong_size), InvalidArgument);
}

TEST_CASE("Backward demands a matching cached training pass") {
    const ModelConfig cfg = tiny_config();
    GatNetwork net(cfg, 91);
    const Matrix d = Matrix::Zero(2, cfg.cluster_count);
    CHECK_THROWS_AS(net.backward(d, d), NumericError);

    const Tensor batch = random_batch(2, cfg, 31);
    net.forward_train(batch);
    CHECK_THROWS_AS(net.backward(Matrix::Zero(3, cfg.cluster_count), d), InvalidArgument);
    CHECK_NOTHROW(net.backward(d, d));

    // An evaluation pass invalidates the training caches.
    net.forward_train(batch);
    net.forward_eval(batch);
    CHECK_THROWS_AS(net.backward(d, d), NumericError);
}

TEST_CASE("Mismatched batch shape is rejected") {
    const ModelConfig cfg = tiny_config();
    GatNetwork net(cfg, 95);
    Tensor wrong_size(1, 1, 9, 10);
    CHECK_THROWS_AS(net.forward_eval(wrong_size), InvalidArgument);
    Tensor wrong_channels(1, 2, 10, 10);
    CHECK_THROWS_AS(net.forward_train(wrong_channels), InvalidArgument);
}

TEST_CASE("State enumeration is complete and stable") {
    const ModelConfig cfg = tiny_config();
    GatNetwork net(cfg, 99);

    auto state = net.state();
    // 3 conv+norm units of 6 arrays each, 7 linear layers of 2 arrays each.
    CHECK(state.size() == 32);
    auto has = [&](const std::string& name) {
        for (const auto& s : state)
            if (s.name == name) return true;
        return false;
    };
    CHECK(has("features.b0.c0.conv.weight"));
    CHECK(has("features.to_clusters.bn.running_var"));
    CHECK(has("label.conv.bn.gamma"));
    CHECK(has("label.fc3.bias"));
    CHECK(has("attention.param_fc.weight"));
    CHECK(has("attention.fc3.bias"));

    auto params = net.parameters();
    CHECK(params.size() == 26);
    std::size_t param_total = 0;
    for (const auto& p : params) param_total += p.n;
    std::size_t state_total = 0;
    for (const auto& s : state) state_total += s.n;
    // State adds two running arrays per norm layer (channel counts 4, 3, 3).
    CHECK(state_total == param_total + 2 * (4 + 3 + 3));
}
