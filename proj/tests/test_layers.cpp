#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "error.hpp"
#include "gradcheck.hpp"
#include "layers.hpp"
#include "rng.hpp"
#include "tensor.hpp"

using namespace gatc;

namespace {

// Deterministic readout weights so every layer can be checked against the
// scalar s = sum_i w_i out_i without dragging an RNG into the probes.
double readout_weight(std::size_t i) { return std::sin(1.37 * static_cast<double>(i) + 0.3); }

double readout(const Tensor& t) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.data.size(); ++i) s += readout_weight(i) * t.data[i];
    return s;
}

double readout(const Matrix& m) {
    double s = 0.0;
    const double* d = m.data();
    for (Eigen::Index i = 0; i < m.size(); ++i) s += readout_weight(static_cast<std::size_t>(i)) * d[i];
    return s;
}

Tensor readout_tensor(int n, int c, int h, int w) {
    Tensor t(n, c, h, w);
    for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] = readout_weight(i);
    return t;
}

Matrix readout_matrix(Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    double* d = m.data();
    for (Eigen::Index i = 0; i < m.size(); ++i) d[i] = readout_weight(static_cast<std::size_t>(i));
    return m;
}

Tensor tensor_from(const Vector& v, int n, int c, int h, int w) {
    Tensor t(n, c, h, w);
    REQUIRE(static_cast<std::size_t>(v.size()) == t.data.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) t.data[static_cast<std::size_t>(i)] = v[i];
    return t;
}

Vector vector_from(const Tensor& t) {
    Vector v(static_cast<Eigen::Index>(t.data.size()));
    for (std::size_t i = 0; i < t.data.size(); ++i) v[static_cast<Eigen::Index>(i)] = t.data[i];
    return v;
}

// Central differences over every entry exposed through ParamView, compared
// against the analytic gradients already accumulated behind the same views.
double param_fd_worst(const std::function<double()>& scalar, std::vector<ParamView>& params,
                      double eps = 1e-6) {
    double worst = 0.0;
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
    return worst;
}

Tensor random_tensor(int n, int c, int h, int w, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(n, c, h, w);
    for (auto& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

}  // namespace

TEST_CASE("Conv2d matches a hand-worked 2x2 kernel on a 3x3 image") {
    Conv2d conv(1, 1, 2);
    std::vector<ParamView> params;
    conv.collect_params(params);
    REQUIRE(params.size() == 2);
    REQUIRE(params[0].n == 4);
    REQUIRE(params[1].n == 1);
    // Single-row weight matrix, so the view order is the patch order:
    // (dy=0,dx=0), (0,1), (1,0), (1,1).
    params[0].value[0] = 1.0;
    params[0].value[1] = 2.0;
    params[0].value[2] = 3.0;
    params[0].value[3] = 4.0;
    params[1].value[0] = 0.5;

    Tensor x(1, 1, 3, 3);
    for (int i = 0; i < 9; ++i) x.data[static_cast<std::size_t>(i)] = i + 1;

    Tensor y = conv.forward(x, false);
    REQUIRE(y.n == 1);
    REQUIRE(y.c == 1);
    REQUIRE(y.h == 2);
    REQUIRE(y.w == 2);
    // Patch at (0,0) is [1 2; 4 5]: 1*1 + 2*2 + 3*4 + 4*5 + 0.5 = 37.5, etc.
    CHECK(y.at(0, 0, 0, 0) == doctest::Approx(37.5));
    CHECK(y.at(0, 0, 0, 1) == doctest::Approx(47.5));
    CHECK(y.at(0, 0, 1, 0) == doctest::Approx(67.5));
    CHECK(y.at(0, 0, 1, 1) == doctest::Approx(77.5));
}

TEST_CASE("Conv2d 1x1 kernel mixes channels per pixel") {
    Conv2d conv(2, 1, 1);
    std::vector<ParamView> params;
    conv.collect_params(params);
    params[0].value[0] = 10.0;   // channel 0 coefficient
    params[0].value[1] = 100.0;  // channel 1 coefficient
    params[1].value[0] = 0.0;

    Tensor x(1, 2, 2, 2);
    x.at(0, 0, 0, 0) = 1.0;
    x.at(0, 1, 0, 0) = 2.0;
    x.at(0, 0, 1, 1) = 3.0;
    x.at(0, 1, 1, 1) = 4.0;

    Tensor y = conv.forward(x, false);
    CHECK(y.at(0, 0, 0, 0) == doctest::Approx(210.0));
    CHECK(y.at(0, 0, 1, 1) == doctest::Approx(430.0));
    CHECK(y.at(0, 0, 0, 1) == doctest::Approx(0.0));
}

TEST_CASE("Conv2d gradients agree with finite differences") {
    Rng rng(41);
    Conv2d conv(2, 3, 3);
    conv.init(rng);
    const int n = 2, h = 6, w = 5;
    Tensor x = random_tensor(n, 2, h, w, rng);
    const Tensor dout = readout_tensor(n, 3, conv.out_h(h), conv.out_w(w));

    conv.zero_grad();
    conv.forward(x, true);
    const Tensor dx = conv.backward(dout);

    SUBCASE("input gradient") {
        auto f = [&](const Vector& v) { return readout(conv.forward(tensor_from(v, n, 2, h, w), false)); };
        CHECK(gatc::testing::gradcheck(f, vector_from(x), vector_from(dx)) < 1e-6);
    }
    SUBCASE("parameter gradients") {
        std::vector<ParamView> params;
        conv.collect_params(params);
        auto scalar = [&]() { return readout(conv.forward(x, false)); };
        CHECK(param_fd_worst(scalar, params) < 1e-6);
    }
}

TEST_CASE("Conv2d backward accumulates across calls") {
    Rng rng(7);
    Conv2d conv(1, 1, 2);
    conv.init(rng);
    Tensor x = random_tensor(1, 1, 3, 3, rng);
    const Tensor dout = readout_tensor(1, 1, 2, 2);

    conv.zero_grad();
    conv.forward(x, true);
    conv.backward(dout);
    std::vector<ParamView> params;
    conv.collect_params(params);
    const double once = params[0].grad[0];

    conv.forward(x, true);
    conv.backward(dout);
    CHECK(params[0].grad[0] == doctest::Approx(2.0 * once));

    conv.zero_grad();
    CHECK(params[0].grad[0] == 0.0);
}

TEST_CASE("Conv2d rejects bad input and stale caches") {
    Conv2d conv(2, 3, 3);
    Tensor wrong_c(1, 1, 5, 5);
    CHECK_THROWS_AS(conv.forward(wrong_c, false), InvalidArgument);
    Tensor tiny(1, 2, 2, 2);
    CHECK_THROWS_AS(conv.forward(tiny, false), InvalidArgument);

    Tensor x(1, 2, 5, 5);
    conv.forward(x, false);  // no cache requested
    Tensor dout(1, 3, 3, 3);
    CHECK_THROWS_AS(conv.backward(dout), NumericError);
}

TEST_CASE("BatchNorm2d training pass normalizes with batch statistics") {
    BatchNorm2d bn(1);
    std::vector<ParamView> params;
    bn.collect_params(params);
    params[0].value[0] = 2.0;  // gamma
    params[1].value[0] = 1.0;  // beta

    Tensor x(1, 1, 2, 2);
    x.data = {1.0, 2.0, 3.0, 4.0};
    Tensor y = bn.forward(x, true);

    // mean 2.5, biased variance 1.25
    const double inv = 1.0 / std::sqrt(1.25 + 1e-5);
    CHECK(y.data[0] == doctest::Approx(1.0 + 2.0 * (-1.5) * inv));
    CHECK(y.data[3] == doctest::Approx(1.0 + 2.0 * 1.5 * inv));

    std::vector<StateView> state;
    bn.collect_state("bn", state);
    REQUIRE(state.size() == 4);
    CHECK(state[0].name == "bn.gamma");
    CHECK(state[2].name == "bn.running_mean");
    // momentum 0.1 from the (0, 1) initial estimates; running variance tracks
    // the unbiased batch variance 1.25 * 4/3 = 5/3.
    CHECK(state[2].data[0] == doctest::Approx(0.25));
    CHECK(state[3].data[0] == doctest::Approx(0.9 + 0.1 * 5.0 / 3.0));
}

TEST_CASE("BatchNorm2d evaluation uses running statistics only") {
    BatchNorm2d bn(1);
    Tensor x(1, 1, 2, 2);
    x.data = {1.0, 2.0, 3.0, 4.0};
    bn.forward(x, true);

    // A constant input through eval mode: every output entry is the same
    // affine function of the running estimates, whatever batch it rides in.
    Tensor probe(2, 1, 2, 2);
    probe.fill(2.5);
    Tensor y = bn.forward(probe, false);
    const double expected = (2.5 - 0.25) / std::sqrt(0.9 + 0.1 * 5.0 / 3.0 + 1e-5);
    for (double v : y.data) CHECK(v == doctest::Approx(expected));

    Tensor solo(1, 1, 2, 2);
    solo.fill(2.5);
    Tensor ys = bn.forward(solo, false);
    CHECK(ys.data[0] == y.data[0]);
}

TEST_CASE("BatchNorm2d gradients agree with finite differences") {
    Rng rng(43);
    const int n = 3, c = 2, h = 2, w = 3;
    BatchNorm2d bn(c);
    std::vector<ParamView> params;
    bn.collect_params(params);
    params[0].value[0] = 1.3;
    params[0].value[1] = 0.7;
    params[1].value[0] = -0.2;
    params[1].value[1] = 0.4;

    Tensor x = random_tensor(n, c, h, w, rng);
    const Tensor dout = readout_tensor(n, c, h, w);

    bn.zero_grad();
    bn.forward(x, true);
    const Tensor dx = bn.backward(dout);

    SUBCASE("input gradient couples through the batch statistics") {
        auto f = [&](const Vector& v) { return readout(bn.forward(tensor_from(v, n, c, h, w), true)); };
        CHECK(gatc::testing::gradcheck(f, vector_from(x), vector_from(dx)) < 1e-5);
    }
    SUBCASE("gamma and beta gradients") {
        auto scalar = [&]() { return readout(bn.forward(x, true)); };
        CHECK(param_fd_worst(scalar, params) < 1e-5);
    }
}

TEST_CASE("BatchNorm2d rejects mismatched input and stale caches") {
    BatchNorm2d bn(2);
    Tensor wrong(1, 3, 2, 2);
    CHECK_THROWS_AS(bn.forward(wrong, true), InvalidArgument);

    Tensor x(2, 2, 2, 2);
    bn.forward(x, true);
    bn.forward(x, false);  // eval pass drops the training cache
    CHECK_THROWS_AS(bn.backward(x), NumericError);
}

TEST_CASE("Relu clamps negatives and masks their gradients") {
    Relu relu;
    Tensor x(1, 1, 1, 4);
    x.data = {-2.0, 0.0, 0.5, 3.0};
    Tensor y = relu.forward(x, true);
    CHECK(y.data[0] == 0.0);
    CHECK(y.data[1] == 0.0);
    CHECK(y.data[2] == 0.5);
    CHECK(y.data[3] == 3.0);

    Tensor dout(1, 1, 1, 4);
    dout.data = {10.0, 20.0, 30.0, 40.0};
    Tensor dx = relu.backward(dout);
    CHECK(dx.data[0] == 0.0);
    CHECK(dx.data[1] == 0.0);
    CHECK(dx.data[2] == 30.0);
    CHECK(dx.data[3] == 40.0);

    Matrix xm = readout_matrix(2, 3);
    Matrix ym = relu.forward_rows(xm, true);
    for (Eigen::Index i = 0; i < xm.size(); ++i)
        CHECK(ym.data()[i] == (xm.data()[i] > 0.0 ? xm.data()[i] : 0.0));
    Matrix dm = Matrix::Ones(2, 3);
    Matrix dxm = relu.backward_rows(dm);
    for (Eigen::Index i = 0; i < xm.size(); ++i)
        CHECK(dxm.data()[i] == (xm.data()[i] > 0.0 ? 1.0 : 0.0));
}

TEST_CASE("Relu backward without a cached forward throws") {
    Relu relu;
    Tensor dout(1, 1, 1, 4);
    CHECK_THROWS_AS(relu.backward(dout), NumericError);
    Relu relu2;
    CHECK_THROWS_AS(relu2.backward_rows(Matrix::Ones(1, 2)), NumericError);
}

TEST_CASE("MaxPool2 picks block maxima and routes gradients to them") {
    MaxPool2 pool;
    Tensor x(1, 1, 4, 4);
    x.data = {1, 2, 5, 3,
              4, 0, 2, 1,
              9, 8, 1, 2,
              7, 6, 3, 4};
    Tensor y = pool.forward(x, true);
    REQUIRE(y.h == 2);
    REQUIRE(y.w == 2);
    CHECK(y.at(0, 0, 0, 0) == 4.0);
    CHECK(y.at(0, 0, 0, 1) == 5.0);
    CHECK(y.at(0, 0, 1, 0) == 9.0);
    CHECK(y.at(0, 0, 1, 1) == 4.0);

    Tensor dout(1, 1, 2, 2);
    dout.data = {10.0, 20.0, 30.0, 40.0};
    Tensor dx = pool.backward(dout);
    CHECK(dx.at(0, 0, 1, 0) == 10.0);
    CHECK(dx.at(0, 0, 0, 2) == 20.0);
    CHECK(dx.at(0, 0, 2, 0) == 30.0);
    CHECK(dx.at(0, 0, 3, 3) == 40.0);
    double total = 0.0;
    for (double v : dx.data) total += std::abs(v);
    CHECK(total == doctest::Approx(100.0));
}

TEST_CASE("MaxPool2 drops odd trailing rows and columns") {
    MaxPool2 pool;
    Tensor x(1, 1, 5, 5);
    for (int i = 0; i < 25; ++i) x.data[static_cast<std::size_t>(i)] = i;
    Tensor y = pool.forward(x, false);
    REQUIRE(y.h == 2);
    REQUIRE(y.w == 2);
    CHECK(y.at(0, 0, 0, 0) == 6.0);
    CHECK(y.at(0, 0, 0, 1) == 8.0);
    CHECK(y.at(0, 0, 1, 0) == 16.0);
    CHECK(y.at(0, 0, 1, 1) == 18.0);
}

TEST_CASE("MaxPool2 gradient agrees with finite differences") {
    Rng rng(47);
    MaxPool2 pool;
    const int n = 2, c = 2, h = 4, w = 6;
    // Entries drawn apart so the 1e-6 probes never flip an argmax.
    Tensor x(n, c, h, w);
    std::vector<int> order(x.data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    rng.shuffle(order);
    for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] = 0.01 * order[i];

    const Tensor dout = readout_tensor(n, c, 2, 3);
    pool.forward(x, true);
    const Tensor dx = pool.backward(dout);
    auto f = [&](const Vector& v) { return readout(pool.forward(tensor_from(v, n, c, h, w), false)); };
    CHECK(gatc::testing::gradcheck(f, vector_from(x), vector_from(dx)) < 1e-6);
}

TEST_CASE("MaxPool2 rejects tiny input and stale caches") {
    MaxPool2 pool;
    Tensor tiny(1, 1, 1, 3);
    CHECK_THROWS_AS(pool.forward(tiny, true), InvalidArgument);

    Tensor x(1, 1, 4, 4);
    pool.forward(x, false);
    Tensor dout(1, 1, 2, 2);
    CHECK_THROWS_AS(pool.backward(dout), NumericError);
}

TEST_CASE("Linear applies y = x W^T + b") {
    Linear lin(3, 2);
    std::vector<ParamView> params;
    lin.collect_params(params);
    REQUIRE(params[0].n == 6);
    REQUIRE(params[1].n == 2);
    // Uniform weights make the result independent of the storage order.
    for (std::size_t i = 0; i < params[0].n; ++i) params[0].value[i] = 0.5;
    params[1].value[0] = 0.1;
    params[1].value[1] = -0.2;

    Matrix x(2, 3);
    x << 1.0, 2.0, 3.0,
         -1.0, 0.0, 1.0;
    Matrix y = lin.forward(x, false);
    REQUIRE(y.rows() == 2);
    REQUIRE(y.cols() == 2);
    CHECK(y(0, 0) == doctest::Approx(3.1));
    CHECK(y(0, 1) == doctest::Approx(2.8));
    CHECK(y(1, 0) == doctest::Approx(0.1));
    CHECK(y(1, 1) == doctest::Approx(-0.2));
}

TEST_CASE("Linear gradients agree with finite differences") {
    Rng rng(53);
    Linear lin(4, 3);
    lin.init(rng);
    Matrix x = readout_matrix(5, 4);
    const Matrix dout = readout_matrix(5, 3);

    lin.zero_grad();
    lin.forward(x, true);
    const Matrix dx = lin.backward(dout);

    SUBCASE("input gradient") {
        auto f = [&](const Matrix& m) { return readout(lin.forward(m, false)); };
        CHECK(gatc::testing::gradcheck_matrix(f, x, dx) < 1e-6);
    }
    SUBCASE("parameter gradients") {
        std::vector<ParamView> params;
        lin.collect_params(params);
        auto scalar = [&]() { return readout(lin.forward(x, false)); };
        CHECK(param_fd_worst(scalar, params) < 1e-6);
    }
}

TEST_CASE("Linear rejects mismatched input and stale caches") {
    Linear lin(4, 3);
    CHECK_THROWS_AS(lin.forward(Matrix::Ones(2, 5), false), InvalidArgument);
    lin.forward(Matrix::Ones(2, 4), false);
    CHECK_THROWS_AS(lin.backward(Matrix::Ones(2, 3)), NumericError);
}

TEST_CASE("He initialization matches the fan-in scale") {
    Rng rng(59);
    Linear lin(300, 200);
    lin.init(rng);
    std::vector<ParamView> params;
    lin.collect_params(params);

    double mean = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < params[0].n; ++i) {
        mean += params[0].value[i];
        sq += params[0].value[i] * params[0].value[i];
    }
    const double count = static_cast<double>(params[0].n);
    mean /= count;
    const double stdev = std::sqrt(sq / count - mean * mean);
    CHECK(std::abs(mean) < 0.002);
    CHECK(stdev == doctest::Approx(std::sqrt(2.0 / 300.0)).epsilon(0.03));
    for (std::size_t i = 0; i < params[1].n; ++i) CHECK(params[1].value[i] == 0.0);

    Conv2d conv(16, 32, 3);
    conv.init(rng);
    std::vector<ParamView> cparams;
    conv.collect_params(cparams);
    double csq = 0.0;
    for (std::size_t i = 0; i < cparams[0].n; ++i) csq += cparams[0].value[i] * cparams[0].value[i];
    const double cstd = std::sqrt(csq / static_cast<double>(cparams[0].n));
    CHECK(cstd == doctest::Approx(std::sqrt(2.0 / 144.0)).epsilon(0.05));
}

TEST_CASE("Softmax rows are simplex points and shift-invariant") {
    Softmax sm;
    Matrix logits(3, 3);
    logits << 0.0, 0.0, 0.0,
              1000.0, 0.0, -1000.0,
              std::log(2.0), 0.0, std::log(2.0);
    Matrix p = sm.forward(logits, false);

    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        CHECK(p.row(i).sum() == doctest::Approx(1.0));
        for (Eigen::Index j = 0; j < p.cols(); ++j) {
            CHECK(std::isfinite(p(i, j)));
            CHECK(p(i, j) >= 0.0);
        }
    }
    CHECK(p(0, 0) == doctest::Approx(1.0 / 3.0));
    CHECK(p(1, 0) == doctest::Approx(1.0));
    CHECK(p(2, 0) == doctest::Approx(0.4));
    CHECK(p(2, 1) == doctest::Approx(0.2));

    Matrix shifted = logits;
    shifted.array() += 4.0;
    Matrix p2 = softmax_rows(shifted);
    for (Eigen::Index i = 0; i < p.size(); ++i)
        CHECK(p2.data()[i] == doctest::Approx(p.data()[i]).epsilon(1e-14));
}

TEST_CASE("Softmax gradient agrees with finite differences") {
    Softmax sm;
    Matrix logits = readout_matrix(4, 5);
    const Matrix dprobs = readout_matrix(4, 5).array() + 0.3;

    sm.forward(logits, true);
    const Matrix dlogits = sm.backward(dprobs);
    auto f = [&](const Matrix& m) {
        const Matrix p = softmax_rows(m);
        double s = 0.0;
        for (Eigen::Index i = 0; i < p.size(); ++i) s += dprobs.data()[i] * p.data()[i];
        return s;
    };
    CHECK(gatc::testing::gradcheck_matrix(f, logits, dlogits) < 1e-6);
}

TEST_CASE("Softmax backward without a cached forward throws") {
    Softmax sm;
    CHECK_THROWS_AS(sm.backward(Matrix::Ones(1, 3)), NumericError);
    sm.forward(Matrix::Ones(1, 3), false);
    CHECK_THROWS_AS(sm.backward(Matrix::Ones(1, 3)), NumericError);
}
