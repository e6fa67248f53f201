#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>

#include "pcp/ops.hpp"
#include "pcp/rng.hpp"
#include "pcp/tensor.hpp"

using namespace pcp;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = rng.uniform(lo, hi);
    return Tensor(std::move(shape), std::move(v));
}

}  // namespace

TEST_CASE("conv1d output length follows floor((L-K)/s)+1") {
    Rng rng(1);
    Tensor x = random_tensor({1, 1, 2500}, rng);
    Tensor w = random_tensor({4, 1, 7}, rng);
    Tensor b = Tensor::zeros({4});
    Tensor y = conv1d(x, w, b, 3);
    CHECK(y.shape() == Shape{1, 4, 832});

    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t K = 1 + rng.uniform_index(6);
        const std::size_t L = K + rng.uniform_index(40);
        const std::size_t s = 1 + rng.uniform_index(4);
        const std::size_t B = 1 + rng.uniform_index(3);
        const std::size_t Ci = 1 + rng.uniform_index(3);
        const std::size_t Co = 1 + rng.uniform_index(3);
        Tensor xi = random_tensor({B, Ci, L}, rng);
        Tensor wi = random_tensor({Co, Ci, K}, rng);
        Tensor bi = random_tensor({Co}, rng);
        Tensor yi = conv1d(xi, wi, bi, s);
        CHECK(yi.shape() == Shape{B, Co, (L - K) / s + 1});
    }
}

TEST_CASE("conv1d matches hand-evaluated dot products") {
    Tensor x({1, 1, 5}, {1, 2, 3, 4, 5});
    Tensor w({1, 1, 3}, {1, 0, -1});
    Tensor b = Tensor::zeros({1});
    Tensor y = conv1d(x, w, b, 1);
    REQUIRE(y.shape() == Shape{1, 1, 3});
    CHECK(y.data()[0] == -2.0);
    CHECK(y.data()[1] == -2.0);
    CHECK(y.data()[2] == -2.0);
}

TEST_CASE("maxpool1d uses floor semantics and picks window maxima") {
    Tensor x({1, 1, 5}, {3, 1, 4, 1, 5});
    Tensor y = maxpool1d(x, 2);
    REQUIRE(y.shape() == Shape{1, 1, 2});
    CHECK(y.data()[0] == 3.0);
    CHECK(y.data()[1] == 4.0);

    Rng rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t w = 1 + rng.uniform_index(4);
        const std::size_t L = w + rng.uniform_index(30);
        Tensor xi = random_tensor({2, 3, L}, rng);
        CHECK(maxpool1d(xi, w).shape() == Shape{2, 3, L / w});
    }
}

TEST_CASE("shape errors name the op and the offending shapes") {
    Rng rng(3);
    Tensor x = random_tensor({1, 2, 10}, rng);
    Tensor w = random_tensor({4, 3, 7}, rng);
    Tensor b = Tensor::zeros({4});
    CHECK_THROWS_AS(conv1d(x, w, b, 3), ShapeError);
    CHECK_THROWS_WITH(conv1d(x, w, b, 3), Catch::Matchers::ContainsSubstring("conv1d"));

    Tensor small = random_tensor({1, 1, 4}, rng);
    Tensor k7 = random_tensor({1, 1, 7}, rng);
    Tensor b1 = Tensor::zeros({1});
    CHECK_THROWS_AS(conv1d(small, k7, b1, 3), ShapeError);

    CHECK_THROWS_AS(add(random_tensor({2, 3}, rng), random_tensor({3, 2}, rng)), ShapeError);
    CHECK_THROWS_AS(linear(random_tensor({2, 5}, rng), random_tensor({4, 3}, rng), Tensor::zeros({3})),
                    ShapeError);
    CHECK_THROWS_AS(maxpool1d(random_tensor({1, 1, 1}, rng), 2), ShapeError);
}

TEST_CASE("backward is restricted to scalars and guarded against reruns") {
    Tensor x({3}, {1, 2, 3}, true);
    Tensor y = scale(x, 2.0);
    CHECK_THROWS_AS(backward(y), UsageError);

    Tensor s = sum(y);
    backward(s);
    CHECK(x.grad() == std::vector<double>{2, 2, 2});
    CHECK_THROWS_AS(backward(s), UsageError);
    backward(s, /*accumulate=*/true);
    CHECK(x.grad() == std::vector<double>{4, 4, 4});
}

TEST_CASE("backward(sum) and backward(mean) give the textbook leaf grads") {
    Tensor x({4}, {1, -2, 3, 0.5}, true);
    backward(sum(x));
    CHECK(x.grad() == std::vector<double>{1, 1, 1, 1});

    Tensor y({4}, {1, -2, 3, 0.5}, true);
    backward(mean(y));
    CHECK(y.grad() == std::vector<double>{0.25, 0.25, 0.25, 0.25});
}

TEST_CASE("checked mode raises on non-finite values and can be disabled") {
    Tensor big = Tensor::full({2}, 1e308);
    CHECK_THROWS_AS(mul(big, big), NumericError);

    numeric_checks_enabled() = false;
    Tensor y = mul(big, big);
    CHECK(std::isinf(y.data()[0]));
    numeric_checks_enabled() = true;
}

TEST_CASE("forward and backward are bitwise deterministic") {
    auto run = [] {
        Rng rng(42);
        Tensor x = random_tensor({2, 1, 64}, rng);
        Tensor w = random_tensor({3, 1, 7}, rng);
        w.set_requires_grad(true);
        Tensor b = Tensor::zeros({3}, true);
        Tensor g = Tensor::full({3}, 1.0, true);
        Tensor be = Tensor::zeros({3}, true);
        std::vector<double> rm(3, 0.0), rv(3, 1.0);
        Tensor h = maxpool1d(relu(batchnorm1d(conv1d(x, w, b, 3), g, be, rm, rv, true)), 2);
        Tensor loss = mean(h);
        backward(loss);
        std::vector<double> out = h.data();
        out.insert(out.end(), w.grad().begin(), w.grad().end());
        out.push_back(loss.item());
        return out;
    };
    auto a = run();
    auto b = run();
    REQUIRE(a.size() == b.size());
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("dropout is the identity in eval mode") {
    Rng rng(7);
    Tensor x = random_tensor({4, 8}, rng);
    Tensor y = dropout(x, 0.1, /*training=*/false, rng);
    CHECK(y.node() == x.node());
}

TEST_CASE("train-mode dropout preserves the mean via inverted scaling") {
    Rng rng(11);
    const double rate = 0.1;
    const double value = 2.5;
    const std::size_t n = 20000;
    Tensor x = Tensor::full({n}, value);
    Tensor y = dropout(x, rate, /*training=*/true, rng);
    double meanv = 0.0;
    for (double v : y.data()) meanv += v;
    meanv /= static_cast<double>(n);
    // Per-draw variance: value^2 * rate/(1-rate).
    const double se = value * std::sqrt(rate / (1.0 - rate) / static_cast<double>(n));
    CHECK(std::abs(meanv - value) <= 3.0 * se);
}

TEST_CASE("batchnorm train output has zero mean and unit (biased) variance per channel") {
    Rng rng(13);
    const std::size_t B = 8, C = 3, L = 50;
    Tensor x = random_tensor({B, C, L}, rng, -5.0, 9.0);
    Tensor gamma = Tensor::full({C}, 1.0);
    Tensor beta = Tensor::zeros({C});
    std::vector<double> rm(C, 0.0), rv(C, 1.0);
    Tensor y = batchnorm1d(x, gamma, beta, rm, rv, /*training=*/true);
    for (std::size_t c = 0; c < C; ++c) {
        double m = 0.0, v = 0.0;
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t l = 0; l < L; ++l) m += y.data()[(b * C + c) * L + l];
        m /= static_cast<double>(B * L);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t l = 0; l < L; ++l) {
                const double d = y.data()[(b * C + c) * L + l] - m;
                v += d * d;
            }
        v /= static_cast<double>(B * L);
        CHECK(std::abs(m) < 1e-5);
        CHECK(std::abs(v - 1.0) < 1e-5);
    }
}

TEST_CASE("batchnorm eval mode uses running statistics only") {
    Rng rng(17);
    const std::size_t C = 2;
    Tensor gamma({C}, {2.0, 0.5});
    Tensor beta({C}, {1.0, -1.0});
    std::vector<double> rm{0.5, -0.25}, rv{4.0, 0.25};
    const std::vector<double> rm_before = rm, rv_before = rv;
    Tensor x = random_tensor({3, C, 10}, rng);
    Tensor y = batchnorm1d(x, gamma, beta, rm, rv, /*training=*/false);
    CHECK(rm == rm_before);
    CHECK(rv == rv_before);
    for (std::size_t i = 0; i < 10; ++i) {
        const double expected =
            2.0 * (x.data()[i] - 0.5) / std::sqrt(4.0 + 1e-5) + 1.0;  // channel 0, batch 0
        CHECK(y.data()[i] == Catch::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("log_softmax survives huge logits") {
    Tensor x({1, 2}, {1000.0, 0.0});
    Tensor y = log_softmax(x);
    CHECK(std::exp(y.data()[0]) == Catch::Approx(1.0).margin(1e-12));
    CHECK(y.data()[1] == Catch::Approx(-1000.0).margin(1e-9));
}

TEST_CASE("nll_loss validates labels") {
    Tensor lp = log_softmax(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
    CHECK_THROWS_AS(nll_loss(lp, {0, 3}), UsageError);
    CHECK_THROWS_AS(nll_loss(lp, {0}), ShapeError);
}

TEST_CASE("reshape and flatten preserve data and reject bad sizes") {
    Tensor x({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor y = reshape(x, {3, 2});
    CHECK(y.data() == x.data());
    CHECK(flatten(Tensor({2, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8})).shape() == Shape{2, 4});
    CHECK_THROWS_AS(reshape(x, {4, 2}), ShapeError);
}
