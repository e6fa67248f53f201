#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "pcp/adam.hpp"
#include "pcp/ops.hpp"
#include "pcp/tensor.hpp"

using namespace pcp;

namespace {

// Independent scalar Adam, written directly from the update equations.
// Serves as the trajectory oracle for the tensor implementation.
struct ScalarAdamRef {
    double lr, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    double m = 0.0, v = 0.0;
    long t = 0;

    explicit ScalarAdamRef(double lr_) : lr(lr_) {}

    double step(double w, double g) {
        ++t;
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mhat = m / (1 - std::pow(b1, t));
        const double vhat = v / (1 - std::pow(b2, t));
        return w - lr * mhat / (std::sqrt(vhat) + eps);
    }
};

}  // namespace

TEST_CASE("zero gradient leaves parameters and moments untouched") {
    std::vector<Tensor> params{Tensor({3}, {1.0, -2.0, 0.5}, true)};
    params[0].zero_grad();
    AdamState state(params, 1e-2);
    const std::vector<double> before = params[0].data();
    adam_step(params, state);
    CHECK(params[0].data() == before);
    CHECK(state.first_moment[0] == std::vector<double>(3, 0.0));
    CHECK(state.second_moment[0] == std::vector<double>(3, 0.0));
    CHECK(state.step_count == 1);
}

TEST_CASE("first step moves by ~ -lr * sign(g)") {
    for (double g : {3.7, -0.01, 120.0}) {
        std::vector<Tensor> params{Tensor::scalar(1.0, true)};
        params[0].node()->grad = {g};
        AdamState state(params, 1e-4);
        adam_step(params, state);
        const double update = params[0].item() - 1.0;
        const double expected = -1e-4 * (g > 0 ? 1.0 : -1.0) * std::abs(g) / (std::abs(g) + 1e-8);
        CHECK(update == Catch::Approx(expected).margin(1e-12));
        CHECK(std::abs(update + 1e-4 * (g > 0 ? 1.0 : -1.0)) < 1e-8);
    }
}

TEST_CASE("100 steps on scalar objectives match the reference trajectory to 1e-10") {
    SECTION("f(w) = w^2 from w0 = 1") {
        std::vector<Tensor> params{Tensor::scalar(1.0, true)};
        AdamState state(params, 1e-2);
        ScalarAdamRef ref(1e-2);
        double wref = 1.0;
        for (int i = 0; i < 100; ++i) {
            params[0].zero_grad();
            Tensor loss = mul(params[0], params[0]);
            backward(loss);
            adam_step(params, state);
            wref = ref.step(wref, 2.0 * wref);
            REQUIRE(std::abs(params[0].item() - wref) < 1e-10);
        }
        CHECK(std::abs(params[0].item()) < 1.0);  // moved towards the minimum
    }

    SECTION("f(w) = (w-3)^2 + 0.5w from w0 = -2") {
        std::vector<Tensor> params{Tensor::scalar(-2.0, true)};
        AdamState state(params, 5e-3);
        ScalarAdamRef ref(5e-3);
        double wref = -2.0;
        Tensor three = Tensor::scalar(-3.0);
        for (int i = 0; i < 100; ++i) {
            params[0].zero_grad();
            Tensor shifted = add(params[0], three);
            Tensor loss = add(mul(shifted, shifted), scale(params[0], 0.5));
            backward(loss);
            adam_step(params, state);
            wref = ref.step(wref, 2.0 * (wref - 3.0) + 0.5);
            REQUIRE(std::abs(params[0].item() - wref) < 1e-10);
        }
    }
}

TEST_CASE("adam_step rejects mismatched state") {
    std::vector<Tensor> params{Tensor({2}, {1.0, 2.0}, true)};
    AdamState state(params, 1e-3);
    std::vector<Tensor> other{Tensor({3}, {1.0, 2.0, 3.0}, true)};
    CHECK_THROWS_AS(adam_step(other, state), Error);
}
