#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pcp/rng.hpp"
#include "pcp/strategies.hpp"

using namespace pcp;

namespace {

Matrix random_bank(std::size_t P, std::size_t E, Rng& rng) {
    Matrix m(P, E);
    for (double& v : m.data) v = rng.uniform(-1.0, 1.0);
    return m;
}

}  // namespace

TEST_CASE("strategy parsing") {
    CHECK(parse_strategy("nearest").kind == StrategyKind::nearest);
    CHECK(parse_strategy("mean").kind == StrategyKind::mean);
    CHECK(parse_strategy("similarity_weighted_mean").kind == StrategyKind::similarity_weighted_mean);
    Strategy n10 = parse_strategy("nearest10");
    CHECK(n10.kind == StrategyKind::nearest_k);
    CHECK(n10.k == 10);
    CHECK(parse_strategy("nearest3").k == 3);
    CHECK_THROWS_AS(parse_strategy("closest"), UsageError);
    CHECK(strategy_name(n10) == "nearest10");
}

TEST_CASE("all strategies return the single prototype when P=1") {
    Rng rng(1);
    Matrix bank = random_bank(1, 5, rng);
    std::vector<double> h(5);
    for (double& v : h) v = rng.uniform(-1, 1);
    const std::vector<double> expected(bank.row(0), bank.row(0) + 5);
    for (Strategy s : {Strategy{StrategyKind::nearest}, Strategy{StrategyKind::nearest_k, 1},
                       Strategy{StrategyKind::mean}, Strategy{StrategyKind::similarity_weighted_mean}}) {
        const auto out = select_hypernet_input(h, bank, s, 0.1);
        for (std::size_t e = 0; e < 5; ++e) CHECK(out[e] == Catch::Approx(expected[e]).margin(1e-12));
    }
}

TEST_CASE("nearest picks the argmax-cosine prototype; mean averages the bank") {
    Matrix bank(2, 2);
    bank.at(0, 0) = 1.0;
    bank.at(1, 1) = 1.0;
    const std::vector<double> h{1.0, 0.0};

    auto nearest = select_hypernet_input(h, bank, {StrategyKind::nearest}, 0.1);
    CHECK(nearest == std::vector<double>{1.0, 0.0});

    auto mean = select_hypernet_input(h, bank, {StrategyKind::mean}, 0.1);
    CHECK(mean == std::vector<double>{0.5, 0.5});
}

TEST_CASE("nearest tie-breaks to the lowest row index") {
    Matrix bank(3, 2);
    bank.at(0, 0) = 2.0;  // same direction as rows 1 at different scales
    bank.at(1, 0) = 1.0;
    bank.at(2, 1) = 1.0;
    const std::vector<double> h{1.0, 0.0};
    auto out = select_hypernet_input(h, bank, {StrategyKind::nearest}, 0.1);
    CHECK(out == std::vector<double>{2.0, 0.0});  // row 0 wins the cos=1 tie
}

TEST_CASE("similarity-weighted mean matches the naive softmax oracle") {
    Rng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t P = 6, E = 4;
        Matrix bank = random_bank(P, E, rng);
        std::vector<double> h(E);
        for (double& v : h) v = rng.uniform(-1, 1);
        if (std::abs(h[0]) < 1e-6) h[0] = 0.5;
        const double tau = rng.uniform(0.05, 2.0);

        auto out = select_hypernet_input(h, bank, {StrategyKind::similarity_weighted_mean}, tau);

        // naive: plain softmax over s_j = cos_j / tau, then the weighted sum
        double nh = 0.0;
        for (double v : h) nh += v * v;
        nh = std::sqrt(nh);
        std::vector<double> w(P);
        double z = 0.0;
        for (std::size_t p = 0; p < P; ++p) {
            double dot = 0.0, nv = 0.0;
            for (std::size_t e = 0; e < E; ++e) {
                dot += h[e] * bank.at(p, e);
                nv += bank.at(p, e) * bank.at(p, e);
            }
            w[p] = std::exp(dot / (nh * std::sqrt(nv)) / tau);
            z += w[p];
        }
        double wsum = 0.0;
        for (std::size_t p = 0; p < P; ++p) {
            w[p] /= z;
            CHECK(w[p] >= 0.0);
            wsum += w[p];
        }
        CHECK(wsum == Catch::Approx(1.0).margin(1e-12));
        for (std::size_t e = 0; e < E; ++e) {
            double expect = 0.0;
            for (std::size_t p = 0; p < P; ++p) expect += w[p] * bank.at(p, e);
            CHECK(out[e] == Catch::Approx(expect).margin(1e-12));
        }
    }
}

TEST_CASE("nearest-k with k=P equals mean exactly") {
    Rng rng(3);
    Matrix bank = random_bank(7, 5, rng);
    std::vector<double> h(5);
    for (double& v : h) v = rng.uniform(-1, 1);
    auto km = select_hypernet_input(h, bank, {StrategyKind::nearest_k, 7}, 0.1);
    auto mean = select_hypernet_input(h, bank, {StrategyKind::mean}, 0.1);
    CHECK(km == mean);
}

TEST_CASE("similarity-weighted mean converges to mean as tau grows") {
    Rng rng(4);
    Matrix bank = random_bank(6, 4, rng);
    std::vector<double> h(4);
    for (double& v : h) v = rng.uniform(-1, 1);
    auto swm = select_hypernet_input(h, bank, {StrategyKind::similarity_weighted_mean}, 1e6);
    auto mean = select_hypernet_input(h, bank, {StrategyKind::mean}, 1.0);
    for (std::size_t e = 0; e < 4; ++e) CHECK(std::abs(swm[e] - mean[e]) < 1e-6);
}

TEST_CASE("nearest selection is invariant to positive rescaling of h") {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        Matrix bank = random_bank(5, 4, rng);
        std::vector<double> h(4), hs(4);
        for (std::size_t e = 0; e < 4; ++e) {
            h[e] = rng.uniform(-1, 1);
            hs[e] = h[e] * 37.5;
        }
        auto a = select_hypernet_input(h, bank, {StrategyKind::nearest}, 0.1);
        auto b = select_hypernet_input(hs, bank, {StrategyKind::nearest}, 0.1);
        CHECK(a == b);
    }
}

TEST_CASE("strategy errors: empty bank, zero-norm h, k out of range") {
    Matrix bank(0, 4);
    std::vector<double> h{1, 0, 0, 0};
    CHECK_THROWS_AS(select_hypernet_input(h, bank, {StrategyKind::nearest}, 0.1), UsageError);

    Rng rng(6);
    Matrix ok = random_bank(3, 4, rng);
    std::vector<double> zero(4, 0.0);
    CHECK_THROWS_AS(select_hypernet_input(zero, ok, {StrategyKind::nearest}, 0.1), NumericError);
    CHECK_THROWS_AS(select_hypernet_input(h, ok, {StrategyKind::nearest_k, 4}, 0.1), UsageError);
}

TEST_CASE("predict is deterministic and returns a normalized posterior") {
    PcpModel model = init_model(kFrameLen, 8, 3, {0, 1, 2, 3}, 11);
    Rng rng(7);
    std::vector<double> frame(kFrameLen);
    for (double& v : frame) v = rng.uniform(0.0, 1.0);

    auto p1 = predict(model, frame, {StrategyKind::nearest}, 0.1);
    auto p2 = predict(model, frame, {StrategyKind::nearest}, 0.1);
    CHECK(p1 == p2);
    double total = 0.0;
    for (double p : p1) {
        CHECK(p >= 0.0);
        total += p;
    }
    CHECK(total == Catch::Approx(1.0).margin(1e-12));
}
