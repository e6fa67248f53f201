#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "pcp/losses.hpp"
#include "pcp/rng.hpp"

using namespace pcp;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = rng.uniform(lo, hi);
    return Tensor(std::move(shape), std::move(v));
}

// Naive double-loop contrastive loss: plain cosines, plain exp sums.
double naive_contrastive(const Tensor& reps, const Tensor& protos,
                         const std::vector<std::size_t>& owners, double tau, Reduction red) {
    const std::size_t B = reps.dim(0), P = protos.dim(0), E = reps.dim(1);
    auto cosine = [&](std::size_t i, std::size_t j) {
        double dot = 0, nh = 0, nv = 0;
        for (std::size_t e = 0; e < E; ++e) {
            dot += reps.data()[i * E + e] * protos.data()[j * E + e];
            nh += reps.data()[i * E + e] * reps.data()[i * E + e];
            nv += protos.data()[j * E + e] * protos.data()[j * E + e];
        }
        return dot / (std::sqrt(nh) * std::sqrt(nv));
    };
    double loss = 0.0;
    for (std::size_t i = 0; i < B; ++i) {
        double denom = 0.0;
        for (std::size_t j = 0; j < P; ++j) denom += std::exp(cosine(i, j) / tau);
        loss -= std::log(std::exp(cosine(i, owners[i]) / tau) / denom);
    }
    return red == Reduction::mean ? loss / static_cast<double>(B) : loss;
}

}  // namespace

TEST_CASE("contrastive loss is exactly zero for a single-prototype bank") {
    Rng rng(1);
    Tensor reps = random_tensor({3, 4}, rng);
    Tensor protos = random_tensor({1, 4}, rng);
    Tensor loss = contrastive_loss(reps, protos, {0, 0, 0}, 0.1);
    CHECK(loss.item() == 0.0);
}

TEST_CASE("contrastive loss matches the closed form for B=1, P=2") {
    // Prototypes chosen so s(h,v1)=10 and s(h,v2)=0 at tau=0.1.
    Tensor reps({1, 2}, {1.0, 0.0});
    Tensor protos({2, 2}, {1.0, 0.0, 0.0, 1.0});
    Tensor loss = contrastive_loss(reps, protos, {0}, 0.1);
    const double expected = std::log(1.0 + std::exp(-10.0));  // ~4.54e-5
    CHECK(loss.item() == Catch::Approx(expected).margin(1e-14));
    CHECK(loss.item() == Catch::Approx(4.5398899216870535e-05).epsilon(1e-9));
}

TEST_CASE("contrastive loss matches the naive oracle on random instances") {
    Rng rng(2);
    for (int trial = 0; trial < 120; ++trial) {
        const std::size_t B = 1 + rng.uniform_index(6);
        const std::size_t P = 1 + rng.uniform_index(5);
        const std::size_t E = 2 + rng.uniform_index(6);
        Tensor reps = random_tensor({B, E}, rng, -2.0, 2.0);
        Tensor protos = random_tensor({P, E}, rng, -2.0, 2.0);
        std::vector<std::size_t> owners(B);
        for (auto& o : owners) o = rng.uniform_index(P);
        const double tau = rng.uniform(0.05, 1.0);
        const Reduction red = trial % 2 ? Reduction::mean : Reduction::sum;
        Tensor loss = contrastive_loss(reps, protos, owners, tau, red);
        const double oracle = naive_contrastive(reps, protos, owners, tau, red);
        CHECK(std::abs(loss.item() - oracle) < 1e-12);
        CHECK(loss.item() >= 0.0);
    }
}

TEST_CASE("contrastive loss rejects unknown owners and bad tau") {
    Rng rng(3);
    Tensor reps = random_tensor({2, 3}, rng);
    Tensor protos = random_tensor({2, 3}, rng);
    CHECK_THROWS_AS(contrastive_loss(reps, protos, {0, 2}, 0.1), UsageError);
    CHECK_THROWS_AS(contrastive_loss(reps, protos, {0, 1}, -1.0), UsageError);
}

TEST_CASE("supervised loss: perfect and uniform posteriors") {
    Matrix perfect(1, 4);
    perfect.at(0, 2) = 1.0;
    CHECK(supervised_loss_from_posteriors(perfect, {2}) == 0.0);

    Matrix uniform(1, 4, 0.25);
    CHECK(supervised_loss_from_posteriors(uniform, {1}) == Catch::Approx(std::log(4.0)).epsilon(1e-12));
    CHECK_THROWS_AS(supervised_loss_from_posteriors(uniform, {4}), UsageError);
}

TEST_CASE("supervised loss matches a naive posterior-path oracle") {
    Rng rng(4);
    for (int trial = 0; trial < 120; ++trial) {
        const std::size_t B = 1 + rng.uniform_index(6);
        const std::size_t C = 2 + rng.uniform_index(4);
        Tensor logits = random_tensor({B, C}, rng, -5.0, 5.0);
        std::vector<std::size_t> labels(B);
        for (auto& l : labels) l = rng.uniform_index(C);
        const Reduction red = trial % 2 ? Reduction::mean : Reduction::sum;
        Tensor loss = supervised_loss(logits, labels, red);

        Matrix posteriors(B, C);
        for (std::size_t i = 0; i < B; ++i) {
            double z = 0.0;
            for (std::size_t c = 0; c < C; ++c) z += std::exp(logits.data()[i * C + c]);
            for (std::size_t c = 0; c < C; ++c)
                posteriors.at(i, c) = std::exp(logits.data()[i * C + c]) / z;
        }
        const double oracle = supervised_loss_from_posteriors(posteriors, labels, red);
        CHECK(std::abs(loss.item() - oracle) < 1e-12);
        CHECK(loss.item() >= 0.0);
    }
}

TEST_CASE("combined loss is the plain sum of its terms") {
    Rng rng(5);
    Tensor reps = random_tensor({3, 4}, rng);
    Tensor protos = random_tensor({2, 4}, rng);
    Tensor logits = random_tensor({3, 3}, rng);
    Tensor lc = contrastive_loss(reps, protos, {0, 1, 0}, 0.1);
    Tensor ls = supervised_loss(logits, {0, 2, 1});
    Tensor both = combined_loss(lc, ls);
    CHECK(std::abs(both.item() - (lc.item() + ls.item())) < 1e-15);

    // contrastive term zero (P=1): combined equals supervised exactly
    Tensor single = random_tensor({1, 4}, rng);
    Tensor lc0 = contrastive_loss(reps, single, {0, 0, 0}, 0.1);
    CHECK(combined_loss(lc0, ls).item() == ls.item());

    CHECK(combined_loss(Tensor::scalar(0.0), Tensor::scalar(0.0)).item() == 0.0);
}

TEST_CASE("losses stay finite for logits up to 1e3 in magnitude") {
    Tensor logits({2, 3}, {1000.0, -1000.0, 0.0, -999.0, 999.0, 1.0});
    Tensor loss = supervised_loss(logits, {0, 1});
    CHECK(std::isfinite(loss.item()));

    // tiny temperature pushes similarities to +-1e3
    Tensor reps({2, 2}, {1.0, 0.0, 0.0, 1.0});
    Tensor protos({2, 2}, {1.0, 0.0, -1.0, 0.0});
    Tensor lc = contrastive_loss(reps, protos, {0, 1}, 1e-3);
    CHECK(std::isfinite(lc.item()));
    CHECK(lc.item() >= 0.0);
}
