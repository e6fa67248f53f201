#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "pcp/checkpoint.hpp"
#include "pcp/ecg.hpp"
#include "pcp/model.hpp"

using namespace pcp;
namespace fs = std::filesystem;

TEST_CASE("the 2500-sample stack flattens to exactly 320 features") {
    EncoderPlan plan = plan_encoder(2500);
    CHECK(plan.conv_len == std::array<std::size_t, 3>{832, 137, 21});
    CHECK(plan.pool_len == std::array<std::size_t, 3>{416, 68, 10});
    CHECK(plan.flatten_width == 320);
    CHECK_THROWS_AS(plan_encoder(40), ShapeError);
}

TEST_CASE("encode yields an E-dim representation and eval mode is deterministic") {
    Rng rng(3);
    EncoderParams enc = init_encoder(2500, 128, rng);
    Matrix frames(2, 2500);
    for (double& v : frames.data) v = rng.uniform(0.0, 1.0);

    Rng d1(0), d2(999);
    Tensor h1 = encode_batch(enc, frames, Mode::eval, d1);
    Tensor h2 = encode_batch(enc, frames, Mode::eval, d2);
    CHECK(h1.shape() == Shape{2, 128});
    CHECK(h1.data() == h2.data());

    Matrix bad(1, 100);
    CHECK_THROWS_AS(encode_batch(enc, bad, Mode::eval, d1), ShapeError);
}

TEST_CASE("similarity is the temperature-scaled cosine") {
    std::vector<double> h{1.0, 2.0, -0.5};
    CHECK(similarity(h, h, 0.1) == Catch::Approx(10.0).epsilon(1e-12));

    std::vector<double> a{1.0, 0.0}, b{0.0, 3.0};
    CHECK(similarity(a, b, 0.1) == Catch::Approx(0.0).margin(1e-15));

    std::vector<double> na{2.0, -1.0}, nb{-2.0, 1.0};
    CHECK(similarity(na, nb, 0.5) == Catch::Approx(-2.0).epsilon(1e-12));

    std::vector<double> zero{0.0, 0.0};
    CHECK_THROWS_AS(similarity(a, zero, 0.1), NumericError);
    CHECK_THROWS_AS(similarity(a, b, 0.0), UsageError);
    CHECK_THROWS_AS(similarity(a, h, 0.1), ShapeError);
}

TEST_CASE("similarity is invariant to positive rescaling of either argument") {
    Rng rng(5);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> h(6), v(6);
        for (double& x : h) x = rng.uniform(-1, 1);
        for (double& x : v) x = rng.uniform(-1, 1);
        const double alpha = rng.uniform(0.1, 50.0);
        std::vector<double> hs = h;
        for (double& x : hs) x *= alpha;
        CHECK(similarity(hs, v, 0.1) == Catch::Approx(similarity(h, v, 0.1)).margin(1e-9));
    }
}

TEST_CASE("hypernet_generate reshapes W u + b") {
    PcpModel m = init_model(2500, 2, 2, {0, 1}, 1);
    // zero weights: omega is the reshaped bias regardless of input
    std::fill(m.hyper_w.data().begin(), m.hyper_w.data().end(), 0.0);
    m.hyper_b.data() = {1.0, 2.0, 3.0, 4.0};
    Matrix omega = hypernet_generate(std::vector<double>{9.0, -9.0}, m);
    CHECK(omega.at(0, 0) == 1.0);
    CHECK(omega.at(0, 1) == 2.0);
    CHECK(omega.at(1, 0) == 3.0);
    CHECK(omega.at(1, 1) == 4.0);

    // identity-like rows: hand-computed 2x2
    m.hyper_w.data() = {1.0, 0.0, 0.0, 1.0,   // input dim 0 -> outputs (0,0),(1,1)
                        0.0, 1.0, 1.0, 0.0};  // input dim 1 -> outputs (0,1),(1,0)
    m.hyper_b.data() = {0.0, 0.0, 0.0, 0.0};
    omega = hypernet_generate(std::vector<double>{2.0, 5.0}, m);
    CHECK(omega.at(0, 0) == 2.0);
    CHECK(omega.at(0, 1) == 5.0);
    CHECK(omega.at(1, 0) == 5.0);
    CHECK(omega.at(1, 1) == 2.0);

    CHECK_THROWS_AS(hypernet_generate(std::vector<double>{1.0}, m), ShapeError);
}

TEST_CASE("classify is a stable softmax of omega^T h") {
    Matrix omega(2, 4);  // all zeros -> uniform posterior
    std::vector<double> h{0.3, -1.2};
    auto post = classify(h, omega);
    for (double p : post) CHECK(p == Catch::Approx(0.25).epsilon(1e-12));

    // logits (1000, 0) resolve without overflow
    Matrix big(1, 2);
    big.at(0, 0) = 1000.0;
    big.at(0, 1) = 0.0;
    auto post2 = classify(std::vector<double>{1.0}, big);
    CHECK(post2[0] == Catch::Approx(1.0).margin(1e-12));
    CHECK(post2[1] == Catch::Approx(0.0).margin(1e-12));

    Rng rng(9);
    Matrix om(3, 5);
    for (double& v : om.data) v = rng.uniform(-3, 3);
    auto post3 = classify(std::vector<double>{0.5, -2.0, 1.0}, om);
    double total = 0.0;
    for (double p : post3) {
        CHECK(p > 0.0);
        total += p;
    }
    CHECK(total == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("prototype bank rows are finite, non-zero and patient-indexed") {
    PcpModel m = init_model(2500, 16, 4, {3, 7, 11}, 5);
    CHECK(m.num_prototypes() == 3);
    CHECK(m.prototype_row(7) == 1);
    CHECK_THROWS_AS(m.prototype_row(4), UsageError);
    for (std::size_t p = 0; p < 3; ++p) {
        double norm = 0.0;
        for (std::size_t e = 0; e < 16; ++e) {
            const double v = m.prototypes.data()[p * 16 + e];
            REQUIRE(std::isfinite(v));
            norm += v * v;
        }
        CHECK(norm > 0.0);
    }
    CHECK_THROWS_AS(init_model(2500, 16, 4, {3, 3}, 5), UsageError);
    CHECK_THROWS_AS(init_model(2500, 16, 1, {3}, 5), UsageError);
}

TEST_CASE("checkpoint round-trip is bitwise") {
    const fs::path dir = fs::temp_directory_path() / "pcp_ckpt_test";
    fs::create_directories(dir);
    const std::string p1 = (dir / "m1.pcpm").string();
    const std::string p2 = (dir / "m2.pcpm").string();

    PcpModel m = init_model(2500, 8, 3, {1, 4, 9, 10}, 77);
    m.encoder.blocks[0].bn_running_mean[1] = 0.125;  // non-default buffer content
    m.encoder.blocks[2].bn_running_var[5] = 2.5;
    save_model(m, p1);
    PcpModel loaded = load_model(p1);
    CHECK(loaded.embed_dim == 8);
    CHECK(loaded.num_classes == 3);
    CHECK(loaded.prototype_patient_ids == m.prototype_patient_ids);
    CHECK(loaded.prototypes.data() == m.prototypes.data());
    CHECK(loaded.encoder.fc_w.data() == m.encoder.fc_w.data());
    CHECK(loaded.encoder.blocks[0].bn_running_mean == m.encoder.blocks[0].bn_running_mean);
    CHECK(loaded.encoder.blocks[2].bn_running_var == m.encoder.blocks[2].bn_running_var);
    save_model(loaded, p2);

    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    std::vector<char> b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::vector<char> b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);

    // truncation is a parse error
    std::vector<char> trunc(b1.begin(), b1.begin() + static_cast<long>(b1.size() / 3));
    const std::string pt = (dir / "trunc.pcpm").string();
    std::ofstream out(pt, std::ios::binary);
    out.write(trunc.data(), static_cast<std::streamsize>(trunc.size()));
    out.close();
    CHECK_THROWS_AS(load_model(pt), ParseError);
    fs::remove_all(dir);
}
