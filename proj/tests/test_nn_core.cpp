#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "layer_checks.hpp"
#include "wirelearn/layers.hpp"
#include "wirelearn/optim.hpp"

using namespace wirelearn;

TEST_CASE("sigmoid is 0.5 at zero") {
    Sigmoid s;
    Sigmoid::Cache c;
    Tensor x({1});
    x.data[0] = 0.0f;
    CHECK(s.forward(x, c).data[0] == Catch::Approx(0.5));
}

TEST_CASE("sigmoid backward at y=0.5 with unit upstream is 0.25") {
    Sigmoid s;
    Sigmoid::Cache c;
    Tensor x({1});
    s.forward(x, c);
    Tensor up({1});
    up.data[0] = 1.0f;
    CHECK(s.backward(up, c).data[0] == Catch::Approx(0.25));
}

TEST_CASE("max pooling of [1,3,2,4] gives [3,4]") {
    MaxPool1d pool;
    MaxPool1d::Cache c;
    Tensor x({4, 1}, {1.0f, 3.0f, 2.0f, 4.0f});
    Tensor y = pool.forward(x, c);
    REQUIRE(y.shape == std::vector<int>{2, 1});
    CHECK(y.data[0] == 3.0f);
    CHECK(y.data[1] == 4.0f);
}

TEST_CASE("valid convolution with kernel [1,0,-1] on [1,2,3,4]") {
    Conv1d conv(3, 1, 1);
    conv.w.data = {1.0f, 0.0f, -1.0f};
    Conv1d::Cache c;
    Tensor x({4, 1}, {1.0f, 2.0f, 3.0f, 4.0f});
    Tensor y = conv.forward(x, c);
    REQUIRE(y.shape == std::vector<int>{2, 1});
    CHECK(y.data[0] == -2.0f);
    CHECK(y.data[1] == -2.0f);
}

TEST_CASE("dense backward matches the linear-layer calculus") {
    Dense d(2, 2, Act::Linear);
    d.w.data = {1.0f, 2.0f, 3.0f, 4.0f};  // rows [1,2],[3,4]
    d.b.data = {0.5f, -0.5f};
    Dense::Cache c;
    Tensor x({2}, {2.0f, -1.0f});
    d.forward(x, c);
    Tensor delta({2}, {1.0f, -2.0f});
    Tensor dx = d.backward(delta, c);
    // dW = delta x^T
    CHECK(d.dw.data[0] == 2.0f);
    CHECK(d.dw.data[1] == -1.0f);
    CHECK(d.dw.data[2] == -4.0f);
    CHECK(d.dw.data[3] == 2.0f);
    // db = delta
    CHECK(d.db.data[0] == 1.0f);
    CHECK(d.db.data[1] == -2.0f);
    // dx = W^T delta
    CHECK(dx.data[0] == Catch::Approx(1.0 * 1 + 3.0 * -2));
    CHECK(dx.data[1] == Catch::Approx(2.0 * 1 + 4.0 * -2));
}

TEST_CASE("sgd momentum single step") {
    Tensor w({1}, {1.0f}), g({1}, {1.0f});
    std::vector<Tensor*> ws{&w}, gs{&g};
    OptimizerState opt(ws, 0.01, 0.9);
    sgd_momentum_step(ws, gs, opt);
    CHECK(opt.velocity[0].data[0] == Catch::Approx(0.01));
    CHECK(w.data[0] == Catch::Approx(0.99));
}

TEST_CASE("momentum coasting with zero gradient") {
    Tensor w({1}, {2.0f}), g({1}, {0.0f});
    std::vector<Tensor*> ws{&w}, gs{&g};
    OptimizerState opt(ws, 0.1, 0.5);
    opt.velocity[0].data[0] = 0.2f;
    sgd_momentum_step(ws, gs, opt);
    CHECK(opt.velocity[0].data[0] == Catch::Approx(0.1));  // mu * v0
    CHECK(w.data[0] == Catch::Approx(1.9));
}

TEST_CASE("zero momentum reduces to plain gradient descent") {
    Tensor w({3}, {1.0f, -2.0f, 0.5f});
    Tensor g({3}, {0.3f, 0.1f, -0.7f});
    Tensor w_ref = w;
    std::vector<Tensor*> ws{&w}, gs{&g};
    OptimizerState opt(ws, 0.05, 0.0);
    sgd_momentum_step(ws, gs, opt);
    for (size_t i = 0; i < 3; ++i)
        CHECK(w.data[i] == w_ref.data[i] - 0.05f * g.data[i]);
}

TEST_CASE("non-finite gradient is rejected") {
    Tensor w({1}, {1.0f}), g({1}, {std::numeric_limits<float>::quiet_NaN()});
    std::vector<Tensor*> ws{&w}, gs{&g};
    OptimizerState opt(ws, 0.01, 0.9);
    CHECK_THROWS_AS(sgd_momentum_step(ws, gs, opt), std::invalid_argument);
}

TEST_CASE("clipping leaves a boundary-norm gradient unchanged") {
    Tensor g({2}, {0.3f, 0.4f});
    Tensor before = g;
    clip_by_global_norm(g, 0.5);
    CHECK(g.data == before.data);  // bitwise
}

TEST_CASE("clipping rescales an oversized gradient to tau") {
    Tensor g({2}, {3.0f, 4.0f});
    clip_by_global_norm(g, 0.5);
    CHECK(g.data[0] == Catch::Approx(0.3));
    CHECK(g.data[1] == Catch::Approx(0.4));
    std::vector<Tensor*> gs{&g};
    CHECK(global_norm(gs) == Catch::Approx(0.5));
}

TEST_CASE("clipping a zero gradient does not divide") {
    Tensor g({3});
    clip_by_global_norm(g, 0.5);
    for (float v : g.data) CHECK(v == 0.0f);
}

TEST_CASE("clipping is bitwise idempotent") {
    RngStream rng(7, "test.clip");
    for (int trial = 0; trial < 50; ++trial) {
        Tensor g({17});
        for (float& v : g.data) v = static_cast<float>(rng.normal(0.0, 2.0));
        clip_by_global_norm(g, 0.5);
        Tensor once = g;
        clip_by_global_norm(g, 0.5);
        CHECK(g.data == once.data);
    }
}

TEST_CASE("bce loss examples") {
    CHECK(bce_loss(0.5, 1).loss == Catch::Approx(std::log(2.0)));
    CHECK(bce_loss(1.0, 1).loss <= 1.1e-7);  // perfect prediction, clamped
    CHECK(bce_loss(0.0, 0).loss <= 1.1e-7);
}

TEST_CASE("bce gradient matches finite differences") {
    for (uint64_t seed = 1; seed <= 5; ++seed)
        CHECK(layer_checks::check_bce(seed) < 1e-6);
}

TEST_CASE("learning rate schedule drops 10% every 5 epochs") {
    CHECK(lr_schedule(0.01, 0) == Catch::Approx(0.01));
    CHECK(lr_schedule(0.01, 4) == Catch::Approx(0.01));
    CHECK(lr_schedule(0.01, 5) == Catch::Approx(0.009));
    CHECK(lr_schedule(0.01, 10) == Catch::Approx(0.0081));
}

TEST_CASE("analytic gradients match central finite differences") {
    for (const auto& check : layer_checks::all_layer_checks()) {
        INFO(check.name);
        for (uint64_t seed = 1; seed <= 5; ++seed) {
            INFO("seed " << seed);
            CHECK(check.fn(seed) < 1e-4);
        }
    }
}
