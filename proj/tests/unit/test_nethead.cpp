#include "usdl/error.hpp"
#include "usdl/nethead.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace usdl;

namespace {

const HeadShape kSmall{4, 5, 3, 6};

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("forward_usdl with one segment is pooling independent") {
    Rng rng(1);
    const auto params = oracle::random_head(rng, kSmall);
    const auto f = oracle::random_features(rng, 1, 4);
    const auto scale = make_scale(0, 5, 6);
    const auto a = forward_usdl(f, params, Pooling::ScoreLevel, scale);
    const auto b = forward_usdl(f, params, Pooling::FeatureLevel, scale);
    CHECK(a.probs() == b.probs());
}

TEST_CASE("all-zero parameters give a uniform distribution") {
    Rng rng(2);
    const auto params = HeadParams::zeros({4, 5, 3, 11});
    const auto f = oracle::random_features(rng, 3, 4);
    const auto scale = make_scale(0, 10, 11);
    for (auto pooling : {Pooling::ScoreLevel, Pooling::FeatureLevel}) {
        const auto d = forward_usdl(f, params, pooling, scale);
        for (double p : d.probs()) CHECK(p == doctest::Approx(1.0 / 11).epsilon(1e-15));
        CHECK(loss_usdl(ScoreDistribution::uniform(scale), f, params, pooling) == doctest::Approx(0.0).epsilon(1e-15));
        // KL(delta || uniform) = log m.
        CHECK(loss_usdl(ScoreDistribution::delta(scale, 0), f, params, pooling) ==
              doctest::Approx(2.3978952727983707).epsilon(1e-13));
    }
}

TEST_CASE("forward_usdl output is a distribution for random instances") {
    Rng rng(3);
    const auto scale = make_scale(0, 10, 11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto params = oracle::random_head(rng, {7, 9, 5, 11}, 2.0);
        const auto f = oracle::random_features(rng, 3, 7);
        for (auto pooling : {Pooling::ScoreLevel, Pooling::FeatureLevel}) {
            const auto d = forward_usdl(f, params, pooling, scale);
            CHECK(std::abs(sum(d.probs()) - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("segment order does not change pooled output") {
    Rng rng(4);
    const auto params = oracle::random_head(rng, kSmall);
    const auto f = oracle::random_features(rng, 5, 4);
    std::vector<double> permuted;
    for (std::size_t s : {3u, 0u, 4u, 1u, 2u})
        for (double v : f.segment(s)) permuted.push_back(v);
    const FeatureMatrix g(5, 4, permuted);
    const auto scale = make_scale(0, 5, 6);
    for (auto pooling : {Pooling::ScoreLevel, Pooling::FeatureLevel}) {
        const auto a = forward_usdl(f, params, pooling, scale).probs();
        const auto b = forward_usdl(g, params, pooling, scale).probs();
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-14));
    }
}

TEST_CASE("adding a constant to the output bias leaves the distribution unchanged") {
    Rng rng(5);
    auto params = oracle::random_head(rng, kSmall);
    const auto f = oracle::random_features(rng, 2, 4);
    const auto scale = make_scale(0, 5, 6);
    const auto before = forward_usdl(f, params, Pooling::ScoreLevel, scale).probs();
    for (double& b : params.layer3.bias) b += 3.25;
    const auto after = forward_usdl(f, params, Pooling::ScoreLevel, scale).probs();
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(after[i] == doctest::Approx(before[i]).epsilon(1e-13));
}

TEST_CASE("shape mismatches are reported") {
    Rng rng(6);
    const auto params = oracle::random_head(rng, kSmall);
    const auto wrong_dim = oracle::random_features(rng, 2, 5);
    CHECK_THROWS_AS(forward_usdl(wrong_dim, params, Pooling::ScoreLevel, make_scale(0, 5, 6)), Error);
    const auto f = oracle::random_features(rng, 2, 4);
    CHECK_THROWS_AS(forward_usdl(f, params, Pooling::ScoreLevel, make_scale(0, 5, 7)), Error);
    CHECK_THROWS_AS(forward_regression(f, params, Pooling::ScoreLevel), Error);
    CHECK_THROWS_AS(FeatureMatrix(2, 2, {1.0, 2.0, NAN, 0.0}), Error);
    CHECK_THROWS_AS(FeatureMatrix(0, 2, {}), Error);
}

TEST_CASE("softmax-KL output gradient vanishes when prediction equals target") {
    Rng rng(7);
    const auto params = oracle::random_head(rng, kSmall);
    const auto f = oracle::random_features(rng, 2, 4);
    const auto scale = make_scale(0, 5, 6);
    for (auto pooling : {Pooling::ScoreLevel, Pooling::FeatureLevel}) {
        const auto target = forward_usdl(f, params, pooling, scale);
        const auto g = backward_usdl(target, f, params, pooling);
        CHECK(g.loss == doctest::Approx(0.0));
        for (double b : g.grad.layer3.bias) CHECK(std::abs(b) <= 1e-15);
        for (auto a : g.grad.arrays())
            for (double v : a) CHECK(std::abs(v) <= 1e-14);
    }
}

TEST_CASE("output-bias gradient equals predicted minus target") {
    Rng rng(8);
    const auto params = oracle::random_head(rng, kSmall);
    const auto f = oracle::random_features(rng, 3, 4);
    const auto scale = make_scale(0, 5, 6);
    const ScoreDistribution target(scale, oracle::random_probs(rng, 6));
    for (auto pooling : {Pooling::ScoreLevel, Pooling::FeatureLevel}) {
        const auto q = forward_usdl(f, params, pooling, scale);
        const auto g = backward_usdl(target, f, params, pooling);
        for (std::size_t j = 0; j < 6; ++j) CHECK(g.grad.layer3.bias[j] == doctest::Approx(q[j] - target[j]).epsilon(1e-12));
    }
}

TEST_CASE("zero features kill first-layer weight gradients") {
    Rng rng(9);
    const auto params = oracle::random_head(rng, kSmall);
    const FeatureMatrix zeros(2, 4, std::vector<double>(8, 0.0));
    const auto scale = make_scale(0, 5, 6);
    const auto g = backward_usdl(ScoreDistribution::delta(scale, 2), zeros, params, Pooling::ScoreLevel);
    for (double w : g.grad.layer1.weights.values()) CHECK(w == 0.0);
    double bias_norm = 0;
    for (double b : g.grad.layer3.bias) bias_norm += std::abs(b);
    CHECK(bias_norm > 0.0);
}

TEST_CASE("USDL gradients match central finite differences") {
    Rng rng(10);
    const auto scale = make_scale(0, 5, 6);
    for (int trial = 0; trial < 20; ++trial) {
        for (auto pooling : {Pooling::ScoreLevel, Pooling::FeatureLevel}) {
            auto params = oracle::random_head(rng, kSmall);
            const auto f = oracle::random_features(rng, 2, 4);
            const ScoreDistribution target(scale, oracle::random_probs(rng, 6, trial % 2 == 0));
            const auto g = backward_usdl(target, f, params, pooling);
            CHECK(g.loss == doctest::Approx(loss_usdl(target, f, params, pooling)).epsilon(1e-14));
            const auto check = oracle::finite_difference_check(params.arrays(), std::as_const(g.grad).arrays(),
                                                               [&] { return loss_usdl(target, f, params, pooling); });
            INFO(check.first_failure);
            CHECK(check.ok());
        }
    }
}

TEST_CASE("regression gradients match central finite differences") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        for (auto pooling : {Pooling::ScoreLevel, Pooling::FeatureLevel}) {
            auto params = oracle::random_head(rng, {4, 5, 3, 1});
            const auto f = oracle::random_features(rng, 2, 4);
            const double label = rng.uniform(-2, 2);
            const auto g = backward_regression(label, f, params, pooling);
            const auto check = oracle::finite_difference_check(params.arrays(), std::as_const(g.grad).arrays(),
                                                               [&] { return loss_regression(label, f, params, pooling); });
            INFO(check.first_failure);
            CHECK(check.ok());
        }
    }
}

TEST_CASE("regression head basics") {
    Rng rng(12);
    const auto zero = HeadParams::zeros({4, 5, 3, 1});
    const auto f = oracle::random_features(rng, 3, 4);
    CHECK(forward_regression(f, zero, Pooling::ScoreLevel) == 0.0);
    CHECK(loss_regression(7.0, f, zero, Pooling::ScoreLevel) == 49.0);
    auto p = oracle::random_head(rng, {4, 5, 3, 1});
    const double pred = forward_regression(f, p, Pooling::FeatureLevel);
    CHECK(loss_regression(pred, f, p, Pooling::FeatureLevel) == 0.0);
}

TEST_CASE("adam_step examples") {
    TrainConfig cfg;
    cfg.learning_rate = 0.1;

    SUBCASE("zero gradients leave parameters unchanged") {
        Rng rng(13);
        auto p = oracle::random_head(rng, kSmall);
        const auto before = p;
        auto state = AdamState::for_head(p);
        adam_step(p, HeadParams::zeros(kSmall), state, cfg);
        CHECK(p == before);
        CHECK(state.step_count == 1);
    }
    SUBCASE("first step moves a scalar by about the learning rate") {
        std::vector<double> p{1.0};
        const std::vector<double> g{1.0};
        std::vector<std::span<double>> ps{p};
        std::vector<std::span<const double>> gs{g};
        auto state = AdamState::for_arrays(std::vector<std::span<const double>>{p});
        adam_step(ps, gs, state, cfg);
        // m_hat = v_hat = 1, step = lr / (1 + eps).
        CHECK(p[0] == doctest::Approx(1.0 - 0.1 / (1.0 + 1e-8)).epsilon(1e-15));
    }
    SUBCASE("repeated gradients keep steps bounded by the learning rate") {
        std::vector<double> p{1.0};
        const std::vector<double> g{1.0};
        std::vector<std::span<double>> ps{p};
        std::vector<std::span<const double>> gs{g};
        auto state = AdamState::for_arrays(std::vector<std::span<const double>>{p});
        adam_step(ps, gs, state, cfg);
        const double after_one = p[0];
        adam_step(ps, gs, state, cfg);
        CHECK(state.step_count == 2);
        CHECK(std::abs(p[0] - after_one) <= 0.1 * (1 + 1e-9));
    }
    SUBCASE("shape mismatch") {
        Rng rng(14);
        auto p = oracle::random_head(rng, kSmall);
        auto state = AdamState::for_head(p);
        CHECK_THROWS_AS(adam_step(p, HeadParams::zeros({4, 5, 3, 7}), state, cfg), Error);
    }
}

TEST_CASE("init_head draws weights within the fan-in bound and zero biases") {
    Rng rng(15);
    const auto p = init_head({16, 32, 8, 11}, rng);
    for (double w : p.layer1.weights.values()) CHECK(std::abs(w) <= 1.0 / 4.0);
    for (double w : p.layer2.weights.values()) CHECK(std::abs(w) <= 1.0 / std::sqrt(32.0));
    for (double b : p.layer1.bias) CHECK(b == 0.0);
    for (double b : p.layer3.bias) CHECK(b == 0.0);
}

TEST_CASE("training reduces loss on an overfittable sample and is deterministic") {
    Rng rng(16);
    const auto scale = make_scale(0, 10, 11);
    std::vector<UsdlSample> data{{oracle::random_features(rng, 3, 6),
                                  target_distribution(scale, 7.0, DistributionSpec::gaussian(1.0))}};
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.hidden1 = 16;
    cfg.hidden2 = 8;
    cfg.learning_rate = 1e-2;
    cfg.rng_seed = 3;
    for (auto pooling : {Pooling::ScoreLevel, Pooling::FeatureLevel}) {
        cfg.pooling = pooling;
        const auto a = train_usdl(data, cfg);
        const auto b = train_usdl(data, cfg);
        REQUIRE(a.loss_history.size() == 60);
        CHECK(a.loss_history.back() < a.loss_history.front());
        CHECK(a.loss_history == b.loss_history);
        CHECK(a.params == b.params);
        CHECK(decode_argmax(forward_usdl(data[0].features, a.params, pooling, scale)) == 7.0);
    }

    std::vector<RegressionSample> reg{{data[0].features, 3.0}};
    const auto r = train_regression(reg, cfg);
    CHECK(r.loss_history.back() < r.loss_history.front());
    CHECK_THROWS_AS(train_usdl(std::vector<UsdlSample>{}, cfg), Error);
}

TEST_CASE("train_usdl learns a linear score from features") {
    // Targets: argmax label is a fixed linear function of the mean feature.
    Rng rng(17);
    const auto scale = make_scale(0, 100, 101);
    std::vector<double> direction(16);
    for (double& d : direction) d = rng.uniform(-1, 1);
    auto make = [&](std::size_t count) {
        std::vector<UsdlSample> out;
        std::vector<double> labels;
        for (std::size_t i = 0; i < count; ++i) {
            const double q = rng.uniform(0, 1);
            std::vector<double> v(4 * 16);
            for (std::size_t s = 0; s < 4; ++s)
                for (std::size_t d = 0; d < 16; ++d) v[s * 16 + d] = q * direction[d] + 0.05 * rng.normal();
            const double label = std::round(100 * q);
            labels.push_back(label);
            out.push_back({FeatureMatrix(4, 16, v), target_distribution(scale, label, DistributionSpec::gaussian(5))});
        }
        return std::make_pair(out, labels);
    };
    const auto [train, train_labels] = make(80);
    const auto [test, test_labels] = make(20);
    TrainConfig cfg;
    cfg.epochs = 150;
    cfg.hidden1 = 64;
    cfg.hidden2 = 32;
    cfg.rng_seed = 1;
    cfg.pooling = Pooling::FeatureLevel;
    const auto res = train_usdl(train, cfg);
    std::vector<double> pred;
    for (const auto& s : test) pred.push_back(decode_argmax(forward_usdl(s.features, res.params, cfg.pooling, scale)));
    CHECK(oracle::brute_spearman(pred, test_labels) > 0.9);
}
