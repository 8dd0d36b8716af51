#include "usdl/checkpoint.hpp"
#include "usdl/error.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <sstream>

using namespace usdl;

TEST_CASE("checkpoint round trip is bit exact") {
    Rng rng(41);
    Checkpoint ck;
    ck.mode = "MUSDL_Star";
    ck.train.pooling = Pooling::FeatureLevel;
    ck.train.learning_rate = 3e-4;
    ck.train.epochs = 17;
    ck.train.rng_seed = 0xfeedfacecafeULL;
    ck.train.hidden1 = 5;
    ck.train.hidden2 = 3;
    ck.train.dd_weight = 0.3;
    ck.rule = FusionRule{2, 2, MultiplierSource::PredictedDD};
    for (int k = 0; k < 3; ++k) ck.model.heads.push_back(oracle::random_head(rng, {4, 5, 3, 21}, 1.0 / 3));
    ck.model.dd_head = oracle::random_head(rng, {4, 5, 3, 1});
    ck.model.heads[1].layer2.bias[0] = 4.9e-324;
    ck.model.heads[2].layer3.weights(0, 0) = -0.0;

    std::stringstream ss;
    write_checkpoint(ss, ck);
    const std::string text = ss.str();
    const auto back = read_checkpoint(ss);
    CHECK(back == ck);

    std::stringstream again;
    write_checkpoint(again, back);
    CHECK(again.str() == text);

    const auto path = std::filesystem::temp_directory_path() / "usdl_unit_checkpoint.txt";
    save_checkpoint(ck, path);
    const auto loaded = load_checkpoint(path);
    const auto f = oracle::random_features(rng, 3, 4);
    const auto scale = make_scale(0, 20, 21);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(forward_usdl(f, loaded.model.heads[k], Pooling::ScoreLevel, scale).probs() ==
              forward_usdl(f, ck.model.heads[k], Pooling::ScoreLevel, scale).probs());
    }
    CHECK(predict_dd(f, loaded.model, Pooling::FeatureLevel) == predict_dd(f, ck.model, Pooling::FeatureLevel));
}

TEST_CASE("malformed checkpoints are rejected") {
    auto code_of = [](const std::string& text) {
        std::istringstream is(text);
        try {
            read_checkpoint(is);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::IoError;
    };
    CHECK(code_of("") == ErrorCode::ParseError);
    CHECK(code_of("usdl-checkpoint 9\n") == ErrorCode::ParseError);

    Rng rng(42);
    Checkpoint ck;
    ck.mode = "USDL";
    ck.model.heads.push_back(oracle::random_head(rng, {2, 3, 2, 4}));
    std::ostringstream os;
    write_checkpoint(os, ck);
    std::string text = os.str();
    CHECK(code_of(text.substr(0, text.size() / 2)) == ErrorCode::ParseError);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/usdl/checkpoint.txt"), Error);
}
