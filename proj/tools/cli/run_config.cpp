#include "run_config.hpp"

#include "usdl/error.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace usdl::cli {

using nlohmann::json;

std::string to_string(Mode mode) {
    switch (mode) {
    case Mode::Regression: return "Regression";
    case Mode::USDL: return "USDL";
    case Mode::USDL_DD: return "USDL_DD";
    case Mode::MUSDL: return "MUSDL";
    case Mode::MUSDL_Star: return "MUSDL_Star";
    }
    return "USDL";
}

Mode parse_mode(const std::string& text) {
    for (Mode m : {Mode::Regression, Mode::USDL, Mode::USDL_DD, Mode::MUSDL, Mode::MUSDL_Star})
        if (to_string(m) == text) return m;
    throw Error(ErrorCode::InvalidConfig, "unknown mode '" + text + "'");
}

void RunConfig::validate() const {
    distribution.validate();
    judge_distribution.validate();
    final_scale.make();
    judge_scale.make();
    if (sum_scale) sum_scale->make();
    train.validate();
    if (fusion_rule && (fusion_rule->drop_low < 0 || fusion_rule->drop_high < 0)) {
        throw Error(ErrorCode::InvalidConfig, "fusion_rule drop counts must be nonnegative");
    }
    if (mode == Mode::MUSDL && fusion_rule && fusion_rule->multiplier_source == MultiplierSource::PredictedDD) {
        throw Error(ErrorCode::InvalidConfig, "MUSDL uses ground-truth or no DD; use mode MUSDL_Star to predict DD");
    }
    if (paths.manifest.empty() || paths.features.empty() || paths.annotations.empty()) {
        throw Error(ErrorCode::InvalidConfig, "paths.manifest, paths.features and paths.annotations are required");
    }
}

namespace {

json spec_to_json(const DistributionSpec& s) { return {{"kind", to_string(s.kind)}, {"param", s.param}}; }

json scale_to_json(const ScaleConfig& s) { return {{"min", s.min}, {"max", s.max}, {"bins", s.bins}}; }

DistributionSpec spec_from_json(const json& j) {
    DistributionSpec s{parse_distribution_kind(j.at("kind").get<std::string>()), j.at("param").get<double>()};
    s.validate();
    return s;
}

ScaleConfig scale_from_json(const json& j) {
    return ScaleConfig{j.at("min").get<double>(), j.at("max").get<double>(), j.at("bins").get<std::size_t>()};
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.empty()) return path;
    if (path.is_relative() && !base.empty()) path = base / path;
    return path.lexically_normal();
}

template <class T>
void read_opt(const json& j, const char* key, T& target) {
    if (j.contains(key)) target = j.at(key).get<T>();
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir) {
    RunConfig c;
    try {
        const json j = json::parse(json_text);
        c.mode = parse_mode(j.at("mode").get<std::string>());
        if (j.contains("distribution")) c.distribution = spec_from_json(j.at("distribution"));
        if (j.contains("judge_distribution")) c.judge_distribution = spec_from_json(j.at("judge_distribution"));
        if (j.contains("final_scale")) c.final_scale = scale_from_json(j.at("final_scale"));
        if (j.contains("judge_scale")) c.judge_scale = scale_from_json(j.at("judge_scale"));
        if (j.contains("sum_scale")) c.sum_scale = scale_from_json(j.at("sum_scale"));
        if (j.contains("fusion_rule")) {
            const json& r = j.at("fusion_rule");
            FusionRule rule;
            read_opt(r, "drop_low", rule.drop_low);
            read_opt(r, "drop_high", rule.drop_high);
            if (r.contains("multiplier")) rule.multiplier_source = parse_multiplier_source(r.at("multiplier").get<std::string>());
            c.fusion_rule = rule;
        }

        const json& t = j.at("train");
        if (!t.contains("seed")) throw Error(ErrorCode::InvalidConfig, "train.seed is required");
        c.train.rng_seed = t.at("seed").get<std::uint64_t>();
        if (t.contains("pooling")) c.train.pooling = parse_pooling(t.at("pooling").get<std::string>());
        read_opt(t, "learning_rate", c.train.learning_rate);
        read_opt(t, "beta1", c.train.beta1);
        read_opt(t, "beta2", c.train.beta2);
        read_opt(t, "epsilon", c.train.epsilon);
        read_opt(t, "epochs", c.train.epochs);
        read_opt(t, "batch_size", c.train.batch_size);
        read_opt(t, "hidden1", c.train.hidden1);
        read_opt(t, "hidden2", c.train.hidden2);
        read_opt(t, "dd_weight", c.train.dd_weight);

        const json& p = j.at("paths");
        c.paths.manifest = resolve(base_dir, p.at("manifest").get<std::string>());
        c.paths.features = resolve(base_dir, p.at("features").get<std::string>());
        c.paths.annotations = resolve(base_dir, p.at("annotations").get<std::string>());
        if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

std::string dump_run_config(const RunConfig& c) {
    json j;
    j["mode"] = to_string(c.mode);
    j["distribution"] = spec_to_json(c.distribution);
    j["judge_distribution"] = spec_to_json(c.judge_distribution);
    j["final_scale"] = scale_to_json(c.final_scale);
    j["judge_scale"] = scale_to_json(c.judge_scale);
    if (c.sum_scale) j["sum_scale"] = scale_to_json(*c.sum_scale);
    if (c.fusion_rule) {
        j["fusion_rule"] = {{"drop_low", c.fusion_rule->drop_low},
                            {"drop_high", c.fusion_rule->drop_high},
                            {"multiplier", to_string(c.fusion_rule->multiplier_source)}};
    }
    j["train"] = {{"seed", c.train.rng_seed},
                  {"pooling", to_string(c.train.pooling)},
                  {"learning_rate", c.train.learning_rate},
                  {"beta1", c.train.beta1},
                  {"beta2", c.train.beta2},
                  {"epsilon", c.train.epsilon},
                  {"epochs", c.train.epochs},
                  {"batch_size", c.train.batch_size},
                  {"hidden1", c.train.hidden1},
                  {"hidden2", c.train.hidden2},
                  {"dd_weight", c.train.dd_weight}};
    j["paths"] = {{"manifest", c.paths.manifest.string()},
                  {"features", c.paths.features.string()},
                  {"annotations", c.paths.annotations.string()}};
    if (!c.output_dir.empty()) j["output_dir"] = c.output_dir.string();
    return j.dump(2) + "\n";
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), path.parent_path());
}

void save_run_config(const RunConfig& config, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << dump_run_config(config);
}

}  // namespace usdl::cli
