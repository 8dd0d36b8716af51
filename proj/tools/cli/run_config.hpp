#pragma once

#include "usdl/distgen.hpp"
#include "usdl/multipath.hpp"
#include "usdl/nethead.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace usdl::cli {

enum class Mode { Regression, USDL, USDL_DD, MUSDL, MUSDL_Star };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& text);

struct ScaleConfig {
    double min = 0.0;
    double max = 100.0;
    std::size_t bins = 101;

    ScoreScale make() const { return make_scale(min, max, bins); }

    friend bool operator==(const ScaleConfig&, const ScaleConfig&) = default;
};

struct DatasetPaths {
    std::filesystem::path manifest;
    std::filesystem::path features;
    std::filesystem::path annotations;

    friend bool operator==(const DatasetPaths&, const DatasetPaths&) = default;
};

/// Everything a run needs. Stored as JSON:
///
///   {
///     "mode": "USDL",                       // Regression | USDL | USDL_DD | MUSDL | MUSDL_Star
///     "distribution": {"kind": "gaussian", "param": 5.0},
///     "judge_distribution": {"kind": "gaussian", "param": 1.0},
///     "final_scale": {"min": 0, "max": 100, "bins": 101},
///     "judge_scale": {"min": 0, "max": 20, "bins": 21},
///     "sum_scale": {...},                   // optional, USDL_DD only
///     "fusion_rule": {"drop_low": 2, "drop_high": 2, "multiplier": "ground_truth_dd"},  // optional
///     "train": {"seed": 7, "pooling": "score", "learning_rate": 0.001, "beta1": 0.9,
///               "beta2": 0.999, "epsilon": 1e-8, "epochs": 100, "batch_size": 8,
///               "hidden1": 256, "hidden2": 128, "dd_weight": 1.0},
///     "paths": {"manifest": "...", "features": "...", "annotations": "..."},
///     "output_dir": "..."
///   }
///
/// train.seed is required. Relative paths resolve against the config file's
/// directory and are stored absolute.
struct RunConfig {
    Mode mode = Mode::USDL;
    DistributionSpec distribution = DistributionSpec{DistributionKind::Gaussian, 5.0};
    DistributionSpec judge_distribution = DistributionSpec{DistributionKind::Gaussian, 1.0};
    ScaleConfig final_scale{0.0, 100.0, 101};
    ScaleConfig judge_scale{0.0, 20.0, 21};
    std::optional<ScaleConfig> sum_scale;
    std::optional<FusionRule> fusion_rule;  // falls back to the dataset manifest's rule
    TrainConfig train;
    DatasetPaths paths;
    std::filesystem::path output_dir;

    void validate() const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
std::string dump_run_config(const RunConfig& config);

RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const RunConfig& config, const std::filesystem::path& path);

}  // namespace usdl::cli
