#pragma once

#include "usdl/distgen.hpp"
#include "usdl/nethead.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace usdl {

struct JudgePanel {
    std::vector<double> judge_scores;  // raw judge units
    std::optional<double> difficulty_degree;

    std::size_t size() const noexcept { return judge_scores.size(); }

    friend bool operator==(const JudgePanel&, const JudgePanel&) = default;
};

enum class MultiplierSource { GroundTruthDD, PredictedDD, None };

std::string to_string(MultiplierSource source);
MultiplierSource parse_multiplier_source(const std::string& text);

/// Official scoring rule: sort, drop the `drop_low` lowest and `drop_high`
/// highest judges, sum the rest, multiply by the difficulty degree.
struct FusionRule {
    int drop_low = 0;
    int drop_high = 0;
    MultiplierSource multiplier_source = MultiplierSource::None;

    static FusionRule diving() { return FusionRule{2, 2, MultiplierSource::GroundTruthDD}; }
    static FusionRule plain_sum() { return FusionRule{0, 0, MultiplierSource::None}; }

    std::size_t kept(std::size_t judge_count) const;
    /// Throws InsufficientJudges unless drop_low + drop_high < judge_count.
    void validate(std::size_t judge_count) const;

    friend bool operator==(const FusionRule&, const FusionRule&) = default;
};

/// Lower bound applied to a predicted difficulty degree before fusion.
inline constexpr double kMinPredictedDD = 0.1;

/// K distribution heads over the same features, plus an optional scalar head
/// that predicts the difficulty degree.
struct MultiHeadParams {
    std::vector<HeadParams> heads;
    std::optional<HeadParams> dd_head;

    std::size_t judge_count() const noexcept { return heads.size(); }
    std::size_t input_dim() const;
    void validate() const;

    /// Head arrays in head order, then the DD head's.
    std::vector<std::span<double>> arrays();
    std::vector<std::span<const double>> arrays() const;

    MultiHeadParams zeros_like() const;

    friend bool operator==(const MultiHeadParams&, const MultiHeadParams&) = default;
};

JudgePanel sort_judges(const JudgePanel& panel);

/// k-th target is centered on twice the k-th judge score (doubling puts
/// half-point scores on integer bins).
std::vector<ScoreDistribution> judge_targets(const JudgePanel& sorted_panel, const ScoreScale& judge_scale,
                                             const DistributionSpec& spec);

std::vector<ScoreDistribution> multi_forward(const FeatureMatrix& features, const MultiHeadParams& params,
                                             Pooling pooling, const ScoreScale& judge_scale);

double multi_loss(std::span<const ScoreDistribution> targets, const FeatureMatrix& features,
                  const MultiHeadParams& params, Pooling pooling);

struct MultiGradient {
    double loss = 0.0;
    MultiHeadParams grad;
};

/// Gradient of sum_k KL(target_k || head_k) plus, when `dd_label` is given and
/// a DD head exists, dd_weight * (dd_head - dd_label)^2.
MultiGradient multi_backward(std::span<const ScoreDistribution> targets, const FeatureMatrix& features,
                             const MultiHeadParams& params, Pooling pooling, std::optional<double> dd_label = {},
                             double dd_weight = 1.0);

double multi_total_loss(std::span<const ScoreDistribution> targets, const FeatureMatrix& features,
                        const MultiHeadParams& params, Pooling pooling, std::optional<double> dd_label = {},
                        double dd_weight = 1.0);

double fuse_rule(std::span<const double> judge_scores, const FusionRule& rule, double dd);

double predict_dd(const FeatureMatrix& features, const MultiHeadParams& params, Pooling pooling);

/// Decodes every head by argmax, halves back to raw judge units, and applies
/// the fusion rule with the DD selected by rule.multiplier_source.
double infer_musdl(const FeatureMatrix& features, const MultiHeadParams& params, Pooling pooling,
                   const ScoreScale& judge_scale, const FusionRule& rule, std::optional<double> ground_truth_dd = {});

/// Raw per-judge scores decoded from the heads (same order as the heads).
std::vector<double> decode_judges(const FeatureMatrix& features, const MultiHeadParams& params, Pooling pooling,
                                  const ScoreScale& judge_scale);

/// Trimmed judge sum (without DD) used as the single-head USDL_DD label.
double usdl_dd_label(const JudgePanel& panel, const FusionRule& rule);

ScoreDistribution usdl_dd_target(const JudgePanel& panel, const FusionRule& rule, const ScoreScale& sum_scale,
                                 const DistributionSpec& spec);

struct MusdlSample {
    FeatureMatrix features;
    JudgePanel panel;
};

struct MultiTrainResult {
    MultiHeadParams params;
    std::vector<double> loss_history;
};

/// Trains one head per sorted judge rank; adds a DD head when the rule
/// predicts its multiplier.
MultiTrainResult train_musdl(std::span<const MusdlSample> dataset, const TrainConfig& config, const FusionRule& rule,
                             const ScoreScale& judge_scale, const DistributionSpec& spec);

}  // namespace usdl
