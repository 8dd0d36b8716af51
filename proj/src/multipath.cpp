#include "usdl/multipath.hpp"

#include "train_loop.hpp"
#include "usdl/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace usdl {

std::string to_string(MultiplierSource source) {
    switch (source) {
    case MultiplierSource::GroundTruthDD: return "ground_truth_dd";
    case MultiplierSource::PredictedDD: return "predicted_dd";
    case MultiplierSource::None: return "none";
    }
    return "none";
}

MultiplierSource parse_multiplier_source(const std::string& text) {
    if (text == "ground_truth_dd") return MultiplierSource::GroundTruthDD;
    if (text == "predicted_dd") return MultiplierSource::PredictedDD;
    if (text == "none") return MultiplierSource::None;
    throw Error(ErrorCode::InvalidConfig, "unknown multiplier source '" + text + "'");
}

std::size_t FusionRule::kept(std::size_t judge_count) const {
    validate(judge_count);
    return judge_count - static_cast<std::size_t>(drop_low) - static_cast<std::size_t>(drop_high);
}

void FusionRule::validate(std::size_t judge_count) const {
    if (drop_low < 0 || drop_high < 0) throw Error(ErrorCode::InvalidConfig, "drop counts must be nonnegative");
    if (static_cast<std::size_t>(drop_low) + static_cast<std::size_t>(drop_high) >= judge_count) {
        std::ostringstream os;
        os << "dropping " << drop_low << " low and " << drop_high << " high scores leaves nothing of " << judge_count
           << " judges";
        throw Error(ErrorCode::InsufficientJudges, os.str());
    }
}

std::size_t MultiHeadParams::input_dim() const {
    if (heads.empty()) throw Error(ErrorCode::ShapeMismatch, "multi-head model has no heads");
    return heads.front().input_dim();
}

void MultiHeadParams::validate() const {
    const std::size_t dim = input_dim();
    for (const auto& h : heads) {
        h.validate();
        if (h.input_dim() != dim) throw Error(ErrorCode::ShapeMismatch, "heads disagree on input dimension");
    }
    if (dd_head) {
        dd_head->validate();
        if (dd_head->input_dim() != dim) throw Error(ErrorCode::ShapeMismatch, "DD head input dimension differs");
        if (dd_head->output_dim() != 1) throw Error(ErrorCode::ShapeMismatch, "DD head must have a single output");
    }
}

std::vector<std::span<double>> MultiHeadParams::arrays() {
    std::vector<std::span<double>> out;
    for (auto& h : heads)
        for (auto a : h.arrays()) out.push_back(a);
    if (dd_head)
        for (auto a : dd_head->arrays()) out.push_back(a);
    return out;
}

std::vector<std::span<const double>> MultiHeadParams::arrays() const {
    std::vector<std::span<const double>> out;
    for (const auto& h : heads)
        for (auto a : h.arrays()) out.push_back(a);
    if (dd_head)
        for (auto a : std::as_const(*dd_head).arrays()) out.push_back(a);
    return out;
}

MultiHeadParams MultiHeadParams::zeros_like() const {
    MultiHeadParams z;
    for (const auto& h : heads) z.heads.push_back(HeadParams::zeros(h.shape()));
    if (dd_head) z.dd_head = HeadParams::zeros(dd_head->shape());
    return z;
}

JudgePanel sort_judges(const JudgePanel& panel) {
    JudgePanel out = panel;
    std::stable_sort(out.judge_scores.begin(), out.judge_scores.end());
    return out;
}

std::vector<ScoreDistribution> judge_targets(const JudgePanel& sorted_panel, const ScoreScale& judge_scale,
                                             const DistributionSpec& spec) {
    std::vector<ScoreDistribution> out;
    out.reserve(sorted_panel.size());
    for (double s : sorted_panel.judge_scores) out.push_back(target_distribution(judge_scale, 2.0 * s, spec));
    return out;
}

std::vector<ScoreDistribution> multi_forward(const FeatureMatrix& features, const MultiHeadParams& params,
                                             Pooling pooling, const ScoreScale& judge_scale) {
    params.validate();
    std::vector<ScoreDistribution> out;
    out.reserve(params.heads.size());
    for (const auto& h : params.heads) out.push_back(forward_usdl(features, h, pooling, judge_scale));
    return out;
}

namespace {

void check_targets(std::span<const ScoreDistribution> targets, const MultiHeadParams& params) {
    if (targets.size() != params.heads.size()) {
        throw Error(ErrorCode::InconsistentPanelSize, std::to_string(targets.size()) + " targets for " +
                                                          std::to_string(params.heads.size()) + " heads");
    }
}

}  // namespace

double multi_loss(std::span<const ScoreDistribution> targets, const FeatureMatrix& features,
                  const MultiHeadParams& params, Pooling pooling) {
    check_targets(targets, params);
    double total = 0.0;
    for (std::size_t k = 0; k < targets.size(); ++k) total += loss_usdl(targets[k], features, params.heads[k], pooling);
    return total;
}

double multi_total_loss(std::span<const ScoreDistribution> targets, const FeatureMatrix& features,
                        const MultiHeadParams& params, Pooling pooling, std::optional<double> dd_label,
                        double dd_weight) {
    double total = multi_loss(targets, features, params, pooling);
    if (dd_label && params.dd_head) total += dd_weight * loss_regression(*dd_label, features, *params.dd_head, pooling);
    return total;
}

MultiGradient multi_backward(std::span<const ScoreDistribution> targets, const FeatureMatrix& features,
                             const MultiHeadParams& params, Pooling pooling, std::optional<double> dd_label,
                             double dd_weight) {
    check_targets(targets, params);
    params.validate();
    MultiGradient out;
    for (std::size_t k = 0; k < targets.size(); ++k) {
        HeadGradient g = backward_usdl(targets[k], features, params.heads[k], pooling);
        out.loss += g.loss;
        out.grad.heads.push_back(std::move(g.grad));
    }
    if (params.dd_head) {
        if (dd_label) {
            HeadGradient g = backward_regression(*dd_label, features, *params.dd_head, pooling);
            out.loss += dd_weight * g.loss;
            for (auto a : g.grad.arrays())
                for (double& v : a) v *= dd_weight;
            out.grad.dd_head = std::move(g.grad);
        } else {
            out.grad.dd_head = HeadParams::zeros(params.dd_head->shape());
        }
    }
    return out;
}

double fuse_rule(std::span<const double> judge_scores, const FusionRule& rule, double dd) {
    const std::size_t kept = rule.kept(judge_scores.size());
    std::vector<double> sorted(judge_scores.begin(), judge_scores.end());
    std::sort(sorted.begin(), sorted.end());
    double sum = 0.0;
    const std::size_t first = static_cast<std::size_t>(rule.drop_low);
    for (std::size_t i = first; i < first + kept; ++i) sum += sorted[i];
    return sum * dd;
}

double predict_dd(const FeatureMatrix& features, const MultiHeadParams& params, Pooling pooling) {
    if (!params.dd_head) throw Error(ErrorCode::MissingDDHead, "model has no difficulty-degree head");
    return std::max(kMinPredictedDD, forward_regression(features, *params.dd_head, pooling));
}

std::vector<double> decode_judges(const FeatureMatrix& features, const MultiHeadParams& params, Pooling pooling,
                                  const ScoreScale& judge_scale) {
    std::vector<double> scores;
    for (const auto& dist : multi_forward(features, params, pooling, judge_scale))
        scores.push_back(decode_argmax(dist) / 2.0);
    return scores;
}

double infer_musdl(const FeatureMatrix& features, const MultiHeadParams& params, Pooling pooling,
                   const ScoreScale& judge_scale, const FusionRule& rule, std::optional<double> ground_truth_dd) {
    double dd = 1.0;
    switch (rule.multiplier_source) {
    case MultiplierSource::GroundTruthDD:
        if (!ground_truth_dd) throw Error(ErrorCode::MissingDD, "fusion needs the ground-truth difficulty degree");
        dd = *ground_truth_dd;
        break;
    case MultiplierSource::PredictedDD:
        dd = predict_dd(features, params, pooling);
        break;
    case MultiplierSource::None:
        break;
    }
    const std::vector<double> scores = decode_judges(features, params, pooling, judge_scale);
    return fuse_rule(scores, rule, dd);
}

double usdl_dd_label(const JudgePanel& panel, const FusionRule& rule) {
    return fuse_rule(panel.judge_scores, rule, 1.0);
}

ScoreDistribution usdl_dd_target(const JudgePanel& panel, const FusionRule& rule, const ScoreScale& sum_scale,
                                 const DistributionSpec& spec) {
    return target_distribution(sum_scale, usdl_dd_label(panel, rule), spec);
}

MultiTrainResult train_musdl(std::span<const MusdlSample> dataset, const TrainConfig& config, const FusionRule& rule,
                             const ScoreScale& judge_scale, const DistributionSpec& spec) {
    config.validate();
    if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "training set is empty");
    const std::size_t judges = dataset.front().panel.size();
    const std::size_t dim = dataset.front().features.dim();
    rule.validate(judges);
    const bool with_dd = rule.multiplier_source == MultiplierSource::PredictedDD;

    std::vector<std::vector<ScoreDistribution>> targets;
    std::vector<std::optional<double>> dd_labels;
    targets.reserve(dataset.size());
    for (const auto& s : dataset) {
        if (s.panel.size() != judges) {
            throw Error(ErrorCode::InconsistentPanelSize, "panels with " + std::to_string(s.panel.size()) + " and " +
                                                              std::to_string(judges) + " judges in one dataset");
        }
        if (s.features.dim() != dim) throw Error(ErrorCode::ShapeMismatch, "samples disagree on feature dimension");
        if (with_dd && !s.panel.difficulty_degree) {
            throw Error(ErrorCode::MissingDD, "DD branch training needs a difficulty degree on every sample");
        }
        targets.push_back(judge_targets(sort_judges(s.panel), judge_scale, spec));
        dd_labels.push_back(with_dd ? s.panel.difficulty_degree : std::nullopt);
    }

    Rng rng(config.rng_seed);
    MultiTrainResult result;
    const HeadShape head_shape{dim, config.hidden1, config.hidden2, judge_scale.num_bins()};
    for (std::size_t k = 0; k < judges; ++k) result.params.heads.push_back(init_head(head_shape, rng));
    if (with_dd) result.params.dd_head = init_head(HeadShape{dim, config.hidden1, config.hidden2, 1}, rng);

    result.loss_history = detail::minibatch_adam(
        result.params, result.params.zeros_like(), dataset.size(), config, rng,
        [&](std::size_t i, MultiHeadParams& acc) {
            const MultiGradient g = multi_backward(targets[i], dataset[i].features, result.params, config.pooling,
                                                   dd_labels[i], config.dd_weight);
            detail::add_into(acc.arrays(), g.grad.arrays());
            return g.loss;
        });
    return result;
}

}  // namespace usdl
