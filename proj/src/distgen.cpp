#include "usdl/distgen.hpp"

#include "usdl/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace usdl {

ScoreScale::ScoreScale(double min_score, double max_score, std::size_t num_bins) : min_(min_score), max_(max_score) {
    if (!std::isfinite(min_score) || !std::isfinite(max_score) || !(min_score < max_score)) {
        std::ostringstream os;
        os << "score range [" << min_score << ", " << max_score << "] is empty or not finite";
        throw Error(ErrorCode::InvalidScale, os.str());
    }
    if (num_bins < 2) throw Error(ErrorCode::InvalidScale, "a score scale needs at least 2 bins");

    centers_.resize(num_bins);
    const double step = (max_score - min_score) / static_cast<double>(num_bins - 1);
    for (std::size_t i = 0; i < num_bins; ++i) centers_[i] = min_score + static_cast<double>(i) * step;
    centers_.back() = max_score;
}

std::size_t ScoreScale::nearest_bin(double value) const {
    if (value <= min_) return 0;
    if (value >= max_) return centers_.size() - 1;
    std::size_t best = 0;
    double best_dist = std::abs(centers_[0] - value);
    for (std::size_t i = 1; i < centers_.size(); ++i) {
        const double d = std::abs(centers_[i] - value);
        if (d < best_dist) {
            best = i;
            best_dist = d;
        }
    }
    return best;
}

ScoreScale make_scale(double min_score, double max_score, std::size_t num_bins) {
    return ScoreScale(min_score, max_score, num_bins);
}

ScoreDistribution::ScoreDistribution(ScoreScale scale, std::vector<double> probs)
    : scale_(std::move(scale)), probs_(std::move(probs)) {
    if (probs_.size() != scale_.num_bins()) {
        throw Error(ErrorCode::ShapeMismatch, "distribution has " + std::to_string(probs_.size()) +
                                                  " entries but its scale has " +
                                                  std::to_string(scale_.num_bins()) + " bins");
    }
    double total = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw Error(ErrorCode::InvalidSpec, "probabilities must be finite and >= 0");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        std::ostringstream os;
        os.precision(17);
        os << "probabilities sum to " << total << ", expected 1";
        throw Error(ErrorCode::InvalidSpec, os.str());
    }
}

ScoreDistribution ScoreDistribution::delta(const ScoreScale& scale, std::size_t bin) {
    std::vector<double> p(scale.num_bins(), 0.0);
    p.at(bin) = 1.0;
    return ScoreDistribution(scale, std::move(p));
}

ScoreDistribution ScoreDistribution::uniform(const ScoreScale& scale) {
    return ScoreDistribution(scale, std::vector<double>(scale.num_bins(), 1.0 / static_cast<double>(scale.num_bins())));
}

std::string to_string(DistributionKind kind) {
    switch (kind) {
    case DistributionKind::Gaussian: return "gaussian";
    case DistributionKind::Triangle: return "triangle";
    case DistributionKind::ChiSquare: return "chi_square";
    }
    return "gaussian";
}

DistributionKind parse_distribution_kind(const std::string& text) {
    if (text == "gaussian") return DistributionKind::Gaussian;
    if (text == "triangle") return DistributionKind::Triangle;
    if (text == "chi_square") return DistributionKind::ChiSquare;
    throw Error(ErrorCode::InvalidSpec, "unknown distribution kind '" + text + "'");
}

DistributionSpec DistributionSpec::gaussian(double sigma) {
    DistributionSpec s{DistributionKind::Gaussian, sigma};
    s.validate();
    return s;
}

DistributionSpec DistributionSpec::triangle(double half_width) {
    DistributionSpec s{DistributionKind::Triangle, half_width};
    s.validate();
    return s;
}

DistributionSpec DistributionSpec::chi_square(double dof) {
    DistributionSpec s{DistributionKind::ChiSquare, dof};
    s.validate();
    return s;
}

void DistributionSpec::validate() const {
    if (!(param > 0.0) || !std::isfinite(param)) {
        throw Error(ErrorCode::InvalidSpec, to_string(kind) + " parameter must be finite and > 0");
    }
}

double unnormalized_density(const DistributionSpec& spec, double label, double x) {
    switch (spec.kind) {
    case DistributionKind::Gaussian: {
        const double z = (x - label) / spec.param;
        return std::exp(-0.5 * z * z);
    }
    case DistributionKind::Triangle:
        return std::max(0.0, 1.0 - std::abs(x - label) / spec.param);
    case DistributionKind::ChiSquare: {
        // Chi-square with k dof has mean k; shifting by (label - k) puts the mean at label.
        const double k = spec.param;
        const double t = x - (label - k);
        if (t <= 0.0) return 0.0;
        const double half_k = 0.5 * k;
        const double log_pdf = (half_k - 1.0) * std::log(t) - 0.5 * t - std::lgamma(half_k) - half_k * std::log(2.0);
        return std::exp(log_pdf);
    }
    }
    return 0.0;
}

ScoreDistribution target_distribution(const ScoreScale& scale, double label, const DistributionSpec& spec) {
    spec.validate();
    if (!std::isfinite(label) || !scale.contains(label)) {
        std::ostringstream os;
        os << "label " << label << " outside [" << scale.min_score() << ", " << scale.max_score() << "]";
        throw Error(ErrorCode::LabelOutOfRange, os.str());
    }

    const auto& centers = scale.bin_centers();
    std::vector<double> g(centers.size());
    for (std::size_t i = 0; i < centers.size(); ++i) g[i] = unnormalized_density(spec, label, centers[i]);

    const double total = std::accumulate(g.begin(), g.end(), 0.0);
    if (!(total > 0.0) || !std::isfinite(total)) return ScoreDistribution::delta(scale, scale.nearest_bin(label));

    for (double& v : g) v /= total;
    return ScoreDistribution(scale, std::move(g));
}

double kl_divergence(std::span<const double> target, std::span<const double> predicted) {
    if (target.size() != predicted.size()) {
        throw Error(ErrorCode::ScaleMismatch, "target and prediction have different bin counts");
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double p = target[i];
        if (p == 0.0) continue;
        kl += p * (std::log(p) - std::log(std::max(predicted[i], kLogFloor)));
    }
    return std::max(kl, 0.0);
}

double kl_divergence(const ScoreDistribution& target, const ScoreDistribution& predicted) {
    if (!(target.scale() == predicted.scale())) {
        throw Error(ErrorCode::ScaleMismatch, "target and prediction live on different score scales");
    }
    return kl_divergence(std::span<const double>(target.probs()), std::span<const double>(predicted.probs()));
}

std::size_t argmax_bin(std::span<const double> probs) {
    // std::max_element returns the first of equal maxima.
    return static_cast<std::size_t>(std::distance(probs.begin(), std::max_element(probs.begin(), probs.end())));
}

double decode_argmax(const ScoreDistribution& dist) {
    return dist.scale().center(argmax_bin(dist.probs()));
}

}  // namespace usdl
