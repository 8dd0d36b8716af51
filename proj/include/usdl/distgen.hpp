#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace usdl {

/// Uniformly discretized, bounded score axis. Bin i sits at
/// min + i * (max - min) / (num_bins - 1); the last center is exactly max.
class ScoreScale {
public:
    ScoreScale(double min_score, double max_score, std::size_t num_bins);

    double min_score() const noexcept { return min_; }
    double max_score() const noexcept { return max_; }
    std::size_t num_bins() const noexcept { return centers_.size(); }
    double bin_width() const noexcept { return (max_ - min_) / static_cast<double>(centers_.size() - 1); }
    const std::vector<double>& bin_centers() const noexcept { return centers_; }
    double center(std::size_t i) const { return centers_.at(i); }

    /// Index of the bin center closest to `value`; lowest index on exact ties.
    std::size_t nearest_bin(double value) const;

    bool contains(double value) const noexcept { return value >= min_ && value <= max_; }

    friend bool operator==(const ScoreScale& a, const ScoreScale& b) noexcept {
        return a.min_ == b.min_ && a.max_ == b.max_ && a.centers_.size() == b.centers_.size();
    }

private:
    double min_;
    double max_;
    std::vector<double> centers_;
};

ScoreScale make_scale(double min_score, double max_score, std::size_t num_bins);

/// Probability vector over a ScoreScale. Construction checks nonnegativity
/// and unit mass (1e-9).
class ScoreDistribution {
public:
    ScoreDistribution(ScoreScale scale, std::vector<double> probs);

    static ScoreDistribution delta(const ScoreScale& scale, std::size_t bin);
    static ScoreDistribution uniform(const ScoreScale& scale);

    const ScoreScale& scale() const noexcept { return scale_; }
    const std::vector<double>& probs() const noexcept { return probs_; }
    double operator[](std::size_t i) const { return probs_.at(i); }
    std::size_t size() const noexcept { return probs_.size(); }

private:
    ScoreScale scale_;
    std::vector<double> probs_;
};

enum class DistributionKind { Gaussian, Triangle, ChiSquare };

std::string to_string(DistributionKind kind);
DistributionKind parse_distribution_kind(const std::string& text);

/// Soft-label shape. `param` is sigma (Gaussian), half width (Triangle) or
/// degrees of freedom (ChiSquare), always in score units of the target scale.
struct DistributionSpec {
    DistributionKind kind = DistributionKind::Gaussian;
    double param = 5.0;

    static DistributionSpec gaussian(double sigma);
    static DistributionSpec triangle(double half_width);
    static DistributionSpec chi_square(double dof);

    void validate() const;

    friend bool operator==(const DistributionSpec&, const DistributionSpec&) = default;
};

/// Density evaluated on the real line before truncation; unnormalized.
double unnormalized_density(const DistributionSpec& spec, double label, double x);

/// Discretized soft label centered on `label`: the density is evaluated at
/// every bin center inside the scale and renormalized. If every value
/// underflows to zero the result is a delta at the nearest bin.
ScoreDistribution target_distribution(const ScoreScale& scale, double label, const DistributionSpec& spec);

inline constexpr double kLogFloor = 1e-12;

/// KL(target || predicted). Zero-probability target terms contribute 0;
/// predicted probabilities are floored at kLogFloor inside the log.
double kl_divergence(const ScoreDistribution& target, const ScoreDistribution& predicted);

/// Same quantity on raw probability vectors of equal length.
double kl_divergence(std::span<const double> target, std::span<const double> predicted);

/// Index of the largest probability, lowest index on ties.
std::size_t argmax_bin(std::span<const double> probs);

double decode_argmax(const ScoreDistribution& dist);

}  // namespace usdl
