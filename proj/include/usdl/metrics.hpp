#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace usdl {

/// 1-based fractional ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

/// Spearman's rho as the Pearson correlation of average ranks.
double spearman(std::span<const double> pred, std::span<const double> truth);

/// Correlation magnitude used when clamping |rho| = 1 before atanh.
inline constexpr double kFisherClamp = 1.0 - 1e-9;

/// tanh(mean(atanh(rho))). Values with |rho| >= 1 are clamped to
/// +-kFisherClamp with a warning.
double fisher_z_average(std::span<const double> rhos);

struct CsPoint {
    double alpha;
    double percent;

    friend bool operator==(const CsPoint&, const CsPoint&) = default;
};

/// Percentage of samples whose absolute error is within each alpha.
std::vector<CsPoint> cs_curve(std::span<const double> pred, std::span<const double> truth,
                              std::span<const double> alphas);

/// `count` evenly spaced thresholds from 0 to half of `score_range`.
std::vector<double> default_alphas(double score_range, std::size_t count = 21);

struct EvalReport {
    std::map<std::string, double> per_action_rho;
    double fisher_z_average = 0.0;
    std::vector<CsPoint> cs_curve;
    std::size_t sample_count = 0;
    double mean_loss = 0.0;

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Text layout:
///   usdl-eval-report 1
///   samples <n>
///   mean_loss <x>
///   fisher_z_average <x>
///   rho <action> <x>          (one per action)
///   cs <alpha> <percent>      (one per curve point)
/// Reals are written as C99 hex floats so a reload is exact.
void write_report(std::ostream& os, const EvalReport& report);
EvalReport read_report(std::istream& is);

}  // namespace usdl
