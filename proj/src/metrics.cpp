#include "usdl/metrics.hpp"

#include "usdl/error.hpp"
#include "usdl/textio.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace usdl {

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && values[order[j]] == values[order[i]]) ++j;
        // Positions i..j-1 (0-based) share rank mean((i+1)..j).
        const double rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
        i = j;
    }
    return ranks;
}

double spearman(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size()) {
        throw Error(ErrorCode::LengthMismatch, std::to_string(pred.size()) + " predictions vs " +
                                                   std::to_string(truth.size()) + " ground-truth values");
    }
    if (pred.size() < 2) throw Error(ErrorCode::LengthMismatch, "spearman needs at least two samples");

    const std::vector<double> ra = average_ranks(pred);
    const std::vector<double> rb = average_ranks(truth);
    const double n = static_cast<double>(ra.size());
    // Average ranks always have mean (n + 1) / 2.
    const double mean = 0.5 * (n + 1.0);
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        const double da = ra[i] - mean;
        const double db = rb[i] - mean;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if (va == 0.0 || vb == 0.0) throw Error(ErrorCode::DegenerateSeries, "a constant series has no ranking");
    return std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
}

double fisher_z_average(std::span<const double> rhos) {
    if (rhos.empty()) throw Error(ErrorCode::LengthMismatch, "no correlations to average");
    double z = 0.0;
    for (double r : rhos) {
        if (!std::isfinite(r) || std::abs(r) > 1.0) {
            std::ostringstream os;
            os << "correlation " << r << " is outside [-1, 1]";
            throw Error(ErrorCode::OutOfRange, os.str());
        }
        if (std::abs(r) >= kFisherClamp) {
            std::ostringstream os;
            os << "RhoOutOfRange: correlation " << r << " clamped to +-(1 - 1e-9) for Fisher-z averaging";
            warn(os.str());
            r = std::copysign(kFisherClamp, r);
        }
        z += std::atanh(r);
    }
    const double avg = std::tanh(z / static_cast<double>(rhos.size()));
    // Keep the mean inside the input range despite rounding in atanh/tanh.
    const auto [lo, hi] = std::minmax_element(rhos.begin(), rhos.end());
    return std::clamp(avg, std::max(*lo, -1.0), std::min(*hi, 1.0));
}

std::vector<CsPoint> cs_curve(std::span<const double> pred, std::span<const double> truth,
                              std::span<const double> alphas) {
    if (pred.size() != truth.size()) throw Error(ErrorCode::LengthMismatch, "prediction and truth lengths differ");
    if (pred.empty()) throw Error(ErrorCode::LengthMismatch, "no samples for the CS curve");
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (!(alphas[i] >= 0.0)) throw Error(ErrorCode::OutOfRange, "CS thresholds must be nonnegative");
        if (i > 0 && alphas[i] < alphas[i - 1]) throw Error(ErrorCode::OutOfRange, "CS thresholds must be nondecreasing");
    }

    std::vector<double> errors(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) errors[i] = std::abs(pred[i] - truth[i]);
    std::sort(errors.begin(), errors.end());

    std::vector<CsPoint> curve;
    curve.reserve(alphas.size());
    for (double a : alphas) {
        const auto within = std::upper_bound(errors.begin(), errors.end(), a) - errors.begin();
        curve.push_back({a, 100.0 * static_cast<double>(within) / static_cast<double>(errors.size())});
    }
    return curve;
}

std::vector<double> default_alphas(double score_range, std::size_t count) {
    if (count < 2) throw Error(ErrorCode::OutOfRange, "need at least two CS thresholds");
    std::vector<double> out(count);
    const double top = 0.5 * score_range;
    for (std::size_t i = 0; i < count; ++i) out[i] = top * static_cast<double>(i) / static_cast<double>(count - 1);
    return out;
}

void write_report(std::ostream& os, const EvalReport& report) {
    os << "usdl-eval-report 1\n";
    os << "samples " << report.sample_count << '\n';
    os << "mean_loss " << format_exact(report.mean_loss) << '\n';
    os << "fisher_z_average " << format_exact(report.fisher_z_average) << '\n';
    for (const auto& [action, rho] : report.per_action_rho) os << "rho " << action << ' ' << format_exact(rho) << '\n';
    for (const auto& p : report.cs_curve) os << "cs " << format_exact(p.alpha) << ' ' << format_exact(p.percent) << '\n';
}

EvalReport read_report(std::istream& is) {
    EvalReport r;
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        auto fail = [&](const std::string& why) {
            throw Error(ErrorCode::ParseError, "report line " + std::to_string(line_no) + ": " + why);
        };
        auto real = [&]() {
            std::string tok;
            if (!(ls >> tok)) fail("missing value");
            return parse_real(tok, "report line " + std::to_string(line_no));
        };
        if (!header) {
            std::string version;
            if (key != "usdl-eval-report" || !(ls >> version) || version != "1") fail("not a usdl-eval-report v1 file");
            header = true;
        } else if (key == "samples") {
            if (!(ls >> r.sample_count)) fail("bad sample count");
        } else if (key == "mean_loss") {
            r.mean_loss = real();
        } else if (key == "fisher_z_average") {
            r.fisher_z_average = real();
        } else if (key == "rho") {
            std::string action;
            if (!(ls >> action)) fail("missing action name");
            r.per_action_rho[action] = real();
        } else if (key == "cs") {
            const double a = real();
            r.cs_curve.push_back({a, real()});
        } else {
            fail("unknown key '" + key + "'");
        }
    }
    if (!header) throw Error(ErrorCode::ParseError, "empty report");
    return r;
}

}  // namespace usdl
