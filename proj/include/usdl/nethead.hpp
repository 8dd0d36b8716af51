#pragma once

#include "usdl/distgen.hpp"
#include "usdl/matrix.hpp"
#include "usdl/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace usdl {

/// N segment feature vectors of dimension D (one row per segment).
class FeatureMatrix {
public:
    explicit FeatureMatrix(Matrix segments);
    FeatureMatrix(std::size_t num_segments, std::size_t dim, std::vector<double> values);

    std::size_t num_segments() const noexcept { return m_.rows(); }
    std::size_t dim() const noexcept { return m_.cols(); }
    std::span<const double> segment(std::size_t n) const { return m_.row(n); }
    const Matrix& matrix() const noexcept { return m_; }

    /// Column-wise mean over segments.
    std::vector<double> mean_segment() const;

    friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

private:
    Matrix m_;
};

/// Affine map x -> x * weights + bias, weights stored (in x out).
struct DenseLayer {
    Matrix weights;
    std::vector<double> bias;

    std::size_t in_dim() const noexcept { return weights.rows(); }
    std::size_t out_dim() const noexcept { return weights.cols(); }

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct HeadShape {
    std::size_t input_dim = 0;
    std::size_t hidden1 = 256;
    std::size_t hidden2 = 128;
    std::size_t output_dim = 0;

    friend bool operator==(const HeadShape&, const HeadShape&) = default;
};

/// Three dense layers with ReLU after the first two. The output is either m
/// logits (distribution head) or a single value (regression / DD head).
struct HeadParams {
    DenseLayer layer1;
    DenseLayer layer2;
    DenseLayer layer3;

    static HeadParams zeros(const HeadShape& shape);

    HeadShape shape() const;
    std::size_t input_dim() const noexcept { return layer1.in_dim(); }
    std::size_t output_dim() const noexcept { return layer3.out_dim(); }
    std::size_t parameter_count() const;

    /// Throws ShapeMismatch unless layer sizes chain and biases match.
    void validate() const;

    /// Weight and bias arrays in a fixed order (w1, b1, w2, b2, w3, b3).
    std::vector<std::span<double>> arrays();
    std::vector<std::span<const double>> arrays() const;

    friend bool operator==(const HeadParams&, const HeadParams&) = default;
};

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
HeadParams init_head(const HeadShape& shape, Rng& rng);

enum class Pooling { ScoreLevel, FeatureLevel };

std::string to_string(Pooling pooling);
Pooling parse_pooling(const std::string& text);

struct TrainConfig {
    Pooling pooling = Pooling::ScoreLevel;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int epochs = 100;
    int batch_size = 8;
    std::uint64_t rng_seed = 0;
    std::size_t hidden1 = 256;
    std::size_t hidden2 = 128;
    /// Weight of the squared-error DD term in multi-path training.
    double dd_weight = 1.0;

    void validate() const;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Forward passes ------------------------------------------------------------

std::vector<double> softmax(std::span<const double> logits);

/// Pooled head output before any softmax.
std::vector<double> head_output(const FeatureMatrix& features, const HeadParams& params, Pooling pooling);

ScoreDistribution forward_usdl(const FeatureMatrix& features, const HeadParams& params, Pooling pooling,
                               const ScoreScale& scale);

/// softmax of the head applied to each segment alone, one row per segment.
std::vector<std::vector<double>> segment_distributions(const FeatureMatrix& features, const HeadParams& params);

double loss_usdl(const ScoreDistribution& target, const FeatureMatrix& features, const HeadParams& params,
                 Pooling pooling);

double forward_regression(const FeatureMatrix& features, const HeadParams& params, Pooling pooling);
double loss_regression(double label, const FeatureMatrix& features, const HeadParams& params, Pooling pooling);

// Gradients -------------------------------------------------------------------

struct HeadGradient {
    double loss = 0.0;
    HeadParams grad;
};

HeadGradient backward_usdl(const ScoreDistribution& target, const FeatureMatrix& features, const HeadParams& params,
                           Pooling pooling);

HeadGradient backward_regression(double label, const FeatureMatrix& features, const HeadParams& params,
                                 Pooling pooling);

// Adam ------------------------------------------------------------------------

struct AdamState {
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;
    std::uint64_t step_count = 0;

    static AdamState for_arrays(std::span<const std::span<const double>> params);
    static AdamState for_head(const HeadParams& params);
};

/// One bias-corrected Adam update, in place.
void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState& state, const TrainConfig& config);

void adam_step(HeadParams& params, const HeadParams& grads, AdamState& state, const TrainConfig& config);

// Training --------------------------------------------------------------------

struct UsdlSample {
    FeatureMatrix features;
    ScoreDistribution target;
};

struct RegressionSample {
    FeatureMatrix features;
    double label;
};

struct TrainResult {
    HeadParams params;
    /// Mean per-sample loss of each epoch, measured before each minibatch update.
    std::vector<double> loss_history;
};

TrainResult train_usdl(std::span<const UsdlSample> dataset, const TrainConfig& config);
TrainResult train_regression(std::span<const RegressionSample> dataset, const TrainConfig& config);

}  // namespace usdl
