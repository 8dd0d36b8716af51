#include "usdl/nethead.hpp"

#include "train_loop.hpp"
#include "usdl/error.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace usdl {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows * cols) {
        throw Error(ErrorCode::ShapeMismatch, std::to_string(data_.size()) + " values cannot fill a " +
                                                  std::to_string(rows) + "x" + std::to_string(cols) + " matrix");
    }
}

FeatureMatrix::FeatureMatrix(Matrix segments) : m_(std::move(segments)) {
    if (m_.rows() == 0 || m_.cols() == 0) throw Error(ErrorCode::ShapeMismatch, "feature matrix needs N >= 1 and D >= 1");
    for (double v : m_.values())
        if (!std::isfinite(v)) throw Error(ErrorCode::ValidationError, "feature matrix contains a non-finite value");
}

FeatureMatrix::FeatureMatrix(std::size_t num_segments, std::size_t dim, std::vector<double> values)
    : FeatureMatrix(Matrix(num_segments, dim, std::move(values))) {}

std::vector<double> FeatureMatrix::mean_segment() const {
    std::vector<double> mean(dim(), 0.0);
    for (std::size_t n = 0; n < num_segments(); ++n) {
        auto row = segment(n);
        for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += row[d];
    }
    const double inv = 1.0 / static_cast<double>(num_segments());
    for (double& v : mean) v *= inv;
    return mean;
}

namespace {

DenseLayer zero_layer(std::size_t in, std::size_t out) { return DenseLayer{Matrix(in, out), std::vector<double>(out, 0.0)}; }

}  // namespace

HeadParams HeadParams::zeros(const HeadShape& shape) {
    if (shape.input_dim == 0 || shape.hidden1 == 0 || shape.hidden2 == 0 || shape.output_dim == 0) {
        throw Error(ErrorCode::ShapeMismatch, "head dimensions must be positive");
    }
    return HeadParams{zero_layer(shape.input_dim, shape.hidden1), zero_layer(shape.hidden1, shape.hidden2),
                      zero_layer(shape.hidden2, shape.output_dim)};
}

HeadShape HeadParams::shape() const {
    return HeadShape{layer1.in_dim(), layer1.out_dim(), layer2.out_dim(), layer3.out_dim()};
}

std::size_t HeadParams::parameter_count() const {
    std::size_t n = 0;
    for (auto a : arrays()) n += a.size();
    return n;
}

void HeadParams::validate() const {
    const DenseLayer* layers[] = {&layer1, &layer2, &layer3};
    for (const DenseLayer* l : layers) {
        if (l->in_dim() == 0 || l->out_dim() == 0) throw Error(ErrorCode::ShapeMismatch, "empty layer");
        if (l->bias.size() != l->out_dim()) throw Error(ErrorCode::ShapeMismatch, "bias length does not match layer width");
    }
    if (layer1.out_dim() != layer2.in_dim() || layer2.out_dim() != layer3.in_dim()) {
        throw Error(ErrorCode::ShapeMismatch, "layer widths do not chain");
    }
}

std::vector<std::span<double>> HeadParams::arrays() {
    return {layer1.weights.values(), layer1.bias, layer2.weights.values(), layer2.bias, layer3.weights.values(),
            layer3.bias};
}

std::vector<std::span<const double>> HeadParams::arrays() const {
    return {layer1.weights.values(), layer1.bias, layer2.weights.values(), layer2.bias, layer3.weights.values(),
            layer3.bias};
}

HeadParams init_head(const HeadShape& shape, Rng& rng) {
    HeadParams p = HeadParams::zeros(shape);
    for (DenseLayer* l : {&p.layer1, &p.layer2, &p.layer3}) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(l->in_dim()));
        for (double& w : l->weights.values()) w = rng.uniform(-bound, bound);
    }
    return p;
}

std::string to_string(Pooling pooling) {
    return pooling == Pooling::ScoreLevel ? "score" : "feature";
}

Pooling parse_pooling(const std::string& text) {
    if (text == "score") return Pooling::ScoreLevel;
    if (text == "feature") return Pooling::FeatureLevel;
    throw Error(ErrorCode::InvalidConfig, "unknown pooling '" + text + "' (expected score or feature)");
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "learning_rate must be > 0");
    if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidConfig, "epsilon must be > 0");
    if (!(beta1 > 0.0 && beta1 < 1.0)) throw Error(ErrorCode::InvalidConfig, "beta1 must lie in (0, 1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) throw Error(ErrorCode::InvalidConfig, "beta2 must lie in (0, 1)");
    if (epochs < 1) throw Error(ErrorCode::InvalidConfig, "epochs must be positive");
    if (batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch_size must be positive");
    if (hidden1 == 0 || hidden2 == 0) throw Error(ErrorCode::InvalidConfig, "hidden sizes must be positive");
    if (!(dd_weight >= 0.0)) throw Error(ErrorCode::InvalidConfig, "dd_weight must be >= 0");
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace {

void check_input(const FeatureMatrix& features, const HeadParams& params) {
    params.validate();
    if (features.dim() != params.input_dim()) {
        throw Error(ErrorCode::ShapeMismatch, "features have dimension " + std::to_string(features.dim()) +
                                                  " but the head expects " + std::to_string(params.input_dim()));
    }
}

void affine(const DenseLayer& layer, std::span<const double> x, std::vector<double>& y) {
    y.assign(layer.bias.begin(), layer.bias.end());
    const std::size_t out = layer.out_dim();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        auto w = layer.weights.row(i);
        for (std::size_t j = 0; j < out; ++j) y[j] += xi * w[j];
    }
}

void relu(std::vector<double>& v) {
    for (double& x : v) x = x > 0.0 ? x : 0.0;
}

// Activations of one pass through the three layers.
struct Trace {
    std::vector<double> input;
    std::vector<double> hidden1;
    std::vector<double> hidden2;
    std::vector<double> output;
};

void run(const HeadParams& p, std::span<const double> x, Trace& t) {
    t.input.assign(x.begin(), x.end());
    affine(p.layer1, t.input, t.hidden1);
    relu(t.hidden1);
    affine(p.layer2, t.hidden1, t.hidden2);
    relu(t.hidden2);
    affine(p.layer3, t.hidden2, t.output);
}

// Backpropagates d(loss)/d(output) of one pass, accumulating into grad.
void backprop(const HeadParams& p, const Trace& t, std::span<const double> d_out, HeadParams& grad) {
    auto dense_back = [](const DenseLayer& layer, std::span<const double> x, std::span<const double> dy,
                         DenseLayer& g, std::vector<double>* dx) {
        const std::size_t out = layer.out_dim();
        for (std::size_t j = 0; j < out; ++j) g.bias[j] += dy[j];
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double xi = x[i];
            auto gw = g.weights.row(i);
            if (xi != 0.0)
                for (std::size_t j = 0; j < out; ++j) gw[j] += xi * dy[j];
        }
        if (dx) {
            dx->assign(x.size(), 0.0);
            for (std::size_t i = 0; i < x.size(); ++i) {
                auto w = layer.weights.row(i);
                double s = 0.0;
                for (std::size_t j = 0; j < out; ++j) s += w[j] * dy[j];
                (*dx)[i] = s;
            }
        }
    };

    std::vector<double> d_h2, d_h1;
    dense_back(p.layer3, t.hidden2, d_out, grad.layer3, &d_h2);
    for (std::size_t i = 0; i < d_h2.size(); ++i)
        if (!(t.hidden2[i] > 0.0)) d_h2[i] = 0.0;
    dense_back(p.layer2, t.hidden1, d_h2, grad.layer2, &d_h1);
    for (std::size_t i = 0; i < d_h1.size(); ++i)
        if (!(t.hidden1[i] > 0.0)) d_h1[i] = 0.0;
    dense_back(p.layer1, t.input, d_h1, grad.layer1, nullptr);
}

// Forward pass keeping every trace needed for backprop.
struct PooledPass {
    std::vector<Trace> traces;
    std::vector<double> output;
};

PooledPass pooled_forward(const FeatureMatrix& features, const HeadParams& params, Pooling pooling) {
    PooledPass pass;
    if (pooling == Pooling::FeatureLevel) {
        pass.traces.resize(1);
        run(params, features.mean_segment(), pass.traces[0]);
        pass.output = pass.traces[0].output;
        return pass;
    }
    const std::size_t n = features.num_segments();
    pass.traces.resize(n);
    pass.output.assign(params.output_dim(), 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        run(params, features.segment(s), pass.traces[s]);
        for (std::size_t j = 0; j < pass.output.size(); ++j) pass.output[j] += pass.traces[s].output[j];
    }
    for (double& v : pass.output) v /= static_cast<double>(n);
    return pass;
}

HeadParams pooled_backward(const HeadParams& params, const PooledPass& pass, std::span<const double> d_pooled) {
    HeadParams grad = HeadParams::zeros(params.shape());
    if (pass.traces.size() == 1) {
        backprop(params, pass.traces[0], d_pooled, grad);
        return grad;
    }
    std::vector<double> d_seg(d_pooled.begin(), d_pooled.end());
    for (double& v : d_seg) v /= static_cast<double>(pass.traces.size());
    for (const Trace& t : pass.traces) backprop(params, t, d_seg, grad);
    return grad;
}

void require_scale_bins(const HeadParams& params, std::size_t bins) {
    if (params.output_dim() != bins) {
        throw Error(ErrorCode::ShapeMismatch, "head emits " + std::to_string(params.output_dim()) +
                                                  " logits but the score scale has " + std::to_string(bins) + " bins");
    }
}

void require_scalar_head(const HeadParams& params) {
    if (params.output_dim() != 1) throw Error(ErrorCode::ShapeMismatch, "regression head must have a single output");
}

}  // namespace

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.begin(), logits.end());
    if (out.empty()) return out;
    const double top = *std::max_element(out.begin(), out.end());
    double total = 0.0;
    for (double& v : out) {
        v = std::exp(v - top);
        total += v;
    }
    for (double& v : out) v /= total;
    return out;
}

std::vector<double> head_output(const FeatureMatrix& features, const HeadParams& params, Pooling pooling) {
    check_input(features, params);
    return pooled_forward(features, params, pooling).output;
}

ScoreDistribution forward_usdl(const FeatureMatrix& features, const HeadParams& params, Pooling pooling,
                               const ScoreScale& scale) {
    check_input(features, params);
    require_scale_bins(params, scale.num_bins());
    return ScoreDistribution(scale, softmax(pooled_forward(features, params, pooling).output));
}

std::vector<std::vector<double>> segment_distributions(const FeatureMatrix& features, const HeadParams& params) {
    check_input(features, params);
    std::vector<std::vector<double>> rows;
    rows.reserve(features.num_segments());
    Trace t;
    for (std::size_t s = 0; s < features.num_segments(); ++s) {
        run(params, features.segment(s), t);
        rows.push_back(softmax(t.output));
    }
    return rows;
}

double loss_usdl(const ScoreDistribution& target, const FeatureMatrix& features, const HeadParams& params,
                 Pooling pooling) {
    return kl_divergence(target, forward_usdl(features, params, pooling, target.scale()));
}

double forward_regression(const FeatureMatrix& features, const HeadParams& params, Pooling pooling) {
    check_input(features, params);
    require_scalar_head(params);
    return pooled_forward(features, params, pooling).output[0];
}

double loss_regression(double label, const FeatureMatrix& features, const HeadParams& params, Pooling pooling) {
    const double err = forward_regression(features, params, pooling) - label;
    return err * err;
}

HeadGradient backward_usdl(const ScoreDistribution& target, const FeatureMatrix& features, const HeadParams& params,
                           Pooling pooling) {
    check_input(features, params);
    require_scale_bins(params, target.size());
    const PooledPass pass = pooled_forward(features, params, pooling);
    const std::vector<double> q = softmax(pass.output);
    const auto& p = target.probs();

    // With g_i = dL/dq_i the logit gradient is q_j * (g_j - sum_i g_i q_i).
    // Where q_i sits below the log floor its term is constant, so g_i q_i = 0;
    // otherwise g_i q_i = -p_i, which collapses the formula to q - p.
    std::vector<double> gq(q.size());
    double gq_sum = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        gq[i] = (p[i] != 0.0 && q[i] >= kLogFloor) ? -p[i] : 0.0;
        gq_sum += gq[i];
    }
    std::vector<double> d_logits(q.size());
    for (std::size_t j = 0; j < q.size(); ++j) d_logits[j] = gq[j] - q[j] * gq_sum;

    HeadGradient out;
    out.loss = kl_divergence(std::span<const double>(p), std::span<const double>(q));
    out.grad = pooled_backward(params, pass, d_logits);
    return out;
}

HeadGradient backward_regression(double label, const FeatureMatrix& features, const HeadParams& params,
                                 Pooling pooling) {
    check_input(features, params);
    require_scalar_head(params);
    const PooledPass pass = pooled_forward(features, params, pooling);
    const double err = pass.output[0] - label;
    const double d_out[] = {2.0 * err};
    return HeadGradient{err * err, pooled_backward(params, pass, d_out)};
}

// ---------------------------------------------------------------------------
// Adam

AdamState AdamState::for_arrays(std::span<const std::span<const double>> params) {
    AdamState s;
    for (auto a : params) {
        s.first_moment.emplace_back(a.size(), 0.0);
        s.second_moment.emplace_back(a.size(), 0.0);
    }
    return s;
}

AdamState AdamState::for_head(const HeadParams& params) { return for_arrays(params.arrays()); }

void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState& state, const TrainConfig& config) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size() ||
        params.size() != state.second_moment.size()) {
        throw Error(ErrorCode::ShapeMismatch, "parameter, gradient and moment arrays differ in count");
    }
    for (std::size_t a = 0; a < params.size(); ++a) {
        if (params[a].size() != grads[a].size() || params[a].size() != state.first_moment[a].size() ||
            params[a].size() != state.second_moment[a].size()) {
            throw Error(ErrorCode::ShapeMismatch, "parameter array " + std::to_string(a) + " differs in length");
        }
    }

    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double b1 = config.beta1;
    const double b2 = config.beta2;
    const double correction1 = 1.0 - std::pow(b1, t);
    const double correction2 = 1.0 - std::pow(b2, t);

    for (std::size_t a = 0; a < params.size(); ++a) {
        auto& m = state.first_moment[a];
        auto& v = state.second_moment[a];
        for (std::size_t i = 0; i < params[a].size(); ++i) {
            const double g = grads[a][i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            params[a][i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
        }
    }
}

void adam_step(HeadParams& params, const HeadParams& grads, AdamState& state, const TrainConfig& config) {
    if (!(params.shape() == grads.shape())) throw Error(ErrorCode::ShapeMismatch, "gradient shape differs from parameters");
    adam_step(params.arrays(), grads.arrays(), state, config);
}

// ---------------------------------------------------------------------------
// Training

namespace {

template <class Sample>
void check_dataset(std::span<const Sample> dataset) {
    if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "training set is empty");
    const std::size_t dim = dataset.front().features.dim();
    for (const auto& s : dataset)
        if (s.features.dim() != dim) throw Error(ErrorCode::ShapeMismatch, "samples disagree on feature dimension");
}

}  // namespace

TrainResult train_usdl(std::span<const UsdlSample> dataset, const TrainConfig& config) {
    config.validate();
    check_dataset(dataset);
    const ScoreScale& scale = dataset.front().target.scale();
    for (const auto& s : dataset)
        if (!(s.target.scale() == scale)) throw Error(ErrorCode::ScaleMismatch, "targets use different score scales");

    Rng rng(config.rng_seed);
    const HeadShape shape{dataset.front().features.dim(), config.hidden1, config.hidden2, scale.num_bins()};
    TrainResult result{init_head(shape, rng), {}};
    result.loss_history = detail::minibatch_adam(
        result.params, HeadParams::zeros(shape), dataset.size(), config, rng, [&](std::size_t i, HeadParams& acc) {
            const HeadGradient g = backward_usdl(dataset[i].target, dataset[i].features, result.params, config.pooling);
            detail::add_into(acc.arrays(), g.grad.arrays());
            return g.loss;
        });
    return result;
}

TrainResult train_regression(std::span<const RegressionSample> dataset, const TrainConfig& config) {
    config.validate();
    check_dataset(dataset);

    Rng rng(config.rng_seed);
    const HeadShape shape{dataset.front().features.dim(), config.hidden1, config.hidden2, 1};
    TrainResult result{init_head(shape, rng), {}};
    result.loss_history = detail::minibatch_adam(
        result.params, HeadParams::zeros(shape), dataset.size(), config, rng, [&](std::size_t i, HeadParams& acc) {
            const HeadGradient g =
                backward_regression(dataset[i].label, dataset[i].features, result.params, config.pooling);
            detail::add_into(acc.arrays(), g.grad.arrays());
            return g.loss;
        });
    return result;
}

}  // namespace usdl
