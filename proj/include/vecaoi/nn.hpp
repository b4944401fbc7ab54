#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <span>
#include <vector>

#include "vecaoi/rng.hpp"

namespace vecaoi {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { relu, tanh };

struct DenseLayer {
    Matrix weight;  // out x in
    Vector bias;    // out
};

// Ordered layer parameters of one network. Also used for gradients and for
// Adam moments, which share the shape of the parameters they belong to.
class ParamVector {
public:
    ParamVector() = default;
    explicit ParamVector(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {}

    // Zero-initialised layers for widths {in, h1, ..., out}.
    static ParamVector zeros(std::span<const int> widths);
    // Uniform(+-1/sqrt(fan_in)) initialisation, the common default for MLPs.
    static ParamVector random(std::span<const int> widths, RngStream& rng);

    std::size_t layer_count() const { return layers_.size(); }
    const DenseLayer& layer(std::size_t i) const { return layers_[i]; }
    DenseLayer& layer(std::size_t i) { return layers_[i]; }
    const std::vector<DenseLayer>& layers() const { return layers_; }

    std::size_t size() const;
    int input_size() const { return static_cast<int>(layers_.front().weight.cols()); }
    int output_size() const { return static_cast<int>(layers_.back().weight.rows()); }
    std::vector<int> widths() const;
    bool same_shape(const ParamVector& other) const;

    // Flat order: for each layer, weight (row-major) then bias.
    std::vector<double> flatten() const;
    void unflatten(std::span<const double> flat);

    ParamVector zeros_like() const;
    void set_zero();
    // this += scale * other
    void add_scaled(const ParamVector& other, double scale);
    void scale(double factor);
    double max_abs() const;

private:
    std::vector<DenseLayer> layers_;
};

struct Mlp {
    ParamVector params;
    Activation hidden = Activation::relu;
};

Mlp make_mlp(std::span<const int> widths, Activation hidden, RngStream& rng);

// Per-layer inputs and pre-activations of one forward pass.
struct ForwardCache {
    std::vector<Matrix> inputs;
    std::vector<Matrix> pre;
};

// Columns of `input` are samples. Hidden layers apply `hidden`, the last layer
// is linear.
Matrix mlp_forward(const Mlp& net, const Matrix& input, ForwardCache* cache = nullptr);

struct Gradients {
    ParamVector params;
    Matrix input;
};

Gradients mlp_backward(const Mlp& net, const ForwardCache& cache, const Matrix& output_gradient);

struct AdamState {
    ParamVector m;
    ParamVector v;
    long step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_params(const ParamVector& params, double lr);
};

void adam_step(ParamVector& params, const ParamVector& grads, AdamState& state);

// Scalar Adam, used for the log-temperature.
struct ScalarAdam {
    double m = 0.0;
    double v = 0.0;
    long step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

double adam_step(double param, double grad, ScalarAdam& state);

// target <- tau * source + (1 - tau) * target
void soft_update(ParamVector& target, const ParamVector& source, double tau);

constexpr double kLogStdMin = -20.0;
constexpr double kLogStdMax = 2.0;

struct SquashedSample {
    double raw = 0.0;       // pre-tanh Gaussian draw
    double squashed = 0.0;  // tanh(raw)
    double action = 0.0;    // in [0, p_max]
    double log_prob = 0.0;  // density of `action`
};

// raw = mean + exp(log_std) * eps; action = (tanh(raw) + 1) / 2 * p_max.
// log_std is clamped to [kLogStdMin, kLogStdMax].
SquashedSample squash_gaussian(double mean, double log_std, double eps, double p_max);
SquashedSample sample_squashed_gaussian(double mean, double log_std, RngStream& rng, double p_max);
double deterministic_action(double mean, double p_max);

// log(1 - tanh(x)^2), stable for large |x|.
double log_one_minus_tanh_sq(double x);

// Checkpoint format (text):
//   vecaoi-params 1
//   layers <n>
//   <out> <in>         one line per layer
//   <values...>        flattened order, one per line, %.17g
void save_params(std::ostream& out, const ParamVector& params);
ParamVector load_params(std::istream& in);
void save_params(const std::filesystem::path& path, const ParamVector& params);
ParamVector load_params(const std::filesystem::path& path);

}  // namespace vecaoi
