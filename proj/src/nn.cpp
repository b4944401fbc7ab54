#include "vecaoi/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <stdexcept>
#include <string>

#include "vecaoi/config.hpp"

namespace vecaoi {

ParamVector ParamVector::zeros(std::span<const int> widths) {
    if (widths.size() < 2) throw ConfigError("network needs at least an input and an output width");
    std::vector<DenseLayer> layers;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        if (widths[i] < 1 || widths[i + 1] < 1) throw ConfigError("network widths must be >= 1");
        layers.push_back({Matrix::Zero(widths[i + 1], widths[i]), Vector::Zero(widths[i + 1])});
    }
    return ParamVector(std::move(layers));
}

ParamVector ParamVector::random(std::span<const int> widths, RngStream& rng) {
    auto p = zeros(widths);
    for (auto& layer : p.layers_) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = rng.uniform(-bound, bound);
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = rng.uniform(-bound, bound);
    }
    return p;
}

std::size_t ParamVector::size() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

std::vector<int> ParamVector::widths() const {
    std::vector<int> w;
    if (layers_.empty()) return w;
    w.push_back(input_size());
    for (const auto& l : layers_) w.push_back(static_cast<int>(l.weight.rows()));
    return w;
}

bool ParamVector::same_shape(const ParamVector& other) const { return widths() == other.widths(); }

std::vector<double> ParamVector::flatten() const {
    std::vector<double> flat;
    flat.reserve(size());
    for (const auto& l : layers_) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) flat.push_back(l.weight(r, c));
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) flat.push_back(l.bias(r));
    }
    return flat;
}

void ParamVector::unflatten(std::span<const double> flat) {
    if (flat.size() != size())
        throw std::invalid_argument("unflatten: expected " + std::to_string(size()) + " values, got " +
                                    std::to_string(flat.size()));
    std::size_t k = 0;
    for (auto& l : layers_) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat[k++];
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = flat[k++];
    }
}

ParamVector ParamVector::zeros_like() const {
    auto p = *this;
    p.set_zero();
    return p;
}

void ParamVector::set_zero() {
    for (auto& l : layers_) {
        l.weight.setZero();
        l.bias.setZero();
    }
}

void ParamVector::add_scaled(const ParamVector& other, double scale) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        layers_[i].weight.noalias() += scale * other.layers_[i].weight;
        layers_[i].bias.noalias() += scale * other.layers_[i].bias;
    }
}

void ParamVector::scale(double factor) {
    for (auto& l : layers_) {
        l.weight *= factor;
        l.bias *= factor;
    }
}

double ParamVector::max_abs() const {
    double m = 0.0;
    for (const auto& l : layers_) {
        if (l.weight.size()) m = std::max(m, l.weight.cwiseAbs().maxCoeff());
        if (l.bias.size()) m = std::max(m, l.bias.cwiseAbs().maxCoeff());
    }
    return m;
}

Mlp make_mlp(std::span<const int> widths, Activation hidden, RngStream& rng) {
    return Mlp{ParamVector::random(widths, rng), hidden};
}

namespace {

void activate(Matrix& z, Activation act) {
    if (act == Activation::relu)
        z = z.cwiseMax(0.0);
    else
        z = z.array().tanh().matrix();
}

// Multiplies g by the activation derivative evaluated at pre-activation z.
void activation_backward(Matrix& g, const Matrix& z, Activation act) {
    if (act == Activation::relu) {
        g = (z.array() > 0.0).select(g, 0.0);
    } else {
        g.array() *= 1.0 - z.array().tanh().square();
    }
}

}  // namespace

Matrix mlp_forward(const Mlp& net, const Matrix& input, ForwardCache* cache) {
    const auto& layers = net.params.layers();
    if (input.rows() != net.params.input_size())
        throw ConfigError("mlp_forward: input has " + std::to_string(input.rows()) + " rows, network expects " +
                          std::to_string(net.params.input_size()));
    if (cache) {
        cache->inputs.resize(layers.size());
        cache->pre.resize(layers.size());
    }
    Matrix x = input;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        Matrix z = layers[l].weight * x;
        z.colwise() += layers[l].bias;
        if (cache) {
            cache->inputs[l] = std::move(x);
            cache->pre[l] = z;
        }
        if (l + 1 < layers.size()) activate(z, net.hidden);
        x = std::move(z);
    }
    return x;
}

Gradients mlp_backward(const Mlp& net, const ForwardCache& cache, const Matrix& output_gradient) {
    const auto& layers = net.params.layers();
    if (cache.inputs.size() != layers.size() || cache.pre.back().cols() != output_gradient.cols() ||
        output_gradient.rows() != net.params.output_size())
        throw std::logic_error("mlp_backward: cache does not match this network or gradient");
    Gradients out{net.params.zeros_like(), {}};
    Matrix g = output_gradient;
    for (std::size_t i = layers.size(); i-- > 0;) {
        if (i + 1 < layers.size()) activation_backward(g, cache.pre[i], net.hidden);
        auto& gl = out.params.layer(i);
        gl.weight.noalias() = g * cache.inputs[i].transpose();
        gl.bias = g.rowwise().sum();
        g = layers[i].weight.transpose() * g;
    }
    out.input = std::move(g);
    return out;
}

AdamState AdamState::for_params(const ParamVector& params, double lr) {
    AdamState s;
    s.m = params.zeros_like();
    s.v = params.zeros_like();
    s.lr = lr;
    return s;
}

void adam_step(ParamVector& params, const ParamVector& grads, AdamState& state) {
    if (!params.same_shape(grads) || !params.same_shape(state.m))
        throw std::invalid_argument("adam_step: shape mismatch");
    ++state.step;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    const double step_size = state.lr / c1;
    const double sqrt_c2 = std::sqrt(c2);
    auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseAbs2();
        p.array() -= step_size * m.array() / (v.array().sqrt() / sqrt_c2 + state.eps);
    };
    for (std::size_t i = 0; i < params.layer_count(); ++i) {
        update(params.layer(i).weight, grads.layer(i).weight, state.m.layer(i).weight, state.v.layer(i).weight);
        update(params.layer(i).bias, grads.layer(i).bias, state.m.layer(i).bias, state.v.layer(i).bias);
    }
}

double adam_step(double param, double grad, ScalarAdam& state) {
    ++state.step;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad;
    const double m_hat = state.m / (1.0 - std::pow(state.beta1, static_cast<double>(state.step)));
    const double v_hat = state.v / (1.0 - std::pow(state.beta2, static_cast<double>(state.step)));
    return param - state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
}

void soft_update(ParamVector& target, const ParamVector& source, double tau) {
    if (!target.same_shape(source)) throw std::invalid_argument("soft_update: shape mismatch");
    for (std::size_t i = 0; i < target.layer_count(); ++i) {
        auto& t = target.layer(i);
        const auto& s = source.layer(i);
        t.weight = tau * s.weight + (1.0 - tau) * t.weight;
        t.bias = tau * s.bias + (1.0 - tau) * t.bias;
    }
}

double log_one_minus_tanh_sq(double x) {
    // 1 - tanh^2 = 4 / (e^x + e^-x)^2
    const double a = std::abs(x);
    return 2.0 * (std::numbers::ln2 - a - std::log1p(std::exp(-2.0 * a)));
}

SquashedSample squash_gaussian(double mean, double log_std, double eps, double p_max) {
    const double ls = std::clamp(log_std, kLogStdMin, kLogStdMax);
    SquashedSample s;
    s.raw = mean + std::exp(ls) * eps;
    s.squashed = std::tanh(s.raw);
    s.action = std::clamp((s.squashed + 1.0) * 0.5 * p_max, 0.0, p_max);
    const double log_normal = -0.5 * eps * eps - ls - 0.5 * std::log(2.0 * std::numbers::pi);
    s.log_prob = log_normal - log_one_minus_tanh_sq(s.raw) - std::log(0.5 * p_max);
    return s;
}

SquashedSample sample_squashed_gaussian(double mean, double log_std, RngStream& rng, double p_max) {
    return squash_gaussian(mean, log_std, rng.normal(), p_max);
}

double deterministic_action(double mean, double p_max) {
    return std::clamp((std::tanh(mean) + 1.0) * 0.5 * p_max, 0.0, p_max);
}

void save_params(std::ostream& out, const ParamVector& params) {
    out << "vecaoi-params 1\n" << "layers " << params.layer_count() << '\n';
    for (const auto& l : params.layers()) out << l.weight.rows() << ' ' << l.weight.cols() << '\n';
    out << std::setprecision(17);
    for (double v : params.flatten()) out << v << '\n';
}

ParamVector load_params(std::istream& in) {
    std::string magic, word;
    int version = 0;
    std::size_t n = 0;
    if (!(in >> magic >> version) || magic != "vecaoi-params" || version != 1)
        throw IoError("checkpoint: bad header");
    if (!(in >> word >> n) || word != "layers" || n == 0) throw IoError("checkpoint: bad layer count");
    std::vector<int> widths;
    for (std::size_t i = 0; i < n; ++i) {
        int rows = 0, cols = 0;
        if (!(in >> rows >> cols) || rows < 1 || cols < 1) throw IoError("checkpoint: bad layer shape");
        if (i == 0)
            widths.push_back(cols);
        else if (cols != widths.back())
            throw IoError("checkpoint: inconsistent layer shapes");
        widths.push_back(rows);
    }
    auto p = ParamVector::zeros(widths);
    std::vector<double> flat(p.size());
    for (auto& v : flat)
        if (!(in >> v)) throw IoError("checkpoint: truncated parameter data");
    p.unflatten(flat);
    return p;
}

void save_params(const std::filesystem::path& path, const ParamVector& params) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
    save_params(out, params);
}

ParamVector load_params(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read checkpoint '" + path.string() + "'");
    return load_params(in);
}

}  // namespace vecaoi
