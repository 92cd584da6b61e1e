#include "poserec/nn.hpp"

#include "poserec/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace poserec::nn {

namespace {

double sigmoid(double x)
{
    if (x >= 0)
        return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double leaky(double x) { return x > 0 ? x : kLeakySlope * x; }
double leaky_slope(double x) { return x > 0 ? 1.0 : kLeakySlope; }

} // namespace

std::size_t Mlp::parameter_count() const noexcept
{
    std::size_t n = 0;
    for (const DenseLayer& l : layers)
        n += l.weights.size() + l.bias.size();
    return n;
}

std::vector<std::span<double>> Mlp::tensors()
{
    std::vector<std::span<double>> out;
    for (DenseLayer& l : layers) {
        out.emplace_back(l.weights);
        out.emplace_back(l.bias);
    }
    return out;
}

std::vector<std::span<const double>> Mlp::tensors() const
{
    std::vector<std::span<const double>> out;
    for (const DenseLayer& l : layers) {
        out.emplace_back(l.weights);
        out.emplace_back(l.bias);
    }
    return out;
}

Mlp make_mlp(std::span<const int> widths, Activation output, std::mt19937_64& rng)
{
    if (widths.size() < 2)
        throw Error(ErrorKind::InvalidArgument, "an MLP needs at least input and output widths");
    Mlp net;
    net.output = output;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        const int in = widths[i];
        const int out = widths[i + 1];
        if (in < 1 || out < 1)
            throw Error(ErrorKind::InvalidArgument, "layer widths must be positive");
        DenseLayer layer{in, out, std::vector<double>(static_cast<std::size_t>(in) * out), std::vector<double>(out, 0.0)};
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        // Raw engine bits rather than uniform_real_distribution, whose output
        // is implementation-defined.
        for (double& w : layer.weights)
            w = bound * (2.0 * std::ldexp(static_cast<double>(rng() >> 11), -53) - 1.0);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

Gradients Gradients::zeros_like(const Mlp& net)
{
    Gradients g;
    for (const auto& t : net.tensors())
        g.tensors.emplace_back(t.size(), 0.0);
    return g;
}

void Gradients::scale(double factor)
{
    for (auto& t : tensors)
        for (double& x : t)
            x *= factor;
}

std::vector<double> forward(const Mlp& net, std::span<const double> x, ForwardCache* cache)
{
    if (net.layers.empty() || x.size() != static_cast<std::size_t>(net.input_size()))
        throw Error(ErrorKind::DimensionMismatch, "network expects " + std::to_string(net.input_size()) +
                                                      " inputs, got " + std::to_string(x.size()));
    if (cache) {
        cache->inputs.clear();
        cache->preactivations.clear();
    }

    std::vector<double> act(x.begin(), x.end());
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const DenseLayer& layer = net.layers[li];
        std::vector<double> pre(layer.bias);
        for (int o = 0; o < layer.out; ++o) {
            const double* w = &layer.weights[static_cast<std::size_t>(o) * layer.in];
            double acc = 0;
            for (int i = 0; i < layer.in; ++i)
                acc += w[i] * act[i];
            pre[o] += acc;
        }

        const bool last = li + 1 == net.layers.size();
        std::vector<double> next(pre.size());
        for (std::size_t o = 0; o < pre.size(); ++o) {
            if (!last)
                next[o] = leaky(pre[o]);
            else if (net.output == Activation::Tanh)
                next[o] = std::tanh(pre[o]);
            else
                next[o] = sigmoid(pre[o]);
        }

        if (cache) {
            cache->inputs.push_back(std::move(act));
            cache->preactivations.push_back(std::move(pre));
        }
        act = std::move(next);
    }
    if (cache)
        cache->output = act;
    return act;
}

std::vector<double> backward(const Mlp& net, const ForwardCache& cache, std::span<const double> upstream,
                             Gradients& grads)
{
    if (cache.inputs.size() != net.layers.size() || upstream.size() != cache.output.size())
        throw Error(ErrorKind::DimensionMismatch, "backward pass does not match the cached forward pass");

    // delta = d(loss)/d(preactivation) of the current layer
    std::vector<double> delta(upstream.size());
    for (std::size_t o = 0; o < delta.size(); ++o) {
        const double y = cache.output[o];
        const double local = net.output == Activation::Tanh ? 1.0 - y * y : y * (1.0 - y);
        delta[o] = upstream[o] * local;
    }

    for (std::size_t li = net.layers.size(); li-- > 0;) {
        const DenseLayer& layer = net.layers[li];
        const std::vector<double>& input = cache.inputs[li];
        std::vector<double>& dw = grads.tensors[2 * li];
        std::vector<double>& db = grads.tensors[2 * li + 1];

        std::vector<double> dx(static_cast<std::size_t>(layer.in), 0.0);
        for (int o = 0; o < layer.out; ++o) {
            const double d = delta[o];
            db[o] += d;
            const double* w = &layer.weights[static_cast<std::size_t>(o) * layer.in];
            double* gw = &dw[static_cast<std::size_t>(o) * layer.in];
            for (int i = 0; i < layer.in; ++i) {
                gw[i] += d * input[i];
                dx[i] += w[i] * d;
            }
        }

        if (li > 0) {
            const std::vector<double>& pre = cache.preactivations[li - 1];
            for (std::size_t i = 0; i < dx.size(); ++i)
                dx[i] *= leaky_slope(pre[i]);
        }
        delta = std::move(dx);
    }
    return delta;
}

BceResult bce_loss(std::span<const double> predictions, std::span<const double> labels)
{
    if (predictions.size() != labels.size() || predictions.empty())
        throw Error(ErrorKind::LengthMismatch, std::to_string(predictions.size()) + " predictions vs " +
                                                   std::to_string(labels.size()) + " labels");
    const auto n = static_cast<double>(predictions.size());
    BceResult result{0.0, std::vector<double>(predictions.size())};
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double p = std::clamp(predictions[i], kBceClamp, 1.0 - kBceClamp);
        const double y = labels[i];
        result.loss -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
        result.gradient[i] = (p - y) / (p * (1.0 - p)) / n;
    }
    result.loss /= n;
    return result;
}

AdamState AdamState::for_model(const Mlp& net)
{
    AdamState s;
    for (const auto& t : net.tensors()) {
        s.m.emplace_back(t.size(), 0.0);
        s.v.emplace_back(t.size(), 0.0);
    }
    return s;
}

void adam_update(std::span<double> theta, std::span<const double> grad, std::span<double> m, std::span<double> v,
                 std::int64_t t, const AdamConfig& config)
{
    if (grad.size() != theta.size() || m.size() != theta.size() || v.size() != theta.size())
        throw Error(ErrorKind::ShapeMismatch, "Adam tensors differ in size");
    if (t < 1)
        throw Error(ErrorKind::InvalidArgument, "Adam step counter must be at least 1");

    const double bias1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
    const double bias2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double g = grad[i];
        m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
        v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
        const double m_hat = m[i] / bias1;
        const double v_hat = v[i] / bias2;
        theta[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
}

void adam_step(Mlp& net, const Gradients& grads, AdamState& state, const AdamConfig& config)
{
    auto params = net.tensors();
    if (grads.tensors.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size())
        throw Error(ErrorKind::ShapeMismatch, "gradient/state tensor count does not match the network");
    ++state.t;
    for (std::size_t k = 0; k < params.size(); ++k)
        adam_update(params[k], grads.tensors[k], state.m[k], state.v[k], state.t, config);
}

} // namespace poserec::nn
