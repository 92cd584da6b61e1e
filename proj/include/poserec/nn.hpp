#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace poserec::nn {

inline constexpr double kLeakySlope = 0.2;
inline constexpr double kBceClamp = 1e-7;

enum class Activation { Tanh, Sigmoid };

/// Fully-connected layer, weights row-major (out x in).
struct DenseLayer {
    int in = 0;
    int out = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Multilayer perceptron: leaky-ReLU on hidden layers, `output` on the last.
struct Mlp {
    std::vector<DenseLayer> layers;
    Activation output = Activation::Tanh;

    int input_size() const noexcept { return layers.empty() ? 0 : layers.front().in; }
    int output_size() const noexcept { return layers.empty() ? 0 : layers.back().out; }
    std::size_t parameter_count() const noexcept;

    /// Parameter tensors in a fixed order: W0, b0, W1, b1, ...
    std::vector<std::span<double>> tensors();
    std::vector<std::span<const double>> tensors() const;

    friend bool operator==(const Mlp&, const Mlp&) = default;
};

/// Builds an MLP with the given layer widths (input first, output last). Zero
/// biases; weights uniform in +-1/sqrt(fan_in).
Mlp make_mlp(std::span<const int> widths, Activation output, std::mt19937_64& rng);

/// Activations saved by a forward pass for the matching backward pass.
struct ForwardCache {
    std::vector<std::vector<double>> inputs;      // input to each layer
    std::vector<std::vector<double>> preactivations;
    std::vector<double> output;
};

/// Gradient tensors laid out like Mlp::tensors().
struct Gradients {
    std::vector<std::vector<double>> tensors;

    static Gradients zeros_like(const Mlp& net);
    void scale(double factor);
};

/// Throws Error{DimensionMismatch} when x does not match the input width.
std::vector<double> forward(const Mlp& net, std::span<const double> x, ForwardCache* cache = nullptr);

/// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(output), and
/// returns d(loss)/d(input).
std::vector<double> backward(const Mlp& net, const ForwardCache& cache, std::span<const double> upstream,
                             Gradients& grads);

struct BceResult {
    double loss;
    std::vector<double> gradient; // d(loss)/d(prediction)
};

/// Mean binary cross-entropy with predictions clamped to [1e-7, 1-1e-7]. The
/// gradient is (p-y)/(p(1-p))/n evaluated at the clamped p.
BceResult bce_loss(std::span<const double> predictions, std::span<const double> labels);

struct AdamConfig {
    double learning_rate = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::int64_t t = 0;

    static AdamState for_model(const Mlp& net);

    friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam update of a single tensor at step t (t >= 1).
void adam_update(std::span<double> theta, std::span<const double> grad, std::span<double> m, std::span<double> v,
                 std::int64_t t, const AdamConfig& config);

/// Increments state.t, then updates every tensor of the network.
void adam_step(Mlp& net, const Gradients& grads, AdamState& state, const AdamConfig& config);

} // namespace poserec::nn
