#pragma once

// Reference computations used only by tests. None of these call into the code
// paths they check: they are naive re-derivations from the defining formulas.

#include "poserec/histogram.hpp"
#include "poserec/index.hpp"
#include "poserec/nn.hpp"

#include <functional>
#include <span>
#include <vector>

namespace oracle {

/// Per-pixel counting: each pixel's region is found by scanning boundaries,
/// each bin by scanning bin edges.
std::vector<double> histogram(const poserec::ImageBuffer& img, int rows, int cols, int bins);

long double pearson(std::span<const double> p, std::span<const double> q);
long double bce(std::span<const double> p, std::span<const double> y);

/// Full scan over the index: features recomputed by `histogram`, scored with
/// the library metric, std::stable_sort over id-ordered entries.
std::vector<std::string> rank(const poserec::ImageIndex& index, const poserec::ImageBuffer& query,
                              poserec::MetricKind metric, int k);

/// Forward pass in long double with explicit loops.
std::vector<long double> mlp_forward(const poserec::nn::Mlp& net, std::span<const double> x);

/// Central differences of `loss` w.r.t. every parameter of `net`, h = 1e-5.
std::vector<std::vector<double>> finite_differences(poserec::nn::Mlp& net, const std::function<double()>& loss,
                                                    double h = 1e-5);

/// Plain scalar Adam on f(theta) = theta^2, returning theta after each step.
std::vector<double> adam_trajectory_on_square(double theta0, int steps, double lr, double beta1, double beta2,
                                              double eps);

} // namespace oracle
