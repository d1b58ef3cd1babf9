#pragma once

#include <span>
#include <string>
#include <vector>

#include "pinc/tape.hpp"

namespace pinc {

enum class GradScheme { Sum, ConFIG, Norm };

std::string grad_scheme_name(GradScheme s);
GradScheme grad_scheme_from_name(const std::string& name);

double vec_dot(std::span<const double> a, std::span<const double> b);
double vec_norm(std::span<const double> a);

/// Gradients with norm below this are dropped from combination for the step
/// (the normalization schemes divide by the norm).
inline constexpr double kZeroGradNorm = 1e-15;

/// Weighted sum of gradients.
GradientVector sum_combine(std::span<const GradientVector> grads,
                           std::span<const double> weights);

/// Conflict-free direction: the least-squares solution of G_hat d = 1 over
/// the unit-normalized gradients, unit-normalized again, scaled by the sum of
/// its projections onto the unit gradients times the mean gradient norm.
/// The result has equal, non-negative projection onto every input gradient
/// whenever a conflict-free direction exists.
GradientVector config_combine(std::span<const GradientVector> grads);

/// Matches every gradient's norm to the reference (grads[0]), weights, sums,
/// and rescales the sum back to the reference norm.
GradientVector norm_combine(std::span<const GradientVector> grads,
                            std::span<const double> weights);

/// Scales g down to norm c_max when it exceeds it; otherwise unchanged.
GradientVector clip_norm(GradientVector g, double c_max = 5.0);

} // namespace pinc
