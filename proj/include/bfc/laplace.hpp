#pragma once

#include <functional>

#include "bfc/grid.hpp"

namespace bfc {
namespace laplace {

/// A Laplace transform F(lambda) to be inverted, together with a smoothness
/// tag.  Gaver–Stehfest inversion is only valid for transforms of smooth
/// (in practice: completely monotone) originals; callers must say which.
struct transform_evaluator {
    enum class smoothness { completely_monotone, generic };
    std::function<double(double)> F;
    smoothness tag = smoothness::generic;
};

/// Forward transform of piecewise-linear data: integral_0^T e^{-lambda x} phi(x) dx
/// with phi the linear interpolant of `phi`.  Exact per cell (expm1-stable
/// cell moments), no extrapolation beyond T.  Requires lambda > 0 and a fully
/// defined grid function.
double forward(const grid_function& phi, double lambda);

/// Gaver–Stehfest inversion of F at x > 0 with N terms (even, 4..18).
///
/// Implementation note: the alternating Stehfest weights make every *partial
/// sum* oscillate by design, so instability is detected by disagreement of
/// the accelerated results across orders N, N-2, N-4 (>10% relative spread
/// or non-finite sums => certification_error "inversion-unstable").
double invert(const transform_evaluator& F, double x, int N = 14);

/// Semi-infinite transform integral_0^inf e^{-lambda x} h(x) dx for a
/// positive, integrable-at-0, decaying evaluator h (e.g. a Lévy tail).
/// Singularity-tolerant quadrature; relative accuracy ~1e-12 for smooth h.
double transform_tail(const std::function<double(double)>& h, double lambda);

} // namespace laplace
} // namespace bfc
