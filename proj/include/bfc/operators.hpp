#pragma once

#include <cstddef>
#include <vector>

#include "bfc/bernstein.hpp"
#include "bfc/grid.hpp"
#include "bfc/sonine.hpp"

namespace bfc {

/// How a function on [0,T] is extended to the negative half-line when a
/// nonlocal derivative looks past the origin.
///
///   killing : phi == 0 on (-inf, 0)   -> Riemann-Liouville-type derivative
///   sticky  : phi == phi(0+) there    -> Caputo-type derivative
enum class extension_mode { killing, sticky };

/// Result of a truncated-series computation: the grid solution, how many
/// series terms were summed, the rigorous tail bound at truncation, and an
/// a-posteriori residual (sup over interior nodes of the defining equation's
/// defect).  The residual is reported, never hidden.
struct series_solution {
    grid_function solution;
    int terms_used = 0;
    double tail_bound = 0.0;
    double residual = 0.0;
};

/// Product-integration scheme for the convolution operators of a Sonine pair
/// on a fixed grid 0 = x_0 < x_1 < ... < x_M.
///
/// All operators reduce to per-cell moments of the kernels k and mu evaluated
/// at node differences x_i - x_j.  Four triangular tables (K, int s k,
/// mu_bar, int s mu(ds), each at every difference) are built once; every
/// operator application is then an exact piecewise-linear product-integration
/// sum.  "Exact" means: if the input is piecewise linear on the grid, the
/// convolution integrals are evaluated without quadrature error (kernel cell
/// masses are exact), so constants and the identity map to their closed forms
/// at machine precision.
///
/// Memory: 4 tables of M(M+1)/2 doubles (~67 MB at M = 2048).
///
/// Accuracy note: on a graded mesh the first interior node sits inside the
/// boundary layer of functions with an x^alpha cusp at 0; pointwise relative
/// errors of derivative-type operators are O(1) there and decay into the
/// interior.  This is the classical behaviour of product integration for
/// weakly singular Volterra kernels; residual-based contracts in this library
/// are therefore stated on interior nodes x >= T/10.
class operator_scheme {
public:
    operator_scheme(const sonine_pair& pair, std::vector<double> nodes);

    const std::vector<double>& nodes() const { return x_; }
    const sonine_pair& pair() const { return pair_; }
    double T() const { return x_.back(); }

    /// Bernstein-Riemann-Liouville integral (I phi)(x) = int_0^x phi(x-z) k(z) dz.
    grid_function rl_integral(const grid_function& phi) const;

    /// Bernstein derivative with the chosen extension.  Killing:
    /// int_(0,x] (phi(x) - phi(x-s)) mu(ds) + phi(x) mu_bar(x); Sticky
    /// subtracts phi(0+) mu_bar(x).  Value at x = 0 is undefined
    /// (defined_from = 1).
    grid_function rl_derivative(const grid_function& phi, extension_mode mode) const;

    /// Censored Bernstein derivative: jump measure restricted to [0,x],
    /// i.e. int_(0,x] (phi(x) - phi(x-s)) mu(ds); annihilates constants
    /// exactly.  Computed directly (not as a difference of large terms).
    grid_function censored_derivative(const grid_function& phi) const;

    /// The same censored derivative in inverse (collocation) form: the z
    /// solving this scheme's own first-kind product-integration system
    ///     I z = (id - K)(phi - phi(0)),
    /// by forward substitution against the tables that define rl_integral
    /// and apply_K.  Both forms discretize one continuum operator; this one
    /// is, by construction, the exact algebraic left inverse of
    /// censored_integral on the grid (up to the first-cell closure
    /// z(x_0) := z(x_1) and roundoff), whereas the direct form composes with
    /// the integral only up to product-integration error.  Solvers report
    /// their a-posteriori residuals with this form, so a residual certifies
    /// the series/iteration logic rather than re-measuring discretization
    /// bias; discretization accuracy itself is covered by the closed-form
    /// operator contracts.  Value at x = 0 is undefined (defined_from = 1).
    grid_function censored_derivative_inverse(const grid_function& phi) const;

    /// Kernel operator (K phi)(x) = int_0^x mu_bar(r) phi(r) k(x-r) dr,
    /// the one-step censoring-position expectation.  K 1 == 1 identically
    /// (Sonine identity), realized exactly by splitting off phi(0).
    grid_function apply_K(const grid_function& phi) const;

    /// Censored integral: Neumann series sum_i K^i (rl_integral g), truncated
    /// when the rigorous bound sup|g| q^(N+1) K(T)/(1-q) < tol.
    series_solution censored_integral(const grid_function& g, double tol) const;

private:
    double tri(const std::vector<double>& t, std::size_t i, std::size_t j) const {
        return t[i * (i - 1) / 2 + j];
    }
    grid_function weighted_sum(const std::vector<double>& vals) const;

    sonine_pair pair_;
    std::vector<double> x_;
    // Tables at differences x_i - x_j, j < i, packed row-major triangular.
    std::vector<double> Kt_;   // K(x_i - x_j)
    std::vector<double> kmt_;  // int_0^(x_i-x_j) s k(s) ds
    std::vector<double> mbt_;  // mu_bar(x_i - x_j)
    std::vector<double> mst_;  // int_0^(x_i-x_j) s mu(ds)
};

/// Free-function forms (build an operator_scheme on phi's grid internally;
/// prefer the class when applying several operators on one grid).
grid_function rl_integral(const sonine_pair& pair, const grid_function& phi);
grid_function rl_derivative(const sonine_pair& pair, const grid_function& phi,
                            extension_mode mode);
grid_function censored_derivative(const sonine_pair& pair, const grid_function& phi);
grid_function apply_K(const sonine_pair& pair, const grid_function& phi);
series_solution censored_integral(const sonine_pair& pair, const grid_function& g,
                                  double tol);

/// Default mesh grading for a family: max(2, 1/alpha_min) for stable and
/// mixture families (restores product-integration accuracy against the
/// x^(-alpha) kernel singularities), 3 for custom triplets.
double default_grading(const bernstein_spec& spec);

/// Laplace-symbol identity check: max over the given lambda values of
///   |L[D_killing phi](lambda) - f(lambda) L[phi](lambda)| / |f(lambda) L[phi](lambda)|,
/// with both transforms computed from grid data.  phi must be compactly
/// supported well inside [0,T] so that truncation tails are negligible;
/// lambdas where the reference magnitude is below an absolute floor are
/// skipped (they cannot be resolved, which is not a failure).  phi == 0
/// returns 0 exactly.
double symbol_check(const bernstein_spec& spec, const sonine_pair& pair,
                    const grid_function& phi, const std::vector<double>& lambdas);

} // namespace bfc
