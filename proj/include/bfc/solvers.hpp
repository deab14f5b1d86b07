#pragma once

#include <functional>
#include <vector>

#include "bfc/operators.hpp"

namespace bfc {

/// Solvers for equations driven by the censored Bernstein derivative D_c.
///
/// Every solver returns a series_solution whose `residual` is the a-posteriori
/// sup-norm defect of the defining equation over *interior* nodes (grid points
/// with x >= T/10, x > 0).  The defect is evaluated with the same discrete
/// operators that built the solution, so it certifies the series/iteration
/// logic; discretization accuracy itself is covered by closed-form examples.
/// The first nodes of a graded mesh are excluded because product integration
/// has a boundary layer there for x^alpha-cusped solutions (O(1) pointwise
/// relative error at x_1, decaying into the interior) — a property of the
/// scheme, not of the solver logic the residual certifies.

/// Initial-value problem  D_c phi = g on (0,T], phi(0) = phi0:
/// phi = phi0 + censored-integral Neumann series of g (unique solution for
/// q < 1).  Adding phi0 is exact: the discrete D_c annihilates constants at
/// machine precision.
series_solution solve_ivp(const operator_scheme& scheme, const grid_function& g,
                          double phi0, double tol);
series_solution solve_ivp(const sonine_pair& pair, const grid_function& g,
                          double phi0, double tol);

/// Resolvent equation  D_c phi = lambda phi + g, phi(0) = phi0:
/// phi = sum_i lambda^i (I_c)^i [phi0 + I_c g], each iterate computed by the
/// censored-integral series.  Terms may grow before operator smoothing wins
/// (the iterates gain a factor ~K(T)/Gamma-growth per step), so truncation
/// requires the last term < tol *and* three consecutive decaying ratios.
/// Failure to certify decay within 200 terms throws certification_error
/// ("series-divergence") — theory guarantees convergence, so hitting the cap
/// signals a tolerance/grid mismatch, typically |lambda| T^alpha too large.
/// lambda = 0 delegates to solve_ivp.
series_solution solve_resolvent(const operator_scheme& scheme, double lambda,
                                const grid_function& g, double phi0, double tol);
series_solution solve_resolvent(const sonine_pair& pair, double lambda,
                                const grid_function& g, double phi0, double tol);

/// Cauchy evolution  d/dt u = -D_c u + 0, u(0,.) = g0, by implicit Euler:
/// each step solves D_c phi = lambda phi + g^n with lambda = -1/dt and
/// g^n = phi^n / dt — exactly a resolvent problem, so every step stays inside
/// the proven series machinery.  The boundary value is invariant
/// (D_c vanishes at 0), so phi^{n+1}(0) = phi^n(0).  Returns the trajectory
/// [u^0, u^1, ..., u^steps] (steps+1 entries).
///
/// Practical range: the per-step series has effective parameter
/// (1/dt) K(T)-ish; very small dt on a long horizon makes intermediate terms
/// huge before they decay (alternating-series cancellation).  Keep
/// T^alpha / dt moderate (<~ 10).
std::vector<grid_function> evolve_cauchy(const operator_scheme& scheme,
                                         const grid_function& g0, double dt,
                                         int steps, double tol = 1e-8);
std::vector<grid_function> evolve_cauchy(const sonine_pair& pair,
                                         const grid_function& g0, double dt,
                                         int steps, double tol = 1e-8);

/// Nonlinear equation  D_c phi = gfunc(phi) + h, phi(0) = phi0, with gfunc
/// Lipschitz (constant L).  Picard iteration of S phi = phi0 + I_c[gfunc o phi + h]
/// on successive windows of length eps chosen so L K(eps)/(1-q) <= 1/2
/// (window contraction factor <= 1/2); a window observed non-contractive
/// shrinks eps and retries; eps underflow throws certification_error.
series_solution solve_nonlinear(const operator_scheme& scheme,
                                const std::function<double(double)>& gfunc,
                                double lipschitz, const grid_function& h,
                                double phi0, double tol);
series_solution solve_nonlinear(const sonine_pair& pair,
                                const std::function<double(double)>& gfunc,
                                double lipschitz, const grid_function& h,
                                double phi0, double tol);

/// Lifetime Laplace transform  E^x[exp(-lambda tau_inf)]  of the censored
/// process started at x: the alternating series sum_n (-lambda)^n (I_c)^n 1(x),
/// evaluated as a resolvent solve (lambda' = -lambda, g = 0, phi0 = 1) on an
/// internal graded grid with T = x (1024 cells).  The certified value is
/// clamped into [0,1] only when within 10*tol of the boundary; a larger
/// excursion throws certification_error.
double lifetime_laplace(const sonine_pair& pair, double x, double lambda,
                        double tol);

} // namespace bfc
