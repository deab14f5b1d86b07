#include "bfc/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace bfc {

namespace {

double interior_residual(const operator_scheme& scheme, const grid_function& dc,
                         const std::function<double(std::size_t)>& target) {
    const std::vector<double>& x = scheme.nodes();
    const double cut = scheme.T() / 10.0;
    double rmax = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i)
        if (x[i] >= cut) rmax = std::max(rmax, std::abs(dc.value[i] - target(i)));
    return rmax;
}

grid_function constant_like(const std::vector<double>& nodes, double c, double gamma) {
    grid_function g;
    g.x = nodes;
    g.value.assign(nodes.size(), c);
    g.gamma = gamma;
    return g;
}

} // namespace

series_solution solve_ivp(const operator_scheme& scheme, const grid_function& g,
                          double phi0, double tol) {
    series_solution res = scheme.censored_integral(g, tol);
    for (double& v : res.solution.value) v += phi0;
    // The shift is residual-free: the discrete censored derivative of a
    // constant is exactly zero (every difference term vanishes identically).
    return res;
}

series_solution solve_resolvent(const operator_scheme& scheme, double lambda,
                                const grid_function& g, double phi0, double tol) {
    if (!(tol > 0.0)) throw validation_error("solve_resolvent: tol must be > 0");
    if (lambda == 0.0) return solve_ivp(scheme, g, phi0, tol);
    g.require_fully_defined("solve_resolvent");

    const std::size_t n = scheme.nodes().size();
    const double gamma = g.gamma;

    // Base function w0 = phi0 * 1 + I_c g; the solution is
    // sum_i lambda^i (I_c)^i w0.
    series_solution icg = scheme.censored_integral(g, tol / 16.0);
    grid_function u = icg.solution;
    for (double& v : u.value) v += phi0;

    grid_function phi = u;
    double scale = 1.0;      // lambda^i
    double tnorm_prev = u.sup_norm();
    int decays = 0;
    int i = 0;
    double last_ratio = 1.0;
    const int i_max = 200;
    double tnorm = tnorm_prev;
    while (!(tnorm < tol && (decays >= 3 || tnorm == 0.0))) {
        if (++i > i_max)
            throw certification_error(
                "series-divergence: resolvent series did not certify geometric decay "
                "within 200 terms (|lambda| T^alpha too large for this grid/tolerance)");
        scale *= lambda;
        // Inner tolerance keeps each term's absolute series-truncation error,
        // after the lambda^i weight, summable against the requested tol.  The
        // floor guards against underflow to zero for extreme lambda^i (the
        // growth itself is then caught by the finiteness check below).
        const double inner = std::max(
            1e-300,
            tol / (16.0 * double(i + 1) * double(i + 1) * std::max(1.0, std::abs(scale))));
        series_solution step = scheme.censored_integral(u, inner);
        u = std::move(step.solution);
        tnorm = std::abs(scale) * u.sup_norm();
        if (!std::isfinite(tnorm))
            throw certification_error(
                "series-divergence: resolvent term overflowed before geometric decay "
                "was certified (|lambda| T^alpha too large for this grid/tolerance)");
        for (std::size_t j = 0; j < n; ++j) phi.value[j] += scale * u.value[j];
        last_ratio = (tnorm_prev > 0.0) ? tnorm / tnorm_prev : 0.0;
        decays = (last_ratio < 1.0) ? decays + 1 : 0;
        tnorm_prev = tnorm;
    }

    series_solution res;
    phi.gamma = gamma;
    res.solution = std::move(phi);
    res.terms_used = i;
    res.tail_bound = (last_ratio < 1.0 && last_ratio > 0.0)
                         ? tnorm * last_ratio / (1.0 - last_ratio)
                         : tnorm;
    grid_function dc = scheme.censored_derivative_inverse(res.solution);
    const grid_function& sol = res.solution;
    res.residual = interior_residual(scheme, dc, [&](std::size_t idx) {
        return lambda * sol.value[idx] + g.value[idx];
    });
    return res;
}

std::vector<grid_function> evolve_cauchy(const operator_scheme& scheme,
                                         const grid_function& g0, double dt,
                                         int steps, double tol) {
    if (!(dt > 0.0)) throw validation_error("evolve_cauchy: dt must be > 0");
    if (steps < 0) throw validation_error("evolve_cauchy: steps must be >= 0");
    g0.require_fully_defined("evolve_cauchy");

    std::vector<grid_function> traj;
    traj.reserve(std::size_t(steps) + 1);
    traj.push_back(g0);
    const double lambda = -1.0 / dt;
    for (int s = 0; s < steps; ++s) {
        const grid_function& prev = traj.back();
        grid_function rhs = prev;
        for (double& v : rhs.value) v /= dt;
        // D_c phi^{n+1} = -(1/dt) phi^{n+1} + phi^n/dt; the boundary value is
        // a fixed point of the step (D_c vanishes at the origin).
        series_solution step = solve_resolvent(scheme, lambda, rhs, prev.value.front(), tol);
        traj.push_back(std::move(step.solution));
    }
    return traj;
}

series_solution solve_nonlinear(const operator_scheme& scheme,
                                const std::function<double(double)>& gfunc,
                                double lipschitz, const grid_function& h,
                                double phi0, double tol) {
    if (!gfunc) throw validation_error("solve_nonlinear: gfunc must be callable");
    if (!(lipschitz >= 0.0) || !std::isfinite(lipschitz))
        throw validation_error("solve_nonlinear: Lipschitz bound must be finite and >= 0");
    if (!(tol > 0.0)) throw validation_error("solve_nonlinear: tol must be > 0");
    h.require_fully_defined("solve_nonlinear");

    const std::vector<double>& x = scheme.nodes();
    const std::size_t n = x.size();
    const double T = scheme.T();
    const double q = scheme.pair().q;
    const double inner_tol = tol / 16.0;

    // Window length: largest eps with L K(eps)/(1-q) <= 1/2 (contraction
    // factor <= 1/2 per window).  L = 0 needs a single sweep.
    double eps = T;
    if (lipschitz > 0.0) {
        const double target = (1.0 - q) / (2.0 * lipschitz);
        if (scheme.pair().K(T) > target) {
            double lo = 0.0, hi = T;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                (scheme.pair().K(mid) <= target ? lo : hi) = mid;
            }
            eps = lo;
        }
    }

    // Sweep with data cut off at the window frontier.  By the Volterra
    // structure, values at x <= win_end depend only on data there, so the
    // cutoff never affects nodes the current window certifies; beyond the
    // frontier the Picard map need not be contractive, and feeding those
    // unconverged values through gfunc can blow up (they would be recomputed
    // from clean data by later windows anyway).
    auto sweep = [&](const grid_function& phi, double win_end) {
        grid_function gv = phi;
        for (std::size_t j = 0; j < n; ++j)
            gv.value[j] =
                (x[j] <= win_end) ? gfunc(phi.value[j]) + h.value[j] : 0.0;
        series_solution ic = scheme.censored_integral(gv, inner_tol);
        for (double& v : ic.solution.value) v += phi0;
        return std::move(ic.solution);
    };

    grid_function phi = constant_like(x, phi0, h.gamma);
    int total_iters = 0;
    double last_change = 0.0;
    double win_start = 0.0;
    while (win_start < T * (1.0 - 1e-15)) {
        if (eps < std::max(x[1], 1e-12 * T))
            throw certification_error(
                "solve_nonlinear: window length underflow — iteration is not "
                "contractive at any resolvable scale (Lipschitz bound too small?)");
        const double win_end = std::min(T, win_start + eps);
        double prev_change = -1.0;
        bool converged = false, shrink = false;
        for (int it = 0; it < 200; ++it) {
            grid_function next = sweep(phi, win_end);
            double change = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                if (x[j] > win_start && x[j] <= win_end) {
                    const double d = std::abs(next.value[j] - phi.value[j]);
                    // NaN must read as "not converged", never as zero change
                    change = (d == d) ? std::max(change, d)
                                      : std::numeric_limits<double>::infinity();
                }
            phi = std::move(next);
            ++total_iters;
            last_change = change;
            // Remaining window error <= change * rho/(1-rho) <= change for
            // contraction factor rho <= 1/2.
            if (change <= 0.5 * tol) { converged = true; break; }
            if (prev_change >= 0.0 && change >= prev_change && change > 4.0 * tol) {
                shrink = true;
                break;
            }
            prev_change = change;
        }
        if (shrink || !converged) {
            eps *= 0.5;  // retry the same window with a shorter step
            continue;
        }
        win_start = win_end;
    }

    series_solution res;
    res.solution = std::move(phi);
    res.terms_used = total_iters;
    res.tail_bound = last_change;
    grid_function dc = scheme.censored_derivative_inverse(res.solution);
    const grid_function& sol = res.solution;
    res.residual = interior_residual(scheme, dc, [&](std::size_t idx) {
        return gfunc(sol.value[idx]) + h.value[idx];
    });
    return res;
}

double lifetime_laplace(const sonine_pair& pair, double x, double lambda, double tol) {
    if (!(x > 0.0)) throw validation_error("lifetime_laplace: x must be > 0");
    if (x > pair.horizon * (1.0 + 1e-9))
        throw validation_error("lifetime_laplace: x exceeds the pair horizon");
    if (!(lambda >= 0.0)) throw validation_error("lifetime_laplace: lambda must be >= 0");
    if (!(tol > 0.0)) throw validation_error("lifetime_laplace: tol must be > 0");
    if (lambda == 0.0) return 1.0;  // tau_inf is a.s. finite

    const double gamma = default_grading(pair.family);
    operator_scheme scheme(pair, graded_nodes(x, 1024, gamma));
    grid_function zero = constant_like(scheme.nodes(), 0.0, gamma);
    series_solution sol = solve_resolvent(scheme, -lambda, zero, 1.0, tol);
    double v = sol.solution.value.back();
    if (v < -10.0 * tol || v > 1.0 + 10.0 * tol)
        throw certification_error(
            "lifetime_laplace: certified series value " + std::to_string(v) +
            " lies outside [0,1] beyond tolerance — numerics failure");
    return std::min(1.0, std::max(0.0, v));
}

series_solution solve_ivp(const sonine_pair& pair, const grid_function& g,
                          double phi0, double tol) {
    return solve_ivp(operator_scheme(pair, g.x), g, phi0, tol);
}

series_solution solve_resolvent(const sonine_pair& pair, double lambda,
                                const grid_function& g, double phi0, double tol) {
    return solve_resolvent(operator_scheme(pair, g.x), lambda, g, phi0, tol);
}

std::vector<grid_function> evolve_cauchy(const sonine_pair& pair,
                                         const grid_function& g0, double dt,
                                         int steps, double tol) {
    return evolve_cauchy(operator_scheme(pair, g0.x), g0, dt, steps, tol);
}

series_solution solve_nonlinear(const sonine_pair& pair,
                                const std::function<double(double)>& gfunc,
                                double lipschitz, const grid_function& h,
                                double phi0, double tol) {
    return solve_nonlinear(operator_scheme(pair, h.x), gfunc, lipschitz, h, phi0, tol);
}

} // namespace bfc
