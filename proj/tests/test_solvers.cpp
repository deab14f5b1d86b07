#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "bfc/math_util.hpp"
#include "bfc/operators.hpp"
#include "bfc/simulate.hpp"
#include "bfc/solvers.hpp"
#include "test_support.hpp"

using namespace bfc;

namespace {

grid_function on_grid(const std::vector<double>& nodes,
                      const std::function<double(double)>& f, double gamma) {
    std::vector<double> vals(nodes.size());
    for (std::size_t j = 0; j < nodes.size(); ++j) vals[j] = f(nodes[j]);
    return grid_function(nodes, std::move(vals), gamma);
}

double sup_err_from(const grid_function& got,
                    const std::function<double(double)>& want, double lo) {
    double m = 0.0;
    for (std::size_t j = got.defined_from; j < got.x.size(); ++j)
        if (got.x[j] >= lo) m = std::max(m, std::abs(got.value[j] - want(got.x[j])));
    return m;
}

}  // namespace

TEST_CASE("solve_ivp: D_c phi = sqrt(x/pi) has solution phi = x (alpha = 1/2)") {
    auto pair = build_pair(bernstein_spec::stable(0.5), 1.0);
    operator_scheme sch(pair, graded_nodes(1.0, 2048, 2.0));
    auto g = on_grid(sch.nodes(), [](double x) { return std::sqrt(x / pi); }, 2.0);
    auto sol = solve_ivp(sch, g, 0.0, 1e-9);
    const double err = sup_err_from(sol.solution, [](double x) { return x; }, 0.1);
    MESSAGE("IVP identity-solution sup error on [T/10,T]: " << err);
    CHECK(err <= 5e-3);
    CHECK(sol.tail_bound <= 1e-9);
}

TEST_CASE("solve_ivp: zero data returns the constant phi0 exactly") {
    auto pair = build_pair(bernstein_spec::stable(0.4), 1.0);
    operator_scheme sch(pair, graded_nodes(1.0, 256, 2.5));
    auto zero = on_grid(sch.nodes(), [](double) { return 0.0; }, 2.5);
    auto sol = solve_ivp(sch, zero, 7.0, 1e-10);
    CHECK(sol.terms_used == 0);
    for (double v : sol.solution.value) CHECK(v == 7.0);
    CHECK(sol.residual == 0.0);
}

TEST_CASE("solve_ivp: g = 1 gives the mean lifetime K/(1-q); phi0 shifts exactly") {
    auto pair = build_pair(bernstein_spec::stable(0.5), 1.0);
    operator_scheme sch(pair, graded_nodes(1.0, 1024, 2.0));
    auto one = on_grid(sch.nodes(), [](double) { return 1.0; }, 2.0);
    auto sol0 = solve_ivp(sch, one, 0.0, 1e-8);
    // E^1[tau_inf] = K(1)/(1-q) = (2/sqrt(pi)) / (1 - 2/pi)
    const double mean_lifetime = (2.0 / std::sqrt(pi)) / (1.0 - 2.0 / pi);
    CHECK(sol0.solution(1.0) == doctest::Approx(mean_lifetime).epsilon(1e-2));
    CHECK(sol0.solution(1.0) == doctest::Approx(3.105275).epsilon(1e-2));

    auto sol2 = solve_ivp(sch, one, 2.5, 1e-8);
    for (std::size_t j = 0; j < sch.nodes().size(); ++j)
        CHECK(sol2.solution.value[j] - sol0.solution.value[j] ==
              doctest::Approx(2.5).epsilon(1e-13));
}

TEST_CASE("solve_resolvent: lambda = 0 delegates to the IVP") {
    auto pair = build_pair(bernstein_spec::stable(0.5), 1.0);
    operator_scheme sch(pair, graded_nodes(1.0, 512, 2.0));
    auto g = on_grid(sch.nodes(), [](double x) { return 1.0 + x; }, 2.0);
    auto a = solve_resolvent(sch, 0.0, g, 0.5, 1e-9);
    auto b = solve_ivp(sch, g, 0.5, 1e-9);
    for (std::size_t j = 0; j < sch.nodes().size(); ++j)
        CHECK(a.solution.value[j] == b.solution.value[j]);
}

TEST_CASE("solve_resolvent: matches the closed-form alternating ladder") {
    // With g = 0, phi0 = 1, lambda = -l the solution is the lifetime
    // transform series sum_n (-l)^n (I_c)^n 1, whose terms are known in
    // closed form for the stable family.
    auto pair = build_pair(bernstein_spec::stable(0.5), 1.0);
    operator_scheme sch(pair, graded_nodes(1.0, 1024, 2.0));
    auto zero = on_grid(sch.nodes(), [](double) { return 0.0; }, 2.0);
    for (double l : {0.5, 2.0}) {
        auto sol = solve_resolvent(sch, -l, zero, 1.0, 1e-10);
        for (double x : {0.5, 1.0}) {
            const double want = oracle::lifetime_lt_series(0.5, x, l);
            const double got = sol.solution(x);
            MESSAGE("resolvent lambda=-" << l << " x=" << x << ": got " << got
                                         << " want " << want << " diff "
                                         << std::abs(got - want));
            CHECK(got == doctest::Approx(want).epsilon(2e-3));
        }
    }
}

TEST_CASE("solve_resolvent: linear in the data") {
    auto pair = build_pair(bernstein_spec::stable(0.5), 1.0);
    operator_scheme sch(pair, graded_nodes(1.0, 512, 2.0));
    auto g1 = on_grid(sch.nodes(), [](double x) { return std::sin(3.0 * x); }, 2.0);
    auto g2 = on_grid(sch.nodes(), [](double x) { return std::exp(-x); }, 2.0);
    auto g12 = on_grid(sch.nodes(),
                       [](double x) { return std::sin(3.0 * x) + std::exp(-x); }, 2.0);
    auto u1 = solve_resolvent(sch, 0.5, g1, 0.0, 1e-12);
    auto u2 = solve_resolvent(sch, 0.5, g2, 0.0, 1e-12);
    auto u12 = solve_resolvent(sch, 0.5, g12, 0.0, 1e-12);
    double diff = 0.0;
    for (std::size_t j = 0; j < sch.nodes().size(); ++j)
        diff = std::max(diff, std::abs(u12.solution.value[j] - u1.solution.value[j] -
                                       u2.solution.value[j]));
    MESSAGE("resolvent linearity defect: " << diff);
    CHECK(diff <= 1e-9);
}

TEST_CASE("solve_resolvent: certified residual for random data") {
    // The reported residual is the a-posteriori defect sup_{x>=T/10}
    // |D_c u - lambda u - g| evaluated with the discrete operators; it is
    // dominated by product-integration error of the series iterates, so it
    // shrinks with M, not with tol.  Measure the level and its M-scaling.
    rng_stream rng(777001u);
    for (std::size_t M : {1024u, 2048u}) {
        auto pair = build_pair(bernstein_spec::stable(0.5), 1.0);
        operator_scheme sch(pair, graded_nodes(1.0, M, 2.0));
        auto g = on_grid(sch.nodes(),
                         [&](double x) {
                             return std::cos(2.0 * x) + 0.3 * std::sin(7.0 * x + 1.0);
                         },
                         2.0);
        (void)rng;
        for (double l : {-0.5, 0.5}) {
            auto sol = solve_resolvent(sch, l, g, 0.25, 1e-8);
            MESSAGE("resolvent residual M=" << M << " lambda=" << l << ": "
                                            << sol.residual
                                            << " (terms " << sol.terms_used << ")");
            CHECK(sol.residual <= 2e-4);
            CHECK(sol.tail_bound <= 1e-8);
        }
    }
}

TEST_CASE("solve_resolvent: uncertifiable growth throws series-divergence") {
    auto pair = build_pair(bernstein_spec::stable(0.5), 1.0);
    operator_scheme sch(pair, graded_nodes(1.0, 64, 2.0));
    auto one = on_grid(sch.nodes(), [](double) { return 1.0; }, 2.0);
    CHECK_THROWS_AS(solve_resolvent(sch, 1e8, one, 0.0, 1e-8), certification_error);
    CHECK_THROWS_AS(solve_resolvent(sch, 0.5, one, 0.0, -1.0), validation_error);
}

TEST_CASE("evolve_cauchy: trajectory shape and constant invariance") {
    auto pair = build_pair(bernstein_spec::stable(0.5), 1.0);
    operator_scheme sch(pair, graded_nodes(1.0, 512, 2.0));
    auto c = on_grid(sch.nodes(), [](double) { return 1.75; }, 2.0);
    auto traj = evolve_cauchy(sch, c, 0.5, 3, 1e-10);
    REQUIRE(traj.size() == 4);
    for (std::size_t j = 0; j < sch.nodes().size(); ++j)
        CHECK(traj[0].value[j] == 1.75);
    double drift = 0.0;
    for (const auto& u : traj)
        for (double v : u.value) drift = std::max(drift, std::abs(v - 1.75));
    MESSAGE("constant-invariance drift over 3 implicit-Euler steps: " << drift);
    CHECK(drift <= 1e-7);
}

TEST_CASE("evolve_cauchy: positivity and interior decay for a bump") {
    auto pair = build_pair(bernstein_spec::stable(0.5), 1.0);
    operator_scheme sch(pair, graded_nodes(1.0, 512, 2.0));
    // smooth interior bump, zero at the (invariant) boundary
    auto g0 = on_grid(sch.nodes(),
                      [](double x) {
                          if (x <= 0.2 || x >= 0.9) return 0.0;
                          const double u = (x - 0.2) / 0.7;
                          return std::exp(-1.0 / (u * (1.0 - u)));
                      },
                      2.0);
    auto traj = evolve_cauchy(sch, g0, 0.25, 4, 1e-9);
    REQUIRE(traj.size() == 5);
    double minval = 0.0;
    for (const auto& u : traj)
        for (double v : u.value) minval = std::min(minval, v);
    MESSAGE("most negative trajectory value: " << minval);
    CHECK(minval >= -1e-6);

    // interior sup norm decays monotonically (killed/censored mass leaves)
    auto interior_sup = [&](const grid_function& u) {
        double m = 0.0;
        for (std::size_t j = 0; j < u.x.size(); ++j)
            if (u.x[j] >= 0.1) m = std::max(m, std::abs(u.value[j]));
        return m;
    };
    for (std::size_t n = 1; n < traj.size(); ++n)
        CHECK(interior_sup(traj[n]) <= interior_sup(traj[n - 1]) * (1.0 + 1e-9));
    CHECK(interior_sup(traj.back()) < 0.9 * interior_sup(traj.front()));
}

TEST_CASE("evolve_cauchy: rejects bad stepping parameters") {
    auto pair = build_pair(bernstein_spec::stable(0.5), 1.0);
    operator_scheme sch(pair, graded_nodes(1.0, 64, 2.0));
    auto c = on_grid(sch.nodes(), [](double) { return 1.0; }, 2.0);
    CHECK_THROWS_AS(evolve_cauchy(sch, c, 0.0, 3, 1e-8), validation_error);
    CHECK_THROWS_AS(evolve_cauchy(sch, c, 0.5, -1, 1e-8), validation_error);
}

TEST_CASE("solve_nonlinear: zero nonlinearity reproduces the IVP") {
    auto pair = build_pair(bernstein_spec::stable(0.5), 1.0);
    operator_scheme sch(pair, graded_nodes(1.0, 512, 2.0));
    auto h = on_grid(sch.nodes(), [](double x) { return 1.0 + 0.2 * x; }, 2.0);
    auto nl = solve_nonlinear(sch, [](double) { return 0.0; }, 0.0, h, 0.3, 1e-9);
    auto iv = solve_ivp(sch, h, 0.3, 1e-9);
    double diff = 0.0;
    for (std::size_t j = 0; j < sch.nodes().size(); ++j)
        diff = std::max(diff, std::abs(nl.solution.value[j] - iv.solution.value[j]));
    MESSAGE("nonlinear-vs-IVP defect with gfunc = 0: " << diff);
    CHECK(diff <= 1e-7);
}

TEST_CASE("solve_nonlinear: linear feedback reproduces the resolvent") {
    auto pair = build_pair(bernstein_spec::stable(0.5), 1.0);
    operator_scheme sch(pair, graded_nodes(1.0, 512, 2.0));
    auto h = on_grid(sch.nodes(), [](double x) { return std::exp(-2.0 * x); }, 2.0);
    auto nl = solve_nonlinear(sch, [](double u) { return 0.5 * u; }, 0.5, h, 0.0, 1e-10);
    auto rs = solve_resolvent(sch, 0.5, h, 0.0, 1e-12);
    double diff = 0.0;
    for (std::size_t j = 0; j < sch.nodes().size(); ++j)
        diff = std::max(diff, std::abs(nl.solution.value[j] - rs.solution.value[j]));
    MESSAGE("nonlinear-vs-resolvent defect with gfunc = u/2: " << diff);
    CHECK(diff <= 1e-7);
}

TEST_CASE("solve_nonlinear: logistic-type decay, certified residual") {
    auto pair = build_pair(bernstein_spec::stable(0.5), 1.0);
    operator_scheme sch(pair, graded_nodes(1.0, 256, 2.0));
    auto h = on_grid(sch.nodes(), [](double) { return 1.0 ; }, 2.0);
    // D_c u = -u^2 + 1, u(0) = 0; solution is positive, increasing, and
    // dominated by the linear problem D_c v = 1.  The solution stays below
    // ~1.25, so L = 2.5 bounds the nonlinearity's slope on its range (each
    // Picard window length scales like L^-2, so a sharp bound matters).
    auto nl = solve_nonlinear(sch, [](double u) { return -u * u; }, 2.5, h, 0.0, 1e-8);
    auto lin = solve_ivp(sch, h, 0.0, 1e-9);
    for (std::size_t j = 0; j < sch.nodes().size(); ++j) {
        CHECK(nl.solution.value[j] >= -1e-9);
        CHECK(nl.solution.value[j] <= lin.solution.value[j] + 1e-9);
    }
    CHECK(nl.solution.value.back() > 0.5);
    MESSAGE("nonlinear a-posteriori residual: " << nl.residual);
    CHECK(nl.residual <= 1e-3);
}

TEST_CASE("solve_nonlinear: argument validation") {
    auto pair = build_pair(bernstein_spec::stable(0.5), 1.0);
    operator_scheme sch(pair, graded_nodes(1.0, 64, 2.0));
    auto h = on_grid(sch.nodes(), [](double) { return 1.0; }, 2.0);
    CHECK_THROWS_AS(solve_nonlinear(sch, nullptr, 1.0, h, 0.0, 1e-8),
                    validation_error);
    CHECK_THROWS_AS(
        solve_nonlinear(sch, [](double u) { return u; }, -1.0, h, 0.0, 1e-8),
        validation_error);
    CHECK_THROWS_AS(
        solve_nonlinear(sch, [](double u) { return u; }, 1.0, h, 0.0, 0.0),
        validation_error);
}

TEST_CASE("lifetime_laplace: boundary values, monotonicity, closed-form match") {
    auto pair = build_pair(bernstein_spec::stable(0.5), 2.0);
    // lambda = 0: only the n = 0 term survives; the transform is exactly 1
    CHECK(lifetime_laplace(pair, 1.0, 0.0, 1e-8) == 1.0);
    // small lambda: 1 - lambda E[tau] + O(lambda^2)
    const double mean_lifetime = (2.0 / std::sqrt(pi)) / (1.0 - 2.0 / pi);
    const double near1 = lifetime_laplace(pair, 1.0, 1e-6, 1e-10);
    CHECK(near1 == doctest::Approx(1.0 - 1e-6 * mean_lifetime).epsilon(1e-9));

    double prev = 1.0;
    for (double l : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        const double v = lifetime_laplace(pair, 1.0, l, 1e-8);
        CHECK(v > 0.0);
        CHECK(v < prev);
        prev = v;
    }

    for (double l : {0.5, 1.0, 2.0}) {
        for (double x : {0.5, 1.0, 2.0}) {
            const double got = lifetime_laplace(pair, x, l, 1e-8);
            const double want = oracle::lifetime_lt_series(0.5, x, l);
            MESSAGE("lifetime LT x=" << x << " lambda=" << l << ": got " << got
                                     << " want " << want);
            CHECK(got == doctest::Approx(want).epsilon(2e-3));
        }
    }
}

TEST_CASE("lifetime_laplace: argument validation") {
    auto pair = build_pair(bernstein_spec::stable(0.5), 1.0);
    CHECK_THROWS_AS(lifetime_laplace(pair, 0.0, 1.0, 1e-8), validation_error);
    CHECK_THROWS_AS(lifetime_laplace(pair, 1.5, 1.0, 1e-8), validation_error);
    CHECK_THROWS_AS(lifetime_laplace(pair, 1.0, -0.5, 1e-8), validation_error);
    CHECK_THROWS_AS(lifetime_laplace(pair, 1.0, 1.0, 0.0), validation_error);
}
