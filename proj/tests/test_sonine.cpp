#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "bfc/math_util.hpp"
#include "bfc/sonine.hpp"
#include "test_support.hpp"

using namespace bfc;

namespace {
std::vector<double> log_grid(double T, int n, double decades) {
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        g[static_cast<std::size_t>(i)] =
            T * std::pow(10.0, -decades * (n - 1 - i) / (n - 1));
    return g;
}
}  // namespace

TEST_CASE("stable pair: closed forms") {
    auto p = build_pair(bernstein_spec::stable(0.5), 1.0);
    CHECK(p.provenance == pair_provenance::analytic);
    // mu_bar(x) = k(x) = 1/sqrt(pi x), K(x) = 2 sqrt(x/pi)
    CHECK(p.mu_bar(0.25) == doctest::Approx(2.0 / std::sqrt(pi)).epsilon(1e-14));
    CHECK(p.k(0.25) == doctest::Approx(2.0 / std::sqrt(pi)).epsilon(1e-14));
    CHECK(p.K(1.0) == doctest::Approx(1.128379).epsilon(1e-6));
    CHECK(p.K(0.0) == 0.0);
    CHECK(p.mu_bar_integral(1.0) == doctest::Approx(2.0 / std::sqrt(pi)).epsilon(1e-14));
    // int_0^1 s mu(ds) = alpha x^{1-alpha}/Gamma(2-alpha) = 0.5/Gamma(1.5)
    CHECK(p.mu_smoment(1.0) == doctest::Approx(0.5 / oracle::gamma_fn(1.5)).epsilon(1e-14));
    // int_0^1 s k(s) ds = (1/sqrt(pi)) int_0^1 s^{1/2} ds = 2/(3 sqrt(pi))
    CHECK(p.k_moment(1.0) == doctest::Approx(2.0 / (3.0 * std::sqrt(pi))).epsilon(1e-12));
}

TEST_CASE("stable pair: contraction constant equals sin(pi a)/(pi a)") {
    for (double a : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        auto p = build_pair(bernstein_spec::stable(a), 1.0);
        const double want = std::sin(pi * a) / (pi * a);
        CHECK(std::abs(p.q - want) <= 1e-8);
        CHECK(std::abs(contraction_constant(p, 1.0) - want) <= 1e-8);
    }
    auto p5 = build_pair(bernstein_spec::stable(0.5), 1.0);
    CHECK(p5.q == doctest::Approx(0.636620).epsilon(1e-5));
    auto p9 = build_pair(bernstein_spec::stable(0.9), 1.0);
    CHECK(p9.q == doctest::Approx(0.109292).epsilon(1e-4));
}

TEST_CASE("stable pair: mu_bar * K is constant in x") {
    auto p = build_pair(bernstein_spec::stable(0.3), 1.0);
    const double ref = p.mu_bar(1.0) * p.K(1.0);
    for (double x : log_grid(1.0, 32, 6.0))
        CHECK(p.mu_bar(x) * p.K(x) == doctest::Approx(ref).epsilon(1e-10));
}

TEST_CASE("stable pair: Sonine residual at the analytic tolerance") {
    for (double a : {0.3, 0.5, 0.7}) {
        auto p = build_pair(bernstein_spec::stable(a), 1.0);
        CHECK(sonine_residual(p, log_grid(1.0, 64, 4.0)) <= 1e-8);
    }
}

TEST_CASE("mixture pair: inverted k matches its small-x expansion") {
    auto p = build_pair(bernstein_spec::mixture({{1.0, 0.3}, {1.0, 0.7}}), 1.0);
    CHECK(p.provenance == pair_provenance::inverted);

    // 1/f = 1/(l^{0.3}+l^{0.7}) = sum (-1)^n l^{-0.7-0.4n}  (large lambda), so
    // k(x) = sum (-1)^n x^{-0.3+0.4n}/Gamma(0.7+0.4n) near 0.
    auto k_series = [](double x) {
        double s = 0.0;
        for (int n = 0; n <= 10; ++n) {
            const double term = std::pow(x, -0.3 + 0.4 * n) / oracle::gamma_fn(0.7 + 0.4 * n);
            s += (n % 2 == 0) ? term : -term;
        }
        return s;
    };
    for (double x : {0.001, 0.01, 0.05})
        CHECK(p.k(x) == doctest::Approx(k_series(x)).epsilon(5e-4));

    // leading-power asymptotics dominate once x^{0.4} is genuinely small
    const double x0 = 1e-5;
    CHECK(p.k(x0) * oracle::gamma_fn(0.7) * std::pow(x0, 0.3) ==
          doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("mixture pair: Sonine residual within the inverted tolerance") {
    auto p = build_pair(bernstein_spec::mixture({{1.0, 0.3}, {1.0, 0.7}}), 1.0);
    CHECK(sonine_residual(p, log_grid(1.0, 64, 4.0)) <= 1e-3);
    // q -> sin(0.7 pi)/(0.7 pi) ~ 0.3679 as x -> 0; the sup stays strictly
    // inside the contraction regime.
    CHECK(p.q >= 0.36);
    CHECK(p.q < 1.0);
}

TEST_CASE("mixture pair: K and k_moment are consistent with k") {
    auto p = build_pair(bernstein_spec::mixture({{1.0, 0.3}, {1.0, 0.7}}), 1.0);
    for (auto [lo, hi] : std::vector<std::pair<double, double>>{{0.1, 0.5}, {0.5, 1.3}}) {
        const double mass = oracle::integrate_ts([&](double s) { return p.k(s); }, lo, hi);
        CHECK(p.K(hi) - p.K(lo) == doctest::Approx(mass).epsilon(1e-8));
        const double mom = oracle::integrate_ts([&](double s) { return s * p.k(s); }, lo, hi);
        CHECK(p.k_moment(hi) - p.k_moment(lo) == doctest::Approx(mom).epsilon(1e-8));
    }
    // mu-side moment identity against the closed forms
    const double x = 0.8;
    const double want = 0.3 * std::pow(x, 0.7) / oracle::gamma_fn(1.7) +
                        0.7 * std::pow(x, 0.3) / oracle::gamma_fn(1.3);
    CHECK(p.mu_smoment(x) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("custom triplet pair: inversion round-trips the stable closed form") {
    custom_triplet t;
    t.mu_bar = [](double x) { return oracle::stable_mu_bar(0.5, x); };
    t.complete_bernstein = true;
    auto p = build_pair(bernstein_spec::custom(t), 1.0);
    CHECK(p.provenance == pair_provenance::inverted);
    for (double x : {0.01, 0.1, 1.0}) {
        CHECK(p.k(x) == doctest::Approx(oracle::stable_k(0.5, x)).epsilon(1e-4));
        CHECK(p.K(x) == doctest::Approx(oracle::stable_K(0.5, x)).epsilon(1e-4));
        CHECK(p.mu_bar_integral(x) ==
              doctest::Approx(std::pow(x, 0.5) / oracle::gamma_fn(1.5)).epsilon(1e-8));
        CHECK(p.mu_smoment(x) ==
              doctest::Approx(0.5 * std::pow(x, 0.5) / oracle::gamma_fn(1.5)).epsilon(1e-7));
    }
    CHECK(std::abs(p.q - 2.0 / pi) <= 1e-3);
    CHECK(sonine_residual(p, log_grid(1.0, 16, 3.0)) <= 1e-3);
}

TEST_CASE("conjugate duality: stable pairs swap roles under alpha -> 1-alpha") {
    auto p3 = build_pair(bernstein_spec::stable(0.3), 1.0);
    auto p7 = build_pair(bernstein_spec::stable(0.7), 1.0);
    for (double x : {0.1, 0.7, 1.0}) {
        CHECK(p3.mu_bar(x) == doctest::Approx(p7.k(x)).epsilon(1e-13));
        CHECK(p3.k(x) == doctest::Approx(p7.mu_bar(x)).epsilon(1e-13));
    }
}

TEST_CASE("monotone shape invariants on a sampled grid") {
    for (auto p : {build_pair(bernstein_spec::stable(0.4), 1.0),
                   build_pair(bernstein_spec::mixture({{1.0, 0.3}, {1.0, 0.7}}), 1.0)}) {
        double prev_mu = std::numeric_limits<double>::infinity();
        double prev_k = std::numeric_limits<double>::infinity();
        double prev_K = 0.0;
        for (double x : log_grid(1.0, 48, 5.0)) {
            CHECK(p.mu_bar(x) > 0);
            CHECK(p.k(x) > 0);
            CHECK(p.mu_bar(x) <= prev_mu * (1 + 1e-12));
            CHECK(p.k(x) <= prev_k * (1 + 1e-12));
            CHECK(p.K(x) >= prev_K - 1e-15);
            prev_mu = p.mu_bar(x);
            prev_k = p.k(x);
            prev_K = p.K(x);
        }
    }
}

TEST_CASE("contraction_constant: censoring-condition guard") {
    // Fabricate a pair whose mu_bar is twice the stable tail while K is the
    // stable potential: sup mu_bar K = 4/pi > 1.
    auto p = build_pair(bernstein_spec::stable(0.5), 1.0);
    sonine_pair bad = p;
    bad.mu_bar = [](double x) { return 2.0 * oracle::stable_mu_bar(0.5, x); };
    CHECK_THROWS_AS(contraction_constant(bad, 1.0), certification_error);
    CHECK_THROWS_AS(contraction_constant(p, 0.0), validation_error);
    CHECK_THROWS_AS(contraction_constant(p, 5.0), validation_error);  // past 2T
}

TEST_CASE("build_pair: admissibility is a precondition") {
    CHECK_THROWS_AS(build_pair(bernstein_spec::stable(0.5), 0.0), validation_error);
    custom_triplet drift;
    drift.mu_bar = [](double x) { return oracle::stable_mu_bar(0.5, x); };
    drift.b = 0.2;
    drift.complete_bernstein = true;
    CHECK_THROWS_AS(build_pair(bernstein_spec::custom(drift), 1.0), validation_error);
    custom_triplet unasserted;  // A2 not asserted -> refused
    unasserted.mu_bar = [](double x) { return oracle::stable_mu_bar(0.5, x); };
    CHECK_THROWS_AS(build_pair(bernstein_spec::custom(unasserted), 1.0), validation_error);
}

TEST_CASE("sonine_residual: argument validation") {
    auto p = build_pair(bernstein_spec::stable(0.5), 1.0);
    CHECK_THROWS_AS(sonine_residual(p, {}), validation_error);
    CHECK_THROWS_AS(sonine_residual(p, {0.5, 1.5}), validation_error);
    CHECK_THROWS_AS(sonine_residual_at(p, 0.0), validation_error);
}
