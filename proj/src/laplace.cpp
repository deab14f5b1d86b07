#include "bfc/laplace.hpp"

#include <array>
#include <cmath>
#include <mutex>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "bfc/math_util.hpp"

namespace bfc {
namespace laplace {

// ---------------------------------------------------------------------------
// forward: exact cell moments of e^{-lambda u} against linear data.
//
// On a cell [a, a+h] with values (v0, v1) and z = lambda*h:
//   integral = e^{-lambda a} * h * [ v0 * E0(z) + (v1 - v0) * E1(z) ]
//   E0(z) = (1 - e^{-z}) / z
//   E1(z) = (1 - (1+z) e^{-z}) / z^2
// Small-z series keep both stable as z -> 0.
// ---------------------------------------------------------------------------

static double moment_e0(double z) {
    if (z < 1e-5) return 1.0 - z / 2 + z * z / 6;
    return -std::expm1(-z) / z;
}

static double moment_e1(double z) {
    if (z < 1e-2) {
        // E1 = sum_{m>=0} (-z)^m (m+1)/(m+2)!
        return 0.5 - z / 3 + z * z / 8 - z * z * z / 30;
    }
    return (1.0 - (1.0 + z) * std::exp(-z)) / (z * z);
}

double forward(const grid_function& phi, double lambda) {
    if (!(lambda > 0)) throw validation_error("laplace::forward: lambda must be > 0");
    phi.require_fully_defined("laplace::forward");
    double sum = 0.0;
    for (std::size_t j = 0; j + 1 < phi.x.size(); ++j) {
        const double a = phi.x[j];
        const double h = phi.x[j + 1] - phi.x[j];
        const double z = lambda * h;
        const double v0 = phi.value[j], v1 = phi.value[j + 1];
        sum += std::exp(-lambda * a) * h * (v0 * moment_e0(z) + (v1 - v0) * moment_e1(z));
    }
    return sum;
}

// ---------------------------------------------------------------------------
// Gaver–Stehfest
//
// f(x) ~ (ln 2 / x) * sum_{k=1}^{N} zeta_k F(k ln2 / x), with the Salzer
// acceleration weights
//   zeta_k = (-1)^{N/2+k} * sum_{j=floor((k+1)/2)}^{min(k,N/2)}
//            j^{N/2+1}/(N/2)! * C(N/2,j) C(2j,j) C(j,k-j)
// (Stehfest 1970).  Weights are cached per N; long double accumulation keeps
// the integer combinatorics exact for N <= 18.
// ---------------------------------------------------------------------------

static const std::vector<double>& stehfest_weights(int N) {
    static std::array<std::vector<double>, 19> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto& w = cache[static_cast<std::size_t>(N)];
    if (!w.empty()) return w;

    const int half = N / 2;
    auto comb = [](int n, int r) -> long double {
        long double c = 1.0L;
        for (int i = 0; i < r; ++i) c = c * (n - i) / (i + 1);
        return c;
    };
    long double half_fact = 1.0L;
    for (int i = 2; i <= half; ++i) half_fact *= i;

    w.resize(static_cast<std::size_t>(N) + 1, 0.0);
    for (int k = 1; k <= N; ++k) {
        long double s = 0.0L;
        for (int j = (k + 1) / 2; j <= std::min(k, half); ++j) {
            long double t = std::pow(static_cast<long double>(j), half + 1) / half_fact;
            t *= comb(half, j) * comb(2 * j, j) * comb(j, k - j);
            s += t;
        }
        if ((half + k) % 2 != 0) s = -s;
        w[static_cast<std::size_t>(k)] = static_cast<double>(s);
    }
    return w;
}

static double stehfest_sum(const std::function<double(double)>& F, double x, int N) {
    const auto& zeta = stehfest_weights(N);
    const double ln2_over_x = std::log(2.0) / x;
    double sum = 0.0;
    for (int k = 1; k <= N; ++k) sum += zeta[static_cast<std::size_t>(k)] * F(k * ln2_over_x);
    return ln2_over_x * sum;
}

double invert(const transform_evaluator& F, double x, int N) {
    if (!(x > 0)) throw validation_error("laplace::invert: x must be > 0");
    if (N < 4 || N > 18 || N % 2 != 0)
        throw validation_error("laplace::invert: N must be even and in [4, 18]");
    if (!F.F) throw validation_error("laplace::invert: empty transform evaluator");
    if (F.tag != transform_evaluator::smoothness::completely_monotone)
        throw validation_error(
            "laplace::invert: Gaver-Stehfest requires a completely monotone "
            "(smooth) transform; tag the evaluator accordingly");

    // Cross-order consistency is the stability check (see header).
    const double vN = stehfest_sum(F.F, x, N);
    double scale = std::abs(vN);
    double spread = 0.0;
    if (N >= 8) {
        const double v1 = stehfest_sum(F.F, x, N - 2);
        const double v2 = stehfest_sum(F.F, x, N - 4);
        scale = std::max({scale, std::abs(v1), std::abs(v2)});
        spread = std::max(std::abs(vN - v1), std::abs(v1 - v2));
    }
    if (!std::isfinite(vN) || !std::isfinite(spread) ||
        (scale > 0 && spread > 0.10 * scale))
        throw certification_error(
            "laplace::invert: inversion-unstable (cross-order disagreement; "
            "original is likely not completely monotone at x=" + std::to_string(x) + ")");
    return vN;
}

double transform_tail(const std::function<double(double)>& h, double lambda) {
    if (!(lambda > 0)) throw validation_error("laplace::transform_tail: lambda must be > 0");
    // Beyond X = 45/lambda the exponential alone is < 3e-20 of the scale.
    const double X = 45.0 / lambda;
    boost::math::quadrature::tanh_sinh<double> integrator(15);
    const auto f = [&](double x) { return std::exp(-lambda * x) * h(x); };
    return integrator.integrate(f, 0.0, X, 1e-12);
}

} // namespace laplace
} // namespace bfc
