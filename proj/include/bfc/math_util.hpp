#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "bfc/errors.hpp"

namespace bfc {

inline constexpr double pi = 3.141592653589793238462643383279502884;

/// Gamma(x) through lgamma (all arguments used in this library are > 0).
inline double gamma_fn(double x) { return std::exp(std::lgamma(x)); }

/// exp(lgamma(a) - lgamma(b)) without overflow: Gamma(a)/Gamma(b).
inline double gamma_ratio(double a, double b) {
    return std::exp(std::lgamma(a) - std::lgamma(b));
}

// ---------------------------------------------------------------------------
// Monotone piecewise-cubic interpolation (Fritsch–Carlson PCHIP).
//
// Used for dense cached tables (inverted Sonine kernels, CDF tables) where
// monotonicity of the underlying function must survive interpolation.
// ---------------------------------------------------------------------------
class pchip {
public:
    pchip() = default;

    pchip(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n)
            throw validation_error("pchip: need at least two matching nodes");
        for (std::size_t i = 1; i < n; ++i)
            if (!(x_[i] > x_[i - 1]))
                throw validation_error("pchip: abscissae must be strictly increasing");
        d_.resize(n);
        std::vector<double> h(n - 1), s(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            h[i] = x_[i + 1] - x_[i];
            s[i] = (y_[i + 1] - y_[i]) / h[i];
        }
        if (n == 2) {
            d_[0] = d_[1] = s[0];
        } else {
            d_[0] = endpoint_slope(h[0], h[1], s[0], s[1]);
            d_[n - 1] = endpoint_slope(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
            for (std::size_t i = 1; i + 1 < n; ++i) {
                if (s[i - 1] == 0.0 || s[i] == 0.0 || (s[i - 1] > 0) != (s[i] > 0)) {
                    d_[i] = 0.0;
                } else {
                    // weighted harmonic mean keeps the interpolant monotone
                    const double w1 = 2 * h[i] + h[i - 1];
                    const double w2 = h[i] + 2 * h[i - 1];
                    d_[i] = (w1 + w2) / (w1 / s[i - 1] + w2 / s[i]);
                }
            }
        }
    }

    double operator()(double xq) const {
        if (xq <= x_.front()) return y_.front() + d_.front() * (xq - x_.front());
        if (xq >= x_.back()) return y_.back() + d_.back() * (xq - x_.back());
        const std::size_t i =
            static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), xq) - x_.begin()) - 1;
        const double h = x_[i + 1] - x_[i];
        const double t = (xq - x_[i]) / h;
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        return h00 * y_[i] + h * h10 * d_[i] + h01 * y_[i + 1] + h * h11 * d_[i + 1];
    }

    bool empty() const { return x_.empty(); }
    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }

private:
    static double endpoint_slope(double h0, double h1, double s0, double s1) {
        // one-sided three-point estimate, clipped for monotonicity
        double d = ((2 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
        if ((d > 0) != (s0 > 0) || s0 == 0.0) d = 0.0;
        else if ((s0 > 0) != (s1 > 0) && std::abs(d) > 3 * std::abs(s0)) d = 3 * s0;
        return d;
    }

    std::vector<double> x_, y_, d_;
};

// ---------------------------------------------------------------------------
// Kolmogorov–Smirnov helpers
// ---------------------------------------------------------------------------

/// Asymptotic Kolmogorov distribution complement Q(t) = 2 sum (-1)^{k-1} e^{-2k^2 t^2}.
inline double kolmogorov_q(double t) {
    if (t <= 0) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * t * t);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-16 * (std::abs(sum) + 1e-300)) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// One-sample KS p-value with the usual finite-n correction (Stephens).
inline double ks_p_value(double d_stat, std::size_t n) {
    const double sn = std::sqrt(static_cast<double>(n));
    return kolmogorov_q(d_stat * (sn + 0.12 + 0.11 / sn));
}

/// KS statistic of a sorted sample against CDF values evaluated at the sample.
/// `cdf_at_sample[i]` must be F(sample[i]) with the sample sorted ascending.
inline double ks_statistic(std::span<const double> cdf_at_sample) {
    const std::size_t n = cdf_at_sample.size();
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = cdf_at_sample[i];
        d = std::max(d, std::abs((i + 1.0) / n - f));
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    }
    return d;
}

// ---------------------------------------------------------------------------
// FNV-1a 64-bit hash (configuration fingerprints in CSV headers)
// ---------------------------------------------------------------------------
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// 5-point Gauss–Legendre rule on [a, b]; exact for degree <= 9 polynomials.
/// Used for per-cell integration of smooth (singularity-subtracted) remainders.
template <class F>
double integrate_gl5_cell(F&& f, double a, double b) {
    static constexpr double xs[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                     0.5384693101056831, 0.9061798459386640};
    static constexpr double ws[5] = {0.2369268850561891, 0.4786286704993665,
                                     0.5688888888888889, 0.4786286704993665,
                                     0.2369268850561891};
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double sum = 0.0;
    for (int i = 0; i < 5; ++i) sum += ws[i] * f(mid + half * xs[i]);
    return half * sum;
}

/// Bisection for a strictly monotone function; returns x with f(x) ~= target.
template <class F>
double bisect_monotone(F&& f, double lo, double hi, double target, int iters = 200) {
    double flo = f(lo) - target, fhi = f(hi) - target;
    if (flo == 0) return lo;
    if (fhi == 0) return hi;
    if ((flo > 0) == (fhi > 0))
        throw validation_error("bisect_monotone: target not bracketed");
    for (int i = 0; i < iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid) - target;
        if (fm == 0) return mid;
        if ((fm > 0) == (flo > 0)) { lo = mid; flo = fm; }
        else hi = mid;
        if (hi - lo < 1e-15 * (std::abs(hi) + 1.0)) break;
    }
    return 0.5 * (lo + hi);
}

} // namespace bfc
