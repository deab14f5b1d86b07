#include "bfc/sonine.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "bfc/grid.hpp"
#include "bfc/laplace.hpp"
#include "bfc/math_util.hpp"

namespace bfc {
namespace {

// ---------------------------------------------------------------------------
// Exact cumulative of a pchip interpolant.
//
// Node-to-node masses are accumulated with a 5-point Gauss rule, which is
// exact for the Hermite cubics, so queries K(x) = F[cell] + GL5(f, x_j, x)
// reproduce the integral of the interpolant without additional interpolation
// error.  That keeps K and k mutually consistent (K' == k) to rounding.
// ---------------------------------------------------------------------------
class cumulative_of_pchip {
public:
    cumulative_of_pchip() = default;

    // weight_power = 0 integrates f(s) ds, 1 integrates s f(s) ds.
    cumulative_of_pchip(std::shared_ptr<const pchip> f, std::vector<double> nodes,
                        int weight_power)
        : f_(std::move(f)), x_(std::move(nodes)), w_(weight_power) {
        cum_.resize(x_.size(), 0.0);
        for (std::size_t j = 0; j + 1 < x_.size(); ++j)
            cum_[j + 1] = cum_[j] + integrate_gl5_cell(
                                        [&](double s) { return weighted(s); }, x_[j], x_[j + 1]);
    }

    double operator()(double xq) const {
        if (xq <= x_.front()) return 0.0;
        const auto w = [&](double s) { return weighted(s); };
        if (xq >= x_.back())  // extrapolation region: one linear piece, GL5 exact
            return cum_.back() + integrate_gl5_cell(w, x_.back(), xq);
        const std::size_t j = static_cast<std::size_t>(
                                  std::upper_bound(x_.begin(), x_.end(), xq) - x_.begin()) -
                              1;
        return cum_[j] + integrate_gl5_cell(w, x_[j], xq);
    }

private:
    double weighted(double s) const { return (w_ == 0) ? (*f_)(s) : s * (*f_)(s); }

    std::shared_ptr<const pchip> f_;
    std::vector<double> x_;
    std::vector<double> cum_;
    int w_ = 0;
};

// Cumulative of a raw (non-tabulated) evaluator over a graded node set, with
// the first cell handled by singularity-tolerant quadrature (the integrand may
// be ~ x^{-beta} there).  Used for custom-triplet mu_bar integrals.
class cumulative_of_evaluator {
public:
    cumulative_of_evaluator() = default;

    cumulative_of_evaluator(std::function<double(double)> f, std::vector<double> nodes)
        : f_(std::move(f)), x_(std::move(nodes)) {
        cum_.resize(x_.size(), 0.0);
        boost::math::quadrature::tanh_sinh<double> ts(12);
        cum_[1] = ts.integrate(f_, 0.0, x_[1], 1e-12);
        for (std::size_t j = 1; j + 1 < x_.size(); ++j)
            cum_[j + 1] = cum_[j] + integrate_gl5_cell(f_, x_[j], x_[j + 1]);
    }

    double operator()(double xq) const {
        if (xq <= x_.front()) return 0.0;
        if (xq <= x_[1]) {
            boost::math::quadrature::tanh_sinh<double> ts(12);
            return ts.integrate(f_, 0.0, xq, 1e-12);
        }
        if (xq >= x_.back()) return cum_.back() + integrate_gl5_cell(f_, x_.back(), xq);
        const std::size_t j = static_cast<std::size_t>(
                                  std::upper_bound(x_.begin(), x_.end(), xq) - x_.begin()) -
                              1;
        return cum_[j] + integrate_gl5_cell(f_, x_[j], xq);
    }

private:
    std::function<double(double)> f_;
    std::vector<double> x_;
    std::vector<double> cum_;
};

void require_positive_arg(double x, const char* what) {
    if (!(x > 0)) {
        std::ostringstream os;
        os << what << ": argument must be > 0 (got " << x << ")";
        throw validation_error(os.str());
    }
}

// Leading power of f at infinity, f(lambda) ~ c lambda^alpha: exact for
// stable mixtures, a deep log-slope estimate for custom triplets.
struct leading_power {
    double alpha;
    double c;
};

leading_power lead_of(const bernstein_spec& spec) {
    if (spec.kind() != family_kind::custom_triplet) {
        const auto& t = spec.terms().back();  // terms sorted by alpha
        return {t.alpha, t.c};
    }
    const double big = 1e12, h = std::exp(1.0);
    const double alpha = 0.5 * std::log(spec.eval(big * h) / spec.eval(big / h));
    if (!(alpha > 1e-3 && alpha < 1.0 - 1e-3))
        throw certification_error(
            "build_pair: could not identify the leading power of f at infinity "
            "(log-slope estimate out of (0,1))");
    return {alpha, spec.eval(big) / std::pow(big, alpha)};
}

// sup of mu_bar * K on (0, T]: graded grid plus dyadic refinement toward 0.
double contraction_sup(const std::function<double(double)>& mu_bar,
                       const std::function<double(double)>& K, double T) {
    double m = 0.0;
    for (double x : graded_nodes(T, 256, 2.0))
        if (x > 0) m = std::max(m, mu_bar(x) * K(x));
    // Dyadic refinement: the sup and the limsup at 0 are interchangeable for
    // the contraction decision, so double toward 0 until the running max
    // settles.
    double prev = m;
    for (int j = 1; j <= 60; ++j) {
        const double x = T * std::ldexp(1.0, -j);
        m = std::max(m, mu_bar(x) * K(x));
        if (j >= 8 && std::abs(m - prev) < 1e-10) break;
        prev = m;
    }
    return m;
}

} // namespace

sonine_pair build_pair(const bernstein_spec& spec, double T) {
    if (!(T > 0)) throw validation_error("build_pair: horizon T must be positive");
    const auto rep = check_assumptions(spec);
    if (!rep.a1_pass || !rep.a2_pass)
        throw validation_error("build_pair: spec is not admissible: " + rep.notes);

    sonine_pair p;
    p.family = spec;
    p.horizon = T;

    if (spec.kind() == family_kind::stable) {
        const double a = spec.terms()[0].alpha;
        const double g1ma = gamma_fn(1.0 - a);  // Gamma(1-alpha)
        const double ga = gamma_fn(a);
        const double g2ma = gamma_fn(2.0 - a);
        p.provenance = pair_provenance::analytic;
        p.mu_bar = [a, g1ma](double x) {
            require_positive_arg(x, "mu_bar");
            return std::pow(x, -a) / g1ma;
        };
        p.k = [a, ga](double x) {
            require_positive_arg(x, "k");
            return std::pow(x, a - 1.0) / ga;
        };
        p.K = [a, ga](double x) {
            return x <= 0 ? 0.0 : std::pow(x, a) / (a * ga);  // = x^a / Gamma(1+a)
        };
        p.mu_bar_integral = [a, g2ma](double x) {
            return x <= 0 ? 0.0 : std::pow(x, 1.0 - a) / g2ma;
        };
        p.mu_smoment = [a, g2ma](double x) {
            return x <= 0 ? 0.0 : a * std::pow(x, 1.0 - a) / g2ma;
        };
        p.k_moment = [a, ga](double x) {
            return x <= 0 ? 0.0 : std::pow(x, a + 1.0) / ((a + 1.0) * ga);
        };
    } else {
        p.provenance = pair_provenance::inverted;

        // --- mu side -------------------------------------------------------
        p.mu_bar = [spec](double x) { return spec.levy_tail(x); };
        if (spec.kind() == family_kind::stable_mixture) {
            p.mu_bar_integral = [spec](double x) { return spec.levy_tail_integral(x); };
            const auto terms = spec.terms();
            p.mu_smoment = [terms](double x) {
                if (x <= 0) return 0.0;
                double s = 0.0;
                for (const auto& t : terms)
                    s += t.c * t.alpha * std::pow(x, 1.0 - t.alpha) / gamma_fn(2.0 - t.alpha);
                return s;
            };
        } else {
            // Custom tails: one cumulative table, then the moment identity
            //   int_0^x s mu(ds) = int_0^x mu_bar - x mu_bar(x)
            // (integration by parts; the boundary term vanishes under A1).
            auto mu_int = std::make_shared<const cumulative_of_evaluator>(
                p.mu_bar, graded_nodes(2.5 * T, 2048, 3.0));
            p.mu_bar_integral = [mu_int](double x) { return (*mu_int)(x); };
            auto mu_bar = p.mu_bar;
            p.mu_smoment = [mu_int, mu_bar](double x) {
                return x <= 0 ? 0.0 : (*mu_int)(x) - x * mu_bar(x);
            };
        }

        // --- k side: Gaver-Stehfest inversion of 1/f -----------------------
        // k(x) ~ lead_c * x^{amax-1} as x -> 0 (Tauberian: 1/f ~ lambda^{-amax}/c).
        // The singular lead is handled in closed form; only the continuous
        // remainder is tabulated and interpolated.
        const auto lp = lead_of(spec);
        const double amax = lp.alpha;
        const double lead_c = 1.0 / (lp.c * gamma_fn(amax));

        laplace::transform_evaluator recip{
            [spec](double l) { return 1.0 / spec.eval(l); },
            laplace::transform_evaluator::smoothness::completely_monotone};

        const std::size_t M_tab = 4096;
        std::vector<double> nodes = graded_nodes(2.5 * T, M_tab, 3.0);
        std::vector<double> rem(nodes.size(), 0.0);
        for (std::size_t j = 1; j < nodes.size(); ++j)
            rem[j] = laplace::invert(recip, nodes[j]) -
                     lead_c * std::pow(nodes[j], amax - 1.0);

        auto k_rem = std::make_shared<const pchip>(nodes, rem);
        auto K_rem = std::make_shared<const cumulative_of_pchip>(k_rem, nodes, 0);
        auto km_rem = std::make_shared<const cumulative_of_pchip>(k_rem, nodes, 1);

        p.k = [lead_c, amax, k_rem](double x) {
            require_positive_arg(x, "k");
            return lead_c * std::pow(x, amax - 1.0) + (*k_rem)(x);
        };
        p.K = [lead_c, amax, K_rem](double x) {
            return x <= 0 ? 0.0 : lead_c * std::pow(x, amax) / amax + (*K_rem)(x);
        };
        p.k_moment = [lead_c, amax, km_rem](double x) {
            return x <= 0 ? 0.0
                          : lead_c * std::pow(x, amax + 1.0) / (amax + 1.0) + (*km_rem)(x);
        };
    }

    p.q = contraction_sup(p.mu_bar, p.K, T);
    return p;
}

double sonine_residual_at(const sonine_pair& pair, double x) {
    if (!(x > 0) || x > pair.horizon * (1.0 + 1e-9))
        throw validation_error("sonine_residual: points must lie in (0, T]");
    // Split at the midpoint so each half-integral has exactly one endpoint
    // singularity (k at s = 0, mu_bar at s = x), both at the lower limit
    // after substitution; tanh-sinh absorbs integrable endpoint blowup.
    boost::math::quadrature::tanh_sinh<double> ts(12);
    const auto& mu_bar = pair.mu_bar;
    const auto& k = pair.k;
    const double half = 0.5 * x;
    const double lower = ts.integrate(
        [&](double s) { return mu_bar(x - s) * k(s); }, 0.0, half, 1e-10);
    const double upper = ts.integrate(
        [&](double u) { return mu_bar(u) * k(x - u); }, 0.0, half, 1e-10);
    return std::abs(lower + upper - 1.0);
}

double sonine_residual(const sonine_pair& pair, const std::vector<double>& grid) {
    if (grid.empty()) throw validation_error("sonine_residual: empty grid");
    double worst = 0.0;
    for (double x : grid) worst = std::max(worst, sonine_residual_at(pair, x));
    return worst;
}

double contraction_constant(const sonine_pair& pair, double T) {
    if (!(T > 0)) throw validation_error("contraction_constant: T must be positive");
    if (T > 2.0 * pair.horizon)
        throw validation_error(
            "contraction_constant: pair evaluators are not trusted past twice the build horizon");
    const double q = contraction_sup(pair.mu_bar, pair.K, T);
    if (q >= 1.0) {
        std::ostringstream os;
        os << "censoring-condition-violated: sup mu_bar(x) K(x) = " << q
           << " >= 1 on (0, " << T << "]";
        throw certification_error(os.str());
    }
    return q;
}

} // namespace bfc
