#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "bfc/errors.hpp"

namespace bfc {

/// One term c * lambda^alpha of a stable mixture.
struct mixture_term {
    double c;      ///< coefficient, > 0
    double alpha;  ///< exponent, in (0, 1)
};

/// User-supplied Lévy triplet (a, b, mu) for a Bernstein function
///   f(lambda) = a + b lambda + integral (1 - e^{-lambda x}) mu(dx),
/// with the measure given through its tail mu_bar(x) = mu((x, inf)).
struct custom_triplet {
    double a = 0.0;  ///< killing rate, >= 0
    double b = 0.0;  ///< drift, >= 0
    std::function<double(double)> mu_bar;              ///< required: tail of mu
    std::function<double(double)> m = nullptr;         ///< optional CM density of mu
    double m0 = std::numeric_limits<double>::infinity();  ///< mu((0,inf)) total mass
    double m1 = std::numeric_limits<double>::infinity();  ///< integral of x mu(dx)
    bool complete_bernstein = false;  ///< caller asserts mu has a CM density
};

enum class family_kind { stable, stable_mixture, custom_triplet };

/// A Bernstein function given by family + parameters.  Stable and mixture
/// families carry closed-form Lévy data; custom triplets evaluate f through
/// the numerically transformed tail.
class bernstein_spec {
public:
    static bernstein_spec stable(double alpha);
    static bernstein_spec mixture(std::vector<mixture_term> terms);
    static bernstein_spec custom(custom_triplet triplet);

    family_kind kind() const { return kind_; }
    double a() const { return a_; }
    double b() const { return b_; }
    /// Total mass m0 = mu((0,inf)) and first moment m1 = int x mu(dx); may be inf.
    double m0() const;
    double m1() const;
    bool is_complete_bernstein() const;

    double eval(double lambda) const;            ///< f(lambda), lambda > 0
    double operator()(double lambda) const { return eval(lambda); }
    double conjugate_eval(double lambda) const;  ///< f*(lambda) = lambda / f(lambda)

    /// Lévy tail mu_bar(x) = mu((x, inf)), x > 0.
    double levy_tail(double x) const;
    /// integral_0^x mu_bar(s) ds (finite under A1).
    double levy_tail_integral(double x) const;
    /// CM density m(x) of mu; throws validation_error if unavailable.
    double levy_density(double x) const;
    bool has_levy_density() const;

    /// Mixture structure; stable is a single term {1, alpha}.
    const std::vector<mixture_term>& terms() const;
    double alpha_min() const;
    double alpha_max() const;

    std::string describe() const;  ///< canonical one-line form for messages/hashes

private:
    bernstein_spec() = default;
    family_kind kind_ = family_kind::stable;
    double a_ = 0.0, b_ = 0.0;
    std::vector<mixture_term> terms_;   // stable/mixture
    custom_triplet custom_;             // custom only
};

/// Result of the admissibility scan: numerically observed limits and the
/// verdicts for assumptions
///   A1: f(0+) = 0, f(inf) = inf, f(x)/x -> inf at 0, f(x)/x -> 0 at inf
///   A2: the Lévy measure has a completely monotone density (f is CBF).
struct assumption_report {
    double f0_limit = 0.0;
    double f_over_x_at_0 = 0.0;
    double f_over_x_at_inf = 0.0;
    double f_at_inf = 0.0;
    bool a1_pass = false;
    bool a2_pass = false;
    std::string notes;
};

assumption_report check_assumptions(const bernstein_spec& f);

/// Conjugate-pair classification over the invariants (a>0?, b>0?, m0, m1):
/// the eight-row table for f x f* with
///   a* = 0 if a > 0, else 1/(b + m1)  (0 when m1 = inf)
///   b* = 0 if b > 0, else 1/(a + m0)  (0 when m0 = inf)
struct conjugate_classification {
    int case_id = 0;       ///< 1..8
    double a_star = 0.0;
    double b_star = 0.0;
    double m0 = 0.0, m1 = 0.0;  ///< inputs echoed
    std::string note;      ///< row description
};

conjugate_classification classify_conjugate(double a, double b, double m0, double m1);
conjugate_classification classify_conjugate(const bernstein_spec& f);

/// Yosida approximation f_n(lambda) = n f(lambda) / (n + f(lambda)).
/// Satisfies f_n <= f, increasing in n, and |f_n - f| <= f^2 / n.
std::function<double(double)> yosida_approx(const bernstein_spec& f, double n);

} // namespace bfc
