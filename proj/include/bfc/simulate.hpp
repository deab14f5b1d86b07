#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bfc/bernstein.hpp"
#include "bfc/grid.hpp"
#include "bfc/sonine.hpp"

namespace bfc {

// ---------------------------------------------------------------------------
// Deterministic RNG kit
// ---------------------------------------------------------------------------

/// splitmix64 finalizer; used to derive independent per-path seeds from a
/// master seed by a counter-based split (parallel runs are order-independent).
std::uint64_t path_seed(std::uint64_t master_seed, std::uint64_t path_id);

/// One random stream: mt19937_64 plus variate transforms implemented here
/// (never std::*_distribution, whose output is implementation-defined), so
/// identical seeds give bit-identical streams on every platform.
class rng_stream {
public:
    explicit rng_stream(std::uint64_t seed);

    std::uint64_t raw();
    double uniform();                ///< in (0,1)
    double exponential();            ///< rate 1
    double normal();                 ///< standard; polar method, no caching
    double gamma(double shape);      ///< scale 1; Marsaglia-Tsang (+ boost for shape<1)
    double beta(double a, double b); ///< via two gammas

private:
    std::mt19937_64 eng_;
};

// ---------------------------------------------------------------------------
// Sample types
// ---------------------------------------------------------------------------

enum class stop_rule { floor_reached, step_limit };
enum class sample_mode { exact_chain, truncated_path };

/// One simulated censored path, reduced to its embedded chain: the censoring
/// positions S^c_{tau_n} (strictly inside (0, previous position)), the waiting
/// times sigma_n between censorings, and the accumulated lifetime.
struct chain_sample {
    double x0 = 0.0;
    std::vector<double> positions;  ///< S^c_{tau_n}, n = 1, 2, ...
    std::vector<double> sigmas;     ///< sigma_n = tau_n - tau_{n-1}
    double tau_inf = 0.0;           ///< sum(sigmas), exactly
    /// Mean remaining lifetime K(final position)/(1-q) beyond the recorded
    /// horizon; reported separately, never silently added to tau_inf.
    double remainder_estimate = 0.0;
    stop_rule stopped_at = stop_rule::floor_reached;
    sample_mode mode = sample_mode::exact_chain;
    std::string warning;            ///< empty when the stop rule was the floor
};

struct estimator_report {
    std::string name;
    double estimate = 0.0;
    double std_error = 0.0;         ///< sample std / sqrt(n_paths)
    long n_paths = 0;
    std::optional<double> comparator;  ///< analytic value, when available
    double zscore = 0.0;               ///< set iff comparator is set
};

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

/// One-sided alpha-stable variate with E exp(-lambda S) = exp(-t lambda^alpha)
/// (t = scale), by Kanter's representation S = t^{1/alpha} (A(U pi)/W)^{(1-alpha)/alpha}.
double sample_stable(double alpha, double scale, rng_stream& rng);

/// First passage time of the stable subordinator over level y:
/// tau(y) = (y / S_1)^alpha in distribution (marginal law).
double sample_first_passage(double alpha, double y, rng_stream& rng);

/// First passage time *conditioned on the pre-jump position* being p below
/// the level: density p_t(p)/k(p) over t.  Sampled exactly by the polynomially
/// tilted Kanter representation T = p^alpha (W*/A(Theta*))^{1-alpha} with
/// W* ~ Gamma(2-alpha) and Theta* sampled by rejection with weight
/// A(theta)^{alpha-1}.  Using this joint law (rather than the independent
/// marginals) keeps functionals of (sigma_n, positions) such as
/// E[exp(-lambda tau_inf)] unbiased.
double sample_passage_given_undershoot(double alpha, double p, rng_stream& rng);

/// Inverse-CDF sampler for the censoring-position density
/// k_1(y, v) = mu_bar(v) k(y - v) on (0, y): 512-node graded table of the
/// cumulative (computed by singularity-aware quadrature), linear inverse
/// interpolation within cells.  The endpoint cumulative equals 1 by the
/// Sonine identity; analytic pairs must reproduce it within 1e-6 and inverted
/// pairs within 1e-3 (then renormalized), else certification_error.
class undershoot_sampler {
public:
    undershoot_sampler(const sonine_pair& pair, double y);
    double sample(rng_stream& rng) const;
    double cdf(double v) const;            ///< normalized, clamped to [0,1]
    double endpoint_mass() const { return mass_; }
    double level() const { return y_; }

private:
    double y_;
    double mass_;                   ///< unnormalized cumulative at y
    std::vector<double> v_, c_;     ///< nodes and normalized cumulative
};

/// Convenience form (builds the table on every call — prefer the class in loops).
double sample_undershoot(const sonine_pair& pair, double y, rng_stream& rng);

// ---------------------------------------------------------------------------
// Path engines
// ---------------------------------------------------------------------------

/// Exact embedded chain of the censored decreasing subordinator (stable family
/// only: the waiting-time laws are available in closed form there).  Each step
/// samples the next position V = y * Beta(1-alpha, alpha) (the k_1(y,.) law)
/// and the waiting time from its conditional law given the pre-jump gap y - V.
/// Stops when the position drops below floor_delta (default 1e-6 x0 if <= 0)
/// or after n_max steps (then a non-convergence warning is set).
chain_sample simulate_chain(const sonine_pair& pair, const bernstein_spec& spec,
                            double x0, double floor_delta, long n_max,
                            rng_stream& rng);

/// Epsilon-truncated path mode for general A1/A2 families: excursions are
/// compound Poisson (jumps >= eps at rate mu_bar(eps), law sampled by inverse
/// CDF on the tail) plus the deterministic drift of the compensated small
/// jumps; a jump that would cross 0 is discarded and recorded as a censoring
/// (piecing-out).  Runs until the position creeps to (numerically) 0 or the
/// accumulated time exceeds t_horizon (then a truncated-sample warning).
/// If `pair` is given it supplies K and q for the remainder estimate.
chain_sample simulate_path_truncated(const bernstein_spec& spec, double x0,
                                     double eps, double t_horizon, rng_stream& rng,
                                     const sonine_pair* pair = nullptr);

/// Parallel drivers: paths are independent, seeded path_seed(master, i), and
/// written to slot i — results are identical for any thread count.
/// n_threads <= 0 picks a hardware default.
std::vector<chain_sample> simulate_chain_many(const sonine_pair& pair,
                                              const bernstein_spec& spec, double x0,
                                              double floor_delta, long n_max,
                                              long n_paths, std::uint64_t master_seed,
                                              int n_threads = 0);
std::vector<chain_sample> simulate_path_many(const bernstein_spec& spec, double x0,
                                             double eps, double t_horizon,
                                             long n_paths, std::uint64_t master_seed,
                                             int n_threads = 0,
                                             const sonine_pair* pair = nullptr);

// ---------------------------------------------------------------------------
// Estimators (fixed reduction order: path id)
// ---------------------------------------------------------------------------

/// Hybrid occupation estimator of the censored integral: per path
/// sum_n (I g)(S^c_{tau_n}) including the n = 0 term (I g)(x0), with I g the
/// analytic excursion expectation evaluated on g's grid.  Comparator:
/// censored_integral(g)(x0).
estimator_report estimate_occupation(const sonine_pair& pair,
                                     const std::vector<chain_sample>& samples,
                                     const grid_function& g);

/// Empirical Laplace transform of the lifetime at each lambda, with the
/// series value (lifetime_laplace) as comparator.  Exact-chain samples only.
std::vector<estimator_report> estimate_lifetime_lt(const sonine_pair& pair,
                                                   const std::vector<chain_sample>& samples,
                                                   const std::vector<double>& lambdas,
                                                   double tol = 1e-8);

/// Two-sided KS test of the n-th censoring positions against the analytic
/// law k_n(x0, .), the latter built by n-1 quadrature applications of the
/// one-step kernel to k_1.  Returns the p-value.  Fewer than 1000 samples
/// reaching step n is an insufficient-data error.
double empirical_kn_test(const std::vector<chain_sample>& samples, int n,
                         const sonine_pair& pair, double x0);

} // namespace bfc
