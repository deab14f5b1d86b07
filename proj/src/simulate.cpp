#include "bfc/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "bfc/math_util.hpp"
#include "bfc/operators.hpp"
#include "bfc/solvers.hpp"

namespace bfc {

// ---------------------------------------------------------------------------
// RNG kit
// ---------------------------------------------------------------------------

std::uint64_t path_seed(std::uint64_t master_seed, std::uint64_t path_id) {
    // splitmix64 finalizer of (master + id * golden); a counter-based split,
    // so path i's stream does not depend on how many paths run before it.
    std::uint64_t x = master_seed + path_id * 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

rng_stream::rng_stream(std::uint64_t seed) : eng_(seed) {
    eng_.discard(8);  // decorrelate low-entropy (counter-derived) seeds
}

std::uint64_t rng_stream::raw() { return eng_(); }

double rng_stream::uniform() {
    // 53-bit mantissa shifted half a step into the open interval (0,1),
    // so log(u) and pow(u, negative) are always finite.
    return (raw() >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

double rng_stream::exponential() { return -std::log(uniform()); }

double rng_stream::normal() {
    // Marsaglia polar method without caching the second variate: one call,
    // one variate, so the stream layout is independent of call parity.
    for (;;) {
        const double v1 = 2.0 * uniform() - 1.0;
        const double v2 = 2.0 * uniform() - 1.0;
        const double r2 = v1 * v1 + v2 * v2;
        if (r2 >= 1.0 || r2 == 0.0) continue;
        return v1 * std::sqrt(-2.0 * std::log(r2) / r2);
    }
}

double rng_stream::gamma(double shape) {
    if (!(shape > 0.0))
        throw validation_error("rng_stream::gamma: shape must be > 0");
    if (shape < 1.0) {
        // Marsaglia-Tsang shape boost: G_a = G_{a+1} * U^{1/a} in law.
        const double g = gamma(shape + 1.0);
        return g * std::pow(uniform(), 1.0 / shape);
    }
    // Marsaglia-Tsang squeeze for shape >= 1.
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double rng_stream::beta(double a, double b) {
    for (;;) {
        const double ga = gamma(a);
        const double gb = gamma(b);
        if (ga + gb > 0.0) return ga / (ga + gb);
    }
}

// ---------------------------------------------------------------------------
// Stable samplers (Kanter's representation and its polynomial tilt)
// ---------------------------------------------------------------------------

namespace {

// log of Zolotarev's function
//   A(theta) = [ sin(alpha theta)^alpha sin((1-alpha)theta)^(1-alpha)
//                / sin(theta) ]^(1/(1-alpha)),
// increasing on (0, pi) with A(0+) = alpha^(alpha/(1-alpha)) (1-alpha).
double ln_kanter_a(double alpha, double theta) {
    const double s1 = std::log(std::sin(alpha * theta));
    const double s2 = std::log(std::sin((1.0 - alpha) * theta));
    const double s3 = std::log(std::sin(theta));
    return (alpha * s1 + (1.0 - alpha) * s2 - s3) / (1.0 - alpha);
}

double ln_kanter_a0(double alpha) {
    // lim theta->0 of ln A(theta): the minimum of A on (0, pi).
    return (alpha * std::log(alpha) + (1.0 - alpha) * std::log(1.0 - alpha)) /
           (1.0 - alpha);
}

void require_alpha(double alpha, const char* who) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw validation_error(std::string(who) + ": alpha must lie in (0,1)");
}

std::string format_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

double sample_stable(double alpha, double scale, rng_stream& rng) {
    require_alpha(alpha, "sample_stable");
    if (!(scale > 0.0))
        throw validation_error("sample_stable: scale must be > 0");
    // Kanter: S = scale^{1/alpha} (A(Theta)/W)^{(1-alpha)/alpha},
    // Theta ~ U(0,pi), W ~ Exp(1).  Computed in the log domain: the ratio
    // A/W spans hundreds of orders of magnitude for small alpha.
    const double theta = pi * rng.uniform();
    const double w = rng.exponential();
    const double ln_a = ln_kanter_a(alpha, theta);
    return std::exp(std::log(scale) / alpha +
                    (1.0 - alpha) / alpha * (ln_a - std::log(w)));
}

double sample_first_passage(double alpha, double y, rng_stream& rng) {
    require_alpha(alpha, "sample_first_passage");
    if (!(y > 0.0))
        throw validation_error("sample_first_passage: level y must be > 0");
    // Inverse-stable identity: tau(y) = (y / S_1)^alpha in law.
    const double s1 = sample_stable(alpha, 1.0, rng);
    return std::exp(alpha * (std::log(y) - std::log(s1)));
}

double sample_passage_given_undershoot(double alpha, double p, rng_stream& rng) {
    require_alpha(alpha, "sample_passage_given_undershoot");
    if (!(p > 0.0))
        throw validation_error(
            "sample_passage_given_undershoot: gap p must be > 0");
    // Conditional law of the passage time given that the pre-jump position
    // sits p below the level; its density is proportional to t^{-1} times the
    // stable density at p, which the tilted Kanter representation
    //   T = p^alpha (W*/A(Theta*))^{1-alpha},
    //   W* ~ Gamma(2-alpha), Theta* ~ A(theta)^{alpha-1}-weighted on (0,pi),
    // samples exactly.  Theta* comes from rejection against U(0,pi) with
    // acceptance probability (A0/A(theta))^{1-alpha} <= 1.
    const double ln_a0 = ln_kanter_a0(alpha);
    double ln_a;
    for (;;) {
        const double theta = pi * rng.uniform();
        ln_a = ln_kanter_a(alpha, theta);
        if (std::log(rng.uniform()) < (1.0 - alpha) * (ln_a0 - ln_a)) break;
    }
    const double wstar = rng.gamma(2.0 - alpha);
    return std::exp(alpha * std::log(p) +
                    (1.0 - alpha) * (std::log(wstar) - ln_a));
}

// ---------------------------------------------------------------------------
// Undershoot (censoring position) sampler
// ---------------------------------------------------------------------------

undershoot_sampler::undershoot_sampler(const sonine_pair& pair, double y) : y_(y) {
    if (!(y > 0.0))
        throw validation_error("undershoot_sampler: level y must be > 0");
    if (y > pair.horizon * (1.0 + 1e-9))
        throw validation_error(
            "undershoot_sampler: level exceeds the pair horizon");

    // Symmetric graded nodes: dense near both endpoints, where the density
    // mu_bar(v) k(y-v) carries integrable singularities.
    constexpr std::size_t n_cells = 512;
    v_.resize(n_cells + 1);
    for (std::size_t j = 0; j <= n_cells; ++j) {
        const double u = static_cast<double>(j) / n_cells;
        const double w = u * u / (u * u + (1.0 - u) * (1.0 - u));
        v_[j] = y * w;
    }
    v_.front() = 0.0;
    v_.back() = y;

    c_.assign(n_cells + 1, 0.0);
    boost::math::quadrature::tanh_sinh<double> ts(12);
    for (std::size_t j = 0; j < n_cells; ++j) {
        const double lo = v_[j], hi = v_[j + 1];
        // Two-argument tanh_sinh form: vc is the signed distance to the
        // nearer cell endpoint (lo - v <= 0 on the left half, hi - v >= 0 on
        // the right half), exact even where v itself has rounded onto the
        // endpoint.  The integrand is singular at v = 0 and v = y, which
        // coincide with cell endpoints only in the first and last cell; the
        // naive distances v and y - v lose all precision below one ulp of y
        // there and silently drop the singular tip's mass (~eps^{1-alpha}).
        // The floor keeps tabulated pairs' transform inversions away from
        // arguments so small their Laplace arguments would overflow; the
        // mass chopped by it is at most ~1e-250^{1-alpha}, far below tol.
        const auto cell_density = [&](double v, double vc) {
            const double dist_origin = (vc <= 0.0 && lo == 0.0) ? -vc : v;
            const double dist_level = (vc >= 0.0 && hi == y) ? vc : y - v;
            if (dist_origin < 1e-250 || dist_level < 1e-250) return 0.0;
            return pair.mu_bar(dist_origin) * pair.k(dist_level);
        };
        c_[j + 1] = c_[j] + ts.integrate(cell_density, lo, hi, 1e-10);
    }
    mass_ = c_.back();

    // The total mass is exactly 1 by the convolution identity mu_bar * k = 1;
    // closed-form (analytic) pairs must reproduce it to quadrature accuracy,
    // tabulated (inverted) pairs to their table accuracy.
    const double tol = pair.provenance == pair_provenance::analytic ? 1e-6 : 1e-3;
    if (!(std::abs(mass_ - 1.0) <= tol))
        throw certification_error(
            "undershoot-normalization: cumulative mass at the level is " +
            format_double(mass_) + ", not 1 within " + format_double(tol));
    for (double& c : c_) c /= mass_;
    c_.front() = 0.0;
    c_.back() = 1.0;
    for (std::size_t j = 0; j + 1 < c_.size(); ++j)  // guard rounding
        c_[j + 1] = std::max(c_[j + 1], c_[j]);
}

double undershoot_sampler::sample(rng_stream& rng) const {
    const double u = rng.uniform();
    const auto it = std::lower_bound(c_.begin(), c_.end(), u);
    std::size_t hi = std::min<std::size_t>(
        static_cast<std::size_t>(it - c_.begin()), c_.size() - 1);
    if (hi == 0) hi = 1;
    const std::size_t lo = hi - 1;
    const double dc = c_[hi] - c_[lo];
    double v = dc > 0.0 ? v_[lo] + (u - c_[lo]) / dc * (v_[hi] - v_[lo]) : v_[hi];
    return std::min(std::max(v, y_ * 1e-15), y_ * (1.0 - 1e-15));
}

double undershoot_sampler::cdf(double v) const {
    if (v <= 0.0) return 0.0;
    if (v >= y_) return 1.0;
    const auto it = std::upper_bound(v_.begin(), v_.end(), v);
    const std::size_t j = static_cast<std::size_t>(it - v_.begin()) - 1;
    const double dv = v_[j + 1] - v_[j];
    const double t = dv > 0.0 ? (v - v_[j]) / dv : 0.0;
    return std::clamp(c_[j] + t * (c_[j + 1] - c_[j]), 0.0, 1.0);
}

double sample_undershoot(const sonine_pair& pair, double y, rng_stream& rng) {
    return undershoot_sampler(pair, y).sample(rng);
}

// ---------------------------------------------------------------------------
// Exact embedded chain (stable family)
// ---------------------------------------------------------------------------

chain_sample simulate_chain(const sonine_pair& pair, const bernstein_spec& spec,
                            double x0, double floor_delta, long n_max,
                            rng_stream& rng) {
    if (spec.kind() != family_kind::stable)
        throw validation_error(
            "simulate_chain: the exact chain needs the stable family's "
            "closed-form waiting laws; use the truncated path mode instead");
    const double alpha = spec.terms().front().alpha;
    if (!(x0 > 0.0)) throw validation_error("simulate_chain: x0 must be > 0");
    if (x0 > pair.horizon * (1.0 + 1e-9))
        throw validation_error("simulate_chain: x0 exceeds the pair horizon");
    if (!(pair.q < 1.0))
        throw certification_error(
            "censoring-condition-violated: contraction constant q >= 1");
    const double floor = floor_delta > 0.0 ? floor_delta : 1e-6 * x0;
    if (n_max <= 0) n_max = 100000;

    chain_sample out;
    out.x0 = x0;
    out.mode = sample_mode::exact_chain;
    double pos = x0;
    for (;;) {
        if (pos < floor) {
            out.stopped_at = stop_rule::floor_reached;
            break;
        }
        if (static_cast<long>(out.positions.size()) >= n_max) {
            out.stopped_at = stop_rule::step_limit;
            out.warning =
                "step-limit: chain did not reach the floor within n_max steps";
            break;
        }
        // Censoring position: V = pos * Beta(1-alpha, alpha), the normalized
        // law mu_bar(v) k(pos - v) dv by the scaling of the stable pair.
        double v = pos * rng.beta(1.0 - alpha, alpha);
        v = std::min(std::max(v, pos * 1e-300), pos * (1.0 - 1e-12));
        // Waiting time from the conditional law given the pre-jump gap; the
        // joint draw keeps path functionals mixing sigma and position unbiased.
        const double sigma = sample_passage_given_undershoot(alpha, pos - v, rng);
        out.positions.push_back(v);
        out.sigmas.push_back(sigma);
        out.tau_inf += sigma;
        pos = v;
    }
    // Mean lifetime still ahead of the final recorded position.
    out.remainder_estimate = pair.K(std::min(pos, pair.horizon)) / (1.0 - pair.q);
    return out;
}

// ---------------------------------------------------------------------------
// Epsilon-truncated path mode (general families)
// ---------------------------------------------------------------------------

chain_sample simulate_path_truncated(const bernstein_spec& spec, double x0,
                                     double eps, double t_horizon,
                                     rng_stream& rng, const sonine_pair* pair) {
    if (!(x0 > 0.0))
        throw validation_error("simulate_path_truncated: x0 must be > 0");
    if (!(eps > 0.0))
        throw validation_error("simulate_path_truncated: eps must be > 0");
    if (!(t_horizon > 0.0))
        throw validation_error("simulate_path_truncated: t_horizon must be > 0");
    const double rate = spec.levy_tail(eps);
    if (!(rate > 0.0) || !std::isfinite(rate))
        throw validation_error(
            "simulate_path_truncated: the Levy tail at eps must be positive "
            "and finite");
    // Compensating drift of the suppressed small jumps: integrating by parts,
    //   d_eps = int_0^eps s mu(ds) = int_0^eps mu_bar(s) ds - eps mu_bar(eps),
    // so no Levy density is needed.
    const double drift =
        std::max(0.0, spec.levy_tail_integral(eps) - eps * rate);

    const bool stable_tail = spec.kind() == family_kind::stable;
    const double alpha0 = spec.terms().front().alpha;
    const auto draw_jump = [&](double u) {
        // J = mu_bar^{-1}(u mu_bar(eps)) >= eps for u in (0,1).
        if (stable_tail) return eps * std::pow(u, -1.0 / alpha0);
        const double target = u * rate;
        double hi = 2.0 * eps;
        int grow = 0;
        while (spec.levy_tail(hi) > target && ++grow < 1100 && hi < 1e300)
            hi *= 2.0;
        if (spec.levy_tail(hi) > target) return hi;
        return bisect_monotone([&](double x) { return spec.levy_tail(x); },
                               eps, hi, target);
    };

    chain_sample out;
    out.x0 = x0;
    out.mode = sample_mode::truncated_path;
    const double floor = 1e-12 * x0;

    double pos = x0;
    double t = 0.0;
    double sigma_acc = 0.0;
    // Every exit path flushes the running segment, so tau_inf always equals
    // the total simulated time (the final flush is the absorption or
    // truncation record, not a censoring).
    const auto flush = [&](double position) {
        out.positions.push_back(position);
        out.sigmas.push_back(sigma_acc);
        out.tau_inf += sigma_acc;
        sigma_acc = 0.0;
    };

    const long max_events = 50000000;
    long events = 0;
    for (;;) {
        if (++events > max_events) {
            out.stopped_at = stop_rule::step_limit;
            out.warning =
                "event-limit: path exceeded the internal event cap before "
                "absorbing";
            flush(pos);
            break;
        }
        const double wait = rng.exponential() / rate;
        const double to_floor =
            drift > 0.0 ? (pos - floor) / drift
                        : std::numeric_limits<double>::infinity();
        const double to_horizon = t_horizon - t;
        if (to_floor <= wait && to_floor <= to_horizon) {
            // The compensating drift creeps to (numerical) zero first.
            t += to_floor;
            sigma_acc += to_floor;
            pos = floor;
            out.stopped_at = stop_rule::floor_reached;
            flush(pos);
            break;
        }
        if (to_horizon <= wait) {
            t = t_horizon;
            sigma_acc += to_horizon;
            pos -= drift * to_horizon;
            out.stopped_at = stop_rule::step_limit;
            out.warning =
                "truncated-sample: time horizon reached before absorption";
            flush(pos);
            break;
        }
        t += wait;
        sigma_acc += wait;
        pos -= drift * wait;
        const double jump = draw_jump(rng.uniform());
        if (pos - jump <= 0.0) {
            // The jump would cross zero: it is suppressed and the path is
            // pieced out from the pre-jump position — one censoring event.
            flush(pos);
            continue;
        }
        pos -= jump;
        if (pos < floor) {
            out.stopped_at = stop_rule::floor_reached;
            flush(pos);
            break;
        }
    }
    if (pair != nullptr)
        out.remainder_estimate =
            pair->K(std::min(pos, pair->horizon)) / (1.0 - pair->q);
    return out;
}

// ---------------------------------------------------------------------------
// Parallel drivers
// ---------------------------------------------------------------------------

namespace {

template <class OnePath>
std::vector<chain_sample> run_parallel(long n_paths, std::uint64_t master_seed,
                                       int n_threads, OnePath&& one_path) {
    if (n_paths < 0)
        throw validation_error("simulate: n_paths must be >= 0");
    std::vector<chain_sample> out(static_cast<std::size_t>(n_paths));
    if (n_paths == 0) return out;

    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    long nt = n_threads > 0 ? n_threads : std::clamp(hw, 1, 16);
    nt = std::min<long>(nt, n_paths);

    std::atomic<long> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const auto worker = [&]() {
        for (;;) {
            const long i = next.fetch_add(1);
            if (i >= n_paths) return;
            try {
                rng_stream rng(path_seed(master_seed, static_cast<std::uint64_t>(i)));
                out[static_cast<std::size_t>(i)] = one_path(rng);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(n_paths);
                return;
            }
        }
    };
    if (nt == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(nt));
        for (long k = 0; k < nt; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

}  // namespace

std::vector<chain_sample> simulate_chain_many(const sonine_pair& pair,
                                              const bernstein_spec& spec,
                                              double x0, double floor_delta,
                                              long n_max, long n_paths,
                                              std::uint64_t master_seed,
                                              int n_threads) {
    return run_parallel(n_paths, master_seed, n_threads, [&](rng_stream& rng) {
        return simulate_chain(pair, spec, x0, floor_delta, n_max, rng);
    });
}

std::vector<chain_sample> simulate_path_many(const bernstein_spec& spec,
                                             double x0, double eps,
                                             double t_horizon, long n_paths,
                                             std::uint64_t master_seed,
                                             int n_threads,
                                             const sonine_pair* pair) {
    return run_parallel(n_paths, master_seed, n_threads, [&](rng_stream& rng) {
        return simulate_path_truncated(spec, x0, eps, t_horizon, rng, pair);
    });
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

namespace {

double common_start(const std::vector<chain_sample>& samples, const char* who) {
    if (samples.empty())
        throw validation_error(std::string(who) + ": no samples");
    const double x0 = samples.front().x0;
    for (const auto& s : samples)
        if (s.x0 != x0)
            throw validation_error(
                std::string(who) +
                ": domain error - samples mix different starting points");
    return x0;
}

struct mean_se {
    double mean = 0.0;
    double se = 0.0;
};

mean_se reduce(const std::vector<double>& values) {
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    mean_se r;
    r.mean = mean;
    r.se = values.size() > 1 ? std::sqrt(ss / (n * (n - 1.0))) : 0.0;
    return r;
}

}  // namespace

estimator_report estimate_occupation(const sonine_pair& pair,
                                     const std::vector<chain_sample>& samples,
                                     const grid_function& g) {
    const double x0 = common_start(samples, "estimate_occupation");
    g.require_fully_defined("estimate_occupation");
    if (x0 > g.T() * (1.0 + 1e-12))
        throw validation_error(
            "estimate_occupation: domain error - x0 lies outside the grid of g");

    // Analytic excursion expectation I g on g's own grid; the estimator sums
    // it over the visited censoring positions, including the n = 0 term at x0.
    operator_scheme scheme(pair, g.x);
    const grid_function ig = scheme.rl_integral(g);

    std::vector<double> per_path;
    per_path.reserve(samples.size());
    for (const auto& s : samples) {
        double acc = ig(x0);
        for (double p : s.positions) acc += ig(p);
        per_path.push_back(acc);
    }
    const mean_se r = reduce(per_path);

    estimator_report report;
    report.name = "occupation";
    report.estimate = r.mean;
    report.std_error = r.se;
    report.n_paths = static_cast<long>(samples.size());
    const series_solution comp = scheme.censored_integral(g, 1e-8);
    report.comparator = comp.solution(x0);
    report.zscore = (r.mean - *report.comparator) / std::max(r.se, 1e-300);
    return report;
}

std::vector<estimator_report> estimate_lifetime_lt(
    const sonine_pair& pair, const std::vector<chain_sample>& samples,
    const std::vector<double>& lambdas, double tol) {
    const double x0 = common_start(samples, "estimate_lifetime_lt");
    for (const auto& s : samples)
        if (s.mode != sample_mode::exact_chain)
            throw validation_error(
                "estimate_lifetime_lt: exact-chain samples required (path "
                "truncation biases the lifetime transform)");

    std::vector<estimator_report> reports;
    reports.reserve(lambdas.size());
    for (double lambda : lambdas) {
        if (lambda < 0.0)
            throw validation_error(
                "estimate_lifetime_lt: lambda must be >= 0");
        std::vector<double> values;
        values.reserve(samples.size());
        for (const auto& s : samples)
            values.push_back(std::exp(-lambda * s.tau_inf));
        const mean_se r = reduce(values);

        estimator_report report;
        report.name = "lifetime_lt(lambda=" + format_double(lambda) + ")";
        report.estimate = r.mean;
        report.std_error = r.se;
        report.n_paths = static_cast<long>(samples.size());
        report.comparator = lifetime_laplace(pair, x0, lambda, tol);
        report.zscore =
            (r.mean - *report.comparator) / std::max(r.se, 1e-300);
        reports.push_back(std::move(report));
    }
    return reports;
}

double empirical_kn_test(const std::vector<chain_sample>& samples, int n,
                         const sonine_pair& pair, double x0) {
    if (n < 1)
        throw validation_error("empirical_kn_test: n must be >= 1");
    if (!(x0 > 0.0))
        throw validation_error("empirical_kn_test: x0 must be > 0");
    std::vector<double> vals;
    vals.reserve(samples.size());
    for (const auto& s : samples) {
        if (s.x0 != x0)
            throw validation_error(
                "empirical_kn_test: domain error - samples mix different "
                "starting points");
        // For truncated paths the final recorded event is the absorption (or
        // truncation), not a censoring; only entries before it qualify.
        const std::size_t censor_count =
            s.mode == sample_mode::exact_chain
                ? s.positions.size()
                : (s.positions.empty() ? 0 : s.positions.size() - 1);
        if (censor_count >= static_cast<std::size_t>(n))
            vals.push_back(s.positions[static_cast<std::size_t>(n) - 1]);
    }
    if (vals.size() < 1000)
        throw validation_error(
            "insufficient-data: only " + std::to_string(vals.size()) +
            " samples reach censoring step " + std::to_string(n));
    std::sort(vals.begin(), vals.end());

    std::vector<double> cdf_at(vals.size());
    if (n == 1) {
        const undershoot_sampler us(pair, x0);
        for (std::size_t i = 0; i < vals.size(); ++i)
            cdf_at[i] = us.cdf(vals[i]);
    } else {
        // Law of the n-th censoring position: k_n(x0, v) built by n-1
        // applications of the one-step kernel
        //   k_{m+1}(x0, v) = mu_bar(v) int_v^{x0} k(y - v) k_m(x0, y) dy
        // to the closed first step k_1(x0, v) = mu_bar(v) k(x0 - v).
        boost::math::quadrature::tanh_sinh<double> ts(12);
        constexpr std::size_t n_cells = 512;
        std::vector<double> nodes(n_cells + 1);
        for (std::size_t j = 0; j <= n_cells; ++j) {
            const double u = static_cast<double>(j) / n_cells;
            const double w = u * u / (u * u + (1.0 - u) * (1.0 - u));
            nodes[j] = x0 * w;
        }
        nodes.front() = 0.0;
        nodes.back() = x0;

        // rho is the current step's density, called as rho(y, dist_top) with
        // dist_top the distance x0 - y, supplied exactly by the quadrature's
        // endpoint complement where y itself has rounded onto x0.  Levels
        // 2..n-1 are tabulated through the smooth factor h_m = rho_m / mu_bar
        // (finite at both endpoints for m >= 2), so the 0-endpoint power
        // singularity is carried exactly by mu_bar itself.
        std::function<double(double, double)> rho = [&pair](double y,
                                                            double dist_top) {
            if (y < 1e-250 || dist_top < 1e-250) return 0.0;
            return pair.mu_bar(y) * pair.k(dist_top);
        };
        // int_v^{x0} k(y - v) rho(y) dy via the two-argument tanh_sinh form:
        // yc = v - y <= 0 on the lower half and yc = x0 - y >= 0 on the upper
        // half, exact where y rounds onto an endpoint; both endpoints carry
        // integrable singularities of the integrand.  The floor keeps
        // tabulated pairs' transform inversions away from arguments whose
        // Laplace arguments would overflow; mass lost to it is negligible.
        const auto convolve = [&ts, &pair, x0](
                                  const std::function<double(double, double)>& r,
                                  double v, double tol) {
            if (!(x0 - v > 0.0)) return 0.0;
            return ts.integrate(
                [&](double y, double yc) {
                    const double dist_v = yc <= 0.0 ? -yc : y - v;
                    const double dist_top = yc >= 0.0 ? yc : x0 - y;
                    if (dist_v < 1e-250 || dist_top < 1e-250) return 0.0;
                    return pair.k(dist_v) * r(y, dist_top);
                },
                v, x0, tol);
        };
        for (int m = 2; m < n; ++m) {
            // h_m grows only logarithmically toward 0, so it is tabulated on
            // the interior nodes and extended linearly below the first one;
            // the power singularity itself is carried exactly by mu_bar.
            std::vector<double> hx(nodes.begin() + 1, nodes.end());
            std::vector<double> h(hx.size(), 0.0);
            for (std::size_t i = 0; i + 1 < hx.size(); ++i)
                h[i] = convolve(rho, hx[i], 1e-9);
            h.back() = 0.0;
            pchip h_interp(std::move(hx), std::move(h));
            rho = [&pair, h_interp](double y, double) {
                if (y < 1e-250) return 0.0;
                return pair.mu_bar(y) * std::max(0.0, h_interp(y));
            };
        }

        // Final level: cumulative of rho_n(v) = mu_bar(v) * inner(v) by
        // per-cell quadrature of the (still singular at 0) exact integrand;
        // the first cell recovers the distance to 0 from the endpoint
        // complement, and v rounding onto x0 in the last cell degenerates the
        // inner integral to an empty interval, which convolve maps to 0.
        std::vector<double> cum(nodes.size(), 0.0);
        for (std::size_t j = 0; j + 1 < nodes.size(); ++j) {
            const double lo = nodes[j], hi = nodes[j + 1];
            const auto rho_n_cell = [&](double v, double vc) {
                const double dist0 = (vc <= 0.0 && lo == 0.0) ? -vc : v;
                if (dist0 < 1e-250) return 0.0;
                const double inner = convolve(rho, std::min(v, x0), 1e-9);
                return pair.mu_bar(dist0) * std::max(0.0, inner);
            };
            cum[j + 1] = cum[j] + ts.integrate(rho_n_cell, lo, hi, 1e-8);
        }
        const double mass = cum.back();
        if (!(std::abs(mass - 1.0) <= 1e-3))
            throw certification_error(
                "kn-normalization: step-" + std::to_string(n) +
                " law integrates to " + format_double(mass) +
                ", not 1 within 1e-3");
        for (double& c : cum) c /= mass;
        for (std::size_t j = 0; j + 1 < cum.size(); ++j)
            cum[j + 1] = std::max(cum[j + 1], cum[j]);
        cum.back() = 1.0;
        const pchip cdf_interp(std::move(nodes), std::move(cum));
        for (std::size_t i = 0; i < vals.size(); ++i)
            cdf_at[i] = std::clamp(cdf_interp(vals[i]), 0.0, 1.0);
    }

    const double d = ks_statistic(cdf_at);
    return ks_p_value(d, vals.size());
}

}  // namespace bfc
