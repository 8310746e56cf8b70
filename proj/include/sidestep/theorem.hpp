#ifndef SIDESTEP_THEOREM_HPP
#define SIDESTEP_THEOREM_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "sidestep/error.hpp"
#include "sidestep/estimation.hpp"
#include "sidestep/models.hpp"
#include "sidestep/parallel.hpp"
#include "sidestep/polyexp.hpp"
#include "sidestep/shiftops.hpp"
#include "sidestep/spectral.hpp"

namespace sidestep {

/// Relative safety margin applied to kappa beyond its strict lower bound.
inline constexpr double kappa_margin = 0.05;

/// Parameters of the exceptional eigenvalue bound for given
/// (lambda0, lambda1, epsilon, alpha); all logarithms natural.
struct exceptional_params {
    double lambda0 = 0.0;
    double lambda1 = 0.0;
    double epsilon = 0.0;
    double alpha = 0.0;
    double kappa = 0.0;     // (1 + margin)(alpha + 1) / log((lambda0 + eps) / lambda0)
    double r0_bound = 0.0;  // r0 must strictly exceed this
    int r0 = 0;
    double slack_first = 0.0;  // -alpha - (1 - kappa log((l0+eps)/l0))
    double slack_second = 0.0; // -alpha - (-r0 + kappa log(l1/(l0+eps)))

    /// Margin of the strict inequality system at delta = delta' = theta = 0.
    double slack() const noexcept { return std::min(slack_first, slack_second); }

    /// theta0 = slack / (2 D #L); the weight D #L is only known once the
    /// annihilator is chosen.
    double theta0(double annihilator_weight) const noexcept
    {
        return slack() / (2.0 * std::max(1.0, annihilator_weight));
    }
};

inline double r0_lower_bound(double lambda0, double lambda1, double epsilon, double alpha)
{
    return alpha + (alpha + 1.0) * (std::log(lambda1) - std::log(lambda0 + epsilon)) /
                       (std::log(lambda0 + epsilon) - std::log(lambda0));
}

inline exceptional_params make_exceptional_params(double lambda0, double lambda1, double epsilon, double alpha)
{
    if (!(lambda0 > 0.0))
        throw error(errc::invalid_parameter, "lambda0 must be positive");
    if (!(epsilon > 0.0))
        throw error(errc::invalid_parameter, "epsilon must be positive");
    if (!(lambda1 > lambda0))
        throw error(errc::invalid_parameter, "lambda1 must exceed lambda0");
    if (!(alpha >= 0.0))
        throw error(errc::invalid_parameter, "alpha must be nonnegative");

    exceptional_params p{lambda0, lambda1, epsilon, alpha};
    const double gap = std::log((lambda0 + epsilon) / lambda0);
    const double spread = std::log(lambda1 / (lambda0 + epsilon));
    p.kappa = (1.0 + kappa_margin) * (alpha + 1.0) / gap;
    p.r0_bound = r0_lower_bound(lambda0, lambda1, epsilon, alpha);
    const double needed = alpha + p.kappa * spread;
    p.r0 = std::max(1, static_cast<int>(std::ceil(needed)) + 1);
    p.slack_first = -alpha - (-p.kappa * std::log(lambda0 + epsilon) + 1.0 + p.kappa * std::log(lambda0));
    p.slack_second =
        -alpha - (-p.kappa * std::log(lambda0 + epsilon) - static_cast<double>(p.r0) + p.kappa * std::log(lambda1));
    return p;
}

/// The nearest even integer to kappa log n (ties go up), at least 2.
inline int proof_trace_length(double kappa, long long n)
{
    const double x = kappa * std::log(static_cast<double>(n));
    const int k = 2 * static_cast<int>(std::floor(x / 2.0 + 0.5));
    return std::max(k, 2);
}

/// Parameters of the sidestepping argument at level j.
struct sidestep_params {
    double lambda0 = 0.0;
    double lambda1 = 0.0;
    int j = 0;
    double epsilon = 0.0;
    double epsilon_tilde = 0.0; // epsilon / 3
    double kappa0 = 0.0;
    double alpha_tilde = 0.0;
    int r_tilde = 0;
    exceptional_params inner;   // at (lambda0, lambda1, epsilon_tilde, alpha_tilde)
    int r1 = 0;
    double theta1 = 0.0;
    int d_tilde = 0;            // even

    /// lhs - rhs of kappa0 log(l0 + 2 eps~) - j - 1 >= kappa0 log(l1) + 1 - theta1 D.
    double d_tilde_slack(int d) const noexcept
    {
        return (kappa0 * std::log(lambda0 + 2.0 * epsilon_tilde) - j - 1.0) -
               (kappa0 * std::log(lambda1) + 1.0 - theta1 * d);
    }

    /// kappa0 log(l0 + 2 eps~) - j - 2 - kappa0 log(l0 + eps~); zero by construction.
    double kappa_equation_residual() const noexcept
    {
        return kappa0 * std::log(lambda0 + 2.0 * epsilon_tilde) - j - 2.0 -
               kappa0 * std::log(lambda0 + epsilon_tilde);
    }
};

/// annihilator_weight is D #L of the annihilator used to realize theta1.
inline sidestep_params make_sidestep_params(double lambda0, double lambda1, int j, double epsilon,
                                            double annihilator_weight = 1.0)
{
    if (!(lambda0 > 0.0) || !(epsilon > 0.0))
        throw error(errc::invalid_parameter, "lambda0 and epsilon must be positive");
    if (j < 0)
        throw error(errc::invalid_parameter, "j must be nonnegative");
    if (lambda0 + epsilon > lambda1 * (1.0 + 1e-15))
        throw error(errc::invalid_parameter, "need lambda0 + epsilon <= lambda1");

    sidestep_params p;
    p.lambda0 = lambda0;
    p.lambda1 = lambda1;
    p.j = j;
    p.epsilon = epsilon;
    p.epsilon_tilde = epsilon / 3.0;
    const double near = lambda0 + p.epsilon_tilde;
    const double far = lambda0 + 2.0 * p.epsilon_tilde;
    p.kappa0 = (j + 2.0) / std::log(far / near);
    p.alpha_tilde = j + 1.0 + p.kappa0 * std::log(lambda1) - p.kappa0 * std::log(far);
    p.r_tilde = j + 1 +
                static_cast<int>(std::ceil(p.kappa0 * std::log(lambda1 + p.epsilon_tilde) - p.kappa0 * std::log(far)));
    p.inner = make_exceptional_params(lambda0, lambda1, p.epsilon_tilde, p.alpha_tilde);
    p.r1 = std::max(p.r_tilde, p.inner.r0);
    p.theta1 = p.inner.theta0(annihilator_weight);

    int d = 2 * static_cast<int>(std::ceil((p.alpha_tilde + 1.0) / p.theta1 / 2.0));
    d = std::max(d, 2);
    while (d > 2 && p.d_tilde_slack(d - 2) >= 0.0)
        d -= 2;
    while (p.d_tilde_slack(d) < 0.0)
        d += 2;
    p.d_tilde = d;
    return p;
}

/// One checked inequality lhs <= rhs.
struct certificate {
    std::string kind;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    bool pass = false;
    // context
    long long n = 0;
    int k = 0;
    int d = 0;
    std::vector<cplx> points;
    double theta = 0.0;
    int level = -1;
    double imag_residue = 0.0;
    std::string note;
};

inline bool certificate_passes(double lhs, double rhs)
{
    return rhs - lhs >= -1e-9 * std::max({std::abs(lhs), std::abs(rhs), 1.0});
}

inline certificate make_certificate(std::string kind, double lhs, double rhs)
{
    certificate c;
    c.kind = std::move(kind);
    c.lhs = lhs;
    c.rhs = rhs;
    c.slack = rhs - lhs;
    c.pass = certificate_passes(lhs, rhs);
    return c;
}

/// Checks
///   n^{-theta D #L} (lambda0 + eps)^k Eout[B_{lambda0+eps}(0) u B_{n^-theta}(L)]
///     <= Ann_{D,L}(S) E[RealTrace(M, k)]
/// for the empirical measure of `samples`. The right side is evaluated with
/// quad-precision arithmetic, because the shift sum cancels heavily.
inline certificate certify_markov(std::span<const spectrum_sample> samples, int d, std::span<const cplx> points,
                                  double theta, double epsilon, double lambda0, int k, long long n)
{
    if (d < 0 || d % 2 != 0)
        throw error(errc::invalid_parameter, "D must be even");
    if (k < 1 || k % 2 != 0)
        throw error(errc::invalid_parameter, "k must be a positive even integer");
    if (!(theta > 0.0) || !(epsilon > 0.0))
        throw error(errc::invalid_parameter, "theta and epsilon must be positive");
    if (!conjugation_closed(points))
        throw error(errc::invalid_parameter, "L must be closed under conjugation");
    if (samples.empty())
        throw error(errc::invalid_parameter, "no samples");

    const auto weights = detail::normalized_weights(samples);
    const double radius = std::pow(static_cast<double>(n), -theta);
    const auto reg = region::around(lambda0 + epsilon, std::vector<cplx>(points.begin(), points.end()), radius);
    const double eout = ein_eout(samples, reg).eout;
    const double weight = static_cast<double>(d) * static_cast<double>(points.size());
    const double lhs = std::pow(static_cast<double>(n), -theta * weight) * std::pow(lambda0 + epsilon, k) * eout;

    const auto ann = real_annihilator<quad>(d, points);
    const std::size_t len = ann.degree() + 1;
    std::vector<quad> real_trace(len, quad(0));
    std::vector<cplx> real_trace_c(len, cplx(0.0));
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const quad w(weights[s]);
        for (cplx z : samples[s].eigenvalues) {
            if (!is_real(z))
                continue;
            const quad x(z.real());
            quad p = ipow(x, k);
            double pd = ipow(z.real(), k);
            for (std::size_t i = 0; i < len; ++i, p *= x, pd *= z.real()) {
                real_trace[i] += w * p;
                real_trace_c[i] += weights[s] * pd;
            }
        }
    }
    const quad rhs = sidestep::apply(ann, std::span<const quad>(real_trace)).front();

    auto cert = make_certificate("markov", lhs, static_cast<double>(rhs));
    cert.n = n;
    cert.k = k;
    cert.d = d;
    cert.points.assign(points.begin(), points.end());
    cert.theta = theta;
    // the same quantity through complex double coefficients; its imaginary part must vanish
    const cplx rhs_c = sidestep::apply(annihilator(d, points), std::span<const cplx>(real_trace_c)).front();
    double scale = 0.0;
    for (std::size_t i = 0; i < len; ++i)
        scale += std::abs(real_trace_c[i]);
    cert.imag_residue = std::abs(rhs_c.imag()) / std::max(1.0, scale);
    return cert;
}

inline certificate certify_markov(const std::vector<spectrum_sample>& samples, int d, const std::vector<cplx>& points,
                                  double theta, double epsilon, double lambda0, int k, long long n)
{
    return certify_markov(std::span<const spectrum_sample>(samples), d, std::span<const cplx>(points), theta, epsilon,
                          lambda0, k, n);
}

namespace detail {

/// Growth of a sequence from the slope of log|f(k)| over the nonzero tail
/// entries (least squares in k), so constant factors do not bias short
/// windows. With a single nonzero entry it falls back to |f(k)|^(1/k).
inline growth_estimate tail_ratio_growth(std::span<const double> f, long long first_k, double tail_fraction)
{
    const auto plain = growth_rate(f, first_k, tail_fraction);
    std::vector<double> ks, logs;
    for (long long k = plain.first_k; k <= plain.last_k; ++k) {
        const double v = std::abs(f[static_cast<std::size_t>(k - first_k)]);
        if (v > 0.0) {
            ks.push_back(static_cast<double>(k));
            logs.push_back(std::log(v));
        }
    }
    if (ks.size() < 2)
        return plain;
    double mk = 0.0, ml = 0.0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        mk += ks[i];
        ml += logs[i];
    }
    mk /= static_cast<double>(ks.size());
    ml /= static_cast<double>(ks.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        sxy += (ks[i] - mk) * (logs[i] - ml);
        sxx += (ks[i] - mk) * (ks[i] - mk);
    }
    return {std::exp(sxy / sxx), plain.first_k, plain.last_k};
}

} // namespace detail

struct slack_point {
    long long n = 0;
    int k = 0;
    double value = 0.0; // |Ann(S) E[RealTrace](k)|
    double bound = 0.0; // A (l0+delta)^k n + B (l1+delta)^k n^-r
    double slack = 0.0;
};

struct real_trace_bound_report {
    bool pass = false;
    std::vector<certificate> levels; // growth of Ann(S) c_i against lambda0 + delta, one per level
    double a = 0.0;
    double b = 0.0;
    std::vector<slack_point> profile;
};

/// Empirical form of |Ann_{D,L}(S) E[RealTrace](k)| <= f0(k) n + f1(k) n^-r.
///
/// The decisive check is per level: Ann_{D,L}(S) c_i must be of growth
/// lambda0 for every i < r, and so must the coefficient of n when the fit
/// has one. Values within `significance` propagated
/// standard errors of zero, or within rounding of the shift sum, count as
/// zero; the growth of the rest (log-slope over the tail half of the window)
/// must not exceed lambda0 + delta. The per-(n, k) profile uses constants A, B fitted to the
/// annihilated fit and its remainder, and is reported for inspection.
inline real_trace_bound_report certify_real_trace_bound(std::span<const trace_table> real_tables,
                                                        std::span<const cplx> points, int d,
                                                        const expansion_estimate& est, double lambda0, double lambda1,
                                                        double delta = 0.05, double significance = 4.0)
{
    const auto ann = annihilator(d, points);
    const auto& q = ann.coeffs();
    const std::size_t deg = ann.degree();
    if (est.window() < deg + 4)
        throw error(errc::window_too_short, "fitted window too short for the annihilator degree");
    const std::size_t out_len = est.window() - deg;

    real_trace_bound_report rep;
    rep.pass = true;
    auto check = [&](const std::vector<double>& c, const std::vector<double>& se, int level, const char* note) {
        std::vector<double> g(out_len), masked(out_len, 0.0);
        for (std::size_t k = 0; k < out_len; ++k) {
            cplx acc(0.0);
            double mag = 0.0, noise = 0.0;
            for (std::size_t t = 0; t < q.size(); ++t) {
                acc += q[t] * c[k + t];
                mag += std::abs(q[t]) * std::abs(c[k + t]);
                noise += std::abs(q[t]) * se[k + t];
            }
            const double v = detail::flush_cancellation(acc, mag).real();
            g[k] = v;
            masked[k] = std::abs(v) > significance * noise ? v : 0.0;
        }
        const auto growth = detail::tail_ratio_growth(masked, est.k_first, 0.5);
        auto cert = make_certificate("real_trace_growth", growth.rate, lambda0 + delta);
        cert.level = level;
        cert.d = d;
        cert.points.assign(points.begin(), points.end());
        cert.k = static_cast<int>(growth.last_k);
        cert.note = note;
        rep.pass = rep.pass && cert.pass;
        rep.levels.push_back(std::move(cert));
        return g;
    };
    std::vector<double> annihilated_linear;
    if (!est.linear.empty())
        annihilated_linear = check(est.linear, est.linear_std_error, -1, "coefficient of n");
    std::vector<std::vector<double>> annihilated;
    for (int i = 0; i < est.r; ++i)
        annihilated.push_back(check(est.level(i), est.level_stderr(i), i, ""));

    // fitted envelope constants and the per-(n, k) profile
    struct row {
        long long n;
        int k;
        double value, remainder, low;
    };
    std::vector<row> rows;
    for (const auto& t : real_tables) {
        if (t.k_max() < est.k_last)
            throw error(errc::dimension_mismatch, "real-trace table shorter than the fitted window");
        std::vector<cplx> seq(t.mean.begin() + (est.k_first - 1), t.mean.begin() + est.k_last);
        const auto g = sidestep::apply(ann, std::span<const cplx>(seq));
        for (std::size_t k = 0; k < g.size(); ++k) {
            double low = annihilated_linear.empty() ? 0.0 : annihilated_linear[k] * static_cast<double>(t.n);
            for (int i = 0; i < est.r; ++i)
                low += annihilated[static_cast<std::size_t>(i)][k] * std::pow(static_cast<double>(t.n), -i);
            rows.push_back({t.n, est.k_first + static_cast<int>(k), std::abs(g[k]), std::abs(g[k].real() - low), low});
        }
    }
    auto env0 = [&](const row& r) { return std::pow(lambda0 + delta, r.k) * static_cast<double>(r.n); };
    auto env1 = [&](const row& r) { return std::pow(lambda1 + delta, r.k) * std::pow(static_cast<double>(r.n), -est.r); };
    for (const auto& r : rows) {
        rep.a = std::max(rep.a, std::abs(r.low) / env0(r));
        rep.b = std::max(rep.b, r.remainder / env1(r));
    }
    for (const auto& r : rows) {
        const double bound = rep.a * env0(r) + rep.b * env1(r);
        rep.profile.push_back({r.n, r.k, r.value, bound, bound - r.value});
    }
    return rep;
}

/// Least-squares slope of log(value) against log(n) over positive values.
inline std::optional<double> log_log_slope(std::span<const long long> ns, std::span<const double> values)
{
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        if (!(values[i] > 0.0))
            continue;
        const double x = std::log(static_cast<double>(ns[i])), y = std::log(values[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    if (count < 2)
        return std::nullopt;
    const double denom = count * sxx - sx * sx;
    if (denom == 0.0)
        return std::nullopt;
    return (count * sxy - sx * sy) / denom;
}

/// Finite-sample surrogate for "value = o(n^-target)": the log-log slope is
/// at most -target + 0.15. Identically zero tails pass; with fewer than two
/// positive values the value at the largest n must be zero.
inline bool decays_like(std::span<const long long> ns, std::span<const double> values, double target)
{
    const auto slope = log_log_slope(ns, values);
    if (!slope)
        return values.empty() || values.back() == 0.0;
    return *slope <= -target + 0.15;
}

struct bound_row {
    long long n = 0;
    double eout = 0.0;
    double bound = 0.0;
    double scaled = 0.0; // n^j eout, where applicable
    bool within = false;
};

struct exceptional_report {
    bool pass = false;
    bool theta_within_theta0 = false;
    double theta0 = 0.0;
    std::vector<bound_row> rows;
    std::vector<double> flagged; // real eigenvalue locations found outside the region, most frequent first
};

namespace detail {

struct outside_tally {
    double out = 0.0;
    std::map<long long, double> locations; // real eigenvalues outside, keyed by round(1000 x)
};

inline outside_tally tally_outside(const model_config& model, long long n, const region& reg, std::size_t m,
                                   std::uint64_t seed, unsigned threads)
{
    auto chunk = [&](std::size_t begin, std::size_t end) {
        outside_tally t;
        for (std::size_t i = begin; i < end; ++i) {
            const auto s = sample_model(model, n, seed, i);
            if (!reg.contains(cplx(0.0)))
                t.out += static_cast<double>(s.zero_count);
            for (cplx z : s.eigenvalues) {
                if (reg.contains(z))
                    continue;
                t.out += 1.0;
                if (is_real(z))
                    t.locations[std::llround(z.real() * 1000.0)] += 1.0;
            }
        }
        return t;
    };
    auto merge = [](outside_tally a, outside_tally b) {
        a.out += b.out;
        for (const auto& [key, count] : b.locations)
            a.locations[key] += count;
        return a;
    };
    auto total = chunked_reduce<outside_tally>(m, threads, chunk, merge);
    total.out /= static_cast<double>(m);
    return total;
}

inline std::vector<double> most_frequent(const std::map<long long, double>& locations, std::size_t limit)
{
    std::vector<std::pair<long long, double>> items(locations.begin(), locations.end());
    std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<double> out;
    for (std::size_t i = 0; i < items.size() && i < limit; ++i)
        out.push_back(static_cast<double>(items[i].first) / 1000.0);
    return out;
}

} // namespace detail

/// Empirical Eout[B_{lambda0+eps}(0) u B_{n^-theta}(L)] against n^-alpha; the
/// upper half of the n grid must satisfy the bound.
inline exceptional_report verify_exceptional_bound(const model_config& model, const exceptional_params& params,
                                                   std::span<const cplx> points, double theta,
                                                   std::span<const long long> n_grid, std::size_t m,
                                                   std::uint64_t seed, int annihilator_degree = 2,
                                                   unsigned threads = 1)
{
    if (!(theta > 0.0))
        throw error(errc::invalid_parameter, "theta must be positive");
    std::vector<long long> grid(n_grid.begin(), n_grid.end());
    std::sort(grid.begin(), grid.end());
    exceptional_report rep;
    rep.theta0 = params.theta0(static_cast<double>(annihilator_degree) * static_cast<double>(points.size()));
    rep.theta_within_theta0 = theta <= rep.theta0;
    rep.pass = true;
    std::map<long long, double> locations;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const long long n = grid[i];
        const auto reg = region::around(params.lambda0 + params.epsilon, std::vector<cplx>(points.begin(), points.end()),
                                        std::pow(static_cast<double>(n), -theta));
        const auto tally = detail::tally_outside(model, n, reg, m, seed, threads);
        bound_row row;
        row.n = n;
        row.eout = tally.out;
        row.bound = std::pow(static_cast<double>(n), -params.alpha);
        row.scaled = tally.out;
        row.within = row.eout <= row.bound;
        if (i >= grid.size() / 2)
            rep.pass = rep.pass && row.within;
        for (const auto& [key, count] : tally.locations)
            locations[key] += count;
        rep.rows.push_back(row);
    }
    rep.flagged = detail::most_frequent(locations, 4);
    return rep;
}

struct sidestep_base_check {
    double ell = 0.0;
    double detected_amplitude = 0.0;
    c_ell_estimate counted;
    double relative_error = 0.0;
    bool pass = false;
};

struct sidestep_report {
    bool pass = false;
    std::optional<int> j;
    bool theta_within_theta1 = false;
    std::vector<bound_row> rows;     // eout of B_{l0+eps}(0) u B_{n^-theta}(L), scaled by n^j
    std::optional<double> eout_slope;
    bool eout_decays = false;
    std::vector<sidestep_base_check> bases;
};

/// Checks the sidestepping conclusions at level j on sampled data:
/// (a) Eout[B_{l0+eps}(0) u B_{n^-theta}(L_{j+1})] decays faster than n^-j;
/// (b) n^j Ein[B_{n^-theta}(ell)] agrees with the detected amplitude of each
/// base within amplitude_tolerance. Without a level (no larger base up to
/// r - 1) it checks Eout[B_{l0+eps}(0)] = O(n^-(r-1)).
inline sidestep_report verify_sidestep(const model_config& model, std::optional<int> j,
                                       std::span<const detected_base> bases, const sidestep_params& params, int r,
                                       double theta, std::span<const long long> n_grid, std::size_t m,
                                       std::uint64_t seed, double amplitude_tolerance = 0.10, unsigned threads = 1)
{
    if (!(theta > 0.0))
        throw error(errc::invalid_parameter, "theta must be positive");
    std::vector<long long> grid(n_grid.begin(), n_grid.end());
    std::sort(grid.begin(), grid.end());
    sidestep_report rep;
    rep.j = j;
    rep.theta_within_theta1 = theta <= params.theta1;

    std::vector<cplx> points;
    if (j)
        for (const auto& b : bases)
            points.emplace_back(b.ell, 0.0);
    const int level = j.value_or(0);
    std::vector<double> eouts;
    for (long long n : grid) {
        const auto reg = region::around(params.lambda0 + params.epsilon, points, std::pow(static_cast<double>(n), -theta));
        const double eout = mc_in_out(model, n, reg, m, seed, threads).eout;
        bound_row row;
        row.n = n;
        row.eout = eout;
        row.scaled = eout * std::pow(static_cast<double>(n), level);
        rep.rows.push_back(row);
        eouts.push_back(eout);
    }
    const double target = j ? static_cast<double>(*j) : static_cast<double>(std::max(r - 1, 0));
    rep.eout_slope = log_log_slope(grid, eouts);
    rep.eout_decays = decays_like(grid, eouts, target);
    rep.pass = rep.eout_decays;

    if (j) {
        for (const auto& b : bases) {
            sidestep_base_check check;
            check.ell = b.ell;
            check.detected_amplitude = b.amplitude;
            check.counted = estimate_C_ell(model, b.ell, *j, theta, grid, m, seed, threads);
            check.relative_error =
                std::abs(check.counted.extrapolated - b.amplitude) / std::max(std::abs(b.amplitude), 1e-300);
            check.pass = check.relative_error <= amplitude_tolerance;
            rep.pass = rep.pass && check.pass;
            rep.bases.push_back(std::move(check));
        }
    }
    return rep;
}

} // namespace sidestep

#endif // SIDESTEP_THEOREM_HPP
