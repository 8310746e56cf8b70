#ifndef SIDESTEP_ESTIMATION_HPP
#define SIDESTEP_ESTIMATION_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>

#include "sidestep/error.hpp"
#include "sidestep/models.hpp"
#include "sidestep/parallel.hpp"
#include "sidestep/spectral.hpp"

namespace sidestep {

using quad = boost::multiprecision::cpp_bin_float_quad;

/// Means of a per-k statistic at one n, for k = 1..k_max. Monte Carlo tables
/// are double; exact oracle tables may carry a wider type.
template <class T>
struct basic_trace_table {
    long long n = 0;
    std::size_t samples = 0;
    std::vector<T> mean;      // mean[k-1]
    std::vector<T> std_error; // standard error of mean[k-1]

    int k_max() const noexcept { return static_cast<int>(mean.size()); }
};

using trace_table = basic_trace_table<double>;

/// Tables for Tr M^k and for RealTrace(M, k) from the same samples.
struct trace_tables {
    trace_table full;
    trace_table real;
};

namespace detail {

// Running means and second central moments of a vector-valued statistic.
struct moments {
    std::size_t count = 0;
    std::vector<double> mean;
    std::vector<double> m2;

    void add(std::span<const double> x)
    {
        if (mean.empty()) {
            mean.assign(x.size(), 0.0);
            m2.assign(x.size(), 0.0);
        }
        ++count;
        const double inv = 1.0 / static_cast<double>(count);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double delta = x[i] - mean[i];
            mean[i] += delta * inv;
            m2[i] += delta * (x[i] - mean[i]);
        }
    }

    static moments merge(moments a, moments b)
    {
        if (a.count == 0)
            return b;
        if (b.count == 0)
            return a;
        const double na = static_cast<double>(a.count), nb = static_cast<double>(b.count);
        const double n = na + nb;
        for (std::size_t i = 0; i < a.mean.size(); ++i) {
            const double delta = b.mean[i] - a.mean[i];
            a.mean[i] += delta * (nb / n);
            a.m2[i] += b.m2[i] + delta * delta * (na * nb / n);
        }
        a.count += b.count;
        return a;
    }

    trace_table table(long long n) const
    {
        trace_table t;
        t.n = n;
        t.samples = count;
        t.mean = mean;
        t.std_error.resize(mean.size());
        for (std::size_t i = 0; i < mean.size(); ++i) {
            const double var = count > 1 ? m2[i] / static_cast<double>(count - 1) : 0.0;
            t.std_error[i] = std::sqrt(std::max(var, 0.0) / static_cast<double>(count));
        }
        return t;
    }
};

struct trace_moments {
    moments full;
    moments real;
};

} // namespace detail

/// Means and standard errors of Tr M^k and RealTrace(M, k), k = 1..k_max,
/// over samples 0..m-1 of the model at size n.
inline trace_tables mc_trace_tables(const model_config& model, long long n, int k_max, std::size_t m,
                                    std::uint64_t seed, unsigned threads = 1)
{
    if (m < 2)
        throw error(errc::invalid_parameter, "need at least 2 samples");
    if (k_max < 1 || k_max > trace_horizon(n))
        throw error(errc::invalid_parameter,
                    "k_max " + std::to_string(k_max) + " outside 1..K(n) = " + std::to_string(trace_horizon(n)));
    const auto kk = static_cast<std::size_t>(k_max);
    auto chunk = [&](std::size_t begin, std::size_t end) {
        detail::trace_moments acc;
        std::vector<double> full(kk), real(kk);
        for (std::size_t i = begin; i < end; ++i) {
            const auto s = sample_model(model, n, seed, i);
            std::fill(full.begin(), full.end(), 0.0);
            std::fill(real.begin(), real.end(), 0.0);
            for (cplx z : s.eigenvalues) {
                if (is_real(z)) {
                    double p = z.real();
                    for (std::size_t k = 0; k < kk; ++k, p *= z.real()) {
                        full[k] += p;
                        real[k] += p;
                    }
                } else {
                    cplx p = z;
                    for (std::size_t k = 0; k < kk; ++k, p *= z)
                        full[k] += p.real();
                }
            }
            acc.full.add(full);
            acc.real.add(real);
        }
        return acc;
    };
    auto merge = [](detail::trace_moments a, detail::trace_moments b) {
        return detail::trace_moments{detail::moments::merge(std::move(a.full), std::move(b.full)),
                                     detail::moments::merge(std::move(a.real), std::move(b.real))};
    };
    const auto total = chunked_reduce<detail::trace_moments>(m, threads, chunk, merge);
    return {total.full.table(n), total.real.table(n)};
}

/// Monte Carlo estimate of E[Tr M^k] for k = 1..k_max.
inline trace_table mc_expected_trace(const model_config& model, long long n, int k_max, std::size_t m,
                                     std::uint64_t seed, unsigned threads = 1)
{
    return mc_trace_tables(model, n, k_max, m, seed, threads).full;
}

/// Monte Carlo Ein/Eout for a region that may depend on n, over samples
/// 0..m-1 (the same samples the trace tables use for the same seed).
inline in_out mc_in_out(const model_config& model, long long n, const region& r, std::size_t m, std::uint64_t seed,
                        unsigned threads = 1)
{
    struct counts {
        double in = 0.0, out = 0.0;
    };
    auto chunk = [&](std::size_t begin, std::size_t end) {
        counts c;
        for (std::size_t i = begin; i < end; ++i) {
            const auto s = sample_model(model, n, seed, i);
            const std::size_t zeros_in = r.contains(cplx(0.0)) ? s.zero_count : 0;
            std::size_t inside = zeros_in;
            for (cplx z : s.eigenvalues)
                inside += r.contains(z) ? 1 : 0;
            c.in += static_cast<double>(inside);
            c.out += static_cast<double>(s.dimension() - inside);
        }
        return c;
    };
    auto merge = [](counts a, counts b) { return counts{a.in + b.in, a.out + b.out}; };
    const auto total = chunked_reduce<counts>(m, threads, chunk, merge);
    return {total.in / static_cast<double>(m), total.out / static_cast<double>(m)};
}

/// Fitted c_0(k)..c_{r-1}(k) over the common k-window of a set of tables.
template <class T>
struct basic_expansion_estimate {
    int r = 0;
    int k_first = 1;
    int k_last = 0;
    std::vector<long long> n_grid;         // ascending
    std::vector<std::vector<T>> coeff;     // coeff[i][k - k_first]
    std::vector<std::vector<T>> std_error; // matching standard errors (with a rounding floor)
    std::vector<T> linear;                 // coefficient of n per k, when fitted with a linear term
    std::vector<T> linear_std_error;
    std::vector<T> residual;               // unweighted residual norm per k
    std::vector<double> condition;         // condition number of the scaled design per k

    std::size_t window() const noexcept { return residual.size(); }
    T c(int level, int k) const { return coeff.at(static_cast<std::size_t>(level)).at(static_cast<std::size_t>(k - k_first)); }
    const std::vector<T>& level(int i) const { return coeff.at(static_cast<std::size_t>(i)); }
    const std::vector<T>& level_stderr(int i) const { return std_error.at(static_cast<std::size_t>(i)); }
};

using expansion_estimate = basic_expansion_estimate<double>;

/// Per k, weighted least squares of mean(n) on (1, 1/n, ..., 1/n^(r-1))
/// across all tables, weights 1/std_error^2 (unit weights when some std_error at
/// that k is zero). Regressors are scaled by powers of the smallest n before
/// solving; a scaled condition number above 1e12 is an error. With
/// `linear_term` an extra regressor n is fitted into `linear` (real traces
/// carry an n f(k) part from the nonreal spectrum). The arithmetic runs in
/// the table's scalar type.
template <class T>
basic_expansion_estimate<T> fit_expansion(std::span<const basic_trace_table<T>> input, int r, bool linear_term = false)
{
    using std::abs;
    using std::pow;
    using std::sqrt;
    using matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    using vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

    if (r < 1)
        throw error(errc::invalid_parameter, "expansion order must be at least 1");
    const std::size_t params = static_cast<std::size_t>(r) + (linear_term ? 1 : 0);
    if (input.size() < params + 1)
        throw error(errc::invalid_parameter, "need at least " + std::to_string(params + 1) + " values of n");
    std::vector<const basic_trace_table<T>*> tables;
    for (const auto& t : input)
        tables.push_back(&t);
    std::sort(tables.begin(), tables.end(), [](auto a, auto b) { return a->n < b->n; });
    for (std::size_t i = 1; i < tables.size(); ++i)
        if (tables[i]->n == tables[i - 1]->n)
            throw error(errc::invalid_parameter, "duplicate n in trace tables");

    int k_last = tables.front()->k_max();
    for (auto t : tables)
        k_last = std::min(k_last, t->k_max());
    if (k_last < 1)
        throw error(errc::window_too_short, "trace tables share no k");

    const auto rows = static_cast<Eigen::Index>(tables.size());
    const auto cols = static_cast<Eigen::Index>(params);
    const T n_min(tables.front()->n);
    const T n_max(tables.back()->n);

    basic_expansion_estimate<T> est;
    est.r = r;
    est.k_first = 1;
    est.k_last = k_last;
    for (auto t : tables)
        est.n_grid.push_back(t->n);
    est.coeff.assign(static_cast<std::size_t>(r), {});
    est.std_error.assign(static_cast<std::size_t>(r), {});

    // x_j = (n_min / n)^j; c_j = beta_j * n_min^j; the linear regressor is n / n_max
    matrix x(rows, cols);
    for (Eigen::Index a = 0; a < rows; ++a) {
        const T n(tables[static_cast<std::size_t>(a)]->n);
        for (Eigen::Index j = 0; j < r; ++j)
            x(a, j) = ipow(T(n_min / n), j);
        if (linear_term)
            x(a, r) = n / n_max;
    }

    for (int k = 1; k <= k_last; ++k) {
        const auto ki = static_cast<std::size_t>(k - 1);
        vector y(rows), w(rows);
        bool weighted = true;
        T scale(0);
        for (Eigen::Index a = 0; a < rows; ++a) {
            const auto* t = tables[static_cast<std::size_t>(a)];
            y(a) = t->mean[ki];
            scale = std::max<T>(scale, abs(y(a)));
            weighted = weighted && t->std_error[ki] > T(0);
        }
        for (Eigen::Index a = 0; a < rows; ++a)
            w(a) = weighted ? T(1) / tables[static_cast<std::size_t>(a)]->std_error[ki] : T(1);

        const matrix design = w.asDiagonal() * x;
        const vector rhs = w.asDiagonal() * y;
        Eigen::JacobiSVD<matrix> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const vector sv = svd.singularValues();
        const double cond = sv(cols - 1) > T(0) ? static_cast<double>(T(sv(0) / sv(cols - 1)))
                                                : std::numeric_limits<double>::infinity();
        if (!(cond <= 1e12))
            throw error(errc::ill_conditioned, "k=" + std::to_string(k) + " condition " + std::to_string(cond) +
                                                   " over " + std::to_string(rows) + " values of n, r=" +
                                                   std::to_string(r));
        const vector beta = svd.solve(rhs);
        const vector fitted = x * beta;
        const T rss = (fitted - y).squaredNorm();

        // covariance of beta: (A^T A)^{-1} = V S^-2 V^T, times sigma^2 when unweighted
        const vector inv_sv2 = sv.cwiseInverse().cwiseAbs2();
        vector var = (svd.matrixV() * inv_sv2.asDiagonal() * svd.matrixV().transpose()).diagonal();
        if (!weighted)
            var *= rows > cols ? T(rss / T(rows - cols)) : T(0);

        // rounding floor: relative 1e-10 of the data scale, propagated to each coefficient
        auto with_floor = [](T sd, T floor) { return sqrt(sd * sd + floor * floor); };
        if (linear_term) {
            est.linear.push_back(beta(r) / n_max);
            est.linear_std_error.push_back(
                with_floor(sqrt(std::max<T>(var(r), T(0))) / n_max, T(1e-10) * scale / n_max));
        }
        for (Eigen::Index j = 0; j < r; ++j) {
            const T unscale = ipow(n_min, j);
            const T floor = T(1e-10) * scale * ipow(n_max, j);
            est.coeff[static_cast<std::size_t>(j)].push_back(beta(j) * unscale);
            est.std_error[static_cast<std::size_t>(j)].push_back(
                with_floor(sqrt(std::max<T>(var(j), T(0))) * unscale, floor));
        }
        est.residual.push_back(sqrt(rss));
        est.condition.push_back(cond);
    }
    return est;
}

template <class T>
basic_expansion_estimate<T> fit_expansion(const std::vector<basic_trace_table<T>>& tables, int r,
                                          bool linear_term = false)
{
    return fit_expansion(std::span<const basic_trace_table<T>>(tables), r, linear_term);
}

struct detected_base {
    double ell = 0.0;
    double amplitude = 0.0;
    int level = 0;
    double residual = 0.0; // relative residual of the exponential fit over the window
};

struct detection_options {
    int max_bases = 4;
    int k_start = 4;               // first k used; damps finitely supported transients
    double rank_tolerance = 1e-8;  // singular values kept relative to the largest
    double real_tolerance = 1e-6;  // |Im ell| <= tol * |ell| counts as real
    double separation = 0.02;      // keep |ell| > lambda0 * (1 + separation)
    double amplitude_floor = 1e-3; // drop terms below this fraction of |c(k)| at every k
    double significance = 4.0;     // amplitude must exceed this many standard errors
};

/// Fits values (values[i] = c(k_first + i)) by sum_m a_m z_m^k with the
/// matrix-pencil method and returns the real poles that are larger bases:
/// |ell| > lambda0 (1 + separation), |ell| <= lambda1 (1 + separation), with
/// non-negligible and (when std_error is supplied) statistically significant
/// constant amplitudes. Sorted by |ell| descending.
inline std::vector<detected_base> detect_bases(std::span<const double> values, int k_first, double lambda0,
                                               double lambda1, int level, const detection_options& opt = {},
                                               std::span<const double> std_error = {})
{
    if (k_first < 1)
        throw error(errc::invalid_parameter, "k_first must be positive");
    if (!std_error.empty() && std_error.size() != values.size())
        throw error(errc::dimension_mismatch, "std_error length differs from values");
    const std::size_t skip = k_first >= opt.k_start ? 0 : static_cast<std::size_t>(opt.k_start - k_first);
    if (values.size() <= skip)
        throw error(errc::window_too_short, "no values at or beyond k_start");
    const auto y_all = values.subspan(skip);
    const auto se = std_error.empty() ? std_error : std_error.subspan(skip);
    const int k0 = k_first + static_cast<int>(skip);
    const auto w = static_cast<Eigen::Index>(y_all.size());
    if (w < 2 * opt.max_bases + 2)
        throw error(errc::window_too_short,
                    "window of " + std::to_string(w) + " values, need " + std::to_string(2 * opt.max_bases + 2));

    double ymax = 0.0;
    for (double v : y_all)
        ymax = std::max(ymax, std::abs(v));
    if (ymax == 0.0)
        return {};

    const Eigen::Index pencil = w / 2;
    Eigen::MatrixXd hankel(w - pencil, pencil + 1);
    for (Eigen::Index i = 0; i < hankel.rows(); ++i)
        for (Eigen::Index j = 0; j < hankel.cols(); ++j)
            hankel(i, j) = y_all[static_cast<std::size_t>(i + j)] / ymax;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(hankel, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    Eigen::Index rank = 0;
    while (rank < sv.size() && sv(rank) >= opt.rank_tolerance * sv(0))
        ++rank;
    rank = std::min({rank, pencil, w - pencil});
    if (rank == 0)
        return {};

    const Eigen::MatrixXd vm = svd.matrixV().leftCols(rank);
    const Eigen::MatrixXd v1 = vm.topRows(pencil);
    const Eigen::MatrixXd v2 = vm.bottomRows(pencil);
    const Eigen::MatrixXd z_mat = v1.completeOrthogonalDecomposition().solve(v2);
    const Eigen::VectorXcd poles = Eigen::EigenSolver<Eigen::MatrixXd>(z_mat, false).eigenvalues();

    // amplitudes of z^(k - k0), then rescaled to z^k
    Eigen::MatrixXcd vander(w, rank);
    Eigen::VectorXcd rhs(w);
    for (Eigen::Index i = 0; i < w; ++i) {
        rhs(i) = y_all[static_cast<std::size_t>(i)];
        for (Eigen::Index m = 0; m < rank; ++m)
            vander(i, m) = std::pow(poles(m), static_cast<double>(i));
    }
    const Eigen::VectorXcd amp = vander.completeOrthogonalDecomposition().solve(rhs);
    const double rel_residual = (vander * amp - rhs).norm() / rhs.norm();

    std::vector<detected_base> out;
    for (Eigen::Index m = 0; m < rank; ++m) {
        const cplx z = poles(m);
        const double mag = std::abs(z);
        if (std::abs(z.imag()) > opt.real_tolerance * mag)
            continue;
        if (mag <= lambda0 * (1.0 + opt.separation) || mag > lambda1 * (1.0 + opt.separation))
            continue;
        const double ell = z.real();
        // largest share of the sequence this term carries at any k; the
        // denominator floor keeps near-zero crossings from inflating it
        double share = 0.0;
        for (Eigen::Index i = 0; i < w; ++i) {
            const double term = std::abs(amp(m)) * std::pow(mag, static_cast<double>(i));
            share = std::max(share, term / std::max(std::abs(y_all[static_cast<std::size_t>(i)]), 1e-6 * ymax));
        }
        if (share < opt.amplitude_floor)
            continue;
        const double amplitude = amp(m).real() / std::pow(ell, static_cast<double>(k0));
        if (!se.empty()) {
            double resolution = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < se.size(); ++i)
                resolution = std::min(resolution, se[i] / std::pow(mag, static_cast<double>(k0) + static_cast<double>(i)));
            if (!(std::abs(amplitude) > opt.significance * resolution))
                continue;
        }
        out.push_back({ell, amplitude, level, rel_residual});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return std::abs(a.ell) > std::abs(b.ell); });
    if (out.size() > static_cast<std::size_t>(opt.max_bases))
        out.resize(static_cast<std::size_t>(opt.max_bases));
    return out;
}

inline std::vector<detected_base> detect_bases(const std::vector<double>& values, int k_first, double lambda0,
                                               double lambda1, int level, const detection_options& opt = {},
                                               const std::vector<double>& std_error = {})
{
    return detect_bases(std::span<const double>(values), k_first, lambda0, lambda1, level, opt,
                        std::span<const double>(std_error));
}

/// Larger bases of the fitted coefficient c_level.
inline std::vector<detected_base> detect_level(const expansion_estimate& est, int level, double lambda0,
                                               double lambda1, const detection_options& opt = {})
{
    return detect_bases(std::span<const double>(est.level(level)), est.k_first, lambda0, lambda1, level, opt,
                        std::span<const double>(est.level_stderr(level)));
}

/// Smallest level whose fitted coefficient has a larger base, if any.
inline std::optional<int> find_smallest_j(const expansion_estimate& est, double lambda0, double lambda1,
                                          const detection_options& opt = {})
{
    for (int i = 0; i < est.r; ++i)
        if (!detect_level(est, i, lambda0, lambda1, opt).empty())
            return i;
    return std::nullopt;
}

struct c_ell_point {
    long long n = 0;
    double ein = 0.0;    // expected eigenvalues in B_{n^-theta}(ell)
    double scaled = 0.0; // n^j * ein
};

struct c_ell_estimate {
    double ell = 0.0;
    int level = 0;
    std::vector<c_ell_point> per_n;
    double extrapolated = 0.0; // mean of the scaled values at the two largest n
};

/// C_ell from eigenvalue counts: n^j * Ein[B_{n^-theta}(ell)] per n, and the
/// average over the two largest n as the limit estimate.
inline c_ell_estimate estimate_C_ell(const model_config& model, double ell, int j, double theta,
                                     std::span<const long long> n_grid, std::size_t m, std::uint64_t seed,
                                     unsigned threads = 1)
{
    if (!(theta > 0.0))
        throw error(errc::invalid_parameter, "theta must be positive");
    if (!(std::abs(ell) > model.lambda0))
        throw error(errc::invalid_parameter, "ell must exceed lambda0 in modulus");
    if (n_grid.empty())
        throw error(errc::invalid_parameter, "empty n grid");
    std::vector<long long> grid(n_grid.begin(), n_grid.end());
    std::sort(grid.begin(), grid.end());
    c_ell_estimate est;
    est.ell = ell;
    est.level = j;
    for (long long n : grid) {
        const double radius = std::pow(static_cast<double>(n), -theta);
        const auto counts = mc_in_out(model, n, region::near({cplx(ell, 0.0)}, radius), m, seed, threads);
        est.per_n.push_back({n, counts.ein, counts.ein * std::pow(static_cast<double>(n), j)});
    }
    const std::size_t tail = std::min<std::size_t>(2, est.per_n.size());
    for (std::size_t i = est.per_n.size() - tail; i < est.per_n.size(); ++i)
        est.extrapolated += est.per_n[i].scaled / static_cast<double>(tail);
    return est;
}

inline c_ell_estimate estimate_C_ell(const model_config& model, double ell, int j, double theta,
                                     const std::vector<long long>& n_grid, std::size_t m, std::uint64_t seed,
                                     unsigned threads = 1)
{
    return estimate_C_ell(model, ell, j, theta, std::span<const long long>(n_grid), m, seed, threads);
}

} // namespace sidestep

#endif // SIDESTEP_ESTIMATION_HPP
