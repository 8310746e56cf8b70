#ifndef SIDESTEP_SPECTRAL_HPP
#define SIDESTEP_SPECTRAL_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sidestep/error.hpp"
#include "sidestep/polyexp.hpp"

namespace sidestep {

/// Imaginary parts at or below this are treated as real eigenvalues.
inline constexpr double conjugate_pair_tolerance = 1e-9;

inline bool is_real(cplx z) noexcept { return std::abs(z.imag()) <= conjugate_pair_tolerance; }

/// Union of a closed disk about 0 and closed disks of a common radius about
/// each listed point. A missing center radius means no disk about 0 at all,
/// which is different from a radius-0 disk (that one still contains 0).
struct region {
    std::optional<double> center_radius;
    std::vector<cplx> points;
    double point_radius = 0.0;

    bool contains(cplx z) const noexcept
    {
        if (center_radius && std::abs(z) <= *center_radius)
            return true;
        return std::any_of(points.begin(), points.end(),
                           [&](cplx l) { return std::abs(z - l) <= point_radius; });
    }

    /// B_{center}(0) union B_{radius}(points)
    static region around(double center, std::vector<cplx> points, double radius)
    {
        return region{center, std::move(points), radius};
    }

    /// B_{radius}(points) only
    static region near(std::vector<cplx> points, double radius)
    {
        return region{std::nullopt, std::move(points), radius};
    }
};

inline bool region_contains(const region& r, cplx z) noexcept { return r.contains(z); }

/// Eigenvalue multiset of one sampled matrix. Eigenvalues equal to zero may
/// be kept implicitly in zero_count, which keeps sparse planted spectra
/// cheap; the dimension counts both.
struct spectrum_sample {
    std::vector<cplx> eigenvalues;
    std::size_t zero_count = 0;
    double weight = 1.0;

    std::size_t dimension() const noexcept { return eigenvalues.size() + zero_count; }
};

struct in_out {
    double ein = 0.0;
    double eout = 0.0;
};

namespace detail {

// Weights all equal to 1 mean "uniform empirical"; otherwise they must form
// a probability vector.
inline std::vector<double> normalized_weights(std::span<const spectrum_sample> samples)
{
    std::vector<double> w(samples.size());
    const bool unit = std::all_of(samples.begin(), samples.end(), [](const auto& s) { return s.weight == 1.0; });
    if (unit) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(samples.size()));
        return w;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!(samples[i].weight > 0.0))
            throw error(errc::invalid_parameter, "sample weights must be positive");
        w[i] = samples[i].weight;
        total += w[i];
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw error(errc::invalid_parameter, "sample weights do not sum to 1");
    return w;
}

} // namespace detail

/// Expected number of eigenvalues inside and outside r, with multiplicity.
inline in_out ein_eout(std::span<const spectrum_sample> samples, const region& r)
{
    if (samples.empty())
        throw error(errc::invalid_parameter, "ein_eout needs at least one sample");
    const std::size_t n = samples.front().dimension();
    const auto w = detail::normalized_weights(samples);
    const bool zero_inside = r.contains(cplx(0.0));
    in_out result;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (s.dimension() != n)
            throw error(errc::dimension_mismatch, "samples have different dimensions");
        std::size_t inside = zero_inside ? s.zero_count : 0;
        for (cplx z : s.eigenvalues)
            inside += r.contains(z) ? 1 : 0;
        result.ein += w[i] * static_cast<double>(inside);
        result.eout += w[i] * static_cast<double>(n - inside);
    }
    return result;
}

inline in_out ein_eout(const std::vector<spectrum_sample>& samples, const region& r)
{
    return ein_eout(std::span<const spectrum_sample>(samples), r);
}

inline cplx power_sum(const spectrum_sample& s, long long k)
{
    cplx acc(0.0);
    for (cplx z : s.eigenvalues)
        acc += ipow(z, k);
    return acc;
}

struct trace_parts {
    double real_trace = 0.0;
    double nonreal_trace = 0.0;
};

/// Splits sum lambda^k into the real-eigenvalue part and the nonreal part.
/// Conjugate pairing makes the nonreal part real; a leftover imaginary part
/// above 1e-9 relative to sum |mu|^k means the spectrum is not paired.
inline trace_parts trace_split(const spectrum_sample& s, long long k)
{
    if (k < 1)
        throw error(errc::invalid_parameter, "trace_split needs k >= 1");
    trace_parts out;
    cplx nonreal(0.0);
    double scale = 0.0;
    for (cplx z : s.eigenvalues) {
        if (is_real(z)) {
            out.real_trace += ipow(z.real(), k);
        } else {
            const cplx p = ipow(z, k);
            nonreal += p;
            scale += std::abs(p);
        }
    }
    if (std::abs(nonreal.imag()) > 1e-9 * std::max(1.0, scale))
        throw error(errc::unpaired_nonreal, "nonreal eigenvalues are not conjugate-paired");
    out.nonreal_trace = nonreal.real();
    return out;
}

/// Sum of lambda^k over the real eigenvalues that lie in r.
inline double real_trace_in_region(const spectrum_sample& s, long long k, const region& r)
{
    double acc = 0.0;
    for (cplx z : s.eigenvalues)
        if (is_real(z) && r.contains(cplx(z.real(), 0.0)))
            acc += ipow(z.real(), k);
    return acc; // implicit zeros add nothing for k >= 1
}

struct sym_eigen_result {
    std::vector<double> values;   // ascending
    Eigen::MatrixXd vectors;      // column i pairs with values[i]
    int sweeps = 0;
};

/// Cyclic Jacobi rotations on a dense symmetric matrix. Iterates until the
/// off-diagonal Frobenius norm falls below 1e-12 of the full norm, at most
/// 60 sweeps.
inline sym_eigen_result sym_eigen(const Eigen::MatrixXd& input, bool want_vectors = true)
{
    const Eigen::Index n = input.rows();
    if (input.cols() != n)
        throw error(errc::non_symmetric, "matrix is not square");
    const double norm = input.norm();
    if ((input - input.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, norm))
        throw error(errc::non_symmetric, "asymmetry exceeds 1e-9");

    Eigen::MatrixXd a = 0.5 * (input + input.transpose());
    Eigen::MatrixXd v;
    if (want_vectors)
        v = Eigen::MatrixXd::Identity(n, n);

    auto off_norm = [&] {
        double s = 0.0;
        for (Eigen::Index q = 1; q < n; ++q)
            for (Eigen::Index p = 0; p < q; ++p)
                s += 2.0 * a(p, q) * a(p, q);
        return std::sqrt(s);
    };

    sym_eigen_result out;
    const double target = 1e-12 * norm;
    for (int sweep = 0; sweep < 60; ++sweep) {
        const double off = off_norm();
        if (off <= target)
            break;
        out.sweeps = sweep + 1;
        // early sweeps skip small rotations; later ones drop entries below rounding of the diagonal
        const double skip_below = sweep < 3 ? 0.2 * off / static_cast<double>(n * n) : 0.0;
        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                const double g = 100.0 * std::abs(apq);
                if (sweep > 3 && std::abs(a(p, p)) + g == std::abs(a(p, p)) &&
                    std::abs(a(q, q)) + g == std::abs(a(q, q))) {
                    a(p, q) = a(q, p) = 0.0;
                    continue;
                }
                if (apq == 0.0 || std::abs(apq) <= skip_below)
                    continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t;
                if (std::abs(theta) > 1e150)
                    t = 0.5 / theta;
                else
                    t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double app = a(p, p) - t * apq, aqq = a(q, q) + t * apq;
                double* cp = a.col(p).data();
                double* cq = a.col(q).data();
                for (Eigen::Index r = 0; r < n; ++r) {
                    const double arp = cp[r], arq = cq[r];
                    cp[r] = c * arp - s * arq;
                    cq[r] = s * arp + c * arq;
                }
                cp[p] = app;
                cq[q] = aqq;
                cp[q] = cq[p] = 0.0;
                a.row(p) = a.col(p).transpose();
                a.row(q) = a.col(q).transpose();
                if (want_vectors) {
                    for (Eigen::Index r = 0; r < n; ++r) {
                        const double vrp = v(r, p), vrq = v(r, q);
                        v(r, p) = c * vrp - s * vrq;
                        v(r, q) = s * vrp + c * vrq;
                    }
                }
            }
        }
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) < a(j, j); });
    out.values.reserve(order.size());
    if (want_vectors)
        out.vectors.resize(n, n);
    for (std::size_t i = 0; i < order.size(); ++i) {
        out.values.push_back(a(order[i], order[i]));
        if (want_vectors)
            out.vectors.col(static_cast<Eigen::Index>(i)) = v.col(order[i]);
    }
    return out;
}

/// Eigenvalues of a dense symmetric matrix, ascending.
inline std::vector<double> sym_eigs(const Eigen::MatrixXd& a) { return sym_eigen(a, false).values; }

/// Maps adjacency eigenvalues of a d-regular graph to the Hashimoto
/// eigenvalues they induce: the two roots of x^2 - mu x + (d-1). Nonreal
/// roots have modulus sqrt(d-1) exactly in exact arithmetic.
///
/// The +-1 eigenvalues that the Hashimoto matrix carries in addition
/// (multiplicity |E| - |V| each) are not emitted. They lie inside
/// B_{sqrt(d-1)}(0) and never change a count outside that disk.
inline std::vector<cplx> hashimoto_from_adjacency(std::span<const double> mus, int d)
{
    if (d < 3)
        throw error(errc::invalid_parameter, "degree must be at least 3");
    const double dm1 = static_cast<double>(d - 1);
    std::vector<cplx> out;
    out.reserve(2 * mus.size());
    for (double mu : mus) {
        if (std::abs(mu) > static_cast<double>(d) * (1.0 + 1e-9))
            throw error(errc::out_of_range, "adjacency eigenvalue exceeds the degree");
        const double disc = mu * mu - 4.0 * dm1;
        if (disc >= 0.0) {
            const double q = 0.5 * (mu + (mu >= 0.0 ? 1.0 : -1.0) * std::sqrt(disc));
            out.emplace_back(q, 0.0);
            out.emplace_back(dm1 / q, 0.0);
        } else {
            const double im = 0.5 * std::sqrt(-disc);
            out.emplace_back(0.5 * mu, im);
            out.emplace_back(0.5 * mu, -im);
        }
    }
    return out;
}

inline std::vector<cplx> hashimoto_from_adjacency(const std::vector<double>& mus, int d)
{
    return hashimoto_from_adjacency(std::span<const double>(mus), d);
}

} // namespace sidestep

#endif // SIDESTEP_SPECTRAL_HPP
