#ifndef SIDESTEP_MODELS_HPP
#define SIDESTEP_MODELS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "sidestep/error.hpp"
#include "sidestep/rng.hpp"
#include "sidestep/spectral.hpp"

namespace sidestep {

/// An eigenvalue ell that appears with probability amplitude / n^level.
struct plant {
    double ell = 0.0;
    double amplitude = 0.0;
    int level = 1;
};

/// Spectrum = fixed part, plus one dedicated slot per plant holding either
/// ell or 0, plus zeros. Its trace expansion is known in closed form.
struct planted_config {
    std::vector<double> fixed;
    std::vector<plant> plants;
};

/// Random degree-n permutation lifts of a connected d-regular base graph.
struct lift_config {
    Eigen::MatrixXd base_adjacency;
    int degree = 0;
    bool hashimoto = false; // report the new Hashimoto spectrum instead of the adjacency one
};

struct model_config {
    double lambda0 = 0.0;
    double lambda1 = 0.0;
    std::vector<long long> n_grid;
    std::variant<planted_config, lift_config> kind;
};

/// Default trace horizon K(n): the smallest even integer >= (log n)^2, at least 2.
inline int trace_horizon(long long n)
{
    const double l = std::log(static_cast<double>(std::max<long long>(n, 1)));
    auto k = static_cast<int>(std::ceil(l * l - 1e-12));
    if (k % 2 != 0)
        ++k;
    return std::max(k, 2);
}

inline double plant_probability(const plant& p, long long n)
{
    return p.amplitude / std::pow(static_cast<double>(n), p.level);
}

inline void check_planted(const planted_config& cfg, long long n)
{
    if (n < 1)
        throw error(errc::invalid_parameter, "n must be positive");
    if (cfg.fixed.size() + cfg.plants.size() > static_cast<std::size_t>(n))
        throw error(errc::invalid_parameter, "fixed part and plant slots exceed n");
    for (const auto& p : cfg.plants) {
        const double prob = plant_probability(p, n);
        if (!(prob >= 0.0))
            throw error(errc::invalid_parameter, "plant amplitude must be nonnegative");
        if (prob > 1.0)
            throw error(errc::probability_exceeds_one,
                        "plant at " + std::to_string(p.ell) + " has probability " + std::to_string(prob));
    }
}

inline spectrum_sample planted_sample(const planted_config& cfg, long long n, std::uint64_t seed)
{
    check_planted(cfg, n);
    random_stream rng(seed, {0x706c616e74ULL});
    spectrum_sample s;
    s.eigenvalues.reserve(cfg.fixed.size() + cfg.plants.size());
    for (double x : cfg.fixed)
        s.eigenvalues.emplace_back(x, 0.0);
    for (const auto& p : cfg.plants)
        if (rng.bernoulli(plant_probability(p, n)))
            s.eigenvalues.emplace_back(p.ell, 0.0);
    s.zero_count = static_cast<std::size_t>(n) - s.eigenvalues.size();
    return s;
}

/// E[Tr M^k] = sum_F x^k + sum_plants C ell^k / n^j, exactly. A wider T
/// keeps the small terms visible next to the large ones.
template <class T = double>
T planted_exact_trace(const planted_config& cfg, long long n, long long k)
{
    if (k < 1)
        throw error(errc::invalid_parameter, "k must be at least 1");
    T acc(0);
    for (double x : cfg.fixed)
        acc += ipow(T(x), k);
    for (const auto& p : cfg.plants)
        acc += T(p.amplitude) / ipow(T(n), p.level) * ipow(T(p.ell), k);
    return acc;
}

namespace detail {

inline std::vector<std::pair<int, int>> base_edges(const lift_config& cfg)
{
    const auto& a = cfg.base_adjacency;
    const Eigen::Index v = a.rows();
    if (a.cols() != v || v == 0)
        throw error(errc::invalid_parameter, "base adjacency must be square and nonempty");
    std::vector<std::pair<int, int>> edges;
    for (Eigen::Index i = 0; i < v; ++i) {
        if (a(i, i) != 0.0)
            throw error(errc::invalid_parameter, "base graph has a loop");
        int row_degree = 0;
        for (Eigen::Index j = 0; j < v; ++j) {
            if (a(i, j) != 0.0 && a(i, j) != 1.0)
                throw error(errc::invalid_parameter, "base adjacency must be 0/1");
            if (a(i, j) != a(j, i))
                throw error(errc::non_symmetric, "base adjacency must be symmetric");
            row_degree += static_cast<int>(a(i, j));
            if (j > i && a(i, j) == 1.0)
                edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
        }
        if (row_degree != cfg.degree)
            throw error(errc::invalid_parameter, "base graph is not " + std::to_string(cfg.degree) + "-regular");
    }
    // connectivity by flood fill
    std::vector<bool> seen(static_cast<std::size_t>(v), false);
    std::vector<Eigen::Index> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
        const auto u = stack.back();
        stack.pop_back();
        for (Eigen::Index w = 0; w < v; ++w)
            if (a(u, w) == 1.0 && !seen[static_cast<std::size_t>(w)]) {
                seen[static_cast<std::size_t>(w)] = true;
                stack.push_back(w);
            }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
        throw error(errc::invalid_parameter, "base graph is not connected");
    return edges;
}

// Removes one copy of each of `remove` from `from`, greedily matching each to
// the nearest unused value.
inline std::vector<double> multiset_difference(std::vector<double> from, std::span<const double> remove, double tol)
{
    std::vector<bool> used(from.size(), false);
    for (double x : remove) {
        std::size_t best = from.size();
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < from.size(); ++i) {
            if (used[i])
                continue;
            const double dist = std::abs(from[i] - x);
            if (dist < best_dist) {
                best_dist = dist;
                best = i;
            }
        }
        if (best == from.size() || best_dist > tol)
            throw error(errc::multiset_mismatch, "no eigenvalue within tolerance of " + std::to_string(x));
        used[best] = true;
    }
    std::vector<double> out;
    out.reserve(from.size() - remove.size());
    for (std::size_t i = 0; i < from.size(); ++i)
        if (!used[i])
            out.push_back(from[i]);
    return out;
}

} // namespace detail

/// Adjacency matrix of a random degree-n lift: base vertex u becomes the
/// fiber (u, 0..n-1), and each base edge {u, w} with u < w is lifted by a
/// uniform permutation pi as (u, i) -- (w, pi(i)). The permutation of edge e
/// comes from the stream keyed by (seed, e).
inline Eigen::MatrixXd lift_adjacency(const lift_config& cfg, long long n, std::uint64_t seed)
{
    if (n < 1)
        throw error(errc::invalid_parameter, "lift degree must be positive");
    const auto edges = detail::base_edges(cfg);
    const auto nn = static_cast<Eigen::Index>(n);
    const Eigen::Index size = cfg.base_adjacency.rows() * nn;
    Eigen::MatrixXd lift = Eigen::MatrixXd::Zero(size, size);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    for (std::size_t e = 0; e < edges.size(); ++e) {
        random_stream rng(seed, {static_cast<std::uint64_t>(e)});
        std::iota(perm.begin(), perm.end(), Eigen::Index{0});
        for (std::size_t i = perm.size(); i > 1; --i)
            std::swap(perm[i - 1], perm[rng.below(i)]);
        const auto [u, w] = edges[e];
        for (Eigen::Index i = 0; i < nn; ++i) {
            const Eigen::Index a = u * nn + i;
            const Eigen::Index b = w * nn + perm[static_cast<std::size_t>(i)];
            lift(a, b) += 1.0;
            lift(b, a) += 1.0;
        }
    }
    return lift;
}

/// New adjacency spectrum of a random lift (lift spectrum minus one copy of
/// the base spectrum), v * (n - 1) real values; or, when cfg.hashimoto is
/// set, the new Hashimoto spectrum: the quadratic-map image plus the new
/// copies of +1 and -1, d v (n - 1) values in all.
inline spectrum_sample lift_sample(const lift_config& cfg, long long n, std::uint64_t seed)
{
    const auto base = sym_eigs(cfg.base_adjacency);
    const auto lifted = sym_eigs(lift_adjacency(cfg, n, seed));
    const auto fresh = detail::multiset_difference(lifted, base, 1e-6);
    spectrum_sample s;
    if (cfg.hashimoto) {
        s.eigenvalues = hashimoto_from_adjacency(fresh, cfg.degree);
        // the +-1 block of the Hashimoto matrix grows by |E| - |V| per sheet
        const auto extra = (detail::base_edges(cfg).size() - static_cast<std::size_t>(cfg.base_adjacency.rows())) *
                           static_cast<std::size_t>(n - 1);
        s.eigenvalues.insert(s.eigenvalues.end(), extra, cplx(1.0, 0.0));
        s.eigenvalues.insert(s.eigenvalues.end(), extra, cplx(-1.0, 0.0));
    } else {
        s.eigenvalues.reserve(fresh.size());
        for (double x : fresh)
            s.eigenvalues.emplace_back(x, 0.0);
    }
    return s;
}

/// The i-th sample of the model at size n under `seed`. Samples are pure
/// functions of (cfg, n, seed, index).
inline spectrum_sample sample_model(const model_config& cfg, long long n, std::uint64_t seed, std::uint64_t index)
{
    const std::uint64_t key = random_stream(seed, {static_cast<std::uint64_t>(n), index}).key();
    return std::visit(
        [&](const auto& kind) {
            if constexpr (std::is_same_v<std::decay_t<decltype(kind)>, planted_config>)
                return planted_sample(kind, n, key);
            else
                return lift_sample(kind, n, key);
        },
        cfg.kind);
}

struct validation_report {
    std::size_t samples = 0;
    std::size_t total_violations = 0;
    std::vector<std::size_t> violations_per_sample;

    bool ok() const noexcept { return total_violations == 0; }
};

/// Counts eigenvalues outside B_{lambda0}(0) union [-lambda1, lambda1]
/// (1e-8 slack on both pieces).
inline validation_report model_validate(double lambda0, double lambda1, std::span<const spectrum_sample> samples)
{
    constexpr double tol = 1e-8;
    validation_report rep;
    rep.samples = samples.size();
    for (const auto& s : samples) {
        std::size_t bad = 0;
        for (cplx z : s.eigenvalues) {
            const bool in_disk = std::abs(z) <= lambda0 + tol;
            const bool on_segment = std::abs(z.imag()) <= tol && std::abs(z.real()) <= lambda1 + tol;
            bad += (in_disk || on_segment) ? 0 : 1;
        }
        rep.violations_per_sample.push_back(bad);
        rep.total_violations += bad;
    }
    return rep;
}

/// Planted models are held to their own invariant, F inside B_{lambda0}(0)
/// and plants at |ell| <= lambda1: every eigenvalue must lie in the disk or
/// sit exactly on a plant base. Other models use the generic check.
inline validation_report model_validate(const model_config& cfg, std::span<const spectrum_sample> samples)
{
    const auto* planted = std::get_if<planted_config>(&cfg.kind);
    if (!planted)
        return model_validate(cfg.lambda0, cfg.lambda1, samples);
    constexpr double tol = 1e-8;
    validation_report rep;
    rep.samples = samples.size();
    for (const auto& s : samples) {
        std::size_t bad = 0;
        for (cplx z : s.eigenvalues) {
            bool ok = std::abs(z) <= cfg.lambda0 + tol;
            for (const auto& p : planted->plants)
                ok = ok || (std::abs(z - cplx(p.ell, 0.0)) <= tol && std::abs(p.ell) <= cfg.lambda1 + tol);
            bad += ok ? 0 : 1;
        }
        rep.violations_per_sample.push_back(bad);
        rep.total_violations += bad;
    }
    return rep;
}

inline validation_report model_validate(const model_config& cfg, const std::vector<spectrum_sample>& samples)
{
    return model_validate(cfg, std::span<const spectrum_sample>(samples));
}

/// Complete graph on d+1 vertices, the smallest d-regular base.
inline Eigen::MatrixXd complete_graph(int vertices)
{
    Eigen::MatrixXd a = Eigen::MatrixXd::Ones(vertices, vertices);
    a.diagonal().setZero();
    return a;
}

} // namespace sidestep

#endif // SIDESTEP_MODELS_HPP
