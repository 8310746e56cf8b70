#ifndef SIDESTEP_POLYEXP_HPP
#define SIDESTEP_POLYEXP_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "sidestep/error.hpp"

namespace sidestep {

using cplx = std::complex<double>;

/// Bases closer than this are treated as the same base.
inline constexpr double base_tolerance = 1e-9;

/// Highest polynomial degree a polyexponential term may carry.
inline constexpr std::size_t max_poly_degree = 64;

/// x^k by repeated squaring; exact whenever the intermediate products are.
template <class T>
T ipow(T x, long long k)
{
    T result(1);
    while (k > 0) {
        if (k & 1)
            result *= x;
        x *= x;
        k >>= 1;
    }
    return result;
}

namespace detail {

template <class T>
T horner(std::span<const T> coeffs, T x)
{
    T acc(0);
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it)
        acc = acc * x + *it;
    return acc;
}

inline void trim_trailing_zeros(std::vector<cplx>& c)
{
    while (!c.empty() && c.back() == cplx(0.0))
        c.pop_back();
}

// Result of a floating sum is declared exactly zero when it is below the
// rounding noise of the summands that produced it.
inline cplx flush_cancellation(cplx value, double magnitude, double ulps = 64.0)
{
    const double noise = ulps * std::numeric_limits<double>::epsilon() * magnitude;
    return std::abs(value) <= noise ? cplx(0.0) : value;
}

inline bool base_less(cplx a, cplx b)
{
    const double ma = std::abs(a), mb = std::abs(b);
    if (ma != mb)
        return ma < mb;
    return std::arg(a) < std::arg(b);
}

} // namespace detail

/// One term p(k) * base^k; coefficients are constant-first.
struct poly_term {
    cplx base;
    std::vector<cplx> coeffs;

    std::size_t degree() const noexcept { return coeffs.empty() ? 0 : coeffs.size() - 1; }
    cplx leading() const noexcept { return coeffs.empty() ? cplx(0.0) : coeffs.back(); }
};

/// k -> sum over bases of p_base(k) * base^k, plus an optional finitely
/// supported part f(1..m) standing in for the base-zero terms.
///
/// The stored form is minimal: bases are pairwise further apart than
/// base_tolerance, no stored polynomial is zero, and base zero never appears
/// among the terms (for k >= 1 such a term is part of the finite support).
class polyexponential {
public:
    polyexponential() = default;

    explicit polyexponential(std::vector<poly_term> terms, std::vector<cplx> finite_support = {})
        : finite_support_(std::move(finite_support))
    {
        while (!finite_support_.empty() && finite_support_.back() == cplx(0.0))
            finite_support_.pop_back();

        std::sort(terms.begin(), terms.end(),
                  [](const poly_term& a, const poly_term& b) { return detail::base_less(a.base, b.base); });
        for (auto& t : terms) {
            if (t.base == cplx(0.0))
                continue;
            auto same = std::find_if(terms_.begin(), terms_.end(), [&](const poly_term& u) {
                return std::abs(u.base - t.base) <= base_tolerance;
            });
            if (same == terms_.end()) {
                terms_.push_back(std::move(t));
                continue;
            }
            if (same->coeffs.size() < t.coeffs.size())
                same->coeffs.resize(t.coeffs.size());
            for (std::size_t i = 0; i < t.coeffs.size(); ++i)
                same->coeffs[i] += t.coeffs[i];
        }
        for (auto& t : terms_) {
            detail::trim_trailing_zeros(t.coeffs);
            if (t.coeffs.size() > max_poly_degree + 1)
                throw error(errc::degree_overflow, "degree " + std::to_string(t.coeffs.size() - 1) + " exceeds cap");
        }
        std::erase_if(terms_, [](const poly_term& t) { return t.coeffs.empty(); });
    }

    /// Single term p(k) * base^k.
    static polyexponential exponential(cplx base, std::vector<cplx> coeffs)
    {
        return polyexponential({poly_term{base, std::move(coeffs)}});
    }

    const std::vector<poly_term>& terms() const noexcept { return terms_; }
    const std::vector<cplx>& finite_support() const noexcept { return finite_support_; }

    std::vector<cplx> bases() const
    {
        std::vector<cplx> out;
        out.reserve(terms_.size());
        for (const auto& t : terms_)
            out.push_back(t.base);
        return out;
    }

    bool is_zero() const noexcept { return terms_.empty() && finite_support_.empty(); }

    std::size_t max_degree() const noexcept
    {
        std::size_t d = 0;
        for (const auto& t : terms_)
            d = std::max(d, t.degree());
        return d;
    }

    /// Value at k >= 1.
    cplx operator()(long long k) const
    {
        if (k < 1)
            throw error(errc::invalid_parameter, "polyexponential evaluated at k < 1");
        cplx acc(0.0);
        const cplx kk(static_cast<double>(k));
        for (const auto& t : terms_)
            acc += detail::horner<cplx>(t.coeffs, kk) * ipow(t.base, k);
        if (static_cast<std::size_t>(k) <= finite_support_.size())
            acc += finite_support_[static_cast<std::size_t>(k - 1)];
        return acc;
    }

private:
    std::vector<poly_term> terms_;
    std::vector<cplx> finite_support_;
};

inline cplx eval(const polyexponential& p, long long k) { return p(k); }

/// a * p1 + b * p2, with coefficients lost to cancellation flushed to zero.
inline polyexponential combine(const polyexponential& p1, const polyexponential& p2, cplx a, cplx b)
{
    std::vector<poly_term> merged;
    auto absorb = [&](const poly_term& t, cplx scale) {
        auto same = std::find_if(merged.begin(), merged.end(), [&](const poly_term& u) {
            return std::abs(u.base - t.base) <= base_tolerance;
        });
        if (same == merged.end()) {
            poly_term s{t.base, {}};
            for (auto c : t.coeffs)
                s.coeffs.push_back(scale * c);
            merged.push_back(std::move(s));
            return;
        }
        if (same->coeffs.size() < t.coeffs.size())
            same->coeffs.resize(t.coeffs.size());
        for (std::size_t i = 0; i < t.coeffs.size(); ++i) {
            const cplx x = same->coeffs[i], y = scale * t.coeffs[i];
            same->coeffs[i] = detail::flush_cancellation(x + y, std::abs(x) + std::abs(y), 8.0);
        }
    };
    for (const auto& t : p1.terms())
        absorb(t, a);
    for (const auto& t : p2.terms())
        absorb(t, b);

    const auto& f1 = p1.finite_support();
    const auto& f2 = p2.finite_support();
    std::vector<cplx> fs(std::max(f1.size(), f2.size()));
    for (std::size_t i = 0; i < fs.size(); ++i) {
        const cplx x = i < f1.size() ? a * f1[i] : cplx(0.0);
        const cplx y = i < f2.size() ? b * f2[i] : cplx(0.0);
        fs[i] = detail::flush_cancellation(x + y, std::abs(x) + std::abs(y), 8.0);
    }
    return polyexponential(std::move(merged), std::move(fs));
}

/// The term of p whose base is ell, or zero when ell is not a base.
inline polyexponential ell_part(const polyexponential& p, cplx ell)
{
    for (const auto& t : p.terms())
        if (std::abs(t.base - ell) <= base_tolerance)
            return polyexponential({t});
    return {};
}

struct split_result {
    polyexponential poly_part;  // bases with |base| > rho
    polyexponential small_part; // everything else, including the finite support
};

inline split_result split(const polyexponential& p, double rho)
{
    std::vector<poly_term> large, small;
    for (const auto& t : p.terms())
        (std::abs(t.base) > rho ? large : small).push_back(t);
    return {polyexponential(std::move(large)), polyexponential(std::move(small), p.finite_support())};
}

struct growth_estimate {
    double rate = 0.0;
    long long first_k = 0; // tail window, inclusive
    long long last_k = 0;
};

/// Empirical limsup |f(k)|^{1/k}: the maximum of |f(k)|^{1/k} over the last
/// ceil(tail_fraction * size) entries. values[i] holds f(first_k + i).
template <class T>
growth_estimate growth_rate(std::span<const T> values, long long first_k, double tail_fraction)
{
    if (values.size() < 4)
        throw error(errc::window_too_short, "growth_rate needs at least 4 values");
    if (first_k < 1)
        throw error(errc::invalid_parameter, "growth_rate needs first_k >= 1");
    if (!(tail_fraction > 0.0) || tail_fraction > 1.0)
        throw error(errc::empty_tail, "tail_fraction must lie in (0, 1]");
    const auto count = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(values.size())));
    if (count == 0)
        throw error(errc::empty_tail, "tail selects no indices");

    growth_estimate g;
    const std::size_t start = values.size() - count;
    g.first_k = first_k + static_cast<long long>(start);
    g.last_k = first_k + static_cast<long long>(values.size()) - 1;
    for (std::size_t i = start; i < values.size(); ++i) {
        const double mag = std::abs(values[i]);
        if (mag == 0.0)
            continue;
        const double k = static_cast<double>(first_k + static_cast<long long>(i));
        g.rate = std::max(g.rate, std::exp(std::log(mag) / k));
    }
    return g;
}

template <class T>
growth_estimate growth_rate(const std::vector<T>& values, long long first_k, double tail_fraction)
{
    return growth_rate(std::span<const T>(values), first_k, tail_fraction);
}

} // namespace sidestep

#endif // SIDESTEP_POLYEXP_HPP
