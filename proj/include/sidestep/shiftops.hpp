#ifndef SIDESTEP_SHIFTOPS_HPP
#define SIDESTEP_SHIFTOPS_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "sidestep/error.hpp"
#include "sidestep/polyexp.hpp"

namespace sidestep {

/// Q(z) = q_0 + q_1 z + ... + q_t z^t, acting on sequences as Q(S) where S
/// is the shift (Sf)(k) = f(k+1). Trailing zero coefficients are trimmed, so
/// the zero polynomial has no coefficients at all.
template <class T>
class basic_shift_polynomial {
public:
    using value_type = T;

    basic_shift_polynomial() = default;

    explicit basic_shift_polynomial(std::vector<T> coeffs) : coeffs_(std::move(coeffs))
    {
        while (!coeffs_.empty() && coeffs_.back() == T(0))
            coeffs_.pop_back();
    }

    static basic_shift_polynomial one() { return basic_shift_polynomial(std::vector<T>{T(1)}); }

    /// z - root
    static basic_shift_polynomial linear(T root) { return basic_shift_polynomial(std::vector<T>{-root, T(1)}); }

    const std::vector<T>& coeffs() const noexcept { return coeffs_; }
    bool is_zero() const noexcept { return coeffs_.empty(); }
    std::size_t degree() const noexcept { return coeffs_.empty() ? 0 : coeffs_.size() - 1; }

    T operator()(T z) const { return detail::horner<T>(coeffs_, z); }

    friend basic_shift_polynomial operator*(const basic_shift_polynomial& a, const basic_shift_polynomial& b)
    {
        if (a.is_zero() || b.is_zero())
            return {};
        std::vector<T> out(a.coeffs_.size() + b.coeffs_.size() - 1, T(0));
        for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
            for (std::size_t j = 0; j < b.coeffs_.size(); ++j)
                out[i + j] += a.coeffs_[i] * b.coeffs_[j];
        return basic_shift_polynomial(std::move(out));
    }

    friend bool operator==(const basic_shift_polynomial&, const basic_shift_polynomial&) = default;

private:
    std::vector<T> coeffs_;
};

using shift_polynomial = basic_shift_polynomial<cplx>;

template <class T>
basic_shift_polynomial<T> mul(const basic_shift_polynomial<T>& a, const basic_shift_polynomial<T>& b)
{
    return a * b;
}

template <class T>
T eval(const basic_shift_polynomial<T>& q, T z)
{
    return q(z);
}

namespace detail {

inline void check_distinct(std::span<const cplx> set)
{
    for (std::size_t i = 0; i < set.size(); ++i)
        for (std::size_t j = i + 1; j < set.size(); ++j)
            if (std::abs(set[i] - set[j]) <= base_tolerance)
                throw error(errc::duplicate_base, "set contains a repeated element");
}

} // namespace detail

/// Ann_{D,L}(z) = prod over l in L of (z - l)^D, monic of degree D * |L|.
///
/// Built by D * |L| successive multiplications by (z - l), visiting L in
/// ascending |l|. D = 0 or an empty L yields the constant 1.
inline shift_polynomial annihilator(int degree, std::span<const cplx> set)
{
    if (degree < 0)
        throw error(errc::invalid_parameter, "annihilator degree must be nonnegative");
    detail::check_distinct(set);
    std::vector<cplx> order(set.begin(), set.end());
    std::stable_sort(order.begin(), order.end(), [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });
    auto q = shift_polynomial::one();
    for (cplx ell : order)
        for (int d = 0; d < degree; ++d)
            q = q * shift_polynomial::linear(ell);
    return q;
}

inline shift_polynomial annihilator(int degree, const std::vector<cplx>& set)
{
    return annihilator(degree, std::span<const cplx>(set));
}

/// True when the multiset is closed under complex conjugation.
inline bool conjugation_closed(std::span<const cplx> set, double tol = 1e-9)
{
    std::vector<bool> used(set.size(), false);
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (used[i])
            continue;
        if (std::abs(set[i].imag()) <= tol) {
            used[i] = true;
            continue;
        }
        bool found = false;
        for (std::size_t j = i + 1; j < set.size() && !found; ++j) {
            if (!used[j] && std::abs(set[j] - std::conj(set[i])) <= tol) {
                used[i] = used[j] = true;
                found = true;
            }
        }
        if (!found)
            return false;
    }
    return true;
}

/// Ann_{D,L} for a conjugation-closed L, assembled over a real scalar type
/// from the factors (z - l) for real l and z^2 - 2 Re(l) z + |l|^2 for
/// conjugate pairs. Useful with extended-precision T.
template <class T>
basic_shift_polynomial<T> real_annihilator(int degree, std::span<const cplx> set)
{
    if (degree < 0)
        throw error(errc::invalid_parameter, "annihilator degree must be nonnegative");
    detail::check_distinct(set);
    if (!conjugation_closed(set))
        throw error(errc::invalid_parameter, "set is not closed under conjugation");
    std::vector<cplx> order(set.begin(), set.end());
    std::stable_sort(order.begin(), order.end(), [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });
    auto q = basic_shift_polynomial<T>::one();
    for (cplx ell : order) {
        if (ell.imag() < -1e-9)
            continue; // covered by its conjugate
        basic_shift_polynomial<T> factor;
        if (std::abs(ell.imag()) <= 1e-9) {
            factor = basic_shift_polynomial<T>::linear(T(ell.real()));
        } else {
            const T re(ell.real()), im(ell.imag());
            factor = basic_shift_polynomial<T>(std::vector<T>{re * re + im * im, T(-2) * re, T(1)});
        }
        for (int d = 0; d < degree; ++d)
            q = q * factor;
    }
    return q;
}

/// g(k) = sum_i q_i f(k+i). values[0] is f(k0); the result keeps k0 as its
/// first index and loses deg Q entries at the top of the window.
template <class T, class U>
std::vector<U> apply(const basic_shift_polynomial<T>& q, std::span<const U> values)
{
    const std::size_t deg = q.degree();
    if (values.size() < deg + 1)
        throw error(errc::window_too_short,
                    "sequence of length " + std::to_string(values.size()) + " cannot take a degree " +
                        std::to_string(deg) + " shift polynomial");
    std::vector<U> out(values.size() - deg, U(0));
    const auto& c = q.coeffs();
    for (std::size_t k = 0; k < out.size(); ++k) {
        U acc(0);
        for (std::size_t i = 0; i < c.size(); ++i)
            acc += U(c[i]) * values[k + i];
        out[k] = acc;
    }
    return out;
}

template <class T, class U>
std::vector<U> apply(const basic_shift_polynomial<T>& q, const std::vector<U>& values)
{
    return sidestep::apply(q, std::span<const U>(values));
}

/// Exact symbolic Q(S) on a polyexponential: each term p(k) l^k maps to
/// l^k * sum_i q_i l^i p(k+i), which keeps the base and never raises the
/// degree. Coefficients that cancel to rounding level are flushed to zero, so
/// terms annihilated by Q disappear from the result.
inline polyexponential apply(const shift_polynomial& q, const polyexponential& p)
{
    const auto& qc = q.coeffs();
    std::vector<poly_term> out_terms;
    for (const auto& t : p.terms()) {
        const std::size_t len = t.coeffs.size();
        std::vector<cplx> acc(len, cplx(0.0));
        std::vector<double> mag(len, 0.0);
        cplx ell_pow(1.0);
        for (std::size_t i = 0; i < qc.size(); ++i, ell_pow *= t.base) {
            const cplx w = qc[i] * ell_pow;
            if (w == cplx(0.0))
                continue;
            const double shift = static_cast<double>(i);
            // p(k+i) = sum_s k^s sum_{m>=s} c_m C(m,s) i^(m-s)
            for (std::size_t s = 0; s < len; ++s) {
                double binom = 1.0; // C(m, s), starting at m = s
                double ipow_ms = 1.0;
                for (std::size_t m = s; m < len; ++m) {
                    const cplx term = w * t.coeffs[m] * (binom * ipow_ms);
                    acc[s] += term;
                    mag[s] += std::abs(term);
                    binom = binom * static_cast<double>(m + 1) / static_cast<double>(m + 1 - s);
                    ipow_ms *= shift;
                }
            }
        }
        for (std::size_t s = 0; s < len; ++s)
            acc[s] = detail::flush_cancellation(acc[s], mag[s]);
        out_terms.push_back({t.base, std::move(acc)});
    }

    const auto& fs = p.finite_support();
    std::vector<cplx> out_fs(fs.size(), cplx(0.0));
    for (std::size_t k = 0; k < fs.size(); ++k) {
        double m = 0.0;
        for (std::size_t i = 0; i < qc.size() && k + i < fs.size(); ++i) {
            out_fs[k] += qc[i] * fs[k + i];
            m += std::abs(qc[i] * fs[k + i]);
        }
        out_fs[k] = detail::flush_cancellation(out_fs[k], m);
    }
    return polyexponential(std::move(out_terms), std::move(out_fs));
}

/// Smallest D for which Ann_{D,L}(S) kills p: one more than the largest
/// polynomial degree of p. The zero function returns 1 by convention.
inline int minimal_annihilating_degree(const polyexponential& p, std::span<const cplx> set)
{
    for (const auto& t : p.terms()) {
        const bool found = std::any_of(set.begin(), set.end(),
                                       [&](cplx l) { return std::abs(l - t.base) <= base_tolerance; });
        if (!found)
            throw error(errc::base_not_in_set, "polyexponential base is not in the annihilated set");
    }
    int d = p.terms().empty() ? 1 : static_cast<int>(p.max_degree()) + 1;
    if (!p.finite_support().empty()) {
        // the finite support plays the role of base zero; S^D clears it once D >= its length
        const bool has_zero = std::any_of(set.begin(), set.end(), [](cplx l) { return std::abs(l) <= base_tolerance; });
        if (!has_zero)
            throw error(errc::base_not_in_set, "finitely supported part needs 0 in the annihilated set");
        d = std::max(d, static_cast<int>(p.finite_support().size()));
    }
    if (!sidestep::apply(annihilator(d, set), p).is_zero())
        throw error(errc::ill_conditioned, "annihilator of the computed degree did not cancel the input");
    return d;
}

inline int minimal_annihilating_degree(const polyexponential& p, const std::vector<cplx>& set)
{
    return minimal_annihilating_degree(p, std::span<const cplx>(set));
}

} // namespace sidestep

#endif // SIDESTEP_SHIFTOPS_HPP
