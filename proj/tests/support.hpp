#ifndef SIDESTEP_TESTS_SUPPORT_HPP
#define SIDESTEP_TESTS_SUPPORT_HPP

// Test-side generators and oracles. The generator is std::mt19937_64 so that
// test inputs never share a code path with the library's own sampler.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "sidestep/polyexp.hpp"
#include "sidestep/shiftops.hpp"

namespace testing_support {

using sidestep::cplx;

class gen {
public:
    explicit gen(std::uint64_t seed) : eng_(seed) {}

    double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
    bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(eng_); }
    cplx complex(double radius) { return std::polar(real(0.0, radius), real(-M_PI, M_PI)); }

    std::vector<cplx> complex_coeffs(std::size_t count, double scale)
    {
        std::vector<cplx> c;
        for (std::size_t i = 0; i < count; ++i)
            c.emplace_back(real(-scale, scale), real(-scale, scale));
        if (!c.empty() && c.back() == cplx(0.0))
            c.back() = cplx(1.0);
        return c;
    }

    /// Distinct bases with pairwise gaps of at least `gap`.
    std::vector<cplx> distinct_bases(std::size_t count, double radius, double gap)
    {
        std::vector<cplx> out;
        while (out.size() < count) {
            const cplx z = complex(radius);
            if (std::abs(z) < gap)
                continue;
            if (std::all_of(out.begin(), out.end(), [&](cplx w) { return std::abs(w - z) >= gap; }))
                out.push_back(z);
        }
        return out;
    }

    /// Distinct real points closed under conjugation trivially.
    std::vector<cplx> real_points(std::size_t count, double radius, double gap)
    {
        std::vector<cplx> out;
        while (out.size() < count) {
            const double x = real(-radius, radius);
            if (std::all_of(out.begin(), out.end(), [&](cplx w) { return std::abs(w.real() - x) >= gap; }))
                out.emplace_back(x, 0.0);
        }
        return out;
    }

    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
};

inline double rel_err(cplx got, cplx want, double floor = 1.0)
{
    return std::abs(got - want) / std::max(std::abs(want), floor);
}

/// sum_l p_l(k) l^k evaluated with std::pow, term by term.
inline cplx naive_eval(const std::vector<sidestep::poly_term>& terms, long long k)
{
    cplx acc(0.0);
    for (const auto& t : terms) {
        cplx p(0.0);
        for (std::size_t i = 0; i < t.coeffs.size(); ++i)
            p += t.coeffs[i] * std::pow(static_cast<double>(k), static_cast<double>(i));
        acc += p * std::pow(t.base, static_cast<double>(k));
    }
    return acc;
}

/// prod over l of (z - l)^D, evaluated directly.
inline cplx product_form(cplx z, int d, const std::vector<cplx>& set)
{
    cplx acc(1.0);
    for (cplx l : set)
        acc *= std::pow(z - l, d);
    return acc;
}

} // namespace testing_support

#endif
