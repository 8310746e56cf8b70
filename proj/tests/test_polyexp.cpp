#include <gtest/gtest.h>

#include "sidestep/polyexp.hpp"
#include "support.hpp"

using namespace sidestep;
using testing_support::gen;
using testing_support::rel_err;

namespace {

polyexponential pe(std::initializer_list<poly_term> terms) { return polyexponential(std::vector<poly_term>(terms)); }

} // namespace

TEST(PolyexpEval, SingleExponential)
{
    EXPECT_EQ(pe({{2.0, {1.0}}})(3), cplx(8.0));
}

TEST(PolyexpEval, PolynomialWithBaseOne)
{
    EXPECT_EQ(pe({{1.0, {0.0, 1.0}}})(5), cplx(5.0));
}

TEST(PolyexpEval, TwoTerms)
{
    const auto p = pe({{2.0, {0.0, 1.0}}, {-1.0, {3.0}}});
    EXPECT_NEAR(std::abs(p(2) - cplx(11.0)), 0.0, 1e-12);
}

TEST(PolyexpEval, FiniteSupportAddsOnlyInsideItsRange)
{
    const polyexponential p({{2.0, {1.0}}}, {cplx(10.0), cplx(20.0)});
    EXPECT_EQ(p(1), cplx(12.0));
    EXPECT_EQ(p(2), cplx(24.0));
    EXPECT_EQ(p(3), cplx(8.0));
}

TEST(PolyexpEval, RejectsNonPositiveK)
{
    EXPECT_THROW(pe({{2.0, {1.0}}})(0), error);
}

TEST(PolyexpNormalize, MergesCloseBasesAndDropsZeroPolynomials)
{
    const auto p = pe({{2.0, {1.0}}, {2.0 + 1e-12, {-1.0}}, {3.0, {0.0, 0.0}}, {0.0, {4.0}}});
    EXPECT_TRUE(p.is_zero());
    const auto q = pe({{3.0, {1.0}}, {2.0, {0.0, 1.0}}});
    ASSERT_EQ(q.terms().size(), 2u);
    EXPECT_EQ(q.terms()[0].base, cplx(2.0));
}

TEST(PolyexpNormalize, DegreeCap)
{
    EXPECT_NO_THROW(polyexponential::exponential(2.0, std::vector<cplx>(max_poly_degree + 1, 1.0)));
    EXPECT_THROW(polyexponential::exponential(2.0, std::vector<cplx>(max_poly_degree + 2, 1.0)), error);
}

TEST(PolyexpCombine, CancellationGivesZero)
{
    const auto p = pe({{2.0, {1.0}}});
    EXPECT_TRUE(combine(p, p, 1.0, -1.0).is_zero());
}

TEST(PolyexpCombine, DisjointBasesUnion)
{
    const auto c = combine(pe({{2.0, {1.0}}}), pe({{3.0, {1.0}}}), 1.0, 1.0);
    ASSERT_EQ(c.bases().size(), 2u);
    EXPECT_EQ(c.bases()[0], cplx(2.0));
    EXPECT_EQ(c.bases()[1], cplx(3.0));
}

TEST(PolyexpCombine, CoefficientwiseAddition)
{
    const auto c = combine(pe({{2.0, {0.0, 1.0}}}), pe({{2.0, {1.0, -1.0}}}), 1.0, 1.0);
    ASSERT_EQ(c.terms().size(), 1u);
    EXPECT_EQ(c.terms()[0].coeffs, std::vector<cplx>{cplx(1.0)});
}

TEST(PolyexpEllPart, Extraction)
{
    const auto p = pe({{2.0, {0.0, 1.0}}, {3.0, {1.0}}});
    const auto part = ell_part(p, 3.0);
    ASSERT_EQ(part.terms().size(), 1u);
    EXPECT_EQ(part.terms()[0].base, cplx(3.0));
    EXPECT_TRUE(ell_part(pe({{2.0, {0.0, 1.0}}}), 5.0).is_zero());
    const auto neg = ell_part(pe({{2.0, {0.0, 1.0}}, {-2.0, {0.0, 0.0, 1.0}}}), -2.0);
    ASSERT_EQ(neg.terms().size(), 1u);
    EXPECT_EQ(neg.terms()[0].coeffs.size(), 3u);
}

TEST(PolyexpSplit, ThresholdOnModulus)
{
    auto s = split(pe({{2.0, {1.0}}, {0.5, {1.0}}}), 1.0);
    EXPECT_EQ(s.poly_part.bases(), std::vector<cplx>{cplx(2.0)});
    EXPECT_EQ(s.small_part.bases(), std::vector<cplx>{cplx(0.5)});

    s = split(pe({{2.0, {1.0}}}), 3.0);
    EXPECT_TRUE(s.poly_part.is_zero());
    EXPECT_EQ(s.small_part.bases().size(), 1u);

    s = split(pe({{-1.5, {0.0, 1.0}}, {1.5, {1.0}}, {1.0, {1.0}}}), 1.4);
    EXPECT_EQ(s.poly_part.bases().size(), 2u);
    EXPECT_EQ(s.small_part.bases(), std::vector<cplx>{cplx(1.0)});
}

TEST(PolyexpSplit, FiniteSupportGoesToSmallPart)
{
    const polyexponential p({{2.0, {1.0}}}, {cplx(1.0)});
    const auto s = split(p, 1.0);
    EXPECT_TRUE(s.poly_part.finite_support().empty());
    EXPECT_EQ(s.small_part.finite_support().size(), 1u);
}

TEST(GrowthRate, PureExponential)
{
    std::vector<double> f;
    for (int k = 1; k <= 40; ++k)
        f.push_back(std::pow(2.0, k));
    EXPECT_NEAR(growth_rate(f, 1, 0.5).rate, 2.0, 1e-9);
}

TEST(GrowthRate, ZeroSequence)
{
    EXPECT_EQ(growth_rate(std::vector<double>(40, 0.0), 1, 0.5).rate, 0.0);
}

TEST(GrowthRate, PolynomialTimesExponential)
{
    std::vector<double> f;
    for (int k = 1; k <= 40; ++k)
        f.push_back(k * std::pow(3.0, k));
    const auto g = growth_rate(f, 1, 0.25);
    EXPECT_GE(g.rate, 3.0);
    EXPECT_LE(g.rate, 3.0 * std::pow(40.0, 1.0 / 30.0));
    EXPECT_EQ(g.first_k, 31);
    EXPECT_EQ(g.last_k, 40);
}

TEST(GrowthRate, Errors)
{
    EXPECT_THROW(growth_rate(std::vector<double>(3, 1.0), 1, 0.5), error);
    try {
        growth_rate(std::vector<double>(8, 1.0), 1, 0.0);
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::empty_tail);
    }
}

TEST(GrowthRate, ConstantTimesExponentialWithinConstantFactor)
{
    gen g(11);
    for (int trial = 0; trial < 200; ++trial) {
        const double c = g.real(0.01, 100.0) * (g.coin() ? 1.0 : -1.0);
        const double rho = g.real(0.1, 5.0);
        std::vector<double> f;
        for (int k = 1; k <= 40; ++k)
            f.push_back(c * std::pow(rho, k));
        const auto est = growth_rate(f, 1, 0.5);
        const double factor = std::pow(std::abs(c), 1.0 / static_cast<double>(est.first_k));
        EXPECT_NEAR(est.rate, rho * std::max(factor, std::pow(std::abs(c), 1.0 / 40.0)), 1e-9 * rho);
    }
}

// Property tests over random polyexponentials, checked against direct
// term-by-term evaluation with std::pow.

namespace {

std::vector<poly_term> random_terms(gen& g, std::size_t count)
{
    std::vector<poly_term> terms;
    for (cplx b : g.distinct_bases(count, 2.5, 0.05))
        terms.push_back({b, g.complex_coeffs(static_cast<std::size_t>(g.integer(1, 4)), 2.0)});
    return terms;
}

} // namespace

TEST(PolyexpProperty, EvaluationMatchesNaive)
{
    gen g(1);
    for (int trial = 0; trial < 300; ++trial) {
        const auto terms = random_terms(g, static_cast<std::size_t>(g.integer(1, 5)));
        const polyexponential p(terms);
        for (long long k = 1; k <= 30; ++k)
            ASSERT_LT(rel_err(p(k), testing_support::naive_eval(terms, k)), 1e-11);
    }
}

TEST(PolyexpProperty, CombineIsLinearAndMinimal)
{
    gen g(2);
    for (int trial = 0; trial < 300; ++trial) {
        auto t1 = random_terms(g, static_cast<std::size_t>(g.integer(1, 4)));
        auto t2 = random_terms(g, static_cast<std::size_t>(g.integer(1, 4)));
        if (g.coin())
            t2.push_back(t1.front()); // force a shared base
        const polyexponential p1(t1), p2(t2);
        const cplx a = g.complex(2.0), b = g.complex(2.0);
        const auto c = combine(p1, p2, a, b);
        for (const auto& t : c.terms()) {
            ASSERT_FALSE(t.coeffs.empty());
            ASSERT_NE(t.coeffs.back(), cplx(0.0));
        }
        for (std::size_t i = 0; i < c.terms().size(); ++i)
            for (std::size_t j = i + 1; j < c.terms().size(); ++j)
                ASSERT_GT(std::abs(c.terms()[i].base - c.terms()[j].base), base_tolerance);
        for (long long k = 1; k <= 30; ++k) {
            const cplx want = a * p1(k) + b * p2(k);
            const double scale = std::abs(a * p1(k)) + std::abs(b * p2(k));
            ASSERT_LE(std::abs(c(k) - want), 1e-9 * std::max(scale, 1.0));
        }
    }
}

TEST(PolyexpProperty, SelfCancellationIsExactlyZero)
{
    gen g(3);
    for (int trial = 0; trial < 200; ++trial) {
        const polyexponential p(random_terms(g, 3));
        const cplx a = g.complex(3.0) + cplx(0.1);
        EXPECT_TRUE(combine(p, p, a, -a).is_zero());
    }
}

TEST(PolyexpProperty, SplitSumsBack)
{
    gen g(4);
    for (int trial = 0; trial < 300; ++trial) {
        const polyexponential p(random_terms(g, static_cast<std::size_t>(g.integer(1, 5))));
        const double rho = g.real(0.0, 2.5);
        const auto s = split(p, rho);
        for (const auto& t : s.poly_part.terms())
            ASSERT_GT(std::abs(t.base), rho);
        for (const auto& t : s.small_part.terms())
            ASSERT_LE(std::abs(t.base), rho);
        for (long long k = 1; k <= 30; ++k)
            ASSERT_LT(rel_err(s.poly_part(k) + s.small_part(k), p(k)), 1e-12);
    }
}
