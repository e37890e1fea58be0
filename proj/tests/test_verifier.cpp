#include <fracinv/verifier.hpp>

#include <gtest/gtest.h>

#include <numbers>

using namespace fracinv;

namespace
{
    ReducedData one_group(double phi, double psi, double f, TimeSignal z, double T)
    {
        ReducedData rd;
        rd.phi_hat = {phi};
        rd.psi_hat = {psi};
        rd.f_hat = {f};
        rd.z_hat = {std::move(z)};
        rd.T = T;
        return rd;
    }
}

TEST(C0, HandValue)
{
    // b/a = 1; lambda_1^{beta/alpha_high} = pi^{2/3} is the smaller factor;
    // |cos(pi/1.5)|^3 = 1/8; ((n+2)/(T e))^{n+2} = (3/e)^3 > 1
    const Bounds bd{1.0, 1.0, 1.25, 1.5, 0.5};
    const double pi = std::numbers::pi, e = std::numbers::e;
    const double ref = std::pow(pi, 2.0 / 3.0) * 0.125 / std::pow(3.0 / e, 3);
    EXPECT_NEAR(compute_C0(bd, 1, 1.0, pi * pi), ref, 1e-15);
}

TEST(C0, MonotoneInBounds)
{
    const double lam = std::numbers::pi * std::numbers::pi;
    const Bounds base{0.5, 2.0, 1.2, 1.6, 0.3};
    const double c = compute_C0(base, 2, 1.0, lam);
    Bounds wider = base;
    wider.alpha_high = 1.8;
    EXPECT_LT(compute_C0(wider, 2, 1.0, lam), c);
    Bounds larger_a = base;
    larger_a.a_high = 4.0;
    EXPECT_LT(compute_C0(larger_a, 2, 1.0, lam), c);
    Bounds larger_b = base;
    larger_b.b_low = 1.0;
    EXPECT_GT(compute_C0(larger_b, 2, 1.0, lam), c);
    EXPECT_GE(compute_C0(base, 2, 4.0, lam), c);
}

TEST(C0, InvalidOrdering)
{
    EXPECT_THROW(compute_C0({1.0, 1.0, 1.6, 1.4, 0.5}, 1, 1.0, 1.0), Error);
    EXPECT_THROW(compute_C0({0.0, 1.0, 1.2, 1.4, 0.5}, 1, 1.0, 1.0), Error);
    EXPECT_THROW(compute_C0({1.0, 1.0, 1.2, 1.4, 0.5}, 0, 1.0, 1.0), Error);
}

TEST(InNd, Fraction)
{
    EXPECT_FALSE(in_nd({}));
    EXPECT_FALSE(in_nd({0.0, 0.0}));
    EXPECT_TRUE(in_nd({1.0, 0.0, 0.0, 0.0, 0.0}));
    EXPECT_FALSE(in_nd({1.0, 0.0, 0.0, 0.0, 0.0, 0.0}));
}

TEST(Conditions, EndBehaviourAndZeroGroups)
{
    const double T = 1.5;
    const int n = 2;
    const Spectrum sp = eigen_interval(1.0, 3);
    const std::vector<double> gam = {1.0, 1.0, 1.0};
    InitialData init;
    SourceSpec src;
    src.n = n;
    // t^2 (T - t) vanishes at T with derivative -T^2; t does not vanish
    src.z = {TimeSignal::polynomial(Polynomial::bump(1.0, 2, 1, T), T),
             TimeSignal::polynomial(Polynomial({0.0, 1.0}), T), TimeSignal::zero(T)};
    const ReducedData rd = reduce_data(gam, init, src, sp, T);
    const HypothesisReport rep = check_conditions(gam, init, src, rd, n);
    ASSERT_EQ(rep.uniI0_ok.size(), 3u);
    EXPECT_TRUE(rep.uniI0_ok[0]);
    EXPECT_TRUE(rep.uniI0_ok[1]);
    EXPECT_FALSE(rep.uniI0_ok[2]);
    EXPECT_TRUE(rep.smooth_vanish_ok[0]);
    EXPECT_FALSE(rep.smooth_vanish_ok[1]);
    EXPECT_NEAR(rep.z_end_derivative[0], -T * T, 1e-12);
    EXPECT_NEAR(rep.z_end_derivative[1], 1.0, 1e-12);
    EXPECT_EQ(rep.z_end_derivative[2], 0.0);
    EXPECT_FALSE(rep.f_nd);
    EXPECT_TRUE(rep.z_nd);
    // the zero group carries no data, so C_dagger stays finite
    EXPECT_TRUE(std::isfinite(rep.c_dagger));
}

TEST(Gkits, HandMargin)
{
    // z = t on [0, 4], n = 1: lead = C0 * 4, rest = sup|z'| + |phi| = 1.2
    const double T = 4.0, C0 = 0.5;
    const ReducedData rd = one_group(0.2, 0.0, 0.0, TimeSignal::polynomial(Polynomial({0.0, 1.0}), T), T);
    const GkitsResult r = check_gkits(rd, TimeSignal::zero(T), 1, C0);
    ASSERT_TRUE(r.applicable[0]);
    EXPECT_TRUE(r.ok[0]);
    EXPECT_NEAR(r.margin[0], 0.8, 1e-12);

    // a source term with |f| (sup|g'| + |g(0)|) = 1 >= 0.8 breaks it
    const ReducedData rf = one_group(0.2, 0.0, 1.0, TimeSignal::polynomial(Polynomial({0.0, 1.0}), T), T);
    const GkitsResult bad = check_gkits(rf, TimeSignal::polynomial(Polynomial({0.0, 1.0}), T), 1, C0);
    EXPECT_FALSE(bad.ok[0]);
    EXPECT_NEAR(bad.margin[0], -0.2, 1e-12);
}

TEST(Gkits, NotApplicableWithoutEndValue)
{
    const double T = 1.0;
    const ReducedData rd = one_group(1.0, 0.0, 0.0, TimeSignal::polynomial(Polynomial::bump(1.0, 1, 1, T), T), T);
    const GkitsResult r = check_gkits(rd, TimeSignal::zero(T), 1, 0.5);
    EXPECT_FALSE(r.applicable[0]);
    EXPECT_TRUE(r.ok[0]);
}

TEST(Nondegeneracy, TrivialCases)
{
    const double alpha = 1.5, a = 2.0;
    const std::vector<double> mu = {1.0};
    const auto none = [](cplx) { return cplx(0.0, 0.0); };
    const NondegeneracyResult zero = check_nondegeneracy(alpha, mu, one_group(0, 0, 0, TimeSignal::zero(1.0), 1.0), a, none);
    EXPECT_FALSE(zero.ok[0]);
    const NondegeneracyResult phi = check_nondegeneracy(alpha, mu, one_group(1, 0, 0, TimeSignal::zero(1.0), 1.0), a, none);
    EXPECT_TRUE(phi.ok[0]);
    const cplx s = std::polar(1.0, std::numbers::pi / alpha);
    EXPECT_LT(std::abs(phi.value[0] * std::exp(phi.shift[0]) - s), 1e-15);
}

TEST(Nondegeneracy, ConstantZHandValue)
{
    // psi + Z(s)/a with Z(s) = c (1 - e^{-sT}) / s
    const double alpha = 1.3, a = 0.8, c = 1.7, T = 2.0, psi = -0.4;
    const std::vector<double> mu = {6.0};
    const ReducedData rd = one_group(0.0, psi, 0.0, TimeSignal::polynomial(Polynomial({c}), T), T);
    const NondegeneracyResult r = check_nondegeneracy(alpha, mu, rd, a, [](cplx) { return cplx(0.0, 0.0); });
    const cplx s = std::polar(std::pow(6.0, 1.0 / alpha), std::numbers::pi / alpha);
    const cplx ref = psi + c * (1.0 - std::exp(-s * T)) / s / a;
    EXPECT_LT(std::abs(r.value[0] * std::exp(r.shift[0]) - ref) / std::abs(ref), 1e-12);
    EXPECT_TRUE(r.ok[0]);
    EXPECT_NEAR(r.shift[0], -s.real() * T, 1e-12);
}
