#include <fracinv/inversion.hpp>
#include <fracinv/forward.hpp>
#include <fracinv/spectrum.hpp>

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace fracinv;

namespace
{
    PoleEstimate pole_at(double modulus, double arg, long group)
    {
        PoleEstimate p;
        p.location = std::polar(modulus, arg);
        p.group_index = group;
        return p;
    }

    std::vector<double> interval_lambdas(std::size_t K)
    {
        return eigen_interval(1.0, K).lambdas;
    }
}

TEST(RecoverAlpha, CommonArgument)
{
    const double alpha = 1.4;
    std::vector<PoleEstimate> poles;
    for (int l = 0; l < 4; ++l)
        poles.push_back(pole_at(1.0 + 3.0 * l, std::numbers::pi / alpha, l));
    const AlphaEstimate est = recover_alpha(poles);
    EXPECT_NEAR(est.alpha, alpha, 1e-14);
    EXPECT_LT(est.dispersion, 1e-14);
}

TEST(RecoverAlpha, RejectsScatteredArguments)
{
    std::vector<PoleEstimate> poles = {pole_at(1.0, 2.2, 0), pole_at(2.0, 2.6, 1)};
    try
    {
        recover_alpha(poles);
        FAIL() << "expected an inconsistency error";
    }
    catch (const Error& e)
    {
        EXPECT_EQ(e.kind(), ErrorKind::inconsistent);
    }
    EXPECT_THROW(recover_alpha({pole_at(1.0, 2.2, 0)}), Error);
}

TEST(RecoverMu, ModulusToTheAlpha)
{
    const double alpha = 1.6;
    std::vector<PoleEstimate> poles = {pole_at(3.0, 1.9, 1), pole_at(1.5, 1.9, 0)};
    const RateEstimate r = recover_mu(poles, alpha);
    ASSERT_EQ(r.mu.size(), 2u);
    EXPECT_NEAR(r.mu[0], std::pow(1.5, alpha), 1e-13);
    EXPECT_NEAR(r.mu[1], std::pow(3.0, alpha), 1e-13);
    EXPECT_EQ(r.group[0], 0u);
    EXPECT_EQ(r.group[1], 1u);
}

TEST(RecoverMu, MatchingErrors)
{
    try
    {
        recover_mu({pole_at(2.0, 1.9, 0), pole_at(2.0, 1.9, 1)}, 1.5);
        FAIL() << "expected a matching error";
    }
    catch (const Error& e)
    {
        EXPECT_EQ(e.kind(), ErrorKind::matching);
    }
    try
    {
        recover_mu({pole_at(1.0, 1.9, 1), pole_at(2.0, 1.9, 0)}, 1.5);
        FAIL() << "expected a matching error";
    }
    catch (const Error& e)
    {
        EXPECT_EQ(e.kind(), ErrorKind::matching);
    }
}

TEST(Decompose, SingleTermExact)
{
    const std::vector<double> lam = interval_lambdas(12);
    std::vector<double> mu;
    for (double l : lam)
        mu.push_back(2.5 * std::pow(l, 0.65));
    const Decomposition d = decompose_multiterm(mu, lam);
    ASSERT_EQ(d.m, 1);
    EXPECT_NEAR(d.beta[0], 0.65, 1e-10);
    EXPECT_NEAR(d.coef[0], 2.5, 1e-9);
    EXPECT_FALSE(d.warning);
}

TEST(Decompose, TwoTermExact)
{
    const std::vector<double> lam = interval_lambdas(20);
    std::vector<double> mu;
    for (double l : lam)
        mu.push_back((std::pow(l, 0.8) + 0.5 * std::pow(l, 0.3)) / 0.7);
    const Decomposition d = decompose_multiterm(mu, lam);
    ASSERT_EQ(d.m, 2);
    EXPECT_NEAR(d.beta[0], 0.8, 1e-8);
    EXPECT_NEAR(d.beta[1], 0.3, 1e-8);
    EXPECT_NEAR(d.coef[0], 1.0 / 0.7, 1e-7);
    EXPECT_NEAR(d.coef[1], 0.5 / 0.7, 1e-7);
    EXPECT_NEAR(d.leading_slope, 0.8, 0.05);
}

TEST(Decompose, TooFewRates)
{
    const std::vector<double> lam = interval_lambdas(5);
    EXPECT_THROW(decompose_multiterm(lam, lam), Error);
    EXPECT_THROW(decompose_multiterm({1.0, 2.0}, {1.0}), Error);
}

TEST(Noise, EstimateFromSmoothTrace)
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd(0.0, 0.01);
    std::vector<double> v;
    for (int i = 0; i < 20000; ++i)
        v.push_back(std::sin(i * 1e-3) + nd(rng));
    EXPECT_NEAR(estimate_noise(v), 0.01, 1e-3);
    std::vector<double> clean;
    for (int i = 0; i < 1000; ++i)
        clean.push_back(1.0 + 2.0 * i);
    EXPECT_EQ(estimate_noise(clean), 0.0);
}

TEST(Vanishing, BasisMeetsEndConditions)
{
    const double T = 2.0;
    const int n = 3;
    const std::vector<Polynomial> basis = vanishing_legendre_basis(6, n, T);
    ASSERT_EQ(basis.size(), 6u);
    for (const Polynomial& p : basis)
        for (int j = 0; j < n; ++j)
            EXPECT_NEAR(p.derivative(T, j), 0.0, 1e-9);
}

TEST(RecoverA, FromModelResidues)
{
    const double a = 0.7, alpha = 1.45;
    const Spectrum sp = eigen_interval(1.0, 3);
    const std::vector<double> gam = {1.0, 0.5, 0.25};
    InitialData init{{0.3, 0.0, 0.1}, {0.1, 0.2, 0.0}};
    SourceSpec src;
    src.n = 1;
    src.z = {TimeSignal::polynomial(Polynomial({1.0, -0.5}), 1.0), TimeSignal::polynomial(Polynomial({0.0, 2.0}), 1.0),
             TimeSignal::zero(1.0)};
    const ReducedData rd = reduce_data(gam, init, src, sp, 1.0);
    ASSERT_EQ(rd.z_nondegenerate.size(), 2u);
    const std::vector<double> mu = {2.0, 9.0, 30.0};
    const TransferFunction H(a, alpha, mu, rd);
    const PoleScan scan = find_poles_model(H, 3, default_window(H, 3));
    ASSERT_EQ(scan.poles.size(), 3u);
    const CoefficientEstimate est = recover_a(scan.poles, alpha, rd);
    EXPECT_EQ(est.used_groups.size(), 2u);
    EXPECT_NEAR(est.a, a, 1e-8);

    std::vector<PoleEstimate> only_last = {scan.poles[2]};
    try
    {
        recover_a(only_last, alpha, rd);
        FAIL() << "expected an identifiability error";
    }
    catch (const Error& e)
    {
        EXPECT_EQ(e.kind(), ErrorKind::identifiability);
    }
}

TEST(RecoverAlpha, TwoThirdsPiGivesOneAndAHalf)
{
    const std::vector<PoleEstimate> poles = {pole_at(1.0, 2.0 * std::numbers::pi / 3.0, 0),
                                             pole_at(4.0, 2.0 * std::numbers::pi / 3.0, 1)};
    EXPECT_NEAR(recover_alpha(poles).alpha, 1.5, 1e-15);
}

TEST(RecoverAlpha, InvariantUnderModulusRescaling)
{
    std::vector<PoleEstimate> poles = {pole_at(1.0, 2.21, 0), pole_at(3.0, 2.25, 1), pole_at(7.0, 2.23, 2)};
    const double a0 = recover_alpha(poles).alpha;
    for (PoleEstimate& p : poles)
        p.location *= 13.7;
    EXPECT_NEAR(recover_alpha(poles).alpha, a0, 1e-15);
}

TEST(RecoverMu, ClosedFormModuli)
{
    EXPECT_NEAR(recover_mu({pole_at(1.0, 2.0, 0), pole_at(2.0, 2.0, 1)}, 1.3).mu[0], 1.0, 1e-15);
    const RateEstimate r = recover_mu({pole_at(8.7240618613220602247, 1.9, 0), pole_at(9.0, 1.9, 1)}, 1.6);
    EXPECT_NEAR(r.mu[0], 32.0, 1e-12);
}

TEST(RecoverMu, InvertsPoleConstruction)
{
    const double alpha = 1.35;
    const std::vector<double> mu = {0.4, 2.0, 9.5, 61.0, 300.0};
    std::vector<PoleEstimate> poles;
    for (std::size_t l = 0; l < mu.size(); ++l)
        poles.push_back(pole_at(std::pow(mu[l], 1.0 / alpha), std::numbers::pi / alpha, static_cast<long>(l)));
    const RateEstimate r = recover_mu(poles, alpha);
    for (std::size_t l = 0; l < mu.size(); ++l)
        EXPECT_NEAR(r.mu[l], mu[l], 1e-10 * mu[l]);
}

TEST(Decompose, ThirtyEigenvaluesTwoTerms)
{
    const std::vector<double> lam = interval_lambdas(30);
    std::vector<double> mu;
    for (double l : lam)
        mu.push_back(2.0 * std::pow(l, 0.9) + std::pow(l, 0.4));
    const Decomposition d = decompose_multiterm(mu, lam);
    ASSERT_EQ(d.m, 2);
    EXPECT_NEAR(d.beta[0], 0.9, 1e-8);
    EXPECT_NEAR(d.beta[1], 0.4, 1e-8);
    EXPECT_NEAR(d.coef[0], 2.0, 1e-8);
    EXPECT_NEAR(d.coef[1], 1.0, 1e-8);
}

TEST(Decompose, SmallRelativeNoise)
{
    const std::vector<double> lam = interval_lambdas(30);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd(0.0, 1e-6);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial)
    {
        std::vector<double> mu;
        for (double l : lam)
            mu.push_back((2.0 * std::pow(l, 0.9) + std::pow(l, 0.4)) * (1.0 + nd(rng)));
        DecomposeOptions opt;
        opt.tol = 1e-5;
        const Decomposition d = decompose_multiterm(mu, lam, opt);
        ASSERT_EQ(d.m, 2) << trial;
        worst = std::max({worst, std::abs(d.beta[0] - 0.9), std::abs(d.beta[1] - 0.4)});
    }
    EXPECT_LT(worst, 1e-2);
}

TEST(RecoverA, DegenerateZIsUnidentifiable)
{
    ReducedData rd;
    rd.T = 1.0;
    rd.phi_hat = {1.0};
    rd.psi_hat = {0.0};
    rd.f_hat = {0.0};
    rd.z_hat = {TimeSignal::zero(1.0)};
    const TransferFunction H(0.7, 1.4, {3.0}, rd);
    const PoleScan scan = find_poles_model(H, 1, default_window(H, 1));
    ASSERT_EQ(scan.poles.size(), 1u);
    try
    {
        recover_a(scan.poles, 1.4, rd);
        FAIL() << "expected an identifiability error";
    }
    catch (const Error& e)
    {
        EXPECT_EQ(e.kind(), ErrorKind::identifiability);
    }
}

namespace
{
    struct SourceCase
    {
        ProblemSpec ps;
        Spectrum sp = eigen_interval(1.0, 10);
        std::vector<double> gam;
        InitialData init;
        SourceSpec src;
        ReducedData rd;
        TimeGrid grid;
        ModelParameters mp;

        SourceCase()
        {
            ps.a = 0.7;
            ps.alpha = 1.4;
            ps.terms = {{1.0, 0.8}, {0.5, 0.3}};
            ps.domain = DomainSpec::interval(1.0);
            ps.T = 1.0;
            ps.T_obs = 2.0;
            gam = observation_weights(PointObservation{0.27, 0.0}, ps.domain, sp).gammas;
            src.n = 2;
            src.f = {1.0, 0.5};
            src.g = TimeSignal::polynomial(Polynomial::bump(16.0, 2, 2, 1.0), 1.0);
            rd = reduce_data(gam, init, src, sp, ps.T);
            grid = TimeGrid::make(5e-3, ps.T, ps.T_obs);
            mp.a = ps.a;
            mp.alpha = ps.alpha;
            mp.mu = mode_rates(ps, sp);
        }
    };
}

TEST(RecoverG, InverseCrimeRoundTrip)
{
    const SourceCase c;
    const ForwardResult fr = solve_forward(c.ps, c.sp, c.gam, c.init, c.src, c.grid);
    RegularizationSpec reg;
    reg.lambda = 1e-14;
    const GRecovery g = recover_g(fr.observed.trace, c.mp, c.rd, reg);
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j + 1 < g.g.size(); ++j)
    {
        const double ref = c.src.g(c.grid.t(j));
        num += std::pow(g.g[j] - ref, 2);
        den += ref * ref;
    }
    EXPECT_LT(std::sqrt(num / den), 1e-3);
}

TEST(RecoverG, LinearAtFixedRegularization)
{
    const SourceCase c;
    TimeTrace r1, r2, sum;
    r1.dt = r2.dt = sum.dt = c.grid.dt;
    for (std::size_t i = 0; i < c.grid.size(); ++i)
    {
        const double t = c.grid.t(i);
        r1.values.push_back(std::sin(3.0 * t) * t * t);
        r2.values.push_back(0.3 * t * t * t - 0.1 * t);
        sum.values.push_back(r1.values.back() + r2.values.back());
    }
    RegularizationSpec reg;
    reg.lambda = 1e-6;
    const GRecovery g1 = recover_g(r1, c.mp, c.rd, reg);
    const GRecovery g2 = recover_g(r2, c.mp, c.rd, reg);
    const GRecovery gs = recover_g(sum, c.mp, c.rd, reg);
    double scale = 0.0;
    for (double v : gs.g)
        scale = std::max(scale, std::abs(v));
    for (std::size_t j = 0; j < gs.g.size(); ++j)
        EXPECT_NEAR(gs.g[j], g1.g[j] + g2.g[j], 1e-9 * scale);
}

TEST(RecoverG, VanishingSourceProfile)
{
    SourceCase c;
    c.rd.f_hat.assign(c.rd.f_hat.size(), 0.0);
    TimeTrace tr;
    tr.dt = c.grid.dt;
    tr.values.assign(c.grid.size(), 0.0);
    try
    {
        recover_g(tr, c.mp, c.rd);
        FAIL() << "expected an identifiability error";
    }
    catch (const Error& e)
    {
        EXPECT_EQ(e.kind(), ErrorKind::identifiability);
    }
}
