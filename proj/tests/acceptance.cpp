// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <fracinv/forward.hpp>
#include <fracinv/inversion.hpp>
#include <fracinv/io.hpp>
#include <fracinv/laplace.hpp>
#include <fracinv/mlf.hpp>
#include <fracinv/spectrum.hpp>
#include <fracinv/verifier.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

using namespace fracinv;

namespace
{
    struct Outcome
    {
        bool pass = false;
        std::string detail;
    };

    int failures = 0;
    std::vector<int> selected;

    void run(int id, const char* name, double budget_s, const std::function<Outcome()>& body)
    {
        if (!selected.empty() && std::find(selected.begin(), selected.end(), id) == selected.end())
            return;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try
        {
            o = body();
        }
        catch (const Error& e)
        {
            o.detail = std::string("error [") + e.stage() + "] " + to_string(e.kind()) + ": " + e.what();
        }
        catch (const std::exception& e)
        {
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < budget_s;
        const bool pass = o.pass && in_time;
        if (!pass)
            ++failures;
        std::printf("%s criterion %d (%s): %s; %.1f s of %.0f s\n", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(),
                    secs, budget_s);
        std::fflush(stdout);
    }

    std::string fmt(const char* f, double v)
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, f, v);
        return buf;
    }

    Outcome special_functions()
    {
        double err_exp = 0.0;
        double err_cos = 0.0;
        double err_rec = 0.0;
        // E_{1,1}(z) = e^z on |z| <= 30, 20 arguments x 25 radii
        for (int i = 0; i < 20; ++i)
            for (int j = 1; j <= 25; ++j)
            {
                const cplx z = std::polar(30.0 * j / 25.0, -std::numbers::pi + 2.0 * std::numbers::pi * i / 20.0);
                const cplx ref = std::exp(z);
                err_exp = std::max(err_exp, std::abs(ml({1.0, 1.0}, z) - ref) / std::max(std::abs(ref), 1.0));
            }
        // E_{2,1}(-t^2) = cos t on 500 points of (0, 30]
        for (int i = 1; i <= 500; ++i)
        {
            const double t = 30.0 * i / 500.0;
            const double ref = std::cos(t);
            err_cos = std::max(err_cos, std::abs(ml({2.0, 1.0}, cplx(-t * t, 0.0)) - ref) / std::max(std::abs(ref), 1.0));
        }
        // E_{a,b}(z) = 1/Gamma(b) + z E_{a,a+b}(z)
        for (double a : {1.2, 1.4, 1.8})
            for (double b : {1.0, 2.0})
                for (int i = 0; i < 12; ++i)
                    for (int j = 1; j <= 10; ++j)
                    {
                        const cplx z = std::polar(20.0 * j / 10.0, -std::numbers::pi + 2.0 * std::numbers::pi * i / 12.0);
                        const cplx lhs = ml({a, b}, z);
                        const cplx rhs2 = z * ml({a, a + b}, z);
                        const double scale = std::max({std::abs(lhs), std::abs(rhs2), 1.0});
                        err_rec = std::max(err_rec, std::abs(lhs - 1.0 / std::tgamma(b) - rhs2) / scale);
                    }
        Outcome o;
        o.pass = err_exp <= 1e-10 && err_cos <= 1e-10 && err_rec <= 1e-10;
        o.detail = "exp " + fmt("%.2e", err_exp) + ", cos " + fmt("%.2e", err_cos) + ", recurrence " + fmt("%.2e", err_rec);
        return o;
    }

    Outcome forward_laplace()
    {
        ProblemSpec ps;
        ps.a = 0.7;
        ps.alpha = 1.4;
        ps.terms = {{1.0, 0.8}, {0.5, 0.3}};
        ps.domain = DomainSpec::interval(1.0);
        ps.T = 1.0;
        ps.T_obs = 30.0;
        const Spectrum sp = eigen_interval(1.0, 3);
        const std::vector<double> gam = observation_weights(PointObservation{0.27, 0.0}, ps.domain, sp).gammas;
        InitialData init{{0.3, -0.2, 0.1}, {0.1, 0.0, 0.05}};
        SourceSpec src;
        src.n = 2;
        src.g = TimeSignal::polynomial(Polynomial::bump(16.0, 2, 2, 1.0), 1.0);
        src.f = {1.0, 0.5, 0.0};
        src.z = {TimeSignal::zero(1.0), TimeSignal::zero(1.0), TimeSignal::polynomial(Polynomial::bump(2.0, 1, 2, 1.0), 1.0)};
        const double dt = 2e-3;
        const TimeGrid grid = TimeGrid::make(dt, ps.T, ps.T_obs);
        const ForwardResult fr = solve_forward(ps, sp, gam, init, src, grid);
        const std::vector<double>& h = fr.observed.trace.values;

        const ReducedData rd = reduce_data(gam, init, src, sp, ps.T);
        const TimeSignal g = src.g;
        const TransferFunction H(ps.a, ps.alpha, fr.mu, rd, [g](cplx s) { return g.laplace(s); });

        double worst = 0.0;
        for (double re : {1.0, 2.0, 4.0})
            for (double im : {0.0, 1.0})
            {
                const cplx s(re, im);
                // composite Simpson over [0, T_obs]
                cplx acc(0.0, 0.0);
                const std::size_t n = h.size() - 1;
                for (std::size_t i = 0; i <= n; ++i)
                {
                    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
                    acc += w * std::exp(-s * grid.t(i)) * h[i];
                }
                acc *= dt / 3.0;
                const cplx ref = H(s);
                worst = std::max(worst, std::abs(acc - ref) / std::abs(ref));
            }
        Outcome o;
        o.pass = (h.size() - 1) % 2 == 0 && worst <= 1e-4;
        o.detail = "max relative transform mismatch " + fmt("%.2e", worst);
        return o;
    }

    Outcome residual_oracle_ratio()
    {
        double lo = 1e300;
        double hi = 0.0;
        std::string detail;
        for (double alpha : {1.2, 1.5, 1.8})
        {
            ProblemSpec ps;
            ps.a = 0.7;
            ps.alpha = alpha;
            ps.terms = {{1.0, 0.8}};
            ps.domain = DomainSpec::interval(1.0);
            ps.T = 1.0;
            ps.T_obs = 2.0;
            const double mu = 20.0;
            SourceSpec src;
            src.g = TimeSignal::polynomial(Polynomial::bump(16.0, 2, 2, 1.0), 1.0);
            src.f = {1.0};
            double res[2];
            for (int level = 0; level < 2; ++level)
            {
                const TimeGrid grid = TimeGrid::make(level == 0 ? 2e-3 : 1e-3, ps.T, ps.T_obs);
                const MlKernels kern = MlKernels::for_rates(alpha, mu, grid.t(grid.steps));
                const std::vector<double> chi = source_samples(src, 0, grid);
                const std::vector<double> u = mode_solution(ps, kern, mu, 0.0, 0.0, chi, grid);
                res[level] = residual_oracle(ps, mu, 0.0, 0.0, chi, u, grid);
            }
            const double ratio = res[0] / res[1];
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
            detail += fmt("alpha %.1f", alpha) + fmt(" ratio %.3f; ", ratio);
        }
        Outcome o;
        o.pass = lo >= 1.7 && hi <= 2.3;
        o.detail = detail.substr(0, detail.size() - 2);
        return o;
    }

    Outcome pole_closed_form()
    {
        const Experiment ex(parse_config(json{{"fixture", "two-term"}}));
        const std::vector<double> mu = ex.group_rates();
        const TransferFunction H(ex.cfg.problem.a, ex.cfg.problem.alpha, mu, ex.rd, ex.G());
        const PoleScan scan = find_poles_model(H, 5, default_window(H, 5));
        double loc_err = scan.poles.size() == 5 ? 0.0 : 1.0;
        for (std::size_t l = 0; l < 5 && l < scan.poles.size(); ++l)
        {
            const cplx exact = std::polar(std::pow(mu[l], 1.0 / ex.cfg.problem.alpha), std::numbers::pi / ex.cfg.problem.alpha);
            loc_err = std::max(loc_err, std::abs(scan.poles[l].location - exact) / std::abs(exact));
        }

        // single group, initial data only: H(s) = s^{alpha-2} (s phi + psi) / (s^alpha + mu)
        ReducedData rd;
        rd.phi_hat = {0.8};
        rd.psi_hat = {-0.3};
        rd.f_hat = {0.0};
        rd.z_hat = {TimeSignal::zero(1.0)};
        rd.n = 1;
        rd.T = 1.0;
        const double alpha = 1.4;
        const double m1 = 7.5;
        const TransferFunction H1(1.0, alpha, {m1}, rd);
        const PoleScan one = find_poles_model(H1, 1, default_window(H1, 1));
        double res_err = 1.0;
        if (one.poles.size() == 1)
        {
            const cplx s = H1.pole(0);
            const cplx formula = (s * 0.8 - 0.3) / (alpha * s);
            res_err = std::abs(one.poles[0].residue - formula) / std::abs(formula);
        }
        Outcome o;
        o.pass = loc_err <= 1e-8 && res_err <= 1e-8;
        o.detail = "location " + fmt("%.2e", loc_err) + ", residue " + fmt("%.2e", res_err);
        return o;
    }

    Outcome decomposition_uniqueness()
    {
        const Spectrum sp = eigen_interval(1.0, 50);
        const std::vector<double> lam = sp.distinct_lambdas();
        auto rates = [&](const std::vector<double>& c, const std::vector<double>& beta) {
            std::vector<double> mu(lam.size(), 0.0);
            for (std::size_t l = 0; l < lam.size(); ++l)
                for (std::size_t j = 0; j < c.size(); ++j)
                    mu[l] += c[j] * std::pow(lam[l], beta[j]);
            return mu;
        };
        // exact data of the acceptance operator
        const std::vector<double> c0 = {1.0 / 0.7, 0.5 / 0.7};
        const std::vector<double> b0 = {0.8, 0.3};
        const Decomposition d = decompose_multiterm(rates(c0, b0), lam);
        double exact_err = d.m == 2 ? 0.0 : 1.0;
        for (std::size_t j = 0; j < 2 && d.m == 2; ++j)
        {
            exact_err = std::max(exact_err, std::abs(d.beta[j] - b0[j]));
            exact_err = std::max(exact_err, std::abs(d.coef[j] - c0[j]) / c0[j]);
        }

        // collision search: random models, decomposition of their rates and a
        // random competitor; a collision is a distinct model with matching rates
        std::mt19937_64 rng(2024);
        std::uniform_real_distribution<double> uc(0.2, 3.0);
        std::uniform_int_distribution<int> um(1, 3);
        int collisions = 0;
        int misses = 0;
        for (int trial = 0; trial < 200; ++trial)
        {
            auto draw = [&](std::vector<double>& c, std::vector<double>& b) {
                const int m = um(rng);
                std::vector<double> gaps(m);
                double sum = 0.0;
                for (double& gval : gaps)
                    sum += gval = 0.15 + std::uniform_real_distribution<double>(0.0, 1.0)(rng);
                double beta = 0.05 + 0.9 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
                c.clear();
                b.clear();
                for (int j = 0; j < m; ++j)
                {
                    b.push_back(beta);
                    c.push_back(uc(rng));
                    beta -= 0.12 + 0.1 * gaps[j] / sum;
                    if (beta <= 0.02)
                        break;
                }
            };
            std::vector<double> ca, ba, cb, bb;
            draw(ca, ba);
            draw(cb, bb);
            const std::vector<double> mua = rates(ca, ba);
            const std::vector<double> mub = rates(cb, bb);
            auto max_rel = [](const std::vector<double>& x, const std::vector<double>& y) {
                double e = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i)
                    e = std::max(e, std::abs(x[i] - y[i]) / std::abs(y[i]));
                return e;
            };
            auto same_model = [](const std::vector<double>& c1, const std::vector<double>& b1, const std::vector<double>& c2,
                                 const std::vector<double>& b2) {
                if (c1.size() != c2.size())
                    return false;
                for (std::size_t j = 0; j < c1.size(); ++j)
                    if (std::abs(b1[j] - b2[j]) > 1e-6 || std::abs(c1[j] - c2[j]) > 1e-6 * c2[j])
                        return false;
                return true;
            };
            if (!same_model(ca, ba, cb, bb) && max_rel(mua, mub) <= 1e-6)
                ++collisions;
            const Decomposition da = decompose_multiterm(mua, lam);
            const std::vector<double> mud = rates(da.coef, da.beta);
            const bool matched = max_rel(mud, mua) <= 1e-6;
            if (matched && !same_model(da.coef, da.beta, ca, ba))
                ++collisions;
            if (!matched)
                ++misses;
            if (std::getenv("ACCEPTANCE_VERBOSE") && (!matched || !same_model(da.coef, da.beta, ca, ba)))
            {
                std::printf("  trial %d: rates mismatch %.2e, truth", trial, max_rel(mud, mua));
                for (std::size_t j = 0; j < ca.size(); ++j)
                    std::printf(" (%.4f, %.4f)", ca[j], ba[j]);
                std::printf(", recovered");
                for (std::size_t j = 0; j < da.coef.size(); ++j)
                    std::printf(" (%.4f, %.4f)", da.coef[j], da.beta[j]);
                std::printf("\n");
            }
        }
        Outcome o;
        o.pass = exact_err <= 1e-8 && collisions == 0 && misses == 0;
        o.detail = "exact-data error " + fmt("%.2e", exact_err) + ", collisions " + std::to_string(collisions) +
                   ", unfitted trials " + std::to_string(misses) + " of 200";
        return o;
    }

    double g_error(const GRecovery& g, const TimeSignal& truth)
    {
        double err = 0.0;
        double ref = 0.0;
        for (std::size_t j = 0; j < g.g.size(); ++j)
        {
            const double t = g.dt * static_cast<double>(j);
            err += std::pow(g.g[j] - truth(t), 2);
            ref += std::pow(truth(t), 2);
        }
        return std::sqrt(err / ref);
    }

    Outcome round_trip()
    {
        const Experiment ex(parse_config(json{{"fixture", "two-term"}}));
        const ProblemSpec& ps = ex.cfg.problem;
        const ForwardResult fr = ex.forward();
        std::string detail;
        bool pass = true;
        for (double noise : {0.0, 1e-4})
        {
            TimeTrace tr = fr.observed.trace;
            if (noise > 0.0)
            {
                std::mt19937_64 rng(7);
                std::normal_distribution<double> nd(0.0, noise);
                for (double& v : tr.values)
                    v += nd(rng);
            }
            InversionOptions opt = ex.cfg.inversion;
            opt.noise_sigma = noise;
            const RecoveredModel m = invert_full(tr, ex.rd, ex.spec.distinct_lambdas(), opt);
            const double k = noise > 0.0 ? 2.0 : 1.0;
            double e_beta = 1.0, e_ba = 1.0;
            if (m.m_hat == 2)
            {
                e_beta = e_ba = 0.0;
                for (std::size_t j = 0; j < 2; ++j)
                {
                    e_beta = std::max(e_beta, std::abs(m.beta_hat[j] - ps.terms[j].beta));
                    const double ba = ps.terms[j].b / ps.a;
                    e_ba = std::max(e_ba, std::abs(m.b_over_a_hat[j] - ba) / ba);
                }
            }
            const double e_alpha = std::abs(m.alpha_hat - ps.alpha);
            const double e_a = std::abs(m.a_hat - ps.a) / ps.a;
            const double e_g = g_error(m.g_hat, ex.cfg.source.g);
            const bool ok = m.m_hat == 2 && e_alpha <= k * 1e-3 && e_beta <= k * 1e-2 && e_ba <= k * 1e-2 &&
                            e_a <= k * 5e-2 && e_g <= k * 5e-2;
            pass = pass && ok;
            detail += (noise > 0.0 ? "noise 1e-4: " : "noiseless: ") + std::string("m ") + std::to_string(m.m_hat) +
                      fmt(", alpha %.1e", e_alpha) + fmt(", beta %.1e", e_beta) + fmt(", b/a %.1e", e_ba) +
                      fmt(", a %.1e", e_a) + fmt(", g %.1e", e_g) + (noise > 0.0 ? "" : "; ");
        }
        Outcome o;
        o.pass = pass;
        o.detail = detail;
        return o;
    }

    /// Hand evaluation of the closed form for C0, kept separate from the library.
    double c0_oracle(double bl, double ah, double al, double au, double bel, int n, double T, double l1)
    {
        const double r = bl / ah;
        const double f1 = std::min(std::pow(r, 1.0 / al), std::pow(r, 1.0 / au));
        const double f2 = std::min(std::pow(l1, 1.0 / al), std::pow(l1, bel / au));
        const double c = std::abs(std::cos(std::numbers::pi / au));
        double cp = 1.0;
        for (int i = 0; i < n + 2; ++i)
            cp *= c;
        double q = (n + 2) / (T * std::exp(1.0));
        double qp = 1.0;
        for (int i = 0; i < n + 2; ++i)
            qp *= q;
        return f1 * f2 * cp / (std::max(1.0, qp) * std::max(1.0, ah));
    }

    Outcome verifier_coherence()
    {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        int groups_checked = 0;
        int disagreements = 0;
        int degenerate_seen = 0;
        for (int fx = 0; fx < 20; ++fx)
        {
            const double alpha = 1.15 + 0.7 * u01(rng);
            const double a = 0.5 + u01(rng);
            std::vector<OperatorTerm> terms = {{0.5 + u01(rng), 0.6 + 0.4 * u01(rng)}};
            if (fx % 2)
                terms.push_back({0.2 + u01(rng), 0.1 + 0.3 * u01(rng)});
            const std::size_t K = 8;
            const Spectrum sp = eigen_interval(1.0, K);
            std::vector<double> mu(K);
            for (std::size_t k = 0; k < K; ++k)
            {
                for (const OperatorTerm& t : terms)
                    mu[k] += t.b * std::pow(sp.lambdas[k], t.beta);
                mu[k] /= a;
            }
            // horizon keeps e^{|Re s_K| T} moderate so every pole stays visible in double precision
            const double reK = -std::cos(std::numbers::pi / alpha) * std::pow(mu[K - 1], 1.0 / alpha);
            const double T = std::min(1.0, 8.0 / reK);
            ReducedData rd;
            rd.T = T;
            rd.n = 1;
            rd.phi_hat.assign(K, 0.0);
            rd.psi_hat.assign(K, 0.0);
            rd.f_hat.assign(K, 0.0);
            rd.z_hat.assign(K, TimeSignal::zero(T));
            const TimeSignal g = TimeSignal::polynomial(Polynomial::bump(4.0 * u01(rng), 1, 1, T), T);
            const std::function<cplx(cplx)> G = [g](cplx s) { return g.laplace(s); };
            for (std::size_t l = 0; l < K; ++l)
            {
                const int kind = static_cast<int>(u01(rng) * 5.0);
                const cplx s = std::polar(std::pow(mu[l], 1.0 / alpha), std::numbers::pi / alpha);
                if (kind == 0)
                    continue; // all data zero
                if (kind == 1)
                {
                    // psi plus a z cancelling it exactly at s_l
                    const double psi = 0.5 + u01(rng);
                    const TimeSignal p1 = TimeSignal::polynomial(Polynomial::bump(1.0, 1, 1, T), T);
                    const TimeSignal p2 = TimeSignal::polynomial(Polynomial::bump(1.0, 2, 1, T), T);
                    const cplx L1 = p1.laplace(s);
                    const cplx L2 = p2.laplace(s);
                    Eigen::Matrix2d m;
                    m << L1.real(), L2.real(), L1.imag(), L2.imag();
                    const Eigen::Vector2d c = m.fullPivLu().solve(Eigen::Vector2d(-a * psi, 0.0));
                    std::vector<double> coef(4, 0.0);
                    const auto& q1 = Polynomial::bump(c[0], 1, 1, T).coefficients();
                    const auto& q2 = Polynomial::bump(c[1], 2, 1, T).coefficients();
                    for (std::size_t i = 0; i < q1.size(); ++i)
                        coef[i] += q1[i];
                    for (std::size_t i = 0; i < q2.size(); ++i)
                        coef[i] += q2[i];
                    rd.psi_hat[l] = psi;
                    rd.z_hat[l] = TimeSignal::polynomial(Polynomial(coef), T);
                    continue;
                }
                rd.phi_hat[l] = u01(rng) - 0.5;
                rd.psi_hat[l] = u01(rng) - 0.5;
                if (kind >= 3)
                    rd.f_hat[l] = u01(rng);
                if (kind == 4)
                    rd.z_hat[l] = TimeSignal::polynomial(Polynomial::bump(u01(rng), 1, 2, T), T);
            }
            const NondegeneracyResult nd = check_nondegeneracy(alpha, mu, rd, a, G);
            const TransferFunction H(a, alpha, mu, rd, G);
            const PoleScan scan = find_poles_model(H, K, default_window(H, K));
            for (std::size_t l = 0; l < K; ++l)
            {
                bool found = false;
                for (const PoleEstimate& p : scan.poles)
                    found = found || std::abs(p.location - H.pole(l)) <= 1e-6 * std::abs(H.pole(l));
                ++groups_checked;
                if (!nd.ok[l])
                    ++degenerate_seen;
                if (found != nd.ok[l])
                {
                    ++disagreements;
                    if (std::getenv("ACCEPTANCE_VERBOSE"))
                        std::printf("  fixture %d group %zu: flag %d pole %d |s| %.3g value %.3e scale %.3e\n", fx, l,
                                    static_cast<int>(nd.ok[l]), static_cast<int>(found), std::abs(H.pole(l)),
                                    std::abs(nd.value[l]), nd.scale[l]);
                }
            }
        }

        const double bl = 1.0, ah = 1.0, al = 1.25, au = 1.5, bel = 0.5, lam1 = std::numbers::pi * std::numbers::pi;
        double c0_err = 0.0;
        for (int n : {1, 2, 3})
            for (double T : {0.5, 1.0, 4.0})
            {
                const double lib = compute_C0({bl, ah, al, au, bel}, n, T, lam1);
                const double ref = c0_oracle(bl, ah, al, au, bel, n, T, lam1);
                c0_err = std::max(c0_err, std::abs(lib - ref) / ref);
            }

        const Experiment ex(parse_config(json{{"fixture", "gkits"}}));
        const int n = ex.cfg.source.n;
        const double C0 = compute_C0(*ex.cfg.bounds, n, ex.cfg.problem.T, ex.spec.distinct_lambda(0));
        const GkitsResult gk = check_gkits(ex.rd, ex.cfg.source.g, n, C0);
        const HypothesisReport hr = check_conditions(ex.gammas, ex.cfg.initial, ex.cfg.source, ex.rd, n);
        const NondegeneracyResult nd =
            check_nondegeneracy(ex.cfg.problem.alpha, ex.group_rates(), ex.rd, ex.cfg.problem.a, ex.G(), 1e-12, ex.G_scaled());
        bool gk_all = true;
        bool nd_all = true;
        int applicable = 0;
        for (std::size_t l = 0; l < gk.ok.size(); ++l)
        {
            gk_all = gk_all && gk.ok[l];
            if (hr.z_end_derivative[l] != 0.0)
            {
                ++applicable;
                nd_all = nd_all && nd.ok[l];
            }
        }
        Outcome o;
        o.pass = disagreements == 0 && degenerate_seen > 0 && c0_err <= 1e-12 && gk_all && applicable > 0 && nd_all;
        o.detail = std::to_string(disagreements) + " disagreements in " + std::to_string(groups_checked) + " groups (" +
                   std::to_string(degenerate_seen) + " degenerate), C0 error " + fmt("%.1e", c0_err) +
                   ", gkits fixture " + (gk_all ? "passes" : "fails") + " with nondegeneracy on " +
                   std::to_string(applicable) + " groups " + (nd_all ? "all true" : "not all true");
        return o;
    }

    Outcome weyl()
    {
        const WeylFit fi = weyl_fit(eigen_interval(1.0, 500));
        const double e1 = std::abs(fi.c1_star - 1.0 / std::numbers::pi) / (1.0 / std::numbers::pi);

        // square: brute-force count N(lambda) of pi^2 (i^2 + j^2) <= lambda and its slope in lambda
        const Spectrum sq = eigen_rectangle(1.0, 1.0, 500);
        const WeylFit fs = weyl_fit(sq);
        const double lmax = sq.lambdas.back();
        std::vector<double> xs, ys;
        for (int s = 1; s <= 40; ++s)
        {
            const double lam = lmax * (0.5 + 0.5 * s / 40.0);
            int count = 0;
            for (int i = 1; i * i * std::numbers::pi * std::numbers::pi <= lam; ++i)
                for (int j = 1; (i * i + j * j) * std::numbers::pi * std::numbers::pi <= lam; ++j)
                    ++count;
            xs.push_back(lam);
            ys.push_back(count);
        }
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i)
        {
            mx += xs[i] / xs.size();
            my += ys[i] / ys.size();
        }
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i)
        {
            sxy += (xs[i] - mx) * (ys[i] - my);
            sxx += (xs[i] - mx) * (xs[i] - mx);
        }
        const double slope = sxy / sxx;
        const double e2 = std::abs(fs.c1_star - slope) / slope;
        Outcome o;
        o.pass = e1 <= 0.01 && e2 <= 0.05;
        o.detail = "interval c1* " + fmt("%.6f", fi.c1_star) + fmt(" (error %.1e)", e1) + ", square c1* " +
                   fmt("%.5f", fs.c1_star) + fmt(" vs count slope %.5f", slope) + fmt(" (error %.1e)", e2);
        return o;
    }
} // namespace

int main(int argc, char** argv)
{
    for (int i = 1; i < argc; ++i)
        selected.push_back(std::atoi(argv[i]));
    run(1, "special-function identities", 5.0, special_functions);
    run(2, "forward/Laplace consistency", 30.0, forward_laplace);
    run(3, "fractional ODE residual oracle", 60.0, residual_oracle_ratio);
    run(4, "pole closed form", 60.0, pole_closed_form);
    run(5, "decomposition uniqueness", 60.0, decomposition_uniqueness);
    run(6, "end-to-end round trip", 300.0, round_trip);
    run(7, "hypothesis verifier coherence", 120.0, verifier_coherence);
    run(8, "Weyl fit", 30.0, weyl);
    std::printf("%d of 8 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
