#ifndef FRACINV_VERIFIER_HPP
#define FRACINV_VERIFIER_HPP

// Checks of the uniqueness hypotheses on concrete (truncated) data: data
// summability, non-vanishing groups, smooth vanishing of the sources at T, the
// constants C_dagger and C_0, and the non-degeneracy of every pole numerator.

#include "errors.hpp"
#include "forward.hpp"
#include "laplace.hpp"
#include "signal.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace fracinv
{
    struct Bounds
    {
        double b_low = 0.0;
        double a_high = 0.0;
        double alpha_low = 0.0;
        double alpha_high = 0.0;
        double beta_low = 0.0;
    };

    inline double compute_C0(const Bounds& bd, int n, double T, double lambda1)
    {
        require(bd.b_low > 0.0 && bd.a_high > 0.0, ErrorKind::parameter, "b_low and a_high must be positive");
        require(bd.alpha_low > 1.0 && bd.alpha_low <= bd.alpha_high && bd.alpha_high < 2.0, ErrorKind::parameter,
                "bounds must satisfy 1 < alpha_low <= alpha_high < 2");
        require(bd.beta_low > 0.0, ErrorKind::parameter, "beta_low must be positive");
        require(n >= 1, ErrorKind::parameter, "n must be at least 1");
        require(T > 0.0 && lambda1 > 0.0, ErrorKind::parameter, "T and lambda_1 must be positive");
        const double ratio = bd.b_low / bd.a_high;
        const double f1 = std::min(std::pow(ratio, 1.0 / bd.alpha_low), std::pow(ratio, 1.0 / bd.alpha_high));
        const double f2 = std::min(std::pow(lambda1, 1.0 / bd.alpha_low), std::pow(lambda1, bd.beta_low / bd.alpha_high));
        const double c = std::pow(std::abs(std::cos(std::numbers::pi / bd.alpha_high)), n + 2);
        const double d1 = std::max(1.0, std::pow((n + 2) / (T * std::numbers::e), n + 2));
        const double d2 = std::max(1.0, bd.a_high);
        return f1 * f2 * c / (d1 * d2);
    }

    struct SummabilityDiagnostic
    {
        std::string name;
        double partial_sum = 0.0;
        /// Exponent p of |term_k| ~ k^{-p} fitted on the nonzero tail terms.
        double decay_exponent = 0.0;
        std::size_t nonzero = 0;
        /// Finitely many nonzero terms, or a fitted exponent above 1.
        bool looks_summable = true;
    };

    /// Truncated sequence in ND: at least 20% of the entries above the floor.
    inline bool in_nd(const std::vector<double>& v, double floor_rel = 1e-12)
    {
        if (v.empty())
            return false;
        double scale = 0.0;
        for (double x : v)
            scale = std::max(scale, std::abs(x));
        if (scale == 0.0)
            return false;
        std::size_t count = 0;
        for (double x : v)
            if (std::abs(x) > floor_rel * scale)
                ++count;
        return 5 * count >= v.size();
    }

    struct HypothesisReport
    {
        std::vector<SummabilityDiagnostic> summability;
        std::vector<bool> uniI0_ok;
        /// Per group: z_l^{(j)}(T) = 0 for j <= n-2.
        std::vector<bool> smooth_vanish_ok;
        /// g^{(j)}(T) = 0 for j <= n-1 (only meaningful when g is given).
        bool g_vanish_ok = true;
        /// Smallest C_dagger for the groups l >= l1 (infinite when none fits).
        double c_dagger = 0.0;
        std::vector<double> z_end_derivative;
        double C0 = std::numeric_limits<double>::quiet_NaN();
        std::vector<bool> gkits_applicable;
        std::vector<bool> gkits_ok;
        std::vector<bool> nondegeneracy_ok;
        bool f_nd = false;
        bool z_nd = false;
        std::vector<std::string> warnings;
    };

    namespace detail
    {
        inline SummabilityDiagnostic summability(std::string name, const std::vector<double>& terms)
        {
            SummabilityDiagnostic d;
            d.name = std::move(name);
            double scale = 0.0;
            for (double t : terms)
            {
                d.partial_sum += std::abs(t);
                scale = std::max(scale, std::abs(t));
            }
            std::vector<double> x;
            std::vector<double> y;
            for (std::size_t k = 0; k < terms.size(); ++k)
                if (std::abs(terms[k]) > 1e-14 * scale)
                {
                    x.push_back(std::log(static_cast<double>(k + 1)));
                    y.push_back(std::log(std::abs(terms[k])));
                }
            d.nonzero = x.size();
            if (x.size() < 8 || 2 * x.size() < terms.size())
                return d;
            // least-squares slope over the second half of the nonzero terms
            const std::size_t first = x.size() / 2;
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            const double m = static_cast<double>(x.size() - first);
            for (std::size_t i = first; i < x.size(); ++i)
            {
                sx += x[i];
                sy += y[i];
                sxx += x[i] * x[i];
                sxy += x[i] * y[i];
            }
            const double den = m * sxx - sx * sx;
            if (den > 0.0)
            {
                d.decay_exponent = -(m * sxy - sx * sy) / den;
                d.looks_summable = d.decay_exponent > 1.0;
            }
            return d;
        }

        inline bool is_zero_at(double value, double scale, double floor_rel)
        {
            return std::abs(value) <= floor_rel * std::max(scale, std::numeric_limits<double>::min());
        }

        inline double derivative_scale(const TimeSignal& s, int order)
        {
            return s.sup_derivative(order, 401);
        }
    } // namespace detail

    /// Hypotheses that do not involve the unknown parameters. `l1` is one-based.
    inline HypothesisReport check_conditions(std::span<const double> gammas, const InitialData& init,
                                             const SourceSpec& src, const ReducedData& rd, int n, std::size_t l1 = 1,
                                             double floor_rel = 1e-10)
    {
        require(n >= 1, ErrorKind::parameter, "n must be at least 1");
        require(l1 >= 1, ErrorKind::parameter, "l1 is one-based");
        HypothesisReport rep;
        const double T = rd.T;
        const std::size_t K = gammas.size();
        auto at = [](const std::vector<double>& v, std::size_t k) { return k < v.size() ? v[k] : 0.0; };
        {
            std::vector<double> tp(K), tq(K), tf(K), tz(K);
            for (std::size_t k = 0; k < K; ++k)
            {
                tp[k] = gammas[k] * at(init.phi, k);
                tq[k] = gammas[k] * at(init.psi, k);
                tf[k] = gammas[k] * src.f_at(k);
                tz[k] = src.z_is_zero(k) ? 0.0 : gammas[k] * src.z[k].l1_norm(1001);
            }
            rep.summability.push_back(detail::summability("gamma*phi", tp));
            rep.summability.push_back(detail::summability("gamma*psi", tq));
            rep.summability.push_back(detail::summability("gamma*f", tf));
            rep.summability.push_back(detail::summability("gamma*|z|_L1", tz));
        }

        const std::size_t L = rd.size();
        rep.uniI0_ok.assign(L, false);
        rep.smooth_vanish_ok.assign(L, true);
        rep.z_end_derivative.assign(L, 0.0);
        double cd = 0.0;
        for (std::size_t l = 0; l < L; ++l)
        {
            const TimeSignal& z = rd.z_hat[l];
            const bool z_zero = z.is_zero();
            const double zl1 = z_zero ? 0.0 : z.l1_norm(1001);
            rep.uniI0_ok[l] = std::abs(rd.phi_hat[l]) + std::abs(rd.psi_hat[l]) + std::abs(rd.f_hat[l]) + zl1 != 0.0;
            if (!z.closed_form() && z.smoothness_residual() > 1e-6)
                rep.warnings.push_back("group " + std::to_string(l + 1) +
                                       ": derivative estimation of sampled z is unreliable");
            double zn1 = 0.0;
            double zn = 0.0;
            double z0 = 0.0;
            if (!z_zero)
            {
                for (int j = 0; j <= n - 2; ++j)
                    if (!detail::is_zero_at(z.derivative(T, j), detail::derivative_scale(z, j), floor_rel))
                        rep.smooth_vanish_ok[l] = false;
                const double raw = z.derivative(T, n - 1);
                zn1 = detail::is_zero_at(raw, detail::derivative_scale(z, n - 1), floor_rel) ? 0.0 : raw;
                zn = z.sup_derivative(n);
                for (int j = 0; j < n; ++j)
                    z0 += std::abs(z.derivative(0.0, j));
            }
            rep.z_end_derivative[l] = zn1;
            if (l + 1 < l1)
                continue;
            const double lhs = zn + z0 + std::abs(rd.f_hat[l]);
            const double init_sum = std::abs(rd.phi_hat[l]) + std::abs(rd.psi_hat[l]);
            if (zn1 != 0.0)
                cd = std::max({cd, lhs / std::abs(zn1), init_sum / std::abs(zn1)});
            else if (lhs > 0.0)
                cd = std::numeric_limits<double>::infinity();
        }
        rep.c_dagger = cd;
        rep.f_nd = in_nd(rd.f_hat);
        rep.z_nd = in_nd(rep.z_end_derivative);
        if (rep.f_nd)
        {
            for (int j = 0; j < n; ++j)
                if (!detail::is_zero_at(src.g.derivative(T, j), detail::derivative_scale(src.g, j), floor_rel))
                    rep.g_vanish_ok = false;
            if (!src.g.closed_form() && src.g.smoothness_residual() > 1e-6)
                rep.warnings.push_back("derivative estimation of sampled g is unreliable");
        }
        return rep;
    }

    struct GkitsResult
    {
        std::vector<bool> applicable;
        std::vector<bool> ok;
        /// C0 |z^{(n-1)}(T)| minus every subtracted term (positive when both hold).
        std::vector<double> margin;
    };

    inline GkitsResult check_gkits(const ReducedData& rd, const TimeSignal& g, int n, double C0,
                                   double floor_rel = 1e-10)
    {
        require(n >= 1, ErrorKind::parameter, "n must be at least 1");
        require(C0 > 0.0, ErrorKind::parameter, "C0 must be positive");
        const double T = rd.T;
        double gterm = g.sup_derivative(n);
        for (int j = 0; j < n; ++j)
            gterm += std::abs(g.derivative(0.0, j));
        GkitsResult out;
        const std::size_t L = rd.size();
        out.applicable.assign(L, false);
        out.ok.assign(L, true);
        out.margin.assign(L, 0.0);
        for (std::size_t l = 0; l < L; ++l)
        {
            const TimeSignal& z = rd.z_hat[l];
            if (z.is_zero())
                continue;
            const double zn1 = z.derivative(T, n - 1);
            if (detail::is_zero_at(zn1, detail::derivative_scale(z, n - 1), floor_rel))
                continue;
            out.applicable[l] = true;
            double rest = z.sup_derivative(n) + std::abs(rd.phi_hat[l]) + std::abs(rd.psi_hat[l]);
            for (int j = 0; j < n; ++j)
                rest += std::abs(z.derivative(0.0, j));
            const double lead = C0 * std::abs(zn1);
            const double fg = std::abs(rd.f_hat[l]) * gterm;
            out.margin[l] = lead - rest - fg;
            out.ok[l] = lead > rest && fg < lead - rest;
        }
        return out;
    }

    struct NondegeneracyResult
    {
        std::vector<cplx> value;
        std::vector<double> scale;
        std::vector<double> shift;
        std::vector<bool> ok;
    };

    /// s_l phi_l + psi_l + (f_l G(s_l) + Z_l(s_l)) / a at s_l = mu_l^{1/alpha} e^{i pi/alpha},
    /// flagged nonzero above 1e-12 times the sum of the term magnitudes. Values
    /// are stored times e^{-shift_l}, shift_l = max(0, -Re(s_l) T); `Gscaled`,
    /// when given, returns e^{-shift} G(s) and is used where G(s) would overflow.
    inline NondegeneracyResult check_nondegeneracy(double alpha, const std::vector<double>& mu, const ReducedData& rd,
                                                   double a, const std::function<cplx(cplx)>& G,
                                                   double floor_rel = 1e-12,
                                                   const std::function<cplx(cplx)>& Gscaled = {})
    {
        require(alpha > 1.0 && alpha < 2.0, ErrorKind::parameter, "alpha must lie in (1,2)");
        require(a > 0.0, ErrorKind::parameter, "a must be positive");
        const std::size_t L = std::min(mu.size(), rd.size());
        NondegeneracyResult out;
        out.value.resize(L);
        out.scale.resize(L);
        out.shift.resize(L);
        out.ok.resize(L);
        for (std::size_t l = 0; l < L; ++l)
        {
            require(mu[l] > 0.0, ErrorKind::parameter, "rates must be positive");
            const cplx s = std::polar(std::pow(mu[l], 1.0 / alpha), std::numbers::pi / alpha);
            // every term carries the factor e^{-shift}; the flag is scale invariant
            const double shift = std::max(0.0, -s.real() * rd.T);
            const double damp = std::exp(-shift);
            out.shift[l] = shift;
            const cplx t1 = s * rd.phi_hat[l] * damp;
            const cplx t2 = rd.psi_hat[l] * damp;
            cplx t3(0.0, 0.0);
            if (rd.f_hat[l] != 0.0 && G)
                t3 = shift > 600.0 && Gscaled ? rd.f_hat[l] * Gscaled(s) / a : rd.f_hat[l] * G(s) * damp / a;
            double zshift = 0.0;
            const cplx t4 = rd.z_hat[l].is_zero() ? cplx(0.0, 0.0) : rd.z_hat[l].laplace_scaled(s, zshift) / a;
            out.value[l] = t1 + t2 + t3 + t4;
            out.scale[l] = std::abs(t1) + std::abs(t2) + std::abs(t3) + std::abs(t4);
            out.ok[l] = out.scale[l] > 0.0 && std::abs(out.value[l]) > floor_rel * out.scale[l];
        }
        return out;
    }
} // namespace fracinv

#endif
