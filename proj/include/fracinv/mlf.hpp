#ifndef FRACINV_MLF_HPP
#define FRACINV_MLF_HPP

// Two-parameter Mittag-Leffler function E_{alpha,theta}(w) for complex w.
//
// Three evaluation branches are provided and exposed individually:
//  - ml_series:     power series summed in long double; used near the origin.
//  - ml_contour:    trapezoidal rule on an optimal parabolic Hankel contour of
//                   the inverse Laplace representation, plus residues of the
//                   singularities left outside the contour (Garrappa's scheme).
//  - ml_asymptotic: residue (exponential) terms plus the algebraic expansion
//                   -sum_k w^{-k}/Gamma(theta - alpha k), truncated at its
//                   smallest term; used for large |w| when it converges.
// ml() dispatches between them.

#include "errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace fracinv
{
    using cplx = std::complex<double>;

    struct MlParams
    {
        double alpha = 1.0;
        double theta = 1.0;

        void validate() const
        {
            if (!(alpha > 0.0) || !(theta > 0.0) || !std::isfinite(alpha) || !std::isfinite(theta))
                fail(ErrorKind::parameter, "Mittag-Leffler parameters must satisfy alpha > 0, theta > 0 (got alpha=" +
                                               std::to_string(alpha) + ", theta=" + std::to_string(theta) + ")");
        }
    };

    namespace detail
    {
        constexpr double pi = std::numbers::pi;
        // Target accuracy of the contour quadrature (log of 1e-15).
        constexpr double ml_log_epsilon = -34.538776394910684;
        constexpr double log_dbl_eps = -36.043653389117154;

        /// log|1/Gamma(x)| and sign of 1/Gamma(x) for any real x. Returns
        /// sign 0 at the poles of Gamma.
        inline double log_abs_rgamma(double x, int& sign)
        {
            if (x > 0.0)
            {
                sign = 1;
                return -std::lgamma(x);
            }
            double r = std::nearbyint(x);
            if (r == x)
            {
                sign = 0;
                return -std::numeric_limits<double>::infinity();
            }
            // 1/Gamma(x) = sin(pi x) Gamma(1-x) / pi
            double s = std::sin(pi * x);
            sign = s > 0.0 ? 1 : -1;
            return std::log(std::abs(s) / pi) + std::lgamma(1.0 - x);
        }

        inline double rgamma(double x)
        {
            int sign = 0;
            double l = log_abs_rgamma(x, sign);
            return sign == 0 ? 0.0 : sign * std::exp(l);
        }

        struct ContourParams
        {
            double mu = 0.0;
            double h = 0.0;
            double n = std::numeric_limits<double>::infinity();
        };

        // Optimal parameters of the parabolic contour lying in the bounded
        // region between two consecutive singularities.
        inline ContourParams optimal_param_bounded(double t, double phi_j, double phi_j1, double pj, double qj,
                                                   double log_epsilon)
        {
            constexpr double fac = 1.01;
            const double f_max = std::exp(log_epsilon - log_dbl_eps);
            const double sq_phi_j = std::sqrt(phi_j);
            const double threshold = 2.0 * std::sqrt((log_epsilon - log_dbl_eps) / t);
            const double sq_phi_j1 = std::min(std::sqrt(phi_j1), threshold - sq_phi_j);

            double sq_bar_j = 0.0;
            double sq_bar_j1 = 0.0;
            double f_bar = 1.0;
            bool admissible = false;

            if (pj < 1.0e-14 && qj < 1.0e-14)
            {
                sq_bar_j = sq_phi_j;
                sq_bar_j1 = sq_phi_j1;
                admissible = true;
            }
            else if (pj < 1.0e-14 && qj >= 1.0e-14)
            {
                sq_bar_j = sq_phi_j;
                double f_min = sq_phi_j > 0.0 ? fac * std::pow(sq_phi_j / (sq_phi_j1 - sq_phi_j), qj) : fac;
                if (f_min < f_max)
                {
                    f_bar = f_min + f_min / f_max * (f_max - f_min);
                    double fq = std::pow(f_bar, -1.0 / qj);
                    sq_bar_j1 = (2.0 * sq_phi_j1 - fq * sq_phi_j) / (2.0 + fq);
                    admissible = true;
                }
            }
            else if (pj >= 1.0e-14 && qj < 1.0e-14)
            {
                sq_bar_j1 = sq_phi_j1;
                double f_min = fac * std::pow(sq_phi_j1 / (sq_phi_j1 - sq_phi_j), pj);
                if (f_min < f_max)
                {
                    f_bar = f_min + f_min / f_max * (f_max - f_min);
                    double fp = std::pow(f_bar, -1.0 / pj);
                    sq_bar_j = (2.0 * sq_phi_j + fp * sq_phi_j1) / (2.0 - fp);
                    admissible = true;
                }
            }
            else
            {
                double f_min = fac * std::pow((sq_phi_j + sq_phi_j1) / (sq_phi_j1 - sq_phi_j), std::max(pj, qj));
                if (f_min < f_max)
                {
                    f_min = std::max(f_min, 1.5);
                    f_bar = f_min + f_min / f_max * (f_max - f_min);
                    double fp = std::pow(f_bar, -1.0 / pj);
                    double fq = std::pow(f_bar, -1.0 / qj);
                    double w = -phi_j1 * t / log_epsilon;
                    double den = 2.0 + w - (1.0 + w) * fp + fq;
                    sq_bar_j = ((2.0 + w + fq) * sq_phi_j + fp * sq_phi_j1) / den;
                    sq_bar_j1 = (-(1.0 + w) * fq * sq_phi_j + (2.0 + w - (1.0 + w) * fp) * sq_phi_j1) / den;
                    admissible = true;
                }
            }

            ContourParams out;
            if (!admissible)
                return out;
            double le = log_epsilon - std::log(f_bar);
            double w = -sq_bar_j1 * sq_bar_j1 * t / le;
            double m = ((1.0 + w) * sq_bar_j + sq_bar_j1) / (2.0 + w);
            out.mu = m * m;
            out.h = -2.0 * pi / le * (sq_bar_j1 - sq_bar_j) / ((1.0 + w) * sq_bar_j + sq_bar_j1);
            out.n = std::ceil(std::sqrt(1.0 - le / t / out.mu) / out.h);
            return out;
        }

        // Optimal parameters of the parabolic contour in the unbounded region
        // to the right of the last singularity.
        inline ContourParams optimal_param_unbounded(double t, double phi_j, double pj, double log_epsilon)
        {
            const double sq_phi_j = std::sqrt(phi_j);
            double phibar = phi_j > 0.0 ? phi_j * 1.01 : 0.01;
            double sq_phibar = std::sqrt(phibar);
            constexpr double f_min = 1.0;
            constexpr double f_max = 10.0;
            constexpr double f_tar = 5.0;

            double nj = 0.0;
            double a = 0.0;
            double sq_mu = 0.0;
            for (int iter = 0; iter < 100; ++iter)
            {
                double phi_t = phibar * t;
                double log_eps_phi_t = log_epsilon / phi_t;
                nj = std::ceil(phi_t / pi * (1.0 - 3.0 * log_eps_phi_t / 2.0 + std::sqrt(1.0 - 2.0 * log_eps_phi_t)));
                a = pi * nj / phi_t;
                sq_mu = sq_phibar * std::abs(4.0 - a) / std::abs(7.0 - std::sqrt(1.0 + 12.0 * a));
                double fbar = std::pow((sq_phibar - sq_phi_j) / sq_mu, -pj);
                bool stop = (pj < 1.0e-14) || (f_min < fbar && fbar < f_max);
                if (stop)
                    break;
                sq_phibar = std::pow(f_tar, -1.0 / pj) * sq_mu + sq_phi_j;
                phibar = sq_phibar * sq_phibar;
            }

            ContourParams out;
            out.mu = sq_mu * sq_mu;
            out.h = (-3.0 * a - 2.0 + 2.0 * std::sqrt(1.0 + 12.0 * a)) / (4.0 - a) / nj;
            out.n = nj;

            const double threshold = (log_epsilon - log_dbl_eps) / t;
            if (out.mu > threshold)
            {
                double q = std::abs(pj) < 1.0e-14 ? 0.0 : std::pow(f_tar, -1.0 / pj) * std::sqrt(out.mu);
                double pb = (q + sq_phi_j) * (q + sq_phi_j);
                if (pb < threshold)
                {
                    double w = std::sqrt(log_dbl_eps / (log_dbl_eps - log_epsilon));
                    double u = std::sqrt(-pb * t / log_dbl_eps);
                    out.mu = threshold;
                    out.n = std::ceil(w * log_epsilon / 2.0 / pi / (u * w - 1.0));
                    out.h = std::sqrt(log_dbl_eps / (log_dbl_eps - log_epsilon)) / out.n;
                }
                else
                {
                    out.n = std::numeric_limits<double>::infinity();
                    out.h = 0.0;
                }
            }
            return out;
        }

        /// Singularities z^{1/alpha} e^{2 pi i k / alpha} of s^{alpha-theta}/(s^alpha - z)
        /// on the principal sheet |arg s| <= pi.
        inline std::vector<cplx> ml_singularities(double alpha, cplx z)
        {
            std::vector<cplx> out;
            const double arg = std::arg(z);
            const double r = std::pow(std::abs(z), 1.0 / alpha);
            const int kmin = static_cast<int>(std::ceil(-alpha / 2.0 - arg / (2.0 * pi)));
            const int kmax = static_cast<int>(std::floor(alpha / 2.0 - arg / (2.0 * pi)));
            for (int k = kmin; k <= kmax; ++k)
                out.push_back(std::polar(r, (arg + 2.0 * pi * k) / alpha));
            return out;
        }

        inline void check_exponent(cplx s)
        {
            if (s.real() > 700.0)
                fail(ErrorKind::range, "Mittag-Leffler value overflows double range (exponent " +
                                           std::to_string(s.real()) + ")");
        }
    } // namespace detail

    /// Power series sum_n w^n / Gamma(alpha n + theta), accumulated in long
    /// double until the terms drop below 1e-21 of the running magnitude.
    inline cplx ml_series(const MlParams& p, cplx w, int max_terms = 4000)
    {
        p.validate();
        using ld = long double;
        using lc = std::complex<ld>;
        if (w == cplx(0.0, 0.0))
            return cplx(std::exp(-std::lgamma(p.theta)), 0.0);

        const lc wl(w.real(), w.imag());
        const ld log_abs_w = std::log(std::abs(wl));
        const ld arg_w = std::arg(wl);
        lc sum = 0.0L;
        ld peak = 0.0L;
        int quiet = 0;
        for (int n = 0; n < max_terms; ++n)
        {
            ld x = static_cast<ld>(p.alpha) * n + static_cast<ld>(p.theta);
            ld log_mag = n * log_abs_w - std::lgamma(x);
            ld mag = std::exp(log_mag);
            lc term = std::polar(mag, n * arg_w);
            sum += term;
            peak = std::max(peak, mag);
            // Terms decrease monotonically once alpha n + theta exceeds |w|^{1/alpha}.
            if (mag <= 1e-21L * std::max(std::abs(sum), 1e-300L) && n > 2)
            {
                if (++quiet >= 3)
                    break;
            }
            else
                quiet = 0;
        }
        return cplx(static_cast<double>(sum.real()), static_cast<double>(sum.imag()));
    }

    /// Inverse-Laplace contour evaluation (optimal parabolic contour plus
    /// residues of the excluded singularities).
    inline cplx ml_contour(const MlParams& p, cplx z)
    {
        using namespace detail;
        p.validate();
        if (std::abs(z) < std::numeric_limits<double>::epsilon())
            return cplx(rgamma(p.theta), 0.0);

        const double alpha = p.alpha;
        const double beta = p.theta;
        const double t = 1.0;
        const double log_epsilon = ml_log_epsilon;

        std::vector<cplx> sing = ml_singularities(alpha, z);
        std::vector<std::pair<double, cplx>> kept;
        for (const cplx& s : sing)
        {
            double phi = (s.real() + std::abs(s)) / 2.0;
            if (phi > 1.0e-15)
                kept.emplace_back(phi, s);
        }
        std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

        std::vector<cplx> s_star{cplx(0.0, 0.0)};
        std::vector<double> phi_star{0.0};
        for (const auto& [phi, s] : kept)
        {
            s_star.push_back(s);
            phi_star.push_back(phi);
        }
        const std::size_t j1_count = s_star.size();
        std::vector<double> pp(j1_count, 1.0);
        std::vector<double> qq(j1_count, 1.0);
        pp[0] = std::max(0.0, -2.0 * (alpha - beta + 1.0));
        qq[j1_count - 1] = std::numeric_limits<double>::infinity();
        phi_star.push_back(std::numeric_limits<double>::infinity());

        const double admissible_bound = (log_epsilon - log_dbl_eps) / t;
        ContourParams best;
        std::size_t best_region = 0;
        for (std::size_t j = 0; j < j1_count; ++j)
        {
            if (!(phi_star[j] < admissible_bound && phi_star[j] < phi_star[j + 1]))
                continue;
            ContourParams cp = (j + 1 < j1_count)
                                   ? optimal_param_bounded(t, phi_star[j], phi_star[j + 1], pp[j], qq[j], log_epsilon)
                                   : optimal_param_unbounded(t, phi_star[j], pp[j], log_epsilon);
            if (cp.n < best.n)
            {
                best = cp;
                best_region = j;
            }
        }
        if (!std::isfinite(best.n))
            fail(ErrorKind::range, "no admissible integration contour for Mittag-Leffler argument");

        const int n = static_cast<int>(best.n);
        cplx integral(0.0, 0.0);
        const cplx one(1.0, 0.0);
        for (int k = -n; k <= n; ++k)
        {
            double u = best.h * k;
            cplx zc = best.mu * (cplx(0.0, u) + one) * (cplx(0.0, u) + one);
            cplx zd(-2.0 * best.mu * u, 2.0 * best.mu);
            cplx f = std::pow(zc, alpha - beta) / (std::pow(zc, alpha) - z) * zd;
            integral += std::exp(zc * t) * f;
        }
        integral *= best.h / (2.0 * detail::pi * cplx(0.0, 1.0));

        cplx residues(0.0, 0.0);
        for (std::size_t j = best_region + 1; j < s_star.size(); ++j)
        {
            check_exponent(s_star[j]);
            residues += (1.0 / alpha) * std::pow(s_star[j], 1.0 - beta) * std::exp(t * s_star[j]);
        }
        cplx e = integral + residues;
        if (z.imag() == 0.0)
            e = cplx(e.real(), 0.0);
        return e;
    }

    /// Large-|w| expansion. Returns nullopt when the algebraic series does not
    /// reach relative accuracy ~1e-16 before its smallest term.
    inline std::optional<cplx> ml_asymptotic(const MlParams& p, cplx w)
    {
        using namespace detail;
        p.validate();
        if (std::abs(w) < 1.0)
            return std::nullopt;

        cplx expo(0.0, 0.0);
        for (const cplx& s : ml_singularities(p.alpha, w))
        {
            check_exponent(s);
            expo += (1.0 / p.alpha) * std::pow(s, 1.0 - p.theta) * std::exp(s);
        }

        const double log_abs_w = std::log(std::abs(w));
        const double arg_w = std::arg(w);
        cplx alg(0.0, 0.0);
        double prev = std::numeric_limits<double>::infinity();
        bool converged = false;
        for (int k = 1; k < 400; ++k)
        {
            int sign = 0;
            double lr = log_abs_rgamma(p.theta - p.alpha * k, sign);
            if (sign == 0)
                continue;
            double mag = std::exp(lr - k * log_abs_w);
            // |1/Gamma(x)| <= Gamma(1-x)/pi for x < 0; the envelope ignores
            // accidental near-zeros of sin(pi x).
            const double x = p.theta - p.alpha * k;
            const double env = x < 0.0 ? std::exp(std::lgamma(1.0 - x) - std::log(pi) - k * log_abs_w) : mag;
            if (env > prev && k > 2)
                break;
            prev = env;
            alg -= static_cast<double>(sign) * std::polar(mag, -k * arg_w);
            double scale = std::max(std::abs(alg + expo), 1e-300);
            if (env < 1e-17 * scale)
            {
                converged = true;
                break;
            }
        }
        if (!converged)
            return std::nullopt;
        cplx e = alg + expo;
        if (w.imag() == 0.0)
            e = cplx(e.real(), 0.0);
        return e;
    }

    /// Radius below which ml() uses the power series.
    inline double ml_series_radius(double alpha)
    {
        return std::min(1.0, std::pow(1.5, alpha));
    }

    /// Radius above which ml() tries the asymptotic expansion first.
    inline double ml_asymptotic_radius(double alpha)
    {
        return std::pow(40.0, alpha);
    }

    /// E_{alpha,theta}(w).
    inline cplx ml(const MlParams& p, cplx w)
    {
        p.validate();
        if (!std::isfinite(w.real()) || !std::isfinite(w.imag()))
            fail(ErrorKind::range, "Mittag-Leffler argument is not finite");
        const double r = std::abs(w);
        if (r <= ml_series_radius(p.alpha))
            return ml_series(p, w);
        if (r >= ml_asymptotic_radius(p.alpha))
        {
            if (auto a = ml_asymptotic(p, w))
                return *a;
        }
        try
        {
            return ml_contour(p, w);
        }
        catch (const Error&)
        {
            // E_{a,t}(w) = (E_{a,t-a}(w) - 1/Gamma(t-a)) / w lowers the
            // algebraic order at the origin of the Laplace integrand.
            if (p.theta <= p.alpha + 1.0)
                throw;
            const MlParams lower{p.alpha, p.theta - p.alpha};
            return (ml(lower, w) - detail::rgamma(lower.theta)) / w;
        }
    }

    inline double ml(const MlParams& p, double w)
    {
        return ml(p, cplx(w, 0.0)).real();
    }

    /// t * E_{alpha,2}(-mu t^alpha): the mode response kernel.
    inline double kernel_tE(double alpha, double mu, double t)
    {
        require(alpha > 1.0 && alpha < 2.0, ErrorKind::parameter, "kernel_tE requires alpha in (1,2)");
        require(mu > 0.0, ErrorKind::parameter, "kernel_tE requires mu > 0");
        require(t >= 0.0, ErrorKind::parameter, "kernel_tE requires t >= 0");
        if (t == 0.0)
            return 0.0;
        return t * ml(MlParams{alpha, 2.0}, -mu * std::pow(t, alpha));
    }

    /// t^{theta-1} E_{alpha,theta}(-mu t^alpha) for t >= 0 (the family whose
    /// members are successive antiderivatives of one another in t).
    inline double power_ml(double alpha, double theta, double mu, double t)
    {
        if (t == 0.0)
            return theta == 1.0 ? 1.0 : 0.0;
        return std::pow(t, theta - 1.0) * ml(MlParams{alpha, theta}, -mu * std::pow(t, alpha));
    }
} // namespace fracinv

#endif
