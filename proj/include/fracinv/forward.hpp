#ifndef FRACINV_FORWARD_HPP
#define FRACINV_FORWARD_HPP

// Spectral solution of the direct problem: per-mode Mittag-Leffler
// representation, product-integration convolution with the source, the
// observed trace h(t) = sum_k gamma_k u_k(t) and an independent residual check
// of the per-mode fractional ODE.

#include "errors.hpp"
#include "ml_table.hpp"
#include "mlf.hpp"
#include "parallel.hpp"
#include "signal.hpp"
#include "spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace fracinv
{
    struct OperatorTerm
    {
        double b = 1.0;
        double beta = 1.0;
    };

    struct ProblemSpec
    {
        double a = 1.0;
        double alpha = 1.5;
        std::vector<OperatorTerm> terms{OperatorTerm{}};
        DomainSpec domain = DomainSpec::interval(1.0);
        double T = 1.0;
        double T_obs = 2.0;

        void validate() const
        {
            require(a > 0.0 && std::isfinite(a), ErrorKind::parameter, "coefficient a must be positive");
            require(alpha > 1.0 && alpha < 2.0, ErrorKind::parameter, "order alpha must lie in (1,2)");
            require(!terms.empty(), ErrorKind::parameter, "operator needs at least one term");
            for (std::size_t j = 0; j < terms.size(); ++j)
            {
                require(terms[j].b > 0.0, ErrorKind::parameter, "operator weights b_j must be positive");
                require(terms[j].beta > 0.0 && terms[j].beta <= 1.0, ErrorKind::parameter,
                        "operator exponents beta_j must lie in (0,1]");
                if (j > 0)
                    require(terms[j].beta < terms[j - 1].beta, ErrorKind::parameter,
                            "operator exponents must be strictly decreasing");
            }
            require(T > 0.0 && T_obs > T, ErrorKind::parameter, "horizons must satisfy T_obs > T > 0");
            domain.validate();
        }
    };

    struct InitialData
    {
        std::vector<double> phi;
        std::vector<double> psi;
    };

    struct SourceSpec
    {
        TimeSignal g;
        std::vector<double> f;
        /// Per-mode z_k; missing entries are treated as zero.
        std::vector<TimeSignal> z;
        /// Smoothness order of the vanishing conditions at T.
        int n = 1;

        bool z_is_zero(std::size_t k) const { return k >= z.size() || z[k].is_zero(); }
        double f_at(std::size_t k) const { return k < f.size() ? f[k] : 0.0; }
    };

    /// Uniform grid t_i = i dt, i = 0..steps, with the source end T on a node.
    struct TimeGrid
    {
        double dt = 1e-3;
        std::size_t steps = 0;
        std::size_t source_steps = 0;

        static TimeGrid make(double dt, double T, double T_obs)
        {
            require(dt > 0.0, ErrorKind::sampling, "time step must be positive");
            const double nt = T / dt;
            const double nobs = T_obs / dt;
            require(std::abs(nt - std::round(nt)) < 1e-6 * std::max(1.0, nt), ErrorKind::sampling,
                    "source end T must be a multiple of the time step");
            require(std::abs(nobs - std::round(nobs)) < 1e-6 * std::max(1.0, nobs), ErrorKind::sampling,
                    "observation end T_obs must be a multiple of the time step");
            TimeGrid g;
            g.dt = dt;
            g.source_steps = static_cast<std::size_t>(std::llround(nt));
            g.steps = static_cast<std::size_t>(std::llround(nobs));
            return g;
        }

        double t(std::size_t i) const { return dt * static_cast<double>(i); }
        std::size_t size() const { return steps + 1; }
    };

    struct TimeTrace
    {
        double dt = 0.0;
        /// values[i] = h(i dt); values[0] is h(0).
        std::vector<double> values;

        double t(std::size_t i) const { return dt * static_cast<double>(i); }
        double horizon() const { return dt * static_cast<double>(values.size() - 1); }
    };

    /// mu_k = (1/a) sum_j b_j lambda_k^{beta_j}.
    inline std::vector<double> mode_rates(const ProblemSpec& ps, const Spectrum& spec)
    {
        ps.validate();
        std::vector<double> mu(spec.size());
        for (std::size_t k = 0; k < spec.size(); ++k)
        {
            double acc = 0.0;
            for (const auto& term : ps.terms)
                acc += term.b * std::pow(spec.lambdas[k], term.beta);
            mu[k] = acc / ps.a;
        }
        return mu;
    }

    /// Product-integration weights of a kernel for piecewise-linear densities
    /// on a uniform grid, built from the first two antiderivatives
    /// P1(s) = int_0^s K, P2(s) = int_0^s P1 sampled at s = m h.
    ///   left[m]  = int_{mh}^{(m+1)h} K(s) ((m+1)h - s)/h ds
    ///   right[m] = int_{(m-1)h}^{mh} K(s) (s - (m-1)h)/h ds   (m >= 1)
    struct HatWeights
    {
        std::vector<double> left;
        std::vector<double> right;

        static HatWeights from_antiderivatives(std::span<const double> p1, std::span<const double> p2, double h)
        {
            const std::size_t n = p1.size();
            HatWeights w;
            w.left.assign(n > 0 ? n - 1 : 0, 0.0);
            w.right.assign(n, 0.0);
            for (std::size_t m = 0; m + 1 < n; ++m)
                w.left[m] = -p1[m] + (p2[m + 1] - p2[m]) / h;
            for (std::size_t m = 1; m < n; ++m)
                w.right[m] = p1[m] - (p2[m] - p2[m - 1]) / h;
            return w;
        }

        /// sum_j density_j * weight(n - j) for a density that is piecewise linear
        /// on nodes 0..J and vanishes beyond node J (J = density.size() - 1).
        double convolve_at(std::span<const double> density, std::size_t n) const
        {
            const std::size_t last = density.size() - 1;
            double acc = 0.0;
            const std::size_t jmax = std::min(n, last);
            for (std::size_t j = 0; j <= jmax; ++j)
            {
                double w = 0.0;
                if (j >= 1)
                    w += left[n - j];
                if (j < last && j < n)
                    w += right[n - j];
                acc += density[j] * w;
            }
            return acc;
        }

        /// convolve_at for n = 0..count-1.
        std::vector<double> convolve_all(std::span<const double> density, std::size_t count) const
        {
            std::vector<double> out(count, 0.0);
            const std::size_t last = density.size() - 1;
            for (std::size_t n = 1; n < count; ++n)
            {
                double acc = 0.0;
                const std::size_t jmax = std::min(n, last);
                // j = 0 uses only the right half-hat
                acc += density[0] * right[n];
                for (std::size_t j = 1; j <= jmax; ++j)
                {
                    double w = left[n - j];
                    if (j < last && j < n)
                        w += right[n - j];
                    acc += density[j] * w;
                }
                out[n] = acc;
            }
            return out;
        }
    };

    /// Tables of x -> E_{alpha,theta}(-x), theta = 1..4, shared by all modes.
    class MlKernels
    {
    public:
        MlKernels(double alpha, double x_max) : alpha_(alpha)
        {
            for (int th = 1; th <= 4; ++th)
                tables_.emplace_back(MlParams{alpha, static_cast<double>(th)}, x_max);
        }

        /// Tables covering every argument mu t^alpha with mu <= mu_max, t <= t_max.
        static MlKernels for_rates(double alpha, double mu_max, double t_max)
        {
            return MlKernels(alpha, std::max(1.0, mu_max * std::pow(t_max, alpha)) * 1.0001);
        }

        double alpha() const { return alpha_; }

        /// t^{theta-1} E_{alpha,theta}(-mu t^alpha) for integer theta in 1..4.
        double power(int theta, double mu, double t) const
        {
            if (t == 0.0)
                return theta == 1 ? 1.0 : 0.0;
            double tp = 1.0;
            for (int i = 1; i < theta; ++i)
                tp *= t;
            return tp * tables_[static_cast<std::size_t>(theta - 1)](mu * std::pow(t, alpha_));
        }

    private:
        double alpha_;
        std::vector<MlTable> tables_;
    };

    /// Kernel t E_{alpha,2}(-mu t^alpha) and its two antiderivatives
    /// t^2 E_{alpha,3}(-mu t^alpha), t^3 E_{alpha,4}(-mu t^alpha) on the grid.
    inline HatWeights mode_kernel_weights(const MlKernels& kern, double mu, const TimeGrid& grid)
    {
        std::vector<double> p1(grid.size());
        std::vector<double> p2(grid.size());
        for (std::size_t m = 0; m < grid.size(); ++m)
        {
            const double s = grid.t(m);
            p1[m] = kern.power(3, mu, s);
            p2[m] = kern.power(4, mu, s);
        }
        return HatWeights::from_antiderivatives(p1, p2, grid.dt);
    }

    /// Samples of chi_k = g f_k + z_k on source nodes 0..source_steps.
    inline std::vector<double> source_samples(const SourceSpec& src, std::size_t k, const TimeGrid& grid)
    {
        std::vector<double> chi(grid.source_steps + 1, 0.0);
        const double fk = src.f_at(k);
        for (std::size_t j = 0; j <= grid.source_steps; ++j)
        {
            const double t = grid.t(j);
            double v = 0.0;
            if (fk != 0.0)
                v += fk * src.g(t);
            if (!src.z_is_zero(k))
                v += src.z[k](t);
            chi[j] = v;
        }
        return chi;
    }

    /// u_k(t_i) = phi E_{alpha,1}(-mu t^alpha) + psi t E_{alpha,2}(-mu t^alpha)
    ///          + (1/a) [t E_{alpha,2}(-mu t^alpha)] * chi(t)
    /// with chi sampled on nodes 0..source_steps and zero afterwards.
    inline std::vector<double> mode_solution(const ProblemSpec& ps, const MlKernels& kern, double mu, double phi,
                                             double psi, std::span<const double> chi, const TimeGrid& grid)
    {
        require(mu > 0.0, ErrorKind::parameter, "mode rate must be positive");
        require(chi.empty() || chi.size() == grid.source_steps + 1, ErrorKind::sampling,
                "source samples must cover the grid nodes of [0, T]");
        require(grid.source_steps >= 1, ErrorKind::sampling, "source interval must span at least one step");
        require(kern.alpha() == ps.alpha, ErrorKind::parameter, "kernel tables built for a different order");
        std::vector<double> u(grid.size(), 0.0);
        if (phi != 0.0 || psi != 0.0)
        {
            for (std::size_t i = 0; i < grid.size(); ++i)
            {
                const double t = grid.t(i);
                double v = 0.0;
                if (phi != 0.0)
                    v += phi * kern.power(1, mu, t);
                if (psi != 0.0)
                    v += psi * kern.power(2, mu, t);
                u[i] = v;
            }
        }
        const bool active = std::any_of(chi.begin(), chi.end(), [](double v) { return v != 0.0; });
        if (active)
        {
            const HatWeights w = mode_kernel_weights(kern, mu, grid);
            const std::vector<double> conv = w.convolve_all(chi, grid.size());
            for (std::size_t i = 1; i < grid.size(); ++i)
                u[i] += conv[i] / ps.a;
        }
        return u;
    }

    /// Pairwise (cascade) summation, independent of how terms were produced.
    inline double pairwise_sum(std::span<const double> v)
    {
        if (v.size() <= 8)
        {
            double s = 0.0;
            for (double x : v)
                s += x;
            return s;
        }
        const std::size_t half = v.size() / 2;
        return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
    }

    struct ObservedTrace
    {
        TimeTrace trace;
        /// max_t |contribution of the last decade of modes| / max_t |h|.
        double tail_estimate = 0.0;
        bool truncation_warning = false;
    };

    /// h(t_i) = sum_k gamma_k u_k(t_i). Rows of `modes` with an empty vector are
    /// treated as identically zero.
    inline ObservedTrace observe(const std::vector<std::vector<double>>& modes, std::span<const double> gammas,
                                 double dt, double tail_tol = 1e-10)
    {
        require(modes.size() == gammas.size(), ErrorKind::sampling, "mode count must match weight count");
        std::size_t len = 0;
        for (const auto& m : modes)
            len = std::max(len, m.size());
        ObservedTrace out;
        out.trace.dt = dt;
        out.trace.values.assign(len, 0.0);
        if (len == 0)
            return out;

        const std::size_t kmax = modes.size();
        const std::size_t tail_begin = kmax - std::max<std::size_t>(1, kmax / 10);
        std::vector<double> terms(kmax);
        double hmax = 0.0;
        double tmax = 0.0;
        for (std::size_t i = 0; i < len; ++i)
        {
            for (std::size_t k = 0; k < kmax; ++k)
                terms[k] = modes[k].empty() ? 0.0 : gammas[k] * modes[k][i];
            const double h = pairwise_sum(terms);
            const double tail = pairwise_sum(std::span<const double>(terms).subspan(tail_begin));
            out.trace.values[i] = h;
            hmax = std::max(hmax, std::abs(h));
            tmax = std::max(tmax, std::abs(tail));
        }
        out.tail_estimate = hmax > 0.0 ? tmax / hmax : 0.0;
        out.truncation_warning = out.tail_estimate > tail_tol;
        return out;
    }

    struct ForwardResult
    {
        std::vector<double> mu;
        /// Per-mode samples; empty for modes without data.
        std::vector<std::vector<double>> modes;
        ObservedTrace observed;
    };

    /// Full forward run: rates, per-mode solutions (only modes that carry
    /// data and are observed), observation.
    inline ForwardResult solve_forward(const ProblemSpec& ps, const Spectrum& spec,
                                       std::span<const double> gammas, const InitialData& init,
                                       const SourceSpec& src, const TimeGrid& grid, double tail_tol = 1e-10)
    {
        ps.validate();
        require(gammas.size() == spec.size(), ErrorKind::sampling, "weights must match the spectrum");
        ForwardResult out;
        out.mu = mode_rates(ps, spec);
        out.modes.assign(spec.size(), {});
        auto at = [](const std::vector<double>& v, std::size_t k) { return k < v.size() ? v[k] : 0.0; };

        std::vector<std::size_t> active;
        for (std::size_t k = 0; k < spec.size(); ++k)
        {
            const bool data = at(init.phi, k) != 0.0 || at(init.psi, k) != 0.0 || src.f_at(k) != 0.0 ||
                              !src.z_is_zero(k);
            if (data && gammas[k] != 0.0)
                active.push_back(k);
        }
        double mu_max = 0.0;
        for (std::size_t k : active)
            mu_max = std::max(mu_max, out.mu[k]);
        const MlKernels kern = MlKernels::for_rates(ps.alpha, mu_max, grid.t(grid.steps));
        parallel_for(active.size(), [&](std::size_t idx) {
            const std::size_t k = active[idx];
            const std::vector<double> chi = source_samples(src, k, grid);
            out.modes[k] = mode_solution(ps, kern, out.mu[k], at(init.phi, k), at(init.psi, k), chi, grid);
        });
        for (auto& m : out.modes)
            if (m.empty())
                m.assign(grid.size(), 0.0);
        out.observed = observe(out.modes, gammas, grid.dt, tail_tol);
        return out;
    }

    /// Grunwald-Letnikov weights (-1)^j binom(order, j).
    inline std::vector<double> grunwald_weights(double order, std::size_t count)
    {
        std::vector<double> w(count);
        if (count == 0)
            return w;
        w[0] = 1.0;
        for (std::size_t j = 1; j < count; ++j)
            w[j] = w[j - 1] * (1.0 - (order + 1.0) / static_cast<double>(j));
        return w;
    }

    /// Discrete L2 norm over (0, T_obs] of the per-mode equation residual
    ///   D^{alpha-1}(u' - psi) + mu u - (1/a) I^{2-alpha} chi,
    /// with the Riemann-Liouville derivative written as D^alpha(u - phi - psi t)
    /// and discretized by Grunwald-Letnikov weights (first order), and the
    /// fractional integral of chi by product integration.
    inline double residual_oracle(const ProblemSpec& ps, double mu, double phi, double psi,
                                  std::span<const double> chi, std::span<const double> u, const TimeGrid& grid)
    {
        require(u.size() == grid.size(), ErrorKind::sampling, "mode samples must cover the grid");
        const double alpha = ps.alpha;
        const double h = grid.dt;
        const std::size_t n = grid.size();

        std::vector<double> w(n);
        for (std::size_t i = 0; i < n; ++i)
            w[i] = u[i] - phi - psi * grid.t(i);
        const std::vector<double> gl = grunwald_weights(alpha, n);

        // I^{2-alpha} kernel s^{1-alpha}/Gamma(2-alpha) and its antiderivatives.
        std::vector<double> p1(n);
        std::vector<double> p2(n);
        for (std::size_t m = 0; m < n; ++m)
        {
            const double s = grid.t(m);
            p1[m] = std::pow(s, 2.0 - alpha) / std::tgamma(3.0 - alpha);
            p2[m] = std::pow(s, 3.0 - alpha) / std::tgamma(4.0 - alpha);
        }
        const HatWeights iw = HatWeights::from_antiderivatives(p1, p2, h);
        const bool active = std::any_of(chi.begin(), chi.end(), [](double v) { return v != 0.0; });

        const double scale = std::pow(h, -alpha);
        double acc = 0.0;
        for (std::size_t i = 1; i < n; ++i)
        {
            double d = 0.0;
            for (std::size_t j = 0; j <= i; ++j)
                d += gl[j] * w[i - j];
            double r = scale * d + mu * u[i];
            if (active)
                r -= iw.convolve_at(chi, i) / ps.a;
            acc += r * r;
        }
        return std::sqrt(acc * h);
    }

    /// True iff e^{-sigma t}|h(t)| stays within 10x its maximum over the first
    /// tenth of the record.
    inline bool exp_bound_check(const TimeTrace& trace, double sigma)
    {
        require(sigma > 0.0, ErrorKind::parameter, "sigma must be positive");
        const std::size_t n = trace.values.size();
        if (n == 0)
            return true;
        const std::size_t early = std::max<std::size_t>(1, n / 10);
        double early_max = 0.0;
        double all_max = 0.0;
        for (std::size_t i = 0; i < n; ++i)
        {
            const double v = std::exp(-sigma * trace.t(i)) * std::abs(trace.values[i]);
            if (i < early)
                early_max = std::max(early_max, v);
            all_max = std::max(all_max, v);
        }
        return all_max <= 10.0 * early_max;
    }
} // namespace fracinv

#endif
