#ifndef FRACINV_INVERSION_HPP
#define FRACINV_INVERSION_HPP

// Recovery of (alpha, mu, m, beta, b/a, a, g) from one observed trace.
//
// Pipeline: a matrix-pencil estimate of the leading pole seeds a model fit of
// the whole trace in which every data-carrying group keeps its own rate mu_l
// and all poles share the argument pi/alpha; the fitted poles then go through
// the argument/modulus/decomposition/residue stages, and g is obtained by a
// regularized time-domain deconvolution.

#include "errors.hpp"
#include "forward.hpp"
#include "laplace.hpp"
#include "optimize.hpp"
#include "signal.hpp"
#include "spectrum.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace fracinv
{
    // ------------------------------------------------------------------
    // Argument and modulus stages

    struct AlphaEstimate
    {
        double alpha = 0.0;
        double mean_arg = 0.0;
        /// Largest deviation of a pole argument from the weighted mean.
        double dispersion = 0.0;
    };

    inline AlphaEstimate recover_alpha(const std::vector<PoleEstimate>& poles, double max_dispersion = 0.05)
    {
        require(poles.size() >= 2, ErrorKind::parameter, "recover_alpha needs at least two poles");
        cplx acc(0.0, 0.0);
        for (const PoleEstimate& p : poles)
        {
            const double w = p.condition > 0.0 ? 1.0 / p.condition : 1.0;
            acc += w * std::polar(1.0, std::arg(p.location));
        }
        AlphaEstimate out;
        out.mean_arg = std::arg(acc);
        for (const PoleEstimate& p : poles)
            out.dispersion = std::max(out.dispersion, std::abs(std::arg(p.location) - out.mean_arg));
        if (out.dispersion > max_dispersion)
            fail(ErrorKind::inconsistent, "pole arguments disagree by " + std::to_string(out.dispersion) + " rad");
        out.alpha = std::numbers::pi / out.mean_arg;
        if (!(out.alpha > 1.0 && out.alpha < 2.0))
            fail(ErrorKind::inconsistent, "pole argument does not correspond to an order in (1,2)");
        return out;
    }

    struct RateEstimate
    {
        /// Ascending mu_l = |s_l|^alpha.
        std::vector<double> mu;
        /// Group index of each rate (pole attribution, or rank when absent).
        std::vector<std::size_t> group;
    };

    inline RateEstimate recover_mu(const std::vector<PoleEstimate>& poles, double alpha_hat)
    {
        require(alpha_hat > 1.0 && alpha_hat < 2.0, ErrorKind::parameter, "alpha_hat must lie in (1,2)");
        std::vector<std::pair<double, long>> items;
        for (const PoleEstimate& p : poles)
            items.emplace_back(std::pow(std::abs(p.location), alpha_hat), p.group_index);
        std::sort(items.begin(), items.end());
        RateEstimate out;
        for (std::size_t i = 0; i < items.size(); ++i)
        {
            if (i > 0 && items[i].first - items[i - 1].first <= 1e-12 * items[i].first)
                fail(ErrorKind::matching, "two poles share a modulus; rates must be strictly increasing");
            out.mu.push_back(items[i].first);
            out.group.push_back(items[i].second >= 0 ? static_cast<std::size_t>(items[i].second) : i);
        }
        for (std::size_t i = 1; i < out.group.size(); ++i)
            if (out.group[i] <= out.group[i - 1])
                fail(ErrorKind::matching, "pole attribution is not monotone in the modulus");
        return out;
    }

    // ------------------------------------------------------------------
    // Multiterm decomposition mu_l = sum_j c_j lambda_l^{beta_j}

    struct DecomposeOptions
    {
        int max_m = 3;
        /// Relative RMS misfit accepted on unweighted data.
        double tol = 1e-8;
        /// Optional standard deviations of log mu_l; switches selection to a
        /// reduced chi-square test.
        std::vector<double> sigma;
        double chi2_max = 4.0;
    };

    struct Decomposition
    {
        int m = 0;
        std::vector<double> beta;
        std::vector<double> coef;
        /// Relative RMS misfit of the selected model.
        double residual = 0.0;
        double chi2 = 0.0;
        /// Leading slope on the top 40% of the log-lambda range.
        double leading_slope = 0.0;
        std::vector<double> residual_by_m;
        bool warning = false;
    };

    namespace detail
    {
        inline double softplus(double v) { return v > 30.0 ? v : std::log1p(std::exp(v)); }
        inline double softplus_inv(double x) { return x > 30.0 ? x : std::log(std::expm1(std::max(x, 1e-300))); }

        /// Exponents from gap parameters: beta_m = sp(v_m), beta_j = beta_{j+1} + sp(v_j).
        inline std::vector<double> gaps_to_beta(const Eigen::VectorXd& v)
        {
            const auto m = static_cast<std::size_t>(v.size());
            std::vector<double> b(m);
            double acc = 0.0;
            for (std::size_t j = m; j-- > 0;)
            {
                acc += softplus(v[static_cast<Eigen::Index>(j)]);
                b[j] = acc;
            }
            return b;
        }

        inline Eigen::VectorXd beta_to_gaps(const std::vector<double>& b)
        {
            const auto m = b.size();
            Eigen::VectorXd v(static_cast<Eigen::Index>(m));
            for (std::size_t j = 0; j < m; ++j)
            {
                const double gap = (j + 1 < m) ? b[j] - b[j + 1] : b[j];
                v[static_cast<Eigen::Index>(j)] = softplus_inv(std::max(gap, 1e-12));
            }
            return v;
        }

        /// Strictly decreasing exponent tuples in (0, 1] on a grid of the given step.
        inline std::vector<std::vector<double>> exponent_grid(int m, double step)
        {
            std::vector<std::vector<double>> out;
            std::vector<double> beta(static_cast<std::size_t>(m));
            std::function<void(int, double)> rec = [&](int j, double upper) {
                if (j == m)
                {
                    out.push_back(beta);
                    return;
                }
                for (double b = upper; b > step * 0.5 * (m - j); b -= step)
                {
                    beta[static_cast<std::size_t>(j)] = b;
                    rec(j + 1, b - step);
                }
            };
            rec(0, 1.0);
            return out;
        }

        struct TermFit
        {
            std::vector<double> beta;
            std::vector<double> coef;
            Eigen::VectorXd residual;
            bool positive = false;
        };

        /// Coefficients by weighted linear least squares for fixed exponents;
        /// residuals are relative misfits scaled by the weights.
        inline TermFit project_terms(const std::vector<double>& mu, const std::vector<double>& lambda,
                                     const std::vector<double>& weight, const std::vector<double>& beta)
        {
            const auto n = static_cast<Eigen::Index>(mu.size());
            const auto m = static_cast<Eigen::Index>(beta.size());
            Eigen::MatrixXd a(n, m);
            Eigen::VectorXd y(n);
            for (Eigen::Index i = 0; i < n; ++i)
            {
                const double w = weight[static_cast<std::size_t>(i)] / mu[static_cast<std::size_t>(i)];
                for (Eigen::Index j = 0; j < m; ++j)
                    a(i, j) = w * std::pow(lambda[static_cast<std::size_t>(i)], beta[static_cast<std::size_t>(j)]);
                y[i] = w * mu[static_cast<std::size_t>(i)];
            }
            const Eigen::VectorXd c = a.colPivHouseholderQr().solve(y);
            TermFit f;
            f.beta = beta;
            f.coef.assign(c.data(), c.data() + c.size());
            f.residual = a * c - y;
            f.positive = std::all_of(f.coef.begin(), f.coef.end(), [](double v) { return v > 0.0; });
            return f;
        }
    } // namespace detail

    inline Decomposition decompose_multiterm(const std::vector<double>& mu, const std::vector<double>& lambda,
                                             const DecomposeOptions& opt = {})
    {
        require(mu.size() == lambda.size(), ErrorKind::parameter, "rates and eigenvalues must pair up");
        require(opt.max_m >= 1, ErrorKind::parameter, "max_m must be at least 1");
        require(mu.size() >= 3 * static_cast<std::size_t>(opt.max_m), ErrorKind::parameter,
                "decomposition needs at least 3 rates per candidate term");
        for (std::size_t i = 0; i < mu.size(); ++i)
        {
            require(mu[i] > 0.0 && lambda[i] > 0.0, ErrorKind::parameter, "rates and eigenvalues must be positive");
            if (i > 0)
                require(lambda[i] > lambda[i - 1], ErrorKind::parameter, "eigenvalues must be strictly increasing");
        }
        const bool weighted = !opt.sigma.empty();
        if (weighted)
            require(opt.sigma.size() == mu.size(), ErrorKind::parameter, "sigma must match the rates");
        std::vector<double> weight(mu.size(), 1.0);
        if (weighted)
            for (std::size_t i = 0; i < mu.size(); ++i)
                weight[i] = 1.0 / std::max(opt.sigma[i], 1e-300);
        const std::vector<double> unit(mu.size(), 1.0);

        Decomposition out;
        {
            // leading slope on the top 40% of the log-lambda range
            const double lo = std::log(lambda.front());
            const double hi = std::log(lambda.back());
            const double cut = lo + 0.6 * (hi - lo);
            double sx = 0, sy = 0, sxx = 0, sxy = 0, cnt = 0;
            for (std::size_t i = 0; i < mu.size(); ++i)
            {
                const double x = std::log(lambda[i]);
                if (x < cut)
                    continue;
                const double yv = std::log(mu[i]);
                sx += x;
                sy += yv;
                sxx += x * x;
                sxy += x * yv;
                cnt += 1;
            }
            if (cnt >= 2 && sxx * cnt - sx * sx > 0)
                out.leading_slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
        }

        auto cost_of = [&](const std::vector<double>& beta) {
            detail::TermFit f = detail::project_terms(mu, lambda, weight, beta);
            return f.positive ? f.residual.squaredNorm() : std::numeric_limits<double>::infinity();
        };

        std::optional<Decomposition> best_any;
        std::vector<double> previous;
        for (int m = 1; m <= opt.max_m; ++m)
        {
            // seeds: exponent grid plus the peeled leading slope
            std::vector<std::pair<double, std::vector<double>>> seeds;
            const double step = m == 1 ? 0.02 : (m == 2 ? 0.05 : 0.1);
            for (const std::vector<double>& b : detail::exponent_grid(m, step))
            {
                const double c = cost_of(b);
                if (std::isfinite(c))
                    seeds.emplace_back(c, b);
            }
            if (out.leading_slope > 0.0 && out.leading_slope <= 1.0)
            {
                std::vector<double> b{out.leading_slope};
                for (int j = 1; j < m; ++j)
                    b.push_back(b.back() * 0.5);
                const double c = cost_of(b);
                if (std::isfinite(c))
                    seeds.emplace_back(c, b);
            }
            std::sort(seeds.begin(), seeds.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
            if (seeds.size() > 4)
                seeds.resize(4);
            // nested seeds: the previous best exponents with one exponent inserted
            if (!previous.empty())
                for (std::size_t pos = 0; pos <= previous.size(); ++pos)
                {
                    std::vector<double> b = previous;
                    const double upper = pos == 0 ? 1.0 : previous[pos - 1];
                    const double lower = pos == previous.size() ? 0.0 : previous[pos];
                    b.insert(b.begin() + static_cast<std::ptrdiff_t>(pos), 0.5 * (upper + lower));
                    const double c = cost_of(b);
                    if (std::isfinite(c))
                        seeds.emplace_back(c, b);
                }

            std::optional<detail::TermFit> best;
            for (const auto& seed : seeds)
            {
                auto residual = [&](const Eigen::VectorXd& v) {
                    return detail::project_terms(mu, lambda, weight, detail::gaps_to_beta(v)).residual;
                };
                auto admissible = [&](const Eigen::VectorXd& v) {
                    const std::vector<double> b = detail::gaps_to_beta(v);
                    return b.front() <= 1.0 && detail::project_terms(mu, lambda, weight, b).positive;
                };
                auto jac = [&](const Eigen::VectorXd& v, const Eigen::VectorXd& r0) {
                    Eigen::MatrixXd j(r0.size(), v.size());
                    for (Eigen::Index q = 0; q < v.size(); ++q)
                    {
                        Eigen::VectorXd vp = v;
                        Eigen::VectorXd vm = v;
                        const double h = 1e-6 * std::max(1.0, std::abs(v[q]));
                        vp[q] += h;
                        vm[q] -= h;
                        j.col(q) = (residual(vp) - residual(vm)) / (2.0 * h);
                    }
                    return j;
                };
                LmOptions lo;
                lo.max_iter = 3000;
                lo.ftol = 0.0;
                const LmResult res = levenberg_marquardt(residual, jac, detail::beta_to_gaps(seed.second), admissible, lo);
                detail::TermFit f = detail::project_terms(mu, lambda, weight, detail::gaps_to_beta(res.x));
                if (!f.positive || f.beta.front() > 1.0)
                    continue;
                if (!best || f.residual.squaredNorm() < best->residual.squaredNorm())
                    best = f;
            }
            if (!best)
            {
                out.residual_by_m.push_back(std::numeric_limits<double>::infinity());
                continue;
            }
            previous = best->beta;
            const detail::TermFit rel = detail::project_terms(mu, lambda, unit, best->beta);
            // relative misfit of this model (coefficients from the weighted fit)
            double ss = 0.0;
            for (std::size_t i = 0; i < mu.size(); ++i)
            {
                double model = 0.0;
                for (int j = 0; j < m; ++j)
                    model += best->coef[static_cast<std::size_t>(j)] *
                             std::pow(lambda[i], best->beta[static_cast<std::size_t>(j)]);
                ss += std::pow((model - mu[i]) / mu[i], 2);
            }
            (void)rel;
            const double rms = std::sqrt(ss / static_cast<double>(mu.size()));
            out.residual_by_m.push_back(rms);
            const double dof = std::max(1.0, static_cast<double>(mu.size()) - 2.0 * m);
            const double chi2 = best->residual.squaredNorm() / dof;

            Decomposition cand = out;
            cand.m = m;
            cand.beta = best->beta;
            cand.coef = best->coef;
            cand.residual = rms;
            cand.chi2 = chi2;
            const bool accept = weighted ? chi2 <= opt.chi2_max : rms < opt.tol;
            if (accept)
            {
                cand.residual_by_m = out.residual_by_m;
                return cand;
            }
            if (!best_any || rms < best_any->residual)
                best_any = cand;
        }
        require(best_any.has_value(), ErrorKind::fit, "no admissible multiterm model with positive coefficients");
        Decomposition fallback = *best_any;
        fallback.residual_by_m = out.residual_by_m;
        fallback.warning = true;
        return fallback;
    }

    // ------------------------------------------------------------------
    // Whole-trace model fit

    /// Products of two polynomials.
    inline Polynomial poly_multiply(const Polynomial& a, const Polynomial& b)
    {
        const auto& ca = a.coefficients();
        const auto& cb = b.coefficients();
        std::vector<double> c(ca.size() + cb.size() - 1, 0.0);
        for (std::size_t i = 0; i < ca.size(); ++i)
            for (std::size_t j = 0; j < cb.size(); ++j)
                c[i + j] += ca[i] * cb[j];
        return Polynomial(std::move(c));
    }

    /// P_b(2t/T - 1) (1 - t/T)^n for b = 0..count-1, expanded in t.
    inline std::vector<Polynomial> vanishing_legendre_basis(int count, int n, double T)
    {
        std::vector<std::vector<double>> p; // coefficients in x = t/T
        p.push_back({1.0});
        if (count > 1)
            p.push_back({-1.0, 2.0});
        for (int b = 1; b + 1 < count; ++b)
        {
            std::vector<double> next(static_cast<std::size_t>(b + 2), 0.0);
            const auto& pb = p[static_cast<std::size_t>(b)];
            const auto& pm = p[static_cast<std::size_t>(b - 1)];
            for (std::size_t i = 0; i < pb.size(); ++i)
            {
                next[i + 1] += (2.0 * b + 1.0) * 2.0 * pb[i] / (b + 1.0);
                next[i] -= (2.0 * b + 1.0) * pb[i] / (b + 1.0);
            }
            for (std::size_t i = 0; i < pm.size(); ++i)
                next[i] -= b * pm[i] / (b + 1.0);
            p.push_back(std::move(next));
        }
        std::vector<double> end{1.0};
        for (int i = 0; i < n; ++i)
        {
            std::vector<double> e(end.size() + 1, 0.0);
            for (std::size_t j = 0; j < end.size(); ++j)
            {
                e[j] += end[j];
                e[j + 1] -= end[j];
            }
            end = std::move(e);
        }
        std::vector<Polynomial> out;
        for (int b = 0; b < count; ++b)
        {
            Polynomial q = poly_multiply(Polynomial(p[static_cast<std::size_t>(b)]), Polynomial(end));
            std::vector<double> c = q.coefficients();
            double scale = 1.0;
            for (double& v : c)
            {
                v /= scale;
                scale *= T;
            }
            out.emplace_back(std::move(c));
        }
        return out;
    }

    struct TraceFitOptions
    {
        /// Basis size for g during the fit (vanishing Legendre polynomials).
        int g_basis = 12;
        std::size_t max_groups = 64;
        LmOptions lm{60, 1e-15, 1e-13, 1e-3};
        double fd_step = 1e-6;
        /// Largest number of power-law terms in the staged parametric fit.
        int parametric_terms = 2;
        /// Starts carried from the exponent grid into each parametric stage.
        int starts = 2;
        /// Misfit drop, in units of the noise variance, needed to accept one more term.
        double term_threshold = 25.0;
        /// Known noise level of the trace (0 or negative: use the fit residual).
        double noise_sigma = -1.0;
        /// Release the rates from the power law for a final per-group fit.
        bool free_rates = false;
    };

    /// Least-squares model of the trace: nonlinear in (alpha, log mu_l), linear
    /// in (1/a, g/a basis coefficients), solved by variable projection.
    class TraceFit
    {
    public:
        struct Evaluation
        {
            Eigen::VectorXd residual;
            Eigen::VectorXd linear;
        };

        TraceFit(const TimeTrace& trace, const ReducedData& rd, std::vector<std::size_t> groups,
                 TraceFitOptions opt = {})
            : trace_(&trace), rd_(&rd), groups_(std::move(groups)), opt_(opt)
        {
            require(trace.dt > 0.0 && trace.values.size() >= 2, ErrorKind::sampling, "trace is too short");
            const double nt = rd.T / trace.dt;
            require(std::abs(nt - std::round(nt)) < 1e-6 * std::max(1.0, nt), ErrorKind::sampling,
                    "source end T must be a multiple of the trace step");
            grid_.dt = trace.dt;
            grid_.source_steps = static_cast<std::size_t>(std::llround(nt));
            grid_.steps = trace.values.size() - 1;
            require(grid_.steps > grid_.source_steps, ErrorKind::sampling, "trace must extend beyond T");
            require(!groups_.empty(), ErrorKind::parameter, "no data-carrying groups to fit");
            require(groups_.size() <= opt_.max_groups, ErrorKind::truncation, "too many data-carrying groups");

            const std::size_t nodes = grid_.source_steps + 1;
            for (std::size_t l : groups_)
            {
                has_z_ = has_z_ || !rd.z_hat[l].is_zero();
                has_f_ = has_f_ || rd.f_hat[l] != 0.0;
                std::vector<double> z(nodes);
                for (std::size_t j = 0; j < nodes; ++j)
                    z[j] = rd.z_hat[l](grid_.t(j));
                z_samples_.push_back(std::move(z));
            }
            if (has_f_)
            {
                basis_ = vanishing_legendre_basis(opt_.g_basis, rd.n, rd.T);
                for (const Polynomial& b : basis_)
                {
                    std::vector<double> v(nodes);
                    for (std::size_t j = 0; j < nodes; ++j)
                        v[j] = b(grid_.t(j));
                    basis_samples_.push_back(std::move(v));
                }
            }
            y_ = Eigen::Map<const Eigen::VectorXd>(trace.values.data(), static_cast<Eigen::Index>(trace.values.size()));
        }

        const std::vector<std::size_t>& groups() const { return groups_; }
        const std::vector<Polynomial>& g_basis() const { return basis_; }
        bool has_z() const { return has_z_; }
        bool has_f() const { return has_f_; }
        Eigen::Index linear_size() const
        {
            return (has_z_ ? 1 : 0) + (has_f_ ? static_cast<Eigen::Index>(basis_.size()) : 0);
        }
        std::size_t rows() const { return static_cast<std::size_t>(y_.size()); }

        Evaluation evaluate(double alpha, const std::vector<double>& mu) const
        {
            const MlKernels& kern = kernels(alpha, mu);
            std::vector<Columns> cols(groups_.size());
            for (std::size_t i = 0; i < groups_.size(); ++i)
                cols[i] = columns(kern, i, mu[i]);
            return solve(cols);
        }

        /// Parameter vector (alpha, log mu_1, ..., log mu_L).
        static Eigen::VectorXd pack(double alpha, const std::vector<double>& mu)
        {
            Eigen::VectorXd x(static_cast<Eigen::Index>(mu.size() + 1));
            x[0] = alpha;
            for (std::size_t i = 0; i < mu.size(); ++i)
                x[static_cast<Eigen::Index>(i + 1)] = std::log(mu[i]);
            return x;
        }

        static std::vector<double> rates(const Eigen::VectorXd& x)
        {
            std::vector<double> mu(static_cast<std::size_t>(x.size() - 1));
            for (std::size_t i = 0; i < mu.size(); ++i)
                mu[i] = std::exp(x[static_cast<Eigen::Index>(i + 1)]);
            return mu;
        }

        Eigen::VectorXd residual(const Eigen::VectorXd& x) const { return evaluate(x[0], rates(x)).residual; }

        /// Jacobian exploiting that log mu_l only enters group l.
        Eigen::MatrixXd jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& r0) const
        {
            const double h = opt_.fd_step;
            Eigen::MatrixXd j(r0.size(), x.size());
            {
                Eigen::VectorXd xp = x;
                xp[0] += h;
                j.col(0) = (residual(xp) - r0) / h;
            }
            const std::vector<double> mu = rates(x);
            const MlKernels& kern = kernels(x[0], mu);
            std::vector<Columns> cols(groups_.size());
            for (std::size_t i = 0; i < groups_.size(); ++i)
                cols[i] = columns(kern, i, mu[i]);
            for (std::size_t i = 0; i < groups_.size(); ++i)
            {
                std::vector<Columns> trial = cols;
                trial[i] = columns(kern, i, mu[i] * std::exp(h));
                j.col(static_cast<Eigen::Index>(i + 1)) = (solve(trial).residual - r0) / h;
            }
            return j;
        }

        bool admissible(const Eigen::VectorXd& x) const
        {
            if (!(x[0] > 1.001 && x[0] < 1.999))
                return false;
            return x.allFinite();
        }

    private:
        struct Columns
        {
            Eigen::VectorXd known;
            Eigen::VectorXd z;
            Eigen::MatrixXd g;
        };

        const MlKernels& kernels(double alpha, const std::vector<double>& mu) const
        {
            const double mu_max = *std::max_element(mu.begin(), mu.end());
            const double need = std::max(1.0, mu_max * std::pow(grid_.t(grid_.steps), alpha));
            for (const CachedKernels& c : cache_)
                if (c.alpha == alpha && c.range >= need)
                    return *c.kernels;
            if (cache_.size() >= 4)
                cache_.erase(cache_.begin());
            const double range = 4.0 * need;
            cache_.push_back({alpha, range, std::make_shared<MlKernels>(alpha, range)});
            return *cache_.back().kernels;
        }

        Columns columns(const MlKernels& kern, std::size_t i, double mu) const
        {
            const std::size_t l = groups_[i];
            const std::size_t rows = grid_.size();
            Columns c;
            c.known = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows));
            const double phi = rd_->phi_hat[l];
            const double psi = rd_->psi_hat[l];
            if (phi != 0.0 || psi != 0.0)
                for (std::size_t r = 0; r < rows; ++r)
                {
                    const double t = grid_.t(r);
                    double v = 0.0;
                    if (phi != 0.0)
                        v += phi * kern.power(1, mu, t);
                    if (psi != 0.0)
                        v += psi * kern.power(2, mu, t);
                    c.known[static_cast<Eigen::Index>(r)] = v;
                }
            const bool zl = !rd_->z_hat[l].is_zero();
            const double fl = rd_->f_hat[l];
            if (zl || fl != 0.0)
            {
                const HatWeights w = mode_kernel_weights(kern, mu, grid_);
                if (zl)
                {
                    const std::vector<double> v = w.convolve_all(z_samples_[i], rows);
                    c.z = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(rows));
                }
                if (fl != 0.0)
                {
                    c.g.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(basis_samples_.size()));
                    for (std::size_t b = 0; b < basis_samples_.size(); ++b)
                    {
                        const std::vector<double> v = w.convolve_all(basis_samples_[b], rows);
                        c.g.col(static_cast<Eigen::Index>(b)) =
                            fl * Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(rows));
                    }
                }
            }
            return c;
        }

        Evaluation solve(const std::vector<Columns>& cols) const
        {
            const auto rows = static_cast<Eigen::Index>(grid_.size());
            Eigen::VectorXd known = Eigen::VectorXd::Zero(rows);
            Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows, linear_size());
            for (const Columns& c : cols)
            {
                known += c.known;
                Eigen::Index col = 0;
                if (has_z_)
                {
                    if (c.z.size() == rows)
                        d.col(0) += c.z;
                    col = 1;
                }
                if (has_f_ && c.g.rows() == rows)
                    d.middleCols(col, c.g.cols()) += c.g;
            }
            Evaluation e;
            const Eigen::VectorXd target = y_ - known;
            if (d.cols() > 0)
            {
                e.linear = d.colPivHouseholderQr().solve(target);
                e.residual = d * e.linear - target;
            }
            else
            {
                e.linear = Eigen::VectorXd();
                e.residual = -target;
            }
            return e;
        }

        const TimeTrace* trace_;
        const ReducedData* rd_;
        std::vector<std::size_t> groups_;
        TraceFitOptions opt_;
        TimeGrid grid_;
        bool has_z_ = false;
        bool has_f_ = false;
        std::vector<std::vector<double>> z_samples_;
        std::vector<Polynomial> basis_;
        std::vector<std::vector<double>> basis_samples_;
        Eigen::VectorXd y_;
        struct CachedKernels
        {
            double alpha;
            double range;
            std::shared_ptr<MlKernels> kernels;
        };
        mutable std::vector<CachedKernels> cache_;
    };

    struct ModelFitResult
    {
        double alpha = 0.0;
        /// Rates of the fitted groups (same order as `groups`).
        std::vector<double> mu;
        std::vector<std::size_t> groups;
        /// Standard deviations of alpha and of log mu_l.
        double alpha_std = 0.0;
        std::vector<double> log_mu_std;
        /// 1/a from the z channel (0 when no z data).
        double inv_a = 0.0;
        /// g/a in the fitting basis.
        std::vector<double> g_over_a;
        std::vector<Polynomial> g_basis;
        double rms = 0.0;
        double noise_estimate = 0.0;
        int iterations = 0;
        bool converged = false;
        double seed_alpha = 0.0;
        /// Terms and RMS misfit of the best power-law stage.
        int parametric_terms = 0;
        double parametric_rms = 0.0;
        /// (alpha, log c_1..c_m, beta_1..beta_m) of that stage.
        std::vector<double> parametric;

        /// Fitted g = (g/a) / (1/a) as a polynomial.
        Polynomial g_polynomial() const
        {
            std::vector<double> c;
            for (std::size_t b = 0; b < g_basis.size(); ++b)
            {
                const auto& bc = g_basis[b].coefficients();
                if (c.size() < bc.size())
                    c.resize(bc.size(), 0.0);
                for (std::size_t i = 0; i < bc.size(); ++i)
                    c[i] += g_over_a[b] * bc[i] / inv_a;
            }
            if (c.empty())
                c.push_back(0.0);
            return Polynomial(std::move(c));
        }
    };

    /// Groups that carry data and are seen by the observation.
    inline std::vector<std::size_t> observed_groups(const ReducedData& rd)
    {
        std::vector<std::size_t> out;
        for (std::size_t l = 0; l < rd.size(); ++l)
            if (rd.has_data(l))
                out.push_back(l);
        return out;
    }

    namespace detail
    {
        /// Rates mu_l = sum_j exp(p_{1+j}) lambda_l^{p_{1+m+j}} for the parameter
        /// vector p = (alpha, log c_1..c_m, beta_1..beta_m).
        struct PowerLawRates
        {
            std::vector<double> lambda;

            static int terms(const Eigen::VectorXd& p) { return static_cast<int>((p.size() - 1) / 2); }

            std::vector<double> operator()(const Eigen::VectorXd& p) const
            {
                const int m = terms(p);
                std::vector<double> mu(lambda.size(), 0.0);
                for (std::size_t i = 0; i < lambda.size(); ++i)
                    for (int j = 0; j < m; ++j)
                        mu[i] += std::exp(p[1 + j]) * std::pow(lambda[i], p[1 + m + j]);
                return mu;
            }

            /// d(alpha, log mu_l) / dp.
            Eigen::MatrixXd chain(const Eigen::VectorXd& p) const
            {
                const int m = terms(p);
                const std::vector<double> mu = (*this)(p);
                Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(lambda.size() + 1), p.size());
                d(0, 0) = 1.0;
                for (std::size_t i = 0; i < lambda.size(); ++i)
                    for (int j = 0; j < m; ++j)
                    {
                        const double t = std::exp(p[1 + j]) * std::pow(lambda[i], p[1 + m + j]) / mu[i];
                        const auto r = static_cast<Eigen::Index>(i + 1);
                        d(r, 1 + j) = t;
                        d(r, 1 + m + j) = t * std::log(lambda[i]);
                    }
                return d;
            }

            static bool admissible(const Eigen::VectorXd& p)
            {
                if (!p.allFinite() || !(p[0] > 1.001 && p[0] < 1.999))
                    return false;
                const int m = terms(p);
                for (int j = 0; j < m; ++j)
                {
                    const double b = p[1 + m + j];
                    if (!(b > 0.0 && b <= 1.0) || (j > 0 && !(b < p[m + j])))
                        return false;
                }
                return true;
            }

            static Eigen::VectorXd pack(double alpha, const std::vector<double>& coef, const std::vector<double>& beta)
            {
                const auto m = static_cast<Eigen::Index>(coef.size());
                Eigen::VectorXd p(1 + 2 * m);
                p[0] = alpha;
                for (Eigen::Index j = 0; j < m; ++j)
                {
                    p[1 + j] = std::log(coef[static_cast<std::size_t>(j)]);
                    p[1 + m + j] = beta[static_cast<std::size_t>(j)];
                }
                return p;
            }
        };
    } // namespace detail

    /// Fits the trace starting from one seed pole. The rates are first
    /// constrained to power laws with 1, 2, ... terms (each stage seeded from
    /// an exponent grid projected on the previous stage), then released to one
    /// free rate per group for a final local fit.
    inline ModelFitResult fit_trace_model(const TimeTrace& trace, const ReducedData& rd,
                                          const std::vector<double>& lambda_distinct, cplx seed_pole,
                                          const TraceFitOptions& opt = {})
    {
        const std::vector<std::size_t> groups = observed_groups(rd);
        require(!groups.empty(), ErrorKind::identifiability, "no group carries data visible to the observation");
        TraceFit fit(trace, rd, groups, opt);

        const double arg = std::arg(seed_pole);
        require(arg > std::numbers::pi / 2.0 && arg < std::numbers::pi, ErrorKind::estimation,
                "seed pole lies outside the sector (pi/2, pi)");
        const double alpha0 = std::clamp(std::numbers::pi / arg, 1.02, 1.98);
        const double mu0 = std::pow(std::abs(seed_pole), alpha0);

        ModelFitResult out;
        out.seed_alpha = alpha0;
        detail::PowerLawRates law;
        for (std::size_t l : groups)
            law.lambda.push_back(lambda_distinct[l]);

        auto res = [&](const Eigen::VectorXd& p) { return fit.residual(TraceFit::pack(p[0], law(p))); };
        auto jac = [&](const Eigen::VectorXd& p, const Eigen::VectorXd& r0) {
            return Eigen::MatrixXd(fit.jacobian(TraceFit::pack(p[0], law(p)), r0) * law.chain(p));
        };
        auto adm = [](const Eigen::VectorXd& p) { return detail::PowerLawRates::admissible(p); };
        auto cost = [&](const Eigen::VectorXd& p) {
            return adm(p) ? res(p).squaredNorm() : std::numeric_limits<double>::infinity();
        };

        Eigen::VectorXd best;
        double best_cost = std::numeric_limits<double>::infinity();
        int iterations = 0;
        const double rows = static_cast<double>(fit.rows());
        for (int m = 1; m <= std::max(1, opt.parametric_terms); ++m)
        {
            std::vector<std::pair<double, Eigen::VectorXd>> seeds;
            if (m == 1)
            {
                for (int i = 1; i <= 20; ++i)
                {
                    const double beta = 0.05 * i;
                    const Eigen::VectorXd p =
                        detail::PowerLawRates::pack(alpha0, {mu0 / std::pow(law.lambda.front(), beta)}, {beta});
                    seeds.emplace_back(cost(p), p);
                }
            }
            else
            {
                const std::vector<double> prev = law(best);
                const std::vector<double> unit(prev.size(), 1.0);
                for (const std::vector<double>& b : detail::exponent_grid(m, 0.1))
                {
                    const detail::TermFit tf = detail::project_terms(prev, law.lambda, unit, b);
                    if (!tf.positive)
                        continue;
                    const Eigen::VectorXd p = detail::PowerLawRates::pack(best[0], tf.coef, b);
                    seeds.emplace_back(cost(p), p);
                }
            }
            std::sort(seeds.begin(), seeds.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
            if (seeds.size() > static_cast<std::size_t>(std::max(1, opt.starts)))
                seeds.resize(static_cast<std::size_t>(std::max(1, opt.starts)));
            Eigen::VectorXd stage;
            double stage_cost = std::numeric_limits<double>::infinity();
            for (const auto& seed : seeds)
            {
                if (!std::isfinite(seed.first))
                    continue;
                const LmResult lm = levenberg_marquardt(res, jac, seed.second, adm, opt.lm);
                iterations += lm.iterations;
                if (lm.cost < stage_cost)
                {
                    stage_cost = lm.cost;
                    stage = lm.x;
                }
            }
            if (m == 1)
            {
                require(stage.size() > 0, ErrorKind::fit, "no admissible power-law start for the trace fit");
                best = stage;
                best_cost = stage_cost;
                out.parametric_terms = 1;
                continue;
            }
            // an extra term must lower the misfit well beyond the noise it can absorb
            const double dof = std::max(1.0, rows - static_cast<double>(stage.size() + fit.linear_size()));
            const double var = opt.noise_sigma > 0.0 ? opt.noise_sigma * opt.noise_sigma : stage_cost / dof;
            const bool better = stage.size() > 0 && stage_cost < (1.0 - 1e-6) * best_cost &&
                                (var == 0.0 || (best_cost - stage_cost) / var > opt.term_threshold);
            if (!better)
                break;
            best = stage;
            best_cost = stage_cost;
            out.parametric_terms = m;
        }
        out.parametric_rms = std::sqrt(best_cost / rows);
        out.parametric.assign(best.data(), best.data() + best.size());

        LmResult lm;
        lm.x = TraceFit::pack(best[0], law(best));
        if (opt.free_rates)
        {
            auto free_res = [&](const Eigen::VectorXd& x) { return fit.residual(x); };
            auto free_jac = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& r0) { return fit.jacobian(x, r0); };
            auto free_adm = [&](const Eigen::VectorXd& x) { return fit.admissible(x); };
            lm = levenberg_marquardt(free_res, free_jac, lm.x, free_adm, opt.lm);
            iterations += lm.iterations;
        }
        else
        {
            lm.residual = fit.residual(lm.x);
            lm.jacobian = fit.jacobian(lm.x, lm.residual);
            lm.converged = true;
        }

        out.alpha = lm.x[0];
        out.mu = TraceFit::rates(lm.x);
        out.groups = groups;
        out.iterations = iterations;
        out.converged = lm.converged;
        const TraceFit::Evaluation ev = fit.evaluate(out.alpha, out.mu);
        Eigen::Index col = 0;
        if (fit.has_z())
            out.inv_a = ev.linear[col++];
        if (fit.has_f())
        {
            out.g_basis = fit.g_basis();
            for (std::size_t b = 0; b < out.g_basis.size(); ++b)
                out.g_over_a.push_back(ev.linear[col++]);
        }
        const double n = static_cast<double>(fit.rows());
        const double dof = std::max(1.0, n - static_cast<double>(lm.x.size() + fit.linear_size()));
        out.rms = std::sqrt(ev.residual.squaredNorm() / n);
        out.noise_estimate = std::sqrt(ev.residual.squaredNorm() / dof);

        // covariance from the final Jacobian
        const Eigen::MatrixXd jtj = lm.jacobian.transpose() * lm.jacobian;
        Eigen::MatrixXd cov = jtj.completeOrthogonalDecomposition().pseudoInverse();
        cov *= out.noise_estimate * out.noise_estimate;
        out.alpha_std = std::sqrt(std::max(cov(0, 0), 0.0));
        for (std::size_t i = 0; i < groups.size(); ++i)
        {
            const auto k = static_cast<Eigen::Index>(i + 1);
            out.log_mu_std.push_back(std::sqrt(std::max(cov(k, k), 0.0)));
        }
        return out;
    }

    // ------------------------------------------------------------------
    // Coefficient a from residues

    struct CoefficientEstimate
    {
        double a = 0.0;
        std::vector<double> per_pole;
        std::vector<std::size_t> used_groups;
    };

    /// a_l = Z_l(s_l) / (N_l - s_l phi_l - psi_l) with N_l = alpha s_l Res_l, on
    /// the poles of z-nondegenerate groups (those without f preferred, then the
    /// largest moduli); median combination.
    inline CoefficientEstimate recover_a(const std::vector<PoleEstimate>& poles, double alpha_hat,
                                         const ReducedData& rd, std::size_t max_poles = 5)
    {
        require(alpha_hat > 1.0 && alpha_hat < 2.0, ErrorKind::parameter, "alpha_hat must lie in (1,2)");
        std::vector<const PoleEstimate*> usable;
        for (const PoleEstimate& p : poles)
        {
            if (p.group_index < 0)
                continue;
            const auto l = static_cast<std::size_t>(p.group_index);
            if (std::find(rd.z_nondegenerate.begin(), rd.z_nondegenerate.end(), l) != rd.z_nondegenerate.end())
                usable.push_back(&p);
        }
        std::stable_sort(usable.begin(), usable.end(), [&](const PoleEstimate* x, const PoleEstimate* y) {
            const bool fx = rd.f_hat[static_cast<std::size_t>(x->group_index)] != 0.0;
            const bool fy = rd.f_hat[static_cast<std::size_t>(y->group_index)] != 0.0;
            if (fx != fy)
                return !fx;
            return std::abs(x->location) > std::abs(y->location);
        });
        CoefficientEstimate out;
        double z_scale = 0.0;
        std::vector<std::pair<const PoleEstimate*, cplx>> z_at;
        for (const PoleEstimate* p : usable)
        {
            const auto l = static_cast<std::size_t>(p->group_index);
            const cplx z = rd.z_hat[l].laplace(p->location);
            z_scale = std::max(z_scale, std::abs(z));
            z_at.emplace_back(p, z);
        }
        for (const auto& [p, z] : z_at)
        {
            if (out.per_pole.size() >= max_poles)
                break;
            if (!(std::abs(z) > 1e-13 * z_scale) || z_scale == 0.0)
                continue;
            const auto l = static_cast<std::size_t>(p->group_index);
            const cplx s = p->location;
            const cplx num = alpha_hat * s * p->residue;
            const cplx rest = num - s * rd.phi_hat[l] - rd.psi_hat[l];
            if (std::abs(rest) == 0.0)
                continue;
            const cplx ratio = z / rest;
            out.per_pole.push_back(ratio.real());
            out.used_groups.push_back(l);
        }
        if (out.per_pole.empty())
            fail(ErrorKind::identifiability, "coefficient a is unidentifiable: no pole with a nondegenerate z term");
        std::vector<double> sorted = out.per_pole;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t m = sorted.size();
        out.a = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
        if (!(out.a > 0.0))
            fail(ErrorKind::identifiability, "residue-based estimate of a is not positive");
        return out;
    }

    // ------------------------------------------------------------------
    // g by regularized deconvolution

    struct RegularizationSpec
    {
        /// Fixed Tikhonov parameter (relative to the operator scale); disables
        /// the discrepancy principle when set.
        std::optional<double> lambda;
        /// Noise level; negative means estimate from the trace.
        double noise_sigma = -1.0;
        double tau = 1.0;
    };

    struct GRecovery
    {
        /// g at nodes t_j = j dt, j = 0..N_T.
        std::vector<double> g;
        double dt = 0.0;
        double lambda = 0.0;
        double noise = 0.0;
        double misfit = 0.0;
        bool warning = false;

        TimeSignal signal() const { return TimeSignal::sampled(g, dt * static_cast<double>(g.size() - 1)); }
    };

    /// sigma = MAD(second differences) / (0.6745 sqrt(6)).
    inline double estimate_noise(const std::vector<double>& v)
    {
        if (v.size() < 5)
            return 0.0;
        std::vector<double> d;
        for (std::size_t i = 1; i + 1 < v.size(); ++i)
            d.push_back(v[i + 1] - 2.0 * v[i] + v[i - 1]);
        auto median = [](std::vector<double> x) {
            const std::size_t m = x.size() / 2;
            std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(m), x.end());
            return x[m];
        };
        const double med = median(d);
        for (double& x : d)
            x = std::abs(x - med);
        return median(d) / (0.6745 * std::sqrt(6.0));
    }

    struct ModelParameters
    {
        double a = 1.0;
        double alpha = 1.5;
        /// Rates per group index (size >= largest used group + 1).
        std::vector<double> mu;
    };

    /// Known part of the trace (phi, psi, z channels) under the given model.
    inline std::vector<double> known_response(const ModelParameters& mp, const ReducedData& rd, const TimeGrid& grid)
    {
        std::vector<double> out(grid.size(), 0.0);
        double mu_max = 0.0;
        for (std::size_t l = 0; l < rd.size() && l < mp.mu.size(); ++l)
            if (rd.has_data(l))
                mu_max = std::max(mu_max, mp.mu[l]);
        if (mu_max == 0.0)
            return out;
        const MlKernels kern = MlKernels::for_rates(mp.alpha, mu_max, grid.t(grid.steps));
        ProblemSpec ps;
        ps.a = mp.a;
        ps.alpha = mp.alpha;
        for (std::size_t l = 0; l < rd.size() && l < mp.mu.size(); ++l)
        {
            if (rd.phi_hat[l] == 0.0 && rd.psi_hat[l] == 0.0 && rd.z_hat[l].is_zero())
                continue;
            std::vector<double> chi;
            if (!rd.z_hat[l].is_zero())
            {
                chi.resize(grid.source_steps + 1);
                for (std::size_t j = 0; j <= grid.source_steps; ++j)
                    chi[j] = rd.z_hat[l](grid.t(j));
            }
            const std::vector<double> u = mode_solution(ps, kern, mp.mu[l], rd.phi_hat[l], rd.psi_hat[l], chi, grid);
            for (std::size_t i = 0; i < u.size(); ++i)
                out[i] += u[i];
        }
        return out;
    }

    /// Solves r(t) = (1/a) int_0^t K(t - tau) g(tau) dtau with
    /// K = sum_l f_hat_l t E_{alpha,2}(-mu_l t^alpha) by product integration and
    /// Tikhonov regularization on second differences; g vanishes on the last
    /// n nodes.
    inline GRecovery recover_g(const TimeTrace& trace, const ModelParameters& mp, const ReducedData& rd,
                               const RegularizationSpec& reg = {})
    {
        const double nt = rd.T / trace.dt;
        require(std::abs(nt - std::round(nt)) < 1e-6 * std::max(1.0, nt), ErrorKind::sampling,
                "source end T must be a multiple of the trace step");
        TimeGrid grid;
        grid.dt = trace.dt;
        grid.source_steps = static_cast<std::size_t>(std::llround(nt));
        grid.steps = trace.values.size() - 1;
        require(grid.steps >= grid.source_steps, ErrorKind::sampling, "trace must cover [0, T]");

        double f_total = 0.0;
        double f_scale = 0.0;
        double mu_max = 0.0;
        for (std::size_t l = 0; l < rd.size(); ++l)
        {
            f_total += rd.f_hat[l];
            f_scale = std::max(f_scale, std::abs(rd.f_hat[l]));
            if (rd.f_hat[l] != 0.0)
            {
                require(l < mp.mu.size(), ErrorKind::parameter, "missing rate for a group with f data");
                mu_max = std::max(mu_max, mp.mu[l]);
            }
        }
        if (f_scale == 0.0 || std::abs(f_total) <= 1e-12 * f_scale)
            fail(ErrorKind::identifiability, "g is unidentifiable: the observed source profile Phi f vanishes");

        const std::vector<double> known = known_response(mp, rd, grid);
        const std::size_t rows = grid.size();
        Eigen::VectorXd r(static_cast<Eigen::Index>(rows - 1));
        for (std::size_t i = 1; i < rows; ++i)
            r[static_cast<Eigen::Index>(i - 1)] = trace.values[i] - known[i];

        // combined kernel weights
        const MlKernels kern = MlKernels::for_rates(mp.alpha, mu_max, grid.t(grid.steps));
        std::vector<double> left(rows, 0.0);
        std::vector<double> right(rows, 0.0);
        for (std::size_t l = 0; l < rd.size(); ++l)
        {
            if (rd.f_hat[l] == 0.0)
                continue;
            const HatWeights w = mode_kernel_weights(kern, mp.mu[l], grid);
            for (std::size_t m = 0; m < w.left.size(); ++m)
                left[m] += rd.f_hat[l] * w.left[m] / mp.a;
            for (std::size_t m = 0; m < w.right.size(); ++m)
                right[m] += rd.f_hat[l] * w.right[m] / mp.a;
        }
        const std::size_t last = grid.source_steps;
        const std::size_t fixed = static_cast<std::size_t>(std::max(rd.n, 0));
        require(last + 1 > fixed + 2, ErrorKind::sampling, "too few source nodes for the deconvolution");
        const std::size_t free = last + 1 - fixed;
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows - 1), static_cast<Eigen::Index>(free));
        for (std::size_t i = 1; i < rows; ++i)
            for (std::size_t j = 0; j < free && j <= i; ++j)
            {
                double w = 0.0;
                if (j >= 1)
                    w += left[i - j];
                if (j < last && j < i)
                    w += right[i - j];
                a(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j)) = w;
            }
        // second differences over all nodes, fixed nodes are zero
        Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(last - 1), static_cast<Eigen::Index>(free));
        for (std::size_t k = 0; k + 2 <= last; ++k)
            for (std::size_t q = 0; q < 3; ++q)
                if (k + q < free)
                    d2(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k + q)) = q == 1 ? -2.0 : 1.0;

        const Eigen::MatrixXd ata = a.transpose() * a;
        const Eigen::MatrixXd ltl = d2.transpose() * d2;
        const Eigen::VectorXd atr = a.transpose() * r;
        const double scale = ata.trace() / std::max(ltl.trace(), 1e-300);

        GRecovery out;
        out.dt = grid.dt;
        out.noise = reg.noise_sigma >= 0.0 ? reg.noise_sigma : estimate_noise(trace.values);
        auto solve = [&](double lam, Eigen::VectorXd& g) {
            Eigen::MatrixXd m = ata + lam * scale * ltl;
            g = m.ldlt().solve(atr);
            return (a * g - r).norm();
        };
        Eigen::VectorXd g;
        if (reg.lambda)
        {
            out.lambda = *reg.lambda;
            out.misfit = solve(out.lambda, g);
        }
        else
        {
            // relative floor keeps the target positive on clean data
            const double level = std::max(out.noise, 1e-8 * r.norm() / std::sqrt(static_cast<double>(r.size())));
            const double target = reg.tau * level * std::sqrt(static_cast<double>(r.size()));
            double lo = -16.0;
            double hi = 10.0;
            Eigen::VectorXd glo;
            const double mlo = solve(std::pow(10.0, lo), glo);
            Eigen::VectorXd ghi;
            const double mhi = solve(std::pow(10.0, hi), ghi);
            if (mlo >= target)
            {
                out.warning = true;
                out.lambda = std::pow(10.0, lo);
                out.misfit = mlo;
                g = glo;
            }
            else if (mhi <= target)
            {
                out.warning = true;
                out.lambda = std::pow(10.0, hi);
                out.misfit = mhi;
                g = ghi;
            }
            else
            {
                for (int it = 0; it < 40 && hi - lo > 0.01; ++it)
                {
                    const double mid = 0.5 * (lo + hi);
                    Eigen::VectorXd gm;
                    if (solve(std::pow(10.0, mid), gm) > target)
                        hi = mid;
                    else
                        lo = mid;
                }
                out.lambda = std::pow(10.0, lo);
                out.misfit = solve(out.lambda, g);
            }
        }
        out.g.assign(last + 1, 0.0);
        for (std::size_t j = 0; j < free; ++j)
            out.g[j] = g[static_cast<Eigen::Index>(j)];
        return out;
    }

    // ------------------------------------------------------------------
    // Full pipeline

    struct InversionOptions
    {
        /// Noise level of the trace; negative means estimate it.
        double noise_sigma = -1.0;
        std::size_t pencil_poles = 8;
        /// Start of the pencil window as a fraction of (T_obs - T) after T.
        double tail_offset = 0.05;
        TraceFitOptions fit;
        DecomposeOptions decompose;
        RegularizationSpec reg;
        /// Weight the decomposition by the rate uncertainties of a free-rate fit.
        bool weighted_decomposition = true;
    };

    struct RecoveredModel
    {
        double alpha_hat = 0.0;
        std::vector<double> mu_hat;
        std::vector<std::size_t> mu_groups;
        int m_hat = 0;
        std::vector<double> beta_hat;
        std::vector<double> b_over_a_hat;
        double a_hat = 0.0;
        std::vector<double> b_hat;
        GRecovery g_hat;
        std::vector<PoleEstimate> seed_poles;
        std::vector<PoleEstimate> poles;
        std::map<std::string, double> diagnostics;
        std::vector<std::string> warnings;
    };

    template <class F>
    auto run_stage(const char* stage, F&& f) -> decltype(f())
    {
        try
        {
            return f();
        }
        catch (const Error& e)
        {
            if (!e.stage().empty())
                throw;
            throw e.with_stage(stage);
        }
    }

    /// The trace must start at t = 0 on a grid containing T; `lambda_distinct`
    /// lists the distinct eigenvalues (group order).
    inline RecoveredModel invert_full(const TimeTrace& trace, const ReducedData& rd,
                                      const std::vector<double>& lambda_distinct, const InversionOptions& opt = {})
    {
        require(lambda_distinct.size() >= rd.size(), ErrorKind::parameter, "eigenvalues must cover every group");
        RecoveredModel out;
        const double T = rd.T;
        const double t_obs = trace.horizon();
        const double noise = opt.noise_sigma >= 0.0 ? opt.noise_sigma : estimate_noise(trace.values);
        out.diagnostics["noise_estimate"] = noise;

        ModelFitResult fit = run_stage("poles", [&] {
            require(t_obs > T + 4.0 * trace.dt, ErrorKind::sampling, "trace has no samples after the source support");
            PencilOptions po;
            po.noise_sigma = noise > 1e-9 ? noise : 0.0;
            const double start = T + opt.tail_offset * (t_obs - T);
            const PencilResult pr = find_poles_data(trace, start, opt.pencil_poles, po);
            out.seed_poles = pr.poles;
            const PoleEstimate* seed = nullptr;
            for (const PoleEstimate& p : pr.poles)
            {
                const double a = std::arg(p.location);
                if (a > std::numbers::pi / 2.0 && a < std::numbers::pi)
                {
                    seed = &p;
                    break;
                }
            }
            if (!seed)
                fail(ErrorKind::estimation, "no oscillatory pole in the sector (pi/2, pi) found in the tail");
            out.diagnostics["pencil_order"] = static_cast<double>(pr.order);
            TraceFitOptions fo = opt.fit;
            if (fo.noise_sigma < 0.0 && opt.noise_sigma >= 0.0)
                fo.noise_sigma = opt.noise_sigma;
            return fit_trace_model(trace, rd, lambda_distinct, seed->location, fo);
        });
        out.diagnostics["fit_rms"] = fit.rms;
        out.diagnostics["fit_iterations"] = fit.iterations;
        out.diagnostics["fit_alpha_std"] = fit.alpha_std;
        out.diagnostics["seed_alpha"] = fit.seed_alpha;
        out.diagnostics["parametric_terms"] = fit.parametric_terms;
        out.diagnostics["parametric_rms"] = fit.parametric_rms;
        if (!fit.converged)
            out.warnings.push_back("model fit stopped before convergence");

        // poles of the fitted model with residues of its transfer function
        out.poles = run_stage("poles", [&] {
            std::vector<double> mu_full(rd.size(), 0.0);
            for (std::size_t i = 0; i < fit.groups.size(); ++i)
                mu_full[fit.groups[i]] = fit.mu[i];
            // groups without data get interpolated rates only to keep H well defined
            for (std::size_t l = 0; l < rd.size(); ++l)
                if (mu_full[l] == 0.0)
                    mu_full[l] = l > 0 ? mu_full[l - 1] * 1.0001 + 1e-9 : fit.mu.front() * 0.5;
            const double a_fit = fit.inv_a > 0.0 ? 1.0 / fit.inv_a : 1.0;
            Polynomial gp = fit.g_basis.empty() ? Polynomial({0.0}) : fit.g_polynomial();
            const TimeSignal gsig = TimeSignal::polynomial(gp, T);
            TransferFunction H(a_fit, fit.alpha, mu_full, rd, [gsig](cplx s) { return gsig.laplace(s); });
            std::vector<PoleEstimate> poles;
            for (std::size_t i = 0; i < fit.groups.size(); ++i)
            {
                const std::size_t l = fit.groups[i];
                PoleEstimate p;
                p.location = H.pole(l);
                p.residue = H.numerator(l, p.location) / (fit.alpha * p.location);
                p.group_index = static_cast<long>(l);
                p.method = PoleEstimate::Method::model_fit;
                p.condition = fit.log_mu_std[i] > 0.0 ? fit.log_mu_std[i] : 1e-16;
                if (std::abs(p.residue) > 0.0)
                    poles.push_back(p);
            }
            return poles;
        });

        const AlphaEstimate ae = run_stage("alpha", [&] { return recover_alpha(out.poles); });
        out.alpha_hat = ae.alpha;
        out.diagnostics["alpha_dispersion"] = ae.dispersion;

        const RateEstimate re = run_stage("mu", [&] { return recover_mu(out.poles, out.alpha_hat); });
        out.mu_hat = re.mu;
        out.mu_groups = re.group;

        const Decomposition dec = run_stage("decompose", [&] {
            std::vector<double> lam;
            for (std::size_t l : re.group)
                lam.push_back(lambda_distinct[l]);
            DecomposeOptions dopt = opt.decompose;
            if (opt.fit.free_rates && opt.weighted_decomposition && noise > 1e-9)
            {
                dopt.sigma.clear();
                for (std::size_t l : re.group)
                {
                    const auto it = std::find(fit.groups.begin(), fit.groups.end(), l);
                    dopt.sigma.push_back(fit.log_mu_std[static_cast<std::size_t>(it - fit.groups.begin())]);
                }
            }
            return decompose_multiterm(re.mu, lam, dopt);
        });
        out.m_hat = dec.m;
        out.beta_hat = dec.beta;
        out.b_over_a_hat = dec.coef;
        out.diagnostics["decompose_residual"] = dec.residual;
        out.diagnostics["decompose_chi2"] = dec.chi2;
        out.diagnostics["leading_slope"] = dec.leading_slope;
        if (dec.warning)
            out.warnings.push_back("multiterm decomposition did not reach the residual floor");

        const CoefficientEstimate ce = run_stage("a", [&] { return recover_a(out.poles, out.alpha_hat, rd); });
        out.a_hat = ce.a;
        out.diagnostics["a_poles_used"] = static_cast<double>(ce.per_pole.size());
        if (fit.inv_a > 0.0)
            out.diagnostics["a_joint_fit"] = 1.0 / fit.inv_a;
        for (double c : out.b_over_a_hat)
            out.b_hat.push_back(c * out.a_hat);

        const bool has_f = !rd.f_nondegenerate.empty();
        if (has_f)
        {
            out.g_hat = run_stage("g", [&] {
                ModelParameters mp;
                mp.a = out.a_hat;
                mp.alpha = out.alpha_hat;
                mp.mu.assign(rd.size(), 0.0);
                for (std::size_t l = 0; l < rd.size(); ++l)
                {
                    double v = 0.0;
                    for (std::size_t j = 0; j < dec.beta.size(); ++j)
                        v += dec.coef[j] * std::pow(lambda_distinct[l], dec.beta[j]);
                    mp.mu[l] = v;
                }
                RegularizationSpec reg = opt.reg;
                if (reg.noise_sigma < 0.0)
                    reg.noise_sigma = noise;
                return recover_g(trace, mp, rd, reg);
            });
            out.diagnostics["g_lambda"] = out.g_hat.lambda;
            if (out.g_hat.warning)
                out.warnings.push_back("discrepancy principle did not bracket the noise level");
        }
        return out;
    }
} // namespace fracinv

#endif
