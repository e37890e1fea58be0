#ifndef FRACINV_OPTIMIZE_HPP
#define FRACINV_OPTIMIZE_HPP

// Levenberg-Marquardt with Marquardt scaling and caller-supplied Jacobians.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace fracinv
{
    struct LmOptions
    {
        int max_iter = 100;
        /// Stop when the relative decrease of the cost falls below this.
        double ftol = 1e-15;
        /// Stop when the step is below xtol (1 + |x|).
        double xtol = 1e-13;
        double lambda0 = 1e-3;
    };

    struct LmResult
    {
        Eigen::VectorXd x;
        Eigen::VectorXd residual;
        Eigen::MatrixXd jacobian;
        double cost = 0.0;
        int iterations = 0;
        bool converged = false;
    };

    /// Minimizes |r(x)|^2. `admissible(x)` rejects infeasible trial points
    /// (the step is then treated as a failure and damping increases).
    inline LmResult levenberg_marquardt(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
                                        const std::function<Eigen::MatrixXd(const Eigen::VectorXd&,
                                                                            const Eigen::VectorXd&)>& jacobian,
                                        Eigen::VectorXd x0,
                                        const std::function<bool(const Eigen::VectorXd&)>& admissible = {},
                                        const LmOptions& opt = {})
    {
        LmResult out;
        out.x = std::move(x0);
        out.residual = residual(out.x);
        out.cost = out.residual.squaredNorm();
        double lambda = opt.lambda0;
        for (int it = 0; it < opt.max_iter; ++it)
        {
            out.iterations = it + 1;
            out.jacobian = jacobian(out.x, out.residual);
            const Eigen::MatrixXd jtj = out.jacobian.transpose() * out.jacobian;
            const Eigen::VectorXd grad = out.jacobian.transpose() * out.residual;
            Eigen::VectorXd diag = jtj.diagonal().cwiseMax(1e-300);
            bool improved = false;
            bool tiny_step = false;
            for (int attempt = 0; attempt < 30; ++attempt)
            {
                Eigen::MatrixXd a = jtj;
                a.diagonal() += lambda * diag;
                const Eigen::VectorXd step = a.ldlt().solve(-grad);
                if (!step.allFinite())
                {
                    lambda *= 10.0;
                    continue;
                }
                if (step.norm() < opt.xtol * (1.0 + out.x.norm()))
                {
                    tiny_step = true;
                    break;
                }
                const Eigen::VectorXd trial = out.x + step;
                if (admissible && !admissible(trial))
                {
                    lambda *= 10.0;
                    continue;
                }
                const Eigen::VectorXd r = residual(trial);
                const double c = r.allFinite() ? r.squaredNorm() : std::numeric_limits<double>::infinity();
                if (c < out.cost)
                {
                    const double rel = (out.cost - c) / std::max(out.cost, 1e-300);
                    out.x = trial;
                    out.residual = r;
                    out.cost = c;
                    lambda = std::max(lambda / 5.0, 1e-15);
                    improved = true;
                    if (rel < opt.ftol)
                        tiny_step = true;
                    break;
                }
                lambda *= 10.0;
            }
            if (!improved || tiny_step)
            {
                out.converged = true;
                break;
            }
        }
        return out;
    }

    /// Forward-difference Jacobian.
    inline Eigen::MatrixXd numeric_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
                                            const Eigen::VectorXd& x, const Eigen::VectorXd& r0, double rel_step = 1e-7)
    {
        Eigen::MatrixXd j(r0.size(), x.size());
        for (Eigen::Index q = 0; q < x.size(); ++q)
        {
            Eigen::VectorXd xp = x;
            const double h = rel_step * std::max(1.0, std::abs(x[q]));
            xp[q] += h;
            j.col(q) = (residual(xp) - r0) / h;
        }
        return j;
    }
} // namespace fracinv

#endif
