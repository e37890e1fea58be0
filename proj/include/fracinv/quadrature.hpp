#ifndef FRACINV_QUADRATURE_HPP
#define FRACINV_QUADRATURE_HPP

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

namespace fracinv
{
    struct QuadratureRule
    {
        std::vector<double> nodes;
        std::vector<double> weights;
    };

    /// Gauss-Legendre rule with n points on [-1, 1].
    inline QuadratureRule gauss_legendre(std::size_t n)
    {
        QuadratureRule rule;
        rule.nodes.resize(n);
        rule.weights.resize(n);
        const std::size_t half = (n + 1) / 2;
        for (std::size_t i = 0; i < half; ++i)
        {
            // Tricomi initial guess, then Newton on P_n.
            double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it)
            {
                double p0 = 1.0;
                double p1 = x;
                for (std::size_t k = 2; k <= n; ++k)
                {
                    double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16)
                    break;
            }
            {
                // recompute derivative at converged node
                double p0 = 1.0;
                double p1 = x;
                for (std::size_t k = 2; k <= n; ++k)
                {
                    double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
            }
            double w = 2.0 / ((1.0 - x * x) * dp * dp);
            rule.nodes[i] = -x;
            rule.weights[i] = w;
            rule.nodes[n - 1 - i] = x;
            rule.weights[n - 1 - i] = w;
        }
        if (n % 2 == 1)
            rule.nodes[n / 2] = 0.0;
        return rule;
    }

    /// Composite Gauss-Legendre rule on [a, b] with `panels` equal panels of
    /// `order` points each.
    inline QuadratureRule composite_gauss_legendre(double a, double b, std::size_t panels, std::size_t order)
    {
        const QuadratureRule ref = gauss_legendre(order);
        QuadratureRule out;
        out.nodes.reserve(panels * order);
        out.weights.reserve(panels * order);
        const double h = (b - a) / static_cast<double>(panels);
        for (std::size_t p = 0; p < panels; ++p)
        {
            const double lo = a + h * p;
            for (std::size_t i = 0; i < order; ++i)
            {
                out.nodes.push_back(lo + 0.5 * h * (ref.nodes[i] + 1.0));
                out.weights.push_back(0.5 * h * ref.weights[i]);
            }
        }
        return out;
    }
} // namespace fracinv

#endif
