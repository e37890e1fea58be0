#ifndef FRACINV_ML_TABLE_HPP
#define FRACINV_ML_TABLE_HPP

// Piecewise Chebyshev interpolant of x -> E_{alpha,theta}(-x) on [0, X] for
// bulk evaluation on time grids (every mode of a problem shares one table).

#include "errors.hpp"
#include "mlf.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace fracinv
{
    class MlTable
    {
    public:
        static constexpr int degree = 20;
        static constexpr int panels_per_octave = 4;

        MlTable() = default;

        MlTable(MlParams p, double x_max) : p_(p)
        {
            p.validate();
            require(x_max > 0.0 && std::isfinite(x_max), ErrorKind::range, "table range must be positive");
            // [0, 1] as one panel, then geometric panels up to x_max
            edges_.push_back(0.0);
            edges_.push_back(1.0);
            const double ratio = std::pow(2.0, 1.0 / panels_per_octave);
            while (edges_.back() < x_max)
                edges_.push_back(edges_.back() * ratio);
            const std::size_t np = edges_.size() - 1;
            coeffs_.assign(np * (degree + 1), 0.0);
            std::vector<double> values(degree + 1);
            for (std::size_t i = 0; i < np; ++i)
            {
                const double lo = edges_[i];
                const double hi = edges_[i + 1];
                for (int j = 0; j <= degree; ++j)
                {
                    const double c = std::cos(std::numbers::pi * (j + 0.5) / (degree + 1));
                    const double x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * c;
                    values[j] = ml(p, -x);
                }
                for (int k = 0; k <= degree; ++k)
                {
                    double acc = 0.0;
                    for (int j = 0; j <= degree; ++j)
                        acc += values[j] * std::cos(std::numbers::pi * k * (j + 0.5) / (degree + 1));
                    coeffs_[i * (degree + 1) + k] = acc * (k == 0 ? 1.0 : 2.0) / (degree + 1);
                }
            }
        }

        const MlParams& params() const { return p_; }
        double range() const { return edges_.empty() ? 0.0 : edges_.back(); }

        /// E_{alpha,theta}(-x); falls back to direct evaluation outside the table.
        double operator()(double x) const
        {
            if (edges_.empty() || x < 0.0 || x > edges_.back())
                return ml(p_, -x);
            std::size_t i = 0;
            if (x > 1.0)
            {
                const double pos = std::log2(x) * panels_per_octave;
                i = std::min<std::size_t>(edges_.size() - 2, 1 + static_cast<std::size_t>(pos));
                while (i > 1 && x < edges_[i])
                    --i;
                while (i + 2 < edges_.size() && x > edges_[i + 1])
                    ++i;
            }
            const double lo = edges_[i];
            const double hi = edges_[i + 1];
            const double u = (2.0 * x - lo - hi) / (hi - lo);
            const double* c = &coeffs_[i * (degree + 1)];
            double b1 = 0.0;
            double b2 = 0.0;
            for (int k = degree; k >= 1; --k)
            {
                const double b0 = 2.0 * u * b1 - b2 + c[k];
                b2 = b1;
                b1 = b0;
            }
            return u * b1 - b2 + c[0];
        }

    private:
        MlParams p_{};
        std::vector<double> edges_;
        std::vector<double> coeffs_;
    };
} // namespace fracinv

#endif
