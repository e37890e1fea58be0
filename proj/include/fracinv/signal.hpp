#ifndef FRACINV_SIGNAL_HPP
#define FRACINV_SIGNAL_HPP

// Time-dependent source factors on [0, T], extended by zero for t > T.

#include "errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace fracinv
{
    /// Dense polynomial sum_i c_i t^i.
    class Polynomial
    {
    public:
        Polynomial() = default;
        explicit Polynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) {}

        /// scale * t^p * (T - t)^q expanded in the monomial basis.
        static Polynomial bump(double scale, int p, int q, double T)
        {
            std::vector<double> c(static_cast<std::size_t>(p + q + 1), 0.0);
            // (T - t)^q = sum_j binom(q, j) T^{q-j} (-t)^j
            double binom = 1.0;
            for (int j = 0; j <= q; ++j)
            {
                c[static_cast<std::size_t>(p + j)] = scale * binom * std::pow(T, q - j) * ((j % 2) ? -1.0 : 1.0);
                binom = binom * (q - j) / (j + 1);
            }
            return Polynomial(std::move(c));
        }

        double operator()(double t) const { return derivative(t, 0); }

        double derivative(double t, int order) const
        {
            double acc = 0.0;
            for (std::size_t i = c_.size(); i-- > static_cast<std::size_t>(std::max(order, 0));)
            {
                double f = 1.0;
                for (int j = 0; j < order; ++j)
                    f *= static_cast<double>(i - j);
                acc = acc * t + f * c_[i];
            }
            return acc;
        }

        const std::vector<double>& coefficients() const { return c_; }
        bool is_zero() const
        {
            return std::all_of(c_.begin(), c_.end(), [](double v) { return v == 0.0; });
        }

    private:
        std::vector<double> c_;
    };

    /// Real function on [0, T], zero for t > T. Either a closed-form polynomial
    /// or samples on a uniform grid (piecewise-cubic interpolation between them).
    class TimeSignal
    {
    public:
        TimeSignal() = default;

        static TimeSignal zero(double T)
        {
            TimeSignal s;
            s.T_ = T;
            s.poly_ = Polynomial({0.0});
            s.closed_ = true;
            return s;
        }

        static TimeSignal polynomial(Polynomial p, double T)
        {
            TimeSignal s;
            s.T_ = T;
            s.poly_ = std::move(p);
            s.closed_ = true;
            return s;
        }

        /// samples[j] = f(j T / (samples.size() - 1))
        static TimeSignal sampled(std::vector<double> samples, double T)
        {
            require(samples.size() >= 2, ErrorKind::sampling, "a sampled signal needs at least two samples");
            TimeSignal s;
            s.T_ = T;
            s.samples_ = std::move(samples);
            s.closed_ = false;
            return s;
        }

        double support_end() const { return T_; }
        bool closed_form() const { return closed_; }
        const Polynomial& poly() const { return poly_; }
        const std::vector<double>& samples() const { return samples_; }

        bool is_zero() const
        {
            if (closed_)
                return poly_.is_zero();
            return std::all_of(samples_.begin(), samples_.end(), [](double v) { return v == 0.0; });
        }

        double operator()(double t) const
        {
            if (t < 0.0 || t > T_)
                return 0.0;
            if (closed_)
                return poly_(t);
            return interpolate(t);
        }

        /// Samples at t_j = j dt, j = 0..count-1 (zero beyond T).
        std::vector<double> sample(double dt, std::size_t count) const
        {
            std::vector<double> out(count);
            for (std::size_t j = 0; j < count; ++j)
                out[j] = (*this)(dt * static_cast<double>(j));
            return out;
        }

        /// order-th derivative at t in [0, T]; one-sided at the ends. Sampled
        /// signals use a local least-squares quintic.
        double derivative(double t, int order) const
        {
            if (order == 0)
                return (*this)(t);
            if (closed_)
                return poly_.derivative(t, order);
            return local_poly_derivative(t, order);
        }

        /// max over [0, T] of |f^{(order)}|, sampled on a fine grid.
        double sup_derivative(int order, std::size_t points = 2001) const
        {
            double m = 0.0;
            for (std::size_t i = 0; i < points; ++i)
            {
                double t = T_ * static_cast<double>(i) / static_cast<double>(points - 1);
                m = std::max(m, std::abs(derivative(t, order)));
            }
            return m;
        }

        double l1_norm(std::size_t points = 4001) const
        {
            double acc = 0.0;
            const double h = T_ / static_cast<double>(points - 1);
            for (std::size_t i = 0; i < points; ++i)
            {
                double w = (i == 0 || i + 1 == points) ? 0.5 : 1.0;
                acc += w * std::abs((*this)(h * static_cast<double>(i)));
            }
            return acc * h;
        }

        /// Laplace transform int_0^T e^{-s t} f(t) dt for any complex s.
        std::complex<double> laplace(std::complex<double> s, std::size_t panels = 0) const;

        /// e^{-shift} times the Laplace transform, with shift = max(0, -Re(s) T);
        /// finite where the unscaled transform overflows.
        std::complex<double> laplace_scaled(std::complex<double> s, double& shift) const
        {
            shift = std::max(0.0, -s.real() * T_);
            return laplace_impl(s, 0, shift);
        }

        /// Residual of the local quintic fits used for sampled derivatives,
        /// relative to the sample scale (0 for closed forms).
        double smoothness_residual() const
        {
            if (closed_)
                return 0.0;
            double worst = 0.0;
            double scale = 0.0;
            for (double v : samples_)
                scale = std::max(scale, std::abs(v));
            if (scale == 0.0)
                return 0.0;
            const std::size_t n = samples_.size();
            const std::size_t stride = std::max<std::size_t>(1, n / 50);
            for (std::size_t j = 0; j < n; j += stride)
            {
                const double t = T_ * static_cast<double>(j) / static_cast<double>(n - 1);
                worst = std::max(worst, std::abs(local_poly_derivative(t, 0) - samples_[j]));
            }
            return worst / scale;
        }

    private:
        double step() const { return T_ / static_cast<double>(samples_.size() - 1); }

        double interpolate(double t) const
        {
            // Cubic Lagrange through the four nearest samples.
            const std::size_t n = samples_.size();
            const double h = step();
            const double x = t / h;
            std::ptrdiff_t j = static_cast<std::ptrdiff_t>(std::floor(x));
            j = std::clamp<std::ptrdiff_t>(j, 0, static_cast<std::ptrdiff_t>(n) - 2);
            if (n < 4)
            {
                const double u = x - static_cast<double>(j);
                return samples_[j] * (1.0 - u) + samples_[j + 1] * u;
            }
            std::ptrdiff_t start = std::clamp<std::ptrdiff_t>(j - 1, 0, static_cast<std::ptrdiff_t>(n) - 4);
            double acc = 0.0;
            for (std::ptrdiff_t a = start; a < start + 4; ++a)
            {
                double w = 1.0;
                for (std::ptrdiff_t b = start; b < start + 4; ++b)
                    if (b != a)
                        w *= (x - static_cast<double>(b)) / static_cast<double>(a - b);
                acc += w * samples_[a];
            }
            return acc;
        }

        double local_poly_derivative(double t, int order) const
        {
            constexpr int degree = 5;
            const std::size_t n = samples_.size();
            const std::size_t width = std::min<std::size_t>(n, 13);
            require(static_cast<int>(width) > degree, ErrorKind::sampling,
                    "too few samples to estimate derivatives");
            const double h = step();
            std::ptrdiff_t centre = static_cast<std::ptrdiff_t>(std::llround(t / h));
            std::ptrdiff_t start = centre - static_cast<std::ptrdiff_t>(width / 2);
            start = std::clamp<std::ptrdiff_t>(start, 0, static_cast<std::ptrdiff_t>(n - width));
            Eigen::MatrixXd a(width, degree + 1);
            Eigen::VectorXd b(width);
            for (std::size_t i = 0; i < width; ++i)
            {
                const double u = (static_cast<double>(start + static_cast<std::ptrdiff_t>(i)) * h - t) / h;
                double p = 1.0;
                for (int c = 0; c <= degree; ++c)
                {
                    a(i, c) = p;
                    p *= u;
                }
                b[i] = samples_[static_cast<std::size_t>(start) + i];
            }
            Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
            if (order > degree)
                return 0.0;
            double fact = 1.0;
            for (int c = 2; c <= order; ++c)
                fact *= c;
            return coef[order] * fact / std::pow(h, order);
        }

        std::complex<double> laplace_impl(std::complex<double> s, std::size_t panels, double shift) const;

        double T_ = 0.0;
        bool closed_ = true;
        Polynomial poly_;
        std::vector<double> samples_;
    };

    inline std::complex<double> TimeSignal::laplace(std::complex<double> s, std::size_t panels) const
    {
        return laplace_impl(s, panels, 0.0);
    }

    inline std::complex<double> TimeSignal::laplace_impl(std::complex<double> s, std::size_t panels,
                                                         double shift) const
    {
        using cplx = std::complex<double>;
        // Gauss-Legendre (10 points) per panel; panels resolve both the
        // oscillation Im(s) and the sample grid.
        static const double gx[10] = {-0.9739065285171717, -0.8650633666889845, -0.6794095682990244,
                                      -0.4333953941292472, -0.1488743389816312, 0.1488743389816312,
                                      0.4333953941292472,  0.6794095682990244,  0.8650633666889845,
                                      0.9739065285171717};
        static const double gw[10] = {0.0666713443086881, 0.1494513491505806, 0.2190863625159820,
                                      0.2692667193099963, 0.2955242247147529, 0.2955242247147529,
                                      0.2692667193099963, 0.2190863625159820, 0.1494513491505806,
                                      0.0666713443086881};
        if (panels == 0)
        {
            const double osc = std::abs(s) * T_ / 2.0;
            const std::size_t need = static_cast<std::size_t>(std::ceil(osc)) + 1;
            if (closed_)
                panels = std::max<std::size_t>(8, need);
            else
            {
                // whole number of panels per sample interval
                const std::size_t cells = samples_.size() - 1;
                panels = cells * ((need + cells - 1) / cells);
            }
        }
        const double h = T_ / static_cast<double>(panels);
        cplx acc(0.0, 0.0);
        for (std::size_t p = 0; p < panels; ++p)
        {
            const double mid = h * (static_cast<double>(p) + 0.5);
            for (int i = 0; i < 10; ++i)
            {
                const double t = mid + 0.5 * h * gx[i];
                acc += gw[i] * std::exp(-s * t - shift) * (*this)(t);
            }
        }
        return acc * (0.5 * h);
    }
} // namespace fracinv

#endif
