#ifndef FRACINV_SPECTRUM_HPP
#define FRACINV_SPECTRUM_HPP

// Dirichlet eigenstructure of the Laplacian on an interval or a rectangle,
// bookkeeping of distinct eigenvalues, observation weights gamma_k = Phi v_k
// and counting-function diagnostics.
//
// Indices are zero-based throughout the library: mode k here is mode k+1 in
// the usual mathematical numbering, group l is group l+1.

#include "errors.hpp"
#include "quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

namespace fracinv
{
    struct DomainSpec
    {
        enum class Kind
        {
            interval,
            rectangle
        };

        Kind kind = Kind::interval;
        double x1 = 1.0;
        double x2 = 0.0;

        static DomainSpec interval(double x1) { return DomainSpec{Kind::interval, x1, 0.0}; }
        static DomainSpec rectangle(double x1, double x2) { return DomainSpec{Kind::rectangle, x1, x2}; }

        int dim() const { return kind == Kind::interval ? 1 : 2; }

        void validate() const
        {
            require(x1 > 0.0 && std::isfinite(x1), ErrorKind::geometry, "domain side x1 must be positive");
            if (kind == Kind::rectangle)
                require(x2 > 0.0 && std::isfinite(x2), ErrorKind::geometry, "domain side x2 must be positive");
        }

        bool contains(double x, double y = 0.0) const
        {
            if (!(x > 0.0 && x < x1))
                return false;
            return kind == Kind::interval || (y > 0.0 && y < x2);
        }
    };

    /// Index range [begin, end) of modes sharing one eigenvalue.
    struct Group
    {
        std::size_t begin = 0;
        std::size_t end = 0;
        std::size_t size() const { return end - begin; }
        bool contains(std::size_t k) const { return k >= begin && k < end; }
    };

    struct Spectrum
    {
        std::vector<double> lambdas;
        /// Lattice indices (m, n) of each mode; n = 0 on the interval.
        std::vector<std::array<int, 2>> lattice;
        /// First mode of every distinct eigenvalue (k_l).
        std::vector<std::size_t> distinct_index;
        std::vector<Group> groups;
        int d = 1;

        std::size_t size() const { return lambdas.size(); }
        std::size_t group_count() const { return groups.size(); }
        double distinct_lambda(std::size_t l) const { return lambdas[distinct_index[l]]; }
        bool simple() const { return groups.size() == lambdas.size(); }

        std::vector<double> distinct_lambdas() const
        {
            std::vector<double> out;
            out.reserve(groups.size());
            for (std::size_t k : distinct_index)
                out.push_back(lambdas[k]);
            return out;
        }
    };

    constexpr double default_multiplicity_tol = 1e-10;

    struct Grouping
    {
        std::vector<std::size_t> distinct_index;
        std::vector<Group> groups;
    };

    /// Splits a nondecreasing eigenvalue list into runs of equal values. Two
    /// neighbours are merged iff their relative gap is at most rel_tol.
    inline Grouping group_distinct(const std::vector<double>& lambdas, double rel_tol = default_multiplicity_tol)
    {
        Grouping g;
        for (std::size_t k = 0; k < lambdas.size(); ++k)
        {
            require(lambdas[k] >= 0.0 && std::isfinite(lambdas[k]), ErrorKind::domain,
                    "eigenvalues must be finite and nonnegative");
            if (k > 0)
                require(lambdas[k] >= lambdas[k - 1], ErrorKind::domain, "eigenvalues must be nondecreasing");
            bool merge = k > 0 && (lambdas[k] - lambdas[k - 1]) <= rel_tol * std::abs(lambdas[k]);
            if (merge)
            {
                g.groups.back().end = k + 1;
            }
            else
            {
                g.distinct_index.push_back(k);
                g.groups.push_back(Group{k, k + 1});
            }
        }
        return g;
    }

    inline Spectrum eigen_interval(double x1, std::size_t count)
    {
        DomainSpec::interval(x1).validate();
        require(count >= 1, ErrorKind::domain, "spectrum must contain at least one eigenvalue");
        Spectrum s;
        s.d = 1;
        const double c = std::numbers::pi / x1;
        for (std::size_t k = 1; k <= count; ++k)
        {
            s.lambdas.push_back(c * c * static_cast<double>(k * k));
            s.lattice.push_back({static_cast<int>(k), 0});
            s.distinct_index.push_back(k - 1);
            s.groups.push_back(Group{k - 1, k});
        }
        return s;
    }

    /// Lowest `count` eigenvalues pi^2 (m^2/x1^2 + n^2/x2^2), ties broken by
    /// lexicographic (m, n).
    inline Spectrum eigen_rectangle(double x1, double x2, std::size_t count, double rel_tol = default_multiplicity_tol)
    {
        DomainSpec::rectangle(x1, x2).validate();
        require(count >= 1, ErrorKind::domain, "spectrum must contain at least one eigenvalue");

        struct Entry
        {
            double key;
            int m;
            int n;
        };
        // key = m^2 x2^2 + n^2 x1^2 is exact for moderate integer-valued sides.
        const double a = x2 * x2;
        const double b = x1 * x1;
        double bound = std::max(a, b) * 4.0;
        std::vector<Entry> entries;
        while (true)
        {
            entries.clear();
            const int mmax = static_cast<int>(std::sqrt(bound / a)) + 1;
            for (int m = 1; m <= mmax; ++m)
            {
                double rest = bound - a * m * m;
                if (rest < b)
                    break;
                const int nmax = static_cast<int>(std::sqrt(rest / b));
                for (int n = 1; n <= nmax; ++n)
                    entries.push_back(Entry{a * m * m + b * n * n, m, n});
            }
            if (entries.size() >= count)
                break;
            bound *= 2.0;
        }
        std::sort(entries.begin(), entries.end(), [](const Entry& l, const Entry& r) {
            if (l.key != r.key)
                return l.key < r.key;
            if (l.m != r.m)
                return l.m < r.m;
            return l.n < r.n;
        });

        Spectrum s;
        s.d = 2;
        const double scale = std::numbers::pi * std::numbers::pi / (x1 * x1 * x2 * x2);
        for (std::size_t k = 0; k < count; ++k)
        {
            s.lambdas.push_back(scale * entries[k].key);
            s.lattice.push_back({entries[k].m, entries[k].n});
        }
        Grouping g = group_distinct(s.lambdas, rel_tol);
        s.distinct_index = std::move(g.distinct_index);
        s.groups = std::move(g.groups);
        return s;
    }

    inline Spectrum make_spectrum(const DomainSpec& dom, std::size_t count)
    {
        dom.validate();
        return dom.kind == DomainSpec::Kind::interval ? eigen_interval(dom.x1, count)
                                                      : eigen_rectangle(dom.x1, dom.x2, count);
    }

    /// L2-normalized Dirichlet eigenfunction of mode k at (x, y).
    inline double eigenfunction(const DomainSpec& dom, const Spectrum& spec, std::size_t k, double x, double y = 0.0)
    {
        const double pi = std::numbers::pi;
        const auto [m, n] = spec.lattice.at(k);
        if (dom.kind == DomainSpec::Kind::interval)
            return std::sqrt(2.0 / dom.x1) * std::sin(pi * m * x / dom.x1);
        return 2.0 / std::sqrt(dom.x1 * dom.x2) * std::sin(pi * m * x / dom.x1) * std::sin(pi * n * y / dom.x2);
    }

    // ------------------------------------------------------------------
    // Observation functionals

    /// Integral observation with weight kappa(x, y) (y ignored on the interval).
    struct IntegralObservation
    {
        std::function<double(double, double)> kappa;
    };

    struct PointObservation
    {
        double x0 = 0.5;
        double y0 = 0.0;
    };

    /// Boundary observation on a subset of rectangle sides. Dirichlet
    /// eigenfunctions vanish on the boundary, so the functional integrates the
    /// outward normal derivative over the selected sides.
    struct BoundaryObservation
    {
        bool left = true;   // x = 0
        bool right = false; // x = x1
        bool bottom = false; // y = 0
        bool top = false;    // y = x2
    };

    using ObservationSpec = std::variant<IntegralObservation, PointObservation, BoundaryObservation>;

    struct ObservationWeights
    {
        enum class Kind
        {
            integral,
            point,
            boundary_trace
        };
        Kind kind = Kind::point;
        std::vector<double> gammas;
    };

    inline ObservationWeights observation_weights(const ObservationSpec& phi, const DomainSpec& dom,
                                                  const Spectrum& spec)
    {
        dom.validate();
        const double pi = std::numbers::pi;
        ObservationWeights out;
        out.gammas.resize(spec.size());

        if (const auto* p = std::get_if<PointObservation>(&phi))
        {
            out.kind = ObservationWeights::Kind::point;
            require(dom.contains(p->x0, p->y0), ErrorKind::geometry, "observation point lies outside the domain");
            for (std::size_t k = 0; k < spec.size(); ++k)
                out.gammas[k] = eigenfunction(dom, spec, k, p->x0, p->y0);
            return out;
        }

        if (const auto* b = std::get_if<BoundaryObservation>(&phi))
        {
            out.kind = ObservationWeights::Kind::boundary_trace;
            require(dom.kind == DomainSpec::Kind::rectangle, ErrorKind::geometry,
                    "boundary observation is only supported on the rectangle (Dirichlet traces on the interval are "
                    "point data)");
            const double norm = 2.0 / std::sqrt(dom.x1 * dom.x2);
            for (std::size_t k = 0; k < spec.size(); ++k)
            {
                const auto [m, n] = spec.lattice[k];
                // integral of sin(pi j s / L) over (0, L)
                auto sine_integral = [&](int j, double len) { return len * (1.0 - std::cos(pi * j)) / (pi * j); };
                double gx = norm * (pi * m / dom.x1) * sine_integral(n, dom.x2);
                double gy = norm * (pi * n / dom.x2) * sine_integral(m, dom.x1);
                double value = 0.0;
                if (b->left)
                    value -= gx;
                if (b->right)
                    value += gx * std::cos(pi * m);
                if (b->bottom)
                    value -= gy;
                if (b->top)
                    value += gy * std::cos(pi * n);
                out.gammas[k] = value;
            }
            return out;
        }

        const auto& integ = std::get<IntegralObservation>(phi);
        out.kind = ObservationWeights::Kind::integral;
        require(static_cast<bool>(integ.kappa), ErrorKind::parameter, "integral observation needs a weight function");

        // Composite Gauss-Legendre, >= 64 nodes per wavelength of the highest mode.
        constexpr std::size_t order = 16;
        auto panels_for = [&](int max_index) {
            const double wavelengths = std::max(1.0, 0.5 * max_index);
            return static_cast<std::size_t>(std::ceil(64.0 * wavelengths / order)) + 1;
        };
        int mmax = 1;
        int nmax = 1;
        for (const auto& [m, n] : spec.lattice)
        {
            mmax = std::max(mmax, m);
            nmax = std::max(nmax, n);
        }

        const QuadratureRule qx = composite_gauss_legendre(0.0, dom.x1, panels_for(mmax), order);
        Eigen::MatrixXd sx(mmax, qx.nodes.size());
        for (int m = 1; m <= mmax; ++m)
            for (std::size_t i = 0; i < qx.nodes.size(); ++i)
                sx(m - 1, i) = std::sin(pi * m * qx.nodes[i] / dom.x1) * qx.weights[i];

        if (dom.kind == DomainSpec::Kind::interval)
        {
            Eigen::VectorXd kap(qx.nodes.size());
            for (std::size_t i = 0; i < qx.nodes.size(); ++i)
                kap[i] = integ.kappa(qx.nodes[i], 0.0);
            Eigen::VectorXd proj = sx * kap;
            const double norm = std::sqrt(2.0 / dom.x1);
            for (std::size_t k = 0; k < spec.size(); ++k)
                out.gammas[k] = norm * proj[spec.lattice[k][0] - 1];
            return out;
        }

        const QuadratureRule qy = composite_gauss_legendre(0.0, dom.x2, panels_for(nmax), order);
        Eigen::MatrixXd sy(nmax, qy.nodes.size());
        for (int n = 1; n <= nmax; ++n)
            for (std::size_t j = 0; j < qy.nodes.size(); ++j)
                sy(n - 1, j) = std::sin(pi * n * qy.nodes[j] / dom.x2) * qy.weights[j];
        Eigen::MatrixXd kap(qx.nodes.size(), qy.nodes.size());
        for (std::size_t i = 0; i < qx.nodes.size(); ++i)
            for (std::size_t j = 0; j < qy.nodes.size(); ++j)
                kap(i, j) = integ.kappa(qx.nodes[i], qy.nodes[j]);
        Eigen::MatrixXd proj = sx * kap * sy.transpose();
        const double norm = 2.0 / std::sqrt(dom.x1 * dom.x2);
        for (std::size_t k = 0; k < spec.size(); ++k)
            out.gammas[k] = norm * proj(spec.lattice[k][0] - 1, spec.lattice[k][1] - 1);
        return out;
    }

    // ------------------------------------------------------------------
    // Counting-function diagnostics

    struct WeylFit
    {
        double c1_star = 0.0;
        double c2_star = 0.0;
        double residual = 0.0;
    };

    /// Least-squares fit of N(lambda) = c1 lambda^{d/2} (1 + c2 lambda^{-1/2})
    /// over the distinct eigenvalues in the upper half of the spectrum. The last
    /// group is dropped since truncation may have cut it.
    inline WeylFit weyl_fit(const Spectrum& spec)
    {
        require(spec.size() >= 50, ErrorKind::fit, "Weyl fit needs at least 50 eigenvalues");
        const double d = spec.d;
        std::vector<double> lam;
        std::vector<double> count;
        for (std::size_t l = 0; l + 1 < spec.groups.size(); ++l)
        {
            if (spec.groups[l].begin < spec.size() / 2)
                continue;
            lam.push_back(spec.lambdas[spec.groups[l].begin]);
            count.push_back(static_cast<double>(spec.groups[l].end));
        }
        require(lam.size() >= 3, ErrorKind::fit, "too few distinct eigenvalues in the upper half for a Weyl fit");

        Eigen::MatrixXd a(lam.size(), 2);
        Eigen::VectorXd rhs(lam.size());
        for (std::size_t i = 0; i < lam.size(); ++i)
        {
            // Scaled columns keep the normal equations well conditioned.
            a(i, 0) = std::pow(lam[i], d / 2.0) / std::pow(lam.back(), d / 2.0);
            a(i, 1) = std::pow(lam[i], (d - 1.0) / 2.0) / std::pow(lam.back(), (d - 1.0) / 2.0);
            rhs[i] = count[i];
        }
        Eigen::Vector2d coef = a.colPivHouseholderQr().solve(rhs);
        WeylFit fit;
        fit.c1_star = coef[0] / std::pow(lam.back(), d / 2.0);
        const double b = coef[1] / std::pow(lam.back(), (d - 1.0) / 2.0);
        fit.c2_star = b / fit.c1_star;
        fit.residual = (a * coef - rhs).norm() / rhs.norm();
        return fit;
    }

    struct KlasCheck
    {
        double theta = 0.0;
        double zeta = 0.0;
        std::size_t lbar = 0;
        bool holds = false;
    };

    /// Checks the growth conditions k_{l+i}^{2/d} - k_l^{2/d} <= theta_i k_l^{1/d}
    /// and k_{l-i} >= zeta_i k_l for l >= lbar_i on the available distinct
    /// eigenvalues (k_l one-based). Simple spectra are tested against the
    /// parameters lbar_i = 2i, theta_i = (2i/d)(3/2)^{2/d-1}, zeta_i = 1/2;
    /// otherwise lbar_i = 2i and the tightest parameters on the truncation are
    /// reported, with holds requiring their ratios not to grow along the scan.
    inline KlasCheck klas_check(const Spectrum& spec, std::size_t i)
    {
        require(i >= 1, ErrorKind::parameter, "klas_check needs i >= 1");
        const std::size_t groups = spec.group_count();
        require(groups >= 4 * i, ErrorKind::parameter, "klas_check needs at least 4i distinct eigenvalues");
        const double d = spec.d;
        auto kl = [&](std::size_t l) { return static_cast<double>(spec.distinct_index[l - 1] + 1); };

        KlasCheck out;
        out.lbar = 2 * i;
        const std::size_t lmax = groups - i; // need l + i <= groups

        auto growth_ratio = [&](std::size_t l) {
            return (std::pow(kl(l + i), 2.0 / d) - std::pow(kl(l), 2.0 / d)) / std::pow(kl(l), 1.0 / d);
        };
        auto back_ratio = [&](std::size_t l) { return kl(l - i) / kl(l); };

        if (spec.simple())
        {
            out.theta = (2.0 * i / d) * std::pow(1.5, 2.0 / d - 1.0);
            out.zeta = 0.5;
            out.holds = true;
            for (std::size_t l = out.lbar; l <= lmax; ++l)
            {
                if (growth_ratio(l) > out.theta * (1.0 + 1e-12) || back_ratio(l) < out.zeta * (1.0 - 1e-12))
                {
                    out.holds = false;
                    break;
                }
            }
            return out;
        }

        double theta = 0.0;
        double zeta = 1.0;
        double theta_first = 0.0;
        const std::size_t mid = out.lbar + (lmax - out.lbar) / 2;
        for (std::size_t l = out.lbar; l <= lmax; ++l)
        {
            theta = std::max(theta, growth_ratio(l));
            zeta = std::min(zeta, back_ratio(l));
            if (l <= mid)
                theta_first = theta;
        }
        out.theta = theta;
        out.zeta = zeta;
        out.holds = std::isfinite(theta) && zeta > 0.0 && theta <= 2.0 * std::max(theta_first, 1e-300);
        return out;
    }
} // namespace fracinv

#endif
