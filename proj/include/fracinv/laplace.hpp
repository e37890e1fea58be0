#ifndef FRACINV_LAPLACE_HPP
#define FRACINV_LAPLACE_HPP

// Group-reduced data, the meromorphic Laplace transform H(s) of the observed
// trace, model-based pole location and the matrix-pencil estimate of poles
// from samples.

#include "errors.hpp"
#include "forward.hpp"
#include "signal.hpp"
#include "spectrum.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <vector>

namespace fracinv
{
    using cplx = std::complex<double>;

    /// Weighted sum of signals; closed forms stay closed, otherwise everything
    /// is resampled on the finest sample grid among the inputs.
    inline TimeSignal combine_signals(const std::vector<double>& weights, const std::vector<const TimeSignal*>& signals,
                                      double T)
    {
        bool all_closed = true;
        std::size_t samples = 0;
        for (const TimeSignal* s : signals)
        {
            if (!s->closed_form())
            {
                all_closed = false;
                samples = std::max(samples, s->samples().size());
            }
        }
        if (all_closed)
        {
            std::vector<double> c;
            for (std::size_t i = 0; i < signals.size(); ++i)
            {
                const auto& pc = signals[i]->poly().coefficients();
                if (c.size() < pc.size())
                    c.resize(pc.size(), 0.0);
                for (std::size_t j = 0; j < pc.size(); ++j)
                    c[j] += weights[i] * pc[j];
            }
            if (c.empty())
                c.push_back(0.0);
            return TimeSignal::polynomial(Polynomial(std::move(c)), T);
        }
        std::vector<double> out(samples, 0.0);
        const double h = T / static_cast<double>(samples - 1);
        for (std::size_t i = 0; i < signals.size(); ++i)
            for (std::size_t j = 0; j < samples; ++j)
                out[j] += weights[i] * (*signals[i])(h * static_cast<double>(j));
        return TimeSignal::sampled(std::move(out), T);
    }

    /// Per-group sums over modes sharing an eigenvalue.
    struct ReducedData
    {
        std::vector<double> phi_hat;
        std::vector<double> psi_hat;
        std::vector<double> f_hat;
        std::vector<TimeSignal> z_hat;
        int n = 1;
        double T = 1.0;
        /// Groups with z_hat^{(n-1)}(T) != 0.
        std::vector<std::size_t> z_nondegenerate;
        /// Groups with f_hat != 0.
        std::vector<std::size_t> f_nondegenerate;

        std::size_t size() const { return phi_hat.size(); }

        bool has_data(std::size_t l) const
        {
            return phi_hat[l] != 0.0 || psi_hat[l] != 0.0 || f_hat[l] != 0.0 || !z_hat[l].is_zero();
        }

        /// One past the last group carrying any data.
        std::size_t active_extent() const
        {
            std::size_t e = 0;
            for (std::size_t l = 0; l < size(); ++l)
                if (has_data(l))
                    e = l + 1;
            return e;
        }
    };

    inline ReducedData reduce_data(std::span<const double> gammas, const InitialData& init, const SourceSpec& src,
                                   const Spectrum& spec, double T, double floor_rel = 1e-10)
    {
        require(gammas.size() == spec.size(), ErrorKind::sampling, "weights must match the spectrum");
        auto at = [](const std::vector<double>& v, std::size_t k) { return k < v.size() ? v[k] : 0.0; };
        ReducedData rd;
        rd.n = src.n;
        rd.T = T;
        const std::size_t L = spec.group_count();
        rd.phi_hat.assign(L, 0.0);
        rd.psi_hat.assign(L, 0.0);
        rd.f_hat.assign(L, 0.0);
        rd.z_hat.reserve(L);
        double f_scale = 0.0;
        for (std::size_t l = 0; l < L; ++l)
        {
            const Group& g = spec.groups[l];
            std::vector<double> w;
            std::vector<const TimeSignal*> zs;
            for (std::size_t k = g.begin; k < g.end; ++k)
            {
                rd.phi_hat[l] += gammas[k] * at(init.phi, k);
                rd.psi_hat[l] += gammas[k] * at(init.psi, k);
                rd.f_hat[l] += gammas[k] * src.f_at(k);
                f_scale = std::max(f_scale, std::abs(gammas[k] * src.f_at(k)));
                if (!src.z_is_zero(k))
                {
                    w.push_back(gammas[k]);
                    zs.push_back(&src.z[k]);
                }
            }
            rd.z_hat.push_back(zs.empty() ? TimeSignal::zero(T) : combine_signals(w, zs, T));
        }

        std::vector<double> zder(L, 0.0);
        double z_scale = 0.0;
        for (std::size_t l = 0; l < L; ++l)
        {
            if (rd.z_hat[l].is_zero())
                continue;
            zder[l] = rd.z_hat[l].derivative(T, src.n - 1);
            z_scale = std::max(z_scale, std::abs(zder[l]));
        }
        for (std::size_t l = 0; l < L; ++l)
        {
            if (z_scale > 0.0 && std::abs(zder[l]) > floor_rel * z_scale)
                rd.z_nondegenerate.push_back(l);
            if (f_scale > 0.0 && std::abs(rd.f_hat[l]) > floor_rel * f_scale)
                rd.f_nondegenerate.push_back(l);
        }
        return rd;
    }

    /// Laplace transforms of all z_hat_l at one s with shared exponentials.
    class GroupTransforms
    {
    public:
        GroupTransforms(const ReducedData& rd, std::size_t groups) : rd_(&rd), groups_(groups)
        {
            for (std::size_t l = 0; l < groups; ++l)
            {
                if (!rd.z_hat[l].is_zero())
                    active_.push_back(l);
                if (!rd.z_hat[l].closed_form())
                    sampled_cells_ = std::max(sampled_cells_, rd.z_hat[l].samples().size() - 1);
            }
        }

        std::vector<cplx> operator()(cplx s) const
        {
            std::vector<cplx> out(groups_, cplx(0.0, 0.0));
            if (active_.empty())
                return out;
            const Table& tab = table(panels_for(s));
            const std::size_t nodes = tab.t.size();
            std::vector<cplx> e(nodes);
            for (std::size_t i = 0; i < nodes; ++i)
                e[i] = tab.w[i] * std::exp(-s * tab.t[i]);
            for (std::size_t a = 0; a < active_.size(); ++a)
            {
                const double* v = &tab.values[a * nodes];
                cplx acc(0.0, 0.0);
                for (std::size_t i = 0; i < nodes; ++i)
                    acc += e[i] * v[i];
                out[active_[a]] = acc;
            }
            return out;
        }

    private:
        struct Table
        {
            std::vector<double> t;
            std::vector<double> w;
            std::vector<double> values;
        };

        std::size_t panels_for(cplx s) const
        {
            const double need = std::ceil(std::abs(s) * rd_->T / 2.0) + 1.0;
            std::size_t p = 8;
            while (static_cast<double>(p) < need)
                p *= 2;
            if (sampled_cells_ > 0)
                p = sampled_cells_ * ((p + sampled_cells_ - 1) / sampled_cells_);
            return p;
        }

        const Table& table(std::size_t panels) const
        {
            auto it = cache_.find(panels);
            if (it != cache_.end())
                return *it->second;
            auto tab = std::make_unique<Table>();
            const QuadratureRule q = composite_gauss_legendre(0.0, rd_->T, panels, 10);
            tab->t = q.nodes;
            tab->w = q.weights;
            tab->values.resize(active_.size() * q.nodes.size());
            for (std::size_t a = 0; a < active_.size(); ++a)
                for (std::size_t i = 0; i < q.nodes.size(); ++i)
                    tab->values[a * q.nodes.size() + i] = rd_->z_hat[active_[a]](q.nodes[i]);
            const Table& ref = *tab;
            cache_.emplace(panels, std::move(tab));
            return ref;
        }

        const ReducedData* rd_;
        std::size_t groups_;
        std::vector<std::size_t> active_;
        std::size_t sampled_cells_ = 0;
        mutable std::map<std::size_t, std::unique_ptr<Table>> cache_;
    };

    /// H(s) = s^{alpha-2} sum_l N_l(s) / (s^alpha + mu_l),
    /// N_l(s) = s phi_hat_l + psi_hat_l + (1/a)(f_hat_l G(s) + Z_hat_l(s)).
    class TransferFunction
    {
    public:
        struct Value
        {
            cplx h;
            bool near_pole = false;
            /// |contribution of the last tenth of the groups| / |H|.
            double tail = 0.0;
        };

        TransferFunction(double a, double alpha, std::vector<double> mu, const ReducedData& rd,
                         std::function<cplx(cplx)> G = {})
            : a_(a), alpha_(alpha), mu_(std::move(mu)), rd_(&rd), G_(std::move(G)),
              groups_(std::min(mu_.size(), rd.size())), z_(rd, groups_)
        {
            require(a > 0.0, ErrorKind::parameter, "coefficient a must be positive");
            require(alpha > 1.0 && alpha < 2.0, ErrorKind::parameter, "order alpha must lie in (1,2)");
            for (std::size_t l = 0; l < groups_; ++l)
                require(mu_[l] > 0.0, ErrorKind::parameter, "group rates must be positive");
        }

        double alpha() const { return alpha_; }
        double a() const { return a_; }
        std::size_t groups() const { return groups_; }
        const std::vector<double>& rates() const { return mu_; }
        const ReducedData& data() const { return *rd_; }

        /// s_l = mu_l^{1/alpha} e^{i pi / alpha}
        cplx pole(std::size_t l) const
        {
            return std::polar(std::pow(mu_[l], 1.0 / alpha_), std::numbers::pi / alpha_);
        }

        cplx G(cplx s) const { return G_ ? G_(s) : cplx(0.0, 0.0); }

        std::vector<cplx> numerators(cplx s) const
        {
            const std::vector<cplx> zt = z_(s);
            const cplx gs = G(s);
            std::vector<cplx> out(groups_);
            for (std::size_t l = 0; l < groups_; ++l)
                out[l] = s * rd_->phi_hat[l] + rd_->psi_hat[l] + (rd_->f_hat[l] * gs + zt[l]) / a_;
            return out;
        }

        cplx numerator(std::size_t l, cplx s) const { return numerators(s)[l]; }

        Value eval(cplx s) const
        {
            Value v;
            const std::vector<cplx> num = numerators(s);
            const cplx sa = std::pow(s, alpha_);
            std::vector<cplx> terms(groups_);
            for (std::size_t l = 0; l < groups_; ++l)
            {
                terms[l] = num[l] / (sa + mu_[l]);
                const cplx sl = pole(l);
                if (std::abs(s - sl) < 1e-8 * std::abs(sl))
                    v.near_pole = true;
            }
            cplx total(0.0, 0.0);
            cplx tail(0.0, 0.0);
            const std::size_t extent = rd_->active_extent();
            const std::size_t tail_begin = groups_ - std::max<std::size_t>(1, groups_ / 10);
            for (std::size_t l = 0; l < groups_; ++l)
            {
                total += terms[l];
                if (l >= tail_begin)
                    tail += terms[l];
            }
            v.h = std::pow(s, alpha_ - 2.0) * total;
            v.tail = (extent >= groups_ && std::abs(total) > 0.0) ? std::abs(tail) / std::abs(total) : 0.0;
            return v;
        }

        cplx operator()(cplx s) const { return eval(s).h; }

    private:
        double a_;
        double alpha_;
        std::vector<double> mu_;
        const ReducedData* rd_;
        std::function<cplx(cplx)> G_;
        std::size_t groups_;
        GroupTransforms z_;
    };

    /// H(s) with a truncation check: throws when the last tenth of the groups
    /// still carries more than `tail_tol` of the sum.
    inline TransferFunction::Value analytic_H(const TransferFunction& H, cplx s, double tail_tol = 1e-6)
    {
        TransferFunction::Value v = H.eval(s);
        if (v.tail > tail_tol)
            fail(ErrorKind::truncation, "transfer function series not converged on the retained groups");
        return v;
    }

    struct PoleEstimate
    {
        enum class Method
        {
            model_scan,
            data_pencil,
            model_fit
        };

        cplx location;
        cplx residue;
        /// Group index (zero-based) or -1 when not attributed.
        long group_index = -1;
        Method method = Method::model_scan;
        double condition = 0.0;
    };

    inline const char* to_string(PoleEstimate::Method m)
    {
        switch (m)
        {
        case PoleEstimate::Method::model_scan:
            return "model_scan";
        case PoleEstimate::Method::data_pencil:
            return "data_pencil";
        case PoleEstimate::Method::model_fit:
            return "model_fit";
        }
        return "unknown";
    }

    /// lim (s - s*) H(s) as the average of H(s* + r e^{i t}) r e^{i t} over
    /// `nodes` equispaced points of the circle of radius r.
    template <class F>
    cplx contour_residue(const F& h, cplx center, double radius, int nodes = 32)
    {
        cplx acc(0.0, 0.0);
        for (int j = 0; j < nodes; ++j)
        {
            const cplx d = std::polar(radius, 2.0 * std::numbers::pi * (j + 0.5) / nodes);
            acc += h(center + d) * d;
        }
        return acc / static_cast<double>(nodes);
    }

    struct ScanWindow
    {
        double r_min = 0.1;
        double r_max = 100.0;
        double arg_min = std::numbers::pi / 2.0;
        double arg_max = std::numbers::pi;
        int per_decade = 64;
        int args = 256;
    };

    struct PoleScan
    {
        std::vector<PoleEstimate> poles;
        bool partial = false;
        std::vector<std::string> rejected;
    };

    /// Window spanning the analytic poles of the first `groups` groups with a
    /// margin of a factor 2 in modulus.
    inline ScanWindow default_window(const TransferFunction& H, std::size_t groups)
    {
        ScanWindow w;
        groups = std::min(groups, H.groups());
        require(groups > 0, ErrorKind::parameter, "scan window needs at least one group");
        w.r_min = std::abs(H.pole(0)) / 2.0;
        w.r_max = std::abs(H.pole(groups - 1)) * 2.0;
        return w;
    }

    /// Zeros of 1/H in the upper sector: coarse log-polar scan for local minima
    /// of |1/H|, Newton refinement, residues by contour averaging.
    inline PoleScan find_poles_model(const TransferFunction& H, std::size_t count, const ScanWindow& win)
    {
        require(win.r_min > 0.0 && win.r_max > win.r_min, ErrorKind::parameter, "invalid scan radii");
        const double decades = std::log10(win.r_max / win.r_min);
        const int nr = std::max(3, static_cast<int>(std::ceil(decades * win.per_decade)) + 1);
        const int na = std::max(3, win.args);
        auto radius = [&](int i) { return win.r_min * std::pow(10.0, decades * i / (nr - 1)); };
        auto angle = [&](int j) { return win.arg_min + (win.arg_max - win.arg_min) * (j + 0.5) / na; };

        std::vector<double> inv(static_cast<std::size_t>(nr) * na);
        for (int i = 0; i < nr; ++i)
            for (int j = 0; j < na; ++j)
            {
                const cplx h = H(std::polar(radius(i), angle(j)));
                inv[static_cast<std::size_t>(i) * na + j] = std::abs(h) > 0.0 ? 1.0 / std::abs(h) : 1e300;
            }

        struct Candidate
        {
            double value;
            cplx s;
        };
        std::vector<Candidate> cands;
        for (int i = 0; i < nr; ++i)
            for (int j = 0; j < na; ++j)
            {
                const double v = inv[static_cast<std::size_t>(i) * na + j];
                bool minimum = true;
                for (int di = -1; di <= 1 && minimum; ++di)
                    for (int dj = -1; dj <= 1; ++dj)
                    {
                        if (di == 0 && dj == 0)
                            continue;
                        const int ii = i + di;
                        const int jj = j + dj;
                        if (ii < 0 || ii >= nr || jj < 0 || jj >= na)
                            continue;
                        if (inv[static_cast<std::size_t>(ii) * na + jj] < v)
                        {
                            minimum = false;
                            break;
                        }
                    }
                if (minimum)
                    cands.push_back({v, std::polar(radius(i), angle(j))});
            }
        std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.value < b.value; });
        // hypothesis locations; poles shadowed by a large entire part never show on the grid
        for (std::size_t l = 0; l < H.groups(); ++l)
        {
            const cplx sl = H.pole(l);
            const double arg = std::arg(sl);
            if (std::abs(sl) >= win.r_min && std::abs(sl) <= win.r_max && arg >= win.arg_min && arg <= win.arg_max)
                cands.push_back({0.0, sl});
        }

        PoleScan out;
        auto recip = [&](cplx s) { return 1.0 / H(s); };
        for (const Candidate& c : cands)
        {
            cplx s = c.s;
            bool converged = false;
            for (int it = 0; it < 60; ++it)
            {
                const double hstep = 1e-7 * std::abs(s);
                const cplx g0 = recip(s);
                const cplx dg = (recip(s + hstep) - recip(s - hstep)) / (2.0 * hstep);
                if (!std::isfinite(std::abs(dg)) || std::abs(dg) == 0.0)
                    break;
                const cplx step = g0 / dg;
                s -= step;
                if (std::abs(step) < 1e-14 * std::abs(s))
                {
                    converged = true;
                    break;
                }
            }
            const double arg = std::arg(s);
            if (!converged || !std::isfinite(std::abs(s)))
            {
                out.rejected.push_back("Newton did not converge near " + std::to_string(std::abs(c.s)));
                continue;
            }
            if (s.imag() <= 0.0 || arg < win.arg_min || arg > win.arg_max || std::abs(s) < win.r_min ||
                std::abs(s) > win.r_max)
            {
                out.rejected.push_back("refined point left the scan window");
                continue;
            }
            const bool duplicate = std::any_of(out.poles.begin(), out.poles.end(), [&](const PoleEstimate& p) {
                return std::abs(p.location - s) < 1e-8 * std::abs(s);
            });
            if (duplicate)
                continue;
            PoleEstimate p;
            p.location = s;
            p.method = PoleEstimate::Method::model_scan;
            const double r = 1e-3 * std::abs(s);
            p.residue = contour_residue(H, s, r);
            double ring = 0.0;
            for (int j = 0; j < 8; ++j)
                ring += std::abs(H(s + std::polar(r, 2.0 * std::numbers::pi * (j + 0.5) / 8.0))) * r / 8.0;
            if (!(std::abs(p.residue) > 1e-10 * ring))
            {
                out.rejected.push_back("removable singularity near " + std::to_string(std::abs(s)));
                continue;
            }
            // local conditioning: |d(1/H)/ds|^{-1} relative to |s|
            const double hstep = 1e-7 * std::abs(s);
            const cplx dg = (recip(s + hstep) - recip(s - hstep)) / (2.0 * hstep);
            p.condition = 1.0 / (std::abs(dg) * std::abs(s));
            double best = 1e300;
            for (std::size_t l = 0; l < H.groups(); ++l)
            {
                const double d = std::abs(H.pole(l) - s);
                if (d < best && d < 1e-6 * std::abs(s))
                {
                    best = d;
                    p.group_index = static_cast<long>(l);
                }
            }
            out.poles.push_back(p);
        }
        std::sort(out.poles.begin(), out.poles.end(),
                  [](const PoleEstimate& a, const PoleEstimate& b) { return std::abs(a.location) < std::abs(b.location); });
        if (out.poles.size() > count)
            out.poles.resize(count);
        out.partial = out.poles.size() < count;
        return out;
    }

    struct PencilOptions
    {
        /// Relative singular-value threshold for the model order on clean data.
        double sv_threshold = 1e-8;
        /// Known noise level; 0 means clean data.
        double noise_sigma = 0.0;
        std::size_t max_samples = 400;
    };

    struct PencilResult
    {
        std::vector<PoleEstimate> poles;
        std::size_t order = 0;
        std::vector<double> singular_values;
    };

    /// Matrix-pencil fit of sum_j c_j e^{s_j t} to the samples with t >= tail_start.
    /// Returns up to n_poles upper-half-plane exponents, largest amplitude first.
    inline PencilResult find_poles_data(const TimeTrace& trace, double tail_start, std::size_t n_poles,
                                        const PencilOptions& opt = {})
    {
        require(trace.dt > 0.0, ErrorKind::sampling, "trace needs a positive time step");
        require(n_poles >= 1, ErrorKind::parameter, "at least one pole must be requested");
        const std::size_t first = static_cast<std::size_t>(std::ceil(tail_start / trace.dt - 1e-9));
        const std::size_t avail = first < trace.values.size() ? trace.values.size() - first : 0;
        require(avail >= 4 * n_poles, ErrorKind::sampling,
                "tail after the source support holds fewer than 4 samples per requested pole");
        const std::size_t stride = std::max<std::size_t>(1, (avail + opt.max_samples - 1) / opt.max_samples);
        std::vector<double> y;
        for (std::size_t i = first; i < trace.values.size(); i += stride)
            y.push_back(trace.values[i]);
        const double tau = trace.dt * static_cast<double>(stride);
        const double t0 = trace.dt * static_cast<double>(first);
        const int n = static_cast<int>(y.size());
        require(n >= static_cast<int>(4 * n_poles), ErrorKind::sampling, "too few decimated tail samples");

        const int cols = n / 2;
        const int rows = n - cols;
        Eigen::MatrixXd hank(rows, cols + 1);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j <= cols && i + j < n; ++j)
                hank(i, j) = y[static_cast<std::size_t>(i + j)];
        Eigen::BDCSVD<Eigen::MatrixXd> svd(hank, Eigen::ComputeThinV);
        const Eigen::VectorXd sv = svd.singularValues();
        PencilResult out;
        out.singular_values.assign(sv.data(), sv.data() + sv.size());
        require(sv[0] > 0.0, ErrorKind::estimation, "tail samples are identically zero");

        const double mid = sv[sv.size() / 2];
        if (sv[0] < 10.0 * mid)
            fail(ErrorKind::estimation, "tail is dominated by noise: flat singular-value spectrum");

        double floor = opt.sv_threshold * sv[0];
        if (opt.noise_sigma > 0.0)
            floor = std::max(floor, 3.0 * opt.noise_sigma * std::sqrt(static_cast<double>(rows)));
        int order = 0;
        while (order < sv.size() && sv[order] > floor)
            ++order;
        order = std::min(order, cols - 1);
        require(order >= 1, ErrorKind::estimation, "no singular value above the noise floor");
        out.order = static_cast<std::size_t>(order);

        const Eigen::MatrixXd v = svd.matrixV().leftCols(order);
        const Eigen::MatrixXd v1 = v.topRows(cols);
        const Eigen::MatrixXd v2 = v.bottomRows(cols);
        const Eigen::MatrixXd shift = v1.completeOrthogonalDecomposition().solve(v2);
        Eigen::EigenSolver<Eigen::MatrixXd> es(shift.transpose());
        std::vector<cplx> z(static_cast<std::size_t>(order));
        for (int j = 0; j < order; ++j)
            z[static_cast<std::size_t>(j)] = es.eigenvalues()[j];

        // amplitudes by complex least squares on the decimated samples
        Eigen::MatrixXcd vand(n, order);
        Eigen::VectorXcd rhs(n);
        for (int i = 0; i < n; ++i)
        {
            rhs[i] = y[static_cast<std::size_t>(i)];
            for (int j = 0; j < order; ++j)
                vand(i, j) = std::pow(z[static_cast<std::size_t>(j)], i);
        }
        const Eigen::VectorXcd amp = vand.colPivHouseholderQr().solve(rhs);
        const double cond = sv[0] / sv[order - 1];

        for (int j = 0; j < order; ++j)
        {
            const cplx zj = z[static_cast<std::size_t>(j)];
            if (std::abs(zj) == 0.0)
                continue;
            const cplx s = std::log(zj) / tau;
            if (!(s.imag() > 1e-9 * std::abs(s)))
                continue;
            PoleEstimate p;
            p.location = s;
            // amplitude referred to t = 0: c e^{s (t - t0)} = (c e^{-s t0}) e^{s t}
            p.residue = amp[j] * std::exp(-s * t0);
            p.method = PoleEstimate::Method::data_pencil;
            p.condition = cond;
            out.poles.push_back(p);
        }
        // rank by energy over the fitted window
        const double span = tau * static_cast<double>(n - 1);
        auto energy = [&](const PoleEstimate& p) {
            const double re = p.location.real();
            const double a0 = std::norm(p.residue * std::exp(p.location * t0));
            return std::abs(re) < 1e-12 ? a0 * span : a0 * std::expm1(2.0 * re * span) / (2.0 * re);
        };
        std::sort(out.poles.begin(), out.poles.end(),
                  [&](const PoleEstimate& a, const PoleEstimate& b) { return energy(a) > energy(b); });
        if (out.poles.size() > n_poles)
            out.poles.resize(n_poles);
        return out;
    }
} // namespace fracinv

#endif
