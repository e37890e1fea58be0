#ifndef FRACINV_IO_HPP
#define FRACINV_IO_HPP

// Experiment configuration (JSON), built-in fixtures and the trace CSV format.

#include "errors.hpp"
#include "forward.hpp"
#include "inversion.hpp"
#include "signal.hpp"
#include "spectrum.hpp"
#include "verifier.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fracinv
{
    using json = nlohmann::json;

    struct Tolerances
    {
        std::map<std::string, double> values{
            {"alpha", 1e-3}, {"beta", 1e-2}, {"b_over_a", 1e-2}, {"a", 5e-2}, {"g", 5e-2}};

        double operator[](const std::string& key) const { return values.at(key); }
    };

    struct ExperimentConfig
    {
        json raw;
        std::string fixture;
        ProblemSpec problem;
        std::size_t K_max = 200;
        std::size_t L_max = 64;
        InitialData initial;
        SourceSpec source;
        ObservationSpec observation;
        std::string observation_kind = "point";
        double dt = 1e-3;
        double tail_tol = 1e-10;
        double noise_sigma = 0.0;
        std::uint64_t seed = 1;
        Tolerances tolerances;
        InversionOptions inversion;
        std::optional<Bounds> bounds;
        std::size_t l1 = 1;
    };

    namespace detail
    {
        [[noreturn]] inline void config_error(const std::string& path, const std::string& what)
        {
            fail(ErrorKind::config, "config " + (path.empty() ? std::string("/") : path) + ": " + what);
        }

        inline const json& field(const json& obj, const std::string& key, const std::string& path)
        {
            if (!obj.is_object() || !obj.contains(key))
                config_error(path + "/" + key, "missing field");
            return obj.at(key);
        }

        inline double number(const json& v, const std::string& path)
        {
            if (!v.is_number())
                config_error(path, "expected a number");
            const double x = v.get<double>();
            if (!std::isfinite(x))
                config_error(path, "expected a finite number");
            return x;
        }

        inline double number_or(const json& obj, const std::string& key, double fallback, const std::string& path)
        {
            if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null())
                return fallback;
            return number(obj.at(key), path + "/" + key);
        }

        inline long integer(const json& v, const std::string& path)
        {
            if (!v.is_number_integer())
                config_error(path, "expected an integer");
            return v.get<long>();
        }

        inline long integer_or(const json& obj, const std::string& key, long fallback, const std::string& path)
        {
            if (!obj.is_object() || !obj.contains(key))
                return fallback;
            return integer(obj.at(key), path + "/" + key);
        }

        inline std::string text(const json& v, const std::string& path)
        {
            if (!v.is_string())
                config_error(path, "expected a string");
            return v.get<std::string>();
        }

        /// {"values": [...]} | {"constant": c, "count": n} | {"power": {"scale", "exponent", "count"}}
        inline std::vector<double> coefficients(const json& v, const std::string& path)
        {
            if (v.is_null())
                return {};
            if (v.is_array())
            {
                std::vector<double> out;
                for (std::size_t i = 0; i < v.size(); ++i)
                    out.push_back(number(v[i], path + "/" + std::to_string(i)));
                return out;
            }
            if (!v.is_object())
                config_error(path, "expected coefficients");
            if (v.contains("values"))
                return coefficients(v.at("values"), path + "/values");
            if (v.contains("constant"))
            {
                const double c = number(v.at("constant"), path + "/constant");
                const long n = integer(field(v, "count", path), path + "/count");
                if (n < 0)
                    config_error(path + "/count", "must be nonnegative");
                return std::vector<double>(static_cast<std::size_t>(n), c);
            }
            if (v.contains("power"))
            {
                const json& p = v.at("power");
                const std::string pp = path + "/power";
                const double scale = number(field(p, "scale", pp), pp + "/scale");
                const double expo = number(field(p, "exponent", pp), pp + "/exponent");
                const long n = integer(field(p, "count", pp), pp + "/count");
                std::vector<double> out;
                for (long k = 1; k <= n; ++k)
                    out.push_back(scale * std::pow(static_cast<double>(k), -expo));
                return out;
            }
            config_error(path, "unknown coefficient form");
        }

        inline std::vector<std::vector<double>> read_columns(const std::string& file, std::size_t columns);

        /// {"kind": "zero" | "bump" | "polynomial" | "samples", ...}
        inline TimeSignal signal(const json& v, double T, const std::string& path)
        {
            if (v.is_null())
                return TimeSignal::zero(T);
            const std::string kind = text(field(v, "kind", path), path + "/kind");
            if (kind == "zero")
                return TimeSignal::zero(T);
            if (kind == "bump")
            {
                const double scale = number(field(v, "scale", path), path + "/scale");
                const long p = integer(field(v, "p", path), path + "/p");
                const long q = integer(field(v, "q", path), path + "/q");
                if (p < 0 || q < 0)
                    config_error(path, "bump powers must be nonnegative");
                return TimeSignal::polynomial(Polynomial::bump(scale, static_cast<int>(p), static_cast<int>(q), T), T);
            }
            if (kind == "polynomial")
                return TimeSignal::polynomial(Polynomial(coefficients(field(v, "coefficients", path),
                                                                      path + "/coefficients")),
                                              T);
            if (kind == "samples")
            {
                const std::string file = text(field(v, "file", path), path + "/file");
                std::vector<std::vector<double>> cols;
                try
                {
                    cols = read_columns(file, 2);
                }
                catch (const Error& e)
                {
                    config_error(path + "/file", e.what());
                }
                if (cols[0].size() < 2 || std::abs(cols[0].back() - T) > 1e-9 * T)
                    config_error(path + "/file", "samples must cover [0, T] on a uniform grid");
                return TimeSignal::sampled(cols[1], T);
            }
            config_error(path + "/kind", "unknown signal kind '" + kind + "'");
        }

        inline std::vector<std::vector<double>> read_columns(const std::string& file, std::size_t columns)
        {
            std::ifstream in(file);
            if (!in)
                fail(ErrorKind::io, "cannot open " + file);
            std::vector<std::vector<double>> cols(columns);
            std::string line;
            bool header_seen = false;
            while (std::getline(in, line))
            {
                if (line.empty() || line[0] == '#')
                    continue;
                if (!header_seen && !(std::isdigit(static_cast<unsigned char>(line[0])) || line[0] == '-' ||
                                      line[0] == '+' || line[0] == '.'))
                {
                    header_seen = true;
                    continue;
                }
                std::stringstream ss(line);
                std::string cell;
                for (std::size_t c = 0; c < columns; ++c)
                {
                    if (!std::getline(ss, cell, ','))
                        fail(ErrorKind::io, file + ": expected " + std::to_string(columns) + " columns");
                    cols[c].push_back(std::stod(cell));
                }
            }
            return cols;
        }
    } // namespace detail

    /// Named fixtures; a config may start from one via "fixture" and override fields.
    inline json preset(const std::string& name)
    {
        json base = {
            {"problem",
             {{"a", 0.7},
              {"alpha", 1.4},
              {"terms", json::array({{{"b", 1.0}, {"beta", 0.8}}, {{"b", 0.5}, {"beta", 0.3}}})},
              {"domain", {{"kind", "interval"}, {"x1_length", 1.0}}},
              {"T_seconds", 1.0},
              {"T_obs_seconds", 3.0}}},
            {"observation", {{"kind", "point"}, {"x0", 0.27}, {"y0", 0.0}}},
            {"numerics", {{"dt_seconds", 1e-3}, {"K_max", 200}, {"L_max", 64}, {"tail_tol", 1e-10}}},
            {"seed", 1}};
        json z = json::array();
        for (int k = 1; k <= 3; ++k)
            z.push_back({{"mode", k}, {"kind", "bump"}, {"scale", std::pow(k, 1.6)}, {"p", k}, {"q", 1}});
        const json two_term_source = {{"n", 2},
                                      {"g", {{"kind", "bump"}, {"scale", 16.0}, {"p", 2}, {"q", 2}}},
                                      {"f", {{"values", {1.0}}}},
                                      {"z", z}};
        const json two_term_initial = {{"phi", {{"constant", 0.5}, {"count", 20}}},
                                       {"psi", {{"values", {0.0, 0.1}}}}};
        if (name == "two-term")
        {
            base["initial"] = two_term_initial;
            base["source"] = two_term_source;
            return base;
        }
        if (name == "single-term")
        {
            base["problem"]["terms"] = json::array({{{"b", 1.0}, {"beta", 0.8}}});
            base["initial"] = two_term_initial;
            base["source"] = two_term_source;
            return base;
        }
        if (name == "zero-source")
        {
            base["initial"] = two_term_initial;
            base["source"] = {{"n", 2}, {"g", {{"kind", "zero"}}}, {"f", {{"values", json::array()}}}, {"z", json::array()}};
            return base;
        }
        if (name == "gkits")
        {
            // n = 1, z_l = t / T on modes 1..8: |z_l(T)| dominates sup|z_l'| once T is large
            json zz = json::array();
            for (int k = 1; k <= 8; ++k)
                zz.push_back({{"mode", k}, {"kind", "bump"}, {"scale", 1.0 / 40.0}, {"p", 1}, {"q", 0}});
            base["problem"]["T_seconds"] = 40.0;
            base["problem"]["T_obs_seconds"] = 44.0;
            base["numerics"]["dt_seconds"] = 1e-2;
            base["numerics"]["K_max"] = 20;
            base["initial"] = {{"phi", {{"values", json::array()}}}, {"psi", {{"values", json::array()}}}};
            base["source"] = {{"n", 1}, {"g", {{"kind", "zero"}}}, {"f", {{"values", json::array()}}}, {"z", zz}};
            base["verify"] = {{"bounds",
                               {{"b_low", 0.5},
                                {"a_high", 1.0},
                                {"alpha_low", 1.3},
                                {"alpha_high", 1.5},
                                {"beta_low", 0.3}}}};
            return base;
        }
        fail(ErrorKind::config, "config /fixture: unknown fixture '" + name + "'");
    }

    inline ExperimentConfig parse_config(json raw)
    {
        using namespace detail;
        if (!raw.is_object())
            config_error("", "expected a JSON object");
        ExperimentConfig cfg;
        if (raw.contains("fixture"))
        {
            cfg.fixture = text(raw.at("fixture"), "/fixture");
            json merged = preset(cfg.fixture);
            json patch = raw;
            patch.erase("fixture");
            merged.merge_patch(patch);
            merged["fixture"] = cfg.fixture;
            raw = std::move(merged);
        }
        cfg.raw = raw;

        const json& pr = field(raw, "problem", "");
        ProblemSpec& ps = cfg.problem;
        ps.a = number(field(pr, "a", "/problem"), "/problem/a");
        ps.alpha = number(field(pr, "alpha", "/problem"), "/problem/alpha");
        if (!(ps.alpha > 1.0 && ps.alpha < 2.0))
            config_error("/problem/alpha", "must lie in (1,2)");
        if (!(ps.a > 0.0))
            config_error("/problem/a", "must be positive");
        const json& terms = field(pr, "terms", "/problem");
        if (!terms.is_array() || terms.empty())
            config_error("/problem/terms", "expected a nonempty array");
        ps.terms.clear();
        for (std::size_t j = 0; j < terms.size(); ++j)
        {
            const std::string p = "/problem/terms/" + std::to_string(j);
            ps.terms.push_back({number(field(terms[j], "b", p), p + "/b"), number(field(terms[j], "beta", p), p + "/beta")});
        }
        const json& dom = field(pr, "domain", "/problem");
        const std::string dk = text(field(dom, "kind", "/problem/domain"), "/problem/domain/kind");
        if (dk == "interval")
            ps.domain = DomainSpec::interval(number(field(dom, "x1_length", "/problem/domain"), "/problem/domain/x1_length"));
        else if (dk == "rectangle")
            ps.domain = DomainSpec::rectangle(
                number(field(dom, "x1_length", "/problem/domain"), "/problem/domain/x1_length"),
                number(field(dom, "x2_length", "/problem/domain"), "/problem/domain/x2_length"));
        else
            config_error("/problem/domain/kind", "unknown domain '" + dk + "'");
        ps.T = number(field(pr, "T_seconds", "/problem"), "/problem/T_seconds");
        ps.T_obs = number(field(pr, "T_obs_seconds", "/problem"), "/problem/T_obs_seconds");
        try
        {
            ps.validate();
        }
        catch (const Error& e)
        {
            config_error("/problem", e.what());
        }

        const json num = raw.value("numerics", json::object());
        cfg.dt = number_or(num, "dt_seconds", cfg.dt, "/numerics");
        if (!(cfg.dt > 0.0))
            config_error("/numerics/dt_seconds", "must be positive");
        const long kmax = integer_or(num, "K_max", 200, "/numerics");
        const long lmax = integer_or(num, "L_max", 64, "/numerics");
        if (kmax < 1 || lmax < 1)
            config_error("/numerics", "K_max and L_max must be positive");
        cfg.K_max = static_cast<std::size_t>(kmax);
        cfg.L_max = static_cast<std::size_t>(lmax);
        cfg.tail_tol = number_or(num, "tail_tol", cfg.tail_tol, "/numerics");
        cfg.noise_sigma = number_or(num, "noise_sigma", 0.0, "/numerics");
        if (cfg.noise_sigma < 0.0)
            config_error("/numerics/noise_sigma", "must be nonnegative");
        InversionOptions& io = cfg.inversion;
        io.fit.max_groups = cfg.L_max;
        io.fit.g_basis = static_cast<int>(integer_or(num, "g_basis", io.fit.g_basis, "/numerics"));
        io.fit.parametric_terms =
            static_cast<int>(integer_or(num, "parametric_terms", io.fit.parametric_terms, "/numerics"));
        io.decompose.max_m = static_cast<int>(integer_or(num, "max_m", io.decompose.max_m, "/numerics"));
        io.decompose.tol = number_or(num, "decompose_tol", io.decompose.tol, "/numerics");
        if (num.contains("regularization"))
        {
            const json& rg = num.at("regularization");
            if (rg.contains("lambda") && !rg.at("lambda").is_null())
                io.reg.lambda = number(rg.at("lambda"), "/numerics/regularization/lambda");
            io.reg.tau = number_or(rg, "tau", io.reg.tau, "/numerics/regularization");
        }

        const json init = raw.value("initial", json::object());
        cfg.initial.phi = coefficients(init.value("phi", json()), "/initial/phi");
        cfg.initial.psi = coefficients(init.value("psi", json()), "/initial/psi");

        const json src = raw.value("source", json::object());
        cfg.source.n = static_cast<int>(integer_or(src, "n", 1, "/source"));
        if (cfg.source.n < 1)
            config_error("/source/n", "must be at least 1");
        cfg.source.g = signal(src.value("g", json()), ps.T, "/source/g");
        cfg.source.f = coefficients(src.value("f", json()), "/source/f");
        const json zs = src.value("z", json::array());
        if (!zs.is_array())
            config_error("/source/z", "expected an array");
        for (std::size_t i = 0; i < zs.size(); ++i)
        {
            const std::string p = "/source/z/" + std::to_string(i);
            const long mode = integer(field(zs[i], "mode", p), p + "/mode");
            if (mode < 1 || static_cast<std::size_t>(mode) > cfg.K_max)
                config_error(p + "/mode", "mode index must lie in 1..K_max");
            const auto k = static_cast<std::size_t>(mode - 1);
            if (cfg.source.z.size() <= k)
                cfg.source.z.resize(k + 1, TimeSignal::zero(ps.T));
            cfg.source.z[k] = signal(zs[i], ps.T, p);
        }

        const json ob = raw.value("observation", json{{"kind", "point"}});
        cfg.observation_kind = text(field(ob, "kind", "/observation"), "/observation/kind");
        if (cfg.observation_kind == "point")
            cfg.observation = PointObservation{number_or(ob, "x0", 0.5, "/observation"), number_or(ob, "y0", 0.0, "/observation")};
        else if (cfg.observation_kind == "integral")
        {
            const double lo = number_or(ob, "from", 0.0, "/observation");
            const double hi = number_or(ob, "to", ps.domain.x1, "/observation");
            cfg.observation = IntegralObservation{[lo, hi](double x, double) { return x >= lo && x <= hi ? 1.0 : 0.0; }};
        }
        else if (cfg.observation_kind == "boundary")
            cfg.observation = BoundaryObservation{ob.value("left", true), ob.value("right", false),
                                                  ob.value("bottom", false), ob.value("top", false)};
        else
            config_error("/observation/kind", "unknown observation '" + cfg.observation_kind + "'");

        if (raw.contains("seed"))
        {
            const long s = integer(raw.at("seed"), "/seed");
            cfg.seed = static_cast<std::uint64_t>(s);
        }
        if (raw.contains("tolerances"))
            for (const auto& [k, v] : raw.at("tolerances").items())
                cfg.tolerances.values[k] = number(v, "/tolerances/" + k);
        if (raw.contains("verify"))
        {
            const json& vf = raw.at("verify");
            cfg.l1 = static_cast<std::size_t>(integer_or(vf, "l1", 1, "/verify"));
            if (vf.contains("bounds"))
            {
                const json& b = vf.at("bounds");
                const std::string p = "/verify/bounds";
                Bounds bd;
                bd.b_low = number(field(b, "b_low", p), p + "/b_low");
                bd.a_high = number(field(b, "a_high", p), p + "/a_high");
                bd.alpha_low = number(field(b, "alpha_low", p), p + "/alpha_low");
                bd.alpha_high = number(field(b, "alpha_high", p), p + "/alpha_high");
                bd.beta_low = number(field(b, "beta_low", p), p + "/beta_low");
                cfg.bounds = bd;
            }
        }
        return cfg;
    }

    inline ExperimentConfig load_config(const std::string& path)
    {
        std::ifstream in(path);
        if (!in)
        {
            // bare fixture names are accepted in place of a file
            try
            {
                return parse_config(json{{"fixture", path}});
            }
            catch (const Error&)
            {
                fail(ErrorKind::config, "config: cannot open " + path);
            }
        }
        json raw;
        try
        {
            raw = json::parse(in);
        }
        catch (const json::parse_error& e)
        {
            fail(ErrorKind::config, std::string("config: malformed JSON: ") + e.what());
        }
        return parse_config(std::move(raw));
    }

    /// Spectrum, observation weights, reduced data and time grid of a config.
    struct Experiment
    {
        ExperimentConfig cfg;
        Spectrum spec;
        std::vector<double> gammas;
        ReducedData rd;
        TimeGrid grid;

        explicit Experiment(ExperimentConfig c) : cfg(std::move(c))
        {
            const ProblemSpec& ps = cfg.problem;
            spec = make_spectrum(ps.domain, cfg.K_max);
            gammas = observation_weights(cfg.observation, ps.domain, spec).gammas;
            rd = reduce_data(gammas, cfg.initial, cfg.source, spec, ps.T);
            grid = TimeGrid::make(cfg.dt, ps.T, ps.T_obs);
        }

        std::function<cplx(cplx)> G() const
        {
            const TimeSignal g = cfg.source.g;
            if (g.is_zero())
                return {};
            return [g](cplx s) { return g.laplace(s); };
        }

        std::function<cplx(cplx)> G_scaled() const
        {
            const TimeSignal g = cfg.source.g;
            if (g.is_zero())
                return {};
            return [g](cplx s) {
                double shift = 0.0;
                return g.laplace_scaled(s, shift);
            };
        }

        /// Rate of the first mode of each group.
        std::vector<double> group_rates() const
        {
            const std::vector<double> mu = mode_rates(cfg.problem, spec);
            std::vector<double> out(spec.group_count());
            for (std::size_t l = 0; l < out.size(); ++l)
                out[l] = mu[spec.groups[l].begin];
            return out;
        }

        ForwardResult forward() const
        {
            return solve_forward(cfg.problem, spec, gammas, cfg.initial, cfg.source, grid, cfg.tail_tol);
        }
    };

    // ------------------------------------------------------------------
    // Trace CSV

    inline std::string format_double(double v)
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

    struct TraceFile
    {
        TimeTrace trace;
        /// '#'-prefixed "key=value" header lines in file order.
        std::vector<std::pair<std::string, std::string>> metadata;
    };

    inline std::string trace_csv(const TraceFile& f)
    {
        std::string out;
        for (const auto& [k, v] : f.metadata)
            out += "# " + k + "=" + v + "\n";
        out += "t,h\n";
        for (std::size_t i = 0; i < f.trace.values.size(); ++i)
            out += format_double(f.trace.t(i)) + "," + format_double(f.trace.values[i]) + "\n";
        return out;
    }

    inline void write_text(const std::string& path, const std::string& text)
    {
        std::ofstream out(path, std::ios::binary);
        if (!out)
            fail(ErrorKind::io, "cannot write " + path);
        out << text;
    }

    inline TraceFile read_trace_csv(const std::string& path)
    {
        std::ifstream in(path);
        if (!in)
            fail(ErrorKind::io, "cannot open " + path);
        TraceFile f;
        std::string line;
        std::vector<double> t;
        while (std::getline(in, line))
        {
            if (line.empty())
                continue;
            if (line[0] == '#')
            {
                std::string body = line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1);
                const auto eq = body.find('=');
                if (eq != std::string::npos)
                    f.metadata.emplace_back(body.substr(0, eq), body.substr(eq + 1));
                continue;
            }
            if (line == "t,h")
                continue;
            const auto comma = line.find(',');
            if (comma == std::string::npos)
                fail(ErrorKind::io, path + ": malformed line '" + line + "'");
            t.push_back(std::stod(line.substr(0, comma)));
            f.trace.values.push_back(std::stod(line.substr(comma + 1)));
        }
        if (t.size() < 2)
            fail(ErrorKind::io, path + ": trace needs at least two samples");
        f.trace.dt = t[1] - t[0];
        for (const auto& [k, v] : f.metadata)
            if (k == "dt_seconds")
                f.trace.dt = std::stod(v);
        for (std::size_t i = 0; i < t.size(); ++i)
            if (std::abs(t[i] - f.trace.t(i)) > 1e-9 * std::max(1.0, std::abs(t[i])))
                fail(ErrorKind::io, path + ": samples are not on a uniform grid starting at 0");
        return f;
    }
} // namespace fracinv

#endif
