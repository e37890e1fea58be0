// fracinv: synth | forward | poles | invert | verify | roundtrip

#include <fracinv/forward.hpp>
#include <fracinv/inversion.hpp>
#include <fracinv/io.hpp>
#include <fracinv/laplace.hpp>
#include <fracinv/spectrum.hpp>
#include <fracinv/verifier.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <random>

namespace fs = std::filesystem;
using namespace fracinv;

namespace
{
    enum Exit
    {
        ok = 0,
        config_error = 2,
        stage_error = 3,
        tolerance_breach = 4
    };

    struct Options
    {
        std::string config = "two-term";
        std::string out = "out";
        std::string trace;
        bool strict = false;
        std::optional<long> seed;
        std::vector<std::string> tol_override;
        std::optional<double> truncate;
    };

    ExperimentConfig load(const Options& o)
    {
        ExperimentConfig cfg = load_config(o.config);
        if (o.seed)
            cfg.seed = static_cast<std::uint64_t>(*o.seed);
        for (const std::string& kv : o.tol_override)
        {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                fail(ErrorKind::config, "--tol-override expects KEY=VAL, got '" + kv + "'");
            const std::string key = kv.substr(0, eq);
            if (!cfg.tolerances.values.contains(key))
                fail(ErrorKind::config, "--tol-override: unknown tolerance '" + key + "'");
            try
            {
                cfg.tolerances.values[key] = std::stod(kv.substr(eq + 1));
            }
            catch (const std::exception&)
            {
                fail(ErrorKind::config, "--tol-override: bad value in '" + kv + "'");
            }
        }
        return cfg;
    }

    void write_json(const fs::path& path, const json& j)
    {
        write_text(path.string(), j.dump(2) + "\n");
    }

    json truth_record(const Experiment& ex)
    {
        const ProblemSpec& ps = ex.cfg.problem;
        json terms = json::array();
        for (const OperatorTerm& t : ps.terms)
            terms.push_back({{"b", t.b}, {"beta", t.beta}, {"b_over_a", t.b / ps.a}});
        return {{"a", ps.a},
                {"alpha", ps.alpha},
                {"terms", terms},
                {"m", ps.terms.size()},
                {"T_seconds", ps.T},
                {"T_obs_seconds", ps.T_obs},
                {"n", ex.cfg.source.n},
                {"K_max", ex.cfg.K_max},
                {"groups", ex.spec.group_count()},
                {"seed", ex.cfg.seed},
                {"fixture", ex.cfg.fixture}};
    }

    int cmd_synth(const Experiment& ex, const fs::path& out)
    {
        fs::create_directories(out);
        const ExperimentConfig& c = ex.cfg;
        auto at = [](const std::vector<double>& v, std::size_t k) { return k < v.size() ? v[k] : 0.0; };
        std::string modes = "k,lambda,gamma,phi,psi,f,z_nonzero\n";
        for (std::size_t k = 0; k < ex.spec.size(); ++k)
            modes += std::to_string(k + 1) + "," + format_double(ex.spec.lambdas[k]) + "," +
                     format_double(ex.gammas[k]) + "," + format_double(at(c.initial.phi, k)) + "," +
                     format_double(at(c.initial.psi, k)) + "," + format_double(c.source.f_at(k)) + "," +
                     (c.source.z_is_zero(k) ? "0" : "1") + "\n";
        write_text((out / "modes.csv").string(), modes);
        std::string g = "t,g\n";
        for (std::size_t i = 0; i <= ex.grid.source_steps; ++i)
            g += format_double(ex.grid.t(i)) + "," + format_double(c.source.g(ex.grid.t(i))) + "\n";
        write_text((out / "g.csv").string(), g);
        write_json(out / "truth.json", truth_record(ex));
        return ok;
    }

    struct ForwardRun
    {
        TraceFile file;
        bool truncation_warning = false;
        double tail_estimate = 0.0;
    };

    ForwardRun run_forward(const Experiment& ex)
    {
        const ExperimentConfig& c = ex.cfg;
        const ForwardResult fr = run_stage("forward", [&] { return ex.forward(); });
        ForwardRun run;
        run.file.trace = fr.observed.trace;
        run.truncation_warning = fr.observed.truncation_warning;
        run.tail_estimate = fr.observed.tail_estimate;
        if (c.noise_sigma > 0.0)
        {
            std::mt19937_64 rng(c.seed);
            std::normal_distribution<double> nd(0.0, c.noise_sigma);
            for (double& v : run.file.trace.values)
                v += nd(rng);
        }
        run.file.metadata = {{"dt_seconds", format_double(c.dt)},
                             {"T_seconds", format_double(c.problem.T)},
                             {"T_obs_seconds", format_double(c.problem.T_obs)},
                             {"K_max", std::to_string(c.K_max)},
                             {"noise_sigma", format_double(c.noise_sigma)},
                             {"seed", std::to_string(c.seed)},
                             {"tail_estimate", format_double(run.tail_estimate)}};
        return run;
    }

    TraceFile obtain_trace(const Experiment& ex, const Options& o, const fs::path& out)
    {
        if (!o.trace.empty())
            return read_trace_csv(o.trace);
        if (fs::exists(out / "trace.csv"))
            return read_trace_csv((out / "trace.csv").string());
        return run_forward(ex).file;
    }

    void truncate(TraceFile& f, std::optional<double> until)
    {
        if (!until)
            return;
        const auto keep = static_cast<std::size_t>(std::floor(*until / f.trace.dt + 1e-9)) + 1;
        if (keep < f.trace.values.size())
            f.trace.values.resize(keep);
    }

    json pole_json(const PoleEstimate& p)
    {
        return {{"re", p.location.real()},
                {"im", p.location.imag()},
                {"residue_re", p.residue.real()},
                {"residue_im", p.residue.imag()},
                {"group", p.group_index >= 0 ? json(p.group_index + 1) : json(nullptr)},
                {"method", to_string(p.method)},
                {"condition", p.condition}};
    }

    int cmd_forward(const Experiment& ex, const Options& o, const fs::path& out)
    {
        fs::create_directories(out);
        ForwardRun run = run_forward(ex);
        write_text((out / "trace.csv").string(), trace_csv(run.file));
        if (run.truncation_warning)
        {
            std::cerr << "warning: modal truncation tail " << run.tail_estimate << " exceeds tail_tol\n";
            if (o.strict)
                return stage_error;
        }
        return ok;
    }

    int cmd_poles(const Experiment& ex, const Options& o, const fs::path& out)
    {
        fs::create_directories(out);
        TraceFile tf = obtain_trace(ex, o, out);
        truncate(tf, o.truncate);
        const ExperimentConfig& c = ex.cfg;
        json rep;
        const PencilResult pr = run_stage("poles", [&] {
            const double T = c.problem.T;
            const double horizon = tf.trace.horizon();
            require(horizon > T + 4.0 * tf.trace.dt, ErrorKind::sampling, "trace has no samples after the source support");
            PencilOptions po;
            po.noise_sigma = c.noise_sigma;
            return find_poles_data(tf.trace, T + c.inversion.tail_offset * (horizon - T), c.inversion.pencil_poles, po);
        });
        rep["data"] = json::array();
        for (const PoleEstimate& p : pr.poles)
            rep["data"].push_back(pole_json(p));
        rep["pencil_order"] = pr.order;

        const std::vector<double> mu = ex.group_rates();
        const TransferFunction H(c.problem.a, c.problem.alpha, mu, ex.rd, ex.G());
        const std::size_t count = std::min<std::size_t>(5, H.groups());
        const PoleScan scan = run_stage("poles", [&] { return find_poles_model(H, count, default_window(H, count)); });
        rep["model"] = json::array();
        for (const PoleEstimate& p : scan.poles)
            rep["model"].push_back(pole_json(p));
        rep["model_partial"] = scan.partial;
        rep["analytic"] = json::array();
        for (std::size_t l = 0; l < count; ++l)
            rep["analytic"].push_back({{"group", l + 1}, {"re", H.pole(l).real()}, {"im", H.pole(l).imag()}});
        write_json(out / "poles.json", rep);
        return ok;
    }

    double g_error(const GRecovery& g, const TimeSignal& truth)
    {
        double err = 0.0;
        double ref = 0.0;
        for (std::size_t j = 0; j < g.g.size(); ++j)
        {
            const double t = g.dt * static_cast<double>(j);
            err += std::pow(g.g[j] - truth(t), 2);
            ref += std::pow(truth(t), 2);
        }
        return ref > 0.0 ? std::sqrt(err / ref) : std::sqrt(err * g.dt);
    }

    /// Report of the recovered parameters with pass/fail per tolerance; noisy
    /// traces get doubled tolerances.
    json invert_report(const Experiment& ex, const RecoveredModel& m, bool& pass)
    {
        const ExperimentConfig& c = ex.cfg;
        const ProblemSpec& ps = c.problem;
        const double scale = c.noise_sigma > 0.0 ? 2.0 : 1.0;
        auto tol = [&](const char* key) { return scale * c.tolerances[key]; };
        json rep;
        rep["recovered"] = {{"alpha", m.alpha_hat}, {"a", m.a_hat}, {"m", m.m_hat},
                            {"beta", m.beta_hat}, {"b_over_a", m.b_over_a_hat}, {"b", m.b_hat}};
        rep["truth"] = truth_record(ex);
        json checks = json::object();
        pass = true;
        auto check = [&](const std::string& name, double err, double t) {
            const bool good = std::isfinite(err) && err <= t;
            checks[name] = {{"error", err}, {"tolerance", t}, {"pass", good}};
            pass = pass && good;
        };
        check("alpha", std::abs(m.alpha_hat - ps.alpha), tol("alpha"));
        const bool m_ok = static_cast<std::size_t>(m.m_hat) == ps.terms.size();
        checks["m"] = {{"recovered", m.m_hat}, {"expected", ps.terms.size()}, {"pass", m_ok}};
        pass = pass && m_ok;
        if (m_ok)
            for (std::size_t j = 0; j < ps.terms.size(); ++j)
            {
                check("beta_" + std::to_string(j + 1), std::abs(m.beta_hat[j] - ps.terms[j].beta), tol("beta"));
                const double ba = ps.terms[j].b / ps.a;
                check("b_over_a_" + std::to_string(j + 1), std::abs(m.b_over_a_hat[j] - ba) / ba, tol("b_over_a"));
            }
        check("a", std::abs(m.a_hat - ps.a) / ps.a, tol("a"));
        if (!m.g_hat.g.empty())
            check("g", g_error(m.g_hat, c.source.g), tol("g"));
        rep["checks"] = checks;
        rep["pass"] = pass;
        rep["diagnostics"] = m.diagnostics;
        rep["warnings"] = m.warnings;
        rep["poles"] = json::array();
        for (const PoleEstimate& p : m.poles)
            rep["poles"].push_back(pole_json(p));
        std::string g = "t,g\n";
        for (std::size_t j = 0; j < m.g_hat.g.size(); ++j)
            g += format_double(m.g_hat.dt * static_cast<double>(j)) + "," + format_double(m.g_hat.g[j]) + "\n";
        rep["g_csv"] = "g_hat.csv";
        rep["g_lambda"] = m.g_hat.lambda;
        rep["_g_text"] = g;
        return rep;
    }

    int cmd_invert(const Experiment& ex, const Options& o, const fs::path& out)
    {
        fs::create_directories(out);
        TraceFile tf = obtain_trace(ex, o, out);
        truncate(tf, o.truncate);
        InversionOptions opt = ex.cfg.inversion;
        opt.noise_sigma = ex.cfg.noise_sigma;
        const RecoveredModel m = invert_full(tf.trace, ex.rd, ex.spec.distinct_lambdas(), opt);
        bool pass = false;
        json rep = invert_report(ex, m, pass);
        write_text((out / "g_hat.csv").string(), rep["_g_text"].get<std::string>());
        rep.erase("_g_text");
        write_json(out / "invert.json", rep);
        return pass ? ok : tolerance_breach;
    }

    json verify_report(const Experiment& ex, bool& all_ok)
    {
        const ExperimentConfig& c = ex.cfg;
        const int n = c.source.n;
        const HypothesisReport hr = run_stage("verify", [&] {
            return check_conditions(ex.gammas, c.initial, c.source, ex.rd, n, c.l1);
        });
        json rep;
        json summ = json::array();
        for (const SummabilityDiagnostic& s : hr.summability)
            summ.push_back({{"name", s.name},
                            {"partial_sum", s.partial_sum},
                            {"decay_exponent", s.decay_exponent},
                            {"looks_summable", s.looks_summable}});
        rep["summability"] = summ;
        rep["uniI0_ok"] = hr.uniI0_ok;
        rep["smooth_vanish_ok"] = hr.smooth_vanish_ok;
        rep["g_vanish_ok"] = hr.g_vanish_ok;
        rep["c_dagger"] = std::isfinite(hr.c_dagger) ? json(hr.c_dagger) : json("inf");
        rep["nd_flags"] = {{"f", hr.f_nd}, {"z", hr.z_nd}};
        const std::vector<double> mu = ex.group_rates();
        const NondegeneracyResult nd =
            check_nondegeneracy(c.problem.alpha, mu, ex.rd, c.problem.a, ex.G(), 1e-12, ex.G_scaled());
        rep["nondegeneracy_ok"] = nd.ok;
        all_ok = true;
        if (c.bounds)
        {
            const double C0 = compute_C0(*c.bounds, n, c.problem.T, ex.spec.distinct_lambda(0));
            rep["C0"] = C0;
            const GkitsResult gk = check_gkits(ex.rd, c.source.g, n, C0);
            rep["gkits_applicable"] = gk.applicable;
            rep["gkits_ok"] = gk.ok;
            rep["gkits_margin"] = gk.margin;
            for (std::size_t l = 0; l < gk.ok.size(); ++l)
                if (gk.applicable[l])
                    all_ok = all_ok && gk.ok[l] && nd.ok[l];
        }
        for (std::size_t l = 0; l < hr.smooth_vanish_ok.size(); ++l)
            all_ok = all_ok && hr.smooth_vanish_ok[l];
        rep["all_ok"] = all_ok;
        rep["warnings"] = hr.warnings;
        return rep;
    }

    int cmd_verify(const Experiment& ex, const fs::path& out)
    {
        fs::create_directories(out);
        bool all_ok = false;
        write_json(out / "verify.json", verify_report(ex, all_ok));
        return ok;
    }

    int cmd_roundtrip(const Experiment& ex, const Options& o, const fs::path& out)
    {
        fs::create_directories(out);
        cmd_synth(ex, out);
        ForwardRun run = run_forward(ex);
        write_text((out / "trace.csv").string(), trace_csv(run.file));
        if (run.truncation_warning && o.strict)
            fail(ErrorKind::truncation, "modal truncation tail exceeds tail_tol");
        truncate(run.file, o.truncate);
        InversionOptions opt = ex.cfg.inversion;
        opt.noise_sigma = ex.cfg.noise_sigma;
        const RecoveredModel m = invert_full(run.file.trace, ex.rd, ex.spec.distinct_lambdas(), opt);
        bool pass = false;
        json rep = invert_report(ex, m, pass);
        write_text((out / "g_hat.csv").string(), rep["_g_text"].get<std::string>());
        rep.erase("_g_text");
        bool verify_ok = false;
        rep["verify"] = verify_report(ex, verify_ok);
        rep["forward"] = {{"tail_estimate", run.tail_estimate}, {"truncation_warning", run.truncation_warning}};
        write_json(out / "roundtrip.json", rep);
        return pass ? ok : tolerance_breach;
    }

    void report_error(const Error& e, const fs::path& out)
    {
        std::cerr << "error";
        if (!e.stage().empty())
            std::cerr << " [stage " << e.stage() << "]";
        std::cerr << " (" << to_string(e.kind()) << "): " << e.what() << "\n";
        std::error_code ec;
        if (fs::create_directories(out, ec) || fs::is_directory(out))
        {
            try
            {
                write_json(out / "error.json",
                           {{"stage", e.stage()}, {"kind", to_string(e.kind())}, {"message", e.what()}});
            }
            catch (const Error&)
            {
            }
        }
    }
} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Forward and inverse solver for multiterm superdiffusion time traces"};
    app.require_subcommand(1);
    Options o;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "config JSON file or fixture name")->capture_default_str();
        sub->add_option("--out", o.out, "output directory")->capture_default_str();
        sub->add_flag("--strict", o.strict, "treat truncation warnings as errors");
        sub->add_option("--seed", o.seed, "noise seed");
        sub->add_option("--tol-override", o.tol_override, "KEY=VAL tolerance override")->take_all();
    };
    auto* synth = app.add_subcommand("synth", "write fixture files");
    auto* forward = app.add_subcommand("forward", "simulate the observed trace");
    auto* poles = app.add_subcommand("poles", "estimate poles from data and model");
    auto* invert = app.add_subcommand("invert", "recover parameters and g from a trace");
    auto* verify = app.add_subcommand("verify", "check the uniqueness hypotheses");
    auto* roundtrip = app.add_subcommand("roundtrip", "synth, forward, invert and verify");
    for (CLI::App* s : {synth, forward, poles, invert, verify, roundtrip})
        common(s);
    for (CLI::App* s : {poles, invert})
        s->add_option("--trace", o.trace, "trace CSV (default OUT/trace.csv or a fresh forward run)");
    for (CLI::App* s : {poles, invert, roundtrip})
        s->add_option("--truncate-seconds", o.truncate, "drop trace samples after this time");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    const fs::path out(o.out);
    try
    {
        const Experiment ex(load(o));
        if (*synth)
            return cmd_synth(ex, out);
        if (*forward)
            return cmd_forward(ex, o, out);
        if (*poles)
            return cmd_poles(ex, o, out);
        if (*invert)
            return cmd_invert(ex, o, out);
        if (*verify)
            return cmd_verify(ex, out);
        return cmd_roundtrip(ex, o, out);
    }
    catch (const Error& e)
    {
        report_error(e, out);
        return e.kind() == ErrorKind::config ? config_error : stage_error;
    }
}
