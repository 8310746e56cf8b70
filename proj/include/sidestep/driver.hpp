#ifndef SIDESTEP_DRIVER_HPP
#define SIDESTEP_DRIVER_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sidestep/config.hpp"
#include "sidestep/error.hpp"
#include "sidestep/estimation.hpp"
#include "sidestep/io.hpp"
#include "sidestep/models.hpp"
#include "sidestep/theorem.hpp"

namespace sidestep {

enum exit_code : int {
    exit_ok = 0,
    exit_config = 2,
    exit_numeric = 3,
    exit_missing_input = 4,
    exit_certificate = 5,
};

struct driver_options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    unsigned threads = 1;
};

/// A required input file (config or earlier stage output) is absent.
class missing_input : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Threads from the flag if given (> 0), else SIDESTEP_THREADS, else 1.
inline unsigned resolve_threads(std::optional<unsigned> flag)
{
    if (flag && *flag > 0)
        return *flag;
    if (const char* env = std::getenv("SIDESTEP_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0)
            return static_cast<unsigned>(v);
    }
    return 1;
}

namespace detail {

namespace fs = std::filesystem;

struct context {
    experiment_config cfg;
    fs::path out;
    unsigned threads = 1;
};

inline context load_context(const driver_options& opt)
{
    if (!fs::exists(opt.config_path))
        throw missing_input("config file not found: " + opt.config_path);
    context ctx;
    ctx.cfg = parse_config_text(io::read_file(opt.config_path));
    if (opt.seed)
        ctx.cfg.seed = *opt.seed;
    if (opt.out)
        ctx.cfg.output = *opt.out;
    ctx.out = ctx.cfg.output;
    ctx.threads = std::max(1u, opt.threads);
    return ctx;
}

inline std::string fixed(double x, int digits)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

inline std::string trace_name(const char* stem, long long n) { return std::string(stem) + "_n" + std::to_string(n) + ".csv"; }

inline std::string read_stage_file(const fs::path& path, const char* produced_by)
{
    if (!fs::exists(path))
        throw missing_input("missing " + path.string() + " (run '" + produced_by + "' first)");
    return io::read_file(path.string());
}

inline std::vector<trace_table> load_tables(const context& ctx, const char* stem)
{
    std::vector<trace_table> tables;
    for (long long n : ctx.cfg.model.n_grid) {
        auto t = io::trace_table_from_csv(read_stage_file(ctx.out / trace_name(stem, n), "run"), ctx.cfg.samples);
        if (t.n != n)
            throw missing_input((ctx.out / trace_name(stem, n)).string() + " holds n=" + std::to_string(t.n));
        tables.push_back(std::move(t));
    }
    return tables;
}

inline detection_options detection(const experiment_config& cfg)
{
    detection_options opt;
    opt.max_bases = cfg.pipeline.max_bases;
    return opt;
}

struct analysis {
    expansion_estimate est;
    std::optional<int> j;
    std::vector<detected_base> bases;
};

inline analysis analyze_tables(const experiment_config& cfg, const std::vector<trace_table>& tables)
{
    analysis a;
    a.est = fit_expansion(tables, cfg.pipeline.fit_r);
    const auto opt = detection(cfg);
    a.j = find_smallest_j(a.est, cfg.model.lambda0, cfg.model.lambda1, opt);
    if (a.j)
        a.bases = detect_level(a.est, *a.j, cfg.model.lambda0, cfg.model.lambda1, opt);
    return a;
}

inline std::string points_text(const std::vector<cplx>& points)
{
    std::string s;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (i)
            s += ' ';
        s += io::format_double(points[i].real());
        if (points[i].imag() != 0.0)
            s += (points[i].imag() > 0 ? "+" : "") + io::format_double(points[i].imag()) + "i";
    }
    return s;
}

inline nlohmann::json certificate_json(const certificate& c)
{
    nlohmann::json pts = nlohmann::json::array();
    for (cplx z : c.points)
        pts.push_back({z.real(), z.imag()});
    return {{"kind", c.kind},   {"lhs", c.lhs},     {"rhs", c.rhs},     {"slack", c.slack},
            {"pass", c.pass},   {"n", c.n},         {"k", c.k},         {"D", c.d},
            {"L", pts},         {"theta", c.theta}, {"level", c.level}, {"imag_residue", c.imag_residue},
            {"note", c.note}};
}

// ---- run

inline int run(const context& ctx, std::ostream& log)
{
    const auto& cfg = ctx.cfg;
    fs::create_directories(ctx.out);
    const int k_max = cfg.horizon();
    io::csv_writer summary(
        {"n", "samples", "k_max", "dimension", "persisted_samples", "validated_samples", "violations"});
    for (long long n : cfg.model.n_grid) {
        const auto tables = mc_trace_tables(cfg.model, n, k_max, cfg.samples, cfg.seed, ctx.threads);
        io::write_file((ctx.out / trace_name("trace", n)).string(), io::trace_table_csv(tables.full));
        io::write_file((ctx.out / trace_name("realtrace", n)).string(), io::trace_table_csv(tables.real));

        const std::size_t persisted = std::min(cfg.persist_samples, cfg.samples);
        const std::size_t validated = std::min(cfg.validate_samples, cfg.samples);
        io::csv_writer spectra({"sample_id", "re", "im"});
        std::vector<spectrum_sample> check;
        std::size_t dimension = 0;
        for (std::size_t i = 0; i < std::max(persisted, validated); ++i) {
            auto s = sample_model(cfg.model, n, cfg.seed, i);
            dimension = s.dimension();
            if (i < persisted)
                io::append_spectrum_rows(spectra, i, s);
            if (i < validated)
                check.push_back(std::move(s));
        }
        if (persisted > 0)
            io::write_file((ctx.out / trace_name("spectrum", n)).string(), spectra.str());
        const auto report = model_validate(cfg.model, check);
        summary.row({std::to_string(n), std::to_string(cfg.samples), std::to_string(k_max), std::to_string(dimension),
                     std::to_string(persisted), std::to_string(validated), std::to_string(report.total_violations)});
        log << "n=" << n << ": " << cfg.samples << " samples, k=1.." << k_max << ", dimension " << dimension;
        if (!report.ok())
            log << ", " << report.total_violations << " spectrum violations";
        log << '\n';
    }
    io::write_file((ctx.out / "summary.csv").string(), summary.str());
    return exit_ok;
}

// ---- analyze

inline int analyze(const context& ctx, std::ostream& log)
{
    const auto& cfg = ctx.cfg;
    const auto tables = load_tables(ctx, "trace");
    const auto a = analyze_tables(cfg, tables);
    const int r = cfg.pipeline.fit_r;
    io::write_file((ctx.out / "expansion.csv").string(), io::expansion_csv(a.est));

    std::vector<c_ell_estimate> counted;
    for (const auto& b : a.bases)
        counted.push_back(estimate_C_ell(cfg.model, b.ell, *a.j, cfg.pipeline.theta, cfg.model.n_grid, cfg.samples,
                                         cfg.seed, ctx.threads));

    io::csv_writer c_ell({"ell", "level", "n", "ein", "scaled"});
    for (const auto& c : counted)
        for (const auto& p : c.per_n)
            c_ell.row({io::format_double(c.ell), std::to_string(c.level), std::to_string(p.n),
                       io::format_double(p.ein), io::format_double(p.scaled)});
    io::write_file((ctx.out / "c_ell.csv").string(), c_ell.str());

    nlohmann::json bases = nlohmann::json::array();
    std::vector<poly_term> terms;
    for (std::size_t i = 0; i < a.bases.size(); ++i) {
        const auto& b = a.bases[i];
        terms.push_back({cplx(b.ell, 0.0), {cplx(b.amplitude, 0.0)}});
        bases.push_back({{"ell", b.ell},
                         {"amplitude", b.amplitude},
                         {"level", b.level},
                         {"residual", b.residual},
                         {"counted_amplitude", counted[i].extrapolated}});
    }
    nlohmann::json doc{{"r", r},
                       {"k_first", a.est.k_first},
                       {"k_last", a.est.k_last},
                       {"j", a.j ? nlohmann::json(*a.j) : nlohmann::json(nullptr)},
                       {"bases", bases},
                       {"polyexponential", io::to_json(polyexponential(std::move(terms)))}};
    io::write_file((ctx.out / "bases.json").string(), doc.dump(2) + "\n");

    std::string text;
    text += "fit r=" + std::to_string(r) + " over n=";
    for (std::size_t i = 0; i < cfg.model.n_grid.size(); ++i)
        text += (i ? "," : "") + std::to_string(cfg.model.n_grid[i]);
    text += ", k=" + std::to_string(a.est.k_first) + ".." + std::to_string(a.est.k_last) + "\n";
    if (!a.j) {
        text += "no larger bases up to level r−1; O(n^{−j}) regime\n";
        text += "levels checked: 0.." + std::to_string(r - 1) + "\n";
    }
    for (std::size_t i = 0; i < a.bases.size(); ++i) {
        const auto& b = a.bases[i];
        const auto& c = counted[i];
        text += "j=" + std::to_string(*a.j) + ", ℓ≈" + fixed(b.ell, 2) + ", C≈" + fixed(b.amplitude, 1) +
                " (fitted amplitude " + fixed(b.amplitude, 4) + ", counted " + fixed(c.extrapolated, 4);
        std::vector<long long> ns;
        std::vector<double> ein;
        for (const auto& p : c.per_n) {
            ns.push_back(p.n);
            ein.push_back(p.ein);
        }
        if (const auto slope = log_log_slope(ns, ein))
            text += ", Ein slope " + fixed(*slope, 3);
        text += ")\n";
    }
    io::write_file((ctx.out / "summary.txt").string(), text);
    log << text;
    return exit_ok;
}

// ---- certify

inline std::vector<int> markov_lengths(const experiment_config& cfg, const exceptional_params& params, long long n)
{
    if (!cfg.pipeline.certify.markov_k.empty())
        return cfg.pipeline.certify.markov_k;
    const int horizon = trace_horizon(n);
    std::vector<int> ks{2};
    const int proof = std::min(proof_trace_length(params.kappa, n), horizon - horizon % 2);
    if (proof > 2)
        ks.push_back(proof);
    return ks;
}

inline int certify(const context& ctx, std::ostream& log, std::ostream& err)
{
    const auto& cfg = ctx.cfg;
    const auto& cc = cfg.pipeline.certify;
    const auto tables = load_tables(ctx, "trace");
    const auto real_tables = load_tables(ctx, "realtrace");
    const auto a = analyze_tables(cfg, tables);
    // the linear n term needs one more grid value than the plain fit
    const bool linear = real_tables.size() >= static_cast<std::size_t>(cfg.pipeline.fit_r) + 2;
    if (!linear)
        log << "real-trace fit without the n term: n_grid has " << real_tables.size() << " values\n";
    const auto real_fit = fit_expansion(real_tables, cfg.pipeline.fit_r, linear);

    std::vector<certificate> certs;
    std::vector<std::string> flagged;

    // Markov inequality on the empirical measure
    const auto exc = make_exceptional_params(cfg.model.lambda0, cfg.model.lambda1, cfg.pipeline.epsilon,
                                             cfg.pipeline.alpha);
    for (long long n : cfg.model.n_grid) {
        std::vector<spectrum_sample> samples;
        const std::size_t count = std::min(cc.markov_samples, cfg.samples);
        for (std::size_t i = 0; i < count; ++i)
            samples.push_back(sample_model(cfg.model, n, cfg.seed, i));
        for (int k : markov_lengths(cfg, exc, n))
            certs.push_back(certify_markov(samples, cc.d, cc.points, cfg.pipeline.theta, cfg.pipeline.epsilon,
                                           cfg.model.lambda0, k, n));
    }

    // Ann(S) applied to the fitted real-trace coefficients
    const auto rt = certify_real_trace_bound(real_tables, cc.points, cc.d, real_fit, cfg.model.lambda0,
                                             cfg.model.lambda1);
    for (const auto& c : rt.levels)
        certs.push_back(c);

    // Eout of the complement region against n^-alpha
    const auto eb = verify_exceptional_bound(cfg.model, exc, cc.points, cfg.pipeline.theta, cfg.model.n_grid,
                                             cfg.samples, cfg.seed, cc.d, ctx.threads);
    for (std::size_t i = 0; i < eb.rows.size(); ++i) {
        const auto& row = eb.rows[i];
        auto c = make_certificate("exceptional_bound", row.eout, row.bound);
        c.n = row.n;
        c.d = cc.d;
        c.points = cc.points;
        c.theta = cfg.pipeline.theta;
        if (i < eb.rows.size() / 2) {
            c.note = "small n, informational";
            c.pass = true;
        }
        certs.push_back(std::move(c));
    }
    if (!eb.pass)
        for (double x : eb.flagged)
            flagged.push_back(fixed(x, 2));

    // sidestepping conclusions at the detected level
    const int level = a.j.value_or(std::max(cfg.pipeline.fit_r - 1, 0));
    const auto sp = make_sidestep_params(cfg.model.lambda0, cfg.model.lambda1, level, cfg.pipeline.epsilon);
    const auto ss = verify_sidestep(cfg.model, a.j, a.bases, sp, cfg.pipeline.fit_r, cfg.pipeline.theta,
                                    cfg.model.n_grid, cfg.samples, cfg.seed, cfg.pipeline.amplitude_tolerance,
                                    ctx.threads);
    {
        auto c = make_certificate("sidestep_eout_decay", ss.eout_slope.value_or(-INFINITY),
                                  -static_cast<double>(level) + 0.15);
        c.pass = ss.eout_decays;
        c.level = level;
        c.theta = cfg.pipeline.theta;
        c.note = ss.eout_slope ? "log-log slope of Eout" : "Eout identically zero";
        certs.push_back(std::move(c));
    }
    for (const auto& b : ss.bases) {
        auto c = make_certificate("sidestep_amplitude", b.relative_error, cfg.pipeline.amplitude_tolerance);
        c.level = level;
        c.points = {cplx(b.ell, 0.0)};
        c.theta = cfg.pipeline.theta;
        c.note = "counted " + io::format_double(b.counted.extrapolated) + " vs fitted " +
                 io::format_double(b.detected_amplitude);
        certs.push_back(std::move(c));
    }

    fs::create_directories(ctx.out);
    io::csv_writer csv({"kind", "n", "k", "level", "D", "L", "theta", "lhs", "rhs", "slack", "pass"});
    nlohmann::json list = nlohmann::json::array();
    for (const auto& c : certs) {
        csv.row({c.kind, std::to_string(c.n), std::to_string(c.k), std::to_string(c.level), std::to_string(c.d),
                 points_text(c.points), io::format_double(c.theta), io::format_double(c.lhs), io::format_double(c.rhs),
                 io::format_double(c.slack), c.pass ? "1" : "0"});
        list.push_back(certificate_json(c));
    }
    io::write_file((ctx.out / "certificates.csv").string(), csv.str());

    const bool all_pass = std::all_of(certs.begin(), certs.end(), [](const auto& c) { return c.pass; });
    nlohmann::json doc{
        {"pass", all_pass},
        {"certificates", list},
        {"exceptional",
         {{"kappa", exc.kappa},
          {"r0", exc.r0},
          {"r0_bound", exc.r0_bound},
          {"slack", exc.slack()},
          {"theta0", eb.theta0},
          {"theta_within_theta0", eb.theta_within_theta0},
          {"flagged", eb.flagged}}},
        {"sidestep",
         {{"j", a.j ? nlohmann::json(*a.j) : nlohmann::json(nullptr)},
          {"kappa0", sp.kappa0},
          {"r1", sp.r1},
          {"theta1", sp.theta1},
          {"theta_within_theta1", ss.theta_within_theta1},
          {"d_tilde", sp.d_tilde}}},
    };
    io::write_file((ctx.out / "certificates.json").string(), doc.dump(2) + "\n");

    std::size_t passed = 0;
    const certificate* worst = nullptr;
    for (const auto& c : certs) {
        passed += c.pass ? 1 : 0;
        if (!c.pass && (!worst || c.slack < worst->slack))
            worst = &c;
    }
    log << passed << "/" << certs.size() << " certificates pass\n";
    if (!eb.theta_within_theta0)
        log << "note: theta=" << cfg.pipeline.theta << " exceeds theta0=" << eb.theta0 << "\n";
    if (all_pass)
        return exit_ok;
    err << "certificate failure: worst slack " << io::format_double(worst->slack) << " (" << worst->kind;
    if (worst->n)
        err << ", n=" << worst->n;
    if (worst->k)
        err << ", k=" << worst->k;
    if (worst->level >= 0)
        err << ", level=" << worst->level;
    err << ")\n";
    if (!flagged.empty()) {
        err << "flagged base(s) outside L:";
        for (const auto& f : flagged)
            err << " ℓ≈" << f;
        err << '\n';
    }
    return exit_certificate;
}

// ---- report

inline int report(const context& ctx, std::ostream& log)
{
    const auto run_summary = read_stage_file(ctx.out / "summary.csv", "run");
    std::string text = "# sidestep report\n\n## run\n\n```\n" + run_summary + "```\n\n## analyze\n\n";
    const auto analysis_path = ctx.out / "summary.txt";
    text += fs::exists(analysis_path) ? "```\n" + io::read_file(analysis_path.string()) + "```\n" : "not run\n";
    text += "\n## certify\n\n";
    const auto cert_path = ctx.out / "certificates.csv";
    if (fs::exists(cert_path)) {
        const auto csv = io::parse_csv(io::read_file(cert_path.string()));
        const auto kind = csv.column("kind"), pass = csv.column("pass");
        std::vector<std::string> kinds;
        for (const auto& r : csv.rows)
            if (std::find(kinds.begin(), kinds.end(), r.at(kind)) == kinds.end())
                kinds.push_back(r.at(kind));
        for (const auto& k : kinds) {
            std::size_t total = 0, ok = 0;
            for (const auto& r : csv.rows)
                if (r.at(kind) == k) {
                    ++total;
                    ok += r.at(pass) == "1" ? 1 : 0;
                }
            text += "- " + k + ": " + std::to_string(ok) + "/" + std::to_string(total) + " pass\n";
        }
    } else {
        text += "not run\n";
    }
    io::write_file((ctx.out / "report.md").string(), text);
    log << text;
    return exit_ok;
}

inline void write_diagnostic(const context* ctx, const std::string& command, const std::string& kind,
                             const std::string& message)
{
    if (!ctx)
        return;
    try {
        fs::create_directories(ctx->out);
        nlohmann::json doc{{"command", command}, {"error", kind}, {"message", message}};
        io::write_file((ctx->out / "error.json").string(), doc.dump(2) + "\n");
    } catch (...) {
    }
}

} // namespace detail

/// Runs one subcommand and maps failures to exit codes:
/// 2 config, 3 numeric, 4 missing input, 5 certificate failure.
inline int run_command(const std::string& command, const driver_options& opt, std::ostream& log, std::ostream& err)
{
    std::optional<detail::context> ctx;
    try {
        ctx = detail::load_context(opt);
        if (command == "run")
            return detail::run(*ctx, log);
        if (command == "analyze")
            return detail::analyze(*ctx, log);
        if (command == "certify")
            return detail::certify(*ctx, log, err);
        if (command == "report")
            return detail::report(*ctx, log);
        err << "unknown command '" << command << "'\n";
        return exit_config;
    } catch (const config_error& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const missing_input& e) {
        err << "missing input: " << e.what() << '\n';
        return exit_missing_input;
    } catch (const error& e) {
        const std::string kind = to_string(e.code());
        err << "numeric failure [" << kind << "]: " << e.what() << '\n';
        detail::write_diagnostic(ctx ? &*ctx : nullptr, command, kind, e.what());
        return exit_numeric;
    } catch (const std::exception& e) {
        err << "failure: " << e.what() << '\n';
        detail::write_diagnostic(ctx ? &*ctx : nullptr, command, "internal", e.what());
        return exit_numeric;
    }
}

} // namespace sidestep

#endif // SIDESTEP_DRIVER_HPP
