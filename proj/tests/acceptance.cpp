// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>

#include "sidestep/sidestep.hpp"
#include "support.hpp"

using namespace sidestep;
using testing_support::gen;
namespace fs = std::filesystem;

namespace {

const std::string source_dir = SIDESTEP_SOURCE_DIR;
const std::string cli = SIDESTEP_CLI;

struct verdict {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double x, int digits = 3)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

int run_cli(const std::string& command, const std::string& config, const fs::path& out)
{
    const std::string line = cli + " " + command + " --config " + config + " --out " + out.string() + " > " +
                             (out.string() + "." + command + ".log") + " 2>&1";
    fs::create_directories(out.parent_path());
    return WEXITSTATUS(std::system(line.c_str()));
}

double coeff_scale(const shift_polynomial& q, double base)
{
    double s = 0.0;
    for (std::size_t i = 0; i < q.coeffs().size(); ++i)
        s += std::abs(q.coeffs()[i]) * std::pow(base, static_cast<double>(i));
    return s;
}

// 1. Eigenfunction law, annihilation, positivity and the leading-coefficient
// law, each checked once per randomized instance against direct evaluation.
verdict shift_suite()
{
    const auto t0 = std::chrono::steady_clock::now();
    gen g(1001);
    const int instances = 10000;
    double worst = 0.0;
    bool structural = true;
    for (int trial = 0; trial < instances; ++trial) {
        const shift_polynomial q(g.complex_coeffs(static_cast<std::size_t>(g.integer(1, 7)), 2.0));
        const cplx mu = g.complex(3.0);
        const int d = g.integer(1, 4);
        auto set = g.distinct_bases(static_cast<std::size_t>(g.integer(1, 3)), 3.0, 0.15);

        // Q(S) mu^k = Q(mu) mu^k
        std::vector<cplx> f;
        for (int k = 1; k <= 16; ++k)
            f.push_back(std::pow(mu, k));
        const auto g1 = sidestep::apply(q, f);
        for (std::size_t i = 0; i < g1.size(); ++i) {
            const double scale = coeff_scale(q, std::abs(mu)) * std::pow(std::abs(mu), static_cast<double>(i + 1));
            worst = std::max(worst, std::abs(g1[i] - q(mu) * f[i]) / std::max(scale, 1e-300));
        }

        // Ann_{D,L}(S) kills every p(k) l^k with l in L and deg p < D
        std::vector<poly_term> terms;
        for (cplx b : set)
            terms.push_back({b, g.complex_coeffs(static_cast<std::size_t>(g.integer(1, d)), 2.0)});
        const polyexponential p(terms);
        const auto ann = annihilator(d, set);
        structural = structural && sidestep::apply(ann, p).is_zero();
        std::vector<cplx> seq;
        for (int k = 1; k <= static_cast<int>(ann.degree()) + 4; ++k)
            seq.push_back(testing_support::naive_eval(terms, k));
        const auto g2 = sidestep::apply(ann, seq);
        for (std::size_t i = 0; i < g2.size(); ++i) {
            double scale = 0.0;
            for (std::size_t t = 0; t < ann.coeffs().size(); ++t)
                scale += std::abs(ann.coeffs()[t] * seq[i + t]);
            worst = std::max(worst, std::abs(g2[i]) / std::max(scale, 1e-300));
        }

        // positivity of Ann_{D,L}(mu) for real mu, even D, conjugation-closed L
        std::vector<cplx> closed;
        for (cplx b : set) {
            if (std::abs(b.imag()) < 0.1) {
                closed.emplace_back(b.real(), 0.0);
            } else {
                closed.push_back(b);
                closed.push_back(std::conj(b));
            }
        }
        bool distinct = true;
        for (std::size_t i = 0; i < closed.size(); ++i)
            for (std::size_t j = i + 1; j < closed.size(); ++j)
                distinct = distinct && std::abs(closed[i] - closed[j]) > 0.05;
        if (distinct) {
            const int even_d = 2 * g.integer(1, 2);
            const auto pos = annihilator(even_d, closed);
            const double x = g.real(-4.0, 4.0);
            const cplx v = pos(cplx(x));
            const double scale = coeff_scale(pos, std::abs(x));
            const double exact = std::abs(testing_support::product_form(cplx(x), even_d, closed));
            structural = structural && v.real() >= -1e-12 * scale;
            worst = std::max(worst, std::abs(v - exact) / std::max(scale, 1e-300));
        }

        // leading coefficient: Q(S)(p(k) l^k) = (Q(l) lead(p) k^deg + lower) l^k for Q(l) != 0
        const cplx ell = set.back();
        set.pop_back();
        const auto filter = set.empty() ? q : annihilator(d, set);
        const auto coeffs = g.complex_coeffs(static_cast<std::size_t>(g.integer(1, 4)), 2.0);
        const auto out = sidestep::apply(filter, polyexponential::exponential(ell, coeffs));
        const cplx want = filter(ell) * coeffs.back();
        if (std::abs(want) > 1e-6 * coeff_scale(filter, std::abs(ell))) {
            structural = structural && out.terms().size() == 1 && out.terms()[0].degree() == coeffs.size() - 1;
            if (out.terms().size() == 1)
                worst = std::max(worst, std::abs(out.terms()[0].leading() - want) / std::abs(want));
        }
    }
    const double secs = seconds_since(t0);
    return {structural && worst <= 1e-9 && secs < 30.0,
            std::to_string(instances) + " instances, max relative error " + num(worst) + ", " + num(secs) + " s"};
}

// 2. Planted oracle end to end through the command-line driver.
verdict planted_closure(const fs::path& out)
{
    const auto t0 = std::chrono::steady_clock::now();
    const std::string config = source_dir + "/configs/planted_demo.json";
    for (const char* stage : {"run", "analyze"})
        if (const int code = run_cli(stage, config, out); code != 0)
            return {false, std::string(stage) + " exited " + std::to_string(code)};
    const auto bases = nlohmann::json::parse(io::read_file((out / "bases.json").string()));
    if (bases.at("j").is_null() || bases.at("j").get<int>() != 1 || bases.at("bases").size() != 1)
        return {false, "expected exactly one base at level 1, got " + bases.dump()};
    const auto& b = bases["bases"][0];
    const double ell = b.at("ell").get<double>();
    const double fitted = b.at("amplitude").get<double>();
    const double counted = b.at("counted_amplitude").get<double>();

    const auto cfg = parse_config_text(io::read_file(config));
    const long long n = cfg.model.n_grid.back();
    const auto reg = region::around(cfg.model.lambda0 + cfg.pipeline.epsilon, {cplx(ell)},
                                    std::pow(static_cast<double>(n), -cfg.pipeline.theta));
    const double scaled_eout = mc_in_out(cfg.model, n, reg, cfg.samples, cfg.seed).eout * static_cast<double>(n);
    const double secs = seconds_since(t0);

    const bool ok = std::abs(ell - 2.0) <= 0.01 && std::abs(fitted - 5.0) / 5.0 <= 0.10 &&
                    std::abs(counted - 5.0) / 5.0 <= 0.10 && scaled_eout <= 0.05 && secs < 600.0;
    return {ok, "j=1, ell=" + num(ell, 6) + ", C fitted " + num(fitted, 5) + " counted " + num(counted, 5) +
                    ", n*Eout(n=" + std::to_string(n) + ")=" + num(scaled_eout) + ", " + num(secs) + " s"};
}

// 3. Zero-noise tables from the closed form, carried in quad precision.
verdict exact_fit()
{
    const planted_config cfg{{0.5}, {plant{2.0, 5.0, 1}}};
    std::vector<basic_trace_table<quad>> tables;
    for (long long n : {100, 200, 400, 800, 1600}) {
        basic_trace_table<quad> t;
        t.n = n;
        for (int k = 1; k <= 20; ++k) {
            t.mean.push_back(planted_exact_trace<quad>(cfg, n, k));
            t.std_error.push_back(quad(0));
        }
        tables.push_back(t);
    }
    const auto est = fit_expansion(tables, 2);
    double worst = 0.0;
    for (int k = 1; k <= 20; ++k) {
        const double c0 = static_cast<double>(est.c(0, k)), c1 = static_cast<double>(est.c(1, k));
        worst = std::max(worst, std::abs(c0 - std::pow(0.5, k)) / std::pow(0.5, k));
        worst = std::max(worst, std::abs(c1 - 5.0 * std::pow(2.0, k)) / (5.0 * std::pow(2.0, k)));
    }
    return {worst <= 1e-8, "k=1..20, max relative error " + num(worst)};
}

// 4. Markov certificate on randomized empirical measures.
verdict markov_trials()
{
    gen g(1004);
    const int trials = 10000;
    int failures = 0;
    double worst_imag = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        const long long n = g.integer(4, 40);
        const double lambda0 = g.real(0.5, 2.0);
        std::vector<spectrum_sample> samples(static_cast<std::size_t>(g.integer(1, 5)));
        for (auto& s : samples) {
            while (static_cast<long long>(s.eigenvalues.size()) + 2 <= n && g.coin(0.75)) {
                if (g.coin(0.3)) {
                    cplx z = g.complex(lambda0);
                    z = cplx(z.real(), std::max(std::abs(z.imag()), 1e-3));
                    if (std::abs(z) > lambda0)
                        z *= lambda0 / std::abs(z);
                    s.eigenvalues.push_back(z);
                    s.eigenvalues.push_back(std::conj(z));
                } else {
                    s.eigenvalues.emplace_back(g.real(-3.0 * lambda0, 3.0 * lambda0), 0.0);
                }
            }
            s.zero_count = static_cast<std::size_t>(n) - s.eigenvalues.size();
        }
        const int d = g.coin() ? 2 : 4;
        const auto points = g.real_points(static_cast<std::size_t>(g.integer(0, 3)), 3.0 * lambda0, 0.1);
        const int k = 2 * g.integer(1, 20);
        const auto c = certify_markov(samples, d, points, g.real(0.05, 1.0), g.real(0.05, 1.0), lambda0, k, n);
        failures += c.pass ? 0 : 1;
        worst_imag = std::max(worst_imag, c.imag_residue);
    }
    return {failures == 0 && worst_imag < 1e-9, std::to_string(trials) + " trials, " + std::to_string(failures) +
                                                    " failures, max imaginary residue " + num(worst_imag)};
}

// 5. Parameter formulas against hand-computed values.
verdict parameters()
{
    const auto e = make_exceptional_params(2.0, 8.0, 2.0, 1.0);
    const double r0_err = std::abs(e.r0_bound - 3.0);
    const auto s = make_sidestep_params(1.0, 4.0, 0, 3.0);
    const double kappa_err = std::abs(s.kappa0 - 2.0 / std::log(1.5));
    const bool strict = e.slack_first > 0.0 && e.slack_second > 0.0 && e.r0 > e.r0_bound &&
                        s.inner.slack_first > 0.0 && s.inner.slack_second > 0.0 && s.d_tilde_slack(s.d_tilde) >= 0.0 &&
                        std::abs(s.kappa_equation_residual()) < 1e-12;
    return {r0_err <= 1e-12 && kappa_err <= 1e-12 && strict,
            "r0 bound " + num(e.r0_bound, 15) + " (r0=" + std::to_string(e.r0) + "), kappa0 " + num(s.kappa0, 15) +
                ", slacks " + num(e.slack_first) + "/" + num(e.slack_second)};
}

// 6. Hashimoto map on random lifts of K4.
verdict hashimoto_lifts()
{
    gen g(1006);
    lift_config adj{complete_graph(4), 3, false};
    double worst = 0.0;
    bool sizes = true;
    for (int i = 0; i < 100; ++i) {
        const long long n = g.integer(2, 50);
        const auto seed = g.engine()();
        const auto fresh = lift_sample(adj, n, seed);
        sizes = sizes && fresh.eigenvalues.size() == static_cast<std::size_t>(4 * (n - 1));
        std::vector<double> mus;
        for (cplx z : fresh.eigenvalues)
            mus.push_back(z.real());
        for (cplx z : hashimoto_from_adjacency(mus, 3))
            if (!is_real(z))
                worst = std::max(worst, std::abs(std::abs(z) - std::sqrt(2.0)));
        adj.hashimoto = true;
        sizes = sizes && lift_sample(adj, n, seed).eigenvalues.size() == static_cast<std::size_t>(12 * (n - 1));
        adj.hashimoto = false;
    }
    return {worst <= 1e-10 && sizes, "100 lifts, max | |z| - sqrt 2 | = " + num(worst) +
                                         ", new adjacency spectrum size v(n-1) " + (sizes ? "exact" : "WRONG")};
}

// 7. Byte-identical outputs from two full pipeline runs.
verdict determinism(const fs::path& first, const fs::path& second)
{
    const std::string config = source_dir + "/configs/planted_demo.json";
    for (const auto& out : {first, second})
        for (const char* stage : {"run", "analyze", "certify", "report"})
            if (const int code = run_cli(stage, config, out); code != 0)
                return {false, std::string(stage) + " exited " + std::to_string(code)};
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(first)) {
        const auto other = second / entry.path().filename();
        if (!fs::exists(other) || io::read_file(entry.path().string()) != io::read_file(other.string()))
            return {false, "differs: " + entry.path().filename().string()};
        ++files;
    }
    return {files > 0, std::to_string(files) + " files identical"};
}

// 8. Omitted plant base must fail certification; so must an annihilator of
// degree below the minimal one.
verdict negative_controls(const fs::path& out, const fs::path& demo_out)
{
    const std::string config = source_dir + "/configs/negative_control.json";
    for (const char* stage : {"run", "analyze"})
        if (const int code = run_cli(stage, config, out); code != 0)
            return {false, std::string(stage) + " exited " + std::to_string(code)};
    const int certify_code = run_cli("certify", config, out);

    std::vector<trace_table> real;
    for (long long n : {100, 200, 400, 800, 1600})
        real.push_back(io::trace_table_from_csv(
            io::read_file((demo_out / ("realtrace_n" + std::to_string(n) + ".csv")).string())));
    const auto est = fit_expansion(real, 2);
    const std::vector<cplx> points{2.0};
    const bool below = certify_real_trace_bound(real, points, 0, est, 1.0, 4.0).pass;
    const bool at = certify_real_trace_bound(real, points, 2, est, 1.0, 4.0).pass;
    return {certify_code == exit_certificate && !below && at,
            "certify exit " + std::to_string(certify_code) + "; real-trace bound with D=0 " +
                (below ? "passed" : "failed") + ", with D=2 " + (at ? "passed" : "failed")};
}

} // namespace

int main()
{
    const fs::path root = fs::current_path() / "acceptance_out";
    fs::remove_all(root);
    fs::create_directories(root);

    const std::vector<std::pair<std::string, std::function<verdict()>>> criteria{
        {"shift-algebra suite", shift_suite},
        {"planted-oracle closure", [&] { return planted_closure(root / "planted"); }},
        {"exact-oracle fit", exact_fit},
        {"Markov certificate", markov_trials},
        {"parameter formulas", parameters},
        {"Hashimoto map", hashimoto_lifts},
        {"determinism", [&] { return determinism(root / "first", root / "second"); }},
        {"negative controls", [&] { return negative_controls(root / "negative", root / "planted"); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failed += v.pass ? 0 : 1;
        std::cout << (v.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << v.detail
                  << std::endl;
    }
    return failed;
}
