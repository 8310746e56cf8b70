#ifndef SIDESTEP_CONFIG_HPP
#define SIDESTEP_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sidestep/models.hpp"
#include "sidestep/shiftops.hpp"

namespace sidestep {

inline constexpr const char* config_schema = "sidestep-config/1";

/// Schema violation; `path` names the offending field (e.g. "model.lambda1").
class config_error : public std::runtime_error {
public:
    config_error(std::string path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(std::move(path))
    {
    }
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

struct certify_config {
    int d = 2;
    std::vector<cplx> points;
    std::vector<int> markov_k; // empty: k = 2 and the proof length kappa log n, capped at K(n)
    std::size_t markov_samples = 2000;
};

struct pipeline_config {
    int fit_r = 2;
    double theta = 0.3;
    double epsilon = 0.5;
    double alpha = 2.0;
    int max_bases = 4;
    double amplitude_tolerance = 0.10;
    certify_config certify;
};

struct experiment_config {
    model_config model;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    std::optional<int> k_max;
    std::size_t persist_samples = 1;
    std::size_t validate_samples = 100;
    pipeline_config pipeline;
    std::string output = "out";

    /// Common trace horizon: the configured k_max or K(smallest n).
    int horizon() const { return k_max.value_or(trace_horizon(model.n_grid.front())); }
};

namespace detail {

using json = nlohmann::json;

class reader {
public:
    reader(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            throw config_error(path_.empty() ? "<root>" : path_, "expected an object");
    }

    ~reader() = default;

    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key)
    {
        seen_.insert(key);
        return j_.contains(key);
    }

    const json& at(const std::string& key)
    {
        seen_.insert(key);
        if (!j_.contains(key))
            throw config_error(child(key), "missing required field");
        return j_.at(key);
    }

    double number(const std::string& key)
    {
        const auto& v = at(key);
        if (!v.is_number())
            throw config_error(child(key), "expected a number");
        return v.get<double>();
    }

    double number_or(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

    long long integer(const std::string& key)
    {
        const auto& v = at(key);
        if (!v.is_number_integer())
            throw config_error(child(key), "expected an integer");
        return v.get<long long>();
    }

    long long integer_or(const std::string& key, long long fallback) { return has(key) ? integer(key) : fallback; }

    std::string string(const std::string& key)
    {
        const auto& v = at(key);
        if (!v.is_string())
            throw config_error(child(key), "expected a string");
        return v.get<std::string>();
    }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                throw config_error(child(it.key()), "unknown field");
    }

    const std::string& path() const noexcept { return path_; }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline std::vector<double> number_list(const json& v, const std::string& path)
{
    if (!v.is_array())
        throw config_error(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number())
            throw config_error(path + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

// Each point is a number or a [re, im] pair.
inline std::vector<cplx> point_list(const json& v, const std::string& path)
{
    if (!v.is_array())
        throw config_error(path, "expected an array");
    std::vector<cplx> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto p = path + "[" + std::to_string(i) + "]";
        if (v[i].is_number())
            out.emplace_back(v[i].get<double>(), 0.0);
        else if (v[i].is_array() && v[i].size() == 2 && v[i][0].is_number() && v[i][1].is_number())
            out.emplace_back(v[i][0].get<double>(), v[i][1].get<double>());
        else
            throw config_error(p, "expected a number or [re, im]");
    }
    return out;
}

inline Eigen::MatrixXd named_base(const std::string& name, const std::string& path)
{
    if (name == "K4")
        return complete_graph(4);
    if (name == "K5")
        return complete_graph(5);
    if (name == "K33") {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(6, 6);
        for (int i = 0; i < 3; ++i)
            for (int j = 3; j < 6; ++j)
                a(i, j) = a(j, i) = 1.0;
        return a;
    }
    if (name == "petersen") {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(10, 10);
        auto link = [&](int i, int j) { a(i, j) = a(j, i) = 1.0; };
        for (int i = 0; i < 5; ++i) {
            link(i, (i + 1) % 5);
            link(i, i + 5);
            link(i + 5, (i + 2) % 5 + 5);
        }
        return a;
    }
    throw config_error(path, "unknown base graph '" + name + "' (K4, K5, K33, petersen)");
}

inline model_config parse_model(const json& j, const std::string& path)
{
    reader r(j, path);
    model_config m;
    const auto kind = r.string("kind");
    m.lambda0 = r.number("lambda0");
    m.lambda1 = r.number("lambda1");
    if (!(m.lambda0 > 0.0))
        throw config_error(r.child("lambda0"), "must be positive");
    if (!(m.lambda1 > m.lambda0))
        throw config_error(r.child("lambda1"), "must exceed lambda0");
    if (kind == "planted") {
        planted_config pc;
        if (r.has("fixed"))
            pc.fixed = number_list(r.at("fixed"), r.child("fixed"));
        for (std::size_t i = 0; i < pc.fixed.size(); ++i)
            if (std::abs(pc.fixed[i]) > m.lambda0)
                throw config_error(r.child("fixed") + "[" + std::to_string(i) + "]", "must lie in [-lambda0, lambda0]");
        if (r.has("plants")) {
            const auto& arr = r.at("plants");
            if (!arr.is_array())
                throw config_error(r.child("plants"), "expected an array");
            for (std::size_t i = 0; i < arr.size(); ++i) {
                reader pr(arr[i], r.child("plants") + "[" + std::to_string(i) + "]");
                plant p;
                p.ell = pr.number("ell");
                p.amplitude = pr.number("C");
                p.level = static_cast<int>(pr.integer("j"));
                pr.finish();
                if (!(std::abs(p.ell) > m.lambda0 && std::abs(p.ell) <= m.lambda1))
                    throw config_error(pr.child("ell"), "must satisfy lambda0 < |ell| <= lambda1");
                if (!(p.amplitude > 0.0))
                    throw config_error(pr.child("C"), "must be positive");
                if (p.level < 1)
                    throw config_error(pr.child("j"), "must be at least 1");
                pc.plants.push_back(p);
            }
        }
        m.kind = std::move(pc);
    } else if (kind == "lift") {
        lift_config lc;
        const auto& base = r.at("base");
        if (base.is_string()) {
            lc.base_adjacency = named_base(base.get<std::string>(), r.child("base"));
        } else if (base.is_array()) {
            const auto n = static_cast<Eigen::Index>(base.size());
            lc.base_adjacency.resize(n, n);
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto row = number_list(base[static_cast<std::size_t>(i)], r.child("base") + "[" + std::to_string(i) + "]");
                if (static_cast<Eigen::Index>(row.size()) != n)
                    throw config_error(r.child("base"), "adjacency must be square");
                for (Eigen::Index k = 0; k < n; ++k)
                    lc.base_adjacency(i, k) = row[static_cast<std::size_t>(k)];
            }
        } else {
            throw config_error(r.child("base"), "expected a graph name or an adjacency matrix");
        }
        lc.degree = static_cast<int>(lc.base_adjacency.row(0).sum());
        const auto spectrum = r.has("spectrum") ? r.string("spectrum") : std::string("adjacency");
        if (spectrum != "hashimoto" && spectrum != "adjacency")
            throw config_error(r.child("spectrum"), "expected 'hashimoto' or 'adjacency'");
        lc.hashimoto = spectrum == "hashimoto";
        try {
            (void)detail::base_edges(lc);
        } catch (const error& e) {
            throw config_error(r.child("base"), e.what());
        }
        m.kind = std::move(lc);
    } else {
        throw config_error(r.child("kind"), "expected 'planted' or 'lift'");
    }
    r.finish();
    return m;
}

inline pipeline_config parse_pipeline(const json& j, const std::string& path)
{
    reader r(j, path);
    pipeline_config p;
    p.fit_r = static_cast<int>(r.integer_or("fit_r", p.fit_r));
    p.theta = r.number_or("theta", p.theta);
    p.epsilon = r.number_or("epsilon", p.epsilon);
    p.alpha = r.number_or("alpha", p.alpha);
    p.max_bases = static_cast<int>(r.integer_or("max_bases", p.max_bases));
    p.amplitude_tolerance = r.number_or("amplitude_tolerance", p.amplitude_tolerance);
    if (p.fit_r < 1)
        throw config_error(r.child("fit_r"), "must be at least 1");
    if (!(p.theta > 0.0))
        throw config_error(r.child("theta"), "must be positive");
    if (!(p.epsilon > 0.0))
        throw config_error(r.child("epsilon"), "must be positive");
    if (!(p.alpha >= 0.0))
        throw config_error(r.child("alpha"), "must be nonnegative");
    if (p.max_bases < 1)
        throw config_error(r.child("max_bases"), "must be at least 1");
    if (r.has("certify")) {
        reader c(r.at("certify"), r.child("certify"));
        p.certify.d = static_cast<int>(c.integer_or("D", p.certify.d));
        if (p.certify.d < 0 || p.certify.d % 2 != 0)
            throw config_error(c.child("D"), "must be a nonnegative even integer");
        if (c.has("L"))
            p.certify.points = point_list(c.at("L"), c.child("L"));
        if (!conjugation_closed(p.certify.points))
            throw config_error(c.child("L"), "must be closed under conjugation");
        if (c.has("k")) {
            for (double k : number_list(c.at("k"), c.child("k"))) {
                const int ki = static_cast<int>(k);
                if (ki != k || ki < 2 || ki % 2 != 0)
                    throw config_error(c.child("k"), "entries must be positive even integers");
                p.certify.markov_k.push_back(ki);
            }
        }
        p.certify.markov_samples = static_cast<std::size_t>(c.integer_or("markov_samples", 2000));
        if (p.certify.markov_samples < 1)
            throw config_error(c.child("markov_samples"), "must be positive");
        c.finish();
    }
    r.finish();
    return p;
}

} // namespace detail

inline experiment_config parse_config(const nlohmann::json& j)
{
    detail::reader r(j, "");
    const auto schema = r.string("schema");
    if (schema != config_schema)
        throw config_error("schema", "expected '" + std::string(config_schema) + "', got '" + schema + "'");
    experiment_config cfg;
    cfg.model = detail::parse_model(r.at("model"), "model");

    const auto grid = detail::number_list(r.at("n_grid"), "n_grid");
    if (grid.empty())
        throw config_error("n_grid", "must not be empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto n = static_cast<long long>(grid[i]);
        if (static_cast<double>(n) != grid[i] || n < 1)
            throw config_error("n_grid[" + std::to_string(i) + "]", "must be a positive integer");
        if (!cfg.model.n_grid.empty() && n <= cfg.model.n_grid.back())
            throw config_error("n_grid", "must be strictly increasing");
        cfg.model.n_grid.push_back(n);
    }
    cfg.samples = static_cast<std::size_t>(r.integer("samples"));
    if (cfg.samples < 2)
        throw config_error("samples", "must be at least 2");
    const auto& seed = r.at("seed");
    if (!seed.is_number_integer())
        throw config_error("seed", "expected an integer");
    cfg.seed = seed.is_number_unsigned() ? seed.get<std::uint64_t>() : static_cast<std::uint64_t>(seed.get<long long>());
    if (r.has("k_max")) {
        cfg.k_max = static_cast<int>(r.integer("k_max"));
        if (*cfg.k_max < 1 || *cfg.k_max > trace_horizon(cfg.model.n_grid.front()))
            throw config_error("k_max", "must lie in 1..K(smallest n) = " +
                                            std::to_string(trace_horizon(cfg.model.n_grid.front())));
    }
    cfg.persist_samples = static_cast<std::size_t>(r.integer_or("persist_samples", 1));
    cfg.validate_samples = static_cast<std::size_t>(r.integer_or("validate_samples", 100));
    if (r.has("pipeline"))
        cfg.pipeline = detail::parse_pipeline(r.at("pipeline"), "pipeline");
    if (r.has("output"))
        cfg.output = r.string("output");
    r.finish();

    if (const auto* pc = std::get_if<planted_config>(&cfg.model.kind)) {
        for (long long n : cfg.model.n_grid) {
            if (pc->fixed.size() + pc->plants.size() > static_cast<std::size_t>(n))
                throw config_error("n_grid", "n=" + std::to_string(n) + " is smaller than the planted slots");
            for (std::size_t i = 0; i < pc->plants.size(); ++i)
                if (plant_probability(pc->plants[i], n) > 1.0)
                    throw config_error("model.plants[" + std::to_string(i) + "]",
                                       "C / n^j exceeds 1 at n=" + std::to_string(n));
        }
    }
    return cfg;
}

inline experiment_config parse_config_text(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("<root>", std::string("not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

} // namespace sidestep

#endif // SIDESTEP_CONFIG_HPP
