#ifndef SIDESTEP_IO_HPP
#define SIDESTEP_IO_HPP

#include <charconv>
#include <complex>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "sidestep/error.hpp"
#include "sidestep/estimation.hpp"
#include "sidestep/polyexp.hpp"
#include "sidestep/shiftops.hpp"
#include "sidestep/spectral.hpp"

namespace sidestep::io {

using json = nlohmann::json;

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double x)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s)
{
    double x = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw error(errc::invalid_parameter, "not a number: '" + std::string(s) + "'");
    return x;
}

/// Minimal CSV: header row plus rows of already formatted fields.
class csv_writer {
public:
    explicit csv_writer(std::vector<std::string> header) { row(header); }

    void row(const std::vector<std::string>& fields)
    {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i)
                out_ << ',';
            out_ << fields[i];
        }
        out_ << '\n';
    }

    std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
};

struct csv_table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name)
                return i;
        throw error(errc::invalid_parameter, "missing CSV column " + std::string(name));
    }
};

inline csv_table parse_csv(const std::string& text)
{
    csv_table t;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ','))
            fields.push_back(field);
        if (first)
            t.header = std::move(fields);
        else
            t.rows.push_back(std::move(fields));
        first = false;
    }
    return t;
}

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::system_error(std::make_error_code(std::errc::no_such_file_or_directory), path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::system_error(std::make_error_code(std::errc::io_error), "cannot write " + path);
    out << text;
}

// ---- trace tables: n,k,mean,stderr

inline std::string trace_table_csv(const trace_table& t)
{
    csv_writer w({"n", "k", "mean", "stderr"});
    for (std::size_t i = 0; i < t.mean.size(); ++i)
        w.row({std::to_string(t.n), std::to_string(i + 1), format_double(t.mean[i]), format_double(t.std_error[i])});
    return w.str();
}

inline trace_table trace_table_from_csv(const std::string& text, std::size_t samples = 0)
{
    const auto csv = parse_csv(text);
    const auto cn = csv.column("n"), ck = csv.column("k"), cm = csv.column("mean"), cs = csv.column("stderr");
    trace_table t;
    t.samples = samples;
    for (const auto& r : csv.rows) {
        t.n = static_cast<long long>(parse_double(r.at(cn)));
        if (static_cast<std::size_t>(parse_double(r.at(ck))) != t.mean.size() + 1)
            throw error(errc::invalid_parameter, "trace table rows must list k = 1, 2, ... in order");
        t.mean.push_back(parse_double(r.at(cm)));
        t.std_error.push_back(parse_double(r.at(cs)));
    }
    return t;
}

// ---- expansion estimate: k,c0..c{r-1},residual

inline std::string expansion_csv(const expansion_estimate& e)
{
    std::vector<std::string> header{"k"};
    for (int i = 0; i < e.r; ++i)
        header.push_back("c" + std::to_string(i));
    header.push_back("residual");
    csv_writer w(header);
    for (std::size_t idx = 0; idx < e.window(); ++idx) {
        std::vector<std::string> row{std::to_string(e.k_first + static_cast<int>(idx))};
        for (int i = 0; i < e.r; ++i)
            row.push_back(format_double(e.coeff[static_cast<std::size_t>(i)][idx]));
        row.push_back(format_double(e.residual[idx]));
        w.row(row);
    }
    return w.str();
}

// ---- spectra: sample_id,re,im (implicit zeros written out)

inline void append_spectrum_rows(csv_writer& w, std::size_t sample_id, const spectrum_sample& s)
{
    const auto id = std::to_string(sample_id);
    for (cplx z : s.eigenvalues)
        w.row({id, format_double(z.real()), format_double(z.imag())});
    for (std::size_t i = 0; i < s.zero_count; ++i)
        w.row({id, "0", "0"});
}

inline std::vector<spectrum_sample> spectra_from_csv(const std::string& text)
{
    const auto csv = parse_csv(text);
    const auto cid = csv.column("sample_id"), cre = csv.column("re"), cim = csv.column("im");
    std::vector<spectrum_sample> out;
    std::string current;
    for (const auto& r : csv.rows) {
        if (out.empty() || r.at(cid) != current) {
            out.emplace_back();
            current = r.at(cid);
        }
        out.back().eigenvalues.emplace_back(parse_double(r.at(cre)), parse_double(r.at(cim)));
    }
    return out;
}

// ---- polyexponential: [{re_base, im_base, coeffs: [[re, im], ...]}]

inline json to_json(const polyexponential& p)
{
    json terms = json::array();
    for (const auto& t : p.terms()) {
        json coeffs = json::array();
        for (cplx c : t.coeffs)
            coeffs.push_back({c.real(), c.imag()});
        terms.push_back({{"re_base", t.base.real()}, {"im_base", t.base.imag()}, {"coeffs", coeffs}});
    }
    return terms;
}

inline polyexponential polyexponential_from_json(const json& j)
{
    std::vector<poly_term> terms;
    for (const auto& t : j) {
        poly_term term{cplx(t.at("re_base").get<double>(), t.at("im_base").get<double>()), {}};
        for (const auto& c : t.at("coeffs"))
            term.coeffs.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
        terms.push_back(std::move(term));
    }
    return polyexponential(std::move(terms));
}

inline json to_json(const shift_polynomial& q)
{
    json coeffs = json::array();
    for (cplx c : q.coeffs())
        coeffs.push_back({c.real(), c.imag()});
    return coeffs;
}

} // namespace sidestep::io

#endif // SIDESTEP_IO_HPP
