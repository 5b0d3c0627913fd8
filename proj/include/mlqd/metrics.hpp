#pragma once
//
// Error norms between solution records, rank and refinement bookkeeping, and
// a small CSV table type used for every tabular output.
//

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlqd/record.hpp"

namespace mlqd {

/// max_j |a_j - ref_j| / max_j |ref_j|.
inline double rel_inf_error(std::span<const double> a, std::span<const double> ref)
{
    if (a.size() != ref.size() || a.empty())
        throw std::invalid_argument("rel_inf_error: fields have different or zero length (" +
                                    std::to_string(a.size()) + " vs " + std::to_string(ref.size()) + ")");
    double diff = 0.0, norm = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        diff = std::max(diff, std::abs(a[j] - ref[j]));
        norm = std::max(norm, std::abs(ref[j]));
    }
    if (!(norm > 0.0))
        throw std::invalid_argument("rel_inf_error: reference field has zero norm");
    return diff / norm;
}

struct RecordComparison {
    std::vector<double> times;
    std::vector<double> error_T, error_E; // per output time
    double final_T = 0.0, final_E = 0.0;  // at the last output time
    double max_T = 0.0, max_E = 0.0;      // over all output times
};

/// Compares `run` against a same-grid `reference` at every common output time.
inline RecordComparison compare_records(const SolutionRecord& run, const SolutionRecord& reference)
{
    if (!run.same_grid(reference))
        throw std::invalid_argument("compare: records are on different grids (J, M, G, dt or cell centers differ)");
    if (run.times != reference.times)
        throw std::invalid_argument("compare: records have different output times");
    if (run.times.empty())
        throw std::invalid_argument("compare: records contain no output times");
    RecordComparison c;
    c.times = run.times;
    for (std::size_t n = 0; n < run.times.size(); ++n) {
        c.error_T.push_back(rel_inf_error(run.T[n], reference.T[n]));
        c.error_E.push_back(rel_inf_error(run.E[n], reference.E[n]));
    }
    c.final_T = c.error_T.back();
    c.final_E = c.error_E.back();
    c.max_T = *std::max_element(c.error_T.begin(), c.error_T.end());
    c.max_E = *std::max_element(c.error_E.begin(), c.error_E.end());
    return c;
}

/// Index of output time `t` in a record, matched to a relative tolerance.
inline std::size_t time_index(const SolutionRecord& r, double t)
{
    for (std::size_t n = 0; n < r.times.size(); ++n)
        if (std::abs(r.times[n] - t) <= 1e-9 * std::max(1.0, std::abs(t)))
            return n;
    throw std::invalid_argument("record has no output at t = " + format_real(t));
}

struct RatioResult {
    std::vector<double> ratio;
    std::vector<bool> flagged; // denominator vanished; see error_ratio
};

/// Elementwise numerator/denominator. A denominator below the smallest normal
/// double counts as zero: 0/0 is reported as 1 and x/0 as +inf, both flagged.
inline RatioResult error_ratio(std::span<const double> numerator, std::span<const double> denominator)
{
    if (numerator.size() != denominator.size())
        throw std::invalid_argument("error_ratio: vectors differ in length");
    RatioResult r;
    for (std::size_t i = 0; i < numerator.size(); ++i) {
        const double den = std::abs(denominator[i]) < std::numeric_limits<double>::min() ? 0.0 : denominator[i];
        const double num = std::abs(numerator[i]) < std::numeric_limits<double>::min() ? 0.0 : numerator[i];
        if (den == 0.0) {
            r.ratio.push_back(num == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
            r.flagged.push_back(true);
        } else {
            r.ratio.push_back(num / den);
            r.flagged.push_back(false);
        }
    }
    return r;
}

/// One grid of a refinement study: the run and its own same-grid reference.
struct RefinementEntry {
    double parameter = 0.0; // dx or dt
    const SolutionRecord* run = nullptr;
    const SolutionRecord* reference = nullptr;
};

struct RefinementTable {
    std::vector<double> parameters;
    std::vector<double> times;
    std::vector<std::vector<double>> error_T, error_E; // [grid][time]
    std::vector<std::vector<double>> ratio_T, ratio_E; // [grid pair][time], error(k+1) / error(k)
};

inline RefinementTable refinement_table(const std::vector<RefinementEntry>& entries, const std::vector<double>& times)
{
    RefinementTable t;
    t.times = times;
    for (const auto& e : entries) {
        if (e.run == nullptr || e.reference == nullptr)
            throw std::invalid_argument("refinement_table: grid " + format_real(e.parameter) +
                                        " is missing its run or reference");
        if (!e.run->same_grid(*e.reference))
            throw std::invalid_argument("refinement_table: run and reference differ in grid at " +
                                        format_real(e.parameter));
        t.parameters.push_back(e.parameter);
        std::vector<double> eT, eE;
        for (double time : times) {
            const std::size_t a = time_index(*e.run, time), b = time_index(*e.reference, time);
            eT.push_back(rel_inf_error(e.run->T[a], e.reference->T[b]));
            eE.push_back(rel_inf_error(e.run->E[a], e.reference->E[b]));
        }
        t.error_T.push_back(std::move(eT));
        t.error_E.push_back(std::move(eE));
    }
    for (std::size_t k = 1; k < t.parameters.size(); ++k) {
        t.ratio_T.push_back(error_ratio(t.error_T[k], t.error_T[k - 1]).ratio);
        t.ratio_E.push_back(error_ratio(t.error_E[k], t.error_E[k - 1]).ratio);
    }
    return t;
}

/// Header plus rows of text cells; numeric cells use format_real so that a
/// write/read cycle reproduces values bitwise.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row)
    {
        if (row.size() != columns.size())
            throw std::invalid_argument("CsvTable: row has " + std::to_string(row.size()) + " cells, expected " +
                                        std::to_string(columns.size()));
        rows.push_back(std::move(row));
    }

    double number(std::size_t row, std::size_t col) const { return parse_real(rows.at(row).at(col)); }

    std::size_t column(const std::string& name) const
    {
        auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end())
            throw std::invalid_argument("CsvTable: no column '" + name + "'");
        return std::size_t(it - columns.begin());
    }

    friend bool operator==(const CsvTable&, const CsvTable&) = default;
};

inline void write_csv(std::ostream& os, const CsvTable& t)
{
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (cells[i].find_first_of(",\n") != std::string::npos)
                throw std::invalid_argument("CsvTable: cell contains a separator: '" + cells[i] + "'");
            os << (i ? "," : "") << cells[i];
        }
        os << '\n';
    };
    line(t.columns);
    for (const auto& r : t.rows)
        line(r);
}

inline void write_csv(const std::string& path, const CsvTable& t)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot open '" + path + "' for writing");
    write_csv(os, t);
    if (!os)
        throw std::runtime_error("write to '" + path + "' failed");
}

inline CsvTable read_csv(std::istream& is)
{
    CsvTable t;
    std::string line;
    if (!std::getline(is, line))
        throw std::runtime_error("csv: empty input");
    t.columns = detail::split(line, ',');
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty())
            continue;
        auto cells = detail::split(line, ',');
        if (!line.empty() && line.back() == ',')
            cells.emplace_back();
        if (cells.size() != t.columns.size())
            throw std::runtime_error("csv line " + std::to_string(lineno) + ": expected " +
                                     std::to_string(t.columns.size()) + " cells");
        t.rows.push_back(std::move(cells));
    }
    return t;
}

inline CsvTable read_csv(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("cannot open '" + path + "'");
    return read_csv(is);
}

/// Per-time error table of one comparison: time, err_T, err_E.
inline CsvTable comparison_table(const RecordComparison& c)
{
    CsvTable t{{"time", "err_T", "err_E"}, {}};
    for (std::size_t n = 0; n < c.times.size(); ++n)
        t.add_row({format_real(c.times[n]), format_real(c.error_T[n]), format_real(c.error_E[n])});
    return t;
}

/// Long-format refinement table: one row per (grid, time) with errors and the
/// ratio to the previous grid (empty for the first grid).
inline CsvTable refinement_csv(const RefinementTable& r, const std::string& parameter_name)
{
    CsvTable t{{parameter_name, "time", "err_T", "err_E", "ratio_T", "ratio_E"}, {}};
    for (std::size_t k = 0; k < r.parameters.size(); ++k)
        for (std::size_t n = 0; n < r.times.size(); ++n)
            t.add_row({format_real(r.parameters[k]), format_real(r.times[n]), format_real(r.error_T[k][n]),
                       format_real(r.error_E[k][n]), k ? format_real(r.ratio_T[k - 1][n]) : "",
                       k ? format_real(r.ratio_E[k - 1][n]) : ""});
    return t;
}

} // namespace mlqd
