#pragma once
//
// SolutionRecord: temperature and radiation energy density at output times,
// with a text file format
//
//   # mlqd-solution 1
//   # <key> = <value>            (run metadata and echoed configuration)
//   ...
//   [time = <t>]
//   j,x,T,E
//   <j>,<x>,<T>,<E>
//   ...
//
// Reals are written with 17 significant digits so that reading a file back
// reproduces the in-memory values bit for bit.
//

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mlqd {

/// Formats a double with 17 significant digits in scientific notation.
inline std::string format_real(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

inline double parse_real(const std::string& s)
{
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size())
        throw std::invalid_argument("not a number: '" + s + "'");
    return v;
}

struct SolutionRecord {
    std::size_t J = 0, M = 0, G = 0;
    double dt = 0.0;
    std::string scheme;
    std::size_t rank = 0;
    std::vector<std::pair<std::string, std::string>> header; // echoed configuration
    std::vector<double> x;                                   // cell centers
    std::vector<double> times;
    std::vector<std::vector<double>> T; // [time][cell]
    std::vector<std::vector<double>> E; // [time][cell]

    bool same_grid(const SolutionRecord& o) const
    {
        return J == o.J && M == o.M && G == o.G && dt == o.dt && x == o.x;
    }

    friend bool operator==(const SolutionRecord&, const SolutionRecord&) = default;
};

inline void write_record(std::ostream& os, const SolutionRecord& r)
{
    os << "# mlqd-solution 1\n";
    os << "# J = " << r.J << "\n# M = " << r.M << "\n# G = " << r.G << "\n";
    os << "# dt = " << format_real(r.dt) << "\n# scheme = " << r.scheme << "\n# rank = " << r.rank << "\n";
    for (const auto& [k, v] : r.header)
        os << "# " << k << " = " << v << "\n";
    for (std::size_t n = 0; n < r.times.size(); ++n) {
        os << "[time = " << format_real(r.times[n]) << "]\n";
        os << "j,x,T,E\n";
        for (std::size_t j = 0; j < r.J; ++j)
            os << j << ',' << format_real(r.x[j]) << ',' << format_real(r.T[n][j]) << ',' << format_real(r.E[n][j])
               << '\n';
    }
}

inline void write_record(const std::string& path, const SolutionRecord& r)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot open '" + path + "' for writing");
    write_record(os, r);
    if (!os)
        throw std::runtime_error("write to '" + path + "' failed");
}

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        out.push_back(item);
    return out;
}

} // namespace detail

inline SolutionRecord read_record(std::istream& is)
{
    SolutionRecord r;
    std::string line;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& why) {
        throw std::runtime_error("solution record line " + std::to_string(lineno) + ": " + why);
    };
    if (!std::getline(is, line) || detail::trim(line) != "# mlqd-solution 1")
        throw std::runtime_error("solution record: missing '# mlqd-solution 1' header");
    ++lineno;
    while (std::getline(is, line)) {
        ++lineno;
        line = detail::trim(line);
        if (line.empty())
            continue;
        if (line[0] == '#') {
            auto eq = line.find('=');
            if (eq == std::string::npos)
                fail("malformed header line");
            auto key = detail::trim(line.substr(1, eq - 1));
            auto val = detail::trim(line.substr(eq + 1));
            if (key == "J")
                r.J = std::stoul(val);
            else if (key == "M")
                r.M = std::stoul(val);
            else if (key == "G")
                r.G = std::stoul(val);
            else if (key == "dt")
                r.dt = parse_real(val);
            else if (key == "scheme")
                r.scheme = val;
            else if (key == "rank")
                r.rank = std::stoul(val);
            else
                r.header.emplace_back(key, val);
            continue;
        }
        if (line.rfind("[time =", 0) == 0) {
            auto close = line.find(']');
            if (close == std::string::npos)
                fail("unterminated time block");
            r.times.push_back(parse_real(detail::trim(line.substr(7, close - 7))));
            r.T.emplace_back();
            r.E.emplace_back();
            continue;
        }
        if (line == "j,x,T,E")
            continue;
        if (r.times.empty())
            fail("data before the first time block");
        auto cols = detail::split(line, ',');
        if (cols.size() != 4)
            fail("expected 4 columns");
        const std::size_t j = std::stoul(cols[0]);
        if (r.times.size() == 1) {
            if (j != r.x.size())
                fail("cell index out of order");
            r.x.push_back(parse_real(cols[1]));
        }
        if (j != r.T.back().size())
            fail("cell index out of order");
        r.T.back().push_back(parse_real(cols[2]));
        r.E.back().push_back(parse_real(cols[3]));
    }
    for (std::size_t n = 0; n < r.times.size(); ++n)
        if (r.T[n].size() != r.J)
            throw std::runtime_error("solution record: block " + std::to_string(n) + " has " +
                                     std::to_string(r.T[n].size()) + " cells, expected " + std::to_string(r.J));
    return r;
}

inline SolutionRecord read_record(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("cannot open '" + path + "'");
    return read_record(is);
}

} // namespace mlqd
