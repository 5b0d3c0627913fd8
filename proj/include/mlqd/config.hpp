#pragma once
//
// Run configuration in INI form:
//
//   [problem]  length, T_in, T0, cv_coefficient, left_boundary, right_boundary
//   [grid]     cells | dx, order_per_half, groups | group_edges
//   [time]     t_end, dt
//   [scheme]   scheme, rank, eps_T, eps_E, max_outer, max_inner, newton_tolerance,
//              newton_max_iterations, closure, threads, clip_negative (true|false)
//   [output]   directory, output_times
//
// Boundaries are `blackbody` (inflow at T_in) or `vacuum`. `groups` accepts
// only `fleck-cummings`; `group_edges` is a comma list whose last entry may be
// `inf`. An empty `output_times` records every step.
//

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mlqd/compression.hpp"
#include "mlqd/error.hpp"
#include "mlqd/record.hpp"
#include "mlqd/timestepper.hpp"

namespace mlqd {

struct RunConfig {
    FleckCummingsSetup problem;
    double t_end = 0.0;
    double dt = 0.0;
    SchemeConfig scheme;
    std::string output_directory = ".";
    std::vector<double> output_times;
    std::vector<std::pair<std::string, std::string>> echo; // every key as given, "section.key"

    RunOptions run_options() const { return {t_end, dt, output_times}; }
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& config_schema()
{
    static const std::map<std::string, std::set<std::string>> schema{
        {"problem", {"length", "T_in", "T0", "cv_coefficient", "left_boundary", "right_boundary"}},
        {"grid", {"cells", "dx", "order_per_half", "groups", "group_edges"}},
        {"time", {"t_end", "dt"}},
        {"scheme",
         {"scheme", "rank", "eps_T", "eps_E", "max_outer", "max_inner", "newton_tolerance", "newton_max_iterations",
          "closure", "threads", "clip_negative"}},
        {"output", {"directory", "output_times"}},
    };
    return schema;
}

inline const std::vector<std::string>& required_keys()
{
    static const std::vector<std::string> keys{"problem.length", "problem.T_in",   "problem.T0",
                                               "problem.cv_coefficient", "grid.cells|grid.dx", "time.t_end",
                                               "time.dt",        "scheme.scheme"};
    return keys;
}

// Line number of every "section.key" in the raw text, for error messages.
inline std::map<std::string, std::size_t> key_lines(const std::string& text)
{
    std::map<std::string, std::size_t> lines;
    std::istringstream is(text);
    std::string line, section;
    for (std::size_t n = 1; std::getline(is, line); ++n) {
        line = trim(line);
        if (line.empty() || line[0] == ';' || line[0] == '#')
            continue;
        if (line[0] == '[') {
            section = trim(line.substr(1, line.find(']') - 1));
            lines.emplace(section, n);
            continue;
        }
        auto eq = line.find('=');
        if (eq != std::string::npos)
            lines.emplace((section.empty() ? "" : section + ".") + trim(line.substr(0, eq)), n);
    }
    return lines;
}

class ConfigReader {
public:
    ConfigReader(const boost::property_tree::ptree& tree, std::map<std::string, std::size_t> lines, std::string source)
        : tree_(tree), lines_(std::move(lines)), source_(std::move(source))
    {
    }

    bool has(const std::string& key) const { return tree_.get_optional<std::string>(path(key)).has_value(); }

    std::string text(const std::string& key) const { return trim(tree_.get<std::string>(path(key))); }

    [[noreturn]] void fail(const std::string& key, const std::string& why) const
    {
        auto it = lines_.find(key);
        std::string where = source_ + (it != lines_.end() ? ":" + std::to_string(it->second) : "");
        throw config_error(where + ": " + key + ": " + why);
    }

    double real(const std::string& key, double fallback) const { return has(key) ? real(key) : fallback; }

    double real(const std::string& key) const
    {
        const std::string v = text(key);
        try {
            return parse_real(v);
        } catch (const std::exception&) {
            fail(key, "expected a number, got '" + v + "'");
        }
    }

    double positive(const std::string& key, double fallback) const
    {
        double v = real(key, fallback);
        if (!(v > 0.0) || !std::isfinite(v))
            fail(key, "must be positive and finite");
        return v;
    }

    std::size_t count(const std::string& key, std::size_t fallback, std::size_t minimum = 0) const
    {
        if (!has(key))
            return fallback;
        const std::string v = text(key);
        std::size_t pos = 0;
        unsigned long n = 0;
        try {
            if (!v.empty() && v[0] == '-')
                throw std::invalid_argument("negative");
            n = std::stoul(v, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != v.size() || v.empty())
            fail(key, "expected a non-negative integer, got '" + v + "'");
        if (n < minimum)
            fail(key, "must be at least " + std::to_string(minimum));
        return n;
    }

    std::vector<double> list(const std::string& key) const
    {
        std::vector<double> out;
        if (!has(key))
            return out;
        for (const auto& item : split(text(key), ',')) {
            const std::string t = trim(item);
            if (t.empty())
                continue;
            if (t == "inf")
                out.push_back(std::numeric_limits<double>::infinity());
            else
                try {
                    out.push_back(parse_real(t));
                } catch (const std::exception&) {
                    fail(key, "expected a comma-separated list of numbers, got '" + t + "'");
                }
        }
        return out;
    }

private:
    static boost::property_tree::ptree::path_type path(const std::string& key)
    {
        return boost::property_tree::ptree::path_type(key, '.');
    }

    const boost::property_tree::ptree& tree_;
    std::map<std::string, std::size_t> lines_;
    std::string source_;
};

} // namespace detail

/// Parses and validates a configuration. `source` names the input in messages.
inline RunConfig parse_config(const std::string& text, const std::string& source = "<config>")
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream is(text);
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw config_error(source + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    const auto lines = detail::key_lines(text);
    const detail::ConfigReader in(tree, lines, source);

    RunConfig cfg;
    // Structure: known sections and keys only.
    for (const auto& [section, body] : tree) {
        auto known = detail::config_schema().find(section);
        if (known == detail::config_schema().end())
            in.fail(section, body.empty() && !body.data().empty() ? "key outside of any section"
                                                                  : "unknown section [" + section + "]");
        for (const auto& [key, value] : body) {
            if (!known->second.count(key))
                in.fail(section + "." + key, "unknown key");
            cfg.echo.emplace_back(section + "." + key, detail::trim(value.data()));
        }
    }
    std::vector<std::string> missing;
    for (const auto& req : detail::required_keys()) {
        bool found = false;
        for (const auto& alt : detail::split(req, '|'))
            found |= in.has(alt);
        if (!found)
            missing.push_back(req);
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing)
            list += (list.empty() ? "" : ", ") + m;
        throw config_error(source + ": missing required fields: " + list);
    }

    auto& p = cfg.problem;
    p.length = in.positive("problem.length", p.length);
    p.T_in = in.positive("problem.T_in", p.T_in);
    p.T0 = in.positive("problem.T0", p.T0);
    p.cv_coefficient = in.positive("problem.cv_coefficient", p.cv_coefficient);
    auto boundary = [&](const std::string& key, bool fallback) {
        if (!in.has(key))
            return fallback;
        const std::string v = in.text(key);
        if (v == "blackbody")
            return true;
        if (v == "vacuum")
            return false;
        in.fail(key, "expected 'blackbody' or 'vacuum', got '" + v + "'");
    };
    p.left_blackbody = boundary("problem.left_boundary", true);
    p.right_blackbody = boundary("problem.right_boundary", false);

    if (in.has("grid.cells") && in.has("grid.dx"))
        in.fail("grid.dx", "give either cells or dx, not both");
    if (in.has("grid.cells")) {
        p.cells = in.count("grid.cells", 0, 1);
    } else {
        const double dx = in.positive("grid.dx", 0.0);
        const double n = std::round(p.length / dx);
        if (n < 1.0 || std::abs(n * dx - p.length) > 1e-9 * p.length)
            in.fail("grid.dx", "does not divide the slab length " + format_real(p.length));
        p.cells = std::size_t(n);
    }
    p.order_per_half = in.count("grid.order_per_half", p.order_per_half, 1);
    if (in.has("grid.groups") && in.has("grid.group_edges"))
        in.fail("grid.group_edges", "give either groups or group_edges, not both");
    if (in.has("grid.groups") && in.text("grid.groups") != "fleck-cummings")
        in.fail("grid.groups", "only 'fleck-cummings' is built in; use group_edges for other structures");
    if (in.has("grid.group_edges")) {
        try {
            p.groups = GroupStructure(in.list("grid.group_edges"));
        } catch (const std::invalid_argument& e) {
            in.fail("grid.group_edges", e.what());
        }
    }

    cfg.t_end = in.positive("time.t_end", 0.0);
    cfg.dt = in.positive("time.dt", 0.0);
    {
        const double n = std::round(cfg.t_end / cfg.dt);
        if (std::abs(n * cfg.dt - cfg.t_end) > 1e-9 * cfg.dt)
            in.fail("time.dt", "does not divide t_end");
    }

    auto& s = cfg.scheme;
    try {
        s.scheme = parse_scheme(in.text("scheme.scheme"));
    } catch (const std::invalid_argument&) {
        in.fail("scheme.scheme", "expected be, pod-i or pod-rt, got '" + in.text("scheme.scheme") + "'");
    }
    const std::size_t M = 2 * p.order_per_half;
    const std::size_t d = full_rank(p.cells, M);
    s.rank = in.count("scheme.rank", s.scheme == StorageScheme::Full ? 0 : d);
    if (s.scheme != StorageScheme::Full) {
        if (s.rank > d)
            in.fail("scheme.rank", "exceeds the full rank d = min(J, M) = " + std::to_string(d));
        if (s.scheme == StorageScheme::PodI && s.rank < 1)
            in.fail("scheme.rank", "pod-i needs rank >= 1");
    }
    s.eps_T = in.positive("scheme.eps_T", s.eps_T);
    s.eps_E = in.positive("scheme.eps_E", s.eps_E);
    s.max_outer = in.count("scheme.max_outer", s.max_outer, 1);
    s.max_inner = in.count("scheme.max_inner", s.max_inner, 1);
    s.newton.tolerance = in.positive("scheme.newton_tolerance", s.newton.tolerance);
    s.newton.max_iterations = in.count("scheme.newton_max_iterations", s.newton.max_iterations, 1);
    s.threads = in.count("scheme.threads", s.threads, 1);
    if (in.has("scheme.clip_negative")) {
        const std::string v = in.text("scheme.clip_negative");
        if (v == "true")
            s.clip_negative = true;
        else if (v == "false")
            s.clip_negative = false;
        else
            in.fail("scheme.clip_negative", "expected 'true' or 'false', got '" + v + "'");
    }
    if (in.has("scheme.closure")) {
        const std::string v = in.text("scheme.closure");
        if (v == "half-range")
            s.closure = BoundaryClosure::HalfRange;
        else if (v == "total")
            s.closure = BoundaryClosure::Total;
        else
            in.fail("scheme.closure", "expected 'half-range' or 'total', got '" + v + "'");
    }

    if (in.has("output.directory"))
        cfg.output_directory = in.text("output.directory");
    cfg.output_times = in.list("output.output_times");
    for (double t : cfg.output_times) {
        const double n = std::round(t / cfg.dt);
        if (t < 0.0 || t > cfg.t_end * (1.0 + 1e-12) || std::abs(n * cfg.dt - t) > 1e-9 * cfg.dt + 1e-12 * t)
            in.fail("output.output_times", format_real(t) + " is not a step time in [0, t_end]");
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw config_error("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str(), path);
}

} // namespace mlqd
