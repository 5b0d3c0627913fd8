#pragma once
//
// Command-line front end: run, compare, memtable, sweep-ranks and refine.
//
// Exit codes: 0 success, 1 usage, configuration or I/O error, 2 numerical
// failure (a solver did not converge or hit a degenerate system).
//

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mlqd/compression.hpp"
#include "mlqd/config.hpp"
#include "mlqd/error.hpp"
#include "mlqd/metrics.hpp"
#include "mlqd/record.hpp"
#include "mlqd/timestepper.hpp"

namespace mlqd {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitNumerical = 2 };

/// Solution record file name for a scheme and rank, e.g. "solution_pod-i_r3.txt".
inline std::string record_name(StorageScheme s, std::size_t rank)
{
    return std::string("solution_") + scheme_tag(s) + (s == StorageScheme::Full ? "" : "_r" + std::to_string(rank)) +
           ".txt";
}

/// Runs one configuration and fills in the record header from the config.
inline RunResult run_config(const RunConfig& cfg)
{
    const auto problem = make_fleck_cummings(cfg.problem);
    RunResult r = run(problem, cfg.scheme, cfg.run_options());
    r.record.header = cfg.echo;
    r.record.header.emplace_back("persisted_elements", std::to_string(r.final_state.persisted_elements()));
    return r;
}

/// Per-step diagnostics: outer/Newton iteration counts and persisted storage.
inline CsvTable diagnostics_table(const RunResult& r)
{
    CsvTable t{{"step", "time", "outer_iterations", "newton_iterations", "persisted_elements"}, {}};
    for (const auto& s : r.log)
        t.add_row({std::to_string(s.step), format_real(s.time), std::to_string(s.outer_iterations),
                   std::to_string(s.newton_iterations), std::to_string(s.persisted_elements)});
    return t;
}

/// Reduction table for ranks 1..min(J, M) of both POD variants plus the full count D.
inline CsvTable memory_table(std::size_t J, std::size_t M, std::size_t G)
{
    CsvTable t{{"scheme", "rank", "elements", "reduction_percent"}, {}};
    t.add_row({"be", std::to_string(full_rank(J, M)), std::to_string(storage_count(StorageScheme::Full, 0, J, M, G)),
               format_real(0.0)});
    for (auto s : {StorageScheme::PodI, StorageScheme::PodRT})
        for (std::size_t r = 1; r <= full_rank(J, M); ++r)
            t.add_row({scheme_tag(s), std::to_string(r), std::to_string(storage_count(s, r, J, M, G)),
                       format_real(reduction_percent(s, r, J, M, G))});
    return t;
}

namespace detail {

inline std::vector<std::size_t> parse_ranks(const std::string& text, std::size_t d)
{
    std::vector<std::size_t> out;
    if (text.empty()) {
        for (std::size_t r = 1; r <= d; ++r)
            out.push_back(r);
        return out;
    }
    for (const auto& item : split(text, ',')) {
        const auto dash = item.find('-');
        std::size_t lo = 0, hi = 0;
        try {
            if (dash == std::string::npos)
                lo = hi = std::stoul(trim(item));
            else {
                lo = std::stoul(trim(item.substr(0, dash)));
                hi = std::stoul(trim(item.substr(dash + 1)));
            }
        } catch (const std::exception&) {
            throw config_error("--ranks: cannot parse '" + item + "'");
        }
        if (lo < 1 || hi > d || lo > hi)
            throw config_error("--ranks: '" + item + "' is outside 1.." + std::to_string(d));
        for (std::size_t r = lo; r <= hi; ++r)
            out.push_back(r);
    }
    return out;
}

inline std::filesystem::path prepare_dir(const std::string& dir)
{
    std::filesystem::path p(dir);
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec)
        throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
    return p;
}

inline void apply_overrides(RunConfig& cfg, const std::string& scheme, const std::optional<std::size_t>& rank,
                            std::size_t threads)
{
    if (!scheme.empty()) {
        try {
            cfg.scheme.scheme = parse_scheme(scheme);
        } catch (const std::invalid_argument&) {
            throw config_error("--scheme: expected be, pod-i or pod-rt, got '" + scheme + "'");
        }
        if (!rank && cfg.scheme.scheme != StorageScheme::Full && cfg.scheme.rank == 0)
            cfg.scheme.rank = full_rank(cfg.problem.cells, 2 * cfg.problem.order_per_half);
    }
    if (rank)
        cfg.scheme.rank = *rank;
    if (threads > 0)
        cfg.scheme.threads = threads;
    try {
        check_rank(cfg.scheme, cfg.problem.cells, 2 * cfg.problem.order_per_half);
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("--rank: ") + e.what());
    }
}

inline void log(bool quiet, const std::string& msg)
{
    if (!quiet)
        std::cerr << msg << '\n';
}

} // namespace detail

/// Entry point shared by the executable and the tests.
inline int cli_main(int argc, const char* const* argv)
{
    CLI::App app{"Multilevel quasidiffusion thermal radiative transfer with compressed previous-step intensity"};
    app.require_subcommand(1);
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "suppress progress messages");

    std::string config_path, scheme, out_dir, reference_path, snapshot_path, run_path, out_file, ranks, kind = "space";
    std::optional<std::size_t> rank;
    std::size_t threads = 0, J = 100, M = 8, G = 17;

    auto* run_cmd = app.add_subcommand("run", "run one configuration and write its solution record");
    run_cmd->add_option("--config", config_path, "configuration file")->required();
    run_cmd->add_option("--scheme", scheme, "override the storage scheme (be, pod-i, pod-rt)");
    run_cmd->add_option("--rank", rank, "override the compression rank");
    run_cmd->add_option("--out", out_dir, "output directory (overrides the config)");
    run_cmd->add_option("--threads", threads, "worker threads for per-group loops");
    run_cmd->add_option("--snapshot", snapshot_path, "also write the final compressed intensity to this file");

    auto* cmp_cmd = app.add_subcommand("compare", "relative infinity-norm errors of a run against a reference");
    cmp_cmd->add_option("--run", run_path, "solution record to test")->required();
    cmp_cmd->add_option("--reference", reference_path, "same-grid reference solution record")->required();
    cmp_cmd->add_option("--out", out_file, "CSV file for per-time errors (default: stdout)");

    auto* mem_cmd = app.add_subcommand("memtable", "storage reduction of both POD variants for every rank");
    mem_cmd->add_option("--J", J, "spatial cells")->check(CLI::PositiveNumber);
    mem_cmd->add_option("--M", M, "angular directions")->check(CLI::PositiveNumber);
    mem_cmd->add_option("--G", G, "frequency groups")->check(CLI::PositiveNumber);
    mem_cmd->add_option("--out", out_file, "CSV file (default: stdout)");

    auto* sweep_cmd = app.add_subcommand("sweep-ranks", "run both POD variants over a rank range and tabulate errors");
    sweep_cmd->add_option("--config", config_path, "configuration file")->required();
    sweep_cmd->add_option("--ranks", ranks, "ranks, e.g. 1-8 or 1,3,5 (default: 1..d)");
    sweep_cmd->add_option("--reference", reference_path, "BE-SC reference record (computed if absent)");
    sweep_cmd->add_option("--out", out_dir, "output directory (overrides the config)");
    sweep_cmd->add_option("--threads", threads, "worker threads for per-group loops");

    auto* refine_cmd = app.add_subcommand("refine", "spatial or temporal refinement study with same-grid references");
    refine_cmd->add_option("--config", config_path, "base configuration file")->required();
    refine_cmd->add_option("--kind", kind, "space (dx = 0.24..0.03) or time (dt = 4e-2..5e-3)")
        ->check(CLI::IsMember({"space", "time"}));
    refine_cmd->add_option("--ranks", ranks, "ranks to study (default: 1-4)");
    refine_cmd->add_option("--out", out_dir, "output directory (overrides the config)");
    refine_cmd->add_option("--threads", threads, "worker threads for per-group loops");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*run_cmd) {
            RunConfig cfg = load_config(config_path);
            detail::apply_overrides(cfg, scheme, rank, threads);
            const auto dir = detail::prepare_dir(out_dir.empty() ? cfg.output_directory : out_dir);
            detail::log(quiet, "running " + std::string(scheme_tag(cfg.scheme.scheme)) + " rank " +
                                   std::to_string(cfg.scheme.rank));
            const RunResult r = run_config(cfg);
            const auto rec_path = dir / record_name(cfg.scheme.scheme, cfg.scheme.rank);
            write_record(rec_path.string(), r.record);
            auto diag_path = rec_path;
            diag_path.replace_extension(".diagnostics.csv");
            write_csv(diag_path.string(), diagnostics_table(r));
            if (!snapshot_path.empty()) {
                std::ofstream os(snapshot_path, std::ios::binary);
                if (!os)
                    throw std::runtime_error("cannot open '" + snapshot_path + "' for writing");
                write_snapshot(os, r.final_state.intensity);
            }
            std::cout << rec_path.string() << '\n';
            return kExitOk;
        }
        if (*cmp_cmd) {
            const auto c = compare_records(read_record(run_path), read_record(reference_path));
            const CsvTable t = comparison_table(c);
            if (out_file.empty())
                write_csv(std::cout, t);
            else
                write_csv(out_file, t);
            detail::log(quiet, "final: err_T " + format_real(c.final_T) + " err_E " + format_real(c.final_E) +
                                   "; max: err_T " + format_real(c.max_T) + " err_E " + format_real(c.max_E));
            return kExitOk;
        }
        if (*mem_cmd) {
            const CsvTable t = memory_table(J, M, G);
            if (out_file.empty())
                write_csv(std::cout, t);
            else
                write_csv(out_file, t);
            return kExitOk;
        }
        if (*sweep_cmd) {
            RunConfig cfg = load_config(config_path);
            detail::apply_overrides(cfg, "", std::nullopt, threads);
            const auto dir = detail::prepare_dir(out_dir.empty() ? cfg.output_directory : out_dir);
            const std::size_t d = full_rank(cfg.problem.cells, 2 * cfg.problem.order_per_half);
            const auto rank_list = detail::parse_ranks(ranks, d);

            SolutionRecord reference;
            if (!reference_path.empty()) {
                reference = read_record(reference_path);
            } else {
                RunConfig ref = cfg;
                ref.scheme.scheme = StorageScheme::Full;
                ref.scheme.rank = 0;
                detail::log(quiet, "running be reference");
                reference = run_config(ref).record;
                write_record((dir / record_name(StorageScheme::Full, 0)).string(), reference);
            }

            CsvTable per_time{{"scheme", "rank", "time", "err_T", "err_E"}, {}};
            CsvTable summary{{"scheme", "rank", "final_err_T", "final_err_E", "max_err_T", "max_err_E"}, {}};
            std::vector<double> final_i, final_rt, max_i, max_rt;
            for (auto s : {StorageScheme::PodI, StorageScheme::PodRT})
                for (std::size_t r : rank_list) {
                    RunConfig c = cfg;
                    c.scheme.scheme = s;
                    c.scheme.rank = r;
                    detail::log(quiet, "running " + std::string(scheme_tag(s)) + " rank " + std::to_string(r));
                    const RunResult res = run_config(c);
                    write_record((dir / record_name(s, r)).string(), res.record);
                    const auto cmp = compare_records(res.record, reference);
                    for (std::size_t n = 0; n < cmp.times.size(); ++n)
                        per_time.add_row({scheme_tag(s), std::to_string(r), format_real(cmp.times[n]),
                                          format_real(cmp.error_T[n]), format_real(cmp.error_E[n])});
                    summary.add_row({scheme_tag(s), std::to_string(r), format_real(cmp.final_T),
                                     format_real(cmp.final_E), format_real(cmp.max_T), format_real(cmp.max_E)});
                    (s == StorageScheme::PodI ? final_i : final_rt).push_back(cmp.final_T);
                    (s == StorageScheme::PodI ? max_i : max_rt).push_back(cmp.max_T);
                }
            write_csv((dir / "sweep_errors.csv").string(), per_time);
            write_csv((dir / "sweep_summary.csv").string(), summary);
            const auto ratio_final = error_ratio(final_rt, final_i);
            const auto ratio_max = error_ratio(max_rt, max_i);
            CsvTable ratios{{"rank", "final_ratio_T", "final_flag", "max_ratio_T", "max_flag"}, {}};
            for (std::size_t k = 0; k < rank_list.size(); ++k)
                ratios.add_row({std::to_string(rank_list[k]), format_real(ratio_final.ratio[k]),
                                ratio_final.flagged[k] ? "1" : "0", format_real(ratio_max.ratio[k]),
                                ratio_max.flagged[k] ? "1" : "0"});
            write_csv((dir / "sweep_ratio_podrt_over_podi.csv").string(), ratios);
            std::cout << (dir / "sweep_summary.csv").string() << '\n';
            return kExitOk;
        }
        if (*refine_cmd) {
            RunConfig base = load_config(config_path);
            detail::apply_overrides(base, "", std::nullopt, threads);
            const auto dir = detail::prepare_dir(out_dir.empty() ? base.output_directory : out_dir);
            const std::vector<double> params = kind == "space" ? std::vector<double>{0.24, 0.12, 0.06, 0.03}
                                                               : std::vector<double>{4e-2, 2e-2, 1e-2, 5e-3};
            const std::vector<double> times{0.4, 1.0, 6.0};
            const std::size_t d = full_rank(base.problem.cells, 2 * base.problem.order_per_half);
            const auto rank_list = detail::parse_ranks(ranks.empty() ? "1-" + std::to_string(std::min<std::size_t>(4, d)) : ranks, d);

            std::vector<SolutionRecord> refs;
            std::vector<std::vector<SolutionRecord>> runs(2 * rank_list.size());
            for (double prm : params) {
                RunConfig c = base;
                c.output_times = times;
                if (kind == "space")
                    c.problem.cells = std::size_t(std::lround(c.problem.length / prm));
                else
                    c.dt = prm;
                c.scheme.scheme = StorageScheme::Full;
                c.scheme.rank = 0;
                detail::log(quiet, "reference at " + kind + " step " + format_real(prm));
                refs.push_back(run_config(c).record);
                std::size_t slot = 0;
                for (auto s : {StorageScheme::PodI, StorageScheme::PodRT})
                    for (std::size_t r : rank_list) {
                        c.scheme.scheme = s;
                        c.scheme.rank = r;
                        runs[slot++].push_back(run_config(c).record);
                    }
            }
            CsvTable all{{"scheme", "rank", kind == "space" ? "dx" : "dt", "time", "err_T", "err_E", "ratio_T",
                          "ratio_E"},
                         {}};
            std::size_t slot = 0;
            for (auto s : {StorageScheme::PodI, StorageScheme::PodRT})
                for (std::size_t r : rank_list) {
                    std::vector<RefinementEntry> entries;
                    for (std::size_t k = 0; k < params.size(); ++k)
                        entries.push_back({params[k], &runs[slot][k], &refs[k]});
                    const auto t = refinement_csv(refinement_table(entries, times), "param");
                    for (const auto& row : t.rows) {
                        std::vector<std::string> full{scheme_tag(s), std::to_string(r)};
                        full.insert(full.end(), row.begin(), row.end());
                        all.add_row(std::move(full));
                    }
                    ++slot;
                }
            const auto path = dir / ("refinement_" + kind + ".csv");
            write_csv(path.string(), all);
            std::cout << path.string() << '\n';
            return kExitOk;
        }
    } catch (const numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

} // namespace mlqd
