#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qdw/analysis.hpp"
#include "qdw/classical.hpp"
#include "qdw/ebk.hpp"
#include "qdw/io.hpp"
#include "qdw/model.hpp"
#include "qdw/rational.hpp"
#include "qdw/solvers.hpp"

namespace qdw::cli {

inline constexpr std::string_view version = "0.1.0";

namespace detail {

/// Column-oriented table rendered as CSV (with '#' provenance line) or as a
/// JSON array of row objects.  Cells hold pre-formatted tokens; empty cells
/// mean out-of-domain and render as empty CSV fields / JSON nulls.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void write_csv(std::ostream& os, std::string_view provenance) const {
        if (!provenance.empty()) os << "# " << provenance << "\n";
        for (std::size_t c = 0; c < columns.size(); ++c)
            os << columns[c] << (c + 1 < columns.size() ? ',' : '\n');
        for (const auto& row : rows)
            for (std::size_t c = 0; c < row.size(); ++c)
                os << row[c] << (c + 1 < row.size() ? ',' : '\n');
    }

    void write_json(std::ostream& os) const {
        os << "[";
        for (std::size_t r = 0; r < rows.size(); ++r) {
            os << (r == 0 ? "\n" : ",\n") << "  {";
            for (std::size_t c = 0; c < columns.size(); ++c) {
                os << (c == 0 ? "" : ", ") << '"' << columns[c] << "\": ";
                const std::string& cell = rows[r][c];
                os << (cell.empty() ? "null" : cell);
            }
            os << "}";
        }
        os << "\n]\n";
    }
};

struct GlobalOptions {
    double a = -10.0;
    double b = 1.0;
    std::string out;
    std::string format = "csv";
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    bool fail_fast = false;

    PotentialParams params(double hbar) const { return {a, b, 1.0, hbar}; }
};

struct RunStats {
    std::string subcommand;
    long long rows = 0;
    std::string destination;
};

inline std::string join_args(const std::vector<std::string>& args) {
    std::string s;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (i) s += ' ';
        s += args[i];
    }
    return s;
}

inline void emit(const GlobalOptions& g, const std::string& provenance, const Table& table,
                 RunStats& stats) {
    const bool json = g.format == "json";
    const auto writer = [&](std::ostream& os) {
        if (json)
            table.write_json(os);
        else
            table.write_csv(os, provenance);
    };
    if (g.out.empty()) {
        writer(std::cout);
        stats.destination = "stdout";
    } else {
        io::atomic_write_file(g.out, writer);
        stats.destination = g.out;
    }
    stats.rows = static_cast<long long>(table.rows.size());
}

inline void emit_raw(const GlobalOptions& g, const std::function<void(std::ostream&)>& writer,
                     long long rows, RunStats& stats) {
    if (g.out.empty()) {
        writer(std::cout);
        stats.destination = "stdout";
    } else {
        io::atomic_write_file(g.out, writer);
        stats.destination = g.out;
    }
    stats.rows = rows;
}

inline std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : text) {
        if (ch == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    parts.push_back(cur);
    return parts;
}

inline std::pair<double, double> parse_window(const std::string& text) {
    const auto parts = split(text, ',');
    if (parts.size() != 2)
        throw std::invalid_argument("window must be 'EMIN,EMAX', got '" + text + "'");
    const double lo = std::stod(parts[0]), hi = std::stod(parts[1]);
    if (!(lo < hi)) throw std::invalid_argument("window requires EMIN < EMAX");
    return {lo, hi};
}

inline Spectrum make_spectrum(Method method, double hbar, const GlobalOptions& g, int basis_size,
                              double scale, double e_max) {
    const PotentialParams params = g.params(hbar);
    if (method == Method::ebk) return ebk::ebk_spectrum(hbar, params, e_max);
    solvers::SolverConfig cfg;
    cfg.method = method;
    cfg.basis_size = basis_size;
    cfg.scale = scale;
    if (e_max > 0.0) cfg.eig_count = basis_size > 0 ? basis_size : 0;  // resolved after sizing
    Spectrum spec = solvers::solve_spectrum(cfg, params);
    if (e_max > 0.0) {
        // keep everything up to e_max; rerun with full count if the default cut too early
        if (!spec.levels.empty() && spec.levels.back().energy < e_max) {
            cfg.eig_count = spec.metadata.basis_size;
            spec = solvers::solve_spectrum(cfg, params);
        }
        while (!spec.levels.empty() && spec.levels.back().energy > e_max) spec.levels.pop_back();
    }
    return spec;
}

// ---------------------------------------------------------------- spectrum

inline void cmd_spectrum(const GlobalOptions& g, const std::string& provenance,
                         const std::string& method_str, const std::string& hbar_str, int basis_size,
                         double omega, double e_max, RunStats& stats) {
    const Method method = parse_method(method_str);
    const Rational hbar = Rational::parse(hbar_str);
    const Spectrum spec = make_spectrum(method, hbar.value(), g, basis_size, omega, e_max);
    const bool json = g.format == "json";
    emit_raw(
        g,
        [&](std::ostream& os) {
            if (json)
                io::write_spectrum_json(os, spec);
            else
                io::write_spectrum_csv(os, spec, provenance);
        },
        static_cast<long long>(spec.levels.size()), stats);
}

// ---------------------------------------------------------------- count

inline void cmd_count(const GlobalOptions& g, const std::string& provenance,
                      const std::string& hbar_list, RunStats& stats) {
    Table table;
    table.columns.push_back("hbar");
    std::vector<std::string> row{"count"};
    for (const std::string& tok : split(hbar_list, ',')) {
        const Rational hbar = Rational::parse(tok);
        table.columns.push_back(hbar.str());
        row.push_back(std::to_string(ebk::count_states_below(hbar.value(), g.params(hbar.value()))));
    }
    table.rows.push_back(std::move(row));
    emit(g, provenance, table, stats);
}

// ---------------------------------------------------------------- period

inline void cmd_period(const GlobalOptions& g, const std::string& provenance, double emin,
                       double emax, int samples, RunStats& stats) {
    if (samples < 1) throw std::invalid_argument("period: samples must be >= 1");
    if (!(emin <= emax)) throw std::invalid_argument("period: require emin <= emax");
    const PotentialParams params = g.params(1.0);
    const double v_min = derived_constants(params).v_min;
    Table table;
    table.columns = {"E", "T_quadrature", "T_elliptic", "T_asymptotic"};
    for (int i = 0; i < samples; ++i) {
        const double e =
            samples == 1 ? emin : emin + (emax - emin) * static_cast<double>(i) / (samples - 1);
        std::vector<std::string> row(4);
        row[0] = io::format_g15(e);
        if (e > v_min && e != 0.0) {
            row[1] = io::format_g15(classical::period_quadrature(e, params));
            if (e < 0.0) {
                row[2] = io::format_g15(classical::period_elliptic(e, params));
                row[3] = io::format_g15(classical::period_asymptotic(e, params));
            }
        }
        table.rows.push_back(std::move(row));
    }
    emit(g, provenance, table, stats);
}

// ---------------------------------------------------------------- dos

inline void cmd_dos(const GlobalOptions& g, const std::string& provenance,
                    const std::string& method_str, const std::string& hbar_str, double e_max,
                    const std::string& window_str, RunStats& stats) {
    const Method method = parse_method(method_str);
    const Rational hbar = Rational::parse(hbar_str);
    std::optional<std::pair<double, double>> window;
    if (!window_str.empty()) window = parse_window(window_str);
    const PotentialParams params = g.params(hbar.value());
    const Spectrum spec = make_spectrum(method, hbar.value(), g, 0, 0.0, e_max);
    Table table;
    table.columns = {"e_bar", "scaled_density", "branch", "T_classical"};
    for (const analysis::DosPoint& pt : analysis::density_of_states(spec)) {
        if (window && (pt.e_bar < window->first || pt.e_bar > window->second)) continue;
        std::vector<std::string> row(4);
        row[0] = io::format_g15(pt.e_bar);
        row[1] = io::format_g15(pt.scaled_density);
        row[2] = pt.below_critical ? "\"below\"" : "\"above\"";
        const double t = classical::period_quadrature(pt.e_bar, params);
        row[3] = io::format_g15(pt.below_critical ? 2.0 * t : t);  // Fig-2 factor-2 convention
        table.rows.push_back(std::move(row));
    }
    if (g.format != "json")
        for (auto& row : table.rows) row[2] = row[2].substr(1, row[2].size() - 2);
    emit(g, provenance, table, stats);
}

// ---------------------------------------------------------------- tunneling

inline void cmd_tunneling(const GlobalOptions& g, const std::string& provenance,
                          const std::string& hbar_list, double gap_floor, bool half_barrier,
                          bool textbook, RunStats& stats) {
    analysis::WkbOptions opt{half_barrier, textbook};
    Table table;
    table.columns = {"hbar", "e_bar", "gap", "transmission"};
    for (const std::string& tok : split(hbar_list, ',')) {
        const Rational hbar = Rational::parse(tok);
        const PotentialParams params = g.params(hbar.value());
        const Spectrum spec = solvers::solve_spectrum({Method::sinc, 0, 0.0, 0}, params);
        for (const analysis::ParityPair& pp : analysis::parity_pairs(spec)) {
            if (!(pp.gap > gap_floor)) continue;
            std::vector<std::string> row(4);
            row[0] = g.format == "json" ? '"' + hbar.str() + '"' : hbar.str();
            row[1] = io::format_g15(pp.e_bar);
            row[2] = io::format_g15(pp.gap);
            row[3] = io::format_g15(
                analysis::wkb_transmission(pp.e_bar, hbar.value(), params, opt).value);
            table.rows.push_back(std::move(row));
        }
    }
    emit(g, provenance, table, stats);
}

// ---------------------------------------------------------------- lyapunov

inline void cmd_lyapunov(const GlobalOptions& g, const std::string& provenance,
                         const std::string& method_str, const std::string& hbar_str,
                         const std::string& window_str, RunStats& stats) {
    const Method method = parse_method(method_str);
    const Rational hbar = Rational::parse(hbar_str);
    const auto window = window_str.empty() ? std::pair<double, double>{-1e-2, -1e-5}
                                           : parse_window(window_str);
    const PotentialParams params = g.params(hbar.value());
    const Spectrum spec = make_spectrum(method, hbar.value(), g, 0, 0.0, 0.0);
    std::vector<std::pair<double, double>> pts;
    for (const analysis::DosPoint& pt : analysis::density_of_states(spec)) {
        if (!pt.below_critical) continue;
        if (pt.e_bar < window.first || pt.e_bar > window.second) continue;
        pts.emplace_back(std::log(std::abs(pt.e_bar)), pt.scaled_density);
    }
    const analysis::FitResult fit = analysis::fit_loglinear(pts);
    const classical::DosLine line = classical::dos_asymptote_line(params);
    (void)provenance;
    emit_raw(
        g,
        [&](std::ostream& os) {
            os << "{\"slope\": " << io::format_g15(fit.slope)
               << ", \"intercept\": " << io::format_g15(fit.intercept)
               << ", \"r2\": " << io::format_g15(fit.r_squared)
               << ", \"theory_slope\": " << io::format_g15(line.slope)
               << ", \"theory_intercept\": " << io::format_g15(line.intercept) << "}\n";
        },
        1, stats);
}

// ---------------------------------------------------------------- converge

inline void cmd_converge(const GlobalOptions& g, const std::string& provenance,
                         const std::string& method_str, const std::string& hbar_str, int level,
                         const std::string& sizes_str, int ref_size, double omega,
                         RunStats& stats) {
    const Method method = parse_method(method_str);
    const Rational hbar = Rational::parse(hbar_str);
    std::vector<int> sizes;
    for (const std::string& tok : split(sizes_str, ',')) sizes.push_back(std::stoi(tok));
    if (method == Method::sinc) {
        for (int& s : sizes) s |= 1;
        ref_size |= 1;
    }
    const std::optional<double> scale =
        omega > 0.0 ? std::optional<double>(omega) : std::nullopt;
    const auto points = analysis::convergence_study(method, scale, level, hbar.value(), sizes,
                                                    ref_size, g.params(hbar.value()));
    Table table;
    table.columns = {"N", "delta_e"};
    for (const analysis::ConvergencePoint& pt : points) {
        std::vector<std::string> row(2);
        row[0] = std::to_string(pt.basis_size);
        if (pt.delta_e) row[1] = io::format_g15(*pt.delta_e);
        table.rows.push_back(std::move(row));
    }
    emit(g, provenance, table, stats);
}

}  // namespace detail

int execute(const std::vector<std::string>& args, std::ostream& err);

namespace detail {

// ---------------------------------------------------------------- sweep

inline int cmd_sweep(const GlobalOptions& g, const std::string& plan_path, std::ostream& err) {
    std::ifstream in(plan_path);
    if (!in) throw std::invalid_argument("sweep: cannot open plan file '" + plan_path + "'");
    nlohmann::json plan;
    try {
        in >> plan;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("sweep: malformed plan JSON: " + std::string(e.what()));
    }
    if (!plan.contains("tasks") || !plan["tasks"].is_array())
        throw std::invalid_argument("sweep: plan must contain a 'tasks' array");
    std::vector<std::vector<std::string>> tasks;
    for (const auto& t : plan["tasks"]) {
        if (!t.contains("argv") || !t["argv"].is_array())
            throw std::invalid_argument("sweep: each task needs an 'argv' array");
        std::vector<std::string> argv;
        for (const auto& a : t["argv"]) argv.push_back(a.get<std::string>());
        if (!argv.empty() && argv[0] == "sweep")
            throw std::invalid_argument("sweep: nested sweeps are not supported");
        tasks.push_back(std::move(argv));
    }
    if (tasks.empty()) {
        err << "sweep: empty plan, nothing to do\n";
        return 0;
    }

    struct TaskOutcome {
        int code = 0;
        std::string log;
        bool skipped = false;
    };
    std::vector<TaskOutcome> outcomes(tasks.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    const unsigned nworkers = std::min<std::size_t>(std::max(1u, g.workers), tasks.size());
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            if (g.fail_fast && abort.load()) {
                outcomes[i].skipped = true;
                continue;
            }
            std::ostringstream log;
            int code = 3;
            try {
                code = execute(tasks[i], log);
            } catch (const std::exception& e) {
                log << "unexpected error: " << e.what() << "\n";
            }
            outcomes[i].code = code;
            outcomes[i].log = log.str();
            if (code != 0) abort.store(true);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < nworkers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    int exit_code = 0;
    std::size_t failed = 0;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (outcomes[i].skipped) {
            err << "task " << i << ": skipped (fail-fast)\n";
            continue;
        }
        err << "task " << i << " [" << join_args(tasks[i]) << "]: "
            << (outcomes[i].code == 0 ? "ok" : "FAILED") << "\n";
        if (!outcomes[i].log.empty()) err << outcomes[i].log;
        if (outcomes[i].code != 0) {
            ++failed;
            if (exit_code == 0) exit_code = outcomes[i].code;
        }
    }
    err << "sweep: " << (tasks.size() - failed) << "/" << tasks.size() << " tasks succeeded\n";
    return exit_code;
}

}  // namespace detail

/// Parses and executes one CLI invocation (subcommand + flags, no program
/// name).  Summaries and diagnostics go to `err`; data to --out or stdout.
/// Exit codes: 0 success, 2 argument/usage error, 3 numeric failure.
inline int execute(const std::vector<std::string>& args, std::ostream& err) {
    using detail::GlobalOptions;
    GlobalOptions g;
    detail::RunStats stats;
    const std::string provenance = "qdw " + std::string(version) + " | " + detail::join_args(args);

    CLI::App app{"quartic double well spectra: variational bases, EBK, and quasiclassical analyses"};
    app.fallthrough();
    app.add_option("--a", g.a, "quadratic coefficient (a < 0)")->capture_default_str();
    app.add_option("--b", g.b, "quartic coefficient (b > 0)")->capture_default_str();
    app.add_option("--out", g.out, "output path (stdout when omitted; writes are atomic)");
    app.add_option("--format", g.format, "output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    app.add_option("--workers", g.workers, "worker pool size for sweep")->capture_default_str();
    app.add_flag("--fail-fast", g.fail_fast, "stop scheduling sweep tasks after a failure");
    app.require_subcommand(1);

    std::string method = "sinc", hbar, hbar_list, window, sizes, plan;
    int basis_size = 0, samples = 100, level = 0, ref_size = 2000;
    double omega = 0.0, e_max = 0.0, emin = 0.0, emax_p = 0.0, gap_floor = 1e-9;
    bool half_barrier = false, textbook = false;

    CLI::App* sc_spectrum = app.add_subcommand("spectrum", "bound spectrum by one method");
    sc_spectrum->add_option("--method", method, "sinc|hermite|lmm|ebk")->capture_default_str();
    sc_spectrum->add_option("--hbar", hbar, "Planck constant, rational literal like 1/2000")
        ->required();
    sc_spectrum->add_option("--basis-size", basis_size, "matrix size (0 = auto)");
    sc_spectrum->add_option("--omega", omega, "basis scale Omega or mesh scale h (0 = trace-optimal)");
    sc_spectrum->add_option("--emax", e_max, "include levels up to this energy (ebk; default 0)");

    CLI::App* sc_count = app.add_subcommand("count", "number of states below the critical energy");
    sc_count->add_option("--hbar", hbar_list, "comma-separated rational hbar values")->required();

    CLI::App* sc_period = app.add_subcommand("period", "classical period table");
    sc_period->add_option("--emin", emin, "lowest energy")->required();
    sc_period->add_option("--emax", emax_p, "highest energy")->required();
    sc_period->add_option("--samples", samples, "row count")->capture_default_str();

    CLI::App* sc_dos = app.add_subcommand("dos", "density of states vs the classical period");
    sc_dos->add_option("--hbar", hbar, "rational hbar")->required();
    sc_dos->add_option("--method", method, "sinc|hermite|lmm|ebk")->capture_default_str();
    sc_dos->add_option("--emax", e_max, "spectrum cutoff (enables the above-critical branch)");
    sc_dos->add_option("--window", window, "keep e_bar in EMIN,EMAX");

    CLI::App* sc_tun = app.add_subcommand("tunneling", "parity gaps and WKB transmission");
    sc_tun->add_option("--hbar", hbar_list, "comma-separated rational hbar values")->required();
    sc_tun->add_option("--gap-floor", gap_floor, "drop pairs with gaps below this")
        ->capture_default_str();
    sc_tun->add_flag("--barrier-halfwidth", half_barrier, "integrate [0,x1] instead of [-x1,x1]");
    sc_tun->add_flag("--textbook-hbar", textbook, "use the 1/hbar exponent instead of 1/sqrt(hbar)");

    CLI::App* sc_lyap = app.add_subcommand("lyapunov", "log-linear fit of the near-critical DOS");
    sc_lyap->add_option("--hbar", hbar, "rational hbar")->required();
    sc_lyap->add_option("--method", method = "ebk", "spectrum source")->capture_default_str();
    sc_lyap->add_option("--window", window, "fit window, default -1e-2,-1e-5");

    CLI::App* sc_conv = app.add_subcommand("converge", "Delta E_n(N) against the N=ref reference");
    sc_conv->add_option("--method", method, "sinc|hermite|lmm")->capture_default_str();
    sc_conv->add_option("--hbar", hbar, "rational hbar")->required();
    sc_conv->add_option("--level", level, "level index n")->required();
    sc_conv->add_option("--sizes", sizes, "comma-separated basis sizes")->required();
    sc_conv->add_option("--ref", ref_size, "reference basis size")->capture_default_str();
    sc_conv->add_option("--omega", omega, "pin the scale (0 = trace-optimal)");

    CLI::App* sc_sweep = app.add_subcommand("sweep", "run a JSON plan of tasks over a worker pool");
    sc_sweep->add_option("--plan", plan, "plan file: {\"tasks\":[{\"argv\":[...]},...]}")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "argument error: " << e.what() << "\n";
        return 2;
    }

    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (sc_spectrum->parsed()) {
            stats.subcommand = "spectrum";
            detail::cmd_spectrum(g, provenance, method, hbar, basis_size, omega, e_max, stats);
        } else if (sc_count->parsed()) {
            stats.subcommand = "count";
            detail::cmd_count(g, provenance, hbar_list, stats);
        } else if (sc_period->parsed()) {
            stats.subcommand = "period";
            detail::cmd_period(g, provenance, emin, emax_p, samples, stats);
        } else if (sc_dos->parsed()) {
            stats.subcommand = "dos";
            detail::cmd_dos(g, provenance, method, hbar, e_max, window, stats);
        } else if (sc_tun->parsed()) {
            stats.subcommand = "tunneling";
            detail::cmd_tunneling(g, provenance, hbar_list, gap_floor, half_barrier, textbook, stats);
        } else if (sc_lyap->parsed()) {
            stats.subcommand = "lyapunov";
            detail::cmd_lyapunov(g, provenance, method, hbar, window, stats);
        } else if (sc_conv->parsed()) {
            stats.subcommand = "converge";
            detail::cmd_converge(g, provenance, method, hbar, level, sizes, ref_size, omega, stats);
        } else if (sc_sweep->parsed()) {
            return detail::cmd_sweep(g, plan, err);
        }
    } catch (const numeric_error& e) {
        err << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        err << "argument error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        err << "argument error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "numeric error: " << e.what() << "\n";
        return 3;
    }
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0)
            .count();
    err << stats.subcommand << ": wrote " << stats.rows << " rows to " << stats.destination << " ("
        << ms << " ms)\n";
    return 0;
}

/// argv entry point; argv[0] is the program name.
inline int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return execute(args, std::cerr);
}

}  // namespace qdw::cli
