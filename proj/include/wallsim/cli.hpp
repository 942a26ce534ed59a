#pragma once

// `wallsim` command-line front end. Exit status: 0 success, 1 domain or
// solver error, 2 usage error.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "wallsim/continuum.hpp"
#include "wallsim/csv_io.hpp"
#include "wallsim/discrete_energy.hpp"
#include "wallsim/dynamics.hpp"
#include "wallsim/error.hpp"
#include "wallsim/harness.hpp"
#include "wallsim/regime.hpp"
#include "wallsim/selftest.hpp"
#include "wallsim/transport.hpp"

namespace wallsim::cli {

struct Options {
    int regime = 0;     ///< 0: implied by alpha
    std::string alpha;  ///< empty: default rule of the regime
    std::size_t n = 20;
    std::size_t kmax = 10;
    double t_end = 1.0;
    std::vector<std::string> times;
    double rtol = SolverSettings{}.rtol;
    double atol = SolverSettings{}.atol;
    std::size_t grid_m = default_cells;
    double grid_L = 0.0;  ///< 0: default_domain_length()
    double cfl = PdeSettings{}.cfl;
    std::string out = ".";
    bool plot = false;
    std::string input;
    std::string density;
    bool continuum = false;
    std::vector<std::string> files;
};

/// inv_sqrt_n | inv_n | const:<c> | power:<c>:<exponent>
inline AlphaRule parse_alpha(const std::string& spec) {
    if (spec == "inv_sqrt_n") return AlphaRule::inv_sqrt_n();
    if (spec == "inv_n") return AlphaRule::inv_n();
    auto num = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used == s.size()) return v;
        } catch (const std::exception&) {
        }
        throw DomainError("--alpha: not a number: '" + s + "'");
    };
    if (spec.rfind("const:", 0) == 0) return AlphaRule::constant(num(spec.substr(6)));
    if (spec.rfind("power:", 0) == 0) {
        const auto rest = spec.substr(6);
        const auto colon = rest.find(':');
        if (colon == std::string::npos) throw DomainError("--alpha power:<c>:<exponent>");
        return AlphaRule::power(num(rest.substr(0, colon)), num(rest.substr(colon + 1)));
    }
    throw DomainError("--alpha must be inv_sqrt_n, inv_n, const:<c> or power:<c>:<e>, got '" + spec + "'");
}

/// The rule used when only --regime is given.
inline AlphaRule default_rule(Regime r) {
    switch (r) {
        case Regime::logarithmic: return AlphaRule::power(1.0, -2.0);
        case Regime::nonlocal: return AlphaRule::inv_n();
        case Regime::quadratic: return AlphaRule::inv_sqrt_n();
        case Regime::effective: return AlphaRule::constant(1.0);
        case Regime::constrained: return AlphaRule::power(1.0, 0.5);
    }
    return AlphaRule::inv_sqrt_n();
}

inline ScalingRegime make_regime(const Options& o) {
    if (!o.alpha.empty()) {
        const auto rule = parse_alpha(o.alpha);
        return o.regime ? ScalingRegime(regime_from_number(o.regime), rule) : ScalingRegime(rule);
    }
    const Regime r = o.regime ? regime_from_number(o.regime) : Regime::quadratic;
    return ScalingRegime(r, default_rule(r));
}

/// inf, 2^<k>, or a decimal number.
inline double parse_time(const std::string& s) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        if (s.rfind("2^", 0) == 0) {
            const int e = std::stoi(s.substr(2), &used);
            if (used == s.size() - 2) return std::ldexp(1.0, e);
        } else {
            const double v = std::stod(s, &used);
            if (used == s.size()) return v;
        }
    } catch (const std::exception&) {
    }
    throw DomainError("--times: cannot parse '" + s + "'");
}

inline std::vector<double> parse_times(const std::vector<std::string>& items) {
    std::vector<double> out;
    for (const auto& item : items) {
        std::stringstream ss(item);
        for (std::string part; std::getline(ss, part, ',');) {
            if (!part.empty()) out.push_back(parse_time(part));
        }
    }
    return out;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

/// Everything that influences a subcommand's result, one key per line.
inline std::string canonical_config(const std::string& subcommand, const Options& o) {
    std::ostringstream s;
    s.precision(17);
    s << "subcommand=" << subcommand << '\n';
    s << "regime=" << o.regime << "\nalpha=" << o.alpha << '\n';
    s << "n=" << o.n << "\nkmax=" << o.kmax << "\nt-end=" << o.t_end << '\n';
    s << "times=";
    for (double t : parse_times(o.times)) s << t << ';';
    s << "\nrtol=" << o.rtol << "\natol=" << o.atol << "\ngrid-m=" << o.grid_m << "\ngrid-L=" << o.grid_L
      << "\ncfl=" << o.cfl << "\ninput=" << o.input << "\ndensity=" << o.density
      << "\ncontinuum=" << o.continuum << "\nfiles=";
    for (const auto& f : o.files) s << f << ';';
    s << '\n';
    return s.str();
}

inline std::filesystem::path output_path(const std::string& subcommand, const Options& o,
                                         const std::string& suffix = ".csv") {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(fnv1a(canonical_config(subcommand, o))));
    std::filesystem::create_directories(o.out);
    return std::filesystem::path(o.out) / (subcommand + "-" + hex + suffix);
}

namespace detail {

inline SolverSettings solver_settings(const Options& o) {
    SolverSettings s;
    s.rtol = o.rtol;
    s.atol = o.atol;
    s.validate();
    return s;
}

inline std::ofstream open_output(const std::filesystem::path& p) {
    std::ofstream f(p);
    if (!f) throw DomainError("cannot write " + p.string());
    return f;
}

inline WallConfiguration start_configuration(const Options& o) {
    if (!o.input.empty()) return as_configuration(io::read_measure_file(o.input));
    return initial_condition(o.n);
}

inline std::string num(double v) { return format_number(v); }

inline int simulate(const Options& o, std::ostream& out) {
    const auto regime = make_regime(o);
    std::vector<double> times = o.times.empty() ? std::vector<double>{o.t_end} : parse_times(o.times);
    if (times.empty() || times.front() != 0.0) times.insert(times.begin(), 0.0);
    const auto traj = evolve(start_configuration(o), regime, times, solver_settings(o));
    const auto path = output_path("simulate", o);
    auto f = open_output(path);
    f << 't';
    for (std::size_t i = 1; i <= traj.states.front().size(); ++i) f << ",x_" << i;
    f << '\n';
    for (std::size_t j = 0; j < traj.states.size(); ++j) {
        f << num(traj.times[j]);
        for (double x : traj.states[j].positions()) f << ',' << num(x);
        f << '\n';
    }
    out << path.string() << '\n';
    return 0;
}

inline int equilibrium_cmd(const Options& o, std::ostream& out, std::ostream& err) {
    const auto result = solve_equilibrium(start_configuration(o), make_regime(o), solver_settings(o));
    const auto path = output_path("equilibrium", o);
    auto f = open_output(path);
    io::write_measure(as_empirical(result.state), f);
    err << "newton iterations " << result.iterations << ", residual " << num(result.residual) << '\n';
    out << path.string() << '\n';
    return 0;
}

inline int rate_table_cmd(const Options& o, std::ostream& out, std::ostream& err) {
    ExperimentConfig cfg;
    cfg.alpha_rule = make_regime(o).rule();
    cfg.k_max = o.kmax;
    if (!o.times.empty()) cfg.sample_times = parse_times(o.times);
    cfg.solver = solver_settings(o);
    cfg.output_dir = o.out;
    const auto table = rate_table(cfg);
    for (const auto& d : table.diagnostics) err << "diagnostic: " << d << '\n';
    const auto path = output_path("rate-table", o);
    auto f = open_output(path);
    write_rate_csv(table, f);
    out << path.string() << '\n';
    if (o.plot) {
        const auto svg = output_path("rate-table", o, ".svg");
        auto g = open_output(svg);
        write_rate_svg(table, g);
        out << svg.string() << '\n';
    }
    return 0;
}

inline DensityGrid density_argument(const Options& o) {
    const double length = o.grid_L > 0.0 ? o.grid_L : default_domain_length();
    if (o.density.empty() || o.density == "uniform") {
        return DensityGrid::uniform(length, o.grid_m, pileup_support());
    }
    if (o.density == "steady") return steady_state_regime3(length, o.grid_m);
    auto d = io::read_distribution_file(o.density);
    if (auto* g = std::get_if<DensityGrid>(&d)) return std::move(*g);
    throw DomainError(o.density + ": expected a density (L,m header)");
}

inline int pde_cmd(const Options& o, std::ostream& out) {
    PdeSettings ps;
    ps.cfl = o.cfl;
    ps.sample_times = o.times.empty() ? std::vector<double>{o.t_end} : parse_times(o.times);
    const auto run = pde_run(density_argument(o), make_regime(o), ps);
    const auto path = output_path("pde", o);
    auto f = open_output(path);
    io::write_density(run.snapshots.back(), f);
    out << path.string() << '\n';
    if (run.snapshots.size() > 1) {
        for (std::size_t j = 0; j < run.snapshots.size(); ++j) {
            const auto p = output_path("pde", o, "-" + std::to_string(j) + ".csv");
            auto g = open_output(p);
            io::write_density(run.snapshots[j], g);
            out << p.string() << '\n';
        }
    }
    return 0;
}

inline int energy_cmd(const Options& o, std::ostream& out) {
    const auto regime = make_regime(o);
    double e;
    if (!o.density.empty()) {
        e = continuum_energy(density_argument(o), regime);
    } else if (!o.input.empty() && o.continuum) {
        e = continuum_energy(io::read_measure_file(o.input), regime);
    } else {
        e = energy(start_configuration(o), regime);
    }
    out << num(e) << '\n';
    return 0;
}

inline QuantileFunction quantile_of(const io::Distribution& d) {
    if (const auto* mu = std::get_if<EmpiricalMeasure>(&d)) return QuantileFunction::from_measure(*mu);
    return std::get<DensityGrid>(d).quantile();
}

inline int w2_cmd(const Options& o, std::ostream& out) {
    if (o.files.size() != 2) throw CLI::ValidationError("w2", "expects exactly two input files");
    const auto a = io::read_distribution_file(o.files[0]);
    const auto b = io::read_distribution_file(o.files[1]);
    const auto* ma = std::get_if<EmpiricalMeasure>(&a);
    const auto* mb = std::get_if<EmpiricalMeasure>(&b);
    const double d = ma && mb ? w2_empirical(*ma, *mb) : w2_quantile(quantile_of(a), quantile_of(b));
    out << num(d) << '\n';
    return 0;
}

inline int selftest_cmd(std::ostream& out) {
    bool all = true;
    for (const auto& c : run_selftest()) {
        out << (c.passed ? "PASS " : "FAIL ") << c.name << " (" << c.detail << ")\n";
        all = all && c.passed;
    }
    return all ? 0 : 1;
}

}  // namespace detail

/// Parses and runs one invocation; args excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    CLI::App app{"Dislocation wall gradient flows: simulation, energies, transport and rate tables",
                 "wallsim"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "Read options from a key=value config file with sections");
    bool dump = false;
    app.add_flag("--dump-config", dump, "Print the effective configuration and exit")->configurable(false);

    Options o;
    app.option_defaults()->always_capture_default();
    app.add_option("--regime", o.regime, "Scaling regime 1..5 (0: implied by --alpha)")
        ->check(CLI::Range(0, 5));
    app.add_option("--alpha", o.alpha, "inv_sqrt_n | inv_n | const:<c> | power:<c>:<e>");
    app.add_option("--n", o.n, "Number of walls")->check(CLI::PositiveNumber);
    app.add_option("--kmax", o.kmax, "Largest k in the n_k schedule");
    app.add_option("--t-end", o.t_end, "Final time")->check(CLI::PositiveNumber);
    app.add_option("--times", o.times, "Sample times, comma separated (inf, 2^k allowed)")->delimiter(',');
    app.add_option("--rtol", o.rtol, "Relative tolerance of the ODE solver");
    app.add_option("--atol", o.atol, "Absolute tolerance of the ODE solver");
    app.add_option("--grid-m", o.grid_m, "PDE cells")->check(CLI::PositiveNumber);
    app.add_option("--grid-L", o.grid_L, "PDE domain length (0: three pile-up lengths)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--cfl", o.cfl, "PDE CFL factor in (0,1)");
    app.add_option("--out", o.out, "Output directory");
    app.add_flag("--plot", o.plot, "Also write an SVG plot (rate-table)");
    app.add_option("--input", o.input, "Measure CSV (position,weight) used as configuration");
    app.add_option("--density", o.density, "steady | uniform | density CSV (L,m)");
    app.add_flag("--continuum", o.continuum, "energy: evaluate the continuum energy of --input");

    auto* simulate = app.add_subcommand("simulate", "Integrate one trajectory, CSV of states");
    auto* equilibrium = app.add_subcommand("equilibrium", "Newton equilibrium, CSV of x*");
    auto* rates = app.add_subcommand("rate-table", "Successive-resolution rate table");
    auto* pde = app.add_subcommand("pde", "Solve the regime PDE, density snapshots CSV");
    auto* energy = app.add_subcommand("energy", "Discrete or continuum energy of an input");
    auto* w2 = app.add_subcommand("w2", "W2 distance between two input files");
    w2->add_option("files", o.files, "Two measure or density CSV files")->expected(2)->required()->configurable(false);
    auto* selftest = app.add_subcommand("selftest", "Run the built-in oracle checks");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }
    if (dump) {
        out << app.config_to_str(true, false);
        return 0;
    }

    try {
        if (simulate->parsed()) return detail::simulate(o, out);
        if (equilibrium->parsed()) return detail::equilibrium_cmd(o, out, err);
        if (rates->parsed()) return detail::rate_table_cmd(o, out, err);
        if (pde->parsed()) return detail::pde_cmd(o, out);
        if (energy->parsed()) return detail::energy_cmd(o, out);
        if (w2->parsed()) return detail::w2_cmd(o, out);
        if (selftest->parsed()) return detail::selftest_cmd(out);
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    std::vector<std::string> args(argv + (argc > 0 ? 1 : 0), argv + argc);
    return run(args, out, err);
}

}  // namespace wallsim::cli
