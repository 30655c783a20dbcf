#include "freqlab/cli.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <thread>

#include <CLI11.hpp>

#include "freqlab/errors.hpp"
#include "freqlab/experiments.hpp"
#include "freqlab/frequency.hpp"
#include "freqlab/io.hpp"
#include "freqlab/modulus.hpp"

namespace freqlab::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string resolution;
    bool refine = false;
    int jobs = 1;
    std::string target;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void only_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

void check_schema(const json& j, const std::string& where) {
    if (!j.is_object() || j.empty()) throw ConfigError(where + ": empty config");
    if (!j.contains("schema_version")) throw ConfigError(where + ": missing 'schema_version'");
    if (j.at("schema_version") != 1) throw ConfigError(where + ": unsupported schema_version " + j.at("schema_version").dump());
}

std::pair<int, int> parse_resolution(const std::string& s) {
    const auto comma = s.find(',');
    if (comma == std::string::npos) throw ConfigError("--resolution expects N_r,N_theta");
    try {
        std::size_t a = 0, b = 0;
        const int n_r = std::stoi(s.substr(0, comma), &a);
        const int n_t = std::stoi(s.substr(comma + 1), &b);
        if (a != comma || b != s.size() - comma - 1 || n_r < 16 || n_t < 16) throw std::invalid_argument(s);
        return {n_r, n_t};
    } catch (const std::logic_error&) {
        throw ConfigError("--resolution expects two integers >= 16, got '" + s + "'");
    }
}

json load_config(const std::string& path) {
    if (path.empty()) throw ConfigError("--config is required");
    return io::read_json_file(path);
}

/// Writes a file under `out`, records its relative path.
struct Writer {
    fs::path root;
    std::vector<std::string> written;
    std::mutex mutex;

    void put(const std::string& rel, const std::string& contents) {
        const fs::path p = root / rel;
        fs::create_directories(p.parent_path());
        io::write_atomic(p, contents);
        std::lock_guard lock(mutex);
        written.push_back(rel);
    }
};

json manifest(const std::string& command, const std::string& config_hash, const Common& c, json resolutions,
              std::vector<std::string> outputs) {
    std::sort(outputs.begin(), outputs.end());
    return {{"tool", "freqlab"},
            {"version", kVersion},
            {"command", command},
            {"config_hash", config_hash},
            {"seed", c.seed ? json(*c.seed) : json(nullptr)},
            {"refine", c.refine},
            {"resolutions", std::move(resolutions)},
            {"outputs", std::move(outputs)},
            {"wall_clock", "timing.json"}};
}

// ---------------------------------------------------------------- modulus

int cmd_modulus(const Common& c, std::ostream& out) {
    const auto t0 = Clock::now();
    const json j = load_config(c.config);
    check_schema(j, c.config);
    only_keys(j, {"schema_version", "modulus", "C_M", "samples"}, "modulus config");
    if (!j.contains("modulus")) throw ConfigError("modulus config: missing 'modulus'");
    const Modulus m = Modulus::from_json(j.at("modulus"));
    const double C_M = j.value("C_M", 4.0);
    const auto samples = j.value("samples", std::size_t{24});

    const auto osg = classify_osgood(m);
    const auto phi = check_phi_integrable(m);
    const auto sub = check_submultiplicative_psi(m, C_M, samples);
    json report{{"modulus", m.to_json()},
                {"verdict", to_string(osg.verdict)},
                {"osgood", osg.to_json()},
                {"phi_integrable", phi.to_json()},
                {"psi_submultiplicative", sub.to_json()}};

    io::CsvTable partials({"k", "osgood_partial", "phi_partial"});
    for (std::size_t k = 0; k < osg.partial_integrals.size(); ++k)
        partials.add_row({std::to_string(k + 1), io::format_double(osg.partial_integrals[k]),
                          k < phi.partial_integrals.size() ? io::format_double(phi.partial_integrals[k]) : ""});

    Writer w{c.out, {}, {}};
    w.put("modulus_report.json", io::dump_json(report));
    w.put("partial_integrals.csv", partials.str());
    auto outputs = w.written;
    w.put("manifest.json", io::dump_json(manifest("modulus", sha256_hex(j.dump()), c, json::array(), outputs)));
    w.put("timing.json", io::dump_json({{"wall_seconds", seconds_since(t0)}}));
    out << "modulus " << to_string(m.kind()) << ": " << to_string(osg.verdict) << ", phi integrable "
        << (phi.finite ? "yes" : "no") << ", psi submultiplicative (C_M=" << io::format_double(C_M) << ") "
        << (sub.holds ? "yes" : "no") << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- solve

int cmd_solve(const Common& c, std::ostream& out, std::ostream& err) {
    const auto t0 = Clock::now();
    const json j = load_config(c.config);
    check_schema(j, c.config);
    only_keys(j, {"schema_version", "field", "boundary", "grid", "seed", "profile", "solver"}, "solve config");
    for (const char* key : {"field", "boundary", "grid"})
        if (!j.contains(key)) throw ConfigError(std::string("solve config: missing '") + key + "'");
    only_keys(j.at("grid"), {"n_r", "n_theta"}, "grid");
    int n_r = j.at("grid").value("n_r", 0), n_t = j.at("grid").value("n_theta", 0);
    if (!c.resolution.empty()) std::tie(n_r, n_t) = parse_resolution(c.resolution);
    if (n_r < 16 || n_t < 16) throw ConfigError("grid: n_r and n_theta must be >= 16");
    const std::uint64_t seed = c.seed ? *c.seed : j.value("seed", std::uint64_t{0});
    double r_lo = 0.1, r_hi = 0.9;
    if (j.contains("profile")) {
        only_keys(j.at("profile"), {"r_lo", "r_hi"}, "profile");
        r_lo = j.at("profile").value("r_lo", r_lo);
        r_hi = j.at("profile").value("r_hi", r_hi);
    }
    if (!(0 < r_lo && r_lo < r_hi && r_hi <= 1)) throw ConfigError("profile: need 0 < r_lo < r_hi <= 1");
    SolveOptions opts;
    if (j.contains("solver")) {
        only_keys(j.at("solver"), {"tolerance", "max_iterations"}, "solver");
        opts.tolerance = j.at("solver").value("tolerance", opts.tolerance);
        opts.max_iterations = j.at("solver").value("max_iterations", opts.max_iterations);
    }
    const auto f = CoefficientField::from_json(j.at("field"));
    const auto G = PolarGrid::make(n_r, n_t);
    json resolutions = json::array({{n_r, n_t}});

    Writer w{c.out, {}, {}};
    auto solve = [&](const PolarGrid& g) {
        try {
            return cached_solve(f, g, boundary_from_spec(j.at("boundary"), g, seed), opts);
        } catch (const SolverError& e) {
            w.put("solver_error.json", io::dump_json({{"message", e.what()},
                                                      {"residual", e.residual},
                                                      {"iterations", e.iterations},
                                                      {"grid", g.to_json()}}));
            err << "solver log: residual " << io::format_double(e.residual) << " after " << e.iterations
                << " iterations\n";
            throw;
        }
    };
    const auto u = solve(G);
    const auto radii = grid_radii(G, r_lo, r_hi);
    const auto profile = almgren_frequency(u, f, radii);

    std::string csv = profile.to_csv();
    json summary{{"grid", G.to_json()},
                 {"field", f.config()},
                 {"residual", u.residual_norm()},
                 {"iterations", u.iterations()},
                 {"weight", to_string(profile.weight_kind)},
                 {"N_min", *std::min_element(profile.N.begin(), profile.N.end())},
                 {"N_max", *std::max_element(profile.N.begin(), profile.N.end())}};
    if (c.refine) {
        const auto G2 = G.refined();
        resolutions.push_back({G2.n_r(), G2.n_theta()});
        const auto u2 = solve(G2);
        const auto p2 = almgren_frequency(u2, f, radii);
        io::CsvTable t({"r", "D", "H", "N", "N_refined", "delta_N"});
        double worst = 0.0;
        for (std::size_t k = 0; k < radii.size(); ++k) {
            const double d = p2.N[k] - profile.N[k];
            worst = std::max(worst, std::abs(d));
            t.add_row(std::vector<double>{radii[k], profile.D[k], profile.H[k], profile.N[k], p2.N[k], d});
        }
        csv = t.str();
        summary["refined_residual"] = u2.residual_norm();
        summary["max_abs_delta_N"] = worst;
    }
    w.put("solution.fqlgrid", io::serialize_binary_grid(u.to_binary_grid()));
    w.put("profile.csv", csv);
    w.put("profile.svg", profile.to_svg("N(r)"));
    w.put("rings.csv", u.ring_csv());
    w.put("solve_report.json", io::dump_json(summary));
    auto outputs = w.written;
    json hashed = j;
    hashed["effective_grid"] = {n_r, n_t};
    hashed["effective_seed"] = seed;
    w.put("manifest.json", io::dump_json(manifest("solve", sha256_hex(hashed.dump()), c, resolutions, outputs)));
    w.put("timing.json", io::dump_json({{"wall_seconds", seconds_since(t0)}}));
    out << "solve " << n_r << "x" << n_t << ": residual " << io::format_double(u.residual_norm()) << ", N in ["
        << io::format_double(summary["N_min"].get<double>()) << ", " << io::format_double(summary["N_max"].get<double>())
        << "]\n";
    return kExitOk;
}

// ---------------------------------------------------------------- experiment

std::vector<ScenarioConfig> select_scenarios(const Common& c) {
    const auto& names = scenario_names();
    if (!c.target.empty() && c.target != "all" && std::find(names.begin(), names.end(), c.target) == names.end())
        throw ConfigError("unknown scenario '" + c.target + "'");
    std::vector<ScenarioConfig> cfgs;
    if (c.config.empty()) {
        cfgs = default_sweep();
    } else {
        const json j = load_config(c.config);
        check_schema(j, c.config);
        if (j.contains("scenarios")) {
            only_keys(j, {"schema_version", "scenarios"}, "sweep manifest");
            const fs::path dir = fs::path(c.config).parent_path();
            for (const auto& e : j.at("scenarios")) {
                if (e.is_string()) cfgs.push_back(ScenarioConfig::from_json(io::read_json_file(dir / e.get<std::string>())));
                else cfgs.push_back(ScenarioConfig::from_json(e));
            }
        } else {
            cfgs.push_back(ScenarioConfig::from_json(j));
        }
    }
    if (!c.target.empty() && c.target != "all")
        std::erase_if(cfgs, [&](const ScenarioConfig& s) { return s.scenario != c.target; });
    if (cfgs.empty()) throw ConfigError("no scenarios selected");
    std::set<std::string> ids;
    for (const auto& s : cfgs)
        if (!ids.insert(s.id).second) throw ConfigError("duplicate scenario id '" + s.id + "'");

    std::optional<std::pair<int, int>> res;
    if (!c.resolution.empty()) res = parse_resolution(c.resolution);
    for (auto& s : cfgs) {
        if (c.seed) s.seed = *c.seed;
        if (res) std::tie(s.n_r, s.n_theta) = *res;
        if (c.refine) {
            s.n_r *= 2;
            s.n_theta *= 2;
        }
    }
    return cfgs;
}

struct JobResult {
    std::optional<ExperimentReport> report;
    std::string error;
    bool solver_error = false;
    double seconds = 0.0;
};

int cmd_experiment(const Common& c, std::ostream& out, std::ostream& err) {
    const auto t0 = Clock::now();
    const auto cfgs = select_scenarios(c);
    Writer w{c.out, {}, {}};
    std::vector<JobResult> results(cfgs.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;

    auto worker = [&] {
        for (std::size_t i = next++; i < cfgs.size(); i = next++) {
            const auto& cfg = cfgs[i];
            const auto start = Clock::now();
            JobResult& r = results[i];
            const std::string dir = "scenarios/" + cfg.id + "/";
            try {
                r.report = run_scenario(cfg);
                w.put(dir + "report.json", io::dump_json(r.report->to_json()));
                w.put(dir + "margins.csv", r.report->margins_csv());
                w.put(dir + "margins.svg", r.report->margins_svg());
            } catch (const SolverError& e) {
                r.error = e.what();
                r.solver_error = true;
            } catch (const std::exception& e) {
                r.error = e.what();
            }
            w.put(dir + "config.json", io::dump_json(cfg.to_json()));
            r.seconds = seconds_since(start);
            std::lock_guard lock(log_mutex);
            err << "[" << cfg.id << "] " << (r.report ? to_string(r.report->verdict) : "error") << " in "
                << io::format_double(std::round(r.seconds * 100) / 100) << " s\n";
        }
    };
    const int jobs = std::clamp(c.jobs, 1, static_cast<int>(cfgs.size()));
    std::vector<std::thread> pool;
    for (int k = 1; k < jobs; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    int code = kExitOk;
    json summary = json::array(), resolutions = json::array(), hashed = json::array();
    io::CsvTable table({"id", "scenario", "verdict", "branch", "reason", "violations", "warnings"});
    io::CsvTable constants({"id", "scenario", "constant", "value", "refined", "relative_change", "stable"});
    json timing{{"per_scenario", json::object()}};
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
        const auto& cfg = cfgs[i];
        const auto& r = results[i];
        hashed.push_back(cfg.to_json());
        resolutions.push_back({{"id", cfg.id}, {"levels", {{cfg.n_r, cfg.n_theta}, {2 * cfg.n_r, 2 * cfg.n_theta}}}});
        timing["per_scenario"][cfg.id] = r.seconds;
        if (!r.report) {
            code = r.solver_error ? kExitSolver : std::max(code, kExitFailure);
            summary.push_back({{"id", cfg.id}, {"scenario", cfg.scenario}, {"verdict", "Error"}, {"reason", r.error}});
            table.add_row({cfg.id, cfg.scenario, "Error", "0", r.error, "0", "0"});
            out << cfg.id << ": ERROR " << r.error << "\n";
            continue;
        }
        const auto& rep = *r.report;
        if (!is_acceptable(rep.verdict) && code == kExitOk) code = kExitFailure;
        json consts = json::object();
        for (const auto& k : rep.constants) {
            consts[k.name] = {{"value", std::isfinite(k.value) ? json(k.value) : json(io::format_double(k.value))},
                              {"stable", k.stable}};
            constants.add_row({cfg.id, cfg.scenario, k.name, io::format_double(k.value),
                               k.refined ? io::format_double(*k.refined) : "", io::format_double(k.relative_change),
                               k.stable ? "1" : "0"});
        }
        summary.push_back({{"id", cfg.id},
                           {"scenario", cfg.scenario},
                           {"verdict", to_string(rep.verdict)},
                           {"branch", is_branch(rep.verdict)},
                           {"reason", rep.reason},
                           {"violations", rep.violations},
                           {"warnings", rep.warnings.size()},
                           {"constants", consts}});
        table.add_row({cfg.id, cfg.scenario, to_string(rep.verdict), is_branch(rep.verdict) ? "1" : "0", rep.reason,
                       std::to_string(rep.violations.size()), std::to_string(rep.warnings.size())});
        out << cfg.id << ": " << to_string(rep.verdict);
        if (is_branch(rep.verdict)) out << " [branch] " << rep.reason;
        else if (!rep.violations.empty()) out << " (" << rep.violations.size() << " violations)";
        out << "\n";
        for (const auto& k : rep.constants)
            out << "    " << k.name << " = " << io::format_double(k.value)
                << (k.refined ? " -> " + io::format_double(*k.refined) : std::string()) << (k.stable ? "" : " UNSTABLE")
                << "\n";
    }
    w.put("summary.json", io::dump_json({{"exit_code", code}, {"scenarios", summary}}));
    w.put("summary.csv", table.str());
    w.put("constants.csv", constants.str());
    auto outputs = w.written;
    w.put("manifest.json", io::dump_json(manifest("experiment", sha256_hex(hashed.dump()), c, resolutions, outputs)));
    timing["wall_seconds"] = seconds_since(t0);
    w.put("timing.json", io::dump_json(timing));
    return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"freqlab: numerical checks of frequency-function estimates for elliptic equations", "freqlab"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    Common c;
    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("--config", c.config, "JSON config file");
        if (config_required) opt->required();
        sub->add_option("--out", c.out, "output directory")->required();
        sub->add_option("--seed", c.seed, "override the config seed");
        sub->add_option("--resolution", c.resolution, "grid resolution N_r,N_theta");
        sub->add_flag("--refine", c.refine, "double the resolution");
    };
    auto* mod = app.add_subcommand("modulus", "classify a modulus of continuity");
    mod->add_option("--config", c.config, "JSON config file")->required();
    mod->add_option("--out", c.out, "output directory")->required();
    auto* sol = app.add_subcommand("solve", "solve a Dirichlet problem and write its frequency profile");
    add_common(sol, true);
    auto* exp = app.add_subcommand("experiment", "run scenarios (default: the full default sweep)");
    add_common(exp, false);
    exp->add_option("scenario", c.target, "scenario name or 'all'");
    exp->add_option("--jobs", c.jobs, "parallel scenarios")->check(CLI::PositiveNumber);

    std::vector<const char*> argv{"freqlab"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    try {
        if (*mod) return cmd_modulus(c, out);
        if (*sol) return cmd_solve(c, out, err);
        return cmd_experiment(c, out, err);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const SolverError& e) {
        err << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace freqlab::cli
