#include "freqlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "freqlab/errors.hpp"
#include "freqlab/growth.hpp"
#include "freqlab/io.hpp"
#include "freqlab/modulus.hpp"

namespace freqlab {

namespace {

constexpr double kPi = std::numbers::pi;
using json = nlohmann::json;

void only_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

double number(const json& obj, const char* key, const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
    return v.get<double>();
}

std::vector<double> number_list(const json& obj, const char* key, const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_array()) throw ConfigError(where + "." + key + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError(where + "." + key + ": expected an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

json num(double x) {
    if (std::isfinite(x)) return x;
    return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
}

bool isotropic_scenario(const std::string& s) {
    return s == "eps_approx" || s == "tildeN" || s == "thin_annulus" || s == "key_approx" || s == "dichot3" ||
           s == "iso_cascade" || s == "schroedinger";
}

void check_params(const ScenarioConfig& c) {
    const std::string w = "params";
    const std::string& s = c.scenario;
    if (s == "dichot" || s == "approx_v") only_keys(c.params, {"mollifier_samples"}, w);
    else if (s == "freq_cascade") only_keys(c.params, {"C_M", "mollifier_samples"}, w);
    else if (s == "key_approx") only_keys(c.params, {"alpha", "C_h", "kappa", "perturb", "beta", "tau"}, w);
    else if (s == "iso_cascade") only_keys(c.params, {"alpha", "C_h", "growth_factor", "window_ratio"}, w);
    else if (s == "schroedinger") only_keys(c.params, {"alpha", "C_h", "V", "bisection_steps"}, w);
    else if (isotropic_scenario(s)) only_keys(c.params, {"alpha", "C_h"}, w);
    else only_keys(c.params, {}, w);
}

}  // namespace

// ---------------------------------------------------------------- verdicts

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Consistent: return "Consistent";
        case Verdict::MarginalViolations: return "MarginalViolations";
        case Verdict::Inconsistent: return "Inconsistent";
        case Verdict::AlternativeOne: return "AlternativeOne";
        case Verdict::HypothesisUnmet: return "HypothesisUnmet";
        case Verdict::Skipped: return "Skipped";
        case Verdict::BranchNotGood: return "BranchNotGood";
        case Verdict::Partial: return "Partial";
        case Verdict::RegimeError: return "RegimeError";
    }
    return "?";
}

bool is_branch(Verdict v) {
    return v != Verdict::Consistent && v != Verdict::MarginalViolations && v != Verdict::Inconsistent;
}

bool is_acceptable(Verdict v) { return v == Verdict::Consistent || is_branch(v); }

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names{"dichot",     "approx_v",     "freq_cascade", "eps_approx",
                                                "tildeN",     "thin_annulus", "key_approx",   "dichot3",
                                                "iso_cascade", "schroedinger", "stability"};
    return names;
}

// ---------------------------------------------------------------- config

ScenarioConfig ScenarioConfig::from_json(const json& j) {
    only_keys(j, {"schema_version", "scenario", "id", "field", "field_alt", "boundary", "grid", "radii", "constants",
                  "seed", "params"},
              "scenario config");
    if (!j.contains("schema_version")) throw ConfigError("scenario config: missing 'schema_version'");
    if (j.at("schema_version") != kSchemaVersion)
        throw ConfigError("scenario config: unsupported schema_version " + j.at("schema_version").dump());
    ScenarioConfig c;
    if (!j.contains("scenario") || !j.at("scenario").is_string()) throw ConfigError("scenario config: missing 'scenario'");
    c.scenario = j.at("scenario").get<std::string>();
    const auto& names = scenario_names();
    if (std::find(names.begin(), names.end(), c.scenario) == names.end())
        throw ConfigError("unknown scenario '" + c.scenario + "'");
    c.id = j.value("id", c.scenario);
    if (!j.contains("field")) throw ConfigError("scenario config: missing 'field'");
    c.field = j.at("field");
    if (j.contains("field_alt")) {
        if (c.scenario != "stability") throw ConfigError("scenario config: 'field_alt' is only used by stability");
        c.field_alt = j.at("field_alt");
    } else if (c.scenario == "stability") {
        throw ConfigError("scenario config: stability needs 'field_alt'");
    }
    if (j.contains("boundary")) c.boundary = j.at("boundary");
    if (!j.contains("grid")) throw ConfigError("scenario config: missing 'grid'");
    const auto& g = j.at("grid");
    only_keys(g, {"n_r", "n_theta"}, "grid");
    if (!g.contains("n_r") || !g.contains("n_theta")) throw ConfigError("grid: needs n_r and n_theta");
    c.n_r = g.at("n_r").get<int>();
    c.n_theta = g.at("n_theta").get<int>();
    if (c.n_r < 16 || c.n_theta < 16) throw ConfigError("grid: n_r and n_theta must be >= 16");

    if (j.contains("radii")) {
        const auto& r = j.at("radii");
        only_keys(r, {"r", "r_lo", "r_hi", "s", "t", "doubling"}, "radii");
        if (r.contains("r")) c.radii.r = number(r, "r", "radii");
        if (r.contains("r_lo")) c.radii.r_lo = number(r, "r_lo", "radii");
        if (r.contains("r_hi")) c.radii.r_hi = number(r, "r_hi", "radii");
        if (r.contains("s")) c.radii.s = number_list(r, "s", "radii");
        if (r.contains("t")) c.radii.t = number_list(r, "t", "radii");
        if (r.contains("doubling")) c.radii.doubling = number_list(r, "doubling", "radii");
    }
    if (j.contains("constants")) {
        const auto& k = j.at("constants");
        only_keys(k, {"N0", "C1", "A_log", "p", "gamma", "eps", "delta"}, "constants");
        auto& C = c.constants;
        if (k.contains("N0")) C.N0 = number(k, "N0", "constants");
        if (k.contains("C1")) C.C1 = number(k, "C1", "constants");
        if (k.contains("A_log")) C.A_log = number(k, "A_log", "constants");
        if (k.contains("p")) C.p = number(k, "p", "constants");
        if (k.contains("gamma")) C.gamma = number(k, "gamma", "constants");
        if (k.contains("eps")) C.eps = number(k, "eps", "constants");
        if (k.contains("delta")) C.delta = number(k, "delta", "constants");
    }
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("params")) c.params = j.at("params");
    check_params(c);

    const auto& C = c.constants;
    if (!(C.gamma > 0.0 && C.gamma < 1.0)) throw ConfigError("constants.gamma must lie in (0,1)");
    if (!(C.p >= 4.0)) throw ConfigError("constants.p must be >= 4");
    if (!(C.N0 > 0.0)) throw ConfigError("constants.N0 must be positive");
    if (!(C.C1 > 0.0)) throw ConfigError("constants.C1 must be positive");
    if (!(C.A_log > 0.0)) throw ConfigError("constants.A_log must be positive");
    if (!(C.eps >= 0.0) || !(C.delta >= 0.0)) throw ConfigError("constants.eps and constants.delta must be >= 0");
    if (C.eps > 0.1) c.warnings.push_back("eps = " + io::format_double(C.eps) + " is outside the small regime (0, 0.1]");
    if (C.delta > 0.1)
        c.warnings.push_back("delta = " + io::format_double(C.delta) + " is outside the small regime [0, 0.1]");
    const auto& R = c.radii;
    if (!(R.r > 0.0 && R.r <= 1.0)) throw ConfigError("radii.r must lie in (0,1]");
    if (!(R.r_lo > 0.0 && R.r_lo < R.r_hi && R.r_hi <= 1.0)) throw ConfigError("radii: need 0 < r_lo < r_hi <= 1");
    for (double s : R.s)
        if (!(s >= 0.0 && s <= 1.0)) throw ConfigError("radii.s entries must lie in [0,1]");
    for (double t : R.t)
        if (!(t > 0.0 && t < 1.0)) throw ConfigError("radii.t entries must lie in (0,1)");
    for (double d : R.doubling)
        if (!(d > 0.0 && d <= 1.0)) throw ConfigError("radii.doubling entries must lie in (0,1]");

    // surface field errors at load time
    CoefficientField::from_json(c.field);
    if (!c.field_alt.is_null()) CoefficientField::from_json(c.field_alt);
    boundary_from_spec(c.boundary, PolarGrid::make(16, 16), c.seed);
    return c;
}

json ScenarioConfig::to_json() const {
    json j{{"schema_version", kSchemaVersion},
           {"scenario", scenario},
           {"id", id},
           {"field", field},
           {"boundary", boundary},
           {"grid", {{"n_r", n_r}, {"n_theta", n_theta}}},
           {"radii",
            {{"r", radii.r},
             {"r_lo", radii.r_lo},
             {"r_hi", radii.r_hi},
             {"s", radii.s},
             {"t", radii.t},
             {"doubling", radii.doubling}}},
           {"constants",
            {{"N0", constants.N0},
             {"C1", constants.C1},
             {"A_log", constants.A_log},
             {"p", constants.p},
             {"gamma", constants.gamma},
             {"eps", constants.eps},
             {"delta", constants.delta}}},
           {"seed", seed},
           {"params", params}};
    if (!field_alt.is_null()) j["field_alt"] = field_alt;
    return j;
}

std::vector<double> boundary_from_spec(const json& spec, const PolarGrid& grid, std::uint64_t seed) {
    if (!spec.is_object() || !spec.contains("kind")) throw ConfigError("boundary: expected an object with 'kind'");
    const std::string kind = spec.at("kind").get<std::string>();
    std::vector<double> g;
    if (kind == "harmonic") {
        only_keys(spec, {"kind", "k", "phase", "scale"}, "boundary");
        g = boundary::harmonic(grid, spec.at("k").get<int>(), spec.value("phase", 0.0));
    } else if (kind == "harmonic_mix") {
        only_keys(spec, {"kind", "terms", "scale"}, "boundary");
        std::vector<std::pair<int, double>> terms;
        for (const auto& t : spec.at("terms")) {
            if (!t.is_array() || t.size() != 2) throw ConfigError("boundary.terms: expected [k, phase] pairs");
            terms.emplace_back(t[0].get<int>(), t[1].get<double>());
        }
        g = boundary::harmonic_mix(grid, terms);
    } else if (kind == "random_trig") {
        only_keys(spec, {"kind", "degree", "scale"}, "boundary");
        g = boundary::random_trig(grid, spec.at("degree").get<int>(), seed);
    } else if (kind == "constant") {
        only_keys(spec, {"kind", "value", "scale"}, "boundary");
        g.assign(grid.n_theta(), number(spec, "value", "boundary"));
    } else {
        throw ConfigError("boundary: unknown kind '" + kind + "'");
    }
    if (spec.contains("scale")) {
        const double c = number(spec, "scale", "boundary");
        for (double& v : g) v *= c;
    }
    return g;
}

// ---------------------------------------------------------------- report

const ConstantEntry* ExperimentReport::constant(const std::string& name) const {
    for (const auto& c : constants)
        if (c.name == name) return &c;
    return nullptr;
}

std::vector<const MarginEntry*> ExperimentReport::margins_named(const std::string& name) const {
    std::vector<const MarginEntry*> out;
    for (const auto& m : margins)
        if (m.name == name) out.push_back(&m);
    return out;
}

json ExperimentReport::to_json() const {
    json j{{"scenario", scenario},
           {"id", id},
           {"verdict", to_string(verdict)},
           {"reason", reason},
           {"violations", violations},
           {"warnings", warnings},
           {"resolutions", resolutions}};
    json ms = json::array();
    for (const auto& m : margins) {
        json e{{"name", m.name}, {"r", num(m.r)},           {"lhs", num(m.lhs)},
               {"rhs", num(m.rhs)}, {"margin", num(m.margin)}, {"holds", m.holds}};
        if (m.refined_margin) {
            e["refined"] = {{"lhs", num(*m.refined_lhs)},
                            {"rhs", num(*m.refined_rhs)},
                            {"margin", num(*m.refined_margin)},
                            {"holds", m.refined_holds}};
            e["delta"] = num(m.delta);
        }
        ms.push_back(std::move(e));
    }
    j["margins"] = std::move(ms);
    json cs = json::array();
    for (const auto& c : constants) {
        json e{{"name", c.name}, {"value", num(c.value)}, {"stable", c.stable}};
        if (c.refined) {
            e["refined"] = num(*c.refined);
            e["relative_change"] = num(c.relative_change);
        }
        cs.push_back(std::move(e));
    }
    j["constants"] = std::move(cs);
    j["diagnostics"] = diagnostics;
    return j;
}

std::string ExperimentReport::margins_csv() const {
    io::CsvTable t({"name", "r", "lhs", "rhs", "margin", "refined_lhs", "refined_rhs", "refined_margin", "delta",
                    "holds", "refined_holds"});
    for (const auto& m : margins) {
        auto opt = [](const std::optional<double>& x) { return x ? io::format_double(*x) : std::string(); };
        t.add_row({m.name, io::format_double(m.r), io::format_double(m.lhs), io::format_double(m.rhs),
                   io::format_double(m.margin), opt(m.refined_lhs), opt(m.refined_rhs), opt(m.refined_margin),
                   m.refined_margin ? io::format_double(m.delta) : std::string(), m.holds ? "1" : "0",
                   m.refined_holds ? "1" : "0"});
    }
    return t.str();
}

std::string ExperimentReport::margins_svg() const {
    io::SvgPlot plot;
    plot.title = id + " margins (" + to_string(verdict) + ")";
    plot.x_label = "r";
    plot.y_label = "rhs - lhs";
    std::map<std::string, std::size_t> index;
    for (const auto& m : margins) {
        if (!std::isfinite(m.margin)) continue;
        auto [it, fresh] = index.emplace(m.name, plot.series.size());
        if (fresh) plot.series.push_back({m.name, {}, {}});
        plot.series[it->second].x.push_back(m.r);
        plot.series[it->second].y.push_back(m.margin);
    }
    return io::render_svg(plot);
}

// ---------------------------------------------------------------- hashing and cache

std::string sha256_hex(const std::string& s) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(s.data(), s.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

DiscreteSolution cached_solve(const CoefficientField& f, const PolarGrid& grid, const std::vector<double>& g,
                              const SolveOptions& options, const std::string& potential_key) {
    const char* dir = std::getenv("FREQLAB_CACHE");
    if (!dir || !*dir) return solve_dirichlet(f, grid, g, options);

    std::string key = f.config().dump() + "|" + grid.to_json().dump() + "|" + potential_key + "|" +
                      io::format_double(options.tolerance) + "|" + std::to_string(options.max_iterations) + "|" +
                      (options.harmonic_initial_guess ? "h" : "z") + "|";
    key.append(reinterpret_cast<const char*>(g.data()), g.size() * sizeof(double));
    const std::filesystem::path path = std::filesystem::path(dir) / (sha256_hex(key) + ".sol");

    if (std::ifstream in{path, std::ios::binary}) {
        std::uint64_t count = 0;
        double residual = 0.0;
        std::int64_t iterations = 0;
        in.read(reinterpret_cast<char*>(&count), sizeof count);
        in.read(reinterpret_cast<char*>(&residual), sizeof residual);
        in.read(reinterpret_cast<char*>(&iterations), sizeof iterations);
        if (in && count == grid.node_count()) {
            std::vector<double> values(count);
            in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(count * sizeof(double)));
            if (in) {
                auto op = std::make_shared<const DiscreteOperator>(f, grid, options.potential);
                return DiscreteSolution(op, f, std::move(values), residual, static_cast<int>(iterations));
            }
        }
    }
    auto u = solve_dirichlet(f, grid, g, options);
    std::string blob;
    const std::uint64_t count = u.values().size();
    const double residual = u.residual_norm();
    const std::int64_t iterations = u.iterations();
    blob.append(reinterpret_cast<const char*>(&count), sizeof count);
    blob.append(reinterpret_cast<const char*>(&residual), sizeof residual);
    blob.append(reinterpret_cast<const char*>(&iterations), sizeof iterations);
    blob.append(reinterpret_cast<const char*>(u.values().data()), count * sizeof(double));
    std::filesystem::create_directories(dir);
    io::write_atomic(path, blob);
    return u;
}

double fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t k = 0; k < std::min(x.size(), y.size()); ++k) {
        if (!(x[k] > 0 && y[k] > 0)) continue;
        const double a = std::log(x[k]), b = std::log(y[k]);
        sx += a;
        sy += b;
        sxx += a * a;
        sxy += a * b;
        ++n;
    }
    if (n < 2) throw DomainError("fit_power_law: need two positive pairs");
    const double den = n * sxx - sx * sx;
    if (den <= 0) throw DomainError("fit_power_law: abscissae coincide");
    return (n * sxy - sx * sy) / den;
}

// ---------------------------------------------------------------- level machinery

namespace {

struct Level {
    int factor = 1;  // 1 base, 2 refined
    PolarGrid base;
    PolarGrid grid;
};

struct LevelResult {
    struct Margin {
        std::string name;
        double r, lhs, rhs;
    };
    struct Constant {
        std::string name;
        double value;
        double floor;
    };
    std::vector<Margin> margins;
    std::vector<Constant> constants;
    std::optional<Verdict> branch;
    std::string reason;
    json diag = json::object();
    std::vector<std::string> warnings;

    void margin(std::string name, double r, double lhs, double rhs) {
        margins.push_back({std::move(name), r, lhs, rhs});
    }
    // floor < 0: use the scenario default 1e-4 C1
    void constant(std::string name, double value, double floor = -1.0) {
        constants.push_back({std::move(name), value, floor});
    }
    LevelResult& branch_to(Verdict v, std::string why) {
        branch = v;
        reason = std::move(why);
        return *this;
    }
};

using LevelFn = std::function<LevelResult(const ScenarioConfig&, const Level&)>;

bool margin_holds(double lhs, double rhs) {
    if (std::isnan(lhs) || std::isnan(rhs)) return false;
    return lhs <= rhs + kMarginTolerance * std::max(1.0, std::abs(rhs));
}

ExperimentReport combine(const ScenarioConfig& cfg, const LevelResult& base, const std::optional<LevelResult>& fine,
                         const Level& l0, const std::optional<Level>& l1) {
    ExperimentReport rep;
    rep.scenario = cfg.scenario;
    rep.id = cfg.id;
    rep.resolutions.push_back(l0.grid.n_r());
    if (l1) rep.resolutions.push_back(l1->grid.n_r());
    std::set<std::string> seen;
    auto warn = [&](const std::string& w) {
        if (seen.insert(w).second) rep.warnings.push_back(w);
    };
    for (const auto& w : cfg.warnings) warn(w);
    for (const auto& w : base.warnings) warn(w);
    if (fine)
        for (const auto& w : fine->warnings) warn(w);
    rep.diagnostics["base"] = base.diag;
    if (fine) rep.diagnostics["refined"] = fine->diag;

    const bool base_branch = base.branch && *base.branch != Verdict::Partial;
    const bool fine_branch = fine && fine->branch && *fine->branch != Verdict::Partial;
    const bool pair = fine && base_branch == fine_branch;

    std::map<std::string, int> occurrence;
    std::map<std::pair<std::string, int>, const LevelResult::Margin*> fine_margins;
    if (pair) {
        std::map<std::string, int> occ;
        for (const auto& m : fine->margins) fine_margins[{m.name, occ[m.name]++}] = &m;
    }
    bool hard = false;
    for (const auto& m : base.margins) {
        MarginEntry e;
        e.name = m.name;
        e.r = m.r;
        e.lhs = m.lhs;
        e.rhs = m.rhs;
        e.margin = m.rhs - m.lhs;
        e.holds = margin_holds(m.lhs, m.rhs);
        const auto it = fine_margins.find({m.name, occurrence[m.name]++});
        if (it != fine_margins.end()) {
            const auto& f = *it->second;
            e.refined_lhs = f.lhs;
            e.refined_rhs = f.rhs;
            e.refined_margin = f.rhs - f.lhs;
            e.delta = *e.refined_margin - e.margin;
            e.refined_holds = margin_holds(f.lhs, f.rhs);
        }
        if (!e.holds || !e.refined_holds) {
            rep.violations.push_back(e.name + "@r=" + io::format_double(e.r));
            // a violation is hard when it persists at both levels beyond the refinement delta
            if (!e.holds && !e.refined_holds && (!e.refined_margin || std::abs(e.margin) > std::abs(e.delta)))
                hard = true;
        }
        rep.margins.push_back(std::move(e));
    }
    for (const auto& c : base.constants) {
        ConstantEntry e;
        e.name = c.name;
        e.value = c.value;
        e.floor = c.floor >= 0 ? c.floor : kConstantFloor * cfg.constants.C1;
        if (pair) {
            for (const auto& f : fine->constants)
                if (f.name == c.name) e.refined = f.value;
        }
        if (e.refined) {
            const double a = e.value, b = *e.refined;
            if (!std::isfinite(a) || !std::isfinite(b)) {
                e.stable = a == b;
                e.relative_change = a == b ? 0.0 : INFINITY;
            } else {
                const double scale = std::max(std::abs(a), std::abs(b));
                e.relative_change = scale > 0 ? std::abs(b - a) / scale : 0.0;
                e.stable = std::abs(b - a) <= std::max(e.floor, kStabilityThreshold * scale);
            }
        } else {
            e.stable = std::isfinite(e.value) || !pair;
        }
        rep.constants.push_back(std::move(e));
    }

    if (base_branch) {
        rep.verdict = *base.branch;
        rep.reason = base.reason;
        if (fine && (!fine->branch || *fine->branch != *base.branch))
            warn("refined level did not reach the same branch (" +
                 std::string(fine->branch ? to_string(*fine->branch) : "no branch") + ")");
        rep.violations.clear();
        return rep;
    }
    if (fine_branch) {
        rep.violations.push_back("branch changes under refinement: " + std::string(to_string(*fine->branch)) + " (" +
                                 fine->reason + ")");
    }
    for (const auto& c : rep.constants)
        if (!c.stable)
            rep.violations.push_back("constant " + c.name + " moved " + io::format_double(c.relative_change * 100) +
                                     "% under refinement");
    if (hard) {
        rep.verdict = Verdict::Inconsistent;
        rep.reason = "a margin fails at both resolutions beyond its refinement delta";
    } else if (!rep.violations.empty()) {
        rep.verdict = Verdict::MarginalViolations;
        rep.reason = "violations within refinement deltas or unstable constants";
    } else if (base.branch == Verdict::Partial || (fine && fine->branch == Verdict::Partial)) {
        rep.verdict = Verdict::Partial;
        rep.reason = base.branch ? base.reason : fine->reason;
    } else {
        rep.verdict = Verdict::Consistent;
    }
    return rep;
}

ExperimentReport run_levels(const ScenarioConfig& cfg, const RunOptions& options, const LevelFn& fn) {
    const auto base = PolarGrid::make(cfg.n_r, cfg.n_theta);
    Level l0{1, base, base};
    LevelResult r0 = fn(cfg, l0);
    std::optional<Level> l1;
    std::optional<LevelResult> r1;
    if (options.refine) {
        l1 = Level{2, base, base.refined()};
        r1 = fn(cfg, *l1);
    }
    return combine(cfg, r0, r1, l0, l1);
}

// ------------------------------------------------ shared numerics

int snap_ring(const Level& L, double r) {
    const double t = L.base.ring_coordinate(r);
    const int i = std::clamp(static_cast<int>(std::lround(t)), 4, L.base.n_r());
    return i * L.factor;
}

/// 4-point Lagrange interpolation of a per-ring quantity in the ring coordinate, on log q when positive.
double ring_interp(const PolarGrid& G, const std::vector<double>& q, double r, bool use_log = true) {
    if (auto i = G.ring_index_of(r)) return q[*i];
    const double t = G.ring_coordinate(r);
    if (t < -1e-9 || t > G.n_r() + 1e-9) throw DomainError("ring_interp: radius outside the grid");
    const int lo = std::clamp(static_cast<int>(std::floor(t)) - 1, 0, G.n_r() - 3);
    bool positive = use_log;
    for (int k = 0; k < 4; ++k) positive = positive && q[lo + k] > 0;
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) {
        double w = 1.0;
        for (int m = 0; m < 4; ++m)
            if (m != k) w *= (t - (lo + m)) / static_cast<double>(k - m);
        acc += w * (positive ? std::log(q[lo + k]) : q[lo + k]);
    }
    return positive ? std::exp(acc) : acc;
}

std::vector<double> ring_mean_squares(const PolarGrid& G, const std::vector<double>& values) {
    std::vector<double> out(G.n_r() + 1);
    for (int i = 0; i <= G.n_r(); ++i) {
        double acc = 0.0;
        for (int j = 0; j < G.n_theta(); ++j) acc += values[G.node(i, j)] * values[G.node(i, j)];
        out[i] = acc / G.n_theta();
    }
    return out;
}

double sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

/// Smallest C >= 0 with lhs <= C * unit; zero when lhs is at the noise floor and unit vanishes.
double fit_ratio(double lhs, double unit, double noise = 1e-12) {
    if (unit > 0) return std::max(0.0, lhs) / unit;
    return lhs <= noise ? 0.0 : INFINITY;
}

WeightKind kind_of(const CoefficientField& f) {
    return f.isotropic() ? WeightKind::ScalarWeighted : WeightKind::MuWeighted;
}

double N_at(const RingFunctionals& rf, double r, WeightKind kind) { return almgren_frequency(rf, {r}, kind).N[0]; }

/// min N(t) / N(r) over the rings in [lo, r] and the endpoint lo.
double gamma_hat(const RingFunctionals& rf, WeightKind kind, double lo, double r, double N) {
    const PolarGrid& G = rf.solution().grid();
    std::vector<double> radii{lo};
    for (int i = 0; i <= G.n_r(); ++i) {
        const double t = G.ring_radius(i);
        if (t > lo && t <= r * (1 + 1e-12)) radii.push_back(t);
    }
    double g = INFINITY;
    for (double t : radii) g = std::min(g, N_at(rf, t, kind) / N);
    return g;
}

std::vector<double> data_for(const ScenarioConfig& cfg, const PolarGrid& G) {
    return boundary_from_spec(cfg.boundary, G, cfg.seed);
}

std::function<double(double)> omega_of(const CoefficientField& f, const ScenarioConfig& cfg, std::string* source) {
    if (f.declared_modulus()) {
        const Modulus m = *f.declared_modulus();
        if (source) *source = "declared modulus " + std::string(to_string(m.kind()));
        return [m](double t) { return m.omega(t); };
    }
    double alpha = cfg.params.value("alpha", 1.0);
    double C = cfg.params.value("C_h", 1.0);
    if (f.holder()) {
        alpha = f.holder()->alpha;
        C = f.holder()->C_h > 0 ? f.holder()->C_h : 1.0;
    }
    if (source) *source = "Holder alpha=" + io::format_double(alpha);
    return [alpha, C](double t) { return C * std::pow(t, alpha); };
}

/// Empirical Holder check before isotropic runs; records the fit and warns when it undercuts the declaration.
void validate_holder(const CoefficientField& f, const ScenarioConfig& cfg, LevelResult& out) {
    if (!f.holder()) {
        out.diag["holder"] = "not declared";
        return;
    }
    const auto em = empirical_modulus(f, 2000, cfg.seed + 1);
    out.diag["holder"] = {{"declared_alpha", f.holder()->alpha},
                          {"declared_C_h", f.holder()->C_h},
                          {"empirical_alpha", num(em.alpha)},
                          {"empirical_C_h", num(em.C_h)}};
    if (em.alpha < f.holder()->alpha - 0.1)
        out.warnings.push_back("empirical Holder exponent " + io::format_double(em.alpha) + " undercuts declared " +
                               io::format_double(f.holder()->alpha));
}

/// sup over t <= r of N on the profile; measured log2(H(r) / H(r/2)) against 2 sup N + n - 1 + 0.1.
void doubling_margins(const RingFunctionals& rf, WeightKind kind, const std::vector<double>& schedule,
                      LevelResult& out) {
    const PolarGrid& G = rf.solution().grid();
    std::vector<double> rs;
    for (double r : schedule)
        if (r / 2 >= G.ring_radius(0) && r <= G.radius()) rs.push_back(r);
    if (rs.empty()) return;
    const double lo = *std::min_element(rs.begin(), rs.end()) / 2, hi = *std::max_element(rs.begin(), rs.end());
    auto radii = grid_radii(G, lo, hi);
    radii.push_back(lo);
    radii.push_back(hi);
    const auto prof = almgren_frequency(rf, radii, kind);
    for (double r : rs) {
        double sup = -INFINITY;
        for (std::size_t k = 0; k < prof.radii.size(); ++k)
            if (prof.radii[k] <= r * (1 + 1e-12)) sup = std::max(sup, prof.N[k]);
        out.margin("doubling", r, mass_doubling(rf, r), 2 * sup + 1 + 0.1);
    }
}

json field_summary(const CoefficientField& f) {
    return {{"config", f.config()}, {"fingerprint", f.fingerprint()}, {"lambda", f.lambda()}};
}

// ------------------------------------------------ anisotropic track

struct AnisoSetup {
    CoefficientField f;
    DiscreteSolution u;
    RingFunctionals rf;
    WeightKind kind;
    int ring;
    double r;
    double N;
};

AnisoSetup aniso_setup(const ScenarioConfig& cfg, const Level& L, double r_target) {
    const auto f = CoefficientField::from_json(cfg.field);
    auto u = cached_solve(f, L.grid, data_for(cfg, L.grid));
    RingFunctionals rf(u, f);
    const int i = snap_ring(L, r_target);
    const double r = L.grid.ring_radius(i);
    const auto kind = kind_of(f);
    const double N = N_at(rf, r, kind);
    return {f, std::move(u), std::move(rf), kind, i, r, N};
}

void check_origin_identity(const CoefficientField& f, LevelResult& out) {
    const Mat A = f.matrix({0, 0, 0});
    const double dev = std::max({std::abs(A[0] - 1), std::abs(A[4] - 1), std::abs(A[1])});
    if (dev > 1e-9) out.warnings.push_back("A(0) differs from the identity by " + io::format_double(dev));
}

LevelResult dichot_level(const ScenarioConfig& cfg, const Level& L) {
    LevelResult out;
    const auto S = aniso_setup(cfg, L, cfg.radii.r);
    check_origin_identity(S.f, out);
    out.diag["field"] = field_summary(S.f);
    out.diag["r"] = S.r;
    out.diag["N"] = S.N;
    if (!S.f.declared_modulus()) return out.branch_to(Verdict::HypothesisUnmet, "field declares no modulus");
    const Modulus m = *S.f.declared_modulus();
    doubling_margins(S.rf, S.kind, cfg.radii.doubling, out);
    if (S.N < cfg.constants.N0)
        return out.branch_to(Verdict::AlternativeOne, "N(r) = " + io::format_double(S.N) + " < N0");

    const double unit = S.r * eval_psi(m, S.N / S.r);
    double C = 0.0, signed_C = -INFINITY;
    json incs = json::array();
    for (double s : cfg.radii.s) {
        const double rs = S.r * (1 - s / S.N);
        const double inc = N_at(S.rf, rs, S.kind) - S.N;
        out.margin("increment", rs, inc, cfg.constants.C1 * unit);
        C = std::max(C, fit_ratio(inc, unit));
        signed_C = std::max(signed_C, inc / unit);
        incs.push_back({{"s", s}, {"r_s", rs}, {"increment", inc}});
    }
    out.constant("C_dichot", C);
    out.diag["increments"] = incs;
    out.diag["signed_C"] = num(signed_C);
    out.diag["psi_unit"] = unit;

    // comparison solution with mollified coefficients at scale eps = r / N
    const double eps = S.r / S.N;
    out.diag["eps"] = eps;
    if (S.r > 1 - eps) {
        out.warnings.push_back("r > 1 - eps: mollified coefficients undefined on B_r; comparison skipped");
        return out;
    }
    const auto Ae = mollify(S.f, eps, cfg.params.value("mollifier_samples", 24));
    const auto Gt = L.grid.truncated(S.ring);
    const auto v = cached_solve(Ae, Gt, boundary::from_solution(S.u, S.ring));
    const RingFunctionals rv(v, Ae);
    const double Nv = N_at(rv, S.r, kind_of(Ae));
    const double w = m.omega(eps);
    out.margin("transfer", S.r, Nv / S.N - 1, cfg.constants.C1 * w);
    out.constant("C_transfer", fit_ratio(Nv / S.N - 1, w));
    out.diag["N_v"] = Nv;
    out.diag["omega_eps"] = w;
    return out;
}

LevelResult approx_v_level(const ScenarioConfig& cfg, const Level& L) {
    LevelResult out;
    const auto S = aniso_setup(cfg, L, cfg.radii.r);
    out.diag["field"] = field_summary(S.f);
    out.diag["r"] = S.r;
    out.diag["N"] = S.N;
    std::string source;
    const auto omega = omega_of(S.f, cfg, &source);
    out.diag["omega_source"] = source;
    doubling_margins(S.rf, S.kind, cfg.radii.doubling, out);
    const double eps = cfg.constants.eps > 0 ? cfg.constants.eps : S.r / S.N;
    out.diag["eps"] = eps;
    if (!(eps < S.r / 2 && S.r / 2 < 0.25))
        out.warnings.push_back("outside the regime eps < r/2 < 1/4 (eps=" + io::format_double(eps) +
                               ", r=" + io::format_double(S.r) + ")");
    if (S.r > 1 - eps) return out.branch_to(Verdict::HypothesisUnmet, "r > 1 - eps: mollified field undefined on B_r");

    const auto Ae = mollify(S.f, eps, cfg.params.value("mollifier_samples", 24));
    const auto Gt = L.grid.truncated(S.ring);
    const auto v = cached_solve(Ae, Gt, boundary::from_solution(S.u, S.ring));
    const auto uu = S.u.restricted_values(S.ring);
    std::vector<double> w(uu.size());
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = uu[k] - v.values()[k];
    const double Eu = sum(v.op().layer_energies_identity(uu));
    const double Ew = sum(v.op().layer_energies_identity(w));
    const double om = omega(eps);
    out.diag["omega_eps"] = om;
    out.margin("gradient", S.r, Ew / Eu, cfg.constants.C1 * om);
    out.constant("C_grad", fit_ratio(Ew / Eu, om));

    // shell estimate: mean over dB_{tr} of (u - v)^2 <= C (1 - t) omega r^2 mean_{B_r} |grad u|^2
    const auto q = ring_mean_squares(Gt, w);
    const double scale = S.r * S.r * Eu / (kPi * S.r * S.r);
    std::vector<double> ts = cfg.radii.t;
    if (ts.empty())
        for (double f : {0.125, 0.25, 0.5, 0.75}) ts.push_back(1 - f * eps);
    double C_shell = 0.0;
    std::vector<double> one_minus_t, shell;
    for (double t : ts) {
        const double lhs = ring_interp(Gt, q, t * S.r, false) / scale;
        out.margin("shell", t * S.r, lhs, cfg.constants.C1 * (1 - t) * om);
        C_shell = std::max(C_shell, fit_ratio(lhs, (1 - t) * om));
        one_minus_t.push_back(1 - t);
        shell.push_back(lhs);
    }
    out.constant("C_shell", C_shell);
    double slope = NAN;
    try {
        slope = fit_power_law(one_minus_t, shell);
    } catch (const DomainError&) {
    }
    out.diag["shell_slope"] = num(slope);
    // below the noise floor u = v and the rate carries no information
    if (std::isfinite(slope) && Ew / Eu > 1e-10) out.margin("shell_rate", S.r, 1.0, slope);
    return out;
}

LevelResult freq_cascade_level(const ScenarioConfig& cfg, const Level& L) {
    LevelResult out;
    const auto f = CoefficientField::from_json(cfg.field);
    out.diag["field"] = field_summary(f);
    if (!f.declared_modulus()) return out.branch_to(Verdict::HypothesisUnmet, "field declares no modulus");
    const Modulus m = *f.declared_modulus();
    const double C_M = cfg.params.value("C_M", 4.0);
    const auto osg = classify_osgood(m);
    const auto phi = check_phi_integrable(m);
    const auto sub = check_submultiplicative_psi(m, C_M, 24);
    out.diag["hypotheses"] = {{"osgood", osg.to_json()}, {"phi_integrable", phi.to_json()}, {"psi_submultiplicative", sub.to_json()}};
    std::vector<std::string> unmet;
    if (osg.verdict != OsgoodVerdict::Osgood) unmet.push_back("Osgood condition");
    if (!sub.holds) unmet.push_back("psi submultiplicativity with C_M=" + io::format_double(C_M));
    if (!phi.finite) unmet.push_back("integrability of phi");
    if (!unmet.empty()) {
        std::string why = "unmet: ";
        for (std::size_t k = 0; k < unmet.size(); ++k) why += (k ? ", " : "") + unmet[k];
        out.diag["unmet"] = unmet;
        return out.branch_to(Verdict::HypothesisUnmet, why);
    }

    const auto u = cached_solve(f, L.grid, data_for(cfg, L.grid));
    const RingFunctionals rf(u, f);
    const auto kind = kind_of(f);
    doubling_margins(rf, kind, cfg.radii.doubling, out);

    // measured schedule t_{k+1} = t_k (1 - 1 / N(t_k))
    const double r0 = L.grid.ring_radius(snap_ring(L, cfg.radii.r_hi));
    const double t_floor = std::max(cfg.radii.r_lo, L.grid.ring_radius(2));
    std::vector<double> t{r0}, N{N_at(rf, r0, kind)};
    while (t.size() < 100000) {
        const double step = 1.0 / std::max({N.back(), 2.0});
        const double next = t.back() * (1 - step);
        if (next < t_floor) break;
        t.push_back(next);
        N.push_back(N_at(rf, next, kind));
    }
    double sup = -INFINITY, running = N[0], C_fit = 0.0;
    for (std::size_t k = 0; k < N.size(); ++k) {
        sup = std::max(sup, N[k]);
        if (k + 1 < N.size()) {
            const double next = std::max(running, N[k + 1]);
            const double unit = t[k] * eval_psi(m, std::max(running, 1.0)) * eval_phi(m, t[k]);
            C_fit = std::max(C_fit, fit_ratio(next - running, unit));
            running = next;
        }
    }
    const double start = std::max(N[0], cfg.constants.N0);
    CascadeOptions co;
    co.t_start = r0;
    co.max_steps = 2'000'000;
    co.max_recorded = 4096;
    // a truncated trace stops above t_floor, so its sup only understates the full bound
    const auto configured = discrete_cascade(m, start, Forcing::phi_of(m), cfg.constants.C1, t.back(), co);
    out.margin("cascade", t.back(), sup, configured.bound);
    out.constant("C_schedule", C_fit);
    out.constant("sup_N", sup);
    out.diag["schedule_length"] = t.size();
    out.diag["t_final"] = t.back();
    out.diag["cascade_configured"] = configured.to_json();
    if (C_fit > 0) {
        const auto fitted = discrete_cascade(m, start, Forcing::phi_of(m), C_fit, t.back(), co);
        out.diag["cascade_fitted_bound"] = num(fitted.bound);
        out.diag["cascade_fitted_verdict"] = to_string(fitted.verdict);
    }
    for (double r : cfg.radii.doubling) {
        if (r / 2 < L.grid.ring_radius(0)) continue;
        out.margin("doubling_mean", r, doubling_index(rf, r), 2 * configured.bound + 0.1);
    }
    return out;
}

// ------------------------------------------------ isotropic track

struct IsoSetup {
    CoefficientField a;
    DiscreteSolution u;
    RingFunctionals rf;  // weight a
    int ring;
    double r;
    double N;
    double eps_measured;
};

IsoSetup iso_setup(const ScenarioConfig& cfg, const Level& L, double r_target) {
    const auto a = CoefficientField::from_json(cfg.field);
    if (!a.isotropic()) throw UnsupportedError("isotropic scenario given an anisotropic field");
    auto u = cached_solve(a, L.grid, data_for(cfg, L.grid));
    RingFunctionals rf(u, a);
    const int i = snap_ring(L, r_target);
    const double r = L.grid.ring_radius(i);
    double eps = 0.0;
    for (int k = 0; k <= i; ++k)
        for (int j = 0; j < L.grid.n_theta(); ++j) eps = std::max(eps, std::abs(a.scalar(L.grid.position(k, j)) - 1));
    eps = std::max(eps, std::abs(a.scalar({0, 0, 0}) - 1));
    const double N = N_at(rf, r, WeightKind::ScalarWeighted);
    return {a, std::move(u), std::move(rf), i, r, N, eps};
}

/// eps + delta used as the unit of the isotropic approximation bounds.
double iso_unit(const ScenarioConfig& cfg, const IsoSetup& S, LevelResult& out) {
    if (S.eps_measured > cfg.constants.eps * (1 + 1e-9) + 1e-15)
        out.warnings.push_back("measured |a - 1| = " + io::format_double(S.eps_measured) + " exceeds configured eps");
    out.diag["eps_measured"] = S.eps_measured;
    return std::max(cfg.constants.eps, S.eps_measured) + cfg.constants.delta;
}

bool require_iso(const ScenarioConfig& cfg, LevelResult& out) {
    if (CoefficientField::from_json(cfg.field).isotropic()) return true;
    out.branch_to(Verdict::HypothesisUnmet, "scenario needs a scalar coefficient");
    return false;
}

LevelResult eps_approx_level(const ScenarioConfig& cfg, const Level& L) {
    LevelResult out;
    if (!require_iso(cfg, out)) return out;
    const auto S = iso_setup(cfg, L, cfg.radii.r);
    if (L.factor == 1) validate_holder(S.a, cfg, out);
    out.diag["field"] = field_summary(S.a);
    out.diag["r"] = S.r;
    out.diag["N"] = S.N;
    if (S.N < cfg.constants.N0)
        return out.branch_to(Verdict::HypothesisUnmet, "N(r) = " + io::format_double(S.N) + " < N0");
    const double e = iso_unit(cfg, S, out);

    const auto abar = homogeneous_projection(S.a, S.r);
    const auto Gt = L.grid.truncated(S.ring);
    const auto v = cached_solve(abar, Gt, boundary::from_solution(S.u, S.ring));
    const auto uu = S.u.restricted_values(S.ring);
    std::vector<double> w(uu.size());
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = uu[k] - v.values()[k];
    const double Eu = sum(v.op().layer_energies_identity(uu));
    const double Ew = sum(v.op().layer_energies_identity(w));
    out.margin("gradient", S.r, Ew / Eu, cfg.constants.C1 * e);
    out.constant("C_grad", fit_ratio(Ew / Eu, e));

    const RingFunctionals rv(v, abar);
    const RingFunctionals ru_bar(S.u, abar);
    const double Nv = N_at(rv, S.r, WeightKind::ScalarWeighted);
    out.margin("frequency", S.r, Nv / S.N, 1 + cfg.constants.C1 * e);
    out.constant("C_N", fit_ratio(Nv / S.N - 1, e));
    out.diag["N_v"] = Nv;

    const double base = S.rf.sphere_mean_at(S.r);
    const auto q = ring_mean_squares(Gt, w);
    double C_height = 0.0, C_L2 = 0.0;
    for (double s : cfg.radii.s) {
        const double rs = S.r * (1 - s / S.N);
        const double hv = rv.h_at(rs) / (2 * kPi), hu = ru_bar.h_at(rs) / (2 * kPi);
        const double ratio = base / std::min(hv, hu);
        out.margin("height", rs, ratio, cfg.constants.C1);
        C_height = std::max(C_height, ratio);
        const double l2 = ring_interp(Gt, q, rs, false) / base;
        out.margin("shell_L2", rs, l2, cfg.constants.C1 * s * e);
        C_L2 = std::max(C_L2, fit_ratio(l2, s * e));
    }
    out.constant("C_height", C_height);
    out.constant("C_L2", C_L2);
    return out;
}

LevelResult tildeN_level(const ScenarioConfig& cfg, const Level& L) {
    LevelResult out;
    if (!require_iso(cfg, out)) return out;
    const auto S = iso_setup(cfg, L, cfg.radii.r);
    if (L.factor == 1) validate_holder(S.a, cfg, out);
    out.diag["field"] = field_summary(S.a);
    out.diag["r"] = S.r;
    out.diag["N"] = S.N;
    if (S.N < cfg.constants.N0)
        return out.branch_to(Verdict::HypothesisUnmet, "N(r) = " + io::format_double(S.N) + " < N0");
    const double e = iso_unit(cfg, S, out);
    const auto abar = homogeneous_projection(S.a, S.r);
    const RingFunctionals ru_bar(S.u, abar);

    double C = 0.0, gmin = INFINITY;
    json pairs = json::array();
    for (double s : cfg.radii.s) {
        if (s <= 0) continue;
        const double rs = S.r * (1 - s / S.N);
        const double g = gamma_hat(S.rf, WeightKind::ScalarWeighted, rs, S.r, S.N);
        const double Nt = two_scale_frequency(ru_bar, S.r, rs);
        out.margin("upper", rs, Nt / S.N, 1 + cfg.constants.C1 * e);
        out.margin("lower", rs, g - Nt / S.N, cfg.constants.C1 * e);
        C = std::max({C, fit_ratio(Nt / S.N - 1, e), fit_ratio(g - Nt / S.N, e)});
        gmin = std::min(gmin, g);
        pairs.push_back({{"s", s}, {"rho", rs}, {"gamma_hat", g}, {"N_tilde", Nt}, {"gamma_good", g >= cfg.constants.gamma}});
    }
    out.constant("C_tilde", C);
    out.diag["pairs"] = pairs;
    out.diag["gamma_hat_min"] = num(gmin);
    return out;
}

/// Plain Dirichlet integral inside radius rho, interpolated between rings on log scale.
double energy_inside(const DiscreteSolution& u, double rho) {
    return ring_interp(u.grid(), u.cumulative_energy_identity(), rho, true);
}

LevelResult thin_annulus_level(const ScenarioConfig& cfg, const Level& L) {
    LevelResult out;
    if (!require_iso(cfg, out)) return out;
    const auto S = iso_setup(cfg, L, cfg.radii.r);
    if (L.factor == 1) validate_holder(S.a, cfg, out);
    out.diag["field"] = field_summary(S.a);
    out.diag["r"] = S.r;
    out.diag["N"] = S.N;
    const auto& K = cfg.constants;
    if (S.N < K.N0) return out.branch_to(Verdict::AlternativeOne, "N(r) = " + io::format_double(S.N) + " < N0");
    const double frac = K.A_log * std::log(S.N) / S.N;
    if (!(frac < 1)) return out.branch_to(Verdict::HypothesisUnmet, "A log N / N >= 1: annulus covers the ball");
    const double rhoA = S.r * (1 - frac);
    if (rhoA < L.grid.ring_radius(1)) return out.branch_to(Verdict::Skipped, "inner radius below the grid core");
    const double g = gamma_hat(S.rf, WeightKind::ScalarWeighted, rhoA, S.r, S.N);
    out.diag["rho_A"] = rhoA;
    out.diag["gamma_hat"] = g;
    if (g < K.gamma)
        return out.branch_to(Verdict::BranchNotGood,
                             "window is not gamma-good: min N / N(r) = " + io::format_double(g));

    const double ratio = (energy_inside(S.u, rhoA) / (rhoA * rhoA)) / (energy_inside(S.u, S.r) / (S.r * S.r));
    const double c_hat = -std::log(ratio) / (K.gamma * K.gamma * std::log(S.N));
    out.margin("thin_annulus", rhoA, ratio, std::pow(S.N, -K.gamma * K.gamma * K.A_log / K.C1));
    out.constant("c_hat", c_hat);
    out.diag["energy_ratio"] = ratio;
    out.diag["c_hat_over_A"] = c_hat / K.A_log;

    // interior step: mean_{B_{2r/3}} u^2 against the shell decay h(rho_A) / h(r)
    const double r23 = 2 * S.r / 3;
    const double interior = ring_interp(L.grid, S.u.cumulative_mass(), r23, true) / (kPi * r23 * r23);
    const double shell = S.rf.h_at(rhoA) / S.rf.h_at(S.r);
    const double C_int = (interior / S.rf.sphere_mean_at(S.r)) / shell;
    out.constant("C_interior", C_int);
    out.diag["shell_decay"] = shell;
    return out;
}

LevelResult key_approx_level(const ScenarioConfig& cfg, const Level& L) {
    LevelResult out;
    if (!require_iso(cfg, out)) return out;
    const auto S = iso_setup(cfg, L, cfg.radii.r);
    if (L.factor == 1) validate_holder(S.a, cfg, out);
    out.diag["field"] = field_summary(S.a);
    out.diag["r"] = S.r;
    out.diag["N"] = S.N;
    const auto& K = cfg.constants;
    if (S.N < K.N0) return out.branch_to(Verdict::AlternativeOne, "N(r) = " + io::format_double(S.N) + " < N0");

    double alpha = S.a.holder() ? S.a.holder()->alpha : cfg.params.value("alpha", 1.0);
    double beta, tau;
    if (cfg.params.contains("beta") && cfg.params.contains("tau")) {
        beta = cfg.params.at("beta").get<double>();
        tau = cfg.params.at("tau").get<double>();
    } else {
        const auto ex = select_exponents(std::clamp(alpha, 0.67, 1.0));
        beta = ex.beta;
        tau = ex.tau;
    }
    const double eta = std::min(beta, tau);
    out.diag["exponents"] = {{"alpha", alpha}, {"beta", beta}, {"tau", tau}, {"eta", eta}};

    // annulus-decay premise, measured
    const double frac = K.A_log * std::log(S.N) / S.N;
    const double rA = S.r * (1 - frac);
    const double required = std::pow(S.N, -2 * K.p - 1);
    if (!(frac < 1) || rA < L.grid.ring_radius(1))
        return out.branch_to(Verdict::Skipped, "annulus r(1 - A log N / N) falls outside the grid");
    const double decay = energy_inside(S.u, rA) / energy_inside(S.u, S.r);
    out.diag["premise"] = {{"r_A", rA}, {"energy_ratio", decay}, {"required", required}};
    if (!(decay <= required))
        return out.branch_to(Verdict::Skipped, "annulus decay " + io::format_double(decay) + " exceeds N^(-2p-1) = " +
                                                   io::format_double(required));

    const double delta = cfg.params.value("perturb", false) ? std::pow(S.N, -tau) : 0.0;
    CoefficientField abar = homogeneous_projection(S.a, S.r);
    if (delta > 0) {
        const auto base = abar;
        abar = CoefficientField::scalar_field(
                   2,
                   [base, delta](const Point& x) {
                       const double n = std::hypot(x[0], x[1]);
                       return base.scalar(x) + (n > 0 ? delta * std::cos(3 * std::atan2(x[1], x[0])) : 0.0);
                   },
                   {{"kind", "homogeneous_perturbation"}, {"base", base.config()}, {"delta", delta}})
                   .as_zero_homogeneous();
    }
    out.diag["delta"] = delta;
    const RingFunctionals rb(S.u, abar);
    std::vector<double> kappas{0.5, 0.9};
    if (cfg.params.contains("kappa")) kappas = cfg.params.at("kappa").get<std::vector<double>>();
    double C = 0.0, max_excess = -INFINITY;
    json steps = json::array();
    for (double s : cfg.radii.s) {
        if (s <= 0) continue;
        const double r1 = S.r * (1 - s / S.N), r2 = r1 * (1 - s / S.N);
        const double excess = two_scale_frequency(rb, r1, r2) - two_scale_frequency(rb, S.r, r1);
        max_excess = std::max(max_excess, excess);
        for (double kap : kappas) {
            const double unit = std::pow(S.N, 1 - 2 * kap * eta);
            out.margin("key_step", r2, excess, K.C1 * unit);
            C = std::max(C, fit_ratio(excess, unit));
        }
        steps.push_back({{"s", s}, {"r1", r1}, {"r2", r2}, {"excess", excess}});
    }
    out.constant("C_key", C);
    out.diag["steps"] = steps;
    out.diag["max_excess"] = num(max_excess);
    return out;
}

LevelResult dichot3_level(const ScenarioConfig& cfg, const Level& L) {
    LevelResult out;
    if (!require_iso(cfg, out)) return out;
    const auto S = iso_setup(cfg, L, cfg.radii.r);
    if (L.factor == 1) validate_holder(S.a, cfg, out);
    out.diag["field"] = field_summary(S.a);
    out.diag["r"] = S.r;
    out.diag["N"] = S.N;
    double alpha = cfg.params.value("alpha", 1.0), C_h = cfg.params.value("C_h", 0.0);
    if (S.a.holder()) {
        alpha = S.a.holder()->alpha;
        C_h = S.a.holder()->C_h;
    }
    const double top = std::pow(S.r, -alpha / 2);
    out.diag["window"] = {cfg.constants.N0, top};
    if (S.N < cfg.constants.N0 || S.N > top)
        return out.branch_to(Verdict::AlternativeOne, "N(r) = " + io::format_double(S.N) + " outside [N0, r^(-alpha/2)]");
    const double unit = C_h * std::pow(S.r, alpha / 2);
    double C = 0.0;
    for (double s : cfg.radii.s) {
        const double rs = S.r * (1 - s / S.N);
        const double inc = N_at(S.rf, rs, WeightKind::ScalarWeighted) - S.N;
        out.margin("increment", rs, inc, cfg.constants.C1 * unit);
        C = std::max(C, fit_ratio(inc, unit, 1e-9));
    }
    out.constant("C_dichot3", C);
    const double r1 = S.r * (1 - 1 / S.N);
    out.margin("terminal", r1, N_at(S.rf, r1, WeightKind::ScalarWeighted), std::pow(r1, -alpha / 2));
    return out;
}

LevelResult iso_cascade_level(const ScenarioConfig& cfg, const Level& L) {
    LevelResult out;
    if (!require_iso(cfg, out)) return out;
    const auto a = CoefficientField::from_json(cfg.field);
    if (L.factor == 1) validate_holder(a, cfg, out);
    out.diag["field"] = field_summary(a);
    const double alpha = a.holder() ? a.holder()->alpha : cfg.params.value("alpha", 1.0);
    if (!(alpha > 2.0 / 3.0)) return out.branch_to(Verdict::HypothesisUnmet, "Holder exponent must exceed 2/3");
    const auto u = cached_solve(a, L.grid, data_for(cfg, L.grid));
    const RingFunctionals rf(u, a);
    const auto& K = cfg.constants;
    const double r_hi = L.grid.ring_radius(snap_ring(L, cfg.radii.r_hi));
    double r_lo = cfg.radii.r_lo;
    bool partial = false;
    if (r_lo < L.grid.ring_radius(4)) {
        r_lo = L.grid.ring_radius(4);
        partial = true;
    }
    // profile down to the deepest nonvanishing ring
    std::vector<double> radii, N;
    for (double t : grid_radii(L.grid, r_lo, r_hi)) {
        try {
            N.push_back(N_at(rf, t, WeightKind::ScalarWeighted));
            radii.push_back(t);
        } catch (const VanishingBoundary&) {
            partial = true;
            break;
        }
    }
    if (radii.size() < 3) return out.branch_to(Verdict::Partial, "fewer than three verified scales");
    const double N_top = N.front();
    const double sup = *std::max_element(N.begin(), N.end());
    const double factor = cfg.params.value("growth_factor", 1.5);
    out.margin("sup_growth", radii.back(), sup / N_top, factor);
    out.constant("N_top", N_top);
    out.constant("sup_N", sup);
    out.diag["deepest_scale"] = radii.back();
    out.diag["profile"] = {{"r", radii}, {"N", N}};

    // dyadic windows [w^{k+1} r, w^k r]
    const double wr = cfg.params.value("window_ratio", 0.5);
    const double eps = std::max(K.eps, 1e-300);
    const double ref = std::max(N_top, K.N0);
    double C_dy = 0.0;
    for (int k = 1;; ++k) {
        const double hi = std::pow(wr, k) * r_hi, lo = hi * wr;
        if (lo < radii.back()) break;
        double best = INFINITY;
        for (std::size_t m = 0; m < radii.size(); ++m)
            if (radii[m] >= lo && radii[m] <= hi) best = std::min(best, N[m]);
        if (!std::isfinite(best)) continue;
        out.margin("dyadic", hi, best / ref, std::pow(1 + K.C1 * K.eps, k));
        C_dy = std::max(C_dy, fit_ratio(std::pow(best / ref, 1.0 / k) - 1, eps));
    }
    out.constant("C_dyadic", C_dy);

    // doubling and two-scale profiles down the schedule
    double max_dbl = 0.0, max_two = -INFINITY;
    for (double r : cfg.radii.doubling) {
        if (r > r_hi * (1 + 1e-12) || r / 2 < radii.back()) continue;
        const double d = doubling_index(rf, r);
        const double nt = two_scale_frequency(rf, r, r / 2);
        max_dbl = std::max(max_dbl, d);
        max_two = std::max(max_two, nt);
        out.margin("doubling_power", r, d, std::max(K.N0, std::pow(std::max(N_top, 1.0), K.C1)) + 2 * sup);
    }
    out.constant("max_doubling", max_dbl, 1e-3);
    if (std::isfinite(max_two)) out.constant("max_two_scale", max_two, 1e-3);
    const double target = std::max(sup, max_dbl / 2);
    out.constant("C_power", N_top > 1 && target > K.N0 ? std::log(target) / std::log(N_top) : 0.0);

    // running sup against r
    std::vector<double> rs, sups;
    double run = -INFINITY;
    for (std::size_t m = 0; m < radii.size(); ++m) {
        run = std::max(run, N[m]);
        rs.push_back(radii[m]);
        sups.push_back(run);
    }
    double law = NAN;
    try {
        law = fit_power_law(rs, sups);
    } catch (const DomainError&) {
    }
    out.diag["sup_growth_exponent"] = num(law);
    if (partial) out.branch_to(Verdict::Partial, "resolution floor reached at r = " + io::format_double(radii.back()));
    return out;
}

// ------------------------------------------------ Schroedinger reduction

struct SchGrids {
    PolarGrid small, big;
    int ring;  // index of r0 on the big grid
};

SchGrids schroedinger_grids(const ScenarioConfig& cfg, double r0, int factor) {
    const auto s0 = PolarGrid::make(cfg.n_r, cfg.n_theta, r0);
    const int m = static_cast<int>(std::ceil(std::log(2.0) / s0.ds() - 1e-9));
    const auto b0 = PolarGrid::make(cfg.n_r + m, cfg.n_theta, r0 * std::exp(m * s0.ds()), s0.span() + m * s0.ds());
    if (factor == 1) return {s0, b0, cfg.n_r};
    const auto b1 = b0.refined();
    return {b1.truncated(2 * cfg.n_r), b1, 2 * cfg.n_r};
}

/// Volume-form frequency r E(r) / H(r) at ring i, E without the reaction term.
double volume_N(const DiscreteSolution& u, const RingFunctionals& rf, int i) {
    return u.grid().ring_radius(i) * u.cumulative_energy()[i] / rf.H()[i];
}

LevelResult schroedinger_level(const ScenarioConfig& cfg, const Level& L) {
    LevelResult out;
    if (!require_iso(cfg, out)) return out;
    const auto a = CoefficientField::from_json(cfg.field);
    if (L.factor == 1) validate_holder(a, cfg, out);
    out.diag["field"] = field_summary(a);
    const double V = cfg.params.value("V", 1.0);
    const double r0 = cfg.radii.r;
    const double C1 = cfg.constants.C1;
    const std::string vkey = "V=" + io::format_double(V);
    SolveOptions opts;
    opts.potential = [V](const Point&) { return V; };

    const auto G = schroedinger_grids(cfg, r0, L.factor);
    out.diag["r0"] = r0;
    out.diag["outer_radius"] = G.big.radius();
    const auto v = cached_solve(a, G.big, std::vector<double>(G.big.n_theta(), 2.0), opts, vkey);
    const auto [lo_it, hi_it] = std::minmax_element(v.values().begin(), v.values().end());
    const double vmin = *lo_it, vmax = *hi_it;
    out.diag["v_range"] = {vmin, vmax};
    if (vmin < 1) {
        // largest admissible r0 (min v >= 1) by bisection on a coarse grid
        const int steps = cfg.params.value("bisection_steps", 24);
        auto min_v = [&](double rr) {
            const auto g = PolarGrid::make(64, 64, 2 * rr);
            const auto w = solve_dirichlet(a, g, std::vector<double>(64, 2.0), opts);
            return *std::min_element(w.values().begin(), w.values().end());
        };
        double lo = 0.0, hi = r0;
        for (int k = 0; k < steps; ++k) {
            const double mid = 0.5 * (lo + hi);
            (min_v(mid) >= 1 ? lo : hi) = mid;
        }
        out.diag["admissible_r0"] = lo;
        out.diag["v_nonpositive"] = vmin <= 0;
        return out.branch_to(Verdict::RegimeError, "min v = " + io::format_double(vmin) + " < 1; admissible r0 about " +
                                                       io::format_double(lo));
    }
    out.margin("v_upper", r0, vmax, C1);
    out.margin("v_lower", r0, 1.0, vmin);

    double grad = 0.0;
    for (int i = 1; i <= G.ring; ++i)
        for (int j = 0; j < G.big.n_theta(); ++j) {
            const Point d = v.gradient_at(i, j);
            grad = std::max(grad, std::hypot(d[0], d[1]));
        }
    out.constant("C_vgrad", grad / C1);
    out.diag["max_grad_v"] = grad;

    const auto u = cached_solve(a, G.big, data_for(cfg, G.big), opts, vkey);
    std::vector<double> wdata(G.big.n_theta());
    for (int j = 0; j < G.big.n_theta(); ++j) wdata[j] = u.value(G.ring, j) / v.value(G.ring, j);
    const auto av2 = CoefficientField::scalar_field(
        2,
        [a, v, R = G.big.radius()](const Point& x) {
            // ellipticity sampling reaches past the v grid; clamp radially there
            const double n = std::hypot(x[0], x[1]);
            const double c = n > R ? R * (1 - 1e-12) / n : 1.0;
            const double s = v.value_at({x[0] * c, x[1] * c, 0.0});
            return a.scalar(x) * s * s;
        },
        {{"kind", "schroedinger_weight"},
         {"base", a.config()},
         {"V", V},
         {"r0", r0},
         {"grid", G.big.to_json()}});
    const auto w = cached_solve(av2, G.small, wdata);
    const RingFunctionals ru(u, a), rw(w, av2);

    double worst = 1.0, ratio_top = NAN;
    std::vector<double> ratios;
    for (int i = std::max(4, G.ring / 4); i <= G.ring; ++i) {
        const double q = volume_N(w, rw, i) / volume_N(u, ru, i);
        ratios.push_back(q);
        worst = std::max({worst, q, 1 / q});
        if (i == G.ring) ratio_top = q;
    }
    out.margin("comparability", r0, worst, C1);
    out.constant("C_compare", worst);
    out.diag["ratio_at_r0"] = ratio_top;
    out.diag["N_u"] = volume_N(u, ru, G.ring);
    out.diag["N_w"] = volume_N(w, rw, G.ring);
    return out;
}

// ------------------------------------------------ appendix stability

double spectral_gap(const Mat& A, const Mat& B) {
    const double d00 = A[0] - B[0], d11 = A[4] - B[4], d01 = 0.5 * ((A[1] - B[1]) + (A[3] - B[3]));
    return std::abs(0.5 * (d00 + d11)) + std::hypot(0.5 * (d00 - d11), d01);
}

LevelResult stability_level(const ScenarioConfig& cfg, const Level& L) {
    LevelResult out;
    const auto A0 = CoefficientField::from_json(cfg.field);
    const auto A1 = CoefficientField::from_json(cfg.field_alt);
    out.diag["field"] = field_summary(A0);
    out.diag["field_alt"] = field_summary(A1);
    const auto g = data_for(cfg, L.grid);
    const auto u0 = cached_solve(A0, L.grid, g);
    const auto u1 = cached_solve(A1, L.grid, g);
    const auto& op0 = u0.op();
    std::vector<double> w(u0.values().size());
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = u0.values()[k] - u1.values()[k];
    const double D0 = sum(op0.layer_energies_identity(u0.values()));
    const double D1 = sum(op0.layer_energies_identity(u1.values()));
    const double Dw = sum(op0.layer_energies_identity(w));
    const double E00 = sum(op0.layer_energies(u0.values()));
    const double E01 = sum(op0.layer_energies(u1.values()));
    const double lambda0 = std::min(op0.discrete_lambda(), u1.op().discrete_lambda());
    out.diag["lambda0"] = lambda0;
    if (D0 <= 0) return out.branch_to(Verdict::HypothesisUnmet, "boundary data has no energy");
    out.margin("qst_1", 1.0, Dw / D0, (E01 - E00) / (lambda0 * D0));

    const int i = snap_ring(L, cfg.radii.r);
    const double r = L.grid.ring_radius(i);
    double eps = 0.0;
    for (int k = i; k <= L.grid.n_r(); ++k)
        for (int j = 0; j < L.grid.n_theta(); ++j) {
            const Point x = L.grid.position(k, j);
            eps = std::max(eps, spectral_gap(A0.matrix(x), A1.matrix(x)));
        }
    const double d0 = u0.cumulative_energy_identity()[i] / D0;
    const double d1 = u1.cumulative_energy_identity()[i] / sum(u1.op().layer_energies_identity(u1.values()));
    const double delta = std::max(d0, d1);
    out.diag["r"] = r;
    out.diag["eps_measured"] = eps;
    out.diag["delta_measured"] = {d0, d1};
    const double Dmin = std::min(D0, D1);
    out.margin("qst_2", r, Dw / Dmin, cfg.constants.C1 * (eps + delta));
    out.constant("C_qst2", fit_ratio(Dw / Dmin, eps + delta, 1e-14));
    out.margin("qst3", r, Dw / D0, cfg.constants.C1 * (eps + std::sqrt(d0)));
    out.constant("C_qst3", fit_ratio(Dw / D0, eps + std::sqrt(d0), 1e-14));
    return out;
}

}  // namespace

// ---------------------------------------------------------------- entry points

ExperimentReport run_dichotomy_anisotropic(const ScenarioConfig& cfg, const RunOptions& o) {
    return run_levels(cfg, o, dichot_level);
}
ExperimentReport run_approx_v(const ScenarioConfig& cfg, const RunOptions& o) { return run_levels(cfg, o, approx_v_level); }
ExperimentReport run_freq_cascade(const ScenarioConfig& cfg, const RunOptions& o) {
    return run_levels(cfg, o, freq_cascade_level);
}
ExperimentReport run_eps_approx_iso(const ScenarioConfig& cfg, const RunOptions& o) {
    return run_levels(cfg, o, eps_approx_level);
}
ExperimentReport run_tildeN_comparison(const ScenarioConfig& cfg, const RunOptions& o) {
    return run_levels(cfg, o, tildeN_level);
}
ExperimentReport run_thin_annulus(const ScenarioConfig& cfg, const RunOptions& o) {
    return run_levels(cfg, o, thin_annulus_level);
}
ExperimentReport run_key_approx(const ScenarioConfig& cfg, const RunOptions& o) { return run_levels(cfg, o, key_approx_level); }
ExperimentReport run_dichot3(const ScenarioConfig& cfg, const RunOptions& o) { return run_levels(cfg, o, dichot3_level); }
ExperimentReport run_iso_cascade(const ScenarioConfig& cfg, const RunOptions& o) {
    return run_levels(cfg, o, iso_cascade_level);
}
ExperimentReport run_schroedinger_reduction(const ScenarioConfig& cfg, const RunOptions& o) {
    return run_levels(cfg, o, schroedinger_level);
}
ExperimentReport run_stability_suite(const ScenarioConfig& cfg, const RunOptions& o) {
    return run_levels(cfg, o, stability_level);
}

ExperimentReport run_scenario(const ScenarioConfig& cfg, const RunOptions& o) {
    static const std::map<std::string, ExperimentReport (*)(const ScenarioConfig&, const RunOptions&)> table{
        {"dichot", run_dichotomy_anisotropic}, {"approx_v", run_approx_v},
        {"freq_cascade", run_freq_cascade},    {"eps_approx", run_eps_approx_iso},
        {"tildeN", run_tildeN_comparison},     {"thin_annulus", run_thin_annulus},
        {"key_approx", run_key_approx},        {"dichot3", run_dichot3},
        {"iso_cascade", run_iso_cascade},      {"schroedinger", run_schroedinger_reduction},
        {"stability", run_stability_suite}};
    const auto it = table.find(cfg.scenario);
    if (it == table.end()) throw ConfigError("unknown scenario '" + cfg.scenario + "'");
    return it->second(cfg, o);
}

// ---------------------------------------------------------------- default sweep

std::vector<ScenarioConfig> default_sweep() {
    const json loglip = {{"kind", "modulus_aniso"},
                         {"params", {{"kappa", 0.3}, {"modulus", {{"kind", "log_power"}, {"params", {{"p", 1.0}}}}}}}};
    const json holder75 = {{"kind", "holder"}, {"params", {{"alpha", 0.75}, {"amplitude", 0.05}}}, {"seed", 11}};
    const json holder_small = {{"kind", "holder"}, {"params", {{"alpha", 0.75}, {"amplitude", 0.01}}}, {"seed", 11}};
    const json mix345 = {{"kind", "harmonic_mix"}, {"terms", {{3, 0.7}, {4, 1.3}, {5, 0.0}}}};
    auto make = [](json j) {
        j["schema_version"] = ScenarioConfig::kSchemaVersion;
        if (!j.contains("grid")) j["grid"] = {{"n_r", 128}, {"n_theta", 128}};
        return ScenarioConfig::from_json(j);
    };
    std::vector<ScenarioConfig> out;
    out.push_back(make({{"scenario", "dichot"},
                        {"id", "dichot_loglip"},
                        {"field", loglip},
                        {"boundary", mix345},
                        {"radii", {{"r", 0.7}}}}));
    out.push_back(make({{"scenario", "dichot"},
                        {"id", "dichot_identity"},
                        {"field", {{"kind", "identity"}}},
                        {"boundary", {{"kind", "harmonic"}, {"k", 3}}},
                        {"radii", {{"r", 0.7}}}}));
    out.push_back(make({{"scenario", "approx_v"},
                        {"id", "approx_v_power"},
                        {"field",
                         {{"kind", "modulus_aniso"},
                          {"params", {{"kappa", 0.2}, {"modulus", {{"kind", "power"}, {"params", {{"alpha", 0.7}}}}}}}}},
                        {"boundary", {{"kind", "random_trig"}, {"degree", 4}}},
                        {"seed", 5},
                        {"radii", {{"r", 0.45}}},
                        {"constants", {{"eps", 0.05}}}}));
    out.push_back(make({{"scenario", "freq_cascade"},
                        {"id", "freq_cascade_loglip"},
                        {"field", loglip},
                        {"boundary", mix345},
                        {"radii", {{"r_lo", 0.02}, {"r_hi", 0.8}}}}));
    out.push_back(make({{"scenario", "freq_cascade"},
                        {"id", "freq_cascade_power"},
                        {"field",
                         {{"kind", "modulus_aniso"},
                          {"params", {{"kappa", 0.2}, {"modulus", {{"kind", "power"}, {"params", {{"alpha", 0.7}}}}}}}}},
                        {"boundary", {{"kind", "harmonic"}, {"k", 2}}}}));
    out.push_back(make({{"scenario", "eps_approx"},
                        {"id", "eps_approx_affine"},
                        {"field", {{"kind", "affine"}, {"params", {{"c0", 1.0}, {"gradient", {0.05, 0.0}}}}}},
                        {"boundary", {{"kind", "harmonic"}, {"k", 4}}},
                        {"radii", {{"r", 0.7}}},
                        {"constants", {{"C1", 20.0}}}}));
    out.push_back(make({{"scenario", "tildeN"},
                        {"id", "tildeN_holder"},
                        {"field", holder75},
                        {"boundary", {{"kind", "harmonic_mix"}, {"terms", {{3, 0.0}, {2, 1.0}}}}},
                        {"radii", {{"r", 0.7}}},
                        {"constants", {{"eps", 0.06}}}}));
    out.push_back(make({{"scenario", "thin_annulus"},
                        {"id", "thin_annulus_holder"},
                        {"field", holder_small},
                        {"boundary", {{"kind", "harmonic"}, {"k", 6}}},
                        {"radii", {{"r", 0.8}}},
                        {"constants", {{"N0", 3.0}, {"A_log", 1.5}, {"gamma", 0.5}}}}));
    out.push_back(make({{"scenario", "key_approx"},
                        {"id", "key_approx_holder"},
                        {"field", holder_small},
                        {"boundary", {{"kind", "harmonic"}, {"k", 6}}},
                        {"radii", {{"r", 0.8}, {"s", {0.5, 1.0}}}},
                        {"constants", {{"N0", 3.0}}}}));
    out.push_back(make({{"scenario", "dichot3"},
                        {"id", "dichot3_holder"},
                        {"field", holder75},
                        {"boundary", {{"kind", "harmonic"}, {"k", 2}}},
                        {"radii", {{"r", 0.1}}},
                        {"constants", {{"N0", 1.5}}}}));
    out.push_back(make({{"scenario", "iso_cascade"},
                        {"id", "iso_cascade_holder"},
                        {"field", holder75},
                        {"boundary", {{"kind", "random_trig"}, {"degree", 4}}},
                        {"seed", 7},
                        {"radii", {{"r_lo", 0.05}, {"r_hi", 0.8}, {"doubling", {0.8, 0.4, 0.2, 0.1}}}}}));
    out.push_back(make({{"scenario", "schroedinger"},
                        {"id", "schroedinger_V1"},
                        {"field", {{"kind", "identity"}}},
                        {"boundary", {{"kind", "harmonic_mix"}, {"terms", {{1, 0.0}, {2, 0.3}}}}},
                        {"radii", {{"r", 0.2}}},
                        {"constants", {{"C1", 3.0}}},
                        {"params", {{"V", 1.0}}}}));
    out.push_back(make({{"scenario", "stability"},
                        {"id", "stability_bump"},
                        {"field", {{"kind", "identity"}}},
                        {"field_alt",
                         {{"kind", "perturbed"},
                          {"params", {{"base", {{"kind", "identity"}}}, {"eps", 0.1}, {"r_in", 0.5}, {"r_out", 0.95}}}}},
                        {"boundary", {{"kind", "harmonic"}, {"k", 6}}},
                        {"radii", {{"r", 0.5}}}}));
    out.push_back(make({{"scenario", "stability"},
                        {"id", "stability_same"},
                        {"field", {{"kind", "random_smooth"}, {"params", {{"amplitude", 0.2}}}, {"seed", 4}}},
                        {"field_alt", {{"kind", "random_smooth"}, {"params", {{"amplitude", 0.2}}}, {"seed", 4}}},
                        {"boundary", {{"kind", "random_trig"}, {"degree", 4}}},
                        {"seed", 2},
                        {"radii", {{"r", 0.5}}}}));
    return out;
}

}  // namespace freqlab
