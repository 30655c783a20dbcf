#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "freqlab/coefficients.hpp"
#include "freqlab/frequency.hpp"
#include "freqlab/solver.hpp"

namespace freqlab {

enum class Verdict {
    Consistent,
    MarginalViolations,
    Inconsistent,
    // branch verdicts: the scenario's hypothesis or alternative decided the outcome
    AlternativeOne,
    HypothesisUnmet,
    Skipped,
    BranchNotGood,
    Partial,
    RegimeError,
};

const char* to_string(Verdict v);
bool is_branch(Verdict v);
/// True for verdicts that count as success in a sweep (Consistent or any branch verdict).
bool is_acceptable(Verdict v);

/// Registered scenario names, in sweep order.
const std::vector<std::string>& scenario_names();

struct ScenarioConstants {
    double N0 = 2.0;
    double C1 = 10.0;
    double A_log = 2.7;  // A of the annulus-decay premise
    double p = 4.0;      // decay exponent of the annulus-decay premise
    double gamma = 0.5;
    double eps = 0.05;
    double delta = 0.0;
};

struct RadiusSchedule {
    double r = 0.7;
    double r_lo = 0.05;
    double r_hi = 0.8;
    std::vector<double> s{0.25, 0.5, 0.75, 1.0};
    std::vector<double> t;  // shell parameters; empty: 1 - eps {1/8, 1/4, 1/2, 3/4}
    std::vector<double> doubling{0.8, 0.4, 0.2};
};

/// One scenario run. JSON form:
/// {schema_version, scenario, id, field, field_alt, boundary, grid {n_r, n_theta}, radii, constants, seed, params}.
/// Unknown keys anywhere are ConfigErrors.
struct ScenarioConfig {
    static constexpr int kSchemaVersion = 1;

    std::string scenario;
    std::string id;
    nlohmann::json field;
    nlohmann::json field_alt;  // stability only
    nlohmann::json boundary = {{"kind", "harmonic"}, {"k", 3}};
    int n_r = 128;
    int n_theta = 128;
    RadiusSchedule radii;
    ScenarioConstants constants;
    std::uint64_t seed = 0;
    nlohmann::json params = nlohmann::json::object();
    // filled by validation
    std::vector<std::string> warnings;

    static ScenarioConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Dirichlet data from a boundary spec: harmonic {k, phase}, harmonic_mix {terms [[k, phase], ...]},
/// random_trig {degree} (seeded by the scenario seed), constant {value}; optional "scale".
std::vector<double> boundary_from_spec(const nlohmann::json& spec, const PolarGrid& grid, std::uint64_t seed);

struct MarginEntry {
    std::string name;
    double r = 0.0;
    double lhs = 0.0;  // dimensionless; the inequality reads lhs <= rhs
    double rhs = 0.0;
    double margin = 0.0;  // rhs - lhs
    std::optional<double> refined_lhs, refined_rhs, refined_margin;
    double delta = 0.0;  // refined_margin - margin
    bool holds = true;
    bool refined_holds = true;
};

struct ConstantEntry {
    std::string name;
    double value = 0.0;
    std::optional<double> refined;
    double relative_change = 0.0;
    double floor = 0.0;  // changes below this absolute size count as stable
    bool stable = true;
};

struct ExperimentReport {
    std::string scenario;
    std::string id;
    Verdict verdict = Verdict::Consistent;
    std::string reason;
    std::vector<std::string> violations;
    std::vector<std::string> warnings;
    std::vector<int> resolutions;  // n_r of each level
    std::vector<MarginEntry> margins;
    std::vector<ConstantEntry> constants;
    nlohmann::json diagnostics = nlohmann::json::object();

    const ConstantEntry* constant(const std::string& name) const;
    std::vector<const MarginEntry*> margins_named(const std::string& name) const;

    nlohmann::json to_json() const;
    std::string margins_csv() const;
    std::string margins_svg() const;
};

/// Margins hold when lhs <= rhs + kMarginTolerance * max(1, |rhs|).
constexpr double kMarginTolerance = 1e-6;
/// Fitted constants are stable when they move less than this between a resolution and its double.
constexpr double kStabilityThreshold = 0.25;
/// Absolute change below kConstantFloor * C1 counts as stable: such constants sit at discretization error.
constexpr double kConstantFloor = 1e-4;

struct RunOptions {
    /// Also run at twice the configured resolution and pair every margin and constant with it.
    bool refine = true;
};

ExperimentReport run_scenario(const ScenarioConfig& cfg, const RunOptions& options = {});

ExperimentReport run_dichotomy_anisotropic(const ScenarioConfig& cfg, const RunOptions& options = {});
ExperimentReport run_approx_v(const ScenarioConfig& cfg, const RunOptions& options = {});
ExperimentReport run_freq_cascade(const ScenarioConfig& cfg, const RunOptions& options = {});
ExperimentReport run_eps_approx_iso(const ScenarioConfig& cfg, const RunOptions& options = {});
ExperimentReport run_tildeN_comparison(const ScenarioConfig& cfg, const RunOptions& options = {});
ExperimentReport run_thin_annulus(const ScenarioConfig& cfg, const RunOptions& options = {});
ExperimentReport run_key_approx(const ScenarioConfig& cfg, const RunOptions& options = {});
ExperimentReport run_dichot3(const ScenarioConfig& cfg, const RunOptions& options = {});
ExperimentReport run_iso_cascade(const ScenarioConfig& cfg, const RunOptions& options = {});
ExperimentReport run_schroedinger_reduction(const ScenarioConfig& cfg, const RunOptions& options = {});
ExperimentReport run_stability_suite(const ScenarioConfig& cfg, const RunOptions& options = {});

/// The default sweep: every scenario at least once, ids unique.
std::vector<ScenarioConfig> default_sweep();

/// Least-squares slope of log y against log x over the pairs with x, y > 0.
double fit_power_law(const std::vector<double>& x, const std::vector<double>& y);

/// Solution cache. When the environment variable FREQLAB_CACHE names a directory, solves are
/// keyed by (field, grid, data, options) and their values stored there; hits skip the CG solve.
DiscreteSolution cached_solve(const CoefficientField& f, const PolarGrid& grid, const std::vector<double>& g,
                              const SolveOptions& options = {}, const std::string& potential_key = "");

/// Hex SHA-256 of a string.
std::string sha256_hex(const std::string& s);

}  // namespace freqlab
