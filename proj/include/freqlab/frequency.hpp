#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "freqlab/coefficients.hpp"
#include "freqlab/solver.hpp"

namespace freqlab {

enum class WeightKind { MuWeighted, ScalarWeighted };
const char* to_string(WeightKind k);

/// Ring-level functionals of a solution: D (flux form), H = int u^2 mu dsigma for a weight field,
/// and the plain sphere mean of u^2. Off-grid radii are interpolated (cubic Lagrange in log r,
/// on log Q when Q > 0) and flagged.
class RingFunctionals {
public:
    RingFunctionals(const DiscreteSolution& u, const CoefficientField& weight);

    const DiscreteSolution& solution() const { return u_; }
    const std::vector<double>& D() const { return D_; }
    const std::vector<double>& H() const { return H_; }
    /// r^{-n+1} H
    const std::vector<double>& h() const { return h_; }

    double D_at(double r, bool* interpolated = nullptr) const;
    double H_at(double r, bool* interpolated = nullptr) const;
    double h_at(double r, bool* interpolated = nullptr) const;
    /// Mean of u^2 over the circle of radius r (unweighted).
    double sphere_mean_at(double r, bool* interpolated = nullptr) const;
    /// Throws VanishingBoundary if H(r) is below the noise floor relative to the grid mean of u^2.
    void require_nonvanishing(double r) const;

private:
    double sample(const std::vector<double>& q, double r, bool* interpolated) const;

    DiscreteSolution u_;
    std::vector<double> D_, H_, h_, mean_;
    double noise_floor_ = 0.0;
};

/// Ring radii of the grid inside [r_lo, r_hi], decreasing.
std::vector<double> grid_radii(const PolarGrid& grid, double r_lo, double r_hi);

double dirichlet_energy(const DiscreteSolution& u, double r);
/// Cumulative element energy inside r (volume form, cross-check).
double dirichlet_energy_volume(const DiscreteSolution& u, double r);
double boundary_mass(const DiscreteSolution& u, const CoefficientField& f, double r, bool* interpolated = nullptr);
/// r^{-n+1} int a_bar u^2 dsigma
double boundary_mass_scalar(const DiscreteSolution& u, const CoefficientField& abar, double r,
                            bool* interpolated = nullptr);

struct FrequencyProfile {
    std::vector<double> radii;  // decreasing
    std::vector<double> D, H, N;
    std::vector<bool> interpolated;
    WeightKind weight_kind = WeightKind::MuWeighted;

    std::string to_csv() const;
    nlohmann::json to_json() const;
    std::string to_svg(const std::string& title) const;
    /// N at the sample closest to r.
    double N_near(double r) const;
};

/// N(r) = r D(r) / H(r); H with the mu weight of f (isotropic f: weight a, reported as ScalarWeighted).
FrequencyProfile almgren_frequency(const DiscreteSolution& u, const CoefficientField& f, std::vector<double> radii);
FrequencyProfile almgren_frequency(const RingFunctionals& rf, std::vector<double> radii, WeightKind kind);

/// log(h(r) / h(rho)) / (2 log(r / rho)), h = boundary_mass_scalar.
double two_scale_frequency(const DiscreteSolution& u, const CoefficientField& abar, double r, double rho);
double two_scale_frequency(const RingFunctionals& rf, double r, double rho);

/// log2 of the ratio of sphere means of u^2 at r and r/2.
double doubling_index(const DiscreteSolution& u, double r);
double doubling_index(const RingFunctionals& rf, double r);
/// log2(H(r) / H(r/2)) with the weighted boundary mass.
double mass_doubling(const RingFunctionals& rf, double r);

enum class FitStatus { Ok, Indeterminate };

struct VanishingOrderFit {
    FitStatus status = FitStatus::Ok;
    double N_hat = 0.0;
    double residual = 0.0;  // RMS of the log-log fit
    nlohmann::json to_json() const;
};

/// Least-squares slope of log(mean_{B_r} u^2) against log r, halved. Needs >= 5 radii over >= 2 octaves.
VanishingOrderFit vanishing_order(const DiscreteSolution& u, const std::vector<double>& radii);

struct MonotonicityReport {
    std::vector<double> radii;
    std::vector<double> slopes;    // d log N / dr
    std::vector<double> required;  // per-radius smallest C
    double fitted_C = 0.0;
    double median_C = 0.0;
    double min_slope = 0.0;
    std::vector<double> violations;  // radii failing with C = 10 x median
    nlohmann::json to_json() const;
};

/// Checks d/dr log N >= -C (M + delta / r) by centered differences in log r.
/// Slopes above -1e-9 count as nonnegative.
MonotonicityReport verify_almost_monotonicity(const FrequencyProfile& profile, double M, double delta);

struct HIdentityReport {
    std::vector<double> radii;
    std::vector<double> error;  // e(r)
    double sup_error = 0.0;
    double sup_normalized = 0.0;  // sup |e| / (M + delta / r); equals sup_error when M = delta = 0
    nlohmann::json to_json() const;
};

/// e(r) = d/dr log(r^{-n+1} H(r)) - 2 N(r) / r at the grid rings nearest to `radii`.
HIdentityReport verify_H_identity(const DiscreteSolution& u, const CoefficientField& f,
                                  const std::vector<double>& radii, double M = 0.0, double delta = 0.0);

struct HomogeneousMonotonicityReport {
    std::vector<double> radii;  // increasing
    std::vector<double> N;
    double max_violation = 0.0;       // max over consecutive radii of (N_i - N_{i+1})^+
    double relative_violation = 0.0;  // max_violation / max N
    double h_identity_residual = 0.0;  // sup |d/ds log h - 2 N|
    double tolerance = 5e-3;
    bool monotone = true;
    nlohmann::json to_json() const;
};

/// N along the grid rings inside [r_lo, r_hi] for a solution with 0-homogeneous scalar coefficient abar.
HomogeneousMonotonicityReport verify_homogeneous_monotonicity(const DiscreteSolution& u, const CoefficientField& abar,
                                                              double r_lo, double r_hi, double tolerance = 5e-3);

/// (1 / log(r / rho)) int_rho^r N(t) dt / t by Simpson's rule over the grid rings.
double log_average_frequency(const RingFunctionals& rf, double r, double rho);

}  // namespace freqlab
