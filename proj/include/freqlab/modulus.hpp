#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace freqlab {

enum class ModulusKind { Linear, Power, LogPower, Tabulated };

/// A modulus of continuity omega on [0, 1]: omega(0) = 0, nondecreasing, concave, positive on (0, 1].
///
/// The parametric families are Linear (omega(t) = t), Power (t^alpha) and LogPower
/// (t log(1/t)^p on (0, t_cut] with t_cut = e^{-p}, constant past t_cut where the
/// formula attains its maximum). Tabulated moduli interpolate samples log-log.
class Modulus {
public:
    static Modulus linear();
    static Modulus power(double alpha);
    static Modulus log_power(double p);
    static Modulus tabulated(std::vector<std::pair<double, double>> samples);

    double omega(double t) const;

    ModulusKind kind() const { return kind_; }
    double alpha() const { return alpha_; }
    double p() const { return p_; }
    double t_cut() const { return t_cut_; }
    const std::vector<std::pair<double, double>>& samples() const { return samples_; }

    bool is_parametric() const { return kind_ != ModulusKind::Tabulated; }

    nlohmann::json to_json() const;
    static Modulus from_json(const nlohmann::json& j);

private:
    Modulus() = default;

    ModulusKind kind_ = ModulusKind::Linear;
    double alpha_ = 1.0;
    double p_ = 0.0;
    double t_cut_ = 1.0;
    double omega_cut_ = 1.0;
    std::vector<std::pair<double, double>> samples_;
};

const char* to_string(ModulusKind kind);

/// phi(s) = omega(s) / s, decreasing on (0, 1].
double eval_phi(const Modulus& m, double s);
/// psi(s) = phi(1 / s), increasing on [1, inf).
double eval_psi(const Modulus& m, double s);

enum class OsgoodVerdict { Osgood, NonOsgood, Inconclusive };
const char* to_string(OsgoodVerdict v);

struct OsgoodReport {
    OsgoodVerdict verdict = OsgoodVerdict::Inconclusive;
    OsgoodVerdict numeric_verdict = OsgoodVerdict::Inconclusive;
    bool analytic_override = false;
    // I_k = int_{2^-k}^1 dt / omega(t), k = 1..depth
    std::vector<double> partial_integrals;
    // least-squares decay exponent q of the dyadic increments d_k ~ k^-q over the tail
    double decay_exponent = 0.0;
    // tail ratio d_{k+1} / d_k averaged over the last levels
    double tail_ratio = 0.0;

    nlohmann::json to_json() const;
};

/// Numerically classifies the Osgood condition int_0 dt / omega = inf from dyadic partial integrals.
/// For parametric kinds the analytic verdict overrides the numeric one (both are reported).
OsgoodReport classify_osgood(const Modulus& m, int depth = 40);

/// Verdict from a sequence of dyadic increments; shared by the Osgood and phi-integrability checks.
OsgoodVerdict classify_increments(const std::vector<double>& increments, double* decay_exponent,
                                  double* tail_ratio, double* tail_estimate);

struct SubmultiplicativeReport {
    bool holds = false;
    double worst_ratio = 0.0;
    double constant = 0.0;
    std::size_t samples = 0;
    nlohmann::json to_json() const;
};

/// Checks psi(xy) <= C_M psi(x) psi(y) on a log grid of [lower, 1e6]^2.
SubmultiplicativeReport check_submultiplicative_psi(const Modulus& m, double C_M,
                                                    std::size_t sample_count, double lower = 1.0);

/// Checks phi(st) <= C phi(s) phi(t) on a log grid of [1e-12, 1/C]^2.
SubmultiplicativeReport check_phi_submultiplicative(const Modulus& m, double C,
                                                    std::size_t sample_count = 64);

struct IntegrabilityReport {
    bool finite = false;
    double value_or_bound = 0.0;
    std::vector<double> partial_integrals;
    nlohmann::json to_json() const;
};

/// int_0^1 phi(s) ds by dyadic refinement toward 0.
IntegrabilityReport check_phi_integrable(const Modulus& m, int depth = 40);

/// Exponents (beta, tau, eta) for the isotropic induction:
/// tau (2 - beta) + eta < 1 and beta tau > 1/2 + 2 eta, with beta in (2/3, alpha).
struct ExponentTriple {
    double beta = 0.0;
    double tau = 0.0;
    double eta = 0.0;

    bool valid() const;
    nlohmann::json to_json() const;
};

ExponentTriple select_exponents(double alpha);

}  // namespace freqlab
