#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "freqlab/modulus.hpp"

namespace freqlab {

/// h(t) = int_1^t ds / (s psi(s)), computed as int_0^{log t} dx / psi(e^x).
double h_transform(const Modulus& m, double t);

/// Forcing term g of the growth inequalities. `integrable` certifies int_0^1 g < inf.
struct Forcing {
    std::function<double(double)> g;
    bool integrable = false;
    std::string name;

    static Forcing constant(double c);
    static Forcing phi_of(const Modulus& m);
    static Forcing zero();
};

/// int_t^1 g by Gauss-Kronrod on dyadic pieces; t = 0 is allowed for integrable g.
double integrate_forcing(const Forcing& g, double t);

struct GrowthBound {
    bool blowup = false;
    double bound = 0.0;   // B with h(B) = h(f1) + C1 int_t^1 g
    double rhs = 0.0;     // h(f1) + C1 int_t^1 g
    double h_guard = 0.0; // h at the overflow guard
    nlohmann::json to_json() const;
};

constexpr double kOverflowGuard = 1e12;

/// Inverts h(B) = h(f1) + C1 int_t^1 g by bisection on [f1, guard].
GrowthBound continuous_growth_bound(const Modulus& m, double f1, const Forcing& g, double C1, double t);
GrowthBound continuous_growth_bound_from_integral(const Modulus& m, double f1, double g_integral, double C1);

enum class GrowthVerdict { BoundedOnCompacts, BoundedGlobally, BlowupDetected };
const char* to_string(GrowthVerdict v);

struct GrowthTrace {
    // decimated samples (t_k, N_k); the first and last iterates are always kept
    std::vector<double> t;
    std::vector<double> N;
    GrowthVerdict verdict = GrowthVerdict::BoundedOnCompacts;
    double bound = 0.0;
    std::uint64_t steps = 0;
    std::uint64_t stride = 1;
    bool truncated = false; // iteration cap reached before t_floor
    double t_final = 1.0;

    nlohmann::json to_json() const;
    std::string to_csv() const;
};

struct CascadeOptions {
    double t_start = 1.0;
    double guard = kOverflowGuard;
    std::uint64_t max_steps = 100'000'000;
    std::size_t max_recorded = 1u << 20;
};

/// t_{k+1} = t_k (1 - 1/N_k), N_{k+1} = N_k + C1 t_k psi(N_k) g(t_k).
GrowthTrace discrete_cascade(const Modulus& m, double N0, const Forcing& g, double C1, double t_floor,
                             const CascadeOptions& options = {});

/// Smallest C1 reproducing the recorded increments of a full-resolution trace (stride 1).
double fit_cascade_constant(const Modulus& m, const GrowthTrace& trace, const Forcing& g);

/// Smallest C for which the piecewise-linear interpolant f of the trace satisfies
/// f'(t) >= -C f(t) psi(f(t)) g(t) at interval midpoints.
double interpolant_constant(const Modulus& m, const GrowthTrace& trace, const Forcing& g);

/// max over s in (t_floor, 1] of g(s) / g(gamma s), for each gamma.
struct DoublingCheck {
    std::vector<double> gammas;
    std::vector<double> constants;
    nlohmann::json to_json() const;
};
DoublingCheck spot_check_doubling(const Forcing& g, double t_floor,
                                  std::vector<double> gammas = {0.5, 0.75, 0.9});

}  // namespace freqlab
