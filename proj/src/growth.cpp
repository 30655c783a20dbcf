#include "freqlab/growth.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "freqlab/errors.hpp"
#include "freqlab/io.hpp"

namespace freqlab {

namespace {

template <class F>
double gk(F&& f, double a, double b) {
    using boost::math::quadrature::gauss_kronrod;
    return gauss_kronrod<double, 31>::integrate(f, a, b, 12, 1e-13);
}

}  // namespace

double h_transform(const Modulus& m, double t) {
    if (!(t >= 1.0)) throw DomainError("h_transform: t must be >= 1");
    if (m.kind() == ModulusKind::Linear) return std::log(t);
    const double X = std::log(t);
    auto f = [&](double x) { return 1.0 / eval_psi(m, std::exp(x)); };
    std::vector<double> cuts{0.0};
    for (double x = 2.0; x < X; x += 2.0) cuts.push_back(x);
    if (m.kind() == ModulusKind::LogPower && m.p() < X) cuts.push_back(m.p());
    cuts.push_back(X);
    std::sort(cuts.begin(), cuts.end());
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        if (cuts[i + 1] > cuts[i]) acc += gk(f, cuts[i], cuts[i + 1]);
    return acc;
}

Forcing Forcing::constant(double c) {
    if (!(c >= 0.0)) throw DomainError("forcing must be nonnegative");
    return {[c](double) { return c; }, true, "constant"};
}

Forcing Forcing::zero() { return {[](double) { return 0.0; }, true, "zero"}; }

Forcing Forcing::phi_of(const Modulus& m) {
    const bool finite = check_phi_integrable(m).finite;
    return {[m](double s) { return eval_phi(m, s); }, finite, "phi"};
}

double integrate_forcing(const Forcing& g, double t) {
    if (t >= 1.0) return 0.0;
    if (t < 0.0) throw DomainError("integrate_forcing: t must be >= 0");
    if (t == 0.0 && !g.integrable) return INFINITY;
    double acc = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const double b = std::ldexp(1.0, -k);
        const double a = std::max(std::ldexp(1.0, -k - 1), t);
        if (b <= t) break;
        const double piece = gk(g.g, a, b);
        acc += piece;
        if (a == t) break;
        if (t == 0.0 && k > 8 && piece <= 1e-17 * acc) break;
    }
    return acc;
}

nlohmann::json GrowthBound::to_json() const {
    nlohmann::json j{{"blowup", blowup}, {"rhs", rhs}, {"h_guard", h_guard}};
    j["verdict"] = blowup ? "BlowupDetected" : "Bounded";
    if (!blowup) j["bound"] = bound;
    return j;
}

GrowthBound continuous_growth_bound_from_integral(const Modulus& m, double f1, double g_integral, double C1) {
    if (!(f1 > 0.0)) throw DomainError("continuous_growth_bound: f1 must be positive");
    if (!(C1 > 0.0)) throw DomainError("continuous_growth_bound: C1 must be positive");
    GrowthBound out;
    // h is defined on [1, inf); values of f below 1 are lifted to 1, which only weakens the bound
    const double base = std::max(f1, 1.0);
    out.rhs = h_transform(m, base) + C1 * g_integral;
    out.h_guard = h_transform(m, kOverflowGuard);
    if (!(out.rhs <= out.h_guard)) {
        out.blowup = true;
        return out;
    }
    double lo = base, hi = kOverflowGuard;
    while (hi / lo - 1.0 > 1e-10) {
        const double mid = std::sqrt(lo * hi);
        (h_transform(m, mid) < out.rhs ? lo : hi) = mid;
    }
    out.bound = hi;
    return out;
}

GrowthBound continuous_growth_bound(const Modulus& m, double f1, const Forcing& g, double C1, double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("continuous_growth_bound: t must be in [0,1]");
    return continuous_growth_bound_from_integral(m, f1, integrate_forcing(g, t), C1);
}

const char* to_string(GrowthVerdict v) {
    switch (v) {
        case GrowthVerdict::BoundedOnCompacts: return "BoundedOnCompacts";
        case GrowthVerdict::BoundedGlobally: return "BoundedGlobally";
        case GrowthVerdict::BlowupDetected: return "BlowupDetected";
    }
    return "?";
}

nlohmann::json GrowthTrace::to_json() const {
    nlohmann::json j{{"verdict", to_string(verdict)}, {"steps", steps},    {"stride", stride},
                     {"truncated", truncated},       {"t_final", t_final}, {"recorded", t.size()}};
    if (verdict != GrowthVerdict::BlowupDetected) j["bound"] = bound;
    else j["bound"] = nullptr;
    return j;
}

std::string GrowthTrace::to_csv() const {
    io::CsvTable table({"t", "N"});
    for (std::size_t i = 0; i < t.size(); ++i) table.add_row(std::vector<double>{t[i], N[i]});
    return table.str();
}

GrowthTrace discrete_cascade(const Modulus& m, double N0, const Forcing& g, double C1, double t_floor,
                             const CascadeOptions& opt) {
    if (!(N0 > 1.0)) throw DomainError("discrete_cascade: N0 must exceed 1");
    if (!(C1 > 0.0)) throw DomainError("discrete_cascade: C1 must be positive");
    if (!(t_floor > 0.0 && t_floor < opt.t_start)) throw DomainError("discrete_cascade: need 0 < t_floor < t_start");
    if (opt.max_recorded < 4) throw DomainError("discrete_cascade: max_recorded must be >= 4");

    GrowthTrace tr;
    double t = opt.t_start, N = N0, sup = N0;
    const double decade = 10.0 * t_floor;
    double N_at_decade = t <= decade ? N0 : NAN;
    tr.t.push_back(t);
    tr.N.push_back(N);
    std::uint64_t k = 0;
    bool blowup = false;
    while (t > t_floor) {
        if (k >= opt.max_steps) {
            tr.truncated = true;
            break;
        }
        const double next_N = N + C1 * t * eval_psi(m, N) * g.g(t);
        t *= 1.0 - 1.0 / N;
        N = next_N;
        ++k;
        sup = std::max(sup, N);
        if (std::isnan(N_at_decade) && t <= decade) N_at_decade = N;
        if (!(N <= opt.guard)) {
            blowup = true;
            break;
        }
        if (k % tr.stride == 0) {
            tr.t.push_back(t);
            tr.N.push_back(N);
            if (tr.t.size() >= opt.max_recorded) {
                std::size_t w = 0;
                for (std::size_t i = 0; i < tr.t.size(); i += 2, ++w) tr.t[w] = tr.t[i], tr.N[w] = tr.N[i];
                tr.t.resize(w);
                tr.N.resize(w);
                tr.stride *= 2;
            }
        }
    }
    if (tr.t.back() != t) {
        tr.t.push_back(t);
        tr.N.push_back(N);
    }
    tr.steps = k;
    tr.t_final = t;
    tr.bound = sup;
    if (blowup) {
        tr.verdict = GrowthVerdict::BlowupDetected;
    } else if (!tr.truncated && g.integrable && !std::isnan(N_at_decade) && sup - N_at_decade < 0.01 * sup) {
        tr.verdict = GrowthVerdict::BoundedGlobally;
    } else {
        tr.verdict = GrowthVerdict::BoundedOnCompacts;
    }
    return tr;
}

double fit_cascade_constant(const Modulus& m, const GrowthTrace& tr, const Forcing& g) {
    if (tr.stride != 1) throw UnsupportedError("fit_cascade_constant needs an undecimated trace");
    double C = 0.0;
    for (std::size_t k = 0; k + 1 < tr.t.size(); ++k) {
        const double denom = tr.t[k] * eval_psi(m, tr.N[k]) * g.g(tr.t[k]);
        if (denom > 0.0) C = std::max(C, (tr.N[k + 1] - tr.N[k]) / denom);
    }
    return C;
}

double interpolant_constant(const Modulus& m, const GrowthTrace& tr, const Forcing& g) {
    double C = 0.0;
    for (std::size_t k = 0; k + 1 < tr.t.size(); ++k) {
        const double dt = tr.t[k + 1] - tr.t[k];
        if (dt >= 0.0) continue;
        const double slope = (tr.N[k + 1] - tr.N[k]) / dt;
        const double tm = 0.5 * (tr.t[k] + tr.t[k + 1]);
        const double fm = 0.5 * (tr.N[k] + tr.N[k + 1]);
        const double denom = fm * eval_psi(m, std::max(fm, 1.0)) * g.g(tm);
        if (denom > 0.0) C = std::max(C, -slope / denom);
    }
    return C;
}

nlohmann::json DoublingCheck::to_json() const { return {{"gammas", gammas}, {"constants", constants}}; }

DoublingCheck spot_check_doubling(const Forcing& g, double t_floor, std::vector<double> gammas) {
    DoublingCheck out;
    out.gammas = std::move(gammas);
    for (double gamma : out.gammas) {
        double worst = 0.0;
        const double lo = t_floor / gamma;
        constexpr int samples = 200;
        for (int i = 0; i <= samples; ++i) {
            const double s = lo * std::pow(1.0 / lo, static_cast<double>(i) / samples);
            const double num = g.g(s), den = g.g(gamma * s);
            if (num == 0.0) continue;
            worst = den > 0.0 ? std::max(worst, num / den) : INFINITY;
        }
        out.constants.push_back(worst);
    }
    return out;
}

}  // namespace freqlab
