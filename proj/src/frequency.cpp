#include "freqlab/frequency.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "freqlab/errors.hpp"

namespace freqlab {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> ring_weights(const DiscreteSolution& u, const CoefficientField& f) {
    const PolarGrid& G = u.grid();
    if (f.fingerprint() == u.field().fingerprint()) return u.op().node_mu();
    if (f.dimension() != 2) throw UnsupportedError("frequency: weight field must be planar");
    std::vector<double> w(static_cast<std::size_t>(G.n_r() + 1) * G.n_theta());
    for (int i = 0; i <= G.n_r(); ++i) {
        for (int j = 0; j < G.n_theta(); ++j) {
            const Point x = G.position(i, j);
            w[static_cast<std::size_t>(i) * G.n_theta() + j] = f.isotropic() ? f.scalar(x) : mu_factor(f, x);
        }
    }
    return w;
}

double lagrange(const double* x, const double* y, int n, double t) {
    double acc = 0.0;
    for (int a = 0; a < n; ++a) {
        double w = 1.0;
        for (int b = 0; b < n; ++b)
            if (b != a) w *= (t - x[b]) / (x[a] - x[b]);
        acc += w * y[a];
    }
    return acc;
}

}  // namespace

const char* to_string(WeightKind k) { return k == WeightKind::MuWeighted ? "mu_weighted" : "scalar_weighted"; }

// ---------------------------------------------------------------- RingFunctionals

RingFunctionals::RingFunctionals(const DiscreteSolution& u, const CoefficientField& weight) : u_(u) {
    const PolarGrid& G = u.grid();
    const int nr = G.n_r(), nt = G.n_theta();
    const auto w = ring_weights(u, weight);
    D_ = u.flux_energy();
    H_.resize(nr + 1);
    h_.resize(nr + 1);
    mean_.resize(nr + 1);
    for (int i = 0; i <= nr; ++i) {
        double acc = 0.0, plain = 0.0;
        for (int j = 0; j < nt; ++j) {
            const double v = u.value(i, j);
            acc += v * v * w[static_cast<std::size_t>(i) * nt + j];
            plain += v * v;
        }
        h_[i] = acc * G.dtheta();
        H_[i] = h_[i] * G.ring_radius(i);
        mean_[i] = plain / nt;
    }
    const auto& vals = u.values();
    const double grid_mean = std::inner_product(vals.begin(), vals.end(), vals.begin(), 0.0) / vals.size();
    noise_floor_ = 1e-14 * grid_mean;
}

double RingFunctionals::sample(const std::vector<double>& q, double r, bool* interpolated) const {
    const PolarGrid& G = u_.grid();
    if (!(r > 0) || r > G.radius() * (1 + 1e-12) || r < G.ring_radius(0) * (1 - 1e-12))
        throw DomainError("frequency: radius " + io::format_double(r) + " outside the grid");
    if (auto i = G.ring_index_of(r)) {
        if (interpolated) *interpolated = false;
        return q[*i];
    }
    if (interpolated) *interpolated = true;
    const double t = G.ring_coordinate(r);
    int lo = static_cast<int>(std::floor(t)) - 1;
    lo = std::clamp(lo, 0, G.n_r() - 3);
    double x[4], y[4];
    bool positive = true;
    for (int k = 0; k < 4; ++k) {
        x[k] = lo + k;
        y[k] = q[lo + k];
        positive = positive && y[k] > 0;
    }
    if (positive) {
        for (double& v : y) v = std::log(v);
        return std::exp(lagrange(x, y, 4, t));
    }
    return lagrange(x, y, 4, t);
}

double RingFunctionals::D_at(double r, bool* interpolated) const { return sample(D_, r, interpolated); }
double RingFunctionals::H_at(double r, bool* interpolated) const { return sample(H_, r, interpolated); }
double RingFunctionals::h_at(double r, bool* interpolated) const { return sample(h_, r, interpolated); }
double RingFunctionals::sphere_mean_at(double r, bool* interpolated) const { return sample(mean_, r, interpolated); }

void RingFunctionals::require_nonvanishing(double r) const {
    const double H = H_at(r);
    if (H / (2 * kPi * r) <= noise_floor_)
        throw VanishingBoundary("boundary mass vanishes at r = " + io::format_double(r), r);
}

// ---------------------------------------------------------------- scalar functionals

std::vector<double> grid_radii(const PolarGrid& grid, double r_lo, double r_hi) {
    std::vector<double> out;
    for (int i = grid.n_r(); i >= 0; --i) {
        const double r = grid.ring_radius(i);
        if (r <= r_hi * (1 + 1e-12) && r >= r_lo * (1 - 1e-12)) out.push_back(r);
    }
    return out;
}

double dirichlet_energy(const DiscreteSolution& u, double r) {
    return RingFunctionals(u, u.field()).D_at(r);
}

double dirichlet_energy_volume(const DiscreteSolution& u, double r) {
    const PolarGrid& G = u.grid();
    if (!(r > 0) || r > G.radius() * (1 + 1e-12) || r < G.ring_radius(0) * (1 - 1e-12))
        throw DomainError("dirichlet_energy_volume: radius outside the grid");
    const auto E = u.cumulative_energy();
    if (auto i = G.ring_index_of(r)) return E[*i];
    const double t = G.ring_coordinate(r);
    const int i = std::min(static_cast<int>(std::floor(t)), G.n_r() - 1);
    return E[i] + (t - i) * (E[i + 1] - E[i]);
}

double boundary_mass(const DiscreteSolution& u, const CoefficientField& f, double r, bool* interpolated) {
    return RingFunctionals(u, f).H_at(r, interpolated);
}

double boundary_mass_scalar(const DiscreteSolution& u, const CoefficientField& abar, double r, bool* interpolated) {
    if (!abar.isotropic()) throw UnsupportedError("boundary_mass_scalar: weight must be scalar");
    return RingFunctionals(u, abar).h_at(r, interpolated);
}

// ---------------------------------------------------------------- profile

std::string FrequencyProfile::to_csv() const {
    io::CsvTable t({"r", "D", "H", "N"});
    for (std::size_t k = 0; k < radii.size(); ++k) t.add_row(std::vector<double>{radii[k], D[k], H[k], N[k]});
    return t.str();
}

nlohmann::json FrequencyProfile::to_json() const {
    nlohmann::json j;
    j["weight_kind"] = to_string(weight_kind);
    j["radii"] = radii;
    j["D"] = D;
    j["H"] = H;
    j["N"] = N;
    j["interpolated"] = std::count(interpolated.begin(), interpolated.end(), true);
    return j;
}

std::string FrequencyProfile::to_svg(const std::string& title) const {
    io::SvgPlot p;
    p.title = title;
    p.x_label = "r";
    p.y_label = "N(r)";
    p.log_x = true;
    p.series.push_back({"N", radii, N});
    return io::render_svg(p);
}

double FrequencyProfile::N_near(double r) const {
    if (radii.empty()) throw DomainError("FrequencyProfile: empty profile");
    std::size_t best = 0;
    for (std::size_t k = 1; k < radii.size(); ++k)
        if (std::abs(std::log(radii[k] / r)) < std::abs(std::log(radii[best] / r))) best = k;
    return N[best];
}

FrequencyProfile almgren_frequency(const RingFunctionals& rf, std::vector<double> radii, WeightKind kind) {
    std::sort(radii.begin(), radii.end(), std::greater<>());
    FrequencyProfile p;
    p.weight_kind = kind;
    p.radii = radii;
    for (double r : radii) {
        rf.require_nonvanishing(r);
        bool i1 = false, i2 = false;
        const double D = rf.D_at(r, &i1), H = rf.H_at(r, &i2);
        p.D.push_back(D);
        p.H.push_back(H);
        p.N.push_back(r * D / H);
        p.interpolated.push_back(i1 || i2);
    }
    return p;
}

FrequencyProfile almgren_frequency(const DiscreteSolution& u, const CoefficientField& f, std::vector<double> radii) {
    return almgren_frequency(RingFunctionals(u, f), std::move(radii),
                             f.isotropic() ? WeightKind::ScalarWeighted : WeightKind::MuWeighted);
}

double two_scale_frequency(const RingFunctionals& rf, double r, double rho) {
    if (!(rho > 0) || !(rho < r)) throw DomainError("two_scale_frequency: need 0 < rho < r");
    rf.require_nonvanishing(rho);
    return std::log(rf.h_at(r) / rf.h_at(rho)) / (2 * std::log(r / rho));
}

double two_scale_frequency(const DiscreteSolution& u, const CoefficientField& abar, double r, double rho) {
    if (!abar.isotropic()) throw UnsupportedError("two_scale_frequency: weight must be scalar");
    return two_scale_frequency(RingFunctionals(u, abar), r, rho);
}

double doubling_index(const RingFunctionals& rf, double r) {
    rf.require_nonvanishing(0.5 * r);
    return std::log2(rf.sphere_mean_at(r) / rf.sphere_mean_at(0.5 * r));
}

double doubling_index(const DiscreteSolution& u, double r) {
    return doubling_index(RingFunctionals(u, u.field()), r);
}

double mass_doubling(const RingFunctionals& rf, double r) {
    rf.require_nonvanishing(0.5 * r);
    return std::log2(rf.H_at(r) / rf.H_at(0.5 * r));
}

double log_average_frequency(const RingFunctionals& rf, double r, double rho) {
    const PolarGrid& G = rf.solution().grid();
    const int hi = static_cast<int>(std::lround(G.ring_coordinate(r)));
    const int lo = static_cast<int>(std::lround(G.ring_coordinate(rho)));
    if (lo < 0 || hi > G.n_r() || hi - lo < 2) throw DomainError("log_average_frequency: need two or more rings");
    auto N = [&](int i) { return G.ring_radius(i) * rf.D()[i] / rf.H()[i]; };
    // Composite Simpson in s, trapezoid on a leftover interval.
    double acc = 0.0;
    int i = lo;
    for (; i + 2 <= hi; i += 2) acc += (N(i) + 4 * N(i + 1) + N(i + 2)) / 3.0;
    if (i < hi) acc += 0.5 * (N(i) + N(i + 1));
    return acc / (hi - lo);
}

// ---------------------------------------------------------------- vanishing order

nlohmann::json VanishingOrderFit::to_json() const {
    return {{"status", status == FitStatus::Ok ? "ok" : "indeterminate"}, {"N_hat", N_hat}, {"residual", residual}};
}

VanishingOrderFit vanishing_order(const DiscreteSolution& u, const std::vector<double>& radii) {
    if (radii.size() < 5) throw DomainError("vanishing_order: need at least 5 radii");
    const auto [lo, hi] = std::minmax_element(radii.begin(), radii.end());
    if (*hi < 4 * *lo) throw DomainError("vanishing_order: radii must span at least two octaves");
    const PolarGrid& G = u.grid();
    const auto M = u.cumulative_mass();
    std::vector<double> x, y;
    VanishingOrderFit fit;
    const auto& vals = u.values();
    const double scale = std::inner_product(vals.begin(), vals.end(), vals.begin(), 0.0) / vals.size();
    for (double r : radii) {
        if (r > G.radius() * (1 + 1e-12) || r < G.ring_radius(0)) throw DomainError("vanishing_order: radius outside grid");
        double m;
        if (auto i = G.ring_index_of(r)) {
            m = M[*i];
        } else {
            const double t = G.ring_coordinate(r);
            const int k = std::min(static_cast<int>(std::floor(t)), G.n_r() - 1);
            m = std::exp(std::log(M[k]) + (t - k) * (std::log(M[k + 1]) - std::log(M[k])));
        }
        const double mean = m / (kPi * r * r);
        if (!(mean > 1e-28 * std::max(scale, 1e-300)) || !(mean > 1e-300)) {
            fit.status = FitStatus::Indeterminate;
            return fit;
        }
        x.push_back(std::log(r));
        y.push_back(std::log(mean));
    }
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n, my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
    }
    const double slope = sxy / sxx;
    double ss = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double e = y[k] - (my + slope * (x[k] - mx));
        ss += e * e;
    }
    fit.N_hat = 0.5 * slope;
    fit.residual = std::sqrt(ss / n);
    return fit;
}

// ---------------------------------------------------------------- monotonicity

nlohmann::json MonotonicityReport::to_json() const {
    return {{"radii", radii},       {"slopes", slopes},         {"required_C", required},
            {"fitted_C", fitted_C}, {"median_C", median_C},     {"min_slope", min_slope},
            {"violations", violations}};
}

MonotonicityReport verify_almost_monotonicity(const FrequencyProfile& profile, double M, double delta) {
    const std::size_t n = profile.radii.size();
    if (n < 3) throw DomainError("verify_almost_monotonicity: need at least 3 radii");
    std::vector<double> x(n), y(n);
    for (std::size_t k = 0; k < n; ++k) {
        x[k] = std::log(profile.radii[k]);
        if (!(profile.N[k] > 0)) throw DomainError("verify_almost_monotonicity: N must be positive");
        y[k] = std::log(profile.N[k]);
    }
    MonotonicityReport rep;
    rep.min_slope = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const auto w = stencil::weights(x[k], {x[k - 1], x[k], x[k + 1]}, 1);
        const double dlogN_dlogr = w[0] * y[k - 1] + w[1] * y[k] + w[2] * y[k + 1];
        const double r = profile.radii[k];
        const double slope = dlogN_dlogr / r;
        const double deficit = slope < -1e-9 ? -slope : 0.0;
        const double scale = M + delta / r;
        double req = 0.0;
        if (deficit > 0) req = scale > 0 ? deficit / scale : std::numeric_limits<double>::infinity();
        rep.radii.push_back(r);
        rep.slopes.push_back(slope);
        rep.required.push_back(req);
        rep.fitted_C = std::max(rep.fitted_C, req);
        rep.min_slope = std::min(rep.min_slope, slope);
    }
    std::vector<double> sorted = rep.required;
    std::sort(sorted.begin(), sorted.end());
    rep.median_C = sorted[sorted.size() / 2];
    const double cap = 10 * rep.median_C;
    for (std::size_t k = 0; k < rep.radii.size(); ++k)
        if (rep.required[k] > cap) rep.violations.push_back(rep.radii[k]);
    return rep;
}

nlohmann::json HIdentityReport::to_json() const {
    return {{"radii", radii}, {"error", error}, {"sup_error", sup_error}, {"sup_normalized", sup_normalized}};
}

HIdentityReport verify_H_identity(const DiscreteSolution& u, const CoefficientField& f, const std::vector<double>& radii,
                                  double M, double delta) {
    const RingFunctionals rf(u, f);
    const PolarGrid& G = u.grid();
    std::vector<double> logh(rf.h().size());
    for (std::size_t i = 0; i < logh.size(); ++i) logh[i] = std::log(rf.h()[i]);
    HIdentityReport rep;
    for (double r : radii) {
        const int i = static_cast<int>(std::lround(G.ring_coordinate(r)));
        if (i < 0 || i > G.n_r()) throw DomainError("verify_H_identity: radius outside grid");
        rf.require_nonvanishing(G.ring_radius(i));
        const double ri = G.ring_radius(i);
        const double lhs = stencil::derivative(logh, static_cast<std::size_t>(i), G.ds()) / ri;
        const double N = ri * rf.D()[i] / rf.H()[i];
        const double e = lhs - 2 * N / ri;
        rep.radii.push_back(ri);
        rep.error.push_back(e);
        rep.sup_error = std::max(rep.sup_error, std::abs(e));
        const double scale = M + delta / ri;
        rep.sup_normalized = std::max(rep.sup_normalized, scale > 0 ? std::abs(e) / scale : std::abs(e));
    }
    return rep;
}

nlohmann::json HomogeneousMonotonicityReport::to_json() const {
    return {{"radii", radii},
            {"N", N},
            {"max_violation", max_violation},
            {"relative_violation", relative_violation},
            {"h_identity_residual", h_identity_residual},
            {"tolerance", tolerance},
            {"monotone", monotone}};
}

HomogeneousMonotonicityReport verify_homogeneous_monotonicity(const DiscreteSolution& u, const CoefficientField& abar,
                                                              double r_lo, double r_hi, double tolerance) {
    if (!abar.isotropic() || !abar.zero_homogeneous())
        throw DomainError("verify_homogeneous_monotonicity: weight must be a 0-homogeneous scalar field");
    const RingFunctionals rf(u, abar);
    const PolarGrid& G = u.grid();
    std::vector<double> logh(rf.h().size());
    for (std::size_t i = 0; i < logh.size(); ++i) logh[i] = std::log(rf.h()[i]);
    HomogeneousMonotonicityReport rep;
    rep.tolerance = tolerance;
    double Nmax = 0.0;
    for (int i = 0; i <= G.n_r(); ++i) {
        const double r = G.ring_radius(i);
        if (r < r_lo * (1 - 1e-12) || r > r_hi * (1 + 1e-12)) continue;
        rf.require_nonvanishing(r);
        const double N = r * rf.D()[i] / rf.H()[i];
        if (!rep.N.empty()) rep.max_violation = std::max(rep.max_violation, rep.N.back() - N);
        rep.radii.push_back(r);
        rep.N.push_back(N);
        Nmax = std::max(Nmax, std::abs(N));
        const double resid = stencil::derivative(logh, static_cast<std::size_t>(i), G.ds()) - 2 * N;
        rep.h_identity_residual = std::max(rep.h_identity_residual, std::abs(resid));
    }
    rep.relative_violation = Nmax > 0 ? rep.max_violation / Nmax : 0.0;
    rep.monotone = rep.max_violation <= tolerance;
    return rep;
}

}  // namespace freqlab
