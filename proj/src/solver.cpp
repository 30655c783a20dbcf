#include "freqlab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/IterativeLinearSolvers>

#include "freqlab/errors.hpp"

namespace freqlab {

namespace {

constexpr double kPi = std::numbers::pi;

double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double harmonic_mean(double a, double b) { return 2.0 * a * b / (a + b); }

// Conformal coefficient in (s, theta): {A~_ss, A~_tt, A~_st}.
std::array<double, 3> rotate(const Mat& A, double c, double s) {
    const double a11 = A[0], a12 = 0.5 * (A[1] + A[3]), a22 = A[4];
    const double ss = c * c * a11 + 2 * c * s * a12 + s * s * a22;
    const double tt = s * s * a11 - 2 * c * s * a12 + c * c * a22;
    const double st = -c * s * a11 + (c * c - s * s) * a12 + c * s * a22;
    return {ss, tt, st};
}

double min_eig2(double a, double b, double c) {
    const double m = 0.5 * (a + b), d = std::sqrt(0.25 * (a - b) * (a - b) + c * c);
    return m - d;
}

using Local4 = std::array<std::array<double, 4>, 4>;

// Local ordering: 0 = (i, j), 1 = (i+1, j), 2 = (i, j+1), 3 = (i+1, j+1).
template <class Cell>
Local4 cell_matrix(const Cell& k, double rho) {
    Local4 S{};
    auto add_sq = [&](double w, std::array<double, 4> v) {
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) S[a][b] += w * v[a] * v[b];
    };
    add_sq(0.5 * rho * k.ks0, {-1, 1, 0, 0});
    add_sq(0.5 * rho * k.ks1, {0, 0, -1, 1});
    add_sq(0.5 / rho * k.kt0, {-1, 0, 1, 0});
    add_sq(0.5 / rho * k.kt1, {0, -1, 0, 1});
    if (k.kx != 0.0) {
        const std::array<double, 4> a{-1, 1, -1, 1}, b{-1, -1, 1, 1};
        for (int p = 0; p < 4; ++p)
            for (int q = 0; q < 4; ++q) S[p][q] += 0.25 * k.kx * (a[p] * b[q] + b[p] * a[q]);
    }
    return S;
}

std::array<double, 6> triangle_matrix(const std::array<double, 2>& p0, const std::array<double, 2>& p1,
                                      const std::array<double, 2>& p2, double a11, double a12, double a22) {
    const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    const double area = 0.5 * std::abs(det);
    // Gradients of the barycentric basis functions.
    const std::array<std::array<double, 2>, 3> g{{{(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det},
                                                  {(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det},
                                                  {(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det}}};
    auto form = [&](int a, int b) {
        return area * (g[a][0] * (a11 * g[b][0] + a12 * g[b][1]) + g[a][1] * (a12 * g[b][0] + a22 * g[b][1]));
    };
    return {form(0, 0), form(1, 1), form(2, 2), form(0, 1), form(0, 2), form(1, 2)};
}

double triangle_energy(const std::array<double, 6>& k, double u0, double u1, double u2) {
    return k[0] * u0 * u0 + k[1] * u1 * u1 + k[2] * u2 * u2 + 2 * (k[3] * u0 * u1 + k[4] * u0 * u2 + k[5] * u1 * u2);
}

}  // namespace

namespace stencil {

std::vector<double> weights(double x0, const std::vector<double>& x, int order) {
    const int n = static_cast<int>(x.size());
    if (n <= order) throw DomainError("stencil::weights: not enough nodes");
    std::vector<std::vector<double>> c(n, std::vector<double>(order + 1, 0.0));
    double c1 = 1.0, c4 = x[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, order);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = c[i][order];
    return w;
}

double derivative(const std::vector<double>& q, std::size_t i, double h) {
    const std::size_t n = q.size();
    if (n < 2) throw DomainError("stencil::derivative: need at least two samples");
    const std::size_t width = std::min<std::size_t>(7, n);
    std::size_t lo = i >= width / 2 ? i - width / 2 : 0;
    if (lo + width > n) lo = n - width;
    // Uniform spacing: weights depend only on the offset of i within the stencil; cache them.
    static thread_local std::vector<std::vector<double>> cache[8];
    const std::size_t off = i - lo;
    auto& table = cache[width];
    if (table.empty()) {
        std::vector<double> x(width);
        for (std::size_t k = 0; k < width; ++k) x[k] = static_cast<double>(k);
        for (std::size_t k = 0; k < width; ++k) table.push_back(weights(static_cast<double>(k), x, 1));
    }
    double d = 0.0;
    for (std::size_t k = 0; k < width; ++k) d += table[off][k] * q[lo + k];
    return d / h;
}

}  // namespace stencil

// ---------------------------------------------------------------- PolarGrid

PolarGrid PolarGrid::make(int n_r, int n_theta, double radius, double span) {
    if (n_r < 8 || n_theta < 8) throw DomainError("PolarGrid: need n_r >= 8 and n_theta >= 8");
    if (!(radius > 0) || !(span > 0)) throw DomainError("PolarGrid: radius and span must be positive");
    PolarGrid g;
    g.n_r_ = n_r;
    g.n_theta_ = n_theta;
    g.R_ = radius;
    g.span_ = span;
    g.dtheta_ = 2 * kPi / n_theta;
    g.cos_.resize(n_theta);
    g.sin_.resize(n_theta);
    for (int j = 0; j < n_theta; ++j) {
        g.cos_[j] = std::cos(j * g.dtheta_);
        g.sin_[j] = std::sin(j * g.dtheta_);
    }
    return g;
}

PolarGrid PolarGrid::for_frequency(double N_max, int n_theta, double radius, double span) {
    if (!(N_max > 1)) throw DomainError("PolarGrid::for_frequency: N_max must exceed 1");
    const double ds = -std::log1p(-1.0 / N_max) / 8.0;
    return make(static_cast<int>(std::ceil(span / ds)), n_theta, radius, span);
}

double PolarGrid::ring_radius(int i) const {
    if (i == n_r_) return R_;
    return R_ * std::exp(-span_ + i * ds());
}

Point PolarGrid::position(int i, int j) const {
    const double r = ring_radius(i);
    return {r * cos_[j], r * sin_[j], 0.0};
}

double PolarGrid::ring_coordinate(double r) const {
    if (!(r > 0)) throw DomainError("PolarGrid: radius must be positive");
    return (std::log(r / R_) + span_) / ds();
}

std::optional<int> PolarGrid::ring_index_of(double r) const {
    if (!(r > 0)) return std::nullopt;
    const double t = ring_coordinate(r);
    const double k = std::round(t);
    if (k < 0 || k > n_r_) return std::nullopt;
    if (std::abs(ring_radius(static_cast<int>(k)) - r) <= 1e-9 * r) return static_cast<int>(k);
    return std::nullopt;
}

PolarGrid PolarGrid::truncated(int i) const {
    if (i < 8 || i > n_r_) throw DomainError("PolarGrid::truncated: ring index out of range");
    PolarGrid g = *this;
    g.n_r_ = i;
    g.R_ = ring_radius(i);
    g.span_ = i * ds();
    return g;
}

PolarGrid PolarGrid::refined() const { return make(2 * n_r_, 2 * n_theta_, R_, span_); }

nlohmann::json PolarGrid::to_json() const {
    return {{"n_r", n_r_}, {"n_theta", n_theta_}, {"radius", R_}, {"span", span_}};
}

PolarGrid PolarGrid::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("grid: expected an object");
    for (const auto& [k, v] : j.items()) {
        if (k != "n_r" && k != "n_theta" && k != "radius" && k != "span")
            throw ConfigError("grid: unknown key '" + k + "'");
    }
    try {
        const int nr = j.at("n_r").get<int>();
        const int nt = j.at("n_theta").get<int>();
        return make(nr, nt, j.value("radius", 1.0), j.value("span", 2 * kPi));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("grid: ") + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
}

bool PolarGrid::operator==(const PolarGrid& o) const {
    return n_r_ == o.n_r_ && n_theta_ == o.n_theta_ && R_ == o.R_ && span_ == o.span_;
}

// ---------------------------------------------------------------- DiscreteOperator

DiscreteOperator::DiscreteOperator(const CoefficientField& f, const PolarGrid& grid,
                                   std::function<double(const Point&)> potential)
    : grid_(grid), has_potential_(static_cast<bool>(potential)) {
    if (f.dimension() != 2) throw UnsupportedError("solver: only n = 2 is supported");
    if (grid.radius() > f.valid_radius() * (1 + 1e-12))
        throw DomainError("solver: grid radius exceeds the field's valid radius");

    const int nr = grid.n_r(), nt = grid.n_theta();
    const double ds = grid.ds(), dt = grid.dtheta(), rho = dt / ds;
    const auto& C = grid.cos_table();
    const auto& S = grid.sin_table();
    const bool iso = f.isotropic();
    double lam = std::numeric_limits<double>::infinity();
    auto check = [&](double l, const char* where) {
        if (!(l > 0)) throw DomainError(std::string("solver: ellipticity violated at ") + where);
        lam = std::min(lam, l);
    };

    node_mu_.resize(static_cast<std::size_t>(nr + 1) * nt);
    node_cross_.assign(node_mu_.size(), 0.0);
    for (int i = 0; i <= nr; ++i) {
        for (int j = 0; j < nt; ++j) {
            const Point x = grid.position(i, j);
            const std::size_t k = static_cast<std::size_t>(i) * nt + j;
            if (iso) {
                node_mu_[k] = f.scalar(x);
                check(node_mu_[k], "a ring node");
            } else {
                const auto t = rotate(f.matrix(x), C[j], S[j]);
                node_mu_[k] = t[0];
                node_cross_[k] = t[2];
                check(min_eig2(t[0], t[1], t[2]), "a ring node");
            }
        }
    }

    cells_.resize(static_cast<std::size_t>(nr) * nt);
    for (int i = 0; i < nr; ++i) {
        for (int j = 0; j < nt; ++j) {
            const int jp = (j + 1) % nt;
            Cell& c = cells_[static_cast<std::size_t>(i) * nt + j];
            if (iso) {
                auto a = [&](int ii, int jj) { return node_mu_[static_cast<std::size_t>(ii) * nt + jj]; };
                c = {harmonic_mean(a(i, j), a(i + 1, j)), harmonic_mean(a(i, jp), a(i + 1, jp)),
                     harmonic_mean(a(i, j), a(i, jp)), harmonic_mean(a(i + 1, j), a(i + 1, jp)), 0.0};
            } else {
                const double r = std::exp(grid.ring_s(i) + 0.5 * ds);
                const double th = (j + 0.5) * dt;
                const double ct = std::cos(th), st = std::sin(th);
                const auto t = rotate(f.matrix({r * ct, r * st, 0.0}), ct, st);
                check(min_eig2(t[0], t[1], t[2]), "a cell center");
                c = {t[0], t[0], t[1], t[1], t[2]};
            }
        }
    }

    const double r0 = grid.ring_radius(0);
    core_.resize(nt);
    core_identity_.resize(nt);
    for (int j = 0; j < nt; ++j) {
        const int jp = (j + 1) % nt;
        const std::array<double, 2> p0{0.0, 0.0}, p1{r0 * C[j], r0 * S[j]}, p2{r0 * C[jp], r0 * S[jp]};
        const Point centroid{(p1[0] + p2[0]) / 3.0, (p1[1] + p2[1]) / 3.0, 0.0};
        const Mat A = f.matrix(centroid);
        const double a12 = 0.5 * (A[1] + A[3]);
        check(min_eig2(A[0], A[4], a12), "a core triangle");
        core_[j] = triangle_matrix(p0, p1, p2, A[0], a12, A[4]);
        core_identity_[j] = triangle_matrix(p0, p1, p2, 1.0, 0.0, 1.0);
    }
    discrete_lambda_ = lam;

    const std::size_t n = grid.node_count();
    areas_.assign(n, 0.0);
    const double tri = 0.5 * r0 * r0 * std::sin(dt);
    areas_[0] = nt * tri / 3.0;
    // Ring 0: outer half cell int_{s0}^{s0+ds/2} e^{2s} ds dtheta plus a third of both fan triangles.
    for (int j = 0; j < nt; ++j) {
        areas_[grid.node(0, j)] = 0.5 * r0 * r0 * std::expm1(ds) * dt + 2.0 * tri / 3.0;
        for (int i = 1; i < nr; ++i) {
            const double r = grid.ring_radius(i);
            areas_[grid.node(i, j)] = r * r * std::sinh(ds) * dt;
        }
        const double R = grid.radius();
        areas_[grid.node(nr, j)] = -0.5 * R * R * std::expm1(-ds) * dt;
    }

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(cells_.size() * 16 + core_.size() * 9 + n);
    for (int i = 0; i < nr; ++i) {
        for (int j = 0; j < nt; ++j) {
            const int jp = (j + 1) % nt;
            const auto L = cell_matrix(cells_[static_cast<std::size_t>(i) * nt + j], rho);
            const std::array<std::size_t, 4> id{grid.node(i, j), grid.node(i + 1, j), grid.node(i, jp),
                                                grid.node(i + 1, jp)};
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b)
                    if (L[a][b] != 0.0) trip.emplace_back(id[a], id[b], L[a][b]);
        }
    }
    for (int j = 0; j < nt; ++j) {
        const auto& k = core_[j];
        const std::array<std::size_t, 3> id{0, grid.node(0, j), grid.node(0, (j + 1) % nt)};
        const double m[3][3] = {{k[0], k[3], k[4]}, {k[3], k[1], k[5]}, {k[4], k[5], k[2]}};
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) trip.emplace_back(id[a], id[b], m[a][b]);
    }
    if (has_potential_) {
        potential_.assign(n, 0.0);
        potential_[0] = potential({0.0, 0.0, 0.0});
        for (int i = 0; i <= nr; ++i)
            for (int j = 0; j < nt; ++j) potential_[grid.node(i, j)] = potential(grid.position(i, j));
        for (std::size_t k = 0; k < n; ++k) {
            if (!std::isfinite(potential_[k])) throw DomainError("solver: potential is not finite");
            trip.emplace_back(k, k, potential_[k] * areas_[k]);
        }
    }
    K_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    K_.setFromTriplets(trip.begin(), trip.end());
    K_.makeCompressed();
}

std::vector<double> DiscreteOperator::energies(const std::vector<double>& u, bool identity) const {
    const int nr = grid_.n_r(), nt = grid_.n_theta();
    const double rho = grid_.dtheta() / grid_.ds();
    std::vector<double> e(nr + 1, 0.0);
    const auto& core = identity ? core_identity_ : core_;
    for (int j = 0; j < nt; ++j)
        e[0] += triangle_energy(core[j], u[0], u[grid_.node(0, j)], u[grid_.node(0, (j + 1) % nt)]);
    const Cell unit{1, 1, 1, 1, 0};
    for (int i = 0; i < nr; ++i) {
        double acc = 0.0;
        for (int j = 0; j < nt; ++j) {
            const int jp = (j + 1) % nt;
            const Cell& c = identity ? unit : cells_[static_cast<std::size_t>(i) * nt + j];
            const double ds0 = u[grid_.node(i + 1, j)] - u[grid_.node(i, j)];
            const double ds1 = u[grid_.node(i + 1, jp)] - u[grid_.node(i, jp)];
            const double dt0 = u[grid_.node(i, jp)] - u[grid_.node(i, j)];
            const double dt1 = u[grid_.node(i + 1, jp)] - u[grid_.node(i + 1, j)];
            acc += 0.5 * rho * (c.ks0 * ds0 * ds0 + c.ks1 * ds1 * ds1) +
                   0.5 / rho * (c.kt0 * dt0 * dt0 + c.kt1 * dt1 * dt1) + 0.5 * c.kx * (ds0 + ds1) * (dt0 + dt1);
        }
        e[i + 1] = acc;
    }
    return e;
}

std::vector<double> DiscreteOperator::inner_flux(const std::vector<double>& u) const {
    if (u.size() != grid_.node_count()) throw DomainError("inner_flux: size mismatch");
    const int nr = grid_.n_r(), nt = grid_.n_theta();
    const double rho = grid_.dtheta() / grid_.ds();
    std::vector<double> F(nr + 1, 0.0);
    for (int j = 0; j < nt; ++j) {
        const auto& k = core_[j];
        const double u0 = u[0], u1 = u[grid_.node(0, j)], u2 = u[grid_.node(0, (j + 1) % nt)];
        F[0] += u1 * (k[3] * u0 + k[1] * u1 + k[5] * u2) + u2 * (k[4] * u0 + k[5] * u1 + k[2] * u2);
    }
    for (int i = 0; i < nr; ++i) {
        double acc = 0.0;
        for (int j = 0; j < nt; ++j) {
            const int jp = (j + 1) % nt;
            const auto L = cell_matrix(cells_[static_cast<std::size_t>(i) * nt + j], rho);
            const std::array<double, 4> v{u[grid_.node(i, j)], u[grid_.node(i + 1, j)], u[grid_.node(i, jp)],
                                          u[grid_.node(i + 1, jp)]};
            for (int a : {1, 3})
                for (int b = 0; b < 4; ++b) acc += v[a] * L[a][b] * v[b];
        }
        F[i + 1] = acc;
    }
    return F;
}

std::vector<double> DiscreteOperator::layer_energies(const std::vector<double>& u) const {
    if (u.size() != grid_.node_count()) throw DomainError("layer_energies: size mismatch");
    return energies(u, false);
}

std::vector<double> DiscreteOperator::layer_energies_identity(const std::vector<double>& u) const {
    if (u.size() != grid_.node_count()) throw DomainError("layer_energies_identity: size mismatch");
    return energies(u, true);
}

// ---------------------------------------------------------------- solve

namespace {

std::vector<double> harmonic_extension(const PolarGrid& grid, const std::vector<double>& g) {
    const int nr = grid.n_r(), nt = grid.n_theta();
    const auto& C = grid.cos_table();
    const auto& S = grid.sin_table();
    const int kmax = nt / 2;
    std::vector<double> a(kmax + 1, 0.0), b(kmax + 1, 0.0);
    for (int k = 0; k <= kmax; ++k) {
        double sa = 0.0, sb = 0.0;
        for (int j = 0; j < nt; ++j) {
            const int m = static_cast<int>((static_cast<long long>(k) * j) % nt);
            sa += g[j] * C[m];
            sb += g[j] * S[m];
        }
        const double w = (k == 0 || 2 * k == nt) ? 1.0 / nt : 2.0 / nt;
        a[k] = w * sa;
        b[k] = w * sb;
    }
    std::vector<double> u(grid.node_count(), 0.0);
    u[0] = a[0];
    for (int i = 0; i <= nr; ++i) {
        const double q = grid.ring_radius(i) / grid.radius();
        std::vector<double> ring(nt, a[0]);
        double p = 1.0;
        for (int k = 1; k <= kmax; ++k) {
            p *= q;
            if (p < 1e-18) break;
            const double ak = p * a[k], bk = p * b[k];
            for (int j = 0; j < nt; ++j) {
                const int m = static_cast<int>((static_cast<long long>(k) * j) % nt);
                ring[j] += ak * C[m] + bk * S[m];
            }
        }
        for (int j = 0; j < nt; ++j) u[grid.node(i, j)] = ring[j];
    }
    return u;
}

}  // namespace

DiscreteSolution solve_dirichlet(const CoefficientField& f, const PolarGrid& grid, const std::vector<double>& g,
                                 const SolveOptions& options) {
    auto op = std::make_shared<const DiscreteOperator>(f, grid, options.potential);
    return solve_dirichlet(std::move(op), f, g, options);
}

DiscreteSolution solve_dirichlet(std::shared_ptr<const DiscreteOperator> op, const CoefficientField& f,
                                 const std::vector<double>& g, const SolveOptions& options) {
    const PolarGrid& grid = op->grid();
    const int nt = grid.n_theta();
    if (g.size() != static_cast<std::size_t>(nt)) throw DomainError("solve_dirichlet: boundary data size mismatch");
    for (double v : g)
        if (!std::isfinite(v)) throw DomainError("solve_dirichlet: boundary data not finite");
    if (static_cast<bool>(options.potential) != op->has_potential())
        throw DomainError("solve_dirichlet: operator and options disagree on the potential");

    const auto nI = static_cast<Eigen::Index>(grid.interior_count());
    const auto nB = static_cast<Eigen::Index>(nt);
    const SparseMatrix& K = op->matrix();
    const SparseMatrix KII = K.topLeftCorner(nI, nI);
    const SparseMatrix KIB = K.topRightCorner(nI, nB);
    const Eigen::Map<const Eigen::VectorXd> gb(g.data(), nB);
    const Eigen::VectorXd rhs = -(KIB * gb);

    std::vector<double> values(grid.node_count(), 0.0);
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(nI);
    if (options.harmonic_initial_guess) {
        values = harmonic_extension(grid, g);
        x0 = Eigen::Map<const Eigen::VectorXd>(values.data(), nI);
    }

    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
    const int cap = options.max_iterations > 0 ? options.max_iterations
                                               : static_cast<int>(std::ceil(50.0 * std::sqrt(static_cast<double>(nI))));
    cg.setTolerance(options.tolerance);
    cg.setMaxIterations(cap);
    cg.compute(KII);
    Eigen::VectorXd x;
    double residual = 0.0;
    int iterations = 0;
    if (rhs.norm() == 0.0) {
        x = Eigen::VectorXd::Zero(nI);
    } else {
        x = cg.solveWithGuess(rhs, x0);
        residual = cg.error();
        iterations = static_cast<int>(cg.iterations());
        if (cg.info() != Eigen::Success || !(residual <= options.tolerance))
            throw SolverError("solve_dirichlet: conjugate gradient did not converge", residual, iterations);
    }
    for (Eigen::Index k = 0; k < nI; ++k) values[static_cast<std::size_t>(k)] = x[k];
    for (int j = 0; j < nt; ++j) values[grid.node(grid.n_r(), j)] = g[j];
    return DiscreteSolution(std::move(op), f, std::move(values), residual, iterations);
}

// ---------------------------------------------------------------- DiscreteSolution

DiscreteSolution::DiscreteSolution(std::shared_ptr<const DiscreteOperator> op, CoefficientField field,
                                   std::vector<double> values, double residual, int iterations)
    : op_(std::move(op)), field_(std::move(field)), values_(std::move(values)), residual_(residual),
      iterations_(iterations) {}

std::vector<double> DiscreteSolution::boundary_data() const {
    const int nt = grid().n_theta();
    std::vector<double> g(nt);
    for (int j = 0; j < nt; ++j) g[j] = value(grid().n_r(), j);
    return g;
}

double DiscreteSolution::value_at(const Point& x) const {
    const PolarGrid& G = grid();
    const double r = std::hypot(x[0], x[1]);
    if (r > G.radius() * (1 + 1e-12)) throw DomainError("value_at: point outside the grid");
    const int nt = G.n_theta();
    double th = std::atan2(x[1], x[0]);
    if (th < 0) th += 2 * kPi;
    double tj = th / G.dtheta();
    int j = static_cast<int>(std::floor(tj));
    if (j >= nt) j = nt - 1;
    const double wt = tj - j;
    const int jp = (j + 1) % nt;
    const double r0 = G.ring_radius(0);
    if (r < r0) {
        // Linear on the fan triangle (0, P_j, P_jp): barycentric coordinates.
        const double x1 = r0 * G.cos_table()[j], y1 = r0 * G.sin_table()[j];
        const double x2 = r0 * G.cos_table()[jp], y2 = r0 * G.sin_table()[jp];
        const double det = x1 * y2 - x2 * y1;
        const double l1 = (x[0] * y2 - x2 * x[1]) / det;
        const double l2 = (x1 * x[1] - x[0] * y1) / det;
        return (1 - l1 - l2) * values_[0] + l1 * value(0, j) + l2 * value(0, jp);
    }
    double ti = std::min(G.ring_coordinate(r), static_cast<double>(G.n_r()));
    int i = std::min(static_cast<int>(std::floor(ti)), G.n_r() - 1);
    const double ws = ti - i;
    return (1 - ws) * ((1 - wt) * value(i, j) + wt * value(i, jp)) +
           ws * ((1 - wt) * value(i + 1, j) + wt * value(i + 1, jp));
}

Point DiscreteSolution::gradient_at(int i, int j) const {
    const PolarGrid& G = grid();
    const int nt = G.n_theta(), nr = G.n_r();
    if (i < 0 || i > nr) throw DomainError("gradient_at: ring out of range");
    const double ds = G.ds(), dt = G.dtheta();
    double us;
    if (i == 0)
        us = (-3 * value(0, j) + 4 * value(1, j) - value(2, j)) / (2 * ds);
    else if (i == nr)
        us = (3 * value(nr, j) - 4 * value(nr - 1, j) + value(nr - 2, j)) / (2 * ds);
    else
        us = (value(i + 1, j) - value(i - 1, j)) / (2 * ds);
    const double ut = (value(i, (j + 1) % nt) - value(i, (j + nt - 1) % nt)) / (2 * dt);
    const double r = G.ring_radius(i), c = G.cos_table()[j], s = G.sin_table()[j];
    return {(us * c - ut * s) / r, (us * s + ut * c) / r, 0.0};
}

std::vector<double> DiscreteSolution::cumulative_energy() const {
    auto e = op_->layer_energies(values_);
    for (std::size_t i = 1; i < e.size(); ++i) e[i] += e[i - 1];
    return e;
}

std::vector<double> DiscreteSolution::cumulative_energy_identity() const {
    auto e = op_->layer_energies_identity(values_);
    for (std::size_t i = 1; i < e.size(); ++i) e[i] += e[i - 1];
    return e;
}

std::vector<double> DiscreteSolution::cumulative_mass() const {
    const PolarGrid& G = grid();
    const int nr = G.n_r(), nt = G.n_theta();
    const double r0 = G.ring_radius(0), tri = 0.5 * r0 * r0 * std::sin(G.dtheta());
    std::vector<double> m(nr + 1, 0.0);
    for (int j = 0; j < nt; ++j) {
        const double a = values_[0], b = value(0, j), c = value(0, (j + 1) % nt);
        m[0] += tri / 6.0 * (a * a + b * b + c * c + a * b + a * c + b * c);
    }
    std::vector<double> q(nr + 1);
    for (int i = 0; i <= nr; ++i) {
        double acc = 0.0;
        for (int j = 0; j < nt; ++j) acc += value(i, j) * value(i, j);
        const double r = G.ring_radius(i);
        q[i] = acc * G.dtheta() * r * r;
    }
    for (int i = 1; i <= nr; ++i) m[i] = m[i - 1] + 0.5 * G.ds() * (q[i - 1] + q[i]);
    return m;
}

std::vector<double> DiscreteSolution::flux_energy() const {
    const PolarGrid& G = grid();
    const int nr = G.n_r(), nt = G.n_theta();
    const double ds = G.ds(), dt = G.dtheta();
    const auto& mu = op_->node_mu();
    const auto& cr = op_->node_cross();
    std::vector<double> D(nr + 1, 0.0);
    std::vector<double> col(nr + 1);
    std::vector<std::vector<double>> us(nr + 1, std::vector<double>(nt));
    for (int j = 0; j < nt; ++j) {
        for (int i = 0; i <= nr; ++i) col[i] = value(i, j);
        for (int i = 0; i <= nr; ++i) us[i][j] = stencil::derivative(col, static_cast<std::size_t>(i), ds);
    }
    const bool cross = !field_.isotropic();
    std::vector<double> ring(nt);
    for (int i = 0; i <= nr; ++i) {
        double acc = 0.0;
        for (int j = 0; j < nt; ++j) ring[j] = value(i, j);
        for (int j = 0; j < nt; ++j) {
            const std::size_t k = static_cast<std::size_t>(i) * nt + j;
            double flux = mu[k] * us[i][j];
            if (cross) {
                // Periodic 8th-order centered difference in theta.
                auto u = [&](int o) { return ring[(j + o + 4 * nt) % nt]; };
                const double ut = (672 * (u(1) - u(-1)) - 168 * (u(2) - u(-2)) + 32 * (u(3) - u(-3)) -
                                   3 * (u(4) - u(-4))) /
                                  (840 * dt);
                flux += cr[k] * ut;
            }
            acc += ring[j] * flux;
        }
        D[i] = acc * dt;
    }
    return D;
}

std::vector<double> DiscreteSolution::discrete_flux() const { return op_->inner_flux(values_); }

double DiscreteSolution::ring_mean(int i) const {
    double acc = 0.0;
    for (int j = 0; j < grid().n_theta(); ++j) acc += value(i, j);
    return acc / grid().n_theta();
}

double DiscreteSolution::ring_mean_square(int i) const {
    double acc = 0.0;
    for (int j = 0; j < grid().n_theta(); ++j) acc += value(i, j) * value(i, j);
    return acc / grid().n_theta();
}

DiscreteSolution DiscreteSolution::scaled(double c) const {
    std::vector<double> v = values_;
    for (double& x : v) x *= c;
    return DiscreteSolution(op_, field_, std::move(v), residual_, iterations_);
}

std::vector<double> DiscreteSolution::restricted_values(int ring) const {
    const PolarGrid sub = grid().truncated(ring);
    return std::vector<double>(values_.begin(), values_.begin() + static_cast<std::ptrdiff_t>(sub.node_count()));
}

io::BinaryGrid DiscreteSolution::to_binary_grid() const {
    const PolarGrid& G = grid();
    io::BinaryGrid b;
    b.layout = io::GridLayout::Polar;
    b.components = 1;
    b.shape = {static_cast<std::uint64_t>(G.n_r() + 1), static_cast<std::uint64_t>(G.n_theta())};
    b.bbox_lo = {G.ring_radius(0), 0.0};
    b.bbox_hi = {G.radius(), 2 * kPi};
    b.data.assign(values_.begin() + 1, values_.end());
    b.data.push_back(values_[0]);
    return b;
}

std::string DiscreteSolution::ring_csv() const {
    const PolarGrid& G = grid();
    const auto D = flux_energy();
    io::CsvTable t({"r", "mean_u", "mean_u2", "D", "H"});
    const auto& mu = op_->node_mu();
    for (int i = 0; i <= G.n_r(); ++i) {
        double H = 0.0;
        for (int j = 0; j < G.n_theta(); ++j) {
            const double v = value(i, j);
            H += v * v * mu[static_cast<std::size_t>(i) * G.n_theta() + j];
        }
        const double r = G.ring_radius(i);
        H *= r * G.dtheta();
        t.add_row(std::vector<double>{r, ring_mean(i), ring_mean_square(i), D[i], H});
    }
    return t.str();
}

// ---------------------------------------------------------------- boundary data

namespace boundary {

std::vector<double> harmonic(const PolarGrid& grid, int k, double phase) {
    return harmonic_mix(grid, {{k, phase}});
}

std::vector<double> harmonic_mix(const PolarGrid& grid, const std::vector<std::pair<int, double>>& terms) {
    std::vector<double> g(grid.n_theta(), 0.0);
    for (const auto& [k, phase] : terms) {
        if (k < 0) throw DomainError("boundary::harmonic: degree must be nonnegative");
        const double Rk = std::pow(grid.radius(), k);
        for (int j = 0; j < grid.n_theta(); ++j) g[j] += Rk * std::cos(k * grid.theta(j) + phase);
    }
    return g;
}

std::vector<double> random_trig(const PolarGrid& grid, int max_degree, std::uint64_t seed) {
    if (max_degree < 0) throw DomainError("boundary::random_trig: degree must be nonnegative");
    std::mt19937_64 rng(seed);
    std::vector<double> g(grid.n_theta(), 0.0);
    for (int k = 0; k <= max_degree; ++k) {
        const double a = (2 * uniform(rng) - 1) / (1 + k), b = (2 * uniform(rng) - 1) / (1 + k);
        for (int j = 0; j < grid.n_theta(); ++j) g[j] += a * std::cos(k * grid.theta(j)) + b * std::sin(k * grid.theta(j));
    }
    return g;
}

std::vector<double> from_function(const PolarGrid& grid, const std::function<double(const Point&)>& fn) {
    std::vector<double> g(grid.n_theta());
    for (int j = 0; j < grid.n_theta(); ++j) g[j] = fn(grid.position(grid.n_r(), j));
    return g;
}

std::vector<double> from_solution(const DiscreteSolution& u, int ring) {
    if (ring < 0 || ring > u.grid().n_r()) throw DomainError("boundary::from_solution: ring out of range");
    std::vector<double> g(u.grid().n_theta());
    for (int j = 0; j < u.grid().n_theta(); ++j) g[j] = u.value(ring, j);
    return g;
}

}  // namespace boundary

}  // namespace freqlab
