#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "freqlab/errors.hpp"
#include "freqlab/solver.hpp"

using namespace freqlab;

namespace {

constexpr double kPi = std::numbers::pi;

double max_error(const DiscreteSolution& u, const std::function<double(const Point&)>& exact, double r_max) {
    double e = 0.0;
    const PolarGrid& g = u.grid();
    for (int i = 0; i <= g.n_r(); ++i) {
        if (g.ring_radius(i) > r_max) break;
        for (int j = 0; j < g.n_theta(); ++j) e = std::max(e, std::abs(u.value(i, j) - exact(g.position(i, j))));
    }
    return std::max(e, std::abs(u.center_value() - exact({0, 0, 0})));
}

// Re z^k
double re_zk(const Point& x, int k) { return std::pow(std::hypot(x[0], x[1]), k) * std::cos(k * std::atan2(x[1], x[0])); }

int nearest_ring(const PolarGrid& g, double r) { return static_cast<int>(std::lround(g.ring_coordinate(r))); }

}  // namespace

TEST(PolarGrid, Geometry) {
    const auto g = PolarGrid::make(64, 32);
    for (int i = 0; i < g.n_r(); ++i) EXPECT_LT(g.ring_radius(i), g.ring_radius(i + 1));
    EXPECT_DOUBLE_EQ(g.ring_radius(64), 1.0);
    EXPECT_NEAR(g.ring_radius(0), std::exp(-2 * kPi), 1e-15);
    EXPECT_EQ(g.node_count(), 1u + 65u * 32u);
    EXPECT_EQ(g.ring_index_of(g.ring_radius(17)).value(), 17);
    EXPECT_FALSE(g.ring_index_of(0.5 * (g.ring_radius(17) + g.ring_radius(18))).has_value());
    const auto t = g.truncated(40);
    EXPECT_EQ(t.n_r(), 40);
    EXPECT_NEAR(t.ring_radius(13), g.ring_radius(13), 1e-15);
    EXPECT_EQ(t.node(5, 3), g.node(5, 3));
    const auto f = g.refined();
    EXPECT_NEAR(f.ring_radius(34), g.ring_radius(17), 1e-15);
    EXPECT_THROW(PolarGrid::make(4, 32), DomainError);
    EXPECT_EQ(PolarGrid::from_json(g.to_json()), g);
    EXPECT_THROW(PolarGrid::from_json({{"n_r", 8}, {"n_theta", 8}, {"bogus", 1}}), ConfigError);
}

TEST(PolarGrid, ForFrequencyResolvesThinAnnuli) {
    const auto g = PolarGrid::for_frequency(20.0, 64);
    const double r = 0.7;
    const double layers = g.ring_coordinate(r) - g.ring_coordinate(r * (1 - 1.0 / 20.0));
    EXPECT_GE(layers, 8.0 - 1e-9);
}

TEST(Stencil, DerivativeIsSixthOrderForPolynomials) {
    std::vector<double> q(20);
    for (int i = 0; i < 20; ++i) q[i] = std::pow(0.1 * i, 6) - 3 * 0.1 * i;
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double x = 0.1 * static_cast<double>(i);
        EXPECT_NEAR(stencil::derivative(q, i, 0.1), 6 * std::pow(x, 5) - 3, 1e-9) << i;
    }
}

TEST(Solve, ConstantsAreExact) {
    const auto g = PolarGrid::make(64, 64);
    const std::vector<double> one(64, 1.0);
    for (const auto& f : {fields::identity(), fields::lipschitz_aniso(0.2, 0.1), fields::random_smooth(3, 0.2, Arity::Isotropic)}) {
        const auto u = solve_dirichlet(f, g, one);
        for (double v : u.values()) EXPECT_NEAR(v, 1.0, 1e-12);
        EXPECT_NEAR(u.flux_energy()[40], 0.0, 1e-12);
        EXPECT_NEAR(u.cumulative_energy()[40], 0.0, 1e-12);
    }
}

TEST(Solve, LinearDataIsSecondOrder) {
    auto x1 = [](const Point& x) { return x[0]; };
    double prev = 0.0;
    for (int n : {64, 128}) {
        const auto g = PolarGrid::make(n, n);
        const auto u = solve_dirichlet(fields::identity(), g, boundary::from_function(g, x1));
        const double e = max_error(u, x1, 1.0);
        EXPECT_LT(e, 5e-3);
        if (prev > 0) EXPECT_GT(std::log2(prev / e), 1.9);
        prev = e;
    }
}

TEST(Solve, CubicDataConvergesAtOrderTwo) {
    auto exact = [](const Point& x) { return re_zk(x, 3) + 0.5 * re_zk(x, 2) - x[1]; };
    std::vector<double> err;
    for (int n : {32, 64, 128}) {
        const auto g = PolarGrid::make(n, n);
        err.push_back(max_error(solve_dirichlet(fields::identity(), g, boundary::from_function(g, exact)), exact, 1.0));
    }
    EXPECT_GT(std::log2(err[1] / err[2]), 1.9);
}

TEST(Solve, AngularFieldMatchesFineGrid) {
    const auto a = fields::angular_scalar(0.3);
    const auto coarse = PolarGrid::make(64, 64), fine = coarse.refined();
    auto data = [](const Point& x) { return re_zk(x, 2) + 0.3 * x[1]; };
    const auto uc = solve_dirichlet(a, coarse, boundary::from_function(coarse, data));
    const auto uf = solve_dirichlet(a, fine, boundary::from_function(fine, data));
    double num = 0.0, den = 0.0;
    for (int i = 0; i <= coarse.n_r(); ++i) {
        for (int j = 0; j < coarse.n_theta(); ++j) {
            num = std::max(num, std::abs(uc.value(i, j) - uf.value(2 * i, 2 * j)));
            den = std::max(den, std::abs(uf.value(2 * i, 2 * j)));
        }
    }
    EXPECT_LT(num / den, 1e-3);
}

TEST(Energy, ClosedForms) {
    const auto g = PolarGrid::make(256, 256);
    const auto u1 = solve_dirichlet(fields::identity(), g, boundary::harmonic(g, 1));
    const auto u2 = solve_dirichlet(fields::identity(), g, boundary::harmonic(g, 2));
    const int i = nearest_ring(g, 0.5);
    const double r = g.ring_radius(i);
    EXPECT_NEAR(u1.flux_energy()[i] / (kPi * r * r), 1.0, 2e-3);
    EXPECT_NEAR(u2.flux_energy()[i] / (2 * kPi * std::pow(r, 4)), 1.0, 2e-3);
    EXPECT_NEAR(u2.cumulative_energy()[i] / (2 * kPi * std::pow(r, 4)), 1.0, 2e-3);
}

TEST(Energy, DiscreteGreenIdentity) {
    const auto g = PolarGrid::make(96, 96);
    for (const auto& f : {fields::identity(), fields::lipschitz_aniso(0.2, 0.1), fields::angular_scalar(0.4)}) {
        const auto u = solve_dirichlet(f, g, boundary::random_trig(g, 4, 7));
        const auto E = u.cumulative_energy();
        const auto F = u.discrete_flux();
        for (int i = 10; i <= g.n_r(); i += 7) EXPECT_NEAR((F[i] - E[i]) / E.back(), 0.0, 1e-8) << i;
    }
}

TEST(Energy, EllipticityDominatesIdentityEnergy) {
    const auto g = PolarGrid::make(64, 64);
    const auto f = fields::lipschitz_aniso(0.4, 0.3);
    const auto u = solve_dirichlet(fields::identity(), g, boundary::random_trig(g, 5, 11));
    const DiscreteOperator op(f, g);
    const auto eA = op.layer_energies(u.values()), eI = op.layer_energies_identity(u.values());
    for (std::size_t l = 0; l < eA.size(); ++l) EXPECT_GE(eA[l], op.discrete_lambda() * eI[l] - 1e-15);
}

TEST(Solve, MaximumPrinciple) {
    const auto g = PolarGrid::make(64, 64);
    const std::vector<CoefficientField> fs{fields::identity(), fields::angular_scalar(0.4),
                                           fields::random_smooth(5, 0.2, Arity::Isotropic),
                                           generate_holder(0.7, 0.1, 1, 2), fields::lipschitz_aniso(0.2, 0.1)};
    for (std::size_t k = 0; k < fs.size(); ++k) {
        const auto data = boundary::random_trig(g, 6, 100 + k);
        const auto u = solve_dirichlet(fs[k], g, data);
        const auto [lo, hi] = std::minmax_element(data.begin(), data.end());
        for (double v : u.values()) {
            EXPECT_GE(v, *lo - 1e-9) << k;
            EXPECT_LE(v, *hi + 1e-9) << k;
        }
    }
}

TEST(Solve, ReactionTerm) {
    const auto g = PolarGrid::make(64, 64, 0.2);
    const std::vector<double> two(64, 2.0);
    SolveOptions zero;
    zero.potential = [](const Point&) { return 0.0; };
    const auto v0 = solve_dirichlet(fields::identity(), g, two, zero);
    for (double v : v0.values()) EXPECT_NEAR(v, 2.0, 1e-12);
    SolveOptions one;
    one.potential = [](const Point&) { return 1.0; };
    const auto v1 = solve_dirichlet(fields::identity(), g, two, one);
    // Radial solution 2 I0(r) / I0(0.2) of v'' + v'/r = v.
    const double expect = 2.0 / std::cyl_bessel_i(0.0, 0.2);
    EXPECT_NEAR(v1.center_value(), expect, 1e-4);
    for (double v : v1.values()) EXPECT_LE(v, 2.0 + 1e-12);
}

TEST(Solve, Errors) {
    const auto g = PolarGrid::make(32, 32);
    SolveOptions tight;
    tight.max_iterations = 2;
    tight.harmonic_initial_guess = false;
    EXPECT_THROW(solve_dirichlet(fields::lipschitz_aniso(0.2, 0.1), g, boundary::random_trig(g, 5, 1), tight),
                 SolverError);
    const auto bad = CoefficientField::scalar_field(2, [](const Point& x) { return x[0]; }, {{"kind", "bad"}});
    EXPECT_THROW(solve_dirichlet(bad, g, boundary::harmonic(g, 1)), DomainError);
    EXPECT_THROW(solve_dirichlet(fields::identity(3), g, std::vector<double>(32, 0.0)), UnsupportedError);
    EXPECT_THROW(solve_dirichlet(fields::identity(), g, std::vector<double>(5, 0.0)), DomainError);
}

TEST(Solve, ValueAtInterpolates) {
    const auto g = PolarGrid::make(128, 128);
    auto x1 = [](const Point& x) { return x[0]; };
    const auto u = solve_dirichlet(fields::identity(), g, boundary::from_function(g, x1));
    for (const Point p : {Point{0.3, 0.2, 0}, Point{-0.5, -0.1, 0}, Point{1e-4, 1e-4, 0}, Point{0.0, -0.99, 0}})
        EXPECT_NEAR(u.value_at(p), p[0], 2e-3);
    const auto grad = u.gradient_at(nearest_ring(g, 0.5), 10);
    EXPECT_NEAR(grad[0], 1.0, 1e-2);
    EXPECT_NEAR(grad[1], 0.0, 1e-2);
    EXPECT_THROW(u.value_at({1.5, 0, 0}), DomainError);
}

TEST(Solve, TruncatedGridReproducesInterior) {
    const auto g = PolarGrid::make(64, 64);
    const auto f = fields::angular_scalar(0.3);
    const auto u = solve_dirichlet(f, g, boundary::random_trig(g, 3, 2));
    const auto sub = g.truncated(50);
    const auto v = solve_dirichlet(f, sub, boundary::from_solution(u, 50));
    for (int i = 0; i <= 50; i += 5) EXPECT_NEAR(v.value(i, 7), u.value(i, 7), 1e-8);
}

TEST(Export, RingCsvAndBinaryGrid) {
    const auto g = PolarGrid::make(16, 16);
    const auto u = solve_dirichlet(fields::identity(), g, boundary::harmonic(g, 1));
    const auto csv = u.ring_csv();
    EXPECT_EQ(csv.rfind("r,mean_u,mean_u2,D,H\r\n", 0), 0u);
    const auto b = u.to_binary_grid();
    EXPECT_EQ(b.data.size(), b.expected_size());
}

TEST(Solve, Timing256) {
    const auto g = PolarGrid::make(256, 256);
    const auto t0 = std::chrono::steady_clock::now();
    const auto u = solve_dirichlet(fields::angular_scalar(0.4), g, boundary::random_trig(g, 8, 3));
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    RecordProperty("seconds", std::to_string(s));
    RecordProperty("iterations", u.iterations());
    EXPECT_LT(s, 30.0);
}
