#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "freqlab/errors.hpp"
#include "freqlab/frequency.hpp"

using namespace freqlab;

namespace {

constexpr double kPi = std::numbers::pi;

const PolarGrid& grid256() {
    static const PolarGrid g = PolarGrid::make(256, 256);
    return g;
}

DiscreteSolution harmonic_solution(int k, const PolarGrid& g = grid256()) {
    return solve_dirichlet(fields::identity(), g, boundary::harmonic(g, k));
}

DiscreteSolution constant_solution(double c, const CoefficientField& f = fields::identity()) {
    const auto& g = grid256();
    return solve_dirichlet(f, g, std::vector<double>(g.n_theta(), c));
}

}  // namespace

TEST(BoundaryMass, ClosedForms) {
    const auto one = constant_solution(1.0);
    const auto x1 = harmonic_solution(1);
    for (double r : {0.3, 0.5, 1.0}) {
        EXPECT_NEAR(boundary_mass(one, fields::identity(), r), 2 * kPi * r, 1e-10);
        EXPECT_NEAR(boundary_mass(x1, fields::identity(), r) / (kPi * r * r * r), 1.0, 2e-3);
        EXPECT_NEAR(boundary_mass_scalar(one, fields::identity(), r), 2 * kPi, 1e-10);
        EXPECT_NEAR(boundary_mass_scalar(x1, fields::identity(), r) / (kPi * r * r), 1.0, 2e-3);
        EXPECT_NEAR(boundary_mass_scalar(one, fields::angular_scalar(0.3), r), 2 * kPi, 1e-10);
    }
    EXPECT_NEAR(boundary_mass(one, fields::diagonal({2, 1, 1}), 1.0), 3 * kPi, 1e-10);
    bool interp = true;
    boundary_mass(x1, fields::identity(), grid256().ring_radius(200), &interp);
    EXPECT_FALSE(interp);
    boundary_mass(x1, fields::identity(), 0.5, &interp);
    EXPECT_TRUE(interp);
    EXPECT_THROW(boundary_mass(x1, fields::identity(), 1.5), DomainError);
}

TEST(DirichletEnergy, ClosedForms) {
    const auto one = constant_solution(3.0);
    EXPECT_NEAR(dirichlet_energy(one, 0.5), 0.0, 1e-12);
    const auto x1 = harmonic_solution(1);
    EXPECT_NEAR(dirichlet_energy(x1, 0.7) / (kPi * 0.49), 1.0, 2e-3);
    const auto z2 = harmonic_solution(2);
    EXPECT_NEAR(dirichlet_energy(z2, 0.5), 0.3927, 1e-3);
    EXPECT_NEAR(dirichlet_energy_volume(z2, 0.5), 0.3927, 1e-3);
    EXPECT_THROW(dirichlet_energy(z2, 2.0), DomainError);
}

TEST(Almgren, HomogeneousHarmonicsHaveConstantFrequency) {
    const auto radii = grid_radii(grid256(), 0.2, 0.8);
    for (int k = 1; k <= 5; ++k) {
        const auto p = almgren_frequency(harmonic_solution(k), fields::identity(), radii);
        for (double N : p.N) EXPECT_NEAR(N, k, 0.02) << k;
    }
    const auto p0 = almgren_frequency(constant_solution(2.0), fields::identity(), radii);
    for (double N : p0.N) EXPECT_NEAR(N, 0.0, 1e-10);
}

TEST(Almgren, VanishingSolutionIsReported) {
    const auto zero = constant_solution(0.0);
    try {
        almgren_frequency(zero, fields::identity(), {0.5});
        FAIL() << "expected VanishingBoundary";
    } catch (const VanishingBoundary& e) {
        EXPECT_DOUBLE_EQ(e.radius, 0.5);
    }
}

TEST(Almgren, ScaleInvariance) {
    const auto& g = grid256();
    const auto u = solve_dirichlet(fields::lipschitz_aniso(0.2, 0.1), g, boundary::random_trig(g, 4, 5));
    const auto radii = grid_radii(g, 0.2, 0.9);
    const auto a = almgren_frequency(u, u.field(), radii);
    const auto b = almgren_frequency(u.scaled(-7.5), u.field(), radii);
    for (std::size_t k = 0; k < radii.size(); ++k) EXPECT_NEAR(a.N[k], b.N[k], 1e-12 * a.N[k]);
}

TEST(TwoScale, ClosedForms) {
    const auto x1 = harmonic_solution(1);
    EXPECT_NEAR(two_scale_frequency(x1, fields::identity(), 0.6, 0.3), 1.0, 2e-3);
    EXPECT_NEAR(two_scale_frequency(constant_solution(1.0, fields::angular_scalar(0.4)), fields::angular_scalar(0.4), 0.8,
                                    0.4),
                0.0, 1e-10);
    EXPECT_NEAR(two_scale_frequency(harmonic_solution(2), fields::identity(), 0.8, 0.4), 2.0, 2e-3);
    EXPECT_THROW(two_scale_frequency(x1, fields::identity(), 0.3, 0.6), DomainError);
}

TEST(TwoScale, AgreesWithLogAverageOfN) {
    const auto& g = grid256();
    const auto abar = fields::angular_scalar(0.4);
    const auto u = solve_dirichlet(abar, g, boundary::random_trig(g, 5, 9));
    const RingFunctionals rf(u, abar);
    const double r = g.ring_radius(240), rho = g.ring_radius(180);
    EXPECT_NEAR(two_scale_frequency(rf, r, rho), log_average_frequency(rf, r, rho), 1e-5);
}

TEST(Doubling, ClosedForms) {
    EXPECT_NEAR(doubling_index(harmonic_solution(1), 0.8), 2.0, 5e-3);
    EXPECT_NEAR(doubling_index(constant_solution(1.0), 0.8), 0.0, 1e-12);
    EXPECT_NEAR(doubling_index(harmonic_solution(3), 0.8), 6.0, 0.02);
    const RingFunctionals rf(harmonic_solution(2), fields::identity());
    EXPECT_NEAR(mass_doubling(rf, 0.8), 5.0, 0.02);
}

TEST(VanishingOrder, Fits) {
    const std::vector<double> radii{0.1, 0.15, 0.2, 0.3, 0.45, 0.6, 0.8};
    const auto x1 = vanishing_order(harmonic_solution(1), radii);
    EXPECT_EQ(x1.status, FitStatus::Ok);
    EXPECT_NEAR(x1.N_hat, 1.0, 0.02);
    EXPECT_NEAR(vanishing_order(constant_solution(2.0), radii).N_hat, 0.0, 1e-3);
    const auto& g = grid256();
    auto data = boundary::harmonic(g, 2);
    const auto d5 = boundary::harmonic(g, 5);
    for (std::size_t j = 0; j < data.size(); ++j) data[j] += 1e-6 * d5[j];
    EXPECT_NEAR(vanishing_order(solve_dirichlet(fields::identity(), g, data), radii).N_hat, 2.0, 0.02);
    EXPECT_EQ(vanishing_order(constant_solution(0.0), radii).status, FitStatus::Indeterminate);
    EXPECT_THROW(vanishing_order(harmonic_solution(1), {0.5, 0.6, 0.7, 0.8, 0.9}), DomainError);
}

TEST(Monotonicity, ClassicalCaseHasNoDeficit) {
    const auto& g = grid256();
    const auto u = solve_dirichlet(fields::identity(), g, boundary::random_trig(g, 5, 4));
    const auto rep = verify_almost_monotonicity(almgren_frequency(u, fields::identity(), grid_radii(g, 0.1, 0.9)), 0, 0);
    EXPECT_GE(rep.min_slope, -1e-6);
    EXPECT_EQ(rep.fitted_C, 0.0);
    EXPECT_TRUE(rep.violations.empty());
}

TEST(Monotonicity, LipschitzFieldConstantIsStable) {
    double prev = 0.0;
    for (int n : {128, 256}) {
        const auto g = PolarGrid::make(n, n);
        const auto f = fields::lipschitz_aniso(0.2, 0.1);
        const auto u = solve_dirichlet(f, g, boundary::harmonic_mix(g, {{1, 0.0}, {3, 0.4}}));
        const auto rep = verify_almost_monotonicity(almgren_frequency(u, f, grid_radii(g, 0.1, 0.9)), 0.2, 0.1);
        EXPECT_TRUE(std::isfinite(rep.fitted_C));
        if (prev > 0) EXPECT_NEAR(rep.fitted_C / prev, 1.0, 0.1);
        prev = rep.fitted_C;
    }
}

TEST(HIdentity, ExactForHarmonics) {
    const auto radii = grid_radii(grid256(), 0.2, 0.8);
    EXPECT_LT(verify_H_identity(harmonic_solution(1), fields::identity(), radii).sup_error, 1e-6);
    for (int k = 2; k <= 5; ++k)
        EXPECT_LT(verify_H_identity(harmonic_solution(k), fields::identity(), radii).sup_error, 1e-4) << k;
}

TEST(HomogeneousMonotonicity, AngularField) {
    const auto& g = grid256();
    const auto abar = fields::angular_scalar(0.4);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto u = solve_dirichlet(abar, g, boundary::random_trig(g, 6, seed));
        const auto rep = verify_homogeneous_monotonicity(u, abar, 0.1, 0.9);
        EXPECT_TRUE(rep.monotone);
        EXPECT_LT(rep.max_violation, 5e-3);
        EXPECT_LT(rep.h_identity_residual, 1e-4);
    }
    EXPECT_THROW(verify_homogeneous_monotonicity(harmonic_solution(1), fields::radial_scalar(1, 0.2), 0.1, 0.9),
                 DomainError);
}

TEST(Profile, Exports) {
    const auto p = almgren_frequency(harmonic_solution(1), fields::identity(), {0.8, 0.4});
    EXPECT_EQ(p.to_csv().rfind("r,D,H,N\r\n", 0), 0u);
    EXPECT_NE(p.to_svg("N").find("<svg"), std::string::npos);
    EXPECT_EQ(p.to_json()["interpolated"], 2);
    EXPECT_GT(p.radii[0], p.radii[1]);
}
