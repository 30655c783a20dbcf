#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "freqlab/coefficients.hpp"
#include "freqlab/errors.hpp"

using namespace freqlab;

namespace {
constexpr double pi = std::numbers::pi;

double dot(const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double len(const Point& a) { return std::sqrt(dot(a, a)); }
}  // namespace

TEST(Mu, Examples) {
    EXPECT_DOUBLE_EQ(mu_factor(fields::identity(), {0.3, -0.2, 0}), 1.0);
    const auto D = fields::diagonal({2, 1, 1});
    EXPECT_DOUBLE_EQ(mu_factor(D, {0.3, 0, 0}), 2.0);
    EXPECT_NEAR(mu_factor(D, {0.1, 0.1, 0}), 1.5, 1e-15);
    EXPECT_THROW(mu_factor(D, {0, 0, 0}), DomainError);
    EXPECT_DOUBLE_EQ(mu_factor(fields::constant_scalar(1.7), {0.5, 0, 0}), 1.7);
}

TEST(Beta, Examples) {
    const Point x{0.2, -0.4, 0};
    EXPECT_EQ(beta_vector(fields::identity(), x), x);
    const auto D = fields::diagonal({2, 1, 1});
    const Point b0 = beta_vector(D, {0.3, 0, 0});
    EXPECT_NEAR(b0[0], 0.3, 1e-15);
    EXPECT_NEAR(b0[1], 0.0, 1e-15);
    const Point b1 = beta_vector(D, {0.1, 0.1, 0});
    EXPECT_NEAR(b1[0], 0.1 * 2 / 1.5, 1e-15);
    EXPECT_NEAR(b1[1], 0.1 * 1 / 1.5, 1e-15);
    EXPECT_THROW(beta_vector(D, {0, 0, 0}), DomainError);
}

TEST(Beta, NormalComponentIsRadius) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-0.7, 0.7);
    const CoefficientField fs[] = {fields::lipschitz_aniso(0.2, 0.1), fields::modulus_aniso(0.3, Modulus::log_power(1)),
                                   fields::random_smooth(3, 0.3, Arity::Anisotropic), fields::diagonal({2, 1, 0.5}, 3)};
    for (const auto& f : fs)
        for (int i = 0; i < 500; ++i) {
            const Point x{U(rng), U(rng), f.dimension() == 3 ? U(rng) : 0.0};
            if (len(x) == 0) continue;
            const Point b = beta_vector(f, x);
            EXPECT_NEAR(dot(b, x) / len(x), len(x), 1e-12);
            const double mu = mu_factor(f, x);
            EXPECT_GE(mu, f.lambda() - 1e-12);
            EXPECT_LE(mu, 1 / f.lambda() + 1e-12);
        }
}

TEST(Beta, CloseToIdentityWhenAIsCloseToI) {
    // |A - I| <= delta on B_r  =>  |beta(x) - x| <= C delta |x|
    for (double delta : {0.2, 0.1, 0.05, 0.025}) {
        const auto f = fields::lipschitz_aniso(0.0, delta);
        double worst = 0.0;
        for (int j = 0; j < 64; ++j) {
            const double th = 2 * pi * j / 64;
            const Point x{0.5 * std::cos(th), 0.5 * std::sin(th), 0};
            const Point b = beta_vector(f, x);
            worst = std::max(worst, std::hypot(b[0] - x[0], b[1] - x[1]) / (delta * 0.5));
        }
        EXPECT_LT(worst, 2.5);
    }
}

TEST(Ellipticity, Constants) {
    EXPECT_DOUBLE_EQ(fields::identity().lambda(), 1.0);
    EXPECT_NEAR(fields::diagonal({2, 1, 1}).lambda(), 0.5, 1e-15);
    const auto rep = check_ellipticity(fields::lipschitz_aniso(0.2, 0.1));
    EXPECT_EQ(rep.asymmetry, 0.0);
    EXPECT_GT(rep.lambda, 0.7);
}

TEST(Mollify, ConstantAndAffinePreserved) {
    const auto c = mollify(fields::constant_scalar(1.3), 0.1);
    const auto a = mollify(fields::affine_scalar(1.0, {0.3, -0.2, 0}), 0.2, 32);
    for (const Point& x : {Point{0, 0, 0}, Point{0.5, 0.1, 0}, Point{-0.3, 0.6, 0}}) {
        EXPECT_NEAR(c.scalar(x), 1.3, 1e-14);
        EXPECT_NEAR(a.scalar(x), 1.0 + 0.3 * x[0] - 0.2 * x[1], 1e-14);
    }
    const auto m = mollify(fields::lipschitz_aniso(0.2, 0.1), 0.1, 32);
    const Mat A = m.matrix({0.3, 0.2, 0});
    const Mat B = fields::lipschitz_aniso(0.2, 0.1).matrix({0.3, 0.2, 0});
    for (int k = 0; k < 9; ++k) EXPECT_NEAR(A[k], B[k], 1e-14);
}

TEST(Mollify, OutsideShrunkBallIsDomainError) {
    const auto f = mollify(fields::identity(), 0.1, 16);
    EXPECT_NO_THROW(f.scalar({0.89, 0, 0}));
    EXPECT_THROW(f.scalar({0.95, 0, 0}), DomainError);
    EXPECT_THROW(mollify(fields::identity(), 0.0), DomainError);
    EXPECT_THROW(mollify(fields::identity(), 1.0), DomainError);
}

TEST(Mollify, RoughFieldSupAndGradientBounds) {
    // a = 1 + |x1|^{1/2}: sup |a_eps - a| <= eps^{1/2}, sup |grad a_eps| <= C eps^{-1/2}
    const double eps = 0.01;
    const auto f = fields::power_abs(1.0, 1.0, 0.5);
    const auto g = mollify(f, eps);
    EXPECT_NEAR(g.metadata()["sup_distance_bound"].get<double>(), 0.1, 1e-12);
    const double grad_bound = g.metadata()["gradient_bound"].get<double>();
    double sup = 0.0, grad = 0.0;
    const int P = 100;
    const double h = 1e-4;
    for (int i = 0; i < P; ++i)
        for (int j = 0; j < P; ++j) {
            const Point x{-0.9 + 1.8 * i / (P - 1), -0.9 + 1.8 * j / (P - 1), 0};
            if (len(x) > 0.9) continue;
            sup = std::max(sup, std::abs(g.scalar(x) - f.scalar(x)));
        }
    // the gradient concentrates near x1 = 0; sample that strip densely
    for (int i = -50; i <= 50; ++i) {
        const double x1 = i * eps / 25;
        const double d = (g.scalar({x1 + h, 0.1, 0}) - g.scalar({x1 - h, 0.1, 0})) / (2 * h);
        grad = std::max(grad, std::abs(d));
    }
    EXPECT_LE(sup, 0.1);
    EXPECT_LE(grad, grad_bound);
    EXPECT_GT(grad, 0.05 * grad_bound);
}

TEST(Mollify, KernelGradientConstant) {
    // grows with dimension; finite and of order a few units
    const double c2 = mollifier_gradient_constant(2), c3 = mollifier_gradient_constant(3);
    EXPECT_GT(c2, 1.0);
    EXPECT_LT(c2, 10.0);
    EXPECT_GT(c3, c2);
}

TEST(Homogeneous, AlreadyHomogeneousIsUnchanged) {
    const auto a = fields::angular_scalar(0.3);
    const auto p = homogeneous_projection(a, 0.5);
    for (const Point& x : {Point{0.1, 0.2, 0}, Point{-0.7, 0.05, 0}, Point{0, 0, 0}})
        EXPECT_EQ(p.scalar(x), a.scalar(x));
}

TEST(Homogeneous, RadialCollapses) {
    const auto p = homogeneous_projection(fields::radial_scalar(1.0, 1.0), 0.5);
    for (const Point& x : {Point{0.1, 0.2, 0}, Point{-0.7, 0.05, 0}, Point{0, 0, 0}, Point{0.001, 0, 0}})
        EXPECT_NEAR(p.scalar(x), 1.5, 1e-14);
    EXPECT_TRUE(p.zero_homogeneous());
    EXPECT_EQ(p.anchor_radius(), 0.5);
}

TEST(Homogeneous, IdempotentAndScaleInvariant) {
    const auto a = fields::affine_scalar(1.0, {0.1, 0.05, 0});
    const auto p = homogeneous_projection(a, 0.5);
    const auto q = homogeneous_projection(p, 0.5);
    for (int j = 0; j < 32; ++j) {
        const double th = 2 * pi * j / 32;
        const Point x{std::cos(th), std::sin(th), 0};
        EXPECT_EQ(q.scalar(x), p.scalar(x));
        EXPECT_NEAR(p.scalar({0.1 * x[0], 0.1 * x[1], 0}), p.scalar({0.9 * x[0], 0.9 * x[1], 0}), 1e-15);
    }
    // origin value is the sphere average, which is a(0) for affine a
    EXPECT_NEAR(p.scalar({0, 0, 0}), 1.0, 1e-12);
}

TEST(Homogeneous, DistanceOnInnerSphere) {
    // a = 1 + 0.1 x1: on the sphere of radius 0.4, |a_bar - a| = 0.1 |cos th| (0.5 - 0.4)
    const auto a = fields::affine_scalar(1.0, {0.1, 0, 0});
    const auto p = homogeneous_projection(a, 0.5);
    double worst = 0;
    for (int j = 0; j < 360; ++j) {
        const double th = 2 * pi * j / 360;
        const Point x{0.4 * std::cos(th), 0.4 * std::sin(th), 0};
        worst = std::max(worst, std::abs(p.scalar(x) - a.scalar(x)));
    }
    EXPECT_NEAR(worst, 0.01, 1e-12);
}

TEST(Homogeneous, AnisotropicUnsupported) {
    EXPECT_THROW(homogeneous_projection(fields::diagonal({2, 1, 1}), 0.5), UnsupportedError);
}

TEST(EmpiricalModulus, Constant) {
    const auto e = empirical_modulus(fields::constant_scalar(2.0), 200);
    EXPECT_EQ(e.C_h, 0.0);
    for (double w : e.oscillations) EXPECT_EQ(w, 0.0);
    EXPECT_EQ(e.modulus.omega(0.1), 0.0);
}

TEST(EmpiricalModulus, Linear) {
    const auto e = empirical_modulus(fields::affine_scalar(1.0, {0.2, 0, 0}), 2000);
    EXPECT_NEAR(e.alpha, 1.0, 0.02);
    EXPECT_NEAR(e.C_h, 0.2, 0.01);
    EXPECT_LE(e.C_h, 0.2 + 1e-12);
}

TEST(EmpiricalModulus, RejectsTinySample) {
    EXPECT_THROW(empirical_modulus(fields::identity(), 99), DomainError);
}

TEST(Holder, ZeroAmplitudeIsOne) {
    const auto f = generate_holder(0.9, 0.0, 1, 2);
    for (const Point& x : {Point{0, 0, 0}, Point{0.3, -0.5, 0}}) EXPECT_EQ(f.scalar(x), 1.0);
}

TEST(Holder, NormalizedAndDeterministic) {
    const auto f = generate_holder(0.7, 0.1, 1, 2);
    const auto g = generate_holder(0.7, 0.1, 1, 2);
    const auto h = generate_holder(0.7, 0.1, 2, 2);
    EXPECT_EQ(f.scalar({0, 0, 0}), 1.0);
    EXPECT_EQ(f.scalar({0.3, 0.4, 0}), g.scalar({0.3, 0.4, 0}));
    EXPECT_NE(f.scalar({0.3, 0.4, 0}), h.scalar({0.3, 0.4, 0}));
    EXPECT_EQ(f.fingerprint(), g.fingerprint());
    EXPECT_NE(f.fingerprint(), h.fingerprint());
}

TEST(Holder, EmpiricalExponent) {
    const auto f = generate_holder(0.7, 0.1, 1, 2);
    const auto e = empirical_modulus(f, 1000);
    EXPECT_GE(e.alpha, 0.6);
    EXPECT_LE(e.alpha, 0.8);
}

TEST(Holder, RangeViolation) {
    EXPECT_THROW(generate_holder(0.7, 10.0, 1, 2), GenerationError);
    EXPECT_THROW(generate_holder(1.2, 0.1, 1, 2), DomainError);
}

TEST(Normalize, OriginBecomesIdentity) {
    const auto f = normalize_at_origin(fields::lipschitz_aniso(0.2, 0.1));
    const Mat A = f.matrix({0, 0, 0});
    EXPECT_NEAR(A[0], 1.0, 1e-14);
    EXPECT_NEAR(A[4], 1.0, 1e-14);
    EXPECT_NEAR(A[1], 0.0, 1e-14);
    const auto s = normalize_at_origin(fields::constant_scalar(2.0));
    EXPECT_DOUBLE_EQ(s.scalar({0.3, 0, 0}), 1.0);
}

TEST(Json, RoundTripAndFingerprint) {
    const CoefficientField fs[] = {fields::identity(),
                                   fields::diagonal({2, 1, 1}),
                                   fields::angular_scalar(0.4),
                                   fields::modulus_aniso(0.3, Modulus::log_power(1.0)),
                                   fields::lipschitz_aniso(0.2, 0.1),
                                   fields::random_smooth(11, 0.2, Arity::Anisotropic),
                                   generate_holder(0.75, 0.05, 4, 2, 64),
                                   fields::perturbed(fields::identity(), 0.1, 0.5, 0.9),
                                   homogeneous_projection(fields::affine_scalar(1, {0.1, 0, 0}), 0.5),
                                   normalize_at_origin(fields::lipschitz_aniso(0.2, 0.1))};
    for (const auto& f : fs) {
        const auto g = CoefficientField::from_json(f.config());
        EXPECT_EQ(g.config(), f.config()) << f.config().dump();
        EXPECT_EQ(g.fingerprint(), f.fingerprint());
        EXPECT_EQ(g.arity(), f.arity());
        for (const Point& x : {Point{0.1, 0.2, 0}, Point{-0.6, 0.3, 0}}) {
            const Mat A = f.matrix(x), B = g.matrix(x);
            for (int k = 0; k < 9; ++k) EXPECT_EQ(A[k], B[k]);
        }
    }
}

TEST(Json, Errors) {
    EXPECT_THROW(CoefficientField::from_json({{"kind", "nope"}}), ConfigError);
    EXPECT_THROW(CoefficientField::from_json({{"kind", "identity"}, {"colour", 1}}), ConfigError);
    EXPECT_THROW(CoefficientField::from_json({{"kind", "radial"}, {"params", {{"c0", 1}}}}), ConfigError);
    EXPECT_THROW(CoefficientField::from_json({{"kind", "diagonal"}, {"arity", "isotropic"}, {"params", {{"d", {1, 2}}}}}),
                 ConfigError);
}

TEST(Sampled, ReproducesSmoothFieldsApproximately) {
    const auto f = fields::lipschitz_aniso(0.2, 0.1);
    const auto grid = export_sampled(f, 65);
    EXPECT_EQ(grid.components, 3u);
    const auto g = fields::sampled(grid);
    // bilinear interpolation is exact for fields affine in each coordinate
    for (const Point& x : {Point{0.1, 0.2, 0}, Point{-0.33, 0.41, 0}}) {
        const Mat A = f.matrix(x), B = g.matrix(x);
        for (int k = 0; k < 9; ++k) EXPECT_NEAR(A[k], B[k], 1e-12);
        EXPECT_EQ(B[1], B[3]);
    }
}

TEST(ThreadSafety, ConcurrentEvaluationMatchesSerial) {
    const auto f = mollify(generate_holder(0.75, 0.05, 3, 2, 32), 0.05, 16);
    std::vector<double> serial(64), parallel(64);
    for (int i = 0; i < 64; ++i) serial[i] = f.scalar({0.01 * i, -0.005 * i, 0});
    std::vector<std::thread> ts;
    for (int t = 0; t < 4; ++t)
        ts.emplace_back([&, t] {
            for (int i = t; i < 64; i += 4) parallel[i] = f.scalar({0.01 * i, -0.005 * i, 0});
        });
    for (auto& t : ts) t.join();
    EXPECT_EQ(serial, parallel);
}
