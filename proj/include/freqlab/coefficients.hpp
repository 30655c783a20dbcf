#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "freqlab/io.hpp"
#include "freqlab/modulus.hpp"

namespace freqlab {

using Point = std::array<double, 3>;
// Row-major 3x3; only the leading n x n block is meaningful.
using Mat = std::array<double, 9>;

enum class Arity { Isotropic, Anisotropic };
const char* to_string(Arity a);

struct Holder {
    double alpha = 1.0;
    double C_h = 0.0;
};

/// Elliptic coefficients on the closed unit ball: a scalar a(x) or a symmetric matrix A(x).
///
/// Fields are immutable values; copies share the evaluator, which must be pure so that
/// concurrent evaluation from several threads is safe.
class CoefficientField {
public:
    using ScalarFn = std::function<double(const Point&)>;
    using MatrixFn = std::function<Mat(const Point&)>;

    static CoefficientField scalar_field(int n, ScalarFn a, nlohmann::json config);
    static CoefficientField matrix_field(int n, MatrixFn A, nlohmann::json config);

    Arity arity() const { return arity_; }
    bool isotropic() const { return arity_ == Arity::Isotropic; }
    int dimension() const { return n_; }
    double lambda() const { return lambda_; }

    /// Scalar value; anisotropic fields throw UnsupportedError.
    double scalar(const Point& x) const;
    Mat matrix(const Point& x) const;

    const std::optional<Modulus>& declared_modulus() const { return modulus_; }
    const std::optional<Holder>& holder() const { return holder_; }
    CoefficientField with_modulus(Modulus m) const;
    CoefficientField with_holder(Holder h) const;
    CoefficientField with_lambda(double lambda) const;
    CoefficientField with_metadata(const std::string& key, nlohmann::json value) const;
    /// Marks the field 0-homogeneous; the caller guarantees value(s x) = value(x).
    CoefficientField as_zero_homogeneous() const;

    /// True when value(s x) = value(x) for all s > 0 (exact by construction).
    bool zero_homogeneous() const { return homogeneous_; }
    /// Anchor radius of a homogeneous projection; empty for intrinsically homogeneous fields.
    std::optional<double> anchor_radius() const { return anchor_; }

    /// Largest radius on which the field may be evaluated (1 - eps for mollified fields).
    double valid_radius() const { return valid_radius_; }

    /// {arity, kind, params, seed}
    const nlohmann::json& config() const { return config_; }
    const nlohmann::json& metadata() const { return metadata_; }
    std::string fingerprint() const;

    /// Builds a field from its config record. Unknown kinds or keys throw ConfigError.
    static CoefficientField from_json(const nlohmann::json& j);

private:
    friend CoefficientField mollify(const CoefficientField&, double, int);
    friend CoefficientField homogeneous_projection(const CoefficientField&, double);
    friend CoefficientField normalize_at_origin(const CoefficientField&);

    Arity arity_ = Arity::Isotropic;
    int n_ = 2;
    double lambda_ = 1.0;
    ScalarFn scalar_;
    MatrixFn matrix_;
    std::optional<Modulus> modulus_;
    std::optional<Holder> holder_;
    bool homogeneous_ = false;
    std::optional<double> anchor_;
    double valid_radius_ = 1.0;
    nlohmann::json config_;
    nlohmann::json metadata_ = nlohmann::json::object();
};

struct EllipticityReport {
    double lambda_min = 0.0;  // smallest eigenvalue seen
    double lambda_max = 0.0;  // largest eigenvalue seen
    double lambda = 0.0;      // min(lambda_min, 1 / lambda_max)
    double asymmetry = 0.0;   // max |A_ij - A_ji|
    std::size_t samples = 0;
};

/// Samples the field on a polar (or spherical) verification set inside radius `radius`.
EllipticityReport check_ellipticity(const CoefficientField& f, double radius = 1.0, int radial = 24,
                                    int angular = 48);

double mu_factor(const CoefficientField& f, const Point& x);
Point beta_vector(const CoefficientField& f, const Point& x);

/// Integral of |grad eta| for the unit-mass bump eta in dimension n.
double mollifier_gradient_constant(int n);

/// Componentwise convolution with the bump kernel at scale eps, by a tensor midpoint rule with
/// `samples_per_axis`^n nodes. Evaluating outside B_{1-eps} throws DomainError.
CoefficientField mollify(const CoefficientField& f, double eps, int samples_per_axis = 64);

/// a_bar(x) = a(r x / |x|); at the origin the sphere average of a over the sphere of radius r.
CoefficientField homogeneous_projection(const CoefficientField& f, double r);

/// A'(y) = S^{-1} A(S y) S^{-1} with S = A(0)^{1/2}, so that A'(0) = I (a / a(0) for scalars).
CoefficientField normalize_at_origin(const CoefficientField& f);

struct EmpiricalModulus {
    Modulus modulus = Modulus::linear();
    std::vector<double> scales;
    std::vector<double> oscillations;
    double alpha = 1.0;
    double C_h = 0.0;
    nlohmann::json to_json() const;
};

/// Max oscillation over random point pairs at dyadic separations 2^-1 .. 2^-12 inside B_0.9,
/// with a power-law fit over the scales in [fit_lo, fit_hi].
EmpiricalModulus empirical_modulus(const CoefficientField& f, int sample_count, std::uint64_t seed = 12345,
                                   double fit_lo = 1.0 / 128.0, double fit_hi = 0.25);

/// Random trigonometric series a = 1 + amplitude * sum_k k^{-alpha-1/2} (cos(k xi_k.x + phi_k) - cos phi_k),
/// one random direction per integer frequency shell k = 1..K. Throws GenerationError if a leaves [1/2, 2].
CoefficientField generate_holder(double alpha, double amplitude, std::uint64_t seed, int n, int K = 256);

namespace fields {

CoefficientField identity(int n = 2);
CoefficientField constant_scalar(double c, int n = 2);
CoefficientField constant_matrix(const Mat& A, int n = 2);
CoefficientField diagonal(std::array<double, 3> d, int n = 2);
/// a(x) = c0 + <g, x>
CoefficientField affine_scalar(double c0, std::array<double, 3> g, int n = 2);
/// a(x) = c0 + c1 |x|
CoefficientField radial_scalar(double c0, double c1, int n = 2);
/// a(x) = 1 + amp sin(k theta + phase) in the plane (0-homogeneous); a(0) = 1.
CoefficientField angular_scalar(double amp, int k = 1, double phase = 0.0);
/// a(x) = c0 + amp |x_1|^alpha
CoefficientField power_abs(double c0, double amp, double alpha, int n = 2);
/// A11 = 1 + kappa s(x1), A22 = 1 + kappa s(x2) / 2, A12 = kappa s(x1 + x2) / 4 with s(t) = omega(|t|).
CoefficientField modulus_aniso(double kappa, const Modulus& m, int n = 2);
/// [[1 + delta + M x1 / 2, M x2 / 4], [M x2 / 4, 1 - delta + M x1 / 4]]
CoefficientField lipschitz_aniso(double M, double delta, int n = 2);
/// Smooth random field I + amplitude * S(x) (or 1 + amplitude * s(x)) from a few random Fourier modes.
CoefficientField random_smooth(std::uint64_t seed, double amplitude, Arity arity, int n = 2, int modes = 4);
/// base + eps * b(|x|) * P, with b a unit-height bump supported in r_in < |x| < r_out and
/// P = I (scalar bump for isotropic bases) or diag(1, 1/2, 1/2).
CoefficientField perturbed(const CoefficientField& base, double eps, double r_in, double r_out);
/// Bilinear/trilinear interpolation of a Cartesian binary grid (1 component: scalar,
/// n(n+1)/2 components: upper triangle of A row by row).
CoefficientField sampled(const io::BinaryGrid& grid);

}  // namespace fields

/// Samples a field on a Cartesian grid covering [-1,1]^n.
io::BinaryGrid export_sampled(const CoefficientField& f, std::size_t points_per_axis);

}  // namespace freqlab
