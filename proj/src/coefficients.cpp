#include "freqlab/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "freqlab/errors.hpp"

namespace freqlab {

namespace {

constexpr double kPi = std::numbers::pi;

Mat scaled_identity(double a, int n) {
    Mat m{};
    for (int i = 0; i < n; ++i) m[4 * i] = a;
    return m;
}

double norm(const Point& x) { return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); }

// Uniform double in [0,1) from the top 53 bits; independent of the standard library's distributions.
double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Point random_direction(std::mt19937_64& rng, int n) {
    if (n == 2) {
        const double th = 2 * kPi * uniform(rng);
        return {std::cos(th), std::sin(th), 0.0};
    }
    const double z = 2 * uniform(rng) - 1, th = 2 * kPi * uniform(rng);
    const double s = std::sqrt(std::max(0.0, 1 - z * z));
    return {s * std::cos(th), s * std::sin(th), z};
}

Eigen::Matrix3d to_eigen(const Mat& A, int n) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = A[3 * i + j];
    return m;
}

std::pair<double, double> eig_range(const Mat& A, int n) {
    if (n == 2) {
        const double a = A[0], b = 0.5 * (A[1] + A[3]), d = A[4];
        const double m = 0.5 * (a + d), r = std::hypot(0.5 * (a - d), b);
        return {m - r, m + r};
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(to_eigen(A, 3), Eigen::EigenvaluesOnly);
    return {es.eigenvalues()(0), es.eigenvalues()(2)};
}

void check_dimension(int n) {
    if (n != 2 && n != 3) throw DomainError("coefficient fields support n = 2 or 3");
}

// Verification sample: origin plus polar/spherical shells.
template <class F>
void for_each_sample(int n, double radius, int radial, int angular, F&& f) {
    f(Point{0.0, 0.0, 0.0});
    for (int i = 1; i <= radial; ++i) {
        const double rho = radius * i / radial;
        if (n == 2) {
            for (int j = 0; j < angular; ++j) {
                const double th = 2 * kPi * (j + 0.5 * (i % 2)) / angular;
                f(Point{rho * std::cos(th), rho * std::sin(th), 0.0});
            }
        } else {
            const int lat = std::max(2, angular / 2);
            for (int a = 0; a < lat; ++a) {
                const double ph = kPi * (a + 0.5) / lat;
                for (int j = 0; j < angular; ++j) {
                    const double th = 2 * kPi * j / angular;
                    f(Point{rho * std::sin(ph) * std::cos(th), rho * std::sin(ph) * std::sin(th), rho * std::cos(ph)});
                }
            }
        }
    }
}

double bump_profile(double s2) { return s2 < 1.0 ? std::exp(-1.0 / (1.0 - s2)) : 0.0; }

double annulus_bump(double rho, double r_in, double r_out) {
    const double s = (2 * rho - r_in - r_out) / (r_out - r_in);
    return s * s < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s * s)) : 0.0;
}

double config_number(const nlohmann::json& params, const char* key) {
    if (!params.contains(key)) throw ConfigError(std::string("field.params: missing '") + key + "'");
    if (!params.at(key).is_number()) throw ConfigError(std::string("field.params.") + key + ": expected a number");
    return params.at(key).get<double>();
}

void only_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    for (const auto& [key, _] : obj.items())
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            throw ConfigError(where + ": unknown key '" + key + "'");
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

const char* to_string(Arity a) { return a == Arity::Isotropic ? "isotropic" : "anisotropic"; }

CoefficientField CoefficientField::scalar_field(int n, ScalarFn a, nlohmann::json config) {
    check_dimension(n);
    CoefficientField f;
    f.arity_ = Arity::Isotropic;
    f.n_ = n;
    f.scalar_ = std::move(a);
    f.config_ = std::move(config);
    f.config_["arity"] = "isotropic";
    f.lambda_ = check_ellipticity(f).lambda;
    return f;
}

CoefficientField CoefficientField::matrix_field(int n, MatrixFn A, nlohmann::json config) {
    check_dimension(n);
    CoefficientField f;
    f.arity_ = Arity::Anisotropic;
    f.n_ = n;
    f.matrix_ = std::move(A);
    f.config_ = std::move(config);
    f.config_["arity"] = "anisotropic";
    f.lambda_ = check_ellipticity(f).lambda;
    return f;
}

double CoefficientField::scalar(const Point& x) const {
    if (arity_ != Arity::Isotropic) throw UnsupportedError("scalar() on an anisotropic field");
    return scalar_(x);
}

Mat CoefficientField::matrix(const Point& x) const {
    if (arity_ == Arity::Isotropic) return scaled_identity(scalar_(x), n_);
    return matrix_(x);
}

CoefficientField CoefficientField::with_modulus(Modulus m) const {
    CoefficientField f = *this;
    f.modulus_ = std::move(m);
    return f;
}

CoefficientField CoefficientField::with_holder(Holder h) const {
    CoefficientField f = *this;
    f.holder_ = h;
    return f;
}

CoefficientField CoefficientField::with_lambda(double lambda) const {
    CoefficientField f = *this;
    f.lambda_ = lambda;
    return f;
}

CoefficientField CoefficientField::as_zero_homogeneous() const {
    CoefficientField f = *this;
    f.homogeneous_ = true;
    return f;
}

CoefficientField CoefficientField::with_metadata(const std::string& key, nlohmann::json value) const {
    CoefficientField f = *this;
    f.metadata_[key] = std::move(value);
    return f;
}

std::string CoefficientField::fingerprint() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config_.dump())));
    return buf;
}

EllipticityReport check_ellipticity(const CoefficientField& f, double radius, int radial, int angular) {
    EllipticityReport rep;
    rep.lambda_min = INFINITY;
    rep.lambda_max = -INFINITY;
    const int n = f.dimension();
    for_each_sample(n, std::min(radius, f.valid_radius()), radial, angular, [&](const Point& x) {
        const Mat A = f.matrix(x);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) rep.asymmetry = std::max(rep.asymmetry, std::abs(A[3 * i + j] - A[3 * j + i]));
        const auto [lo, hi] = eig_range(A, n);
        rep.lambda_min = std::min(rep.lambda_min, lo);
        rep.lambda_max = std::max(rep.lambda_max, hi);
        ++rep.samples;
    });
    rep.lambda = rep.lambda_min > 0.0 ? std::min({1.0, rep.lambda_min, 1.0 / rep.lambda_max}) : 0.0;
    return rep;
}

double mu_factor(const CoefficientField& f, const Point& x) {
    const double r = norm(x);
    if (r == 0.0) throw DomainError("mu_factor: x must be nonzero");
    if (f.isotropic()) return f.scalar(x);
    const Mat A = f.matrix(x);
    const int n = f.dimension();
    double q = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) q += x[i] * A[3 * i + j] * x[j];
    return q / (r * r);
}

Point beta_vector(const CoefficientField& f, const Point& x) {
    const double mu = mu_factor(f, x);
    if (f.isotropic()) return x;
    const Mat A = f.matrix(x);
    const int n = f.dimension();
    Point b{};
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += A[3 * i + j] * x[j];
        b[i] = s / mu;
    }
    return b;
}

double mollifier_gradient_constant(int n) {
    check_dimension(n);
    // radial integrals of the profile e(r) = exp(-1/(1-r^2)) and of |e'(r)| against the sphere measure
    constexpr int M = 200000;
    double mass = 0.0, grad = 0.0;
    for (int i = 0; i < M; ++i) {
        const double r = (i + 0.5) / M;
        const double e = bump_profile(r * r);
        const double de = e * 2 * r / ((1 - r * r) * (1 - r * r));
        const double area = n == 2 ? 2 * kPi * r : 4 * kPi * r * r;
        mass += e * area / M;
        grad += de * area / M;
    }
    return grad / mass;
}

CoefficientField mollify(const CoefficientField& f, double eps, int S) {
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("mollify: eps must lie in (0,1)");
    if (S < 4) throw DomainError("mollify: need at least 4 samples per axis");
    const int n = f.dimension();
    struct Kernel {
        std::vector<Point> y;
        std::vector<double> w;
    };
    auto K = std::make_shared<Kernel>();
    const double h = 2.0 / S;
    double total = 0.0;
    const int Sz = n == 3 ? S : 1;
    for (int i = 0; i < S; ++i)
        for (int j = 0; j < S; ++j)
            for (int k = 0; k < Sz; ++k) {
                const Point y{-1 + (i + 0.5) * h, -1 + (j + 0.5) * h, n == 3 ? -1 + (k + 0.5) * h : 0.0};
                const double w = bump_profile(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]);
                if (w <= 0.0) continue;
                K->y.push_back(y);
                K->w.push_back(w);
                total += w;
            }
    for (double& w : K->w) w /= total;

    const double limit = std::min(f.valid_radius(), 1.0) - eps;
    auto guard = [limit, eps](const Point& x) {
        if (norm(x) > limit + 1e-12)
            throw DomainError("mollified field evaluated outside B_{1-eps} (eps=" + std::to_string(eps) + ")");
    };

    CoefficientField g = f;
    if (f.isotropic()) {
        auto base = f.scalar_;
        g.scalar_ = [base, K, eps, guard](const Point& x) {
            guard(x);
            double s = 0.0;
            for (std::size_t i = 0; i < K->w.size(); ++i) {
                const Point& y = K->y[i];
                s += K->w[i] * base(Point{x[0] - eps * y[0], x[1] - eps * y[1], x[2] - eps * y[2]});
            }
            return s;
        };
    } else {
        auto base = f.matrix_;
        g.matrix_ = [base, K, eps, guard](const Point& x) {
            guard(x);
            Mat s{};
            for (std::size_t i = 0; i < K->w.size(); ++i) {
                const Point& y = K->y[i];
                const Mat A = base(Point{x[0] - eps * y[0], x[1] - eps * y[1], x[2] - eps * y[2]});
                for (int c = 0; c < 9; ++c) s[c] += K->w[i] * A[c];
            }
            return s;
        };
    }
    g.valid_radius_ = limit;
    g.homogeneous_ = false;
    g.anchor_.reset();
    g.config_ = {{"kind", "mollified"},
                 {"params", {{"eps", eps}, {"samples_per_axis", S}, {"base", f.config_}}},
                 {"arity", f.config_.value("arity", to_string(f.arity()))}};
    // convex combinations of elliptic matrices keep the base ellipticity constant
    g.lambda_ = f.lambda_;
    const double C_eta = mollifier_gradient_constant(n);
    g.metadata_ = nlohmann::json::object();
    g.metadata_["eps"] = eps;
    g.metadata_["kernel_gradient_constant"] = C_eta;
    if (f.modulus_) {
        const double L = f.metadata_.value("modulus_constant", 1.0);
        const double w = L * f.modulus_->omega(eps);
        g.metadata_["sup_distance_bound"] = w;
        g.metadata_["gradient_bound"] = C_eta * w / eps;
    }
    return g;
}

CoefficientField homogeneous_projection(const CoefficientField& f, double r) {
    if (!f.isotropic()) throw UnsupportedError("homogeneous_projection is defined for scalar coefficients only");
    if (!(r > 0.0 && r <= f.valid_radius())) throw DomainError("homogeneous_projection: r must lie in (0, valid radius]");
    if (f.zero_homogeneous()) return f;
    const int n = f.dimension();
    auto base = f.scalar_;
    double avg = 0.0;
    int count = 0;
    for_each_sample(n, r, 1, 512, [&](const Point& x) {
        if (norm(x) == 0.0) return;
        avg += base(x);
        ++count;
    });
    if (n == 3) {
        // latitude-longitude samples need the sin(phi) area weight
        avg = 0.0;
        double wsum = 0.0;
        const int lat = 128, lon = 256;
        for (int a = 0; a < lat; ++a) {
            const double ph = kPi * (a + 0.5) / lat;
            for (int j = 0; j < lon; ++j) {
                const double th = 2 * kPi * j / lon;
                const double w = std::sin(ph);
                avg += w * base(Point{r * std::sin(ph) * std::cos(th), r * std::sin(ph) * std::sin(th), r * std::cos(ph)});
                wsum += w;
            }
        }
        avg /= wsum;
    } else {
        avg /= count;
    }
    CoefficientField g = f;
    g.scalar_ = [base, r, avg](const Point& x) {
        const double rho = norm(x);
        if (rho == 0.0) return avg;
        const double s = r / rho;
        return base(Point{x[0] * s, x[1] * s, x[2] * s});
    };
    g.homogeneous_ = true;
    g.anchor_ = r;
    g.valid_radius_ = 1.0;
    g.config_ = {{"kind", "homogeneous_projection"}, {"params", {{"r", r}, {"base", f.config_}}}, {"arity", "isotropic"}};
    g.metadata_ = nlohmann::json::object();
    g.metadata_["sphere_average"] = avg;
    return g;
}

CoefficientField normalize_at_origin(const CoefficientField& f) {
    const int n = f.dimension();
    const Point o{0, 0, 0};
    CoefficientField g = f;
    g.config_["normalize"] = true;
    if (f.isotropic()) {
        const double a0 = f.scalar(o);
        if (!(a0 > 0.0)) throw DomainError("normalize_at_origin: a(0) must be positive");
        auto base = f.scalar_;
        g.scalar_ = [base, a0](const Point& x) { return base(x) / a0; };
        g.lambda_ = check_ellipticity(g).lambda;
        return g;
    }
    Eigen::Matrix3d A0 = to_eigen(f.matrix(o), n);
    if (n == 2) A0(2, 2) = 1.0;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(A0);
    if (es.eigenvalues()(0) <= 0.0) throw DomainError("normalize_at_origin: A(0) is not positive definite");
    const Eigen::Matrix3d S = es.operatorSqrt();
    const Eigen::Matrix3d Si = es.operatorInverseSqrt();
    auto base = f.matrix_;
    g.matrix_ = [base, S, Si, n](const Point& y) {
        const Eigen::Vector3d x = S * Eigen::Vector3d(y[0], y[1], y[2]);
        Eigen::Matrix3d A = to_eigen(base(Point{x(0), x(1), n == 3 ? x(2) : 0.0}), n);
        if (n == 2) A(2, 2) = 1.0;
        const Eigen::Matrix3d B = Si * A * Si;
        Mat out{};
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) out[3 * i + j] = 0.5 * (B(i, j) + B(j, i));
        return out;
    };
    // S maps the unit ball onto an ellipsoid; keep evaluation inside the base's valid region
    g.valid_radius_ = f.valid_radius() / std::sqrt(es.eigenvalues()(2));
    g.lambda_ = check_ellipticity(g).lambda;
    return g;
}

nlohmann::json EmpiricalModulus::to_json() const {
    return {{"alpha", alpha}, {"C_h", C_h}, {"scales", scales}, {"oscillations", oscillations},
            {"modulus", modulus.to_json()}};
}

EmpiricalModulus empirical_modulus(const CoefficientField& f, int sample_count, std::uint64_t seed, double fit_lo,
                                   double fit_hi) {
    if (sample_count < 100) throw DomainError("empirical_modulus: sample_count must be >= 100");
    const int n = f.dimension();
    const double R = std::min(0.9, f.valid_radius());
    std::mt19937_64 rng(seed);
    EmpiricalModulus out;
    for (int j = 12; j >= 1; --j) {
        const double d = std::ldexp(1.0, -j);
        const double Rx = std::max(R - d, 0.0);
        double osc = 0.0;
        for (int s = 0; s < sample_count; ++s) {
            const Point u = random_direction(rng, n);
            const Point v = random_direction(rng, n);
            const double rho = Rx * std::pow(uniform(rng), 1.0 / n);
            const Point x{rho * v[0], rho * v[1], rho * v[2]};
            const Point y{x[0] + d * u[0], x[1] + d * u[1], x[2] + d * u[2]};
            const Mat A = f.matrix(x), B = f.matrix(y);
            for (int c = 0; c < 9; ++c) osc = std::max(osc, std::abs(A[c] - B[c]));
        }
        out.scales.push_back(d);
        out.oscillations.push_back(osc);
    }
    // least concave majorant through the origin, flattened after its maximum
    std::vector<std::pair<double, double>> hull{{0.0, 0.0}};
    for (std::size_t i = 0; i < out.scales.size(); ++i) {
        const std::pair<double, double> p{out.scales[i], out.oscillations[i]};
        while (hull.size() >= 2) {
            const auto& a = hull[hull.size() - 2];
            const auto& b = hull.back();
            if ((b.second - a.second) * (p.first - a.first) <= (p.second - a.second) * (b.first - a.first)) hull.pop_back();
            else break;
        }
        hull.push_back(p);
    }
    std::vector<std::pair<double, double>> samples;
    double running = 0.0;
    for (double d : out.scales) {
        auto it = std::upper_bound(hull.begin(), hull.end(), d,
                                   [](double v, const std::pair<double, double>& e) { return v < e.first; });
        double v;
        if (it == hull.end()) v = hull.back().second;
        else {
            const auto& b = *it;
            const auto& a = *(it - 1);
            v = a.second + (b.second - a.second) * (d - a.first) / (b.first - a.first);
        }
        running = std::max(running, v);
        samples.emplace_back(d, running);
    }
    out.modulus = Modulus::tabulated(samples);

    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < out.scales.size(); ++i)
        if (out.scales[i] >= fit_lo * (1 - 1e-12) && out.scales[i] <= fit_hi * (1 + 1e-12) && out.oscillations[i] > 0.0) {
            xs.push_back(std::log(out.scales[i]));
            ys.push_back(std::log(out.oscillations[i]));
        }
    if (xs.size() >= 2) {
        const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
        const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) sxy += (xs[i] - mx) * (ys[i] - my), sxx += (xs[i] - mx) * (xs[i] - mx);
        out.alpha = sxy / sxx;
        out.C_h = std::exp(my - out.alpha * mx);
    } else {
        out.alpha = 1.0;
        out.C_h = 0.0;
    }
    return out;
}

CoefficientField generate_holder(double alpha, double amplitude, std::uint64_t seed, int n, int K) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("generate_holder: alpha must lie in (0,1)");
    if (!(amplitude >= 0.0)) throw DomainError("generate_holder: amplitude must be nonnegative");
    if (K < 1) throw DomainError("generate_holder: K must be positive");
    check_dimension(n);
    struct Mode {
        Point xi;
        double phase, coef, cos_phase;
    };
    auto modes = std::make_shared<std::vector<Mode>>();
    std::mt19937_64 rng(seed);
    for (int k = 1; k <= K; ++k) {
        const Point u = random_direction(rng, n);
        const double ph = 2 * kPi * uniform(rng);
        modes->push_back({{k * u[0], k * u[1], k * u[2]}, ph, amplitude * std::pow(k, -alpha - 0.5), std::cos(ph)});
    }
    auto a = [modes](const Point& x) {
        double s = 1.0;
        for (const auto& m : *modes) s += m.coef * (std::cos(m.xi[0] * x[0] + m.xi[1] * x[1] + m.xi[2] * x[2] + m.phase) - m.cos_phase);
        return s;
    };
    // dense range check
    double lo = INFINITY, hi = -INFINITY;
    const int P = n == 2 ? 201 : 41;
    for (int i = 0; i < P; ++i)
        for (int j = 0; j < P; ++j)
            for (int k = 0; k < (n == 3 ? P : 1); ++k) {
                const Point x{-1 + 2.0 * i / (P - 1), -1 + 2.0 * j / (P - 1), n == 3 ? -1 + 2.0 * k / (P - 1) : 0.0};
                if (norm(x) > 1.0) continue;
                const double v = a(x);
                lo = std::min(lo, v), hi = std::max(hi, v);
            }
    if (lo < 0.5 || hi > 2.0)
        throw GenerationError("generate_holder: field range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                              "] leaves [0.5, 2] (alpha=" + std::to_string(alpha) +
                              ", amplitude=" + std::to_string(amplitude) + ", seed=" + std::to_string(seed) + ")");
    nlohmann::json cfg{{"kind", "holder"}, {"params", {{"alpha", alpha}, {"amplitude", amplitude}, {"K", K}}}, {"seed", seed}};
    if (n != 2) cfg["dimension"] = n;
    auto f = CoefficientField::scalar_field(n, a, cfg).with_holder({alpha, amplitude});
    return f.with_metadata("range", {lo, hi});
}

namespace fields {

namespace {
nlohmann::json cfg(const char* kind, nlohmann::json params, int n) {
    nlohmann::json j{{"kind", kind}, {"params", std::move(params)}};
    if (n != 2) j["dimension"] = n;
    return j;
}
}  // namespace

CoefficientField identity(int n) {
    return CoefficientField::scalar_field(n, [](const Point&) { return 1.0; }, cfg("identity", nlohmann::json::object(), n))
        .with_modulus(Modulus::linear())
        .with_metadata("modulus_constant", 0.0);
}

CoefficientField constant_scalar(double c, int n) {
    return CoefficientField::scalar_field(n, [c](const Point&) { return c; }, cfg("constant", {{"value", c}}, n))
        .with_modulus(Modulus::linear())
        .with_metadata("modulus_constant", 0.0);
}

CoefficientField constant_matrix(const Mat& A, int n) {
    std::vector<double> entries(A.begin(), A.end());
    return CoefficientField::matrix_field(n, [A](const Point&) { return A; }, cfg("constant", {{"matrix", entries}}, n))
        .with_modulus(Modulus::linear())
        .with_metadata("modulus_constant", 0.0);
}

CoefficientField diagonal(std::array<double, 3> d, int n) {
    Mat A{};
    for (int i = 0; i < n; ++i) A[4 * i] = d[i];
    std::vector<double> dv(d.begin(), d.begin() + n);
    return CoefficientField::matrix_field(n, [A](const Point&) { return A; }, cfg("diagonal", {{"d", dv}}, n))
        .with_modulus(Modulus::linear())
        .with_metadata("modulus_constant", 0.0);
}

CoefficientField affine_scalar(double c0, std::array<double, 3> g, int n) {
    std::vector<double> gv(g.begin(), g.begin() + n);
    const double L = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
    return CoefficientField::scalar_field(
               n, [c0, g](const Point& x) { return c0 + g[0] * x[0] + g[1] * x[1] + g[2] * x[2]; },
               cfg("affine", {{"c0", c0}, {"gradient", gv}}, n))
        .with_modulus(Modulus::linear())
        .with_metadata("modulus_constant", L);
}

CoefficientField radial_scalar(double c0, double c1, int n) {
    return CoefficientField::scalar_field(n, [c0, c1](const Point& x) { return c0 + c1 * norm(x); },
                                          cfg("radial", {{"c0", c0}, {"c1", c1}}, n))
        .with_modulus(Modulus::linear())
        .with_metadata("modulus_constant", std::abs(c1));
}

CoefficientField angular_scalar(double amp, int k, double phase) {
    return CoefficientField::scalar_field(
               2,
               [amp, k, phase](const Point& x) {
                   if (x[0] == 0.0 && x[1] == 0.0) return 1.0;
                   return 1.0 + amp * std::sin(k * std::atan2(x[1], x[0]) + phase);
               },
               cfg("angular", {{"amp", amp}, {"k", k}, {"phase", phase}}, 2))
        .as_zero_homogeneous();
}

CoefficientField power_abs(double c0, double amp, double alpha, int n) {
    return CoefficientField::scalar_field(
               n, [c0, amp, alpha](const Point& x) { return c0 + amp * std::pow(std::abs(x[0]), alpha); },
               cfg("power_abs", {{"c0", c0}, {"amp", amp}, {"alpha", alpha}}, n))
        .with_modulus(Modulus::power(alpha))
        .with_holder({alpha, std::abs(amp)})
        .with_metadata("modulus_constant", std::abs(amp));
}

CoefficientField modulus_aniso(double kappa, const Modulus& m, int n) {
    auto A = [kappa, m, n](const Point& x) {
        auto s = [&m](double t) { return m.omega(std::min(std::abs(t), 1.0)); };
        Mat out = scaled_identity(1.0, n);
        out[0] = 1 + kappa * s(x[0]);
        out[4] = 1 + 0.5 * kappa * s(x[1]);
        out[1] = out[3] = 0.25 * kappa * s(x[0] + x[1]);
        return out;
    };
    return CoefficientField::matrix_field(n, A, cfg("modulus_aniso", {{"kappa", kappa}, {"modulus", m.to_json()}}, n))
        .with_modulus(m)
        .with_metadata("modulus_constant", std::abs(kappa));
}

CoefficientField lipschitz_aniso(double M, double delta, int n) {
    auto A = [M, delta, n](const Point& x) {
        Mat out = scaled_identity(1.0, n);
        out[0] = 1 + delta + 0.5 * M * x[0];
        out[4] = 1 - delta + 0.25 * M * x[0];
        out[1] = out[3] = 0.25 * M * x[1];
        return out;
    };
    return CoefficientField::matrix_field(n, A, cfg("lipschitz_aniso", {{"M", M}, {"delta", delta}}, n))
        .with_modulus(Modulus::linear())
        .with_metadata("modulus_constant", 0.5 * M)
        .with_metadata("lipschitz_M", M)
        .with_metadata("delta", delta);
}

CoefficientField random_smooth(std::uint64_t seed, double amplitude, Arity arity, int n, int modes) {
    check_dimension(n);
    if (modes < 1) throw DomainError("random_smooth: modes must be positive");
    struct Wave {
        Point xi;
        double phase, coef;
    };
    const int entries = arity == Arity::Isotropic ? 1 : n * (n + 1) / 2;
    auto waves = std::make_shared<std::vector<std::vector<Wave>>>(entries);
    std::mt19937_64 rng(seed);
    for (auto& list : *waves)
        for (int m = 0; m < modes; ++m) {
            const Point u = random_direction(rng, n);
            const double k = 1.0 + 2.0 * uniform(rng);
            const double ph = 2 * kPi * uniform(rng);
            const double c = (2 * uniform(rng) - 1) / modes;
            list.push_back({{k * u[0], k * u[1], k * u[2]}, ph, c});
        }
    auto series = [waves](int e, const Point& x) {
        double s = 0.0;
        for (const auto& w : (*waves)[e]) s += w.coef * std::sin(w.xi[0] * x[0] + w.xi[1] * x[1] + w.xi[2] * x[2] + w.phase);
        return s;
    };
    nlohmann::json c = cfg("random_smooth", {{"amplitude", amplitude}, {"modes", modes}}, n);
    c["seed"] = seed;
    auto make = [&]() {
        if (arity == Arity::Isotropic)
            return CoefficientField::scalar_field(n, [series, amplitude](const Point& x) { return 1.0 + amplitude * series(0, x); }, c);
        return CoefficientField::matrix_field(
            n,
            [series, amplitude, n](const Point& x) {
                Mat out{};
                int e = 0;
                for (int i = 0; i < n; ++i)
                    for (int j = i; j < n; ++j, ++e) {
                        const double v = (i == j ? 1.0 : 0.0) + amplitude * series(e, x);
                        out[3 * i + j] = out[3 * j + i] = v;
                    }
                return out;
            },
            c);
    };
    const CoefficientField f = make();
    if (!(f.lambda() > 0.1))
        throw GenerationError("random_smooth: ellipticity constant " + std::to_string(f.lambda()) + " below 0.1 (seed=" +
                              std::to_string(seed) + ")");
    return f.with_modulus(Modulus::linear()).with_metadata("modulus_constant", 3.0 * amplitude);
}

CoefficientField perturbed(const CoefficientField& base, double eps, double r_in, double r_out) {
    if (!(r_in >= 0.0 && r_out > r_in)) throw DomainError("perturbed: need 0 <= r_in < r_out");
    const int n = base.dimension();
    nlohmann::json c{{"kind", "perturbed"}, {"params", {{"base", base.config()}, {"eps", eps}, {"r_in", r_in}, {"r_out", r_out}}}};
    if (base.isotropic()) {
        return CoefficientField::scalar_field(
            n, [base, eps, r_in, r_out](const Point& x) { return base.scalar(x) + eps * annulus_bump(norm(x), r_in, r_out); }, c);
    }
    return CoefficientField::matrix_field(
        n,
        [base, eps, r_in, r_out, n](const Point& x) {
            Mat A = base.matrix(x);
            const double b = eps * annulus_bump(norm(x), r_in, r_out);
            for (int i = 0; i < n; ++i) A[4 * i] += b * (i == 0 ? 1.0 : 0.5);
            return A;
        },
        c);
}

CoefficientField sampled(const io::BinaryGrid& grid) {
    if (grid.layout != io::GridLayout::Cartesian) throw UnsupportedError("sampled fields need a Cartesian grid");
    const int n = static_cast<int>(grid.shape.size());
    check_dimension(n);
    const int comps = static_cast<int>(grid.components);
    const bool iso = comps == 1;
    if (!iso && comps != n * (n + 1) / 2)
        throw ConfigError("sampled field: components must be 1 or n(n+1)/2");
    for (auto s : grid.shape)
        if (s < 2) throw ConfigError("sampled field: each axis needs at least 2 points");
    auto g = std::make_shared<io::BinaryGrid>(grid);
    // multilinear interpolation of component c, clamped to the bounding box
    auto interp = [g, n, comps](const Point& x, int c) {
        std::array<std::size_t, 3> i0{};
        std::array<double, 3> w{};
        for (int d = 0; d < n; ++d) {
            const double lo = g->bbox_lo[d], hi = g->bbox_hi[d];
            const std::size_t m = g->shape[d];
            double u = (std::clamp(x[d], lo, hi) - lo) / (hi - lo) * static_cast<double>(m - 1);
            std::size_t k = std::min(static_cast<std::size_t>(u), m - 2);
            i0[d] = k;
            w[d] = u - static_cast<double>(k);
        }
        double v = 0.0;
        for (int corner = 0; corner < (1 << n); ++corner) {
            std::size_t idx = 0;
            double wt = 1.0;
            for (int d = 0; d < n; ++d) {
                const int bit = (corner >> d) & 1;
                idx = idx * g->shape[d] + i0[d] + bit;
                wt *= bit ? w[d] : 1 - w[d];
            }
            v += wt * g->data[idx * comps + c];
        }
        return v;
    };
    nlohmann::json c{{"kind", "sampled"},
                     {"params", {{"shape", grid.shape}, {"checksum", fnv1a(io::serialize_binary_grid(grid))}}}};
    if (n != 2) c["dimension"] = n;
    if (iso) return CoefficientField::scalar_field(n, [interp](const Point& x) { return interp(x, 0); }, c);
    return CoefficientField::matrix_field(
        n,
        [interp, n](const Point& x) {
            Mat out{};
            int e = 0;
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j, ++e) out[3 * i + j] = out[3 * j + i] = interp(x, e);
            return out;
        },
        c);
}

}  // namespace fields

io::BinaryGrid export_sampled(const CoefficientField& f, std::size_t P) {
    if (P < 2) throw DomainError("export_sampled: need at least 2 points per axis");
    const int n = f.dimension();
    io::BinaryGrid g;
    g.layout = io::GridLayout::Cartesian;
    g.components = f.isotropic() ? 1 : static_cast<std::uint32_t>(n * (n + 1) / 2);
    g.shape.assign(n, P);
    g.bbox_lo.assign(n, -1.0);
    g.bbox_hi.assign(n, 1.0);
    const double R = f.valid_radius();
    std::array<std::size_t, 3> idx{};
    const std::size_t total = n == 2 ? P * P : P * P * P;
    for (std::size_t lin = 0; lin < total; ++lin) {
        std::size_t rem = lin;
        for (int d = n - 1; d >= 0; --d) idx[d] = rem % P, rem /= P;
        Point x{};
        for (int d = 0; d < n; ++d) x[d] = -1 + 2.0 * static_cast<double>(idx[d]) / static_cast<double>(P - 1);
        const double r = norm(x);
        if (r > R) {
            const double s = R / r;
            for (double& v : x) v *= s;
        }
        if (f.isotropic()) {
            g.data.push_back(f.scalar(x));
        } else {
            const Mat A = f.matrix(x);
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j) g.data.push_back(A[3 * i + j]);
        }
    }
    return g;
}

CoefficientField CoefficientField::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("field: expected an object");
    only_keys(j, {"arity", "kind", "params", "seed", "dimension", "normalize"}, "field");
    if (!j.contains("kind")) throw ConfigError("field: missing 'kind'");
    const std::string kind = j.at("kind").get<std::string>();
    const nlohmann::json p = j.value("params", nlohmann::json::object());
    const int n = j.value("dimension", 2);
    const std::uint64_t seed = j.value("seed", std::uint64_t{0});
    CoefficientField f;
    if (kind == "identity") {
        only_keys(p, {}, "field.params");
        f = fields::identity(n);
    } else if (kind == "constant") {
        only_keys(p, {"value", "matrix"}, "field.params");
        if (p.contains("matrix")) {
            const auto v = p.at("matrix").get<std::vector<double>>();
            if (v.size() != 9) throw ConfigError("field.params.matrix: expected 9 row-major entries");
            Mat A{};
            std::copy(v.begin(), v.end(), A.begin());
            f = fields::constant_matrix(A, n);
        } else {
            f = fields::constant_scalar(config_number(p, "value"), n);
        }
    } else if (kind == "diagonal") {
        only_keys(p, {"d"}, "field.params");
        const auto v = p.at("d").get<std::vector<double>>();
        if (static_cast<int>(v.size()) != n) throw ConfigError("field.params.d: expected n entries");
        std::array<double, 3> d{1, 1, 1};
        std::copy(v.begin(), v.end(), d.begin());
        f = fields::diagonal(d, n);
    } else if (kind == "affine") {
        only_keys(p, {"c0", "gradient"}, "field.params");
        const auto v = p.at("gradient").get<std::vector<double>>();
        std::array<double, 3> g{};
        std::copy(v.begin(), v.begin() + std::min<std::size_t>(v.size(), 3), g.begin());
        f = fields::affine_scalar(config_number(p, "c0"), g, n);
    } else if (kind == "radial") {
        only_keys(p, {"c0", "c1"}, "field.params");
        f = fields::radial_scalar(config_number(p, "c0"), config_number(p, "c1"), n);
    } else if (kind == "angular") {
        only_keys(p, {"amp", "k", "phase"}, "field.params");
        if (n != 2) throw ConfigError("angular fields are planar");
        f = fields::angular_scalar(config_number(p, "amp"), p.value("k", 1), p.value("phase", 0.0));
    } else if (kind == "power_abs") {
        only_keys(p, {"c0", "amp", "alpha"}, "field.params");
        f = fields::power_abs(config_number(p, "c0"), config_number(p, "amp"), config_number(p, "alpha"), n);
    } else if (kind == "modulus_aniso") {
        only_keys(p, {"kappa", "modulus"}, "field.params");
        if (!p.contains("modulus")) throw ConfigError("field.params: missing 'modulus'");
        f = fields::modulus_aniso(config_number(p, "kappa"), Modulus::from_json(p.at("modulus")), n);
    } else if (kind == "lipschitz_aniso") {
        only_keys(p, {"M", "delta"}, "field.params");
        f = fields::lipschitz_aniso(config_number(p, "M"), config_number(p, "delta"), n);
    } else if (kind == "random_smooth") {
        only_keys(p, {"amplitude", "modes"}, "field.params");
        const std::string ar = j.value("arity", "isotropic");
        f = fields::random_smooth(seed, config_number(p, "amplitude"),
                                  ar == "anisotropic" ? Arity::Anisotropic : Arity::Isotropic, n, p.value("modes", 4));
    } else if (kind == "holder") {
        only_keys(p, {"alpha", "amplitude", "K"}, "field.params");
        f = generate_holder(config_number(p, "alpha"), config_number(p, "amplitude"), seed, n, p.value("K", 256));
    } else if (kind == "perturbed") {
        only_keys(p, {"base", "eps", "r_in", "r_out"}, "field.params");
        if (!p.contains("base")) throw ConfigError("field.params: missing 'base'");
        f = fields::perturbed(from_json(p.at("base")), config_number(p, "eps"), config_number(p, "r_in"),
                              config_number(p, "r_out"));
    } else if (kind == "mollified") {
        only_keys(p, {"base", "eps", "samples_per_axis"}, "field.params");
        if (!p.contains("base")) throw ConfigError("field.params: missing 'base'");
        f = mollify(from_json(p.at("base")), config_number(p, "eps"), p.value("samples_per_axis", 64));
    } else if (kind == "homogeneous_projection") {
        only_keys(p, {"base", "r"}, "field.params");
        if (!p.contains("base")) throw ConfigError("field.params: missing 'base'");
        f = homogeneous_projection(from_json(p.at("base")), config_number(p, "r"));
    } else if (kind == "sampled") {
        only_keys(p, {"path", "shape", "checksum"}, "field.params");
        if (!p.contains("path")) throw ConfigError("field.params: sampled fields need 'path'");
        f = fields::sampled(io::read_binary_grid(p.at("path").get<std::string>()));
    } else {
        throw ConfigError("field: unknown kind '" + kind + "'");
    }
    if (j.contains("arity") && j.at("arity").get<std::string>() != to_string(f.arity()))
        throw ConfigError("field: declared arity '" + j.at("arity").get<std::string>() + "' does not match kind '" + kind + "'");
    if (j.value("normalize", false)) f = normalize_at_origin(f);
    return f;
}

}  // namespace freqlab
