#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Sparse>
#include <nlohmann/json.hpp>

#include "freqlab/coefficients.hpp"
#include "freqlab/io.hpp"

namespace freqlab {

/// Log-polar grid on the disk B_R: rings r_i = R exp(-span + i ds), i = 0..n_r, n_theta equispaced
/// angles per ring, plus one center node. Ring n_r carries the Dirichlet data; the disk inside
/// ring 0 is covered by a fan of triangles around the center node.
///
/// Node numbering: center = 0, node (i, j) = 1 + i n_theta + j.
class PolarGrid {
public:
    static PolarGrid make(int n_r, int n_theta, double radius = 1.0, double span = 2.0 * 3.14159265358979323846);
    /// Radial spacing chosen so that each annulus r (1 - 1/N) < |x| < r holds >= 8 layers for N <= N_max.
    static PolarGrid for_frequency(double N_max, int n_theta, double radius = 1.0, double span = 2.0 * 3.14159265358979323846);

    int n_r() const { return n_r_; }
    int n_theta() const { return n_theta_; }
    double radius() const { return R_; }
    double span() const { return span_; }
    double ds() const { return span_ / n_r_; }
    double dtheta() const { return dtheta_; }

    double ring_radius(int i) const;
    double ring_s(int i) const { return std::log(R_) - span_ + i * ds(); }
    double theta(int j) const { return j * dtheta_; }
    const std::vector<double>& cos_table() const { return cos_; }
    const std::vector<double>& sin_table() const { return sin_; }

    std::size_t node(int i, int j) const { return 1 + static_cast<std::size_t>(i) * n_theta_ + j; }
    std::size_t node_count() const { return 1 + static_cast<std::size_t>(n_r_ + 1) * n_theta_; }
    /// Nodes that are not on the Dirichlet ring.
    std::size_t interior_count() const { return 1 + static_cast<std::size_t>(n_r_) * n_theta_; }
    Point position(int i, int j) const;

    /// Ring index whose radius matches r to relative 1e-9, if any.
    std::optional<int> ring_index_of(double r) const;
    /// Fractional ring coordinate (s(r) - s_0) / ds.
    double ring_coordinate(double r) const;

    /// Sub-grid with rings 0..i (same core and spacing); nodes keep their indices.
    PolarGrid truncated(int i) const;
    /// (2 n_r, 2 n_theta) on the same disk and span: ring i maps to ring 2i, angle j to 2j.
    PolarGrid refined() const;

    nlohmann::json to_json() const;
    static PolarGrid from_json(const nlohmann::json& j);

    bool operator==(const PolarGrid& o) const;

private:
    int n_r_ = 0;
    int n_theta_ = 0;
    double R_ = 1.0;
    double span_ = 0.0;
    double dtheta_ = 0.0;
    std::vector<double> cos_, sin_;
};

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

namespace stencil {

/// Finite-difference weights for the `order`-th derivative at x0 on nodes x (Fornberg).
std::vector<double> weights(double x0, const std::vector<double>& x, int order);
/// First derivative of q at index i of a uniform sequence with spacing h, 7-point stencil
/// (centered where possible, shifted toward the interior near the ends).
double derivative(const std::vector<double>& q, std::size_t i, double h);

}  // namespace stencil

/// Assembled energy form a(u, u) = int <A grad u, grad u> (+ int V u^2) on a PolarGrid.
///
/// Annular cells between rings i and i+1 use the conformal coefficient
/// A~ = R(theta)^T A R(theta) in (s, theta); isotropic fields use harmonic means of node
/// values on edges, anisotropic fields sample A~ at cell centers. The core uses P1 triangles.
class DiscreteOperator {
public:
    DiscreteOperator(const CoefficientField& f, const PolarGrid& grid,
                     std::function<double(const Point&)> potential = nullptr);

    const PolarGrid& grid() const { return grid_; }
    const SparseMatrix& matrix() const { return K_; }
    bool has_potential() const { return has_potential_; }

    /// Energy of u per layer: layer 0 is the core disk, layer l >= 1 the annulus between rings l-1 and l.
    std::vector<double> layer_energies(const std::vector<double>& u) const;
    /// Same with A replaced by the identity (the plain Dirichlet integral).
    std::vector<double> layer_energies_identity(const std::vector<double>& u) const;
    /// Per ring i: sum over ring-i nodes of u times (K_in u), K_in assembled from the elements inside ring i.
    std::vector<double> inner_flux(const std::vector<double>& u) const;

    /// A~_ss = mu and A~_s theta at ring nodes, index (i * n_theta + j), rings 0..n_r.
    const std::vector<double>& node_mu() const { return node_mu_; }
    const std::vector<double>& node_cross() const { return node_cross_; }

    /// Smallest eigenvalue over all coefficient samples used in the assembly.
    double discrete_lambda() const { return discrete_lambda_; }
    /// Lumped node areas (dx measure), used by the reaction term.
    const std::vector<double>& node_areas() const { return areas_; }

private:
    struct Cell {
        double ks0, ks1, kt0, kt1, kx;
    };
    std::vector<double> energies(const std::vector<double>& u, bool identity) const;

    PolarGrid grid_;
    SparseMatrix K_;
    std::vector<Cell> cells_;             // (n_r) x (n_theta), cell (i, j) spans rings i..i+1, angles j..j+1
    std::vector<std::array<double, 6>> core_;  // per fan triangle: k00 k11 k22 k01 k02 k12
    std::vector<std::array<double, 6>> core_identity_;
    std::vector<double> node_mu_, node_cross_;
    std::vector<double> areas_;
    std::vector<double> potential_;
    bool has_potential_ = false;
    double discrete_lambda_ = 1.0;
};

struct SolveOptions {
    double tolerance = 1e-10;     // relative residual
    int max_iterations = 0;       // 0: 50 sqrt(unknowns)
    std::function<double(const Point&)> potential;  // reaction term V u
    bool harmonic_initial_guess = true;
};

/// Grid-sampled solution with the operator it was solved with.
class DiscreteSolution {
public:
    DiscreteSolution(std::shared_ptr<const DiscreteOperator> op, CoefficientField field, std::vector<double> values,
                     double residual, int iterations);

    const PolarGrid& grid() const { return op_->grid(); }
    const DiscreteOperator& op() const { return *op_; }
    std::shared_ptr<const DiscreteOperator> op_ptr() const { return op_; }
    const CoefficientField& field() const { return field_; }
    const std::vector<double>& values() const { return values_; }
    double value(int i, int j) const { return values_[grid().node(i, j)]; }
    double center_value() const { return values_[0]; }
    std::vector<double> boundary_data() const;
    double residual_norm() const { return residual_; }
    int iterations() const { return iterations_; }

    /// Interpolated value: bilinear in (s, theta) between rings, linear on core triangles.
    double value_at(const Point& x) const;
    /// Cartesian gradient at a ring node by centered differences in (s, theta).
    Point gradient_at(int i, int j) const;

    /// Cumulative energies: entry i is the energy inside ring i (core included).
    std::vector<double> cumulative_energy() const;
    std::vector<double> cumulative_energy_identity() const;
    /// int_{B_{r_i}} u^2 dx for every ring i (trapezoid in s, exact core for P1).
    std::vector<double> cumulative_mass() const;
    /// Boundary flux form int_{dB_{r_i}} u <A grad u, nu> for every ring, with 7-point s-differences
    /// and spectral-order periodic theta-differences.
    std::vector<double> flux_energy() const;
    /// Discrete flux of the assembled operator through ring i from the inside
    /// (sum over ring nodes of u times the inner-cell part of K u). Equals the cumulative energy
    /// up to the solver residual.
    std::vector<double> discrete_flux() const;
    double ring_mean(int i) const;
    double ring_mean_square(int i) const;

    DiscreteSolution scaled(double c) const;
    /// Solution values restricted to a truncated grid (same node indices).
    std::vector<double> restricted_values(int ring) const;

    io::BinaryGrid to_binary_grid() const;
    /// Ring summaries: r, mean u, mean u^2, D(r), H(r) with H mu-weighted.
    std::string ring_csv() const;

private:
    std::shared_ptr<const DiscreteOperator> op_;
    CoefficientField field_;
    std::vector<double> values_;
    double residual_;
    int iterations_;
};

/// Solves -div(A grad u) (+ V u) = 0 in B_R with u = g on the outer ring.
DiscreteSolution solve_dirichlet(const CoefficientField& f, const PolarGrid& grid, const std::vector<double>& g,
                                 const SolveOptions& options = {});
/// Reuses an assembled operator (same field and grid) for another right-hand side.
DiscreteSolution solve_dirichlet(std::shared_ptr<const DiscreteOperator> op, const CoefficientField& f,
                                 const std::vector<double>& g, const SolveOptions& options = {});

namespace boundary {

/// R^k cos(k theta + phase) on the outer ring, i.e. the trace of Re(e^{i phase} z^k).
std::vector<double> harmonic(const PolarGrid& grid, int k, double phase = 0.0);
/// sum_k c_k R^k cos(k theta + phase_k)
std::vector<double> harmonic_mix(const PolarGrid& grid, const std::vector<std::pair<int, double>>& terms);
/// Random trigonometric data of degree <= max_degree, coefficients ~ U(-1, 1) / (1 + k).
std::vector<double> random_trig(const PolarGrid& grid, int max_degree, std::uint64_t seed);
std::vector<double> from_function(const PolarGrid& grid, const std::function<double(const Point&)>& g);
/// Values of a solution on ring `ring` of its grid, as Dirichlet data for a truncated grid.
std::vector<double> from_solution(const DiscreteSolution& u, int ring);

}  // namespace boundary

}  // namespace freqlab
