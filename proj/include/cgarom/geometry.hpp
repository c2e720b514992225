#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "cgarom/rng.hpp"
#include "cgarom/tensor.hpp"

namespace cgarom {

// Parametric domain families. Every family fixes a reference domain and a
// diffeomorphism Z(., xi) from the parametric domain Omega(xi) onto it:
//   identity          unit square, Z = id (no geometric parameters)
//   interval_scale    Omega(xi) = [0, xi] onto [0, 1], Z = x / xi
//   stenosis_channel  channel [0,L]x[0,H] with a cosine bump on the lower
//                     wall, vertical shear onto the clean rectangle
//   hole_radius       unit square minus a center hole of radius xi, radial
//                     blend onto the reference hole radius
enum class Family { identity, interval_scale, stenosis_channel, hole_radius };

struct DiffeoSpec {
    Family family = Family::identity;

    // family shape constants
    double channel_length = 5.0;   // stenosis L
    double channel_height = 1.0;   // stenosis H
    double hole_ref_radius = 0.3;  // hole reference radius

    std::size_t dim() const;        // spatial dimension d
    std::size_t param_dim() const;  // geometric parameter count g

    // admissible box for xi, one (lo, hi) pair per component
    std::vector<std::pair<double, double>> param_box() const;

    static DiffeoSpec make(Family f);
};

// Scattered quadrature sample of a domain: points (N x d), weights (N x 1)
// summing to the domain volume, and optionally the Jacobian determinant of
// the forward map at each point (N x 1).
struct PointCloud {
    Tensor points;
    Tensor weights;
    Tensor zeta;

    std::size_t size() const { return points.rows(); }
    std::size_t dim() const { return points.cols(); }
    bool has_zeta() const { return zeta.size() > 0; }
};

enum class CloudMode { tensor, quasirandom };

// Draws xi uniformly inside the family's parameter box.
std::vector<double> sample_params(const DiffeoSpec& spec, Rng& rng);

// Throws DomainError if xi has the wrong size or leaves the parameter box.
void validate_params(const DiffeoSpec& spec, const std::vector<double>& xi);

bool inside_domain(const DiffeoSpec& spec, const double* x, const std::vector<double>& xi,
                   double tol = 1e-9);

// Z: Omega(xi) -> reference domain. Throws DomainError outside Omega(xi).
void map_forward(const DiffeoSpec& spec, const double* x, const std::vector<double>& xi,
                 double* out);

// Z^-1: reference domain -> Omega(xi). Throws DomainError outside the
// reference domain.
void map_inverse(const DiffeoSpec& spec, const double* xref, const std::vector<double>& xi,
                 double* out);

// zeta(x; xi) = |det grad_x Z|, evaluated at x in Omega(xi). Always positive.
double jacobian_det(const DiffeoSpec& spec, const double* x, const std::vector<double>& xi);

// Closed-form volume of Omega(xi).
double domain_volume(const DiffeoSpec& spec, const std::vector<double>& xi);

// Quadrature cloud over Omega(xi). Tensor mode builds a deterministic grid
// with exact cell-volume weights (weights sum to the domain volume up to
// rounding); quasirandom mode places seeded low-discrepancy points with
// uniform weights vol/N. zeta is filled in both modes.
PointCloud sample_cloud(const DiffeoSpec& spec, const std::vector<double>& xi, std::size_t n,
                        CloudMode mode, std::uint64_t seed = 0);

// Tensor-grid quadrature cloud over the reference domain (weights sum to its
// volume; zeta empty). When align_xi is given, grid lines are placed at the
// images of the map's non-smooth sets for that xi (stenosis bump edges), which
// keeps midpoint quadrature at full order for fields pulled back from
// Omega(xi). The reference domain itself does not depend on xi.
PointCloud reference_cloud(const DiffeoSpec& spec, std::size_t n,
                           const std::vector<double>* align_xi = nullptr);

// Pushes a reference cloud through Z^-1(. ; xi): points are mapped, each
// weight becomes w_ref / zeta so the physical weights remain cell volumes,
// and zeta is stored. Point i stays in correspondence with reference point i.
PointCloud push_reference_cloud(const DiffeoSpec& spec, const PointCloud& ref,
                                const std::vector<double>& xi);

// Sum_i w_i [zeta_i] f_i g_i over the cloud; f and g are N x 1.
double weighted_inner_product(const Tensor& f, const Tensor& g, const PointCloud& cloud,
                              bool use_zeta);

// Values of f(Z^-1(. ; xi)) on a reference cloud, as N x 1.
Tensor morph_pullback(const DiffeoSpec& spec, const std::function<double(const double*)>& f,
                      const std::vector<double>& xi, const PointCloud& ref);

// Halton radical inverse, used by the quasirandom cloud mode.
double radical_inverse(std::uint64_t base, std::uint64_t index);

} // namespace cgarom
