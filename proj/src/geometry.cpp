#include "cgarom/geometry.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cgarom/errors.hpp"

namespace cgarom {

namespace {

constexpr double kPi = std::numbers::pi;

// ---- stenosis wall -------------------------------------------------------

// Lower wall height w(x; xi) = xi1 * cos(pi/(2 xi2) (x - xi3)) inside the
// bump interval (xi3 - xi2, xi3 + xi2), zero elsewhere.
double wall(double x, const std::vector<double>& xi) {
    double dx = x - xi[2];
    if (std::abs(dx) >= xi[1]) return 0.0;
    return xi[0] * std::cos(kPi / (2.0 * xi[1]) * dx);
}

// Antiderivative of the wall over [0, x], closed form.
double wall_integral(double x, const std::vector<double>& xi) {
    double a = xi[2] - xi[1], b = xi[2] + xi[1];
    double scale = xi[0] * 2.0 * xi[1] / kPi;
    if (x <= a) return 0.0;
    if (x >= b) return 2.0 * scale;
    return scale * (std::sin(kPi / (2.0 * xi[1]) * (x - xi[2])) + 1.0);
}

// ---- hole geometry ---------------------------------------------------------

// Distance from the square center to the boundary along direction theta.
double square_ray(double theta) {
    double c = std::abs(std::cos(theta));
    double s = std::abs(std::sin(theta));
    return 0.5 / std::max(c, s);
}

// Antiderivative of R(theta)^2 from 0 to theta; piecewise 0.25 tan within
// each octant, 0.5 per quarter turn.
double square_ray_sq_integral(double theta) {
    double k = std::round(theta / (kPi / 2.0));
    double s = theta - k * (kPi / 2.0);
    return 0.5 * k + 0.25 * std::tan(s);
}

// ---- grid factorization -----------------------------------------------------

// Divisor pair (nx, ny), nx * ny = n, with nx / ny as close as possible to
// `aspect`. `x_multiple` restricts nx to a multiple (relaxed if impossible).
std::pair<std::size_t, std::size_t> split_grid(std::size_t n, double aspect,
                                               std::size_t x_multiple = 1,
                                               std::size_t min_x = 1) {
    for (std::size_t mult = x_multiple; mult >= 1; mult /= 2) {
        double best_score = 0.0;
        std::size_t best_nx = 0;
        for (std::size_t ny = 1; ny <= n; ++ny) {
            if (n % ny != 0) continue;
            std::size_t nx = n / ny;
            if (nx % mult != 0 || nx < min_x) continue;
            double score = std::abs(std::log(double(nx) / double(ny) / aspect));
            if (best_nx == 0 || score < best_score) {
                best_score = score;
                best_nx = nx;
            }
        }
        if (best_nx != 0) return {best_nx, n / best_nx};
        if (mult == 1) break;
    }
    throw DomainError("no feasible grid factorization for n = " + std::to_string(n));
}

void require_dim(const DiffeoSpec& spec, const Tensor& pts) {
    if (pts.cols() != spec.dim())
        throw DimensionError("points have dimension " + std::to_string(pts.cols()) +
                             ", family needs " + std::to_string(spec.dim()));
}

} // namespace

// ---- spec ------------------------------------------------------------------

std::size_t DiffeoSpec::dim() const {
    return family == Family::interval_scale ? 1 : 2;
}

std::size_t DiffeoSpec::param_dim() const {
    switch (family) {
        case Family::identity: return 0;
        case Family::interval_scale: return 1;
        case Family::stenosis_channel: return 3;
        case Family::hole_radius: return 1;
    }
    return 0;
}

std::vector<std::pair<double, double>> DiffeoSpec::param_box() const {
    switch (family) {
        case Family::identity: return {};
        case Family::interval_scale: return {{0.5, 2.0}};
        case Family::stenosis_channel: return {{0.25, 0.4}, {0.5, 0.75}, {2.0, 3.0}};
        case Family::hole_radius: return {{0.2, 0.4}};
    }
    return {};
}

DiffeoSpec DiffeoSpec::make(Family f) {
    DiffeoSpec s;
    s.family = f;
    return s;
}

std::vector<double> sample_params(const DiffeoSpec& spec, Rng& rng) {
    std::vector<double> xi;
    for (auto [lo, hi] : spec.param_box()) xi.push_back(rng.uniform(lo, hi));
    return xi;
}

void validate_params(const DiffeoSpec& spec, const std::vector<double>& xi) {
    auto box = spec.param_box();
    if (xi.size() != box.size())
        throw DomainError("expected " + std::to_string(box.size()) + " geometric parameters, got " +
                          std::to_string(xi.size()));
    for (std::size_t i = 0; i < box.size(); ++i)
        if (xi[i] < box[i].first - 1e-12 || xi[i] > box[i].second + 1e-12)
            throw DomainError("geometric parameter " + std::to_string(i) + " = " +
                              std::to_string(xi[i]) + " outside [" + std::to_string(box[i].first) +
                              ", " + std::to_string(box[i].second) + "]");
}

// ---- membership -------------------------------------------------------------

bool inside_domain(const DiffeoSpec& spec, const double* x, const std::vector<double>& xi,
                   double tol) {
    switch (spec.family) {
        case Family::identity:
            return x[0] >= -tol && x[0] <= 1.0 + tol && x[1] >= -tol && x[1] <= 1.0 + tol;
        case Family::interval_scale:
            return x[0] >= -tol && x[0] <= xi[0] + tol;
        case Family::stenosis_channel: {
            if (x[0] < -tol || x[0] > spec.channel_length + tol) return false;
            return x[1] >= wall(x[0], xi) - tol && x[1] <= spec.channel_height + tol;
        }
        case Family::hole_radius: {
            if (x[0] < -tol || x[0] > 1.0 + tol || x[1] < -tol || x[1] > 1.0 + tol) return false;
            double rho = std::hypot(x[0] - 0.5, x[1] - 0.5);
            return rho >= xi[0] - tol;
        }
    }
    return false;
}

namespace {

bool inside_reference(const DiffeoSpec& spec, const double* x, double tol) {
    switch (spec.family) {
        case Family::identity:
            return x[0] >= -tol && x[0] <= 1.0 + tol && x[1] >= -tol && x[1] <= 1.0 + tol;
        case Family::interval_scale:
            return x[0] >= -tol && x[0] <= 1.0 + tol;
        case Family::stenosis_channel:
            return x[0] >= -tol && x[0] <= spec.channel_length + tol && x[1] >= -tol &&
                   x[1] <= 1.0 + tol;
        case Family::hole_radius: {
            if (x[0] < -tol || x[0] > 1.0 + tol || x[1] < -tol || x[1] > 1.0 + tol) return false;
            return std::hypot(x[0] - 0.5, x[1] - 0.5) >= spec.hole_ref_radius - tol;
        }
    }
    return false;
}

} // namespace

// ---- maps -------------------------------------------------------------------

void map_forward(const DiffeoSpec& spec, const double* x, const std::vector<double>& xi,
                 double* out) {
    validate_params(spec, xi);
    if (!inside_domain(spec, x, xi))
        throw DomainError("map_forward: point outside the parametric domain");
    switch (spec.family) {
        case Family::identity:
            out[0] = x[0];
            out[1] = x[1];
            return;
        case Family::interval_scale:
            out[0] = x[0] / xi[0];
            return;
        case Family::stenosis_channel: {
            double w = wall(x[0], xi);
            out[0] = x[0];
            out[1] = (x[1] - w) / (spec.channel_height - w);
            return;
        }
        case Family::hole_radius: {
            double dx = x[0] - 0.5, dy = x[1] - 0.5;
            double rho = std::hypot(dx, dy);
            double theta = std::atan2(dy, dx);
            double R = square_ray(theta);
            double r = xi[0], rt = spec.hole_ref_radius;
            double rho_ref = rt + (rho - r) * (R - rt) / (R - r);
            out[0] = 0.5 + rho_ref * std::cos(theta);
            out[1] = 0.5 + rho_ref * std::sin(theta);
            return;
        }
    }
}

void map_inverse(const DiffeoSpec& spec, const double* xref, const std::vector<double>& xi,
                 double* out) {
    validate_params(spec, xi);
    if (!inside_reference(spec, xref, 1e-9))
        throw DomainError("map_inverse: point outside the reference domain");
    switch (spec.family) {
        case Family::identity:
            out[0] = xref[0];
            out[1] = xref[1];
            return;
        case Family::interval_scale:
            out[0] = xref[0] * xi[0];
            return;
        case Family::stenosis_channel: {
            double w = wall(xref[0], xi);
            out[0] = xref[0];
            out[1] = w + (spec.channel_height - w) * xref[1];
            return;
        }
        case Family::hole_radius: {
            double dx = xref[0] - 0.5, dy = xref[1] - 0.5;
            double rho_ref = std::hypot(dx, dy);
            double theta = std::atan2(dy, dx);
            double R = square_ray(theta);
            double r = xi[0], rt = spec.hole_ref_radius;
            double rho = r + (rho_ref - rt) * (R - r) / (R - rt);
            out[0] = 0.5 + rho * std::cos(theta);
            out[1] = 0.5 + rho * std::sin(theta);
            return;
        }
    }
}

double jacobian_det(const DiffeoSpec& spec, const double* x, const std::vector<double>& xi) {
    validate_params(spec, xi);
    switch (spec.family) {
        case Family::identity:
            return 1.0;
        case Family::interval_scale:
            return 1.0 / xi[0];
        case Family::stenosis_channel:
            // triangular Jacobian: det = d(y_ref)/dy, H = 1
            return spec.channel_height / (spec.channel_height - wall(x[0], xi));
        case Family::hole_radius: {
            // polar factorization: det = (rho_ref / rho) * d(rho_ref)/d(rho)
            double dx = x[0] - 0.5, dy = x[1] - 0.5;
            double rho = std::hypot(dx, dy);
            double theta = std::atan2(dy, dx);
            double R = square_ray(theta);
            double r = xi[0], rt = spec.hole_ref_radius;
            double slope = (R - rt) / (R - r);
            double rho_ref = rt + (rho - r) * slope;
            return (rho_ref / rho) * slope;
        }
    }
    return 1.0;
}

double domain_volume(const DiffeoSpec& spec, const std::vector<double>& xi) {
    validate_params(spec, xi);
    switch (spec.family) {
        case Family::identity:
            return 1.0;
        case Family::interval_scale:
            return xi[0];
        case Family::stenosis_channel:
            return spec.channel_length * spec.channel_height - 4.0 * xi[0] * xi[1] / kPi;
        case Family::hole_radius:
            return 1.0 - kPi * xi[0] * xi[0];
    }
    return 0.0;
}

// ---- cloud construction -------------------------------------------------------

namespace {

PointCloud square_tensor_cloud(std::size_t n) {
    auto [nx, ny] = split_grid(n, 1.0);
    PointCloud cloud;
    cloud.points = Tensor(n, 2);
    cloud.weights = Tensor::full(n, 1, 1.0 / double(n));
    std::size_t k = 0;
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j, ++k) {
            cloud.points(k, 0) = (double(i) + 0.5) / double(nx);
            cloud.points(k, 1) = (double(j) + 0.5) / double(ny);
        }
    return cloud;
}

PointCloud interval_tensor_cloud(std::size_t n, double length) {
    PointCloud cloud;
    cloud.points = Tensor(n, 1);
    cloud.weights = Tensor::full(n, 1, length / double(n));
    for (std::size_t i = 0; i < n; ++i) cloud.points(i, 0) = (double(i) + 0.5) * length / double(n);
    return cloud;
}

// Channel grid with a cosine bump wall of parameters `xi` (pass xi1 = 0 for
// the clean reference rectangle). Column breaks are aligned to the bump edges
// given by `align`, which keeps every column integrand smooth. Each column
// carries its exact strip volume, split evenly over its vertical cells.
PointCloud channel_tensor_cloud(const DiffeoSpec& spec, std::size_t n,
                                const std::vector<double>& xi, const std::vector<double>* align) {
    double L = spec.channel_length, H = spec.channel_height;
    auto [nx, ny] = split_grid(n, L / H, 1, 3);

    // x pieces: [0, a], [a, b], [b, L] with counts proportional to length
    std::vector<double> edges{0.0, L};
    if (align && (*align)[0] > 0.0) {
        double a = (*align)[2] - (*align)[1], b = (*align)[2] + (*align)[1];
        if (a > 0.0 && b < L) edges = {0.0, a, b, L};
    }
    std::vector<std::size_t> counts(edges.size() - 1, 0);
    std::size_t assigned = 0;
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        if (p + 2 == edges.size()) {
            counts[p] = nx - assigned;
        } else {
            counts[p] = std::max<std::size_t>(
                1, std::size_t(std::llround(double(nx) * (edges[p + 1] - edges[p]) / L)));
            // keep room for at least one column per remaining piece
            std::size_t remaining_pieces = edges.size() - 2 - p;
            if (counts[p] + assigned + remaining_pieces > nx)
                counts[p] = nx - assigned - remaining_pieces;
        }
        assigned += counts[p];
    }

    std::vector<double> xs;
    std::vector<double> col_vol;
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        double lo = edges[p], hi = edges[p + 1];
        double h = (hi - lo) / double(counts[p]);
        for (std::size_t i = 0; i < counts[p]; ++i) {
            double x0 = lo + double(i) * h, x1 = x0 + h;
            xs.push_back(0.5 * (x0 + x1));
            // exact area of the strip between the wall and the top
            double vol = h * H - (wall_integral(x1, xi) - wall_integral(x0, xi));
            col_vol.push_back(vol);
        }
    }

    PointCloud cloud;
    cloud.points = Tensor(n, 2);
    cloud.weights = Tensor(n, 1);
    std::size_t k = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double w = wall(xs[i], xi);
        double cell_w = col_vol[i] / double(ny);
        double hy = (H - w) / double(ny);
        for (std::size_t j = 0; j < ny; ++j, ++k) {
            cloud.points(k, 0) = xs[i];
            cloud.points(k, 1) = w + (double(j) + 0.5) * hy;
            cloud.weights(k, 0) = cell_w;
        }
    }
    return cloud;
}

// Polar ring grid between the hole radius `r` and the square boundary.
// Sectors are octant-aligned (ntheta multiple of 8 when feasible); radial
// cells carry area-proportional weights scaled so each sector sums to its
// exact area, hence the total equals the domain volume up to rounding.
PointCloud ring_tensor_cloud(std::size_t n, double r) {
    double mean_R = 2.0 / kPi * std::log(std::sqrt(2.0) + 1.0);
    // rough ring aspect: circumference over thickness
    double aspect = 2.0 * kPi * 0.5 * (r + mean_R) / std::max(0.05, mean_R - r);
    auto [ntheta, nrho] = split_grid(n, aspect, 8);
    double dtheta = 2.0 * kPi / double(ntheta);

    PointCloud cloud;
    cloud.points = Tensor(n, 2);
    cloud.weights = Tensor(n, 1);
    std::size_t k = 0;
    for (std::size_t s = 0; s < ntheta; ++s) {
        double t0 = double(s) * dtheta, t1 = t0 + dtheta;
        double tc = 0.5 * (t0 + t1);
        double R = square_ray(tc);
        double exact = 0.5 * (square_ray_sq_integral(t1) - square_ray_sq_integral(t0) -
                              r * r * dtheta);
        double drho = (R - r) / double(nrho);
        // midpoint weights dtheta * rho_j * drho, rescaled to the exact sector area
        double mid_total = dtheta * drho * 0.5 * double(nrho) * (R + r);
        double fix = exact / mid_total;
        for (std::size_t j = 0; j < nrho; ++j, ++k) {
            double rho = r + (double(j) + 0.5) * drho;
            cloud.points(k, 0) = 0.5 + rho * std::cos(tc);
            cloud.points(k, 1) = 0.5 + rho * std::sin(tc);
            cloud.weights(k, 0) = dtheta * rho * drho * fix;
        }
    }
    return cloud;
}

void fill_zeta(const DiffeoSpec& spec, const std::vector<double>& xi, PointCloud& cloud) {
    cloud.zeta = Tensor(cloud.size(), 1);
    for (std::size_t i = 0; i < cloud.size(); ++i)
        cloud.zeta(i, 0) = jacobian_det(spec, &cloud.points(i, 0), xi);
}

PointCloud quasirandom_cloud(const DiffeoSpec& spec, const std::vector<double>& xi, std::size_t n,
                             std::uint64_t seed) {
    // bounding box per family
    double lo[2] = {0.0, 0.0}, hi[2] = {1.0, 1.0};
    if (spec.family == Family::interval_scale) hi[0] = xi[0];
    if (spec.family == Family::stenosis_channel) {
        hi[0] = spec.channel_length;
        hi[1] = spec.channel_height;
    }
    std::size_t d = spec.dim();
    std::uint64_t index = 1 + (seed % 0x7FFFFFFFULL);

    PointCloud cloud;
    cloud.points = Tensor(n, d);
    cloud.weights = Tensor::full(n, 1, domain_volume(spec, xi) / double(n));
    std::size_t placed = 0;
    std::uint64_t guard = 0;
    while (placed < n) {
        double x[2];
        x[0] = lo[0] + (hi[0] - lo[0]) * radical_inverse(2, index);
        if (d > 1) x[1] = lo[1] + (hi[1] - lo[1]) * radical_inverse(3, index);
        ++index;
        if (++guard > 1000ULL * n + 100000ULL)
            throw NumericalError("quasirandom cloud: rejection did not terminate");
        if (!inside_domain(spec, x, xi, 0.0)) continue;
        for (std::size_t j = 0; j < d; ++j) cloud.points(placed, j) = x[j];
        ++placed;
    }
    return cloud;
}

} // namespace

double radical_inverse(std::uint64_t base, std::uint64_t index) {
    double inv = 1.0 / double(base);
    double scale = inv;
    double value = 0.0;
    while (index > 0) {
        value += double(index % base) * scale;
        index /= base;
        scale *= inv;
    }
    return value;
}

PointCloud sample_cloud(const DiffeoSpec& spec, const std::vector<double>& xi, std::size_t n,
                        CloudMode mode, std::uint64_t seed) {
    validate_params(spec, xi);
    if (n == 0) throw DomainError("sample_cloud: n must be positive");
    PointCloud cloud;
    if (mode == CloudMode::quasirandom) {
        cloud = quasirandom_cloud(spec, xi, n, seed);
    } else {
        switch (spec.family) {
            case Family::identity: cloud = square_tensor_cloud(n); break;
            case Family::interval_scale: cloud = interval_tensor_cloud(n, xi[0]); break;
            case Family::stenosis_channel: cloud = channel_tensor_cloud(spec, n, xi, &xi); break;
            case Family::hole_radius: cloud = ring_tensor_cloud(n, xi[0]); break;
        }
    }
    fill_zeta(spec, xi, cloud);
    return cloud;
}

PointCloud reference_cloud(const DiffeoSpec& spec, std::size_t n,
                           const std::vector<double>* align_xi) {
    if (n == 0) throw DomainError("reference_cloud: n must be positive");
    switch (spec.family) {
        case Family::identity: return square_tensor_cloud(n);
        case Family::interval_scale: return interval_tensor_cloud(n, 1.0);
        case Family::stenosis_channel: {
            std::vector<double> flat{0.0, 0.5, 2.5};  // xi1 = 0: clean rectangle
            return channel_tensor_cloud(spec, n, flat, align_xi);
        }
        case Family::hole_radius: return ring_tensor_cloud(n, spec.hole_ref_radius);
    }
    throw DomainError("reference_cloud: unknown family");
}

PointCloud push_reference_cloud(const DiffeoSpec& spec, const PointCloud& ref,
                                const std::vector<double>& xi) {
    validate_params(spec, xi);
    require_dim(spec, ref.points);
    PointCloud out;
    std::size_t n = ref.size(), d = spec.dim();
    out.points = Tensor(n, d);
    out.weights = Tensor(n, 1);
    out.zeta = Tensor(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        double x[2];
        map_inverse(spec, ref.points.row(i), xi, x);
        for (std::size_t j = 0; j < d; ++j) out.points(i, j) = x[j];
        double z = jacobian_det(spec, x, xi);
        out.zeta(i, 0) = z;
        out.weights(i, 0) = ref.weights(i, 0) / z;
    }
    return out;
}

double weighted_inner_product(const Tensor& f, const Tensor& g, const PointCloud& cloud,
                              bool use_zeta) {
    if (f.rows() != cloud.size() || g.rows() != cloud.size() || f.cols() != 1 || g.cols() != 1)
        throw DimensionError("weighted_inner_product: values must be N x 1 over the cloud");
    if (use_zeta && !cloud.has_zeta())
        throw DimensionError("weighted_inner_product: cloud carries no jacobian values");
    double s = 0.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        double w = cloud.weights(i, 0);
        if (use_zeta) w *= cloud.zeta(i, 0);
        s += w * f(i, 0) * g(i, 0);
    }
    return s;
}

Tensor morph_pullback(const DiffeoSpec& spec, const std::function<double(const double*)>& f,
                      const std::vector<double>& xi, const PointCloud& ref) {
    validate_params(spec, xi);
    require_dim(spec, ref.points);
    Tensor values(ref.size(), 1);
    for (std::size_t i = 0; i < ref.size(); ++i) {
        double x[2];
        map_inverse(spec, ref.points.row(i), xi, x);
        values(i, 0) = f(x);
    }
    return values;
}

} // namespace cgarom
