#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cgarom/geometry.hpp"
#include "cgarom/tensor.hpp"

namespace cgarom {

// One snapshot: a field sampled on its own quadrature cloud, tagged with the
// time instance (optional), physical parameters mu and geometric parameters xi.
struct SampleRecord {
    std::uint64_t id = 0;
    bool has_t = false;
    double t = 0.0;
    std::vector<double> mu;
    std::vector<double> xi;
    PointCloud cloud;
    Tensor values;  // N_h x C
};

struct SplitIds {
    std::vector<std::uint64_t> train, val, test;
};

// Componentwise affine maps v -> (v - shift) / scale onto [-1, 1], fitted on
// the training split. Degenerate ranges keep scale 1 (recorded in notes).
struct Normalization {
    struct Affine {
        double shift = 0.0;
        double scale = 1.0;
    };
    std::optional<Affine> t;
    std::vector<Affine> mu, xi, x, value;
    std::vector<std::string> notes;

    static Affine fit_range(double lo, double hi, const char* what, std::vector<std::string>& notes);
    static double apply(double v, const Affine& a) { return (v - a.shift) / a.scale; }
    static double invert(double v, const Affine& a) { return v * a.scale + a.shift; }
};

struct DatasetManifest {
    std::uint32_t version = 1;
    std::string problem;
    Family family = Family::identity;
    std::size_t d = 0, p = 0, g = 0, channels = 1;
    bool has_t = false;
    std::size_t n_t = 1, n_geom = 0, n_mu = 0, n_samples = 0;
    std::string resolution;  // "fixed" | "multi"
    std::size_t nh = 0, nh_min = 0, nh_max = 0;
    std::uint64_t seed = 0;
    bool unseen_geometries = true;
    SplitIds splits;
    std::optional<Normalization> normalization;
    std::string fingerprint;  // crc32 of samples.bin, lowercase hex
};

struct Dataset {
    DatasetManifest manifest;
    std::vector<SampleRecord> samples;

    const SampleRecord& by_id(std::uint64_t id) const;
    DiffeoSpec geometry_spec() const { return DiffeoSpec::make(manifest.family); }

    // Sample indices grouped by bitwise-identical xi, in first-seen order.
    std::vector<std::vector<std::size_t>> group_by_geometry() const;
};

struct GenerateConfig {
    std::string problem = "stenosis2d";  // or "hole2d"
    std::size_t n_geom = 64;
    std::size_t n_mu = 16;
    std::size_t n_t = 1;
    std::string resolution = "multi";  // "fixed" | "multi"
    std::size_t nh = 1024;             // fixed resolution
    std::size_t nh_min = 800;          // multi resolution range
    std::size_t nh_max = 1600;
    std::uint64_t seed = 0;
    double frac_train = 0.8, frac_val = 0.1, frac_test = 0.1;
    bool unseen_geometries = true;
};

// Built-in manufactured problems. Closed-form fields over the geometry
// families; both are stationary single-channel:
//   stenosis2d  u = A * 4 yh (1 - yh) * exp(-(x - xi3)^2 / sigma^2), yh the
//               wall-normalized height; mu = (A, sigma) in [2,4] x [0.3,0.8]
//   hole2d      u = g1 * exp(-(rho - r(xi))^2 / D) with rho the distance to
//               the hole center; mu = (g1, D) in [1,2] x [0.05,0.2]
double manufactured_field(const std::string& problem, const DiffeoSpec& spec, const double* x,
                          const std::vector<double>& mu, const std::vector<double>& xi);

std::vector<std::pair<double, double>> problem_mu_box(const std::string& problem);
Family problem_family(const std::string& problem);

// Generates samples, assigns splits and fits normalization on the train split.
// Fixed resolution pushes one reference tensor grid through the inverse map
// (stores zeta); multi resolution draws a per-geometry point count from
// [nh_min, nh_max] and uses seeded quasirandom clouds (no zeta).
Dataset generate_dataset(const GenerateConfig& config);

// Partition sample ids. With unseen_geometries, whole geometries are assigned
// to splits so test geometries never occur in train/val. Fractions must sum
// to 1; a nonzero fraction must receive at least one geometry (or sample).
SplitIds split_dataset(const Dataset& ds, double frac_train, double frac_val, double frac_test,
                       bool unseen_geometries, std::uint64_t seed);

// Min/max statistics over the train split: inputs (t, mu, xi, x) and values
// per channel.
Normalization fit_normalization(const Dataset& ds, const SplitIds& splits);

// Keeps ceil(r * N) points drawn without replacement (seeded), rescales the
// kept weights by 1/r. r = 1 returns the record unchanged. 0 < r <= 1.
SampleRecord subsample(const SampleRecord& rec, double r, std::uint64_t seed);

// Directory layout: <dir>/manifest.json + <dir>/samples.bin.
void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

// IEEE 802.3 CRC-32 (reflected, poly 0xEDB88320), init 0.
std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed = 0);

} // namespace cgarom
