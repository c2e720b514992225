#pragma once

#include <cstdint>
#include <vector>

#include "cgarom/dataset.hpp"
#include "cgarom/net.hpp"
#include "cgarom/tensor.hpp"

namespace cgarom {

// How reconstruction basis values are obtained: a coordinate network
// evaluated at (x, xi) query points, or a frozen matrix of snapshot modes
// that is only defined on the shared fixed-resolution cloud.
enum class BasisKind { network, fixed_matrix };

struct CgaRomSpec {
    std::size_t n_modes = 4;   // reduced dimension per channel
    std::size_t latent = 4;    // autoencoder bottleneck
    std::size_t channels = 1;
    std::size_t d = 2;  // spatial dimension
    std::size_t p = 0;  // physical parameter count
    std::size_t g = 0;  // geometric parameter count
    bool has_t = false;

    std::size_t basis_width = 120, basis_depth = 10;  // residual trunk
    std::size_t coder_width = 150, coder_depth = 5;   // encoder and decoder
    std::size_t map_width = 50, map_depth = 5;        // reduced map

    BasisKind basis_kind = BasisKind::network;
    bool use_zeta = false;     // weight quadrature sums by stored zeta
    double alpha = 1.0;        // latent consistency term weight
    double lambda_orth = 0.0;  // optional Gram penalty, off by default

    std::size_t reduced_dim() const { return n_modes * channels; }
    std::size_t map_input_dim() const { return (has_t ? 1 : 0) + p + g; }

    NetSpec basis_net() const;
    NetSpec encoder_net() const;
    NetSpec decoder_net() const;
    NetSpec reduced_net() const;

    // Throws UsageError on inconsistent shapes (e.g. latent > n_modes*channels).
    void validate() const;
};

// The reduced-order model. Works internally in normalized units: geometric
// and parametric inputs are mapped into [-1, 1] and field values are
// normalized per channel; forward_infer returns physical units again.
// Parameter declaration order (basis, encoder, decoder, reduced map) fixes
// the checkpoint and optimizer layout.
struct CgaRom {
    CgaRomSpec spec;
    Normalization norm;
    ParameterSet params;
    Tensor fixed_basis;  // rows x (n_modes*channels), fixed_matrix mode only

    static CgaRom create(const CgaRomSpec& spec, const Normalization& norm, std::uint64_t seed);
};

// All affine maps set to shift 0, scale 1, shaped for the spec.
Normalization identity_normalization(const CgaRomSpec& spec);

// Basis values at raw query points for raw xi, one column per (channel, mode)
// pair in channel-major blocks of n_modes. With a fixed-matrix basis the
// points must be the shared cloud (row counts must match).
Tensor basis_eval(const CgaRom& rom, const Tensor& points, const std::vector<double>& xi);

// Quadrature projection of the sample's normalized values onto the basis:
// a_{c*N+n} = sum_i omega_i u_{i,c} v_{i,c*N+n}, omega_i = w_i (times zeta_i
// when use_zeta). Returns 1 x (n_modes*channels).
Tensor project(const CgaRom& rom, const SampleRecord& sample);

Tensor encode(const CgaRom& rom, const Tensor& coeffs);  // 1 x latent
Tensor decode(const CgaRom& rom, const Tensor& z);       // 1 x n_modes*channels

// Reduced map at raw (t, mu, xi). t is ignored for stationary models.
Tensor reduce_map(const CgaRom& rom, double t, const std::vector<double>& mu,
                  const std::vector<double>& xi);

// Normalized field reconstructed from coefficients at arbitrary raw query
// points (N_q x channels).
Tensor lift(const CgaRom& rom, const Tensor& coeffs, const Tensor& points,
            const std::vector<double>& xi);

// Online pipeline lift(decode(reduce_map(...))) evaluated at raw query points
// and denormalized to physical units.
Tensor forward_infer(const CgaRom& rom, double t, const std::vector<double>& mu,
                     const std::vector<double>& xi, const Tensor& points);

struct LossBreakdown {
    double loss = 0.0;
    double term1 = 0.0;  // weighted squared reconstruction error
    double term2 = 0.0;  // latent consistency
    double orth = 0.0;   // Gram penalty (before lambda weighting)
};

// Per-sample loss: term1 + alpha*term2 (+ lambda_orth*orth), all in
// normalized units. The reconstruction goes through the reduced map and
// decoder; term2 ties the reduced map to the encoded projection, training
// basis, autoencoder and reduced map jointly.
LossBreakdown loss_cga(const CgaRom& rom, const SampleRecord& sample);

// Same value, computed on the tape; parameter gradients are accumulated into
// grads (not zeroed first).
LossBreakdown loss_cga_grad(const CgaRom& rom, const SampleRecord& sample, GradientSet& grads);

} // namespace cgarom
