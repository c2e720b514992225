#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cgarom/dataset.hpp"
#include "cgarom/tensor.hpp"

namespace cgarom {

// Orthonormal snapshot basis under the discrete weighted inner product
// <f, g> = sum_i w_i f_i g_i. Computed as the SVD of diag(sqrt(w)) U and
// mapped back, so the columns satisfy modes^T diag(w) modes = I; this is the
// method-of-snapshots minimizer, with sigma_n^2 the modal energies.
struct PodBasis {
    Tensor modes;    // M x n, orthonormal in the weighted inner product
    Tensor sigma;    // min(M, N_s) x 1, non-increasing, all singular values
    Tensor weights;  // M x 1, the weights the basis is orthonormal under
};

// snapshots holds one snapshot per column (M x N_s); keeps at most n_max
// modes. Weights must be positive.
PodBasis compute_pod(const Tensor& snapshots, const Tensor& weights, std::size_t n_max);

// Residual energy sum_j |u_j - V (V^T W u_j)|_w^2 of projecting the columns
// of snapshots onto the span of the given weighted-orthonormal modes.
double projection_residual_energy(const Tensor& modes, const Tensor& weights,
                                  const Tensor& snapshots);

// Residual energy of the rank-n truncation; equals sum_{k>n} sigma_k^2 when
// evaluated on the snapshots the basis was computed from.
double pod_projection_error(const PodBasis& basis, const Tensor& snapshots, std::size_t n);

// sum_{k>n} sigma_k^2, accumulated smallest-first.
double tail_energy(const Tensor& sigma, std::size_t n);

// Channel-stacked snapshot matrix of a fixed-resolution dataset: row c*N_h+i
// holds channel c at point i, one column per requested sample id. Weights are
// the shared reference cell volumes w_i zeta_i (w_i alone when no zeta is
// stored); every sample must agree with them to 1e-10 relative.
struct SnapshotMatrix {
    Tensor data;     // (C*N_h) x N_s
    Tensor weights;  // (C*N_h) x 1
    std::vector<std::uint64_t> ids;
};

SnapshotMatrix assemble_snapshots(const Dataset& ds, const std::vector<std::uint64_t>& ids);

// Best-approximation errors as per-snapshot averages of squared weighted
// residuals. cga uses one SVD per geometry group (the optimal geometry-aware
// basis of each group); pod uses the single global SVD. Both divide by the
// total snapshot count, so cga <= pod holds exactly term by term.
struct BaeTable {
    std::vector<std::size_t> dims;
    std::vector<double> cga, pod;
    std::string fingerprint;
    std::vector<std::string> notes;
};

BaeTable bae_oracle(const Dataset& ds, const std::vector<std::size_t>& dims);

} // namespace cgarom
