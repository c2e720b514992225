#include "cgarom/pod.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "cgarom/errors.hpp"

namespace cgarom {

namespace {

using EMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<const EMatrix>;

} // namespace

PodBasis compute_pod(const Tensor& snapshots, const Tensor& weights, std::size_t n_max) {
    const std::size_t m = snapshots.rows();
    const std::size_t ns = snapshots.cols();
    if (m == 0 || ns == 0) throw DimensionError("snapshot matrix is empty");
    if (weights.rows() != m || weights.cols() != 1)
        throw DimensionError("weight vector does not match the snapshot rows");
    for (std::size_t i = 0; i < m; ++i)
        if (!(weights[i] > 0.0)) throw NumericalError("quadrature weights must be positive");
    if (n_max == 0) throw UsageError("n_max must be positive");

    EMatrix b(m, ns);
    for (std::size_t i = 0; i < m; ++i) {
        const double s = std::sqrt(weights[i]);
        for (std::size_t j = 0; j < ns; ++j) b(i, j) = s * snapshots(i, j);
    }

    Eigen::BDCSVD<EMatrix> svd(b, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    const auto& u = svd.matrixU();

    PodBasis basis;
    basis.weights = weights;
    basis.sigma = Tensor(static_cast<std::size_t>(sv.size()), 1);
    for (std::size_t k = 0; k < basis.sigma.rows(); ++k)
        basis.sigma[k] = sv(static_cast<Eigen::Index>(k));

    const std::size_t keep = std::min<std::size_t>(n_max, static_cast<std::size_t>(u.cols()));
    basis.modes = Tensor(m, keep);
    for (std::size_t i = 0; i < m; ++i) {
        const double inv = 1.0 / std::sqrt(weights[i]);
        for (std::size_t k = 0; k < keep; ++k)
            basis.modes(i, k) = inv * u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    }
    basis.modes.require_finite("computed basis modes");
    return basis;
}

double projection_residual_energy(const Tensor& modes, const Tensor& weights,
                                  const Tensor& snapshots) {
    const std::size_t m = snapshots.rows();
    if (modes.rows() != m || weights.rows() != m)
        throw DimensionError("modes, weights and snapshots disagree on the row count");
    EMap v(modes.data(), modes.rows(), modes.cols());
    EMap u(snapshots.data(), snapshots.rows(), snapshots.cols());
    Eigen::Map<const Eigen::VectorXd> w(weights.data(), static_cast<Eigen::Index>(m));

    // coefficients a = V^T W u, residual r = u - V a, energy = sum w r^2
    EMatrix wu = w.asDiagonal() * u;
    EMatrix a = v.transpose() * wu;
    EMatrix r = u - v * a;
    return (w.asDiagonal() * r.cwiseProduct(r)).sum();
}

double pod_projection_error(const PodBasis& basis, const Tensor& snapshots, std::size_t n) {
    if (n > basis.modes.cols())
        throw UsageError("requested rank exceeds the number of available modes");
    if (n == 0) {
        // empty basis: residual is the full weighted energy
        double total = 0.0;
        for (std::size_t i = 0; i < snapshots.rows(); ++i)
            for (std::size_t j = 0; j < snapshots.cols(); ++j)
                total += basis.weights[i] * snapshots(i, j) * snapshots(i, j);
        return total;
    }
    Tensor truncated(basis.modes.rows(), n);
    for (std::size_t i = 0; i < basis.modes.rows(); ++i)
        for (std::size_t k = 0; k < n; ++k) truncated(i, k) = basis.modes(i, k);
    return projection_residual_energy(truncated, basis.weights, snapshots);
}

double tail_energy(const Tensor& sigma, std::size_t n) {
    double tail = 0.0;
    for (std::size_t k = sigma.rows(); k > n; --k) {
        const double s = sigma[k - 1];
        tail += s * s;
    }
    return tail;
}

SnapshotMatrix assemble_snapshots(const Dataset& ds, const std::vector<std::uint64_t>& ids) {
    if (ds.manifest.resolution != "fixed")
        throw UsageError("snapshot assembly needs a fixed-resolution dataset; regenerate with "
                         "resolution=fixed so all samples share one cloud");
    if (ids.empty()) throw UsageError("no sample ids given");

    const SampleRecord& first = ds.by_id(ids.front());
    const std::size_t nh = first.cloud.size();
    const std::size_t channels = ds.manifest.channels;

    SnapshotMatrix out;
    out.ids = ids;
    out.weights = Tensor(channels * nh, 1);
    const auto ref_weight = [](const SampleRecord& s, std::size_t i) {
        return s.cloud.has_zeta() ? s.cloud.weights[i] * s.cloud.zeta[i] : s.cloud.weights[i];
    };
    for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t i = 0; i < nh; ++i) out.weights[c * nh + i] = ref_weight(first, i);

    out.data = Tensor(channels * nh, ids.size());
    for (std::size_t j = 0; j < ids.size(); ++j) {
        const SampleRecord& s = ds.by_id(ids[j]);
        if (s.cloud.size() != nh)
            throw UsageError("samples disagree on the point count; regenerate with "
                             "resolution=fixed so all samples share one cloud");
        for (std::size_t i = 0; i < nh; ++i) {
            const double w = ref_weight(s, i);
            const double ref = out.weights[i];
            if (std::abs(w - ref) > 1e-10 * std::max(1.0, std::abs(ref)))
                throw UsageError("samples do not share one reference quadrature; snapshot "
                                 "bases need the fixed-resolution layout");
        }
        for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t i = 0; i < nh; ++i) out.data(c * nh + i, j) = s.values(i, c);
    }
    return out;
}

BaeTable bae_oracle(const Dataset& ds, const std::vector<std::size_t>& dims) {
    if (dims.empty()) throw UsageError("no basis dimensions given");
    std::vector<std::uint64_t> all_ids;
    all_ids.reserve(ds.samples.size());
    for (const SampleRecord& s : ds.samples) all_ids.push_back(s.id);

    const SnapshotMatrix global = assemble_snapshots(ds, all_ids);
    const std::size_t n_total = global.ids.size();
    const std::size_t n_keep = *std::max_element(dims.begin(), dims.end());
    const PodBasis global_basis = compute_pod(global.data, global.weights, n_keep);

    BaeTable table;
    table.dims = dims;
    table.fingerprint = ds.manifest.fingerprint;

    std::vector<Tensor> group_sigma;
    for (const auto& group : ds.group_by_geometry()) {
        std::vector<std::uint64_t> ids;
        ids.reserve(group.size());
        for (std::size_t idx : group) ids.push_back(ds.samples[idx].id);
        if (ids.size() == 1)
            table.notes.push_back("geometry of sample " + std::to_string(ids[0]) +
                                  " has a single snapshot; it contributes zero for N >= 1");
        const SnapshotMatrix sm = assemble_snapshots(ds, ids);
        group_sigma.push_back(compute_pod(sm.data, sm.weights, 1).sigma);
    }

    for (std::size_t n : dims) {
        double per_geometry = 0.0;
        for (const Tensor& sigma : group_sigma) per_geometry += tail_energy(sigma, n);
        table.cga.push_back(per_geometry / double(n_total));
        table.pod.push_back(tail_energy(global_basis.sigma, n) / double(n_total));
    }
    return table;
}

} // namespace cgarom
