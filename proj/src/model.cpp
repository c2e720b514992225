#include "cgarom/model.hpp"

#include <cmath>

#include "cgarom/errors.hpp"

namespace cgarom {

namespace {

Tensor normalized_basis_input(const CgaRom& rom, const Tensor& points,
                              const std::vector<double>& xi) {
    const CgaRomSpec& sp = rom.spec;
    if (points.rows() > 0 && points.cols() != sp.d)
        throw DimensionError("query points do not match the model's spatial dimension");
    if (xi.size() != sp.g)
        throw DimensionError("xi does not match the model's geometric parameter count");
    Tensor in(points.rows(), sp.d + sp.g);
    for (std::size_t i = 0; i < points.rows(); ++i) {
        for (std::size_t k = 0; k < sp.d; ++k)
            in(i, k) = Normalization::apply(points(i, k), rom.norm.x[k]);
        for (std::size_t k = 0; k < sp.g; ++k)
            in(i, sp.d + k) = Normalization::apply(xi[k], rom.norm.xi[k]);
    }
    return in;
}

Tensor reduced_input(const CgaRom& rom, double t, const std::vector<double>& mu,
                     const std::vector<double>& xi) {
    const CgaRomSpec& sp = rom.spec;
    if (mu.size() != sp.p)
        throw DimensionError("mu does not match the model's physical parameter count");
    if (xi.size() != sp.g)
        throw DimensionError("xi does not match the model's geometric parameter count");
    Tensor in(1, sp.map_input_dim());
    std::size_t k = 0;
    if (sp.has_t) in[k++] = Normalization::apply(t, *rom.norm.t);
    for (std::size_t j = 0; j < sp.p; ++j) in[k++] = Normalization::apply(mu[j], rom.norm.mu[j]);
    for (std::size_t j = 0; j < sp.g; ++j) in[k++] = Normalization::apply(xi[j], rom.norm.xi[j]);
    return in;
}

Tensor normalized_values(const CgaRom& rom, const SampleRecord& s) {
    if (s.values.cols() != rom.spec.channels)
        throw DimensionError("sample channel count does not match the model");
    if (s.values.rows() != s.cloud.size())
        throw DimensionError("sample values do not match its cloud");
    Tensor un(s.values.rows(), s.values.cols());
    for (std::size_t i = 0; i < un.rows(); ++i)
        for (std::size_t c = 0; c < un.cols(); ++c)
            un(i, c) = Normalization::apply(s.values(i, c), rom.norm.value[c]);
    return un;
}

// w_i, or w_i * zeta_i when the model integrates against the reference
// measure. A model asking for zeta cannot run on zeta-less samples.
Tensor effective_weights(const CgaRom& rom, const SampleRecord& s) {
    const std::size_t n = s.cloud.size();
    if (n == 0) throw DimensionError("sample has an empty cloud");
    Tensor w(n, 1);
    if (rom.spec.use_zeta) {
        if (!s.cloud.has_zeta())
            throw UsageError("model uses zeta weighting but the sample stores no zeta");
        for (std::size_t i = 0; i < n; ++i) w[i] = s.cloud.weights[i] * s.cloud.zeta[i];
    } else {
        for (std::size_t i = 0; i < n; ++i) w[i] = s.cloud.weights[i];
    }
    return w;
}

const Tensor& fixed_basis_for(const CgaRom& rom, std::size_t n_rows) {
    if (rom.fixed_basis.cols() != rom.spec.reduced_dim())
        throw DimensionError("fixed basis has the wrong number of columns");
    if (rom.fixed_basis.rows() != n_rows)
        throw DimensionError("a fixed-matrix basis is only defined on its shared cloud");
    return rom.fixed_basis;
}

Tensor identity_matrix(std::size_t n) {
    Tensor eye(n, n);
    for (std::size_t i = 0; i < n; ++i) eye(i, i) = 1.0;
    return eye;
}

} // namespace

NetSpec CgaRomSpec::basis_net() const {
    return {NetKind::rdense, d + g, reduced_dim(), basis_width, basis_depth, Act::tanh};
}

NetSpec CgaRomSpec::encoder_net() const {
    return {NetKind::dense, reduced_dim(), latent, coder_width, coder_depth, Act::elu};
}

NetSpec CgaRomSpec::decoder_net() const {
    return {NetKind::dense, latent, reduced_dim(), coder_width, coder_depth, Act::elu};
}

NetSpec CgaRomSpec::reduced_net() const {
    return {NetKind::dense, map_input_dim(), latent, map_width, map_depth, Act::elu};
}

void CgaRomSpec::validate() const {
    if (n_modes == 0 || latent == 0 || channels == 0 || d == 0)
        throw UsageError("n_modes, latent, channels and d must be positive");
    if (latent > reduced_dim())
        throw UsageError("latent dimension exceeds the reduced dimension n_modes*channels");
    if (map_input_dim() == 0)
        throw UsageError("the reduced map needs at least one input (t, mu or xi)");
    if (coder_width == 0 || coder_depth == 0 || map_width == 0 || map_depth == 0)
        throw UsageError("network widths and depths must be positive");
    if (basis_kind == BasisKind::network && (basis_width == 0 || basis_depth == 0))
        throw UsageError("basis network width and depth must be positive");
    if (alpha < 0.0 || lambda_orth < 0.0)
        throw UsageError("loss weights must be nonnegative");
}

CgaRom CgaRom::create(const CgaRomSpec& spec, const Normalization& norm, std::uint64_t seed) {
    spec.validate();
    if (norm.x.size() != spec.d || norm.xi.size() != spec.g || norm.mu.size() != spec.p ||
        norm.value.size() != spec.channels)
        throw DimensionError("normalization does not match the model shapes");
    if (spec.has_t && !norm.t)
        throw DimensionError("time-dependent model needs a t normalization");

    CgaRom rom;
    rom.spec = spec;
    rom.norm = norm;
    Rng rng(seed);
    if (spec.basis_kind == BasisKind::network) {
        add_net_params(rom.params, spec.basis_net(), "basis");
        init_net_params(rom.params, spec.basis_net(), "basis", rng);
    }
    add_net_params(rom.params, spec.encoder_net(), "enc");
    init_net_params(rom.params, spec.encoder_net(), "enc", rng);
    add_net_params(rom.params, spec.decoder_net(), "dec");
    init_net_params(rom.params, spec.decoder_net(), "dec", rng);
    add_net_params(rom.params, spec.reduced_net(), "phi");
    init_net_params(rom.params, spec.reduced_net(), "phi", rng);
    return rom;
}

Normalization identity_normalization(const CgaRomSpec& spec) {
    Normalization n;
    if (spec.has_t) n.t = Normalization::Affine{};
    n.mu.resize(spec.p);
    n.xi.resize(spec.g);
    n.x.resize(spec.d);
    n.value.resize(spec.channels);
    return n;
}

Tensor basis_eval(const CgaRom& rom, const Tensor& points, const std::vector<double>& xi) {
    if (points.rows() == 0 && rom.spec.basis_kind == BasisKind::network)
        return Tensor(0, rom.spec.reduced_dim());
    if (rom.spec.basis_kind == BasisKind::fixed_matrix)
        return fixed_basis_for(rom, points.rows());
    const Tensor in = normalized_basis_input(rom, points, xi);
    return net_eval(rom.spec.basis_net(), rom.params, "basis", in);
}

Tensor project(const CgaRom& rom, const SampleRecord& sample) {
    const CgaRomSpec& sp = rom.spec;
    const Tensor v = basis_eval(rom, sample.cloud.points, sample.xi);
    const Tensor un = normalized_values(rom, sample);
    const Tensor w = effective_weights(rom, sample);

    Tensor a(1, sp.reduced_dim());
    for (std::size_t c = 0; c < sp.channels; ++c)
        for (std::size_t n = 0; n < sp.n_modes; ++n) {
            const std::size_t col = c * sp.n_modes + n;
            double acc = 0.0;
            for (std::size_t i = 0; i < un.rows(); ++i) acc += w[i] * un(i, c) * v(i, col);
            a[col] = acc;
        }
    return a;
}

Tensor encode(const CgaRom& rom, const Tensor& coeffs) {
    if (coeffs.rows() != 1 || coeffs.cols() != rom.spec.reduced_dim())
        throw DimensionError("coefficients must be 1 x n_modes*channels");
    return net_eval(rom.spec.encoder_net(), rom.params, "enc", coeffs);
}

Tensor decode(const CgaRom& rom, const Tensor& z) {
    if (z.rows() != 1 || z.cols() != rom.spec.latent)
        throw DimensionError("latent vector must be 1 x latent");
    return net_eval(rom.spec.decoder_net(), rom.params, "dec", z);
}

Tensor reduce_map(const CgaRom& rom, double t, const std::vector<double>& mu,
                  const std::vector<double>& xi) {
    const Tensor in = reduced_input(rom, t, mu, xi);
    return net_eval(rom.spec.reduced_net(), rom.params, "phi", in);
}

Tensor lift(const CgaRom& rom, const Tensor& coeffs, const Tensor& points,
            const std::vector<double>& xi) {
    const CgaRomSpec& sp = rom.spec;
    if (coeffs.rows() != 1 || coeffs.cols() != sp.reduced_dim())
        throw DimensionError("coefficients must be 1 x n_modes*channels");
    if (points.rows() == 0 && sp.basis_kind == BasisKind::network)
        return Tensor(0, sp.channels);
    const Tensor v = basis_eval(rom, points, xi);

    Tensor out(points.rows(), sp.channels);
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t c = 0; c < sp.channels; ++c) {
            double acc = 0.0;
            for (std::size_t n = 0; n < sp.n_modes; ++n) {
                const std::size_t col = c * sp.n_modes + n;
                acc += coeffs[col] * v(i, col);
            }
            out(i, c) = acc;
        }
    return out;
}

Tensor forward_infer(const CgaRom& rom, double t, const std::vector<double>& mu,
                     const std::vector<double>& xi, const Tensor& points) {
    const Tensor z = reduce_map(rom, t, mu, xi);
    const Tensor a = decode(rom, z);
    Tensor u = lift(rom, a, points, xi);
    for (std::size_t i = 0; i < u.rows(); ++i)
        for (std::size_t c = 0; c < u.cols(); ++c)
            u(i, c) = Normalization::invert(u(i, c), rom.norm.value[c]);
    return u;
}

LossBreakdown loss_cga(const CgaRom& rom, const SampleRecord& sample) {
    const CgaRomSpec& sp = rom.spec;
    const Tensor un = normalized_values(rom, sample);
    const Tensor w = effective_weights(rom, sample);

    const Tensor z_phi = reduce_map(rom, sample.t, sample.mu, sample.xi);
    const Tensor a_dec = decode(rom, z_phi);
    const Tensor uhat = lift(rom, a_dec, sample.cloud.points, sample.xi);

    LossBreakdown out;
    for (std::size_t i = 0; i < un.rows(); ++i) {
        double row = 0.0;
        for (std::size_t c = 0; c < un.cols(); ++c) {
            const double diff = uhat(i, c) - un(i, c);
            row += diff * diff;
        }
        out.term1 += w[i] * row;
    }

    const Tensor z_enc = encode(rom, project(rom, sample));
    for (std::size_t k = 0; k < sp.latent; ++k) {
        const double diff = z_phi[k] - z_enc[k];
        out.term2 += diff * diff;
    }

    out.loss = out.term1 + sp.alpha * out.term2;
    if (sp.lambda_orth > 0.0) {
        const Tensor v = basis_eval(rom, sample.cloud.points, sample.xi);
        const std::size_t nc = sp.reduced_dim();
        for (std::size_t a = 0; a < nc; ++a)
            for (std::size_t b = 0; b < nc; ++b) {
                double gram = 0.0;
                for (std::size_t i = 0; i < v.rows(); ++i) gram += w[i] * v(i, a) * v(i, b);
                const double diff = gram - (a == b ? 1.0 : 0.0);
                out.orth += diff * diff;
            }
        out.loss += sp.lambda_orth * out.orth;
    }
    return out;
}

LossBreakdown loss_cga_grad(const CgaRom& rom, const SampleRecord& sample, GradientSet& grads) {
    const CgaRomSpec& sp = rom.spec;
    const std::size_t nq = sample.cloud.size();
    if (nq == 0) throw DimensionError("sample has an empty cloud");

    // Constants referenced by the tape; they must outlive it.
    const Tensor xin = normalized_basis_input(rom, sample.cloud.points, sample.xi);
    const Tensor un = normalized_values(rom, sample);
    const Tensor w = effective_weights(rom, sample);
    const Tensor phi_in = reduced_input(rom, sample.t, sample.mu, sample.xi);
    Tensor wu(nq, sp.reduced_dim());
    for (std::size_t i = 0; i < nq; ++i)
        for (std::size_t c = 0; c < sp.channels; ++c)
            for (std::size_t n = 0; n < sp.n_modes; ++n)
                wu(i, c * sp.n_modes + n) = w[i] * un(i, c);
    Tensor eye;

    Tape tape;
    int v = -1;
    if (sp.basis_kind == BasisKind::network) {
        v = net_forward(tape, sp.basis_net(), rom.params, "basis", tape.constant_ref(&xin));
    } else {
        v = tape.constant_ref(&fixed_basis_for(rom, nq));
    }

    // projection a = col_sum(V .* (w u)) feeds the encoder, so the latent
    // term trains the basis as well
    const int a_proj = tape.col_sum(tape.mul_elem(v, &wu));
    const int z_enc = net_forward(tape, sp.encoder_net(), rom.params, "enc", a_proj);
    const int z_phi =
        net_forward(tape, sp.reduced_net(), rom.params, "phi", tape.constant_ref(&phi_in));
    const int term2 = tape.sum_all(tape.square(tape.sub(z_phi, z_enc)));

    // reconstruction goes through the reduced map and decoder, never the
    // encoder: uhat = lift(decode(phi))
    const int a_dec = net_forward(tape, sp.decoder_net(), rom.params, "dec", z_phi);
    const int uhat = tape.block_col_sum(tape.mul(tape.broadcast_row(a_dec, nq), v), sp.n_modes);
    const int term1 = tape.sum_all(
        tape.scale_rows(tape.square(tape.sub(uhat, tape.constant_ref(&un))), &w));

    int loss = tape.add(term1, tape.scale(term2, sp.alpha));
    int orth = -1;
    if (sp.lambda_orth > 0.0) {
        eye = identity_matrix(sp.reduced_dim());
        const int gram = tape.matmul_tn(tape.scale_rows(v, &w), v);
        orth = tape.sum_all(tape.square(tape.sub(gram, tape.constant_ref(&eye))));
        loss = tape.add(loss, tape.scale(orth, sp.lambda_orth));
    }

    tape.backward(loss);
    accumulate_param_grads(tape, rom.params, grads);

    LossBreakdown out;
    out.term1 = tape.value(term1).item();
    out.term2 = tape.value(term2).item();
    out.orth = orth >= 0 ? tape.value(orth).item() : 0.0;
    out.loss = tape.value(loss).item();
    return out;
}

} // namespace cgarom
