// Release gate. Each check builds its own inputs, runs the library end to
// end, and prints one line: [PASS]/[FAIL], the measured quantity against its
// pinned bound, and the wall time against the check's budget. A check that
// exceeds its budget fails even when the quantity is in bounds. The process
// exits nonzero if any check fails.
//
// Checks 5-8 train real models and dominate the runtime (tens of minutes on
// one core). Run with --quick to execute only the sub-minute checks.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "cgarom/dataset.hpp"
#include "cgarom/errors.hpp"
#include "cgarom/geometry.hpp"
#include "cgarom/model.hpp"
#include "cgarom/net.hpp"
#include "cgarom/pod.hpp"
#include "cgarom/rng.hpp"
#include "cgarom/tensor.hpp"
#include "cgarom/training.hpp"

namespace fs = std::filesystem;
using namespace cgarom;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

Dataset make_dataset(std::size_t n_geom, std::size_t n_mu, const std::string& resolution,
                     std::size_t nh, std::size_t nh_min, std::size_t nh_max, bool unseen,
                     std::uint64_t seed) {
    GenerateConfig gc;
    gc.problem = "stenosis2d";
    gc.n_geom = n_geom;
    gc.n_mu = n_mu;
    gc.resolution = resolution;
    gc.nh = nh;
    gc.nh_min = nh_min;
    gc.nh_max = nh_max;
    gc.unseen_geometries = unseen;
    gc.seed = seed;
    return generate_dataset(gc);
}

CgaRomSpec base_spec(const Dataset& ds, std::size_t n_modes, std::size_t latent,
                     std::size_t basis_w, std::size_t basis_d, std::size_t coder_w,
                     std::size_t coder_d, std::size_t map_w, std::size_t map_d) {
    CgaRomSpec sp;
    sp.n_modes = n_modes;
    sp.latent = latent;
    sp.channels = ds.manifest.channels;
    sp.d = ds.manifest.d;
    sp.p = ds.manifest.p;
    sp.g = ds.manifest.g;
    sp.has_t = ds.manifest.has_t;
    sp.basis_width = basis_w;
    sp.basis_depth = basis_d;
    sp.coder_width = coder_w;
    sp.coder_depth = coder_d;
    sp.map_width = map_w;
    sp.map_depth = map_d;
    return sp;
}

TrainConfig train_cfg(std::size_t epochs, std::size_t batch, double lr, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = batch;
    cfg.lr = lr;
    cfg.seed = seed;
    return cfg;
}

// 1. Analytic loss gradients against central finite differences on a micro
// model whose loss exercises every path: all four nets, time and parameter
// inputs, zeta-weighted quadrature, both loss terms and the Gram penalty.
Outcome check_gradients() {
    CgaRomSpec spec;
    spec.n_modes = 2;
    spec.latent = 2;
    spec.channels = 1;
    spec.d = 2;
    spec.p = 2;
    spec.g = 3;
    spec.has_t = true;
    spec.basis_width = 8;
    spec.basis_depth = 2;
    spec.coder_width = 8;
    spec.coder_depth = 2;
    spec.map_width = 8;
    spec.map_depth = 2;
    spec.use_zeta = true;
    spec.alpha = 0.7;
    spec.lambda_orth = 0.3;
    CgaRom rom = CgaRom::create(spec, identity_normalization(spec), 23);

    const DiffeoSpec geo = DiffeoSpec::make(Family::stenosis_channel);
    SampleRecord rec;
    rec.id = 0;
    rec.has_t = true;
    rec.t = 0.3;
    rec.mu = {0.5, -0.2};
    rec.xi = {0.32, 0.6, 2.4};
    rec.cloud = sample_cloud(geo, rec.xi, 16, CloudMode::quasirandom, 11);
    rec.values = Tensor(rec.cloud.size(), 1);
    for (std::size_t i = 0; i < rec.cloud.size(); ++i) {
        const double* x = rec.cloud.points.row(i);
        rec.values(i, 0) = std::sin(2.0 * x[0]) + 0.5 * x[1];
    }

    const auto value = [&]() { return loss_cga(rom, rec).loss; };
    const auto grad = [&](GradientSet& g) {
        g.zero();
        loss_cga_grad(rom, rec, g);
    };
    const double err = max_rel_grad_error(rom.params, value, grad, 1e-5);
    return {err <= 1e-5,
            "max rel grad err " + num(err) + " <= 1e-05 over " +
                std::to_string(rom.params.total_size()) + " parameters"};
}

// 2. Projection residuals against the singular-value tail sums on random
// weighted snapshot matrices, at every truncation rank. One matrix is pinned
// at the full 500x200 size; deviations are measured against total energy.
Outcome check_pod_tail() {
    Rng rng(7);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        const std::size_t m = k == 0 ? 500 : 40 + rng.below(261);
        const std::size_t ns = k == 0 ? 200 : 8 + rng.below(93);
        Tensor a(m, ns);
        for (std::size_t i = 0; i < m * ns; ++i) a[i] = rng.uniform(-1.0, 1.0);
        // an exactly repeated snapshot drives the smallest singular value to
        // zero, so zero-tail ranks are covered too
        if (k % 3 == 1)
            for (std::size_t i = 0; i < m; ++i) a(i, ns - 1) = a(i, 0);
        Tensor w(m, 1);
        for (std::size_t i = 0; i < m; ++i) w[i] = rng.uniform(0.1, 2.0);

        const PodBasis basis = compute_pod(a, w, std::min(m, ns));
        const double total = tail_energy(basis.sigma, 0);
        for (std::size_t n = 0; n <= basis.modes.cols(); ++n) {
            const double got = pod_projection_error(basis, a, n);
            const double want = tail_energy(basis.sigma, n);
            worst = std::max(worst, std::abs(got - want) / total);
        }
    }
    return {worst <= 1e-10, "20 matrices, worst |residual - tail| / total " + num(worst) +
                                " <= 1e-10 at every rank"};
}

// 3. Per-geometry snapshot bases beat the single global basis on a dataset
// whose variability is geometry-dominated; the inequality must hold at every
// dimension and the advantage must be material at dimension 4.
Outcome check_basis_gap() {
    const Dataset ds = make_dataset(64, 16, "fixed", 1024, 800, 1600, true, 42);
    const std::vector<std::size_t> dims{1, 2, 4, 8, 16, 32};
    const BaeTable table = bae_oracle(ds, dims);

    bool ordered = true;
    for (std::size_t i = 0; i < dims.size(); ++i)
        ordered = ordered && table.cga[i] <= table.pod[i] + 1e-10;
    const std::size_t i4 = 2;  // dims[2] == 4
    const double ratio = table.pod[i4] / table.cga[i4];
    return {ordered && ratio >= 1.5,
            std::string(ordered ? "adapted <= global at all 6 dims" : "ordering violated") +
                ", gap at dim 4: " + num(table.pod[i4]) + " / " + num(table.cga[i4]) + " = " +
                num(ratio) + " >= 1.5"};
}

// 4. Quadrature of f^2 over a morphed domain (Jacobian-weighted) matches the
// quadrature of the pulled-back field over the reference domain, through two
// independently constructed grids of ~1e4 points each.
Outcome check_isometry() {
    using Fn = std::function<double(const double*)>;
    const std::vector<Fn> smooth2d{
        [](const double* x) { return std::sin(x[0]) * std::cos(x[1]); },
        [](const double* x) {
            return std::exp(-0.5 * ((x[0] - 0.8) * (x[0] - 0.8) + (x[1] - 0.4) * (x[1] - 0.4)));
        },
        [](const double* x) { return x[0] * x[1] + 1.0; },
        [](const double* x) { return x[0] * x[0] - 0.5 * x[1] + 2.0; },
        [](const double* x) { return std::cos(0.7 * x[0]) + 0.3 * std::sin(x[1]); },
    };
    const std::vector<Fn> smooth1d{
        [](const double* x) { return std::sin(2.0 * x[0]); },
        [](const double* x) { return x[0] * x[0] + 0.5; },
        [](const double* x) { return std::exp(-0.7 * x[0]); },
        [](const double* x) { return std::cos(x[0]) + 2.0; },
        [](const double* x) { return x[0] * x[0] * x[0] - x[0] + 1.0; },
    };

    Rng rng(611);
    double worst = 0.0;
    for (Family fam : {Family::identity, Family::interval_scale, Family::stenosis_channel,
                       Family::hole_radius}) {
        const DiffeoSpec spec = DiffeoSpec::make(fam);
        const std::vector<double> xi = sample_params(spec, rng);
        const PointCloud phys = sample_cloud(spec, xi, 10000, CloudMode::tensor);
        const PointCloud ref = reference_cloud(spec, 10000, &xi);
        for (const Fn& f : spec.dim() == 1 ? smooth1d : smooth2d) {
            Tensor fp(phys.size(), 1);
            for (std::size_t i = 0; i < phys.size(); ++i) fp(i, 0) = f(phys.points.row(i));
            const double physical = weighted_inner_product(fp, fp, phys, true);
            const Tensor fr = morph_pullback(spec, f, xi, ref);
            const double reference = weighted_inner_product(fr, fr, ref, false);
            worst = std::max(worst, std::abs(physical - reference) / physical);
        }
    }

    // constants on the scaled interval: both sides reduce to c^2 times an
    // exactly telescoping weight sum, so only rounding remains
    const DiffeoSpec interval = DiffeoSpec::make(Family::interval_scale);
    double worst_const = 0.0;
    for (double c : {1.0, -2.5, 0.75}) {
        const std::vector<double> xi{1.7};
        const PointCloud phys = sample_cloud(interval, xi, 10000, CloudMode::tensor);
        const PointCloud ref = reference_cloud(interval, 10000, &xi);
        Tensor fp = Tensor::full(phys.size(), 1, c);
        Tensor fr = Tensor::full(ref.size(), 1, c);
        const double physical = weighted_inner_product(fp, fp, phys, true);
        const double reference = weighted_inner_product(fr, fr, ref, false);
        worst_const = std::max(worst_const, std::abs(physical - reference) / physical);
    }

    return {worst <= 1e-4 && worst_const <= 1e-12,
            "4 families x 5 fields, worst rel defect " + num(worst) +
                " <= 1e-04; constants " + num(worst_const) + " <= 1e-12"};
}

// 5. Geometry-aware basis against a frozen global snapshot basis at reduced
// dimensions 2 and 4, identical budgets; the adapted basis must win at both
// and by at least 1/0.7 at dimension 4.
Outcome check_compression() {
    const Dataset ds = make_dataset(16, 8, "fixed", 256, 800, 1600, true, 42);
    const CgaRomSpec base = base_spec(ds, 4, 4, 32, 3, 48, 3, 24, 3);
    const TrainConfig cfg = train_cfg(800, 8, 1e-3, 1);
    const std::vector<SweepRow> rows = compression_sweep(ds, {2, 4}, base, cfg);

    const auto cell = [&](std::size_t n, const char* variant) {
        for (const SweepRow& r : rows)
            if (r.n_modes == n && r.variant == variant) return r.e_global;
        throw UsageError("sweep row missing");
    };
    const double cga2 = cell(2, "cga"), pod2 = cell(2, "pod");
    const double cga4 = cell(4, "cga"), pod4 = cell(4, "pod");
    const bool pass = cga2 <= pod2 && cga4 <= pod4 && cga4 <= 0.7 * pod4;
    return {pass, "test error adapted vs frozen: dim 2: " + num(cga2) + " vs " + num(pod2) +
                      "; dim 4: " + num(cga4) + " vs " + num(pod4) + " (need <= 0.7x = " +
                      num(0.7 * pod4) + ")"};
}

// 6. Full pipeline on the stock model size: relative test error within budget
// and a smoothed, monotone training curve. The second clause is strict (zero
// tolerated increases of the 50-epoch moving average over the final 80%) and
// is currently not met: the optimizer tracks its stability boundary, so the
// loss carries a few-percent multiplicative jitter at every level, while the
// sustainable progress per 50 epochs is of the same size. The run's measured
// numbers are printed either way.
Outcome check_end_to_end() {
    const Dataset ds = make_dataset(8, 16, "fixed", 256, 800, 1600, false, 42);
    const CgaRomSpec base = base_spec(ds, 4, 4, 40, 4, 64, 4, 32, 3);
    CgaRom rom = CgaRom::create(base, *ds.manifest.normalization, 1);
    const TrainConfig cfg = train_cfg(2000, 1, 1e-3, 1);
    const TrainReport report = train(rom, ds, cfg);

    const double e_r = evaluate(rom, ds, ds.manifest.splits.test).e_r;
    const bool ok_error = e_r <= 5e-2;

    std::vector<double> losses;
    losses.reserve(report.epochs.size());
    for (const EpochStats& s : report.epochs) losses.push_back(s.train_loss);
    const std::vector<double> ma = moving_average(losses, 50);
    const std::size_t start = ma.size() / 5;
    std::size_t violations = 0;
    double worst_rise = 0.0;
    for (std::size_t i = start; i + 1 < ma.size(); ++i)
        if (ma[i + 1] > ma[i]) {
            ++violations;
            worst_rise = std::max(worst_rise, (ma[i + 1] - ma[i]) / ma[i]);
        }
    const bool ok_monotone = violations == 0;

    return {ok_error && ok_monotone,
            "test rel err " + num(e_r) + " <= 0.05 [" + (ok_error ? "ok" : "FAIL") +
                "]; 50-epoch moving avg non-increasing over final 80%: " +
                std::to_string(violations) + " increases, worst +" +
                num(100.0 * worst_rise) + "% [" + (ok_monotone ? "ok" : "FAIL") + "]"};
}

// 7. A model trained on quarter-resolution clouds is evaluated at quarter,
// half and full test resolution; the error may not depend on the evaluation
// resolution by more than 10%.
Outcome check_resolution() {
    const Dataset ds = make_dataset(16, 8, "multi", 256, 192, 320, false, 42);
    const CgaRomSpec base = base_spec(ds, 4, 4, 32, 3, 48, 3, 24, 3);
    const TrainConfig cfg = train_cfg(800, 8, 1e-3, 1);
    const std::vector<SuperresCell> cells = superres_grid(ds, {0.25}, {0.25, 0.5, 1.0}, base, cfg);

    double lo = cells.front().e_r, hi = cells.front().e_r;
    std::string listed;
    for (const SuperresCell& c : cells) {
        lo = std::min(lo, c.e_r);
        hi = std::max(hi, c.e_r);
        listed += (listed.empty() ? "" : ", ") + num(c.e_r);
    }
    const double ratio = hi / lo;
    return {ratio <= 1.10, "rel err at eval fractions {0.25, 0.5, 1.0}: {" + listed +
                               "}, spread " + num(ratio) + " <= 1.1"};
}

// 8. Retraining on nested geometry subsets: test error falls with geometry
// count (negative log-log slope) and the smallest subset overfits hardest
// (largest train-test gap).
Outcome check_geometry_scaling() {
    const Dataset ds = make_dataset(60, 2, "fixed", 256, 800, 1600, true, 42);
    const CgaRomSpec base = base_spec(ds, 4, 4, 32, 3, 48, 3, 24, 3);
    const TrainConfig cfg = train_cfg(500, 8, 1e-3, 1);
    const std::vector<AblationRow> rows = ablate_geometries(ds, {5, 10, 20, 40}, base, cfg);

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(rows.size());
    for (const AblationRow& r : rows) {
        const double x = std::log(double(r.n_geometries)), y = std::log(r.e_r_test);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);

    std::size_t widest = 0;
    std::string listed;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].e_r_test - rows[i].e_r_train >
            rows[widest].e_r_test - rows[widest].e_r_train)
            widest = i;
        listed += (listed.empty() ? "" : ", ") + num(rows[i].e_r_test);
    }
    const bool pass = slope < 0.0 && rows[widest].n_geometries == 5;
    return {pass, "test rel err at {5, 10, 20, 40} geometries: {" + listed + "}, log-log slope " +
                      num(slope) + " < 0, widest train-test gap at " +
                      std::to_string(rows[widest].n_geometries)};
}

std::vector<char> file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// 9. Byte-exact round trips for datasets and checkpoints, and detection of a
// single flipped payload byte with the damaged record named in the error.
Outcome check_serialization() {
    const fs::path tmp = fs::temp_directory_path() / "cgarom-acceptance";
    fs::remove_all(tmp);
    fs::create_directories(tmp);

    GenerateConfig gc;
    gc.problem = "stenosis2d";
    gc.n_geom = 5;
    gc.n_mu = 2;
    gc.resolution = "multi";
    gc.nh_min = 20;
    gc.nh_max = 30;
    gc.seed = 7;
    gc.frac_train = 0.6;
    gc.frac_val = 0.2;
    gc.frac_test = 0.2;
    const Dataset ds = generate_dataset(gc);

    save_dataset(ds, (tmp / "a").string());
    const Dataset ds2 = load_dataset((tmp / "a").string());
    save_dataset(ds2, (tmp / "b").string());
    const bool ds_exact =
        file_bytes(tmp / "a" / "manifest.json") == file_bytes(tmp / "b" / "manifest.json") &&
        file_bytes(tmp / "a" / "samples.bin") == file_bytes(tmp / "b" / "samples.bin");

    CgaRomSpec spec = base_spec(ds, 2, 2, 8, 2, 8, 2, 8, 2);
    CgaRom rom = CgaRom::create(spec, *ds.manifest.normalization, 3);
    TrainConfig cfg = train_cfg(3, 2, 1e-3, 3);
    cfg.checkpoint_path = (tmp / "m1.ckpt").string();
    train(rom, ds, cfg);
    const Checkpoint cp = checkpoint_load(cfg.checkpoint_path);
    AdamState adam(cp.rom.params);
    adam.restore(cp.adam_step, cp.adam_m, cp.adam_v);
    checkpoint_save(cp.rom, (tmp / "m2.ckpt").string(), &adam, cp.epoch);
    const bool ckpt_exact = file_bytes(tmp / "m1.ckpt") == file_bytes(tmp / "m2.ckpt");

    // flip the last value byte of the final record (its trailing 4 bytes are
    // that record's checksum)
    fs::create_directories(tmp / "c");
    fs::copy_file(tmp / "a" / "manifest.json", tmp / "c" / "manifest.json");
    std::vector<char> blob = file_bytes(tmp / "a" / "samples.bin");
    blob[blob.size() - 5] = char(blob[blob.size() - 5] ^ 0x01);
    std::ofstream(tmp / "c" / "samples.bin", std::ios::binary)
        .write(blob.data(), std::streamsize(blob.size()));
    bool flagged = false;
    std::string message;
    try {
        load_dataset((tmp / "c").string());
    } catch (const IoError& e) {
        message = e.what();
        flagged = message.find("checksum mismatch in record") != std::string::npos;
    }

    fs::remove_all(tmp);
    return {ds_exact && ckpt_exact && flagged,
            std::string("dataset round trip ") + (ds_exact ? "byte-exact" : "DIFFERS") +
                ", checkpoint round trip " + (ckpt_exact ? "byte-exact" : "DIFFERS") +
                ", flipped byte -> \"" + (message.empty() ? "no error raised" : message) + "\""};
}

// 10. Two trainings from the same seed and config agree bitwise, epoch by
// epoch and in the final parameter vector.
Outcome check_determinism() {
    const Dataset ds = make_dataset(8, 4, "fixed", 64, 800, 1600, false, 3);
    const CgaRomSpec spec = base_spec(ds, 4, 4, 16, 2, 24, 2, 12, 2);
    const TrainConfig cfg = train_cfg(150, 8, 1e-3, 9);

    CgaRom rom_a = CgaRom::create(spec, *ds.manifest.normalization, 9);
    const TrainReport rep_a = train(rom_a, ds, cfg);
    CgaRom rom_b = CgaRom::create(spec, *ds.manifest.normalization, 9);
    const TrainReport rep_b = train(rom_b, ds, cfg);

    bool curves = rep_a.epochs.size() == rep_b.epochs.size();
    for (std::size_t i = 0; curves && i < rep_a.epochs.size(); ++i) {
        const EpochStats &a = rep_a.epochs[i], &b = rep_b.epochs[i];
        curves = a.train_loss == b.train_loss && a.train_term1 == b.train_term1 &&
                 a.train_term2 == b.train_term2 && a.val_loss == b.val_loss;
    }
    const bool params = rom_a.params.flatten() == rom_b.params.flatten();
    return {curves && params,
            std::string("loss curves ") + (curves ? "identical" : "DIFFER") + " over " +
                std::to_string(rep_a.epochs.size()) + " epochs, final parameters " +
                (params ? "identical" : "DIFFER") + " (final loss " +
                num(rep_a.epochs.back().train_loss) + ")"};
}

struct Check {
    const char* name;
    double budget_seconds;
    bool quick;
    Outcome (*run)();
};

} // namespace

int main(int argc, char** argv) {
    const bool quick_only = argc > 1 && std::strcmp(argv[1], "--quick") == 0;

    const std::vector<Check> checks{
        {"gradient-check", 10.0, true, check_gradients},
        {"pod-tail-identity", 30.0, true, check_pod_tail},
        {"adapted-basis-gap", 120.0, true, check_basis_gap},
        {"morph-isometry", 30.0, true, check_isometry},
        {"compression-trend", 1800.0, false, check_compression},
        {"end-to-end-accuracy", 1200.0, false, check_end_to_end},
        {"resolution-independence", 1200.0, false, check_resolution},
        {"geometry-scaling", 2700.0, false, check_geometry_scaling},
        {"serialization", 5.0, true, check_serialization},
        {"determinism", 600.0, true, check_determinism},
    };

    int failures = 0;
    std::size_t ran = 0;
    for (const Check& c : checks) {
        if (quick_only && !c.quick) continue;
        ++ran;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("unexpected exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_budget = secs <= c.budget_seconds;
        const bool pass = o.pass && in_budget;
        std::printf("[%s] %-24s %s [%.1fs / %.0fs%s]\n", pass ? "PASS" : "FAIL", c.name,
                    o.detail.c_str(), secs, c.budget_seconds, in_budget ? "" : ", over budget");
        std::fflush(stdout);
        if (!pass) ++failures;
    }
    std::printf("%zu of %zu checks passed\n", ran - std::size_t(failures), ran);
    return failures == 0 ? 0 : 1;
}
