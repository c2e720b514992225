#include "cgarom/training.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "cgarom/errors.hpp"
#include "cgarom/pod.hpp"

namespace cgarom {

namespace {

// TrainConfig::lr is the initial Adam step size; it decays geometrically per epoch.
constexpr double kLrDecayPerEpoch = 0.9985;

void validate_train_config(const TrainConfig& cfg) {
    if (cfg.epochs == 0) throw UsageError("epochs must be at least 1");
    if (cfg.batch_size == 0) throw UsageError("batch size must be at least 1");
    if (!(cfg.r_train > 0.0) || cfg.r_train > 1.0)
        throw UsageError("r_train must be in (0, 1]");
    if (cfg.alpha < 0.0 || cfg.lambda_orth < 0.0)
        throw UsageError("loss weights must be nonnegative");
}

TrainReport train_impl(CgaRom& rom, AdamState& adam, std::size_t start_epoch, const Dataset& ds,
                       const std::vector<std::uint64_t>& train_ids,
                       const std::vector<std::uint64_t>& val_ids, const TrainConfig& cfg) {
    validate_train_config(cfg);
    if (train_ids.empty()) throw UsageError("training needs a non-empty train split");
    if (val_ids.empty()) throw UsageError("training needs a non-empty val split");
    if (start_epoch > cfg.epochs)
        throw UsageError("resume epoch lies beyond the configured epoch budget");

    rom.spec.alpha = cfg.alpha;
    rom.spec.lambda_orth = cfg.lambda_orth;

    TrainReport report;
    report.config = cfg;
    const auto t0 = std::chrono::steady_clock::now();

    // parameters at the end of the last finished epoch, for divergence recovery
    std::vector<double> last_good = rom.params.flatten();
    double best_val = std::numeric_limits<double>::infinity();
    GradientSet grads(rom.params);

    for (std::size_t epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        // The step size anneals so the loss settles instead of jittering at a
        // constant-rate noise floor. Indexed by absolute epoch, never by the
        // run's length: a resumed run must follow the exact trajectory of an
        // uninterrupted one.
        const AdamConfig acfg{cfg.lr * std::pow(kLrDecayPerEpoch, double(epoch)), 0.9, 0.999,
                              1e-8};
        std::vector<std::uint64_t> order = train_ids;
        Rng shuffle_rng(mix_seeds(cfg.seed, epoch));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0, t1_sum = 0.0, t2_sum = 0.0;
        for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
            const std::size_t b_end = std::min(order.size(), b + cfg.batch_size);
            for (std::size_t k = b; k < b_end; ++k) {
                const SampleRecord& rec = ds.by_id(order[k]);
                LossBreakdown lb;
                if (cfg.r_train < 1.0) {
                    const SampleRecord sub =
                        subsample(rec, cfg.r_train, mix_seeds(cfg.seed, epoch, order[k]));
                    lb = loss_cga_grad(rom, sub, grads);
                } else {
                    lb = loss_cga_grad(rom, rec, grads);
                }
                if (!std::isfinite(lb.loss)) {
                    rom.params.unflatten(last_good);
                    throw NumericalError(
                        "training diverged (non-finite loss) in epoch " +
                        std::to_string(epoch + 1) +
                        "; parameters restored to the last finished epoch");
                }
                loss_sum += lb.loss;
                t1_sum += lb.term1;
                t2_sum += lb.term2;
            }
            grads.scale(1.0 / double(b_end - b));
            adam.step(rom.params, grads, acfg);
        }

        EpochStats stats;
        stats.train_loss = loss_sum / double(order.size());
        stats.train_term1 = t1_sum / double(order.size());
        stats.train_term2 = t2_sum / double(order.size());

        double val_sum = 0.0;
        for (std::uint64_t id : val_ids) val_sum += loss_cga(rom, ds.by_id(id)).loss;
        stats.val_loss = val_sum / double(val_ids.size());
        if (!std::isfinite(stats.val_loss)) {
            rom.params.unflatten(last_good);
            throw NumericalError("validation loss became non-finite in epoch " +
                                 std::to_string(epoch + 1) +
                                 "; parameters restored to the last finished epoch");
        }
        report.epochs.push_back(stats);

        if (stats.val_loss < best_val) {
            best_val = stats.val_loss;
            report.best_epoch = epoch + 1;
        }
        last_good = rom.params.flatten();

        if (!cfg.checkpoint_path.empty() && cfg.checkpoint_every > 0 &&
            (epoch + 1) % cfg.checkpoint_every == 0)
            checkpoint_save(rom, cfg.checkpoint_path, &adam, epoch + 1);

        if (cfg.patience > 0 && (epoch + 1) >= report.best_epoch + cfg.patience) {
            report.stopped_early = true;
            break;
        }
    }

    if (!cfg.checkpoint_path.empty())
        checkpoint_save(rom, cfg.checkpoint_path, &adam,
                        start_epoch + report.epochs.size());

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

} // namespace

TrainReport train(CgaRom& rom, const Dataset& ds, const TrainConfig& config) {
    return train_on(rom, ds, ds.manifest.splits.train, ds.manifest.splits.val, config);
}

TrainReport train_on(CgaRom& rom, const Dataset& ds, const std::vector<std::uint64_t>& train_ids,
                     const std::vector<std::uint64_t>& val_ids, const TrainConfig& config) {
    AdamState adam(rom.params);
    return train_impl(rom, adam, 0, ds, train_ids, val_ids, config);
}

TrainReport train_resume(CgaRom& rom, AdamState& adam, std::size_t start_epoch,
                         const Dataset& ds, const std::vector<std::uint64_t>& train_ids,
                         const std::vector<std::uint64_t>& val_ids, const TrainConfig& config) {
    return train_impl(rom, adam, start_epoch, ds, train_ids, val_ids, config);
}

namespace {

EvalMetrics evaluate_records(const CgaRom& rom,
                             const std::vector<const SampleRecord*>& records) {
    EvalMetrics out;
    double er_sum = 0.0, num = 0.0, den = 0.0;
    std::size_t kept = 0;
    for (const SampleRecord* rec : records) {
        const Tensor pred = forward_infer(rom, rec->t, rec->mu, rec->xi, rec->cloud.points);
        double du2 = 0.0, nu2 = 0.0;
        for (std::size_t i = 0; i < rec->values.size(); ++i) {
            const double diff = rec->values[i] - pred[i];
            du2 += diff * diff;
            nu2 += rec->values[i] * rec->values[i];
        }
        if (nu2 == 0.0) {
            ++out.skipped;
            continue;
        }
        er_sum += std::sqrt(du2 / nu2);
        num += du2;
        den += nu2;
        ++kept;
    }
    if (kept == 0) throw UsageError("every requested sample has zero ground-truth norm");
    out.e_r = er_sum / double(kept);
    out.e_global = std::sqrt(num / den);
    return out;
}

} // namespace

EvalMetrics evaluate(const CgaRom& rom, const Dataset& ds,
                     const std::vector<std::uint64_t>& ids) {
    if (ids.empty()) throw UsageError("no sample ids to evaluate");
    std::vector<const SampleRecord*> records;
    records.reserve(ids.size());
    for (std::uint64_t id : ids) records.push_back(&ds.by_id(id));
    return evaluate_records(rom, records);
}

EvalMetrics evaluate_subsampled(const CgaRom& rom, const Dataset& ds,
                                const std::vector<std::uint64_t>& ids, double r,
                                std::uint64_t seed) {
    if (ids.empty()) throw UsageError("no sample ids to evaluate");
    std::vector<SampleRecord> subs;
    subs.reserve(ids.size());
    for (std::uint64_t id : ids) subs.push_back(subsample(ds.by_id(id), r, mix_seeds(seed, id)));
    std::vector<const SampleRecord*> records;
    records.reserve(subs.size());
    for (const SampleRecord& s : subs) records.push_back(&s);
    return evaluate_records(rom, records);
}

// ---- checkpoints ----------------------------------------------------------

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string affines_line(const std::vector<Normalization::Affine>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ';';
        out += fmt17(v[i].shift) + "," + fmt17(v[i].scale);
    }
    return out;
}

std::vector<Normalization::Affine> parse_affines(const std::string& line) {
    std::vector<Normalization::Affine> out;
    if (line.empty()) return out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ';')) {
        const auto comma = item.find(',');
        if (comma == std::string::npos) throw IoError("malformed normalization in checkpoint");
        out.push_back({std::stod(item.substr(0, comma)), std::stod(item.substr(comma + 1))});
    }
    return out;
}

void put_f64_le(std::vector<std::uint8_t>& buf, double v) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int k = 0; k < 8; ++k) buf.push_back(std::uint8_t(bits >> (8 * k)));
}

double get_f64_le(const std::uint8_t* p) {
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= std::uint64_t(p[k]) << (8 * k);
    return std::bit_cast<double>(bits);
}

const char* kind_name(BasisKind k) {
    return k == BasisKind::network ? "network" : "matrix";
}

} // namespace

void checkpoint_save(const CgaRom& rom, const std::string& path, const AdamState* adam,
                     std::size_t epoch) {
    std::string header;
    header += "cgarom-checkpoint v1\n";
    const CgaRomSpec& sp = rom.spec;
    const auto line = [&header](const std::string& key, const std::string& value) {
        header += key + "=" + value + "\n";
    };
    line("n_modes", std::to_string(sp.n_modes));
    line("latent", std::to_string(sp.latent));
    line("channels", std::to_string(sp.channels));
    line("d", std::to_string(sp.d));
    line("p", std::to_string(sp.p));
    line("g", std::to_string(sp.g));
    line("has_t", sp.has_t ? "1" : "0");
    line("basis_width", std::to_string(sp.basis_width));
    line("basis_depth", std::to_string(sp.basis_depth));
    line("coder_width", std::to_string(sp.coder_width));
    line("coder_depth", std::to_string(sp.coder_depth));
    line("map_width", std::to_string(sp.map_width));
    line("map_depth", std::to_string(sp.map_depth));
    line("basis_kind", kind_name(sp.basis_kind));
    line("use_zeta", sp.use_zeta ? "1" : "0");
    line("alpha", fmt17(sp.alpha));
    line("lambda_orth", fmt17(sp.lambda_orth));
    line("norm_t", rom.norm.t ? fmt17(rom.norm.t->shift) + "," + fmt17(rom.norm.t->scale)
                              : std::string("none"));
    line("norm_mu", affines_line(rom.norm.mu));
    line("norm_xi", affines_line(rom.norm.xi));
    line("norm_x", affines_line(rom.norm.x));
    line("norm_value", affines_line(rom.norm.value));
    line("fixed_basis", std::to_string(rom.fixed_basis.rows()) + "," +
                            std::to_string(rom.fixed_basis.cols()));
    line("epoch", std::to_string(epoch));
    line("adam", adam ? std::to_string(adam->step_count()) : std::string("none"));
    line("params", std::to_string(rom.params.count()));
    for (std::size_t i = 0; i < rom.params.count(); ++i)
        line("param", rom.params.name(i) + "," + std::to_string(rom.params.tensor(i).rows()) +
                          "," + std::to_string(rom.params.tensor(i).cols()));

    const std::vector<double> flat = rom.params.flatten();
    std::size_t blob_count = flat.size() + rom.fixed_basis.size();
    if (adam) blob_count += 2 * flat.size();
    line("blob", std::to_string(blob_count));
    header += "---\n";

    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    bytes.reserve(bytes.size() + 8 * blob_count + 4);
    for (double v : flat) put_f64_le(bytes, v);
    for (std::size_t i = 0; i < rom.fixed_basis.size(); ++i)
        put_f64_le(bytes, rom.fixed_basis[i]);
    if (adam) {
        for (double v : adam->m()) put_f64_le(bytes, v);
        for (double v : adam->v()) put_f64_le(bytes, v);
    }
    const std::uint32_t crc = crc32(bytes.data(), bytes.size());
    for (int k = 0; k < 4; ++k) bytes.push_back(std::uint8_t(crc >> (8 * k)));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw IoError("failed writing " + path);
}

Checkpoint checkpoint_load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < 4) throw IoError(path + " is not a checkpoint");

    std::uint32_t stored = 0;
    for (int k = 0; k < 4; ++k)
        stored |= std::uint32_t(bytes[bytes.size() - 4 + k]) << (8 * k);
    if (crc32(bytes.data(), bytes.size() - 4) != stored)
        throw IoError("checkpoint checksum mismatch in " + path);

    const std::string marker = "\n---\n";
    const std::string text(bytes.begin(), bytes.end());
    const auto mark = text.find(marker);
    if (mark == std::string::npos || text.rfind("cgarom-checkpoint v1\n", 0) != 0)
        throw IoError(path + " is not a checkpoint");
    const std::size_t blob_off = mark + marker.size();

    std::map<std::string, std::string> kv;
    std::vector<std::string> param_lines;
    {
        std::stringstream ss(text.substr(0, mark));
        std::string ln;
        std::getline(ss, ln);  // magic
        while (std::getline(ss, ln)) {
            const auto eq = ln.find('=');
            if (eq == std::string::npos) throw IoError("malformed checkpoint header line: " + ln);
            const std::string key = ln.substr(0, eq);
            if (key == "param")
                param_lines.push_back(ln.substr(eq + 1));
            else
                kv[key] = ln.substr(eq + 1);
        }
    }
    const auto need = [&kv, &path](const char* key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw IoError("checkpoint " + path + " lacks field " + key);
        return it->second;
    };

    CgaRomSpec sp;
    sp.n_modes = std::stoul(need("n_modes"));
    sp.latent = std::stoul(need("latent"));
    sp.channels = std::stoul(need("channels"));
    sp.d = std::stoul(need("d"));
    sp.p = std::stoul(need("p"));
    sp.g = std::stoul(need("g"));
    sp.has_t = need("has_t") == "1";
    sp.basis_width = std::stoul(need("basis_width"));
    sp.basis_depth = std::stoul(need("basis_depth"));
    sp.coder_width = std::stoul(need("coder_width"));
    sp.coder_depth = std::stoul(need("coder_depth"));
    sp.map_width = std::stoul(need("map_width"));
    sp.map_depth = std::stoul(need("map_depth"));
    sp.basis_kind = need("basis_kind") == "network" ? BasisKind::network : BasisKind::fixed_matrix;
    sp.use_zeta = need("use_zeta") == "1";
    sp.alpha = std::stod(need("alpha"));
    sp.lambda_orth = std::stod(need("lambda_orth"));

    Normalization norm;
    if (need("norm_t") != "none") {
        const std::string& t = need("norm_t");
        const auto comma = t.find(',');
        norm.t = Normalization::Affine{std::stod(t.substr(0, comma)),
                                       std::stod(t.substr(comma + 1))};
    }
    norm.mu = parse_affines(need("norm_mu"));
    norm.xi = parse_affines(need("norm_xi"));
    norm.x = parse_affines(need("norm_x"));
    norm.value = parse_affines(need("norm_value"));

    Checkpoint ck;
    ck.rom = CgaRom::create(sp, norm, 0);
    ck.epoch = std::stoul(need("epoch"));

    if (ck.rom.params.count() != std::stoul(need("params")) ||
        param_lines.size() != ck.rom.params.count())
        throw IoError("checkpoint parameter layout does not match its hyperparameters");
    for (std::size_t i = 0; i < param_lines.size(); ++i) {
        std::stringstream ss(param_lines[i]);
        std::string name, rows, cols;
        std::getline(ss, name, ',');
        std::getline(ss, rows, ',');
        std::getline(ss, cols, ',');
        const Tensor& t = ck.rom.params.tensor(i);
        if (name != ck.rom.params.name(i) || std::stoul(rows) != t.rows() ||
            std::stoul(cols) != t.cols())
            throw IoError("checkpoint parameter layout does not match its hyperparameters");
    }

    const std::string& fb = need("fixed_basis");
    const auto comma = fb.find(',');
    const std::size_t fb_rows = std::stoul(fb.substr(0, comma));
    const std::size_t fb_cols = std::stoul(fb.substr(comma + 1));

    const std::size_t n_params = ck.rom.params.total_size();
    ck.has_adam = need("adam") != "none";
    if (ck.has_adam) ck.adam_step = std::stoul(need("adam"));
    std::size_t blob_count = n_params + fb_rows * fb_cols + (ck.has_adam ? 2 * n_params : 0);
    if (blob_count != std::stoul(need("blob")) ||
        blob_off + 8 * blob_count + 4 != bytes.size())
        throw IoError("checkpoint blob size does not match its header");

    const std::uint8_t* p = bytes.data() + blob_off;
    std::vector<double> flat(n_params);
    for (double& v : flat) {
        v = get_f64_le(p);
        p += 8;
    }
    ck.rom.params.unflatten(flat);
    if (fb_rows * fb_cols > 0) {
        ck.rom.fixed_basis = Tensor(fb_rows, fb_cols);
        for (std::size_t i = 0; i < ck.rom.fixed_basis.size(); ++i) {
            ck.rom.fixed_basis[i] = get_f64_le(p);
            p += 8;
        }
    }
    if (ck.has_adam) {
        ck.adam_m.resize(n_params);
        ck.adam_v.resize(n_params);
        for (double& v : ck.adam_m) {
            v = get_f64_le(p);
            p += 8;
        }
        for (double& v : ck.adam_v) {
            v = get_f64_le(p);
            p += 8;
        }
    }
    return ck;
}

void require_matching_spec(const CgaRomSpec& expected, const CgaRomSpec& found) {
    const auto fail = [](const char* what) {
        throw UsageError(std::string("checkpoint hyperparameter mismatch: ") + what);
    };
    if (expected.n_modes != found.n_modes) fail("n_modes");
    if (expected.latent != found.latent) fail("latent");
    if (expected.channels != found.channels) fail("channels");
    if (expected.d != found.d) fail("d");
    if (expected.p != found.p) fail("p");
    if (expected.g != found.g) fail("g");
    if (expected.has_t != found.has_t) fail("has_t");
    if (expected.basis_width != found.basis_width) fail("basis_width");
    if (expected.basis_depth != found.basis_depth) fail("basis_depth");
    if (expected.coder_width != found.coder_width) fail("coder_width");
    if (expected.coder_depth != found.coder_depth) fail("coder_depth");
    if (expected.map_width != found.map_width) fail("map_width");
    if (expected.map_depth != found.map_depth) fail("map_depth");
    if (expected.basis_kind != found.basis_kind) fail("basis_kind");
}

// ---- study harnesses --------------------------------------------------

Tensor snapshot_basis(const Dataset& ds, const std::vector<std::uint64_t>& train_ids,
                      const Normalization& norm, std::size_t n_modes) {
    if (ds.manifest.channels != 1)
        throw UsageError("snapshot bases are implemented for single-channel datasets");
    SnapshotMatrix sm = assemble_snapshots(ds, train_ids);
    for (std::size_t i = 0; i < sm.data.size(); ++i)
        sm.data[i] = Normalization::apply(sm.data[i], norm.value[0]);
    PodBasis basis = compute_pod(sm.data, sm.weights, n_modes);
    if (basis.modes.cols() < n_modes)
        throw UsageError("train split provides only " + std::to_string(basis.modes.cols()) +
                         " snapshot modes, " + std::to_string(n_modes) + " requested");
    return basis.modes;
}

std::vector<SweepRow> compression_sweep(const Dataset& ds, const std::vector<std::size_t>& n_list,
                                        const CgaRomSpec& base, const TrainConfig& config) {
    if (n_list.empty()) throw UsageError("no reduced dimensions given");
    if (!ds.manifest.normalization)
        throw UsageError("dataset has no normalization; regenerate it first");
    const Normalization& norm = *ds.manifest.normalization;

    std::vector<SweepRow> rows;
    for (std::size_t n : n_list) {
        const std::size_t l = std::min<std::size_t>(n, 10);

        CgaRomSpec cga = base;
        cga.n_modes = n;
        cga.latent = l;
        cga.basis_kind = BasisKind::network;
        CgaRom rom = CgaRom::create(cga, norm, mix_seeds(config.seed, n, 1));
        train(rom, ds, config);
        EvalMetrics ev = evaluate(rom, ds, ds.manifest.splits.test);
        rows.push_back({n, l, "cga", ev.e_r, ev.e_global});

        CgaRomSpec pod = base;
        pod.n_modes = n;
        pod.latent = l;
        pod.basis_kind = BasisKind::fixed_matrix;
        pod.basis_width = 1;
        pod.basis_depth = 1;
        // project against the reference measure the modes are orthonormal in
        pod.use_zeta = !ds.samples.empty() && ds.samples.front().cloud.has_zeta();
        CgaRom prom = CgaRom::create(pod, norm, mix_seeds(config.seed, n, 2));
        prom.fixed_basis = snapshot_basis(ds, ds.manifest.splits.train, norm, n);
        train(prom, ds, config);
        EvalMetrics pev = evaluate(prom, ds, ds.manifest.splits.test);
        rows.push_back({n, l, "pod", pev.e_r, pev.e_global});
    }
    return rows;
}

std::vector<AblationRow> ablate_geometries(const Dataset& ds,
                                           const std::vector<std::size_t>& counts,
                                           const CgaRomSpec& base, const TrainConfig& config) {
    if (counts.empty()) throw UsageError("no geometry counts given");

    // geometries present in the train split, keyed by their xi vector
    std::map<std::string, std::vector<std::uint64_t>> by_geom;
    std::vector<std::string> order_keys;
    for (std::uint64_t id : ds.manifest.splits.train) {
        const SampleRecord& s = ds.by_id(id);
        std::string key(reinterpret_cast<const char*>(s.xi.data()),
                        s.xi.size() * sizeof(double));
        auto [it, inserted] = by_geom.try_emplace(key);
        if (inserted) order_keys.push_back(key);
        it->second.push_back(id);
    }
    const std::size_t max_count = *std::max_element(counts.begin(), counts.end());
    if (max_count > order_keys.size())
        throw UsageError("requested " + std::to_string(max_count) +
                         " training geometries but the train split has only " +
                         std::to_string(order_keys.size()));

    Rng rng(mix_seeds(config.seed, 0xAB7A));
    rng.shuffle(order_keys);

    std::vector<AblationRow> rows;
    for (std::size_t count : counts) {
        std::vector<std::uint64_t> subset;
        for (std::size_t k = 0; k < count; ++k)
            for (std::uint64_t id : by_geom[order_keys[k]]) subset.push_back(id);
        std::sort(subset.begin(), subset.end());

        CgaRom rom = CgaRom::create(base, *ds.manifest.normalization,
                                    mix_seeds(config.seed, count, 3));
        train_on(rom, ds, subset, ds.manifest.splits.val, config);
        AblationRow row;
        row.n_geometries = count;
        row.e_r_train = evaluate(rom, ds, subset).e_r;
        row.e_r_test = evaluate(rom, ds, ds.manifest.splits.test).e_r;
        rows.push_back(row);
    }
    return rows;
}

std::vector<SuperresCell> superres_grid(const Dataset& ds, const std::vector<double>& r_train_list,
                                        const std::vector<double>& r_test_list,
                                        const CgaRomSpec& base, const TrainConfig& config) {
    if (r_train_list.empty() || r_test_list.empty())
        throw UsageError("super-resolution grid needs train and test ratios");

    std::vector<SuperresCell> cells;
    for (std::size_t k = 0; k < r_train_list.size(); ++k) {
        TrainConfig cfg = config;
        cfg.r_train = r_train_list[k];
        CgaRom rom = CgaRom::create(base, *ds.manifest.normalization,
                                    mix_seeds(config.seed, k, 4));
        train(rom, ds, cfg);
        for (double r_test : r_test_list) {
            EvalMetrics ev = evaluate_subsampled(rom, ds, ds.manifest.splits.test, r_test,
                                                 mix_seeds(config.seed, 0x7E57));
            cells.push_back({r_train_list[k], r_test, ev.e_r});
        }
    }
    return cells;
}

// ---- report helpers ---------------------------------------------------

std::vector<double> moving_average(const std::vector<double>& values, std::size_t window) {
    if (window == 0) throw UsageError("moving average window must be positive");
    std::vector<double> out(values.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        acc += values[i];
        if (i >= window) acc -= values[i - window];
        out[i] = acc / double(std::min(window, i + 1));
    }
    return out;
}

std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out << ',';
        out << header[i];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << row[i];
        }
        out << '\n';
    }
    if (!out) throw IoError("failed writing " + path);
}

} // namespace cgarom
