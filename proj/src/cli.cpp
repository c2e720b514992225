#include "cgarom/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cgarom/config.hpp"
#include "cgarom/errors.hpp"
#include "cgarom/pod.hpp"
#include "cgarom/training.hpp"

namespace fs = std::filesystem;

namespace cgarom {

namespace {

// One command per process; the marker file keeps two commands from writing
// into the same run directory at once.
struct RunLock {
    fs::path file;
    bool owned = false;

    explicit RunLock(const fs::path& dir) {
        fs::create_directories(dir);
        file = dir / ".lock";
        std::FILE* f = std::fopen(file.c_str(), "wx");
        if (!f)
            throw UsageError("run directory " + dir.string() +
                             " is locked; remove " + file.string() +
                             " if no other command is running");
        std::fclose(f);
        owned = true;
    }
    ~RunLock() {
        if (owned) {
            std::error_code ec;
            fs::remove(file, ec);
        }
    }
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;
};

// Flag values arrive as strings and run through the config parser, so flags
// and file entries share one validation and precedence path. A flag can be
// registered on several subcommands; only the parsed one ever counts.
struct StringFlag {
    std::vector<CLI::Option*> opts;
    std::string value;

    bool passed() const {
        for (const CLI::Option* o : opts)
            if (o->count() > 0) return true;
        return false;
    }
};

struct OverrideText {
    std::string text;

    void add(const StringFlag& flag, const char* section, const char* key) {
        if (!flag.passed()) return;
        text += std::string("[") + section + "]\n" + key + " = " + flag.value + "\n";
    }
};

RunConfig assemble_config(const std::string& config_path, const OverrideText& flags) {
    RunConfig cfg = default_run_config();
    if (const char* env = std::getenv("CGAROM_SEED")) {
        try {
            std::size_t pos = 0;
            const unsigned long long seed = std::stoull(env, &pos);
            if (pos != std::string(env).size()) throw std::invalid_argument(env);
            apply_global_seed(cfg, seed);
        } catch (const std::exception&) {
            throw UsageError(std::string("CGAROM_SEED is not an integer: ") + env);
        }
    }
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    if (!flags.text.empty()) apply_config_text(cfg, flags.text, "command line");
    return cfg;
}

CgaRomSpec spec_for_dataset(const RunConfig& cfg, const Dataset& ds) {
    CgaRomSpec spec = cfg.model;
    spec.d = ds.manifest.d;
    spec.p = ds.manifest.p;
    spec.g = ds.manifest.g;
    spec.channels = ds.manifest.channels;
    spec.has_t = ds.manifest.has_t;
    spec.basis_kind = BasisKind::network;
    spec.alpha = cfg.train.alpha;
    spec.lambda_orth = cfg.train.lambda_orth;
    return spec;
}

// Commands that load a dataset echo that dataset's provenance, not the
// [data] defaults of this invocation.
void reflect_manifest(RunConfig& cfg, const DatasetManifest& m) {
    cfg.data.problem = m.problem;
    cfg.data.n_geom = m.n_geom;
    cfg.data.n_mu = m.n_mu;
    cfg.data.n_t = m.n_t;
    cfg.data.resolution = m.resolution;
    cfg.data.nh = m.nh;
    cfg.data.nh_min = m.nh_min;
    cfg.data.nh_max = m.nh_max;
    cfg.data.seed = m.seed;
    cfg.data.unseen_geometries = m.unseen_geometries;
}

const Normalization& require_normalization(const Dataset& ds) {
    if (!ds.manifest.normalization)
        throw UsageError("dataset carries no normalization; regenerate it");
    return *ds.manifest.normalization;
}

const std::vector<std::uint64_t>& split_ids(const Dataset& ds, const std::string& name) {
    if (name == "train") return ds.manifest.splits.train;
    if (name == "val") return ds.manifest.splits.val;
    if (name == "test") return ds.manifest.splits.test;
    throw UsageError("unknown split '" + name + "' (train, val, test)");
}

void write_summary(const fs::path& dir, const std::string& command,
                   const std::vector<std::pair<std::string, std::string>>& fields,
                   const RunConfig& cfg) {
    std::ofstream out(dir / "summary.txt", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "summary.txt").string());
    out << "command = " << command << "\n";
    for (const auto& [key, value] : fields) out << key << " = " << value << "\n";
    out << "\n" << config_echo(cfg);
    if (!out) throw IoError("failed writing " + (dir / "summary.txt").string());
}

void write_run_info(const fs::path& dir, const std::string& command,
                    const std::string& data_dir) {
    nlohmann::json j;
    j["command"] = command;
    j["data"] = fs::absolute(data_dir).string();
    std::ofstream out(dir / "run.json", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "run.json").string());
    out << j.dump(2) << "\n";
}

std::string stored_data_dir(const fs::path& run_dir) {
    const fs::path path = run_dir / "run.json";
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw UsageError("no dataset recorded in " + run_dir.string() +
                         "; pass --data explicitly");
    nlohmann::json j;
    in >> j;
    if (!j.contains("data")) throw IoError(path.string() + " lacks a data entry");
    return j["data"].get<std::string>();
}

double wall_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- command bodies -------------------------------------------------------

void cmd_generate(const RunConfig& cfg, const std::string& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset ds = generate_dataset(cfg.data);
    RunLock lock(out_dir);
    save_dataset(ds, out_dir);

    std::size_t nh_min = std::size_t(-1), nh_max = 0, nh_sum = 0;
    for (const SampleRecord& s : ds.samples) {
        nh_min = std::min(nh_min, s.cloud.size());
        nh_max = std::max(nh_max, s.cloud.size());
        nh_sum += s.cloud.size();
    }
    const double nh_mean = double(nh_sum) / double(ds.samples.size());

    write_summary(out_dir, "generate",
                  {{"out", out_dir},
                   {"n_samples", std::to_string(ds.samples.size())},
                   {"nh_min", std::to_string(nh_min)},
                   {"nh_mean", format_double(nh_mean)},
                   {"nh_max", std::to_string(nh_max)},
                   {"fingerprint", ds.manifest.fingerprint},
                   {"wall_seconds", format_double(wall_since(t0))}},
                  cfg);
    std::cout << "wrote " << ds.samples.size() << " samples to " << out_dir << " (N_h min "
              << nh_min << ", mean " << format_double(nh_mean) << ", max " << nh_max << ")\n";
}

void cmd_train(RunConfig cfg, const std::string& data_dir,
               const std::string& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset ds = load_dataset(data_dir);
    reflect_manifest(cfg, ds.manifest);

    RunLock lock(out_dir);
    CgaRom rom = CgaRom::create(spec_for_dataset(cfg, ds), require_normalization(ds),
                                cfg.train.seed);
    cfg.train.checkpoint_path = (fs::path(out_dir) / "model.ckpt").string();
    const TrainReport report = train(rom, ds, cfg.train);

    std::vector<std::vector<std::string>> rows;
    for (std::size_t e = 0; e < report.epochs.size(); ++e) {
        const EpochStats& s = report.epochs[e];
        rows.push_back({std::to_string(e + 1), format_double(s.train_loss),
                        format_double(s.train_term1), format_double(s.train_term2),
                        format_double(s.val_loss)});
    }
    write_csv((fs::path(out_dir) / "loss.csv").string(),
              {"epoch", "train_loss", "train_term1", "train_term2", "val_loss"}, rows);

    const EvalMetrics mtr = evaluate(rom, ds, ds.manifest.splits.train);
    const EvalMetrics mva = evaluate(rom, ds, ds.manifest.splits.val);
    const EvalMetrics mte = evaluate(rom, ds, ds.manifest.splits.test);

    write_run_info(out_dir, "train", data_dir);
    write_summary(out_dir, "train",
                  {{"data", data_dir},
                   {"out", out_dir},
                   {"epochs_run", std::to_string(report.epochs.size())},
                   {"best_epoch", std::to_string(report.best_epoch)},
                   {"stopped_early", report.stopped_early ? "true" : "false"},
                   {"final_train_loss", format_double(report.epochs.back().train_loss)},
                   {"final_val_loss", format_double(report.epochs.back().val_loss)},
                   {"e_r_train", format_double(mtr.e_r)},
                   {"e_r_val", format_double(mva.e_r)},
                   {"e_r_test", format_double(mte.e_r)},
                   {"e_global_test", format_double(mte.e_global)},
                   {"wall_seconds", format_double(wall_since(t0))}},
                  cfg);

    const std::size_t stride = std::max<std::size_t>(1, report.epochs.size() / 10);
    for (std::size_t e = 0; e < report.epochs.size(); ++e)
        if (e % stride == 0 || e + 1 == report.epochs.size())
            std::cout << "epoch " << e + 1 << "/" << report.epochs.size() << "  train "
                      << format_double(report.epochs[e].train_loss) << "  val "
                      << format_double(report.epochs[e].val_loss) << "\n";
    std::cout << "test E_R = " << format_double(mte.e_r)
              << "  E = " << format_double(mte.e_global) << "\n";
}

void cmd_eval(const std::string& run_dir, std::string data_dir, const std::string& split,
              double r, std::uint64_t seed) {
    if (data_dir.empty()) data_dir = stored_data_dir(run_dir);
    const Checkpoint ck = checkpoint_load((fs::path(run_dir) / "model.ckpt").string());
    const Dataset ds = load_dataset(data_dir);
    const auto& ids = split_ids(ds, split);

    const EvalMetrics m = r < 1.0 ? evaluate_subsampled(ck.rom, ds, ids, r, seed)
                                  : evaluate(ck.rom, ds, ids);

    RunLock lock(run_dir);
    write_csv((fs::path(run_dir) / ("eval_" + split + ".csv")).string(),
              {"split", "r", "e_r", "e_global", "skipped"},
              {{split, format_double(r), format_double(m.e_r), format_double(m.e_global),
                std::to_string(m.skipped)}});
    std::cout << "split " << split << "  E_R = " << format_double(m.e_r)
              << "  E = " << format_double(m.e_global) << "  skipped = " << m.skipped << "\n";
}

void cmd_pod(RunConfig cfg, const std::string& data_dir, const std::string& out_dir,
             std::size_t n_max) {
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset ds = load_dataset(data_dir);
    reflect_manifest(cfg, ds.manifest);
    const SnapshotMatrix sm = assemble_snapshots(ds, ds.manifest.splits.train);
    const std::size_t keep = n_max == 0 ? std::size_t(sm.data.cols()) : n_max;
    const PodBasis basis = compute_pod(sm.data, sm.weights, keep);

    const double total = tail_energy(basis.sigma, 0);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t n = 1; n <= basis.sigma.size(); ++n) {
        const double tail = tail_energy(basis.sigma, n);
        rows.push_back({std::to_string(n), format_double(basis.sigma[n - 1]),
                        format_double(tail),
                        format_double(total > 0.0 ? tail / total : 0.0)});
    }
    RunLock lock(out_dir);
    write_csv((fs::path(out_dir) / "pod.csv").string(), {"n", "sigma", "tail", "tail_rel"},
              rows);
    write_summary(out_dir, "pod",
                  {{"data", data_dir},
                   {"n_snapshots", std::to_string(sm.ids.size())},
                   {"modes_kept", std::to_string(std::size_t(basis.modes.cols()))},
                   {"total_energy", format_double(total)},
                   {"wall_seconds", format_double(wall_since(t0))}},
                  cfg);
    std::cout << "pod spectrum over " << sm.ids.size() << " train snapshots -> "
              << (fs::path(out_dir) / "pod.csv").string() << "\n";
}

void cmd_bae(RunConfig cfg, const std::string& data_dir, const std::string& out_dir,
             const std::vector<std::size_t>& dims) {
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset ds = load_dataset(data_dir);
    reflect_manifest(cfg, ds.manifest);
    const BaeTable table = bae_oracle(ds, dims);

    std::vector<std::vector<std::string>> rows;
    for (std::size_t k = 0; k < table.dims.size(); ++k)
        rows.push_back({std::to_string(table.dims[k]), format_double(table.cga[k]),
                        format_double(table.pod[k])});
    RunLock lock(out_dir);
    write_csv((fs::path(out_dir) / "bae.csv").string(), {"n", "bae_cga", "bae_pod"}, rows);

    std::vector<std::pair<std::string, std::string>> fields{
        {"data", data_dir},
        {"fingerprint", table.fingerprint},
        {"wall_seconds", format_double(wall_since(t0))}};
    for (const std::string& note : table.notes) fields.push_back({"note", note});
    write_summary(out_dir, "bae", fields, cfg);
    for (std::size_t k = 0; k < table.dims.size(); ++k)
        std::cout << "N = " << table.dims[k] << "  BAE_geom = " << format_double(table.cga[k])
                  << "  BAE_global = " << format_double(table.pod[k]) << "\n";
}

void cmd_sweep(RunConfig cfg, const std::string& data_dir, const std::string& out_dir,
               const std::vector<std::size_t>& modes) {
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset ds = load_dataset(data_dir);
    reflect_manifest(cfg, ds.manifest);
    RunLock lock(out_dir);
    const std::vector<SweepRow> rows =
        compression_sweep(ds, modes, spec_for_dataset(cfg, ds), cfg.train);

    std::vector<std::vector<std::string>> csv;
    for (const SweepRow& r : rows)
        csv.push_back({std::to_string(r.n_modes), std::to_string(r.latent), r.variant,
                       format_double(r.e_r), format_double(r.e_global)});
    write_csv((fs::path(out_dir) / "sweep.csv").string(),
              {"n_modes", "latent", "variant", "e_r", "e_global"}, csv);
    write_summary(out_dir, "sweep",
                  {{"data", data_dir},
                   {"rows", std::to_string(rows.size())},
                   {"wall_seconds", format_double(wall_since(t0))}},
                  cfg);
    for (const SweepRow& r : rows)
        std::cout << r.variant << "  N = " << r.n_modes << "  E_R = " << format_double(r.e_r)
                  << "\n";
}

void cmd_ablate(RunConfig cfg, const std::string& data_dir, const std::string& out_dir,
                const std::vector<std::size_t>& counts) {
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset ds = load_dataset(data_dir);
    reflect_manifest(cfg, ds.manifest);
    RunLock lock(out_dir);
    const std::vector<AblationRow> rows =
        ablate_geometries(ds, counts, spec_for_dataset(cfg, ds), cfg.train);

    std::vector<std::vector<std::string>> csv;
    for (const AblationRow& r : rows)
        csv.push_back({std::to_string(r.n_geometries), format_double(r.e_r_train),
                       format_double(r.e_r_test)});
    write_csv((fs::path(out_dir) / "ablate.csv").string(),
              {"n_geometries", "e_r_train", "e_r_test"}, csv);
    write_summary(out_dir, "ablate",
                  {{"data", data_dir},
                   {"rows", std::to_string(rows.size())},
                   {"wall_seconds", format_double(wall_since(t0))}},
                  cfg);
    for (const AblationRow& r : rows)
        std::cout << r.n_geometries << " geometries  train E_R = "
                  << format_double(r.e_r_train)
                  << "  test E_R = " << format_double(r.e_r_test) << "\n";
}

void cmd_superres(RunConfig cfg, const std::string& data_dir,
                  const std::string& out_dir, const std::vector<double>& r_train,
                  const std::vector<double>& r_test) {
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset ds = load_dataset(data_dir);
    reflect_manifest(cfg, ds.manifest);
    RunLock lock(out_dir);
    const std::vector<SuperresCell> cells =
        superres_grid(ds, r_train, r_test, spec_for_dataset(cfg, ds), cfg.train);

    std::vector<std::vector<std::string>> csv;
    for (const SuperresCell& c : cells)
        csv.push_back({format_double(c.r_train), format_double(c.r_test),
                       format_double(c.e_r)});
    write_csv((fs::path(out_dir) / "superres.csv").string(), {"r_train", "r_test", "e_r"},
              csv);
    write_summary(out_dir, "superres",
                  {{"data", data_dir},
                   {"cells", std::to_string(cells.size())},
                   {"wall_seconds", format_double(wall_since(t0))}},
                  cfg);
    for (const SuperresCell& c : cells)
        std::cout << "r_train = " << format_double(c.r_train)
                  << "  r_test = " << format_double(c.r_test)
                  << "  E_R = " << format_double(c.e_r) << "\n";
}

} // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"geometry-aware reduced-order models on point clouds"};
    app.require_subcommand(1);

    // shared option storage; every value funnels through the config parser
    std::string config_path, data_dir, out_dir, run_dir, split = "test";
    std::vector<std::size_t> modes, counts;
    std::vector<double> r_train_list, r_test_list;
    double eval_r = 1.0;
    std::uint64_t eval_seed = 0;
    std::size_t pod_n_max = 0;

    auto add_str = [](CLI::App* cmd, StringFlag& f, const char* name, const char* desc) {
        f.opts.push_back(cmd->add_option(name, f.value, desc));
    };

    // [data] overrides
    StringFlag problem, n_geom, n_mu, n_t, resolution, nh, nh_min, nh_max, gen_seed;
    StringFlag frac_train, frac_val, frac_test;
    bool mixed_geometries = false;
    // [model] overrides
    StringFlag n_modes, latent, basis_width, basis_depth, coder_width, coder_depth;
    StringFlag map_width, map_depth, use_zeta;
    // [train] overrides
    StringFlag epochs, batch_size, lr, r_train, alpha, lambda_orth, train_seed;
    StringFlag checkpoint_every, patience;

    const auto add_config_flag = [&config_path](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "key = value config file");
    };
    const auto add_model_train_flags = [&](CLI::App* cmd) {
        add_str(cmd, n_modes, "--n-modes", "reduced basis size N");
        add_str(cmd, latent, "--latent", "latent dimension");
        add_str(cmd, basis_width, "--basis-width", "basis net width");
        add_str(cmd, basis_depth, "--basis-depth", "basis net residual blocks");
        add_str(cmd, coder_width, "--coder-width", "encoder/decoder width");
        add_str(cmd, coder_depth, "--coder-depth", "encoder/decoder depth");
        add_str(cmd, map_width, "--map-width", "reduced map width");
        add_str(cmd, map_depth, "--map-depth", "reduced map depth");
        add_str(cmd, use_zeta, "--use-zeta", "weight projections by stored zeta (true/false)");
        add_str(cmd, epochs, "--epochs", "training epochs");
        add_str(cmd, batch_size, "--batch-size", "samples per optimizer step");
        add_str(cmd, lr, "--lr", "Adam learning rate");
        add_str(cmd, r_train, "--r-train", "training cloud subsampling ratio");
        add_str(cmd, alpha, "--alpha", "latent consistency weight");
        add_str(cmd, lambda_orth, "--lambda-orth", "basis orthogonality penalty");
        add_str(cmd, train_seed, "--seed", "training seed");
        add_str(cmd, checkpoint_every, "--checkpoint-every", "epochs between checkpoints");
        add_str(cmd, patience, "--patience", "early stopping patience (0 = off)");
    };
    const auto collect_overrides = [&]() {
        OverrideText o;
        o.add(problem, "data", "problem");
        o.add(n_geom, "data", "n_geom");
        o.add(n_mu, "data", "n_mu");
        o.add(n_t, "data", "n_t");
        o.add(resolution, "data", "resolution");
        o.add(nh, "data", "nh");
        o.add(nh_min, "data", "nh_min");
        o.add(nh_max, "data", "nh_max");
        o.add(gen_seed, "data", "seed");
        o.add(frac_train, "data", "frac_train");
        o.add(frac_val, "data", "frac_val");
        o.add(frac_test, "data", "frac_test");
        if (mixed_geometries) o.text += "[data]\nunseen_geometries = false\n";
        o.add(n_modes, "model", "n_modes");
        o.add(latent, "model", "latent");
        o.add(basis_width, "model", "basis_width");
        o.add(basis_depth, "model", "basis_depth");
        o.add(coder_width, "model", "coder_width");
        o.add(coder_depth, "model", "coder_depth");
        o.add(map_width, "model", "map_width");
        o.add(map_depth, "model", "map_depth");
        o.add(use_zeta, "model", "use_zeta");
        o.add(epochs, "train", "epochs");
        o.add(batch_size, "train", "batch_size");
        o.add(lr, "train", "lr");
        o.add(r_train, "train", "r_train");
        o.add(alpha, "train", "alpha");
        o.add(lambda_orth, "train", "lambda_orth");
        o.add(train_seed, "train", "seed");
        o.add(checkpoint_every, "train", "checkpoint_every");
        o.add(patience, "train", "patience");
        return o;
    };
    const auto make_config = [&]() { return assemble_config(config_path, collect_overrides()); };

    CLI::App* generate = app.add_subcommand("generate", "build a manufactured dataset");
    add_config_flag(generate);
    generate->add_option("--out", out_dir, "dataset directory")->required();
    add_str(generate, problem, "--problem", "stenosis2d or hole2d");
    add_str(generate, n_geom, "--n-geom", "geometry count");
    add_str(generate, n_mu, "--n-mu", "physical parameter count per geometry");
    add_str(generate, n_t, "--n-t", "time steps per parameter");
    add_str(generate, resolution, "--resolution", "fixed or multi");
    add_str(generate, nh, "--nh", "fixed-resolution point count");
    add_str(generate, nh_min, "--nh-min", "multi-resolution lower bound");
    add_str(generate, nh_max, "--nh-max", "multi-resolution upper bound");
    add_str(generate, gen_seed, "--seed", "generation seed");
    add_str(generate, frac_train, "--frac-train", "train split fraction");
    add_str(generate, frac_val, "--frac-val", "val split fraction");
    add_str(generate, frac_test, "--frac-test", "test split fraction");
    generate->add_flag("--mixed-geometries", mixed_geometries,
                       "split by sample instead of holding out whole geometries");
    generate->callback([&]() { cmd_generate(make_config(), out_dir); });

    CLI::App* train_cmd = app.add_subcommand("train", "train the geometry-aware model");
    add_config_flag(train_cmd);
    train_cmd->add_option("--data", data_dir, "dataset directory")->required();
    train_cmd->add_option("--out", out_dir, "run directory")->required();
    add_model_train_flags(train_cmd);
    train_cmd->callback([&]() { cmd_train(make_config(), data_dir, out_dir); });

    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a trained run");
    eval_cmd->add_option("--run", run_dir, "run directory with model.ckpt")->required();
    eval_cmd->add_option("--data", data_dir, "dataset directory (default: the run's)");
    eval_cmd->add_option("--split", split, "train, val or test");
    eval_cmd->add_option("--r", eval_r, "evaluation cloud subsampling ratio");
    eval_cmd->add_option("--seed", eval_seed, "subsampling seed");
    eval_cmd->callback([&]() { cmd_eval(run_dir, data_dir, split, eval_r, eval_seed); });

    CLI::App* pod_cmd = app.add_subcommand("pod", "snapshot spectrum of the train split");
    add_config_flag(pod_cmd);
    pod_cmd->add_option("--data", data_dir, "fixed-resolution dataset directory")->required();
    pod_cmd->add_option("--out", out_dir, "run directory")->required();
    pod_cmd->add_option("--n-max", pod_n_max, "modes to keep (0 = all)");
    pod_cmd->callback([&]() { cmd_pod(make_config(), data_dir, out_dir, pod_n_max); });

    CLI::App* bae_cmd = app.add_subcommand(
        "bae", "best-approximation errors: per-geometry vs global basis");
    add_config_flag(bae_cmd);
    bae_cmd->add_option("--data", data_dir, "fixed-resolution dataset directory")->required();
    bae_cmd->add_option("--out", out_dir, "run directory")->required();
    bae_cmd->add_option("--modes", modes, "comma-separated basis sizes")
        ->required()
        ->delimiter(',');
    bae_cmd->callback([&]() { cmd_bae(make_config(), data_dir, out_dir, modes); });

    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "compression study: trained model vs frozen basis");
    add_config_flag(sweep_cmd);
    sweep_cmd->add_option("--data", data_dir, "fixed-resolution dataset directory")->required();
    sweep_cmd->add_option("--out", out_dir, "run directory")->required();
    sweep_cmd->add_option("--modes", modes, "comma-separated basis sizes")
        ->required()
        ->delimiter(',');
    add_model_train_flags(sweep_cmd);
    sweep_cmd->callback([&]() { cmd_sweep(make_config(), data_dir, out_dir, modes); });

    CLI::App* ablate_cmd = app.add_subcommand("ablate", "error vs number of training geometries");
    add_config_flag(ablate_cmd);
    ablate_cmd->add_option("--data", data_dir, "dataset directory")->required();
    ablate_cmd->add_option("--out", out_dir, "run directory")->required();
    ablate_cmd->add_option("--counts", counts, "comma-separated geometry counts")
        ->required()
        ->delimiter(',');
    add_model_train_flags(ablate_cmd);
    ablate_cmd->callback([&]() { cmd_ablate(make_config(), data_dir, out_dir, counts); });

    CLI::App* superres_cmd =
        app.add_subcommand("superres", "train and test across cloud resolutions");
    add_config_flag(superres_cmd);
    superres_cmd->add_option("--data", data_dir, "dataset directory")->required();
    superres_cmd->add_option("--out", out_dir, "run directory")->required();
    superres_cmd->add_option("--rtrain", r_train_list, "training subsampling ratios")
        ->required()
        ->delimiter(',');
    superres_cmd->add_option("--rtest", r_test_list, "evaluation subsampling ratios")
        ->required()
        ->delimiter(',');
    add_model_train_flags(superres_cmd);
    superres_cmd->callback(
        [&]() { cmd_superres(make_config(), data_dir, out_dir, r_train_list, r_test_list); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}

} // namespace cgarom
