#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cgarom/dataset.hpp"
#include "cgarom/model.hpp"
#include "cgarom/net.hpp"

namespace cgarom {

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 8;
    double lr = 3e-4;
    double r_train = 1.0;      // per-epoch cloud subsampling ratio
    double alpha = 1.0;        // copied onto the model before training
    double lambda_orth = 0.0;  // copied onto the model before training
    std::uint64_t seed = 0;
    std::size_t checkpoint_every = 0;  // epochs between checkpoints, 0 = final only
    std::size_t patience = 0;          // epochs without val improvement, 0 = off
    std::string checkpoint_path;       // empty = keep everything in memory
};

struct EpochStats {
    double train_loss = 0.0;    // mean per-sample loss over the epoch
    double train_term1 = 0.0;
    double train_term2 = 0.0;
    double val_loss = 0.0;      // mean full-cloud loss over the val split
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    double wall_seconds = 0.0;
    std::size_t best_epoch = 0;  // 1-based epoch with the lowest val loss
    bool stopped_early = false;
    TrainConfig config;
};

// One pass of the seeded loop: shuffle train ids per epoch, subsample each
// sample's cloud afresh (r_train), average gradients over a batch, Adam step.
// Deterministic for a fixed (seed, config, dataset). A non-finite loss aborts
// with NumericalError after restoring the parameters of the last finished
// epoch. The manifest's train/val splits are used.
TrainReport train(CgaRom& rom, const Dataset& ds, const TrainConfig& config);

// Same loop on explicit id lists (ablation studies train on subsets).
TrainReport train_on(CgaRom& rom, const Dataset& ds, const std::vector<std::uint64_t>& train_ids,
                     const std::vector<std::uint64_t>& val_ids, const TrainConfig& config);

// Continues an interrupted run: epochs [start_epoch, config.epochs) with the
// restored optimizer state. Reproduces the uninterrupted schedule because all
// per-epoch randomness is derived from (seed, epoch, sample id).
TrainReport train_resume(CgaRom& rom, AdamState& adam, std::size_t start_epoch,
                         const Dataset& ds, const std::vector<std::uint64_t>& train_ids,
                         const std::vector<std::uint64_t>& val_ids, const TrainConfig& config);

struct EvalMetrics {
    double e_r = 0.0;       // mean per-sample relative nodal 2-norm error
    double e_global = 0.0;  // sqrt(sum |u-uhat|^2 / sum |u|^2)
    std::size_t skipped = 0;  // zero-norm ground-truth samples excluded
};

// Denormalized errors on each sample's own cloud.
EvalMetrics evaluate(const CgaRom& rom, const Dataset& ds, const std::vector<std::uint64_t>& ids);

// Same metrics on seeded r-subsampled clouds (super-resolution studies).
EvalMetrics evaluate_subsampled(const CgaRom& rom, const Dataset& ds,
                                const std::vector<std::uint64_t>& ids, double r,
                                std::uint64_t seed);

// ---- model checkpoints ------------------------------------------------

struct Checkpoint {
    CgaRom rom;
    std::size_t epoch = 0;
    bool has_adam = false;
    std::size_t adam_step = 0;
    std::vector<double> adam_m, adam_v;
};

// Text header (hyperparameters, normalization, shapes) followed by the f64
// parameter blob in declared order, the fixed basis when present, optional
// optimizer moments, and a trailing CRC32. Round trips bit-exactly.
void checkpoint_save(const CgaRom& rom, const std::string& path, const AdamState* adam = nullptr,
                     std::size_t epoch = 0);
Checkpoint checkpoint_load(const std::string& path);

// Throws UsageError naming the first differing hyperparameter.
void require_matching_spec(const CgaRomSpec& expected, const CgaRomSpec& found);

// ---- study harnesses ---------------------------------------------------

struct SweepRow {
    std::size_t n_modes = 0, latent = 0;
    std::string variant;  // "cga" | "pod"
    double e_r = 0.0, e_global = 0.0;
};

// Trains the geometry-aware model and the frozen-snapshot-basis variant for
// each reduced dimension (latent = min(N, 10)) and reports test errors.
std::vector<SweepRow> compression_sweep(const Dataset& ds, const std::vector<std::size_t>& n_list,
                                        const CgaRomSpec& base, const TrainConfig& config);

// Orthonormal snapshot modes of the train split in the model's normalized
// value units, shaped for CgaRom::fixed_basis. Single-channel datasets only.
Tensor snapshot_basis(const Dataset& ds, const std::vector<std::uint64_t>& train_ids,
                      const Normalization& norm, std::size_t n_modes);

struct AblationRow {
    std::size_t n_geometries = 0;
    double e_r_train = 0.0;
    double e_r_test = 0.0;
};

// Retrains on nested geometry subsets of the train split; the test split
// (unseen geometries) stays fixed.
std::vector<AblationRow> ablate_geometries(const Dataset& ds,
                                           const std::vector<std::size_t>& counts,
                                           const CgaRomSpec& base, const TrainConfig& config);

struct SuperresCell {
    double r_train = 0.0, r_test = 0.0;
    double e_r = 0.0;
};

// Trains once per training resolution and evaluates each model across test
// resolutions (row-major cells).
std::vector<SuperresCell> superres_grid(const Dataset& ds, const std::vector<double>& r_train_list,
                                        const std::vector<double>& r_test_list,
                                        const CgaRomSpec& base, const TrainConfig& config);

// ---- report helpers -----------------------------------------------------

// Centered is false: trailing average over min(window, seen) entries.
std::vector<double> moving_average(const std::vector<double>& values, std::size_t window);

// Comma-separated, header row, '.' decimal, LF line endings.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

std::string format_double(double v);

} // namespace cgarom
