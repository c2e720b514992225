#pragma once

#include <string>

#include "cgarom/dataset.hpp"
#include "cgarom/model.hpp"
#include "cgarom/training.hpp"

namespace cgarom {

// Everything a run needs, grouped by config file section. Dataset-derived
// model fields (d, p, g, channels, has_t, basis_kind) are filled in when the
// dataset is loaded, not configured.
struct RunConfig {
    GenerateConfig data;
    CgaRomSpec model;
    TrainConfig train;
};

// Built-in defaults; the model block matches the reference stenosis setup
// (N=4, latent 4, residual basis 120x10, coders 150x5, reduced map 50x5).
RunConfig default_run_config();

// Seed fallback shared by generation and training (CGAROM_SEED in the CLI).
void apply_global_seed(RunConfig& cfg, std::uint64_t seed);

// `key = value` lines grouped under [data] / [model] / [train]; `#` starts a
// comment. Unknown sections, unknown keys, or malformed values raise
// UsageError naming `origin` and the offending line number. Values overwrite
// whatever cfg already holds, so later sources win.
void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin);
void apply_config_file(RunConfig& cfg, const std::string& path);

// Complete parseable echo of cfg — applying it to defaults reproduces cfg.
std::string config_echo(const RunConfig& cfg);

} // namespace cgarom
