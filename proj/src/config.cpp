#include "cgarom/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "cgarom/errors.hpp"

namespace cgarom {

RunConfig default_run_config() {
    RunConfig cfg;
    cfg.model.n_modes = 4;
    cfg.model.latent = 4;
    cfg.model.basis_width = 120;
    cfg.model.basis_depth = 10;
    cfg.model.coder_width = 150;
    cfg.model.coder_depth = 5;
    cfg.model.map_width = 50;
    cfg.model.map_depth = 5;
    return cfg;
}

void apply_global_seed(RunConfig& cfg, std::uint64_t seed) {
    cfg.data.seed = seed;
    cfg.train.seed = seed;
}

namespace {

std::string trimmed(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

struct Where {
    const std::string& origin;
    std::size_t line;

    [[noreturn]] void fail(const std::string& msg) const {
        throw UsageError(origin + ":" + std::to_string(line) + ": " + msg);
    }
};

std::size_t parse_size(const Where& w, const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long out = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return std::size_t(out);
    } catch (const std::exception&) {
        w.fail("value of " + key + " is not a nonnegative integer: " + v);
    }
}

double parse_double(const Where& w, const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        w.fail("value of " + key + " is not a number: " + v);
    }
}

bool parse_bool(const Where& w, const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    w.fail("value of " + key + " is not a boolean (true/false/1/0): " + v);
}

void set_data_key(RunConfig& cfg, const Where& w, const std::string& key,
                  const std::string& v) {
    GenerateConfig& d = cfg.data;
    if (key == "problem")
        d.problem = v;
    else if (key == "n_geom")
        d.n_geom = parse_size(w, key, v);
    else if (key == "n_mu")
        d.n_mu = parse_size(w, key, v);
    else if (key == "n_t")
        d.n_t = parse_size(w, key, v);
    else if (key == "resolution") {
        if (v != "fixed" && v != "multi") w.fail("resolution must be fixed or multi: " + v);
        d.resolution = v;
    } else if (key == "nh")
        d.nh = parse_size(w, key, v);
    else if (key == "nh_min")
        d.nh_min = parse_size(w, key, v);
    else if (key == "nh_max")
        d.nh_max = parse_size(w, key, v);
    else if (key == "seed")
        d.seed = parse_size(w, key, v);
    else if (key == "frac_train")
        d.frac_train = parse_double(w, key, v);
    else if (key == "frac_val")
        d.frac_val = parse_double(w, key, v);
    else if (key == "frac_test")
        d.frac_test = parse_double(w, key, v);
    else if (key == "unseen_geometries")
        d.unseen_geometries = parse_bool(w, key, v);
    else
        w.fail("unknown key '" + key + "' in [data]");
}

void set_model_key(RunConfig& cfg, const Where& w, const std::string& key,
                   const std::string& v) {
    CgaRomSpec& m = cfg.model;
    if (key == "n_modes")
        m.n_modes = parse_size(w, key, v);
    else if (key == "latent")
        m.latent = parse_size(w, key, v);
    else if (key == "basis_width")
        m.basis_width = parse_size(w, key, v);
    else if (key == "basis_depth")
        m.basis_depth = parse_size(w, key, v);
    else if (key == "coder_width")
        m.coder_width = parse_size(w, key, v);
    else if (key == "coder_depth")
        m.coder_depth = parse_size(w, key, v);
    else if (key == "map_width")
        m.map_width = parse_size(w, key, v);
    else if (key == "map_depth")
        m.map_depth = parse_size(w, key, v);
    else if (key == "use_zeta")
        m.use_zeta = parse_bool(w, key, v);
    else
        w.fail("unknown key '" + key + "' in [model]");
}

void set_train_key(RunConfig& cfg, const Where& w, const std::string& key,
                   const std::string& v) {
    TrainConfig& t = cfg.train;
    if (key == "epochs")
        t.epochs = parse_size(w, key, v);
    else if (key == "batch_size")
        t.batch_size = parse_size(w, key, v);
    else if (key == "lr")
        t.lr = parse_double(w, key, v);
    else if (key == "r_train")
        t.r_train = parse_double(w, key, v);
    else if (key == "alpha")
        t.alpha = parse_double(w, key, v);
    else if (key == "lambda_orth")
        t.lambda_orth = parse_double(w, key, v);
    else if (key == "seed")
        t.seed = parse_size(w, key, v);
    else if (key == "checkpoint_every")
        t.checkpoint_every = parse_size(w, key, v);
    else if (key == "patience")
        t.patience = parse_size(w, key, v);
    else
        w.fail("unknown key '" + key + "' in [train]");
}

} // namespace

void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string raw;
    std::string section;
    Where w{origin, 0};
    while (std::getline(in, raw)) {
        ++w.line;
        const std::string line = trimmed(raw.substr(0, raw.find('#')));
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') w.fail("malformed section header: " + line);
            section = line.substr(1, line.size() - 2);
            if (section != "data" && section != "model" && section != "train")
                w.fail("unknown section [" + section + "]");
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) w.fail("expected key = value: " + line);
        const std::string key = trimmed(line.substr(0, eq));
        const std::string value = trimmed(line.substr(eq + 1));
        if (key.empty()) w.fail("empty key");
        if (value.empty()) w.fail("empty value for " + key);
        if (section.empty()) w.fail("key '" + key + "' appears before any [section]");

        if (section == "data")
            set_data_key(cfg, w, key, value);
        else if (section == "model")
            set_model_key(cfg, w, key, value);
        else
            set_train_key(cfg, w, key, value);
    }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    apply_config_text(cfg, text, path);
}

namespace {

// shortest decimal that parses back to the same double
std::string num(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace

std::string config_echo(const RunConfig& cfg) {
    std::ostringstream out;
    out << "[data]\n";
    out << "problem = " << cfg.data.problem << "\n";
    out << "n_geom = " << cfg.data.n_geom << "\n";
    out << "n_mu = " << cfg.data.n_mu << "\n";
    out << "n_t = " << cfg.data.n_t << "\n";
    out << "resolution = " << cfg.data.resolution << "\n";
    out << "nh = " << cfg.data.nh << "\n";
    out << "nh_min = " << cfg.data.nh_min << "\n";
    out << "nh_max = " << cfg.data.nh_max << "\n";
    out << "seed = " << cfg.data.seed << "\n";
    out << "frac_train = " << num(cfg.data.frac_train) << "\n";
    out << "frac_val = " << num(cfg.data.frac_val) << "\n";
    out << "frac_test = " << num(cfg.data.frac_test) << "\n";
    out << "unseen_geometries = " << (cfg.data.unseen_geometries ? "true" : "false") << "\n";
    out << "\n[model]\n";
    out << "n_modes = " << cfg.model.n_modes << "\n";
    out << "latent = " << cfg.model.latent << "\n";
    out << "basis_width = " << cfg.model.basis_width << "\n";
    out << "basis_depth = " << cfg.model.basis_depth << "\n";
    out << "coder_width = " << cfg.model.coder_width << "\n";
    out << "coder_depth = " << cfg.model.coder_depth << "\n";
    out << "map_width = " << cfg.model.map_width << "\n";
    out << "map_depth = " << cfg.model.map_depth << "\n";
    out << "use_zeta = " << (cfg.model.use_zeta ? "true" : "false") << "\n";
    out << "\n[train]\n";
    out << "epochs = " << cfg.train.epochs << "\n";
    out << "batch_size = " << cfg.train.batch_size << "\n";
    out << "lr = " << num(cfg.train.lr) << "\n";
    out << "r_train = " << num(cfg.train.r_train) << "\n";
    out << "alpha = " << num(cfg.train.alpha) << "\n";
    out << "lambda_orth = " << num(cfg.train.lambda_orth) << "\n";
    out << "seed = " << cfg.train.seed << "\n";
    out << "checkpoint_every = " << cfg.train.checkpoint_every << "\n";
    out << "patience = " << cfg.train.patience << "\n";
    return out.str();
}

} // namespace cgarom
