#include "cgarom/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cgarom/errors.hpp"

namespace cgarom {

namespace {

using json = nlohmann::json;

constexpr std::array<char, 4> kMagic = {'C', 'G', 'A', 'S'};
constexpr std::uint32_t kRecordVersion = 1;

constexpr std::array<std::uint32_t, 256> make_crc_table() {
    std::array<std::uint32_t, 256> table{};
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t c = i;
        for (int k = 0; k < 8; ++k) c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        table[i] = c;
    }
    return table;
}

// ---- little-endian buffer encoding ----

void put_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) buf.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

void put_u64(std::vector<std::uint8_t>& buf, std::uint64_t v) {
    for (int k = 0; k < 8; ++k) buf.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

void put_f64(std::vector<std::uint8_t>& buf, double v) {
    put_u64(buf, std::bit_cast<std::uint64_t>(v));
}

struct ByteReader {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > size) throw IoError("samples.bin is truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(data[pos + k]) << (8 * k);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(data[pos + k]) << (8 * k);
        pos += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
};

void append_record(std::vector<std::uint8_t>& out, const SampleRecord& rec, std::size_t d,
                   std::size_t channels) {
    const std::size_t n = rec.cloud.size();
    if (rec.cloud.points.cols() != d)
        throw DimensionError("sample points have the wrong spatial dimension");
    if (rec.cloud.weights.rows() != n || rec.cloud.weights.cols() != 1)
        throw DimensionError("sample weights do not match the point count");
    if (rec.cloud.has_zeta() && (rec.cloud.zeta.rows() != n || rec.cloud.zeta.cols() != 1))
        throw DimensionError("sample zeta does not match the point count");
    if (rec.values.rows() != n || rec.values.cols() != channels)
        throw DimensionError("sample values do not match the point count or channel count");

    std::vector<std::uint8_t> payload;
    payload.reserve(64 + 8 * (n * (d + 2 + channels)));
    for (char c : kMagic) payload.push_back(static_cast<std::uint8_t>(c));
    put_u32(payload, kRecordVersion);
    put_u64(payload, rec.id);
    std::uint32_t flags = 0;
    if (rec.has_t) flags |= 1u;
    if (rec.cloud.has_zeta()) flags |= 2u;
    put_u32(payload, flags);
    put_f64(payload, rec.t);
    put_u32(payload, static_cast<std::uint32_t>(rec.mu.size()));
    for (double v : rec.mu) put_f64(payload, v);
    put_u32(payload, static_cast<std::uint32_t>(rec.xi.size()));
    for (double v : rec.xi) put_f64(payload, v);
    put_u32(payload, static_cast<std::uint32_t>(n));
    put_u32(payload, static_cast<std::uint32_t>(channels));
    for (std::size_t i = 0; i < n * d; ++i) put_f64(payload, rec.cloud.points[i]);
    for (std::size_t i = 0; i < n; ++i) put_f64(payload, rec.cloud.weights[i]);
    if (rec.cloud.has_zeta())
        for (std::size_t i = 0; i < n; ++i) put_f64(payload, rec.cloud.zeta[i]);
    for (std::size_t i = 0; i < n * channels; ++i) put_f64(payload, rec.values[i]);

    out.insert(out.end(), payload.begin(), payload.end());
    put_u32(out, crc32(payload.data(), payload.size()));
}

SampleRecord read_record(ByteReader& r, std::size_t d) {
    const std::size_t start = r.pos;
    r.need(4);
    if (std::memcmp(r.data + r.pos, kMagic.data(), 4) != 0)
        throw IoError("samples.bin record header is invalid");
    r.pos += 4;
    const std::uint32_t version = r.u32();
    if (version != kRecordVersion)
        throw IoError("samples.bin record has unsupported version " + std::to_string(version));

    SampleRecord rec;
    rec.id = r.u64();
    const std::uint32_t flags = r.u32();
    rec.has_t = (flags & 1u) != 0;
    const bool has_zeta = (flags & 2u) != 0;
    rec.t = r.f64();
    rec.mu.resize(r.u32());
    for (double& v : rec.mu) v = r.f64();
    rec.xi.resize(r.u32());
    for (double& v : rec.xi) v = r.f64();
    const std::size_t n = r.u32();
    const std::size_t channels = r.u32();

    rec.cloud.points = Tensor(n, d);
    for (std::size_t i = 0; i < n * d; ++i) rec.cloud.points[i] = r.f64();
    rec.cloud.weights = Tensor(n, 1);
    for (std::size_t i = 0; i < n; ++i) rec.cloud.weights[i] = r.f64();
    if (has_zeta) {
        rec.cloud.zeta = Tensor(n, 1);
        for (std::size_t i = 0; i < n; ++i) rec.cloud.zeta[i] = r.f64();
    }
    rec.values = Tensor(n, channels);
    for (std::size_t i = 0; i < n * channels; ++i) rec.values[i] = r.f64();

    const std::uint32_t expected = crc32(r.data + start, r.pos - start);
    const std::uint32_t stored = r.u32();
    if (stored != expected)
        throw IoError("checksum mismatch in record " + std::to_string(rec.id) +
                      " of samples.bin");
    return rec;
}

// ---- manifest (de)serialization ----

const char* family_name(Family f) {
    switch (f) {
        case Family::identity: return "identity";
        case Family::interval_scale: return "interval_scale";
        case Family::stenosis_channel: return "stenosis_channel";
        case Family::hole_radius: return "hole_radius";
    }
    throw UsageError("unknown geometry family");
}

Family family_from_name(const std::string& name) {
    if (name == "identity") return Family::identity;
    if (name == "interval_scale") return Family::interval_scale;
    if (name == "stenosis_channel") return Family::stenosis_channel;
    if (name == "hole_radius") return Family::hole_radius;
    throw IoError("manifest names unknown geometry family '" + name + "'");
}

json affine_to_json(const Normalization::Affine& a) {
    return json{{"scale", a.scale}, {"shift", a.shift}};
}

Normalization::Affine affine_from_json(const json& j) {
    Normalization::Affine a;
    a.shift = j.at("shift").get<double>();
    a.scale = j.at("scale").get<double>();
    return a;
}

json affines_to_json(const std::vector<Normalization::Affine>& v) {
    json arr = json::array();
    for (const auto& a : v) arr.push_back(affine_to_json(a));
    return arr;
}

std::vector<Normalization::Affine> affines_from_json(const json& j) {
    std::vector<Normalization::Affine> v;
    for (const auto& e : j) v.push_back(affine_from_json(e));
    return v;
}

json manifest_to_json(const DatasetManifest& m) {
    json j;
    j["format"] = "cgarom-dataset";
    j["version"] = m.version;
    j["problem"] = m.problem;
    j["family"] = family_name(m.family);
    j["d"] = m.d;
    j["p"] = m.p;
    j["g"] = m.g;
    j["channels"] = m.channels;
    j["has_t"] = m.has_t;
    j["n_t"] = m.n_t;
    j["n_geom"] = m.n_geom;
    j["n_mu"] = m.n_mu;
    j["n_samples"] = m.n_samples;
    j["resolution"] = m.resolution;
    j["nh"] = m.nh;
    j["nh_min"] = m.nh_min;
    j["nh_max"] = m.nh_max;
    j["seed"] = m.seed;
    j["unseen_geometries"] = m.unseen_geometries;
    j["splits"] = json{{"train", m.splits.train}, {"val", m.splits.val}, {"test", m.splits.test}};
    if (m.normalization) {
        const Normalization& n = *m.normalization;
        json jn;
        jn["t"] = n.t ? affine_to_json(*n.t) : json(nullptr);
        jn["mu"] = affines_to_json(n.mu);
        jn["xi"] = affines_to_json(n.xi);
        jn["x"] = affines_to_json(n.x);
        jn["value"] = affines_to_json(n.value);
        jn["notes"] = n.notes;
        j["normalization"] = jn;
    } else {
        j["normalization"] = nullptr;
    }
    j["fingerprint"] = m.fingerprint;
    return j;
}

DatasetManifest manifest_from_json(const json& j) {
    if (j.value("format", "") != std::string("cgarom-dataset"))
        throw IoError("manifest.json is not a dataset manifest");
    DatasetManifest m;
    m.version = j.at("version").get<std::uint32_t>();
    if (m.version != 1)
        throw IoError("manifest has unsupported version " + std::to_string(m.version));
    m.problem = j.at("problem").get<std::string>();
    m.family = family_from_name(j.at("family").get<std::string>());
    m.d = j.at("d").get<std::size_t>();
    m.p = j.at("p").get<std::size_t>();
    m.g = j.at("g").get<std::size_t>();
    m.channels = j.at("channels").get<std::size_t>();
    m.has_t = j.at("has_t").get<bool>();
    m.n_t = j.at("n_t").get<std::size_t>();
    m.n_geom = j.at("n_geom").get<std::size_t>();
    m.n_mu = j.at("n_mu").get<std::size_t>();
    m.n_samples = j.at("n_samples").get<std::size_t>();
    m.resolution = j.at("resolution").get<std::string>();
    m.nh = j.at("nh").get<std::size_t>();
    m.nh_min = j.at("nh_min").get<std::size_t>();
    m.nh_max = j.at("nh_max").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.unseen_geometries = j.at("unseen_geometries").get<bool>();
    const json& js = j.at("splits");
    m.splits.train = js.at("train").get<std::vector<std::uint64_t>>();
    m.splits.val = js.at("val").get<std::vector<std::uint64_t>>();
    m.splits.test = js.at("test").get<std::vector<std::uint64_t>>();
    const json& jn = j.at("normalization");
    if (!jn.is_null()) {
        Normalization n;
        if (!jn.at("t").is_null()) n.t = affine_from_json(jn.at("t"));
        n.mu = affines_from_json(jn.at("mu"));
        n.xi = affines_from_json(jn.at("xi"));
        n.x = affines_from_json(jn.at("x"));
        n.value = affines_from_json(jn.at("value"));
        n.notes = jn.at("notes").get<std::vector<std::string>>();
        m.normalization = std::move(n);
    }
    m.fingerprint = j.at("fingerprint").get<std::string>();
    return m;
}

std::string crc_hex(std::uint32_t v) {
    char buf[9];
    std::snprintf(buf, sizeof(buf), "%08x", v);
    return std::string(buf);
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("failed reading " + path.string());
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path, const void* data, std::size_t size) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) throw IoError("failed writing " + path.string());
}

} // namespace

std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed) {
    static constexpr std::array<std::uint32_t, 256> table = make_crc_table();
    const auto* p = static_cast<const std::uint8_t*>(data);
    std::uint32_t c = seed ^ 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i) c = table[(c ^ p[i]) & 0xFFu] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

Normalization::Affine Normalization::fit_range(double lo, double hi, const char* what,
                                               std::vector<std::string>& notes) {
    Affine a;
    const double span = hi - lo;
    if (!(span >= 0.0) || !std::isfinite(span))
        throw NumericalError(std::string("invalid range while normalizing ") + what);
    if (span < 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)})) {
        a.shift = lo;
        a.scale = 1.0;
        notes.push_back(std::string("degenerate range for ") + what + ": kept scale 1");
    } else {
        a.shift = 0.5 * (lo + hi);
        a.scale = 0.5 * span;
    }
    return a;
}

const SampleRecord& Dataset::by_id(std::uint64_t id) const {
    for (const SampleRecord& s : samples)
        if (s.id == id) return s;
    throw UsageError("no sample with id " + std::to_string(id));
}

std::vector<std::vector<std::size_t>> Dataset::group_by_geometry() const {
    std::vector<std::vector<std::size_t>> groups;
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        std::string key(reinterpret_cast<const char*>(samples[i].xi.data()),
                        samples[i].xi.size() * sizeof(double));
        auto [it, inserted] = index.try_emplace(std::move(key), groups.size());
        if (inserted) groups.emplace_back();
        groups[it->second].push_back(i);
    }
    return groups;
}

std::vector<std::pair<double, double>> problem_mu_box(const std::string& problem) {
    if (problem == "stenosis2d") return {{2.0, 4.0}, {0.3, 0.8}};
    if (problem == "hole2d") return {{1.0, 2.0}, {0.05, 0.2}};
    throw UsageError("unknown problem '" + problem + "'");
}

Family problem_family(const std::string& problem) {
    if (problem == "stenosis2d") return Family::stenosis_channel;
    if (problem == "hole2d") return Family::hole_radius;
    throw UsageError("unknown problem '" + problem + "'");
}

double manufactured_field(const std::string& problem, const DiffeoSpec& spec, const double* x,
                          const std::vector<double>& mu, const std::vector<double>& xi) {
    if (problem == "stenosis2d") {
        // Parabolic profile in the wall-normalized height, modulated by a
        // Gaussian around the bump center. Sharpens as the throat narrows.
        double ref[2];
        map_forward(spec, x, xi, ref);
        const double yh = ref[1];
        const double a = mu[0], sigma = mu[1];
        const double dx = x[0] - xi[2];
        return a * 4.0 * yh * (1.0 - yh) * std::exp(-dx * dx / (sigma * sigma));
    }
    if (problem == "hole2d") {
        // Ring-shaped bump hugging the hole boundary; moves with the radius.
        const double rho = std::hypot(x[0] - 0.5, x[1] - 0.5);
        const double g1 = mu[0], diff = mu[1];
        const double dr = rho - xi[0];
        return g1 * std::exp(-dr * dr / diff);
    }
    throw UsageError("unknown problem '" + problem + "'");
}

SplitIds split_dataset(const Dataset& ds, double frac_train, double frac_val, double frac_test,
                       bool unseen_geometries, std::uint64_t seed) {
    if (frac_train < 0 || frac_val < 0 || frac_test < 0 ||
        std::abs(frac_train + frac_val + frac_test - 1.0) > 1e-9)
        throw UsageError("split fractions must be nonnegative and sum to 1");

    // Units being partitioned: geometry groups or individual samples.
    std::vector<std::vector<std::size_t>> units;
    if (unseen_geometries) {
        units = ds.group_by_geometry();
    } else {
        units.reserve(ds.samples.size());
        for (std::size_t i = 0; i < ds.samples.size(); ++i) units.push_back({i});
    }
    const std::size_t n = units.size();
    if (n == 0) throw UsageError("cannot split an empty dataset");

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(mix_seeds(seed, 0x5117));
    rng.shuffle(order);

    const auto count = [n](double frac) {
        return static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
    };
    std::size_t n_test = count(frac_test);
    std::size_t n_val = count(frac_val);
    if (n_test + n_val > n) throw UsageError("split fractions leave no training data");
    std::size_t n_train = n - n_test - n_val;
    const char* unit = unseen_geometries ? "geometries" : "samples";
    if ((frac_train > 0 && n_train == 0) || (frac_val > 0 && n_val == 0) ||
        (frac_test > 0 && n_test == 0))
        throw UsageError(std::string("too few ") + unit +
                         " for the requested split: a nonzero fraction received none");

    SplitIds out;
    const auto emit = [&](std::vector<std::uint64_t>& dst, std::size_t begin, std::size_t cnt) {
        for (std::size_t k = begin; k < begin + cnt; ++k)
            for (std::size_t idx : units[order[k]]) dst.push_back(ds.samples[idx].id);
        std::sort(dst.begin(), dst.end());
    };
    emit(out.train, 0, n_train);
    emit(out.val, n_train, n_val);
    emit(out.test, n_train + n_val, n_test);
    return out;
}

Normalization fit_normalization(const Dataset& ds, const SplitIds& splits) {
    if (splits.train.empty()) throw UsageError("cannot fit normalization on an empty train split");
    const DatasetManifest& m = ds.manifest;
    const auto lohi = [] {
        constexpr double inf = std::numeric_limits<double>::infinity();
        return std::pair<double, double>{inf, -inf};
    };

    auto t_range = lohi();
    std::vector<std::pair<double, double>> mu_r(m.p, lohi()), xi_r(m.g, lohi()),
        x_r(m.d, lohi()), val_r(m.channels, lohi());
    const auto widen = [](std::pair<double, double>& r, double v) {
        r.first = std::min(r.first, v);
        r.second = std::max(r.second, v);
    };

    for (std::uint64_t id : splits.train) {
        const SampleRecord& s = ds.by_id(id);
        if (s.has_t) widen(t_range, s.t);
        for (std::size_t k = 0; k < m.p; ++k) widen(mu_r[k], s.mu[k]);
        for (std::size_t k = 0; k < m.g; ++k) widen(xi_r[k], s.xi[k]);
        for (std::size_t i = 0; i < s.cloud.size(); ++i)
            for (std::size_t k = 0; k < m.d; ++k) widen(x_r[k], s.cloud.points(i, k));
        for (std::size_t i = 0; i < s.values.rows(); ++i)
            for (std::size_t c = 0; c < m.channels; ++c) widen(val_r[c], s.values(i, c));
    }

    Normalization n;
    const auto fit_all = [&n](const std::vector<std::pair<double, double>>& ranges,
                              const char* what) {
        std::vector<Normalization::Affine> out;
        out.reserve(ranges.size());
        for (const auto& r : ranges)
            out.push_back(Normalization::fit_range(r.first, r.second, what, n.notes));
        return out;
    };
    if (m.has_t) n.t = Normalization::fit_range(t_range.first, t_range.second, "t", n.notes);
    n.mu = fit_all(mu_r, "mu");
    n.xi = fit_all(xi_r, "xi");
    n.x = fit_all(x_r, "x");
    n.value = fit_all(val_r, "value");
    return n;
}

Dataset generate_dataset(const GenerateConfig& c) {
    const Family family = problem_family(c.problem);
    const DiffeoSpec spec = DiffeoSpec::make(family);
    const auto mu_box = problem_mu_box(c.problem);
    if (c.n_geom == 0 || c.n_mu == 0) throw UsageError("n_geom and n_mu must be positive");
    if (c.n_t != 1) throw UsageError("problem '" + c.problem + "' is stationary; n_t must be 1");
    const bool fixed = c.resolution == "fixed";
    if (!fixed && c.resolution != "multi")
        throw UsageError("resolution must be 'fixed' or 'multi'");
    if (fixed) {
        if (c.nh == 0) throw UsageError("nh must be positive");
    } else if (c.nh_min == 0 || c.nh_max < c.nh_min) {
        throw UsageError("need 0 < nh_min <= nh_max for multi resolution");
    }

    Dataset ds;
    DatasetManifest& m = ds.manifest;
    m.problem = c.problem;
    m.family = family;
    m.d = spec.dim();
    m.p = mu_box.size();
    m.g = spec.param_dim();
    m.channels = 1;
    m.has_t = false;
    m.n_t = 1;
    m.n_geom = c.n_geom;
    m.n_mu = c.n_mu;
    m.n_samples = c.n_geom * c.n_mu;
    m.resolution = fixed ? "fixed" : "multi";
    m.nh = fixed ? c.nh : 0;
    m.nh_min = fixed ? 0 : c.nh_min;
    m.nh_max = fixed ? 0 : c.nh_max;
    m.seed = c.seed;
    m.unseen_geometries = c.unseen_geometries;

    Rng rng_xi(mix_seeds(c.seed, 0xA11CE));
    Rng rng_mu(mix_seeds(c.seed, 0xB0B));
    Rng rng_nh(mix_seeds(c.seed, 0xC0DE));

    std::vector<std::vector<double>> xis(c.n_geom);
    for (auto& xi : xis) xi = sample_params(spec, rng_xi);

    // One mu set shared by every geometry, so error statistics compare the
    // same physics across shapes.
    std::vector<std::vector<double>> mus(c.n_mu);
    for (auto& mu : mus) {
        mu.resize(mu_box.size());
        for (std::size_t k = 0; k < mu.size(); ++k)
            mu[k] = rng_mu.uniform(mu_box[k].first, mu_box[k].second);
    }

    PointCloud ref;
    if (fixed) ref = reference_cloud(spec, c.nh);

    ds.samples.reserve(m.n_samples);
    for (std::size_t k = 0; k < c.n_geom; ++k) {
        PointCloud cloud;
        if (fixed) {
            cloud = push_reference_cloud(spec, ref, xis[k]);
        } else {
            const std::size_t span = c.nh_max - c.nh_min + 1;
            const std::size_t nh_k = c.nh_min + rng_nh.below(span);
            cloud = sample_cloud(spec, xis[k], nh_k, CloudMode::quasirandom,
                                 mix_seeds(c.seed, k, 0xC10D));
            cloud.zeta = Tensor();  // resolutions differ, no shared reference
        }
        for (std::size_t j = 0; j < c.n_mu; ++j) {
            SampleRecord rec;
            rec.id = static_cast<std::uint64_t>(k * c.n_mu + j);
            rec.mu = mus[j];
            rec.xi = xis[k];
            rec.cloud = cloud;
            rec.values = Tensor(cloud.size(), 1);
            for (std::size_t i = 0; i < cloud.size(); ++i)
                rec.values(i, 0) =
                    manufactured_field(c.problem, spec, cloud.points.row(i), rec.mu, rec.xi);
            rec.values.require_finite("generated sample values");
            ds.samples.push_back(std::move(rec));
        }
    }

    m.splits = split_dataset(ds, c.frac_train, c.frac_val, c.frac_test, c.unseen_geometries,
                             mix_seeds(c.seed, 0x5111));
    m.normalization = fit_normalization(ds, m.splits);
    return ds;
}

SampleRecord subsample(const SampleRecord& rec, double r, std::uint64_t seed) {
    if (!(r > 0.0) || r > 1.0) throw UsageError("subsample ratio must be in (0, 1]");
    const std::size_t n = rec.cloud.size();
    const std::size_t m = static_cast<std::size_t>(std::ceil(r * static_cast<double>(n)));
    if (m >= n) return rec;

    Rng rng(seed);
    const std::vector<std::size_t> keep = rng.sample_without_replacement(n, m);
    const double scale = 1.0 / r;

    SampleRecord out;
    out.id = rec.id;
    out.has_t = rec.has_t;
    out.t = rec.t;
    out.mu = rec.mu;
    out.xi = rec.xi;
    out.cloud.points = Tensor(m, rec.cloud.dim());
    out.cloud.weights = Tensor(m, 1);
    if (rec.cloud.has_zeta()) out.cloud.zeta = Tensor(m, 1);
    out.values = Tensor(m, rec.values.cols());
    for (std::size_t a = 0; a < m; ++a) {
        const std::size_t i = keep[a];
        for (std::size_t k = 0; k < rec.cloud.dim(); ++k)
            out.cloud.points(a, k) = rec.cloud.points(i, k);
        out.cloud.weights(a, 0) = rec.cloud.weights(i, 0) * scale;
        if (rec.cloud.has_zeta()) out.cloud.zeta(a, 0) = rec.cloud.zeta(i, 0);
        for (std::size_t c = 0; c < rec.values.cols(); ++c)
            out.values(a, c) = rec.values(i, c);
    }
    return out;
}

void save_dataset(const Dataset& ds, const std::string& dir) {
    if (ds.samples.size() != ds.manifest.n_samples)
        throw DimensionError("manifest sample count does not match the dataset");
    std::filesystem::path root(dir);
    std::error_code ec;
    std::filesystem::create_directories(root, ec);
    if (ec) throw IoError("cannot create directory " + root.string() + ": " + ec.message());

    std::vector<std::uint8_t> blob;
    for (const SampleRecord& rec : ds.samples)
        append_record(blob, rec, ds.manifest.d, ds.manifest.channels);
    write_file_bytes(root / "samples.bin", blob.data(), blob.size());

    DatasetManifest m = ds.manifest;
    m.fingerprint = crc_hex(crc32(blob.data(), blob.size()));
    const std::string text = manifest_to_json(m).dump(2) + "\n";
    write_file_bytes(root / "manifest.json", text.data(), text.size());
}

Dataset load_dataset(const std::string& dir) {
    std::filesystem::path root(dir);
    const std::vector<std::uint8_t> mtext = read_file_bytes(root / "manifest.json");
    json j;
    try {
        j = json::parse(mtext.begin(), mtext.end());
    } catch (const json::exception& e) {
        throw IoError("cannot parse " + (root / "manifest.json").string() + ": " + e.what());
    }

    Dataset ds;
    try {
        ds.manifest = manifest_from_json(j);
    } catch (const json::exception& e) {
        throw IoError("manifest.json is missing fields: " + std::string(e.what()));
    }

    // Per-record checksums run first so damage is reported with a record id;
    // the whole-file fingerprint then ties the blob to this manifest.
    const std::vector<std::uint8_t> blob = read_file_bytes(root / "samples.bin");
    ByteReader r{blob.data(), blob.size(), 0};
    while (r.pos < r.size) ds.samples.push_back(read_record(r, ds.manifest.d));
    const std::string fp = crc_hex(crc32(blob.data(), blob.size()));
    if (fp != ds.manifest.fingerprint)
        throw IoError("samples.bin does not match the manifest fingerprint (expected " +
                      ds.manifest.fingerprint + ", found " + fp + ")");
    if (ds.samples.size() != ds.manifest.n_samples)
        throw IoError("samples.bin holds " + std::to_string(ds.samples.size()) +
                      " records, manifest expects " + std::to_string(ds.manifest.n_samples));
    return ds;
}

} // namespace cgarom
