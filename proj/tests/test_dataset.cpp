#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "cgarom/dataset.hpp"
#include "cgarom/errors.hpp"
#include "cgarom/geometry.hpp"

using namespace cgarom;

namespace {

std::filesystem::path fresh_dir(const char* name) {
    auto p = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(p);
    return p;
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(bool(in));
    return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
}

void dump(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    REQUIRE(bool(out));
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

GenerateConfig small_fixed() {
    GenerateConfig c;
    c.problem = "stenosis2d";
    c.n_geom = 6;
    c.n_mu = 3;
    c.resolution = "fixed";
    c.nh = 64;
    c.seed = 11;
    return c;
}

} // namespace

TEST_CASE("crc32 matches the standard check value and chains incrementally") {
    const char* msg = "123456789";
    CHECK(crc32(msg, 9) == 0xCBF43926u);
    CHECK(crc32(msg + 5, 4, crc32(msg, 5)) == 0xCBF43926u);
    CHECK(crc32(msg, 0) == 0u);
}

TEST_CASE("fixed-resolution generation shares the reference quadrature across geometries") {
    Dataset ds = generate_dataset(small_fixed());
    const DiffeoSpec spec = ds.geometry_spec();

    REQUIRE(ds.samples.size() == 18);
    CHECK(ds.manifest.n_samples == 18);
    CHECK(ds.manifest.d == 2);
    CHECK(ds.manifest.p == 2);
    CHECK(ds.manifest.g == 3);

    auto groups = ds.group_by_geometry();
    REQUIRE(groups.size() == 6);
    for (const auto& grp : groups) CHECK(grp.size() == 3);

    // All geometries carry the same point count and, pointwise, the same
    // w * zeta (the reference cell volumes), which is what lets snapshots
    // from different shapes share one discrete inner product.
    const SampleRecord& first = ds.samples[0];
    REQUIRE(first.cloud.has_zeta());
    for (const SampleRecord& s : ds.samples) {
        REQUIRE(s.cloud.size() == first.cloud.size());
        REQUIRE(s.cloud.has_zeta());
        for (std::size_t i = 0; i < s.cloud.size(); ++i) {
            const double ref_w = first.cloud.weights[i] * first.cloud.zeta[i];
            const double w = s.cloud.weights[i] * s.cloud.zeta[i];
            CHECK(w == doctest::Approx(ref_w).epsilon(1e-12));
        }
        CHECK_NOTHROW(validate_params(spec, s.xi));
    }

    // One shared mu set: sample (k, j) reuses the mu of sample (0, j).
    for (std::size_t k = 0; k < 6; ++k)
        for (std::size_t j = 0; j < 3; ++j) CHECK(ds.samples[k * 3 + j].mu == ds.samples[j].mu);

    // Stored values regenerate exactly from the closed-form field.
    for (const SampleRecord& s : ds.samples)
        for (std::size_t i = 0; i < s.cloud.size(); ++i)
            CHECK(s.values(i, 0) ==
                  manufactured_field("stenosis2d", spec, s.cloud.points.row(i), s.mu, s.xi));
}

TEST_CASE("splits partition ids and keep test geometries unseen") {
    Dataset ds = generate_dataset(small_fixed());
    const SplitIds& sp = ds.manifest.splits;

    CHECK(sp.train.size() == 12);
    CHECK(sp.val.size() == 3);
    CHECK(sp.test.size() == 3);

    std::set<std::uint64_t> all(sp.train.begin(), sp.train.end());
    all.insert(sp.val.begin(), sp.val.end());
    all.insert(sp.test.begin(), sp.test.end());
    CHECK(all.size() == 18);

    const auto xi_of = [&](std::uint64_t id) { return ds.by_id(id).xi; };
    for (std::uint64_t te : sp.test) {
        for (std::uint64_t tr : sp.train) CHECK(xi_of(te) != xi_of(tr));
        for (std::uint64_t va : sp.val) CHECK(xi_of(te) != xi_of(va));
    }

    // By-sample splitting partitions the 18 samples directly.
    SplitIds by_sample = split_dataset(ds, 0.8, 0.1, 0.1, false, 99);
    CHECK(by_sample.train.size() == 14);
    CHECK(by_sample.val.size() == 2);
    CHECK(by_sample.test.size() == 2);

    CHECK_THROWS_AS(split_dataset(ds, 0.7, 0.1, 0.1, true, 0), UsageError);
    GenerateConfig tiny = small_fixed();
    tiny.n_geom = 3;  // 10% of 3 geometries rounds to zero
    CHECK_THROWS_AS(generate_dataset(tiny), UsageError);
}

TEST_CASE("normalization maps train ranges onto [-1, 1] and flags flat ranges") {
    Dataset ds = generate_dataset(small_fixed());
    REQUIRE(ds.manifest.normalization.has_value());
    const Normalization& n = *ds.manifest.normalization;
    REQUIRE(n.mu.size() == 2);
    REQUIRE(n.xi.size() == 3);
    REQUIRE(n.x.size() == 2);
    REQUIRE(n.value.size() == 1);
    CHECK(!n.t.has_value());

    double lo = 1e300, hi = -1e300;
    for (std::uint64_t id : ds.manifest.splits.train) {
        const double v = Normalization::apply(ds.by_id(id).mu[0], n.mu[0]);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        CHECK(v >= -1.0 - 1e-12);
        CHECK(v <= 1.0 + 1e-12);
    }
    CHECK(lo == doctest::Approx(-1.0));
    CHECK(hi == doctest::Approx(1.0));

    const double raw = ds.samples[0].values(5, 0);
    CHECK(Normalization::invert(Normalization::apply(raw, n.value[0]), n.value[0]) ==
          doctest::Approx(raw).epsilon(1e-14));

    std::vector<std::string> notes;
    Normalization::Affine flat = Normalization::fit_range(2.0, 2.0, "t", notes);
    CHECK(flat.scale == 1.0);
    CHECK(flat.shift == 2.0);
    REQUIRE(notes.size() == 1);
    CHECK(notes[0].find("degenerate") != std::string::npos);
}

TEST_CASE("multi-resolution generation varies the cloud per geometry") {
    GenerateConfig c;
    c.problem = "hole2d";
    c.n_geom = 5;
    c.n_mu = 2;
    c.resolution = "multi";
    c.nh_min = 60;
    c.nh_max = 120;
    c.seed = 3;
    Dataset ds = generate_dataset(c);
    const DiffeoSpec spec = ds.geometry_spec();

    REQUIRE(ds.samples.size() == 10);
    for (const SampleRecord& s : ds.samples) {
        CHECK(s.cloud.size() >= 60);
        CHECK(s.cloud.size() <= 120);
        CHECK(!s.cloud.has_zeta());
        const double vol = domain_volume(spec, s.xi);
        const double w0 = vol / double(s.cloud.size());
        for (std::size_t i = 0; i < s.cloud.size(); ++i) {
            CHECK(s.cloud.weights[i] == doctest::Approx(w0).epsilon(1e-12));
            CHECK(inside_domain(spec, s.cloud.points.row(i), s.xi));
        }
    }

    Dataset again = generate_dataset(c);
    for (std::size_t k = 0; k < ds.samples.size(); ++k) {
        REQUIRE(again.samples[k].cloud.size() == ds.samples[k].cloud.size());
        CHECK(std::memcmp(again.samples[k].values.data(), ds.samples[k].values.data(),
                          ds.samples[k].values.size() * sizeof(double)) == 0);
    }
}

TEST_CASE("save then load then save reproduces both files byte for byte") {
    Dataset ds = generate_dataset(small_fixed());
    const auto dir_a = fresh_dir("cgarom_ds_a");
    const auto dir_b = fresh_dir("cgarom_ds_b");
    save_dataset(ds, dir_a.string());

    Dataset loaded = load_dataset(dir_a.string());
    REQUIRE(loaded.samples.size() == ds.samples.size());
    for (std::size_t k = 0; k < ds.samples.size(); ++k) {
        const SampleRecord& a = ds.samples[k];
        const SampleRecord& b = loaded.samples[k];
        CHECK(a.id == b.id);
        CHECK(a.mu == b.mu);
        CHECK(a.xi == b.xi);
        REQUIRE(a.values.size() == b.values.size());
        CHECK(std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(double)) ==
              0);
        CHECK(std::memcmp(a.cloud.points.data(), b.cloud.points.data(),
                          a.cloud.points.size() * sizeof(double)) == 0);
    }

    save_dataset(loaded, dir_b.string());
    CHECK(slurp(dir_a / "samples.bin") == slurp(dir_b / "samples.bin"));
    CHECK(slurp(dir_a / "manifest.json") == slurp(dir_b / "manifest.json"));
}

TEST_CASE("corruption is detected and attributed") {
    Dataset ds = generate_dataset(small_fixed());
    const auto dir = fresh_dir("cgarom_ds_corrupt");
    save_dataset(ds, dir.string());

    SUBCASE("a flipped byte names the damaged record") {
        auto bytes = slurp(dir / "samples.bin");
        bytes[bytes.size() / 2 + 100] ^= 0x40;  // inside some record's payload
        dump(dir / "samples.bin", bytes);
        try {
            load_dataset(dir.string());
            FAIL("expected IoError");
        } catch (const IoError& e) {
            CHECK(std::string(e.what()).find("checksum mismatch in record") !=
                  std::string::npos);
        }
    }

    SUBCASE("a truncated file is rejected") {
        auto bytes = slurp(dir / "samples.bin");
        bytes.resize(bytes.size() - 10);
        dump(dir / "samples.bin", bytes);
        CHECK_THROWS_AS(load_dataset(dir.string()), IoError);
    }

    SUBCASE("a stale fingerprint is rejected") {
        auto text = slurp(dir / "manifest.json");
        std::string s(text.begin(), text.end());
        auto pos = s.find("\"fingerprint\": \"");
        REQUIRE(pos != std::string::npos);
        pos += std::strlen("\"fingerprint\": \"");
        for (int k = 0; k < 8; ++k) s[pos + k] = '0';
        dump(dir / "manifest.json", std::vector<std::uint8_t>(s.begin(), s.end()));
        try {
            load_dataset(dir.string());
            FAIL("expected IoError");
        } catch (const IoError& e) {
            CHECK(std::string(e.what()).find("fingerprint") != std::string::npos);
        }
    }

    SUBCASE("a missing directory is an I/O error") {
        CHECK_THROWS_AS(load_dataset((dir / "nope").string()), IoError);
    }
}

TEST_CASE("subsampling keeps ceil(r N) points and rescales weights by 1/r") {
    const DiffeoSpec spec = DiffeoSpec::make(Family::identity);
    SampleRecord rec;
    rec.id = 7;
    rec.cloud = sample_cloud(spec, {}, 100, CloudMode::tensor);
    rec.values = Tensor(100, 1);
    for (std::size_t i = 0; i < 100; ++i) {
        const double x = rec.cloud.points(i, 0);
        rec.values(i, 0) = x * x;
    }

    SampleRecord half = subsample(rec, 0.5, 5);
    REQUIRE(half.cloud.size() == 50);
    REQUIRE(half.values.rows() == 50);
    for (std::size_t i = 0; i < 50; ++i) {
        CHECK(half.cloud.weights[i] == doctest::Approx(0.02).epsilon(1e-14));
        const double x = half.cloud.points(i, 0);
        CHECK(half.values(i, 0) == x * x);
    }

    // Different seeds pick different subsets; the same seed repeats exactly.
    SampleRecord other = subsample(rec, 0.5, 6);
    SampleRecord same = subsample(rec, 0.5, 5);
    CHECK(std::memcmp(same.cloud.points.data(), half.cloud.points.data(),
                      half.cloud.points.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(other.cloud.points.data(), half.cloud.points.data(),
                      half.cloud.points.size() * sizeof(double)) != 0);

    SampleRecord whole = subsample(rec, 1.0, 5);
    CHECK(whole.cloud.size() == 100);
    CHECK(std::memcmp(whole.cloud.points.data(), rec.cloud.points.data(),
                      rec.cloud.points.size() * sizeof(double)) == 0);

    SampleRecord tiny_rec = rec;
    CHECK(subsample(tiny_rec, 0.33, 1).cloud.size() == 33);
    CHECK_THROWS_AS(subsample(rec, 0.0, 1), UsageError);
    CHECK_THROWS_AS(subsample(rec, 1.5, 1), UsageError);

    // The rescaled quadrature is unbiased: averaged over seeds, the
    // subsampled integral of x^2 matches the full-cloud integral.
    double full = 0.0;
    for (std::size_t i = 0; i < 100; ++i) full += rec.cloud.weights[i] * rec.values(i, 0);
    double acc = 0.0;
    const int trials = 200;
    for (int s = 0; s < trials; ++s) {
        SampleRecord sub = subsample(rec, 0.5, 1000 + std::uint64_t(s));
        double est = 0.0;
        for (std::size_t i = 0; i < sub.cloud.size(); ++i)
            est += sub.cloud.weights[i] * sub.values(i, 0);
        acc += est;
    }
    CHECK(acc / trials == doctest::Approx(full).epsilon(0.03));
}

TEST_CASE("generation rejects inconsistent configurations") {
    GenerateConfig c = small_fixed();
    c.problem = "unknown";
    CHECK_THROWS_AS(generate_dataset(c), UsageError);
    c = small_fixed();
    c.n_t = 3;
    CHECK_THROWS_AS(generate_dataset(c), UsageError);
    c = small_fixed();
    c.resolution = "adaptive";
    CHECK_THROWS_AS(generate_dataset(c), UsageError);
    c = small_fixed();
    c.resolution = "multi";
    c.nh_min = 200;
    c.nh_max = 100;
    CHECK_THROWS_AS(generate_dataset(c), UsageError);
}
