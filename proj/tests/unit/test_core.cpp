#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

#include "doctest.h"

#include "edei/dataset_io.hpp"
#include "edei/error.hpp"
#include "edei/kv_config.hpp"
#include "edei/synthesis.hpp"
#include "support/scenes.hpp"

using namespace edei;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("edei_core_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<char> file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

const FrameSequence& shared_clip() {
    static const FrameSequence clip = [] {
        testing::SceneOptions o;
        o.height = 24;
        o.width = 32;
        o.frames = 31;
        return interpolate(testing::make_scene(o), 7);
    }();
    return clip;
}

ExposureSample synthetic_sample(std::uint64_t seed) {
    SynthesisRecipe r;
    r.rng_seed = seed;
    r.simulator.noise_rate_hz = 2.0;
    const auto& clip = shared_clip();
    return make_sample(clip, r, clip.timestamp(8 + (seed * 13) % 150));
}

} // namespace

TEST_CASE("frame and sequence invariants") {
    CHECK_THROWS_AS(Frame(8, 8, 2), DataError);
    Frame rgb(8, 8, 3, 0.0);
    rgb.at(1, 2, 0) = 1.0;
    CHECK(to_luma(rgb).at(1, 2, 0) == doctest::Approx(0.299));
    CHECK_THROWS_AS(FrameSequence({Frame(8, 8, 1), Frame(8, 8, 1)}, {0.0, 0.0}), DataError);
    CHECK_THROWS_AS(FrameSequence({Frame(8, 8, 1), Frame(9, 8, 1)}, {0.0, 1.0}), DataError);
    CHECK_THROWS_AS(FrameSequence({Frame(8, 8, 1)}, {0.0, 1.0}), DataError);
}

TEST_CASE("validate_sample") {
    const ExposureSample good = synthetic_sample(1);
    CHECK(validate_sample(good).empty());

    SUBCASE("timing order") {
        ExposureSample s = good;
        s.timing.t_s = s.timing.t_b + 0.01;
        CHECK(validate_sample(s) == std::vector<std::string>{"timing order violated"});
    }
    SUBCASE("unsorted events") {
        ExposureSample s = good;
        REQUIRE(s.events.size() >= 2);
        std::swap(s.events.events.front(), s.events.events.back());
        CHECK(validate_sample(s) == std::vector<std::string>{"events not time-sorted"});
    }
    SUBCASE("shape mismatch and bad polarity are reported") {
        ExposureSample s = good;
        s.gt = Frame(16, 16, 3, 0.5);
        s.events.events.front().p = 0;
        auto v = validate_sample(s);
        CHECK(std::find(v.begin(), v.end(), "frame shapes differ") != v.end());
        CHECK(std::find(v.begin(), v.end(), "event polarity not +1/-1") != v.end());
    }
}

TEST_CASE("validate_sample accepts every synthesized sample") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) CHECK(validate_sample(synthetic_sample(seed)).empty());
}

TEST_CASE("event file layout") {
    EventStream s;
    s.height = 260;
    s.width = 346;
    s.t_start = 0.0;
    s.t_end = 1.0;
    s.events = {{0.000001, 3, 4, 1}, {0.5, 345, 259, -1}};
    auto bytes = encode_events(s);
    REQUIRE(bytes.size() == kEventHeaderBytes + 2 * kEventRecordBytes);
    CHECK(std::memcmp(bytes.data(), "EDEI", 4) == 0);
    CHECK((bytes[4] | bytes[5] << 8) == 1);
    CHECK((bytes[6] | bytes[7] << 8) == 260);
    CHECK((bytes[8] | bytes[9] << 8) == 346);
    CHECK(bytes[10] == 2);
    for (int i = 11; i < 16; ++i) CHECK(bytes[i] == 0);
    // second record: t_us = 500000 = 0x07A120
    const std::uint8_t* r = bytes.data() + kEventHeaderBytes + kEventRecordBytes;
    CHECK(r[0] == 0x20);
    CHECK(r[1] == 0xA1);
    CHECK(r[2] == 0x07);
    CHECK((r[8] | r[9] << 8) == 345);
    CHECK((r[10] | r[11] << 8) == 259);
    CHECK(static_cast<std::int8_t>(r[12]) == -1);
    CHECK(r[13] == 0);
    CHECK(decode_events(bytes, 0.0, 1.0) == s);

    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(decode_events(bad, 0.0, 1.0), DataError);
    bytes.pop_back();
    CHECK_THROWS_AS(decode_events(bytes, 0.0, 1.0), DataError);
}

TEST_CASE("16-bit images round trip on the storage grid") {
    fs::path dir = scratch_dir("img");
    Frame f = testing::random_frame(10, 12, 3, 5, -0.2, 1.2);
    write_image16(dir / "a.img", f);
    Frame back = read_image16(dir / "a.img");
    CHECK(back == quantize_frame(f));
    write_image16(dir / "b.img", back);
    CHECK(read_image16(dir / "b.img") == back);
    CHECK(file_bytes(dir / "a.img") == file_bytes(dir / "b.img"));
    fs::remove_all(dir);
}

TEST_CASE("sample serialization round trip") {
    fs::path dir = scratch_dir("rt");
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const ExposureSample s = synthetic_sample(seed);
        const fs::path a = dir / ("a" + std::to_string(seed)), b = dir / ("b" + std::to_string(seed));
        write_sample(a, s);
        const ExposureSample read = read_sample(a);
        const ExposureSample q = quantized_for_storage(s);
        CHECK(read.short_exposure == q.short_exposure);
        CHECK(read.long_exposure == q.long_exposure);
        CHECK(read.gt == q.gt);
        CHECK(read.events == q.events);
        CHECK(read.timing == q.timing);
        CHECK(read.seed == q.seed);
        CHECK(read.provenance == q.provenance);
        CHECK(read == q);
        CHECK(quantized_for_storage(read) == read);
        CHECK(validate_sample(read).empty());

        // Already on the storage grid: reproduced bit-exactly, files identical.
        write_sample(b, read);
        CHECK(read_sample(b) == read);
        for (const char* name : {"short.img", "long.img", "gt.img", "events.evt", "meta.cfg"}) {
            CHECK(file_bytes(a / name) == file_bytes(b / name));
        }
    }
    fs::remove_all(dir);
}

TEST_CASE("samples without ground truth and dataset listing") {
    fs::path root = scratch_dir("ds");
    ExposureSample s = quantized_for_storage(synthetic_sample(3));
    s.gt.reset();
    write_sample(root / "seqB" / "000001", s);
    write_sample(root / "seqA" / "000002", s);
    write_sample(root / "seqA" / "000000", s);
    CHECK(!read_sample(root / "seqA" / "000000").gt);
    auto refs = list_dataset(root);
    REQUIRE(refs.size() == 3);
    CHECK(refs[0].sequence == "seqA");
    CHECK(refs[0].index == "000000");
    CHECK(refs[2].sequence == "seqB");
    CHECK_THROWS_AS(read_sample(root / "missing"), DataError);
    fs::remove_all(root);
}

TEST_CASE("key=value config") {
    auto cfg = KvConfig::parse("# comment\na = 1\nb=2.5\n\nname=foo bar\nflag=true\nlist=1,2,3\n");
    CHECK(cfg.get_int("a", 0) == 1);
    CHECK(cfg.get_double("b", 0) == 2.5);
    CHECK(cfg.get_string("name", "") == "foo bar");
    CHECK(cfg.get_bool("flag", false));
    CHECK(cfg.get_doubles("list", {}) == std::vector<double>{1, 2, 3});
    CHECK(cfg.get_double("missing", 7.0) == 7.0);
    CHECK_THROWS_AS(cfg.get_int("name", 0), ConfigError);
    CHECK_THROWS_AS(cfg.require_double("missing"), ConfigError);
    CHECK_THROWS_AS(KvConfig::parse("no equals sign"), ConfigError);

    cfg.apply_overrides({"a=5", "c=x"});
    CHECK(cfg.get_int("a", 0) == 5);
    CHECK(cfg.get_string("c", "") == "x");
    CHECK_THROWS_AS(cfg.apply_overrides({"bad"}), ConfigError);
    CHECK(KvConfig::parse(cfg.to_string()) == cfg);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 500; ++i) {
        const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
        KvConfig c;
        c.set("v", v);
        CHECK(KvConfig::parse(c.to_string()).get_double("v", 0) == v);
    }
}
