#include <cmath>
#include <map>
#include <random>

#include "doctest.h"

#include "edei/error.hpp"
#include "edei/synthesis.hpp"
#include "support/scenes.hpp"
#include "support/oracles.hpp"

using namespace edei;
using namespace edei::testing;

namespace {

FrameSequence two_frames(double a, double b, int h = 8, int w = 8) {
    return FrameSequence({Frame(h, w, 1, a), Frame(h, w, 1, b)}, {0.0, 1.0});
}

} // namespace

TEST_CASE("interpolate") {
    SUBCASE("factor 0 keeps the frames") {
        auto seq = two_frames(0.2, 0.6);
        auto out = interpolate(seq, 0);
        REQUIRE(out.size() == 2);
        CHECK(out.frame(0) == seq.frame(0));
        CHECK(out.frame(1) == seq.frame(1));
    }
    SUBCASE("constant pair stays constant") {
        auto out = interpolate(two_frames(0.37, 0.37), 7);
        REQUIRE(out.size() == 9);
        for (const Frame& f : out.frames()) CHECK(f == Frame(8, 8, 1, 0.37));
    }
    SUBCASE("linear blend midpoint") {
        auto out = interpolate(two_frames(0.0, 0.8), 3);
        REQUIRE(out.size() == 5);
        const double expected = 0.0 + 0.5 * (0.8 - 0.0);
        CHECK(out.frame(2).at(3, 3, 0) == doctest::Approx(expected).epsilon(1e-15));
        CHECK(out.frame(2).at(3, 3, 0) == doctest::Approx(0.4));
        CHECK(out.timestamp(1) == doctest::Approx(0.25));
        CHECK(out.timestamp(4) == 1.0);
    }
    SUBCASE("length formula and endpoints") {
        testing::SceneOptions o;
        o.height = o.width = 16;
        o.frames = 6;
        auto seq = testing::make_scene(o);
        auto out = interpolate(seq, 7);
        CHECK(out.size() == (seq.size() - 1) * 8 + 1);
        for (std::size_t i = 0; i < seq.size(); ++i) CHECK(out.frame(i * 8) == seq.frame(i));
    }
    SUBCASE("single frame cannot be interpolated") {
        FrameSequence one({Frame(8, 8, 1, 0.5)}, {0.0});
        CHECK_THROWS_WITH_AS(interpolate(one, 3), doctest::Contains("cannot interpolate"), DataError);
    }
}

TEST_CASE("synth_long averages the exposure window") {
    SUBCASE("identical frames") {
        std::vector<Frame> frames(49, testing::random_frame(8, 8, 3, 4));
        std::vector<double> ts;
        for (int i = 0; i < 49; ++i) ts.push_back(i * 0.01);
        FrameSequence seq(frames, ts);
        ExposureTiming t{0.0, 0.0, ts.back(), 0.1};
        CHECK(synth_long(seq, t) == frames[0]);
    }
    SUBCASE("alternating 0 and 1") {
        std::vector<Frame> frames;
        std::vector<double> ts;
        for (int i = 0; i < 10; ++i) {
            frames.emplace_back(8, 8, 1, static_cast<double>(i % 2));
            ts.push_back(i);
        }
        auto out = synth_long(FrameSequence(frames, ts), {0.0, 0.0, 9.0, 1.0});
        for (double v : out.data()) CHECK(v == 0.5);
    }
    SUBCASE("random window matches a brute-force mean") {
        std::vector<Frame> frames;
        std::vector<double> ts;
        for (int i = 0; i < 60; ++i) {
            frames.push_back(testing::random_frame(9, 11, 3, 100 + i));
            ts.push_back(i / 192.0);
        }
        FrameSequence seq(frames, ts);
        ExposureTiming t{ts[2], ts[5], ts[53], 0.01};
        Frame out = synth_long(seq, t);
        for (std::size_t k = 0; k < out.size(); ++k) {
            long double acc = 0.0L;
            for (int i = 5; i <= 53; ++i) acc += frames[i].data()[k];
            CHECK(std::abs(out.data()[k] - static_cast<double>(acc / 49.0L)) < 1e-12);
        }
    }
    SUBCASE("empty window") {
        auto seq = two_frames(0.1, 0.2);
        CHECK_THROWS_WITH_AS(synth_long(seq, {0.0, 0.3, 0.6, 0.1}), doctest::Contains("no frames in exposure"),
                             DataError);
    }
}

TEST_CASE("synth_short darkening and noise") {
    Frame gt(8, 8, 1, 0.5);
    SUBCASE("identity degradation") {
        DegradationParams p{1.0, 1.0, 1.0, 0.0, 0.0};
        CHECK(synth_short(gt, p, 1).at(0, 0, 0) == 0.5);
    }
    SUBCASE("beta 0.5, gamma 2") {
        DegradationParams p{1.0, 0.5, 2.0, 0.0, 0.0};
        CHECK(synth_short(gt, p, 1).at(4, 4, 0) == doctest::Approx(0.125).epsilon(1e-15));
    }
    SUBCASE("Monte-Carlo moments of the unclamped draw") {
        DegradationParams p{0.9, 1.0, 3.0, 0.05, 0.05};
        Frame big(1000, 1000, 1, 0.5);
        Frame draw = sample_short_unclamped(big, p, 77);
        double mean = 0.0;
        for (double v : draw.data()) mean += v;
        mean /= draw.size();
        double var = 0.0;
        for (double v : draw.data()) var += (v - mean) * (v - mean);
        var /= draw.size() - 1;
        const double J = 1.0 * std::pow(0.9 * 0.5, 3.0);
        const double expected_var = 0.05 * J + 0.05 * 0.05;
        CHECK(std::abs(mean - J) / J < 0.01);
        CHECK(std::abs(var - expected_var) / expected_var < 0.01);
    }
    SUBCASE("negative sigma is rejected") {
        DegradationParams p{1.0, 1.0, 1.0, -0.1, 0.0};
        CHECK_THROWS_AS(synth_short(gt, p, 1), ConfigError);
    }
    SUBCASE("noise-free darkening is monotone") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int trial = 0; trial < 200; ++trial) {
            DegradationParams p{0.9 + 0.1 * u(rng), 0.5 + 0.5 * u(rng), 1.0 + 2.5 * u(rng), 0.0, 0.0};
            double a = u(rng), b = u(rng);
            if (a > b) std::swap(a, b);
            const double ja = synth_short(Frame(8, 8, 1, a), p, 0).at(0, 0, 0);
            const double jb = synth_short(Frame(8, 8, 1, b), p, 0).at(0, 0, 0);
            CHECK(ja <= jb);
        }
    }
    SUBCASE("darkening matches direct evaluation on random pixels") {
        Frame pixels = testing::random_frame(100, 100, 1, 9);
        DegradationParams p = DegradationParams::sample(3);
        p.sigma_p = p.sigma_g = 0.0;
        Frame out = synth_short(pixels, p, 0);
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double L = pixels.data()[i];
            const double direct = p.beta * std::exp(p.gamma * std::log(p.alpha * L));
            CHECK(std::abs(out.data()[i] - direct) < 1e-6);
        }
    }
    SUBCASE("sampled parameters stay in their ranges") {
        for (std::uint64_t s = 0; s < 100; ++s) {
            auto p = DegradationParams::sample(s);
            CHECK(p.alpha >= 0.9);
            CHECK(p.alpha <= 1.0);
            CHECK(p.beta >= 0.5);
            CHECK(p.gamma >= 2.0);
            CHECK(p.gamma <= 3.5);
            CHECK(p.sigma_p >= 0.05);
            CHECK(p.sigma_g <= 0.1);
        }
    }
}

TEST_CASE("simulate_events") {
    SUBCASE("constant video fires nothing") {
        auto seq = two_frames(0.3, 0.3);
        SimulatorConfig cfg;
        cfg.noise_rate_hz = 0.0;
        CHECK(simulate_events(seq, cfg, 1).size() == 0);
    }
    SUBCASE("step of exactly 2C") {
        const double C = 0.2;
        Frame a(8, 8, 1, 0.3);
        Frame b = a;
        b.at(2, 5, 0) = (0.3 + kLogFloor) * std::exp(2 * C) - kLogFloor;
        auto ev = simulate_events(FrameSequence({a, b}, {0.0, 0.01}), ideal_simulator(C), 1);
        REQUIRE(ev.size() == 2);
        for (const Event& e : ev.events) {
            CHECK(e.p == 1);
            CHECK(e.x == 5);
            CHECK(e.y == 2);
        }
    }
    SUBCASE("exponential ramp of k thresholds") {
        const double C = 0.15;
        for (int k : {1, 3, 7, 12}) {
            std::vector<Frame> frames;
            std::vector<double> ts;
            for (int i = 0; i <= 200; ++i) {
                const double t = i / 200.0;
                frames.emplace_back(8, 8, 1, (0.05 + kLogFloor) * std::exp(k * C * t) - kLogFloor);
                ts.push_back(t);
            }
            FrameSequence seq(frames, ts);
            auto ev = simulate_events(seq, ideal_simulator(C), 0);
            auto counts = per_pixel_counts(ev);
            CHECK(counts.size() == 64);
            for (auto [px, n] : counts) CHECK(n == k);
            CHECK(counts == crossing_oracle(seq, C));
        }
    }
    SUBCASE("polarity balance on a returning sequence") {
        testing::SceneOptions o;
        o.height = o.width = 16;
        o.frames = 6;
        auto scene = testing::make_scene(o);
        std::vector<Frame> frames = scene.frames();
        for (int i = static_cast<int>(scene.size()) - 2; i >= 0; --i) frames.push_back(scene.frame(i));
        std::vector<double> ts;
        for (std::size_t i = 0; i < frames.size(); ++i) ts.push_back(i / 100.0);
        const double C = 0.2;
        auto ev = simulate_events(FrameSequence(frames, ts), ideal_simulator(C), 3);
        std::map<std::pair<int, int>, long> net;
        for (const Event& e : ev.events) net[{e.y, e.x}] += e.p;
        for (auto [px, s] : net) CHECK(std::abs(s * C) < C);
    }
    SUBCASE("noise events follow the configured rate") {
        Frame a(32, 32, 1, 0.5);
        std::vector<Frame> frames(11, a);
        std::vector<double> ts;
        for (int i = 0; i <= 10; ++i) ts.push_back(i * 0.1);
        SimulatorConfig cfg;
        cfg.noise_rate_hz = 5.0;
        auto ev = simulate_events(FrameSequence(frames, ts), cfg, 42);
        // 1024 pixels * 5 Hz * 1 s, Poisson sd ~ 72
        CHECK(ev.size() > 5120 - 400);
        CHECK(ev.size() < 5120 + 400);
        for (std::size_t i = 1; i < ev.size(); ++i) CHECK(!event_before(ev.events[i], ev.events[i - 1]));
    }
    SUBCASE("non-positive threshold") {
        SimulatorConfig cfg;
        cfg.threshold_C = 0.0;
        CHECK_THROWS_AS(simulate_events(two_frames(0.1, 0.2), cfg, 0), ConfigError);
    }
}

TEST_CASE("simulated counts equal the crossing oracle on random ramps") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        Frame lo = testing::random_frame(8, 8, 3, 1000 + trial, 0.02, 0.9);
        Frame hi = testing::random_frame(8, 8, 3, 2000 + trial, 0.02, 0.9);
        const int n = 20 + static_cast<int>(u(rng) * 40);
        std::vector<Frame> frames;
        std::vector<double> ts;
        for (int i = 0; i < n; ++i) {
            const double w = static_cast<double>(i) / (n - 1);
            Frame f = lo;
            for (std::size_t k = 0; k < f.size(); ++k) f.data()[k] += w * (hi.data()[k] - lo.data()[k]);
            frames.push_back(f);
            ts.push_back(i * 0.003);
        }
        FrameSequence seq(frames, ts);
        const double C = 0.1 + 0.2 * u(rng);
        CHECK(per_pixel_counts(simulate_events(seq, ideal_simulator(C), trial)) == crossing_oracle(seq, C));
    }
}

TEST_CASE("make_sample") {
    SUBCASE("static noiseless scene") {
        Frame still = testing::random_frame(16, 16, 3, 8, 0.1, 0.9);
        std::vector<Frame> frames(80, still);
        std::vector<double> ts;
        for (int i = 0; i < 80; ++i) ts.push_back(i / 192.0);
        SynthesisRecipe r;
        r.randomize_degradation = false;
        r.simulator.noise_rate_hz = 0.0;
        auto s = make_sample(FrameSequence(frames, ts), r, ts[10]);
        CHECK(s.short_exposure == still);
        CHECK(s.long_exposure == still);
        CHECK(*s.gt == still);
        CHECK(s.events.size() == 0);
        CHECK(validate_sample(s).empty());
    }

    testing::SceneOptions o;
    o.frames = 51;
    auto clip = interpolate(testing::make_scene(o), 7);
    REQUIRE(clip.size() == 401);
    SynthesisRecipe recipe;

    SUBCASE("default recipe yields a valid sample") {
        auto s = make_sample(clip, recipe, clip.timestamp(100));
        CHECK(validate_sample(s).empty());
        CHECK(s.timing.t_s < s.timing.t_b);
        CHECK(s.timing.delta_t == doctest::Approx(s.timing.interval() / 2));
        CHECK(s.events.t_start == doctest::Approx(s.timing.t_s - s.timing.delta_t));
        CHECK(s.events.size() > 0);
        CHECK(s.provenance.get_double("short_exposure", 0) ==
              doctest::Approx(s.timing.exposure() / recipe.exposure_ratio_R));
    }
    SUBCASE("long exposure equals the mean of the 49 in-window frames") {
        auto s = make_sample(clip, recipe, clip.timestamp(40));
        const std::size_t i_b = 40 + recipe.interval_frames;
        for (std::size_t k = 0; k < s.long_exposure.size(); ++k) {
            long double acc = 0.0L;
            for (std::size_t i = i_b; i < i_b + 49; ++i) acc += clip.frame(i).data()[k];
            CHECK(std::abs(s.long_exposure.data()[k] - static_cast<double>(acc / 49.0L)) < 1e-12);
        }
    }
    SUBCASE("deterministic for a fixed seed") {
        CHECK(make_sample(clip, recipe, clip.timestamp(64)) == make_sample(clip, recipe, clip.timestamp(64)));
        SynthesisRecipe other = recipe;
        other.rng_seed = 99;
        CHECK(!(make_sample(clip, recipe, clip.timestamp(64)) == make_sample(clip, other, clip.timestamp(64))));
    }
    SUBCASE("coverage failures name the missing span") {
        CHECK_THROWS_WITH_AS(make_sample(clip, recipe, clip.timestamp(380)), doctest::Contains("does not cover"),
                             DataError);
        CHECK_THROWS_WITH_AS(make_sample(clip, recipe, clip.timestamp(1)), doctest::Contains("missing"), DataError);
        CHECK_THROWS_AS(make_sample(clip, recipe, 0.5 * (clip.timestamp(20) + clip.timestamp(21))), DataError);
    }
    SUBCASE("validate_sample holds across seeds") {
        for (std::uint64_t seed = 0; seed < 12; ++seed) {
            SynthesisRecipe r = recipe;
            r.rng_seed = seed;
            auto s = make_sample(clip, r, clip.timestamp(8 + 20 * seed));
            CHECK(validate_sample(s).empty());
        }
    }
}

TEST_CASE("recipe config round trip and ratio regeneration") {
    SynthesisRecipe r;
    r.rng_seed = 17;
    r.simulator.cutoff_hz = std::numeric_limits<double>::infinity();
    auto back = SynthesisRecipe::from_config(r.to_config());
    CHECK(back.to_config() == r.to_config());
    CHECK(std::isinf(back.simulator.cutoff_hz));

    for (int R = 3; R <= 11; ++R) {
        auto rr = r.with_ratio(R);
        CHECK(rr.blur_count == 7 * R);
        CHECK(rr.interval_frames == r.interval_frames);
    }
    CHECK_THROWS_AS(SynthesisRecipe::from_config(KvConfig::parse("interval_frames=0")), ConfigError);
}
