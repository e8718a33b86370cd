#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"

#include "edei/error.hpp"
#include "edei/metrics.hpp"
#include "support/scenes.hpp"
#include "support/oracles.hpp"

using namespace edei;
using namespace edei::testing;

namespace {

Frame add_uniform_noise(const Frame& f, double magnitude, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-magnitude, magnitude);
    Frame out = f;
    for (double& v : out.data()) v += u(rng);
    return out;
}

} // namespace

TEST_CASE("psnr") {
    Frame a = testing::random_frame(16, 16, 3, 1);
    CHECK(psnr(a, a) == kPsnrCap);
    CHECK(psnr(Frame(16, 16, 3, 0.2), Frame(16, 16, 3, 0.3)) == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(psnr(Frame(16, 16, 3, 0.5), Frame(16, 16, 3, 0.4)) == doctest::Approx(20.0).epsilon(1e-12));
    CHECK_THROWS_AS(psnr(a, Frame(16, 16, 1)), DataError);

    for (std::uint64_t s = 0; s < 20; ++s) {
        Frame x = testing::random_frame(13, 17, 3, 100 + s), y = testing::random_frame(13, 17, 3, 200 + s);
        long double se = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const long double d = static_cast<long double>(x.data()[i]) - y.data()[i];
            se += d * d;
        }
        const double expected = static_cast<double>(-10.0L * std::log10(se / x.size()));
        CHECK(std::abs(psnr(x, y) - expected) < 1e-9);
        CHECK(psnr(x, y) == psnr(y, x));
    }
}

TEST_CASE("psnr decreases with noise magnitude") {
    Frame base = testing::random_frame(32, 32, 3, 7, 0.2, 0.8);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        double prev = kPsnrCap;
        for (double m : {0.01, 0.02, 0.05, 0.1, 0.2}) {
            const double p = psnr(base, add_uniform_noise(base, m, seed));
            CHECK(p < prev);
            prev = p;
        }
    }
}

TEST_CASE("ssim") {
    SUBCASE("identical images") {
        for (std::uint64_t s = 0; s < 10; ++s) {
            Frame a = testing::random_frame(20, 24, 3, s);
            CHECK(ssim(a, a) == 1.0);
        }
    }
    SUBCASE("binary image against its complement") {
        std::mt19937_64 rng(4);
        Frame a(24, 24, 1);
        for (double& v : a.data()) v = static_cast<double>(rng() % 2);
        Frame b = a;
        for (double& v : b.data()) v = 1.0 - v;
        CHECK(ssim(a, b) == doctest::Approx(ssim_oracle(a, b)).epsilon(1e-9));
    }
    SUBCASE("constant images reduce to the luminance term") {
        const double a = 0.2, b = 0.7, c1 = 1e-4;
        const double expected = (2 * a * b + c1) / (a * a + b * b + c1);
        CHECK(ssim(Frame(16, 16, 1, a), Frame(16, 16, 1, b)) == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("random pairs match the oracle and stay in range") {
        for (std::uint64_t s = 0; s < 10; ++s) {
            Frame x = testing::random_frame(15, 19, 1, 300 + s);
            Frame y = add_uniform_noise(x, 0.3, s);
            for (double& v : y.data()) v = std::clamp(v, 0.0, 1.0);
            const double v = ssim(x, y);
            CHECK(v == doctest::Approx(ssim_oracle(x, y)).epsilon(1e-9));
            CHECK(v >= -1.0);
            CHECK(v <= 1.0);
            CHECK(v < 1.0);
        }
    }
    SUBCASE("image smaller than the window") {
        CHECK_THROWS_AS(ssim(Frame(8, 20, 1), Frame(8, 20, 1)), DataError);
    }
}

TEST_CASE("ratio_fusion_static") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        Frame is = testing::random_frame(12, 12, 3, s, 1e-3, 0.3);
        Frame il = testing::random_frame(12, 12, 3, 50 + s);
        Frame out = ratio_fusion_static(is, il);
        for (std::size_t i = 0; i < out.size(); ++i) CHECK(std::abs(out.data()[i] - il.data()[i]) < 1e-6);
    }
    Frame zeros(8, 8, 3, 0.0);
    Frame out = ratio_fusion_static(zeros, Frame(8, 8, 3, 0.5));
    for (double v : out.data()) CHECK(std::isfinite(v));
}

TEST_CASE("metric report averages clamped predictions") {
    MetricReport r;
    Frame ref(16, 16, 3, 0.5);
    r.add("a", ref, ref);
    Frame off(16, 16, 3, 0.6);
    r.add("b", off, ref);
    REQUIRE(r.per_sample.size() == 2);
    CHECK(r.psnr_db == doctest::Approx((100.0 + 20.0) / 2));
    Frame over(16, 16, 3, 1.5);
    MetricReport q;
    q.add("c", over, Frame(16, 16, 3, 1.0));
    CHECK(q.psnr_db == kPsnrCap);
}

TEST_CASE("dataset statistics") {
    SUBCASE("motion of identical and shifted frames") {
        testing::SceneOptions o;
        o.height = o.width = 96;
        o.discs = 0;
        o.frames = 1;
        Frame f = testing::make_scene(o).frame(0);
        CHECK(farneback_motion(f, f) < 0.05);

        o.pan_px_per_frame = 3.0;
        o.frames = 2;
        auto pair = testing::make_scene(o);
        CHECK(farneback_motion(pair.frame(0), pair.frame(1)) == doctest::Approx(3.0).epsilon(0.1));
    }
    SUBCASE("event rate, illumination, texture") {
        ExposureSample s;
        s.gt = Frame(16, 16, 3, 0.25);
        s.long_exposure = *s.gt;
        s.short_exposure = *s.gt;
        s.events.height = s.events.width = 16;
        s.events.t_end = 1.0;
        s.events.events.resize(2'000'000);
        auto r = dataset_stats({{s}});
        CHECK(r.event_rate == doctest::Approx(2.0));
        CHECK(r.illumination == doctest::Approx(0.25));
        CHECK(r.texture == doctest::Approx(0.0));
        CHECK(!r.motion_available);
        REQUIRE(r.notices.size() == 1);
        CHECK(r.notices[0].find("motion omitted") != std::string::npos);
    }
}
