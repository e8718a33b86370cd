#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"

#include "edei/error.hpp"
#include "edei/representation.hpp"
#include "support/oracles.hpp"

using namespace edei;
using namespace edei::testing;

TEST_CASE("voxelize examples") {
    EventStream s;
    s.height = 8;
    s.width = 8;
    s.t_end = 1.0;

    SUBCASE("empty stream") {
        auto g = voxelize(s, {0.0, 1.0}, 6);
        CHECK(g.data.size() == 6 * 64);
        for (double v : g.data) CHECK(v == 0.0);
    }
    SUBCASE("event on a bin centre") {
        s.events = {{0.4, 3, 5, 1}}; // u = 0.4 * 5 = 2
        auto g = voxelize(s, {0.0, 1.0}, 6);
        CHECK(g.at(2, 5, 3) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(g.total() == doctest::Approx(1.0));
        double off = 0.0;
        for (double v : g.data) off += std::abs(v);
        CHECK(off == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("event at u = 2.3 with negative polarity") {
        s.events = {{2.3 / 5.0, 1, 1, -1}};
        auto g = voxelize(s, {0.0, 1.0}, 6);
        const double u = 2.3, frac = u - std::floor(u);
        CHECK(g.at(2, 1, 1) == doctest::Approx(-(1.0 - frac)).epsilon(1e-12));
        CHECK(g.at(3, 1, 1) == doctest::Approx(-frac).epsilon(1e-12));
        CHECK(g.at(2, 1, 1) == doctest::Approx(-0.7));
        CHECK(g.at(3, 1, 1) == doctest::Approx(-0.3));
    }
    SUBCASE("window endpoints and outside events") {
        s.events = {{-0.1, 0, 0, 1}, {0.0, 0, 0, 1}, {1.0, 0, 0, -1}, {1.2, 0, 0, 1}};
        auto g = voxelize(s, {0.0, 1.0}, 6);
        CHECK(g.at(0, 0, 0) == 1.0);
        CHECK(g.at(5, 0, 0) == -1.0);
        CHECK(g.total() == 0.0);
    }
    SUBCASE("single bin collects all mass") {
        s.events = {{0.2, 0, 0, 1}, {0.9, 0, 0, 1}};
        auto g = voxelize(s, {0.0, 1.0}, 1);
        CHECK(g.at(0, 0, 0) == 2.0);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(voxelize(s, {1.0, 1.0}, 6), DataError);
        CHECK_THROWS_AS(voxelize(s, {0.0, 1.0}, 0), ConfigError);
    }
}

TEST_CASE("voxel grid properties over random streams") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        const int h = 8 + rng() % 5, w = 8 + rng() % 5, bins = 1 + rng() % 10;
        const double t0 = u(rng) * 10.0, t1 = t0 + 0.01 + u(rng);
        auto s = random_stream(rng, h, w, t0 - 0.1, t1 + 0.1, 50 + rng() % 300);
        const TimeWindow win{t0, t1};
        auto g = voxelize(s, win, bins);

        // mass conservation
        const double expect = windowed_polarity(s, win);
        CHECK(std::abs(g.total() - expect) <= 1e-9 * std::max(1.0, std::abs(expect)));

        // time-shift equivariance
        const double delta = std::ldexp(1.0, static_cast<int>(rng() % 6));
        EventStream shifted = s;
        for (Event& e : shifted.events) e.t += delta;
        auto gs = voxelize(shifted, {t0 + delta, t1 + delta}, bins);
        double max_diff = 0.0;
        for (std::size_t i = 0; i < g.data.size(); ++i) max_diff = std::max(max_diff, std::abs(g.data[i] - gs.data[i]));
        CHECK(max_diff < 1e-9);

        // refinement keeps per-pixel mass
        auto g2 = voxelize(s, win, 2 * bins);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double a = 0.0, b = 0.0;
                for (int k = 0; k < bins; ++k) a += g.at(k, y, x);
                for (int k = 0; k < 2 * bins; ++k) b += g2.at(k, y, x);
                CHECK(std::abs(a - b) < 1e-9);
            }
        }
    }
}

TEST_CASE("perturb_window") {
    ExposureTiming t{0.0, 0.1, 0.5, 0.05};
    CHECK(perturb_window(t, 0.0) == TimeWindow{0.0, 0.5});
    auto plus = perturb_window(t, 0.2);
    CHECK(plus.start == doctest::Approx(-0.02));
    CHECK(plus.end == 0.5);
    auto minus = perturb_window(t, -0.2);
    CHECK(minus.start == doctest::Approx(0.02));
    CHECK(minus.end == 0.5);
    auto enh = enhancement_window(t);
    CHECK(enh.start == -0.05);
    CHECK(enh.end == 0.05);
}
