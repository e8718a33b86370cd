#pragma once

// Procedural sharp clips for tests: a smooth textured background translating
// at a constant velocity plus a few soft-edged discs on their own paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "edei/frame.hpp"

namespace edei::testing {

struct SceneOptions {
    int height = 64;
    int width = 64;
    int frames = 8;
    double fps = 24.0;
    double pan_px_per_frame = 1.0; // background velocity
    int discs = 3;
    std::uint64_t seed = 1;
};

inline double scene_background(double x, double y, double phase) {
    const double u = x + phase;
    return 0.45 + 0.2 * std::sin(u * 0.21) * std::cos(y * 0.17) + 0.12 * std::sin((u + 2.0 * y) * 0.09) +
           0.08 * std::cos(u * 0.43 + y * 0.05);
}

inline FrameSequence make_scene(const SceneOptions& o) {
    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> pos_x(0.0, o.width), pos_y(0.0, o.height);
    std::uniform_real_distribution<double> vel(-1.5, 1.5), radius(4.0, 9.0), level(0.1, 0.95);
    struct Disc {
        double x, y, vx, vy, r, v[3];
    };
    std::vector<Disc> discs;
    for (int i = 0; i < o.discs; ++i) {
        discs.push_back({pos_x(rng), pos_y(rng), vel(rng), vel(rng), radius(rng), {level(rng), level(rng), level(rng)}});
    }

    std::vector<Frame> frames;
    std::vector<double> ts;
    for (int f = 0; f < o.frames; ++f) {
        Frame img(o.height, o.width, 3);
        const double phase = o.pan_px_per_frame * f;
        for (int y = 0; y < o.height; ++y) {
            for (int x = 0; x < o.width; ++x) {
                const double bg = scene_background(x, y, phase);
                double rgb[3] = {bg, 0.9 * bg + 0.05, 0.8 * bg + 0.1};
                for (const Disc& d : discs) {
                    const double dx = x - (d.x + d.vx * f), dy = y - (d.y + d.vy * f);
                    const double a = 1.0 / (1.0 + std::exp((std::sqrt(dx * dx + dy * dy) - d.r) * 1.5));
                    for (int c = 0; c < 3; ++c) rgb[c] = (1.0 - a) * rgb[c] + a * d.v[c];
                }
                for (int c = 0; c < 3; ++c) img.at(y, x, c) = std::clamp(rgb[c], 0.0, 1.0);
            }
        }
        frames.push_back(std::move(img));
        ts.push_back(f / o.fps);
    }
    return FrameSequence(std::move(frames), std::move(ts));
}

inline Frame random_frame(int h, int w, int c, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Frame f(h, w, c);
    for (double& v : f.data()) v = u(rng);
    return f;
}

} // namespace edei::testing
