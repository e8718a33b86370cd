#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "edei/events.hpp"
#include "edei/frame.hpp"
#include "edei/kv_config.hpp"

namespace edei {

/// Acquisition timing of one dual-exposure pair. The short exposure is an
/// instant at t_s and precedes the long exposure [t_b, t_e].
struct ExposureTiming {
    double t_s = 0.0;
    double t_b = 0.0;
    double t_e = 0.0;
    double delta_t = 0.0; // half-width of the enhancement-path event window

    double exposure() const { return t_e - t_b; }
    double interval() const { return t_b - t_s; }

    friend bool operator==(const ExposureTiming&, const ExposureTiming&) = default;
};

struct ExposureSample {
    Frame short_exposure;
    Frame long_exposure;
    EventStream events;
    std::optional<Frame> gt; // latent L(t_s); absent for capture-only inputs
    ExposureTiming timing;
    std::uint64_t seed = 0;
    KvConfig provenance; // synthesis parameters, persisted in meta.cfg

    friend bool operator==(const ExposureSample&, const ExposureSample&) = default;
};

/// Lists every broken invariant; an empty result means the sample is well formed.
std::vector<std::string> validate_sample(const ExposureSample& sample);

} // namespace edei
