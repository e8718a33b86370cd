#pragma once

// Shared data for network-level tests and the acceptance suite.

#include <vector>

#include "edei/model.hpp"
#include "edei/synthesis.hpp"
#include "support/scenes.hpp"

namespace edei::testing {

/// `count` samples cut from one synthetic clip at evenly spaced short-exposure
/// instants; every sample is `size` x `size`.
inline std::vector<ExposureSample> clip_samples(int count, int size, std::uint64_t scene_seed,
                                                std::uint64_t synth_seed = 1) {
    SceneOptions o;
    o.height = o.width = size;
    o.seed = scene_seed;
    const int stride_frames = 60; // interpolated frames between consecutive short exposures
    o.frames = (count * stride_frames + 70) / 8 + 2;
    const auto clip = interpolate(make_scene(o), 7);
    SynthesisRecipe r;
    r.rng_seed = synth_seed;
    std::vector<ExposureSample> out;
    for (int i = 0; i < count; ++i) out.push_back(make_sample(clip, r, clip.timestamp(10 + stride_frames * i)));
    return out;
}

inline ModelConfig tiny_model() {
    ModelConfig m;
    m.base_channels = 8;
    m.num_scales = 2;
    m.attn_heads = 2;
    m.dcn_groups = 2;
    m.res_blocks = 1;
    return m;
}

} // namespace edei::testing
