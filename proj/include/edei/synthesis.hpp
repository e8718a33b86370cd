#pragma once

#include <cstdint>
#include <limits>

#include "edei/events.hpp"
#include "edei/frame.hpp"
#include "edei/kv_config.hpp"
#include "edei/sample.hpp"

namespace edei {

/// Added inside every log(L) so black pixels stay finite.
inline constexpr double kLogFloor = 1e-4;

/// Low-light darkening J = beta * (alpha * L)^gamma and signal-dependent
/// Gaussian noise with variance sigma_p * J + sigma_g^2.
struct DegradationParams {
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 1.0;
    double sigma_p = 0.0;
    double sigma_g = 0.0;

    /// Throws ConfigError when alpha, beta not in (0,1], gamma < 1, or a sigma is negative.
    void validate() const;

    /// Draws alpha~U(0.9,1), beta~U(0.5,1), gamma~U(2,3.5), sigma_p,sigma_g~U(0.05,0.1).
    static DegradationParams sample(std::uint64_t seed);

    friend bool operator==(const DegradationParams&, const DegradationParams&) = default;
};

struct SimulatorConfig {
    double threshold_C = 0.2;    // log-intensity contrast threshold
    double cutoff_hz = 15.0;     // first-order low-pass; infinity disables filtering
    double noise_rate_hz = 1.0;  // spurious events per pixel per second
    double refractory_s = 0.0;

    void validate() const;
};

/// How a sharp clip becomes training samples. Frame counts refer to the
/// interpolated (high frame-rate) sequence.
struct SynthesisRecipe {
    double fps = 24.0;           // source frame rate
    int interp_factor = 7;       // frames inserted between neighbours
    int blur_count = 49;         // frames averaged into the long exposure
    double exposure_ratio_R = 7.0;
    int interval_frames = 8;     // T_i = t_b - t_s, in interpolated frames
    double delta_t = 0.0;        // <= 0 selects T_i / 2
    int sample_stride = 0;       // CLI: frames between consecutive samples, 0 = non-overlapping
    int max_samples = 0;         // CLI: per sequence, 0 = unlimited
    bool randomize_degradation = true;
    DegradationParams degradation;
    SimulatorConfig simulator;
    std::uint64_t rng_seed = 0;

    void validate() const;
    KvConfig to_config() const;
    static SynthesisRecipe from_config(const KvConfig& cfg);

    /// Same recipe at a different exposure ratio; blur_count scales with R and T_i is unchanged.
    SynthesisRecipe with_ratio(double ratio) const;
};

struct SimulatorStats {
    std::size_t steps = 0;
    std::size_t large_steps = 0; // per-pixel steps whose filtered log change exceeded 3C
    double max_step_over_C = 0.0;
};

/// Inserts `factor` linearly blended frames between neighbours.
FrameSequence interpolate(const FrameSequence& seq, int factor);

/// Pixel-wise mean of the frames whose timestamps lie in [t_b, t_e].
Frame synth_long(const FrameSequence& seq, const ExposureTiming& timing);

/// Deterministic part of the low-light model, J = beta * (alpha * L)^gamma.
Frame darken(const Frame& gt, const DegradationParams& params);

/// One draw of N(J, sigma_p*J + sigma_g^2) per pixel, without clamping.
Frame sample_short_unclamped(const Frame& gt, const DegradationParams& params, std::uint64_t seed);

/// Short-exposure frame: sample_short_unclamped clamped to [0,1].
Frame synth_short(const Frame& gt, const DegradationParams& params, std::uint64_t seed);

/// Threshold-crossing event simulator on Rec.601 log-luminance.
EventStream simulate_events(const FrameSequence& seq, const SimulatorConfig& cfg, std::uint64_t seed,
                            SimulatorStats* stats = nullptr);

/// Timing derived from a recipe for the frame at index `short_index`.
ExposureTiming derive_timing(const FrameSequence& seq, const SynthesisRecipe& recipe, std::size_t short_index);

/// One training tuple with the short exposure at time t_s (must be a frame timestamp of `seq`).
ExposureSample make_sample(const FrameSequence& seq, const SynthesisRecipe& recipe, double t_s);

} // namespace edei
