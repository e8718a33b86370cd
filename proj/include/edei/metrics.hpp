#pragma once

#include <functional>
#include <string>
#include <vector>

#include "edei/frame.hpp"
#include "edei/sample.hpp"

namespace edei {

inline constexpr double kPsnrCap = 100.0;

/// 10 log10(1 / MSE) over all channels, capped at 100 dB.
double psnr(const Frame& a, const Frame& b);

struct SsimOptions {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
};

/// Mean Gaussian-windowed SSIM on the luma of the clamped images ('valid' windows only).
double ssim(const Frame& a, const Frame& b, const SsimOptions& options = {});

/// Static-scene dual-exposure fusion (I_l / I_s) * I_s with the divisor guarded by eps.
Frame ratio_fusion_static(const Frame& short_exposure, const Frame& long_exposure, double eps = 1e-6);

struct SampleMetric {
    std::string name;
    double psnr_db = 0.0;
    double ssim = 0.0;
};

struct MetricReport {
    double psnr_db = 0.0;
    double ssim = 0.0;
    std::vector<SampleMetric> per_sample;

    void add(std::string name, const Frame& prediction, const Frame& reference);
};

// Dataset statistics

/// Mean per-pixel flow magnitude between two frames, in pixels.
using FlowEstimator = std::function<double(const Frame&, const Frame&)>;

struct FarnebackParams {
    int levels = 3;
    int window = 15;
    double pyramid_scale = 0.5;
    int iterations = 3;
    int poly_n = 5;
    double poly_sigma = 1.2;
};

double farneback_motion(const Frame& a, const Frame& b, const FarnebackParams& params = {});
FlowEstimator farneback_estimator(FarnebackParams params = {});

/// Mean Rec.601 Y.
double mean_luma(const Frame& frame);
/// Mean Sobel gradient magnitude of Y.
double mean_sobel(const Frame& frame);

struct StatsReport {
    double motion_mag = 0.0;
    double illumination = 0.0;
    double texture = 0.0;
    double event_rate = 0.0; // Mev/s
    bool motion_available = false;
    std::vector<std::string> notices;
};

/// `sequences` holds the samples of each sequence in temporal order; motion
/// uses consecutive gt frames within a sequence.
StatsReport dataset_stats(const std::vector<std::vector<ExposureSample>>& sequences,
                          const FlowEstimator& flow = farneback_estimator());

} // namespace edei
