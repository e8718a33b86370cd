#pragma once

#include <string>
#include <vector>

#include "edei/metrics.hpp"
#include "edei/model.hpp"
#include "edei/synthesis.hpp"
#include "edei/training.hpp"

namespace edei {

struct Predictions {
    Frame fused, enhanced, deblurred;
};

/// Inference on one example without gradients; outputs are not clamped.
Predictions predict(DualPathNet& net, const TrainingExample& example);

struct EvalResult {
    MetricReport fused;
    MetricReport enhanced;
    MetricReport deblurred;
};

/// Metrics of all three outputs over examples that carry ground truth.
EvalResult evaluate(DualPathNet& net, const std::vector<TrainingExample>& examples);

struct SweepRow {
    double key = 0.0; // epsilon or ratio
    double psnr = 0.0;
    double ssim = 0.0;
};

/// The nine offsets -0.2, -0.15, ..., 0.2.
std::vector<double> default_epsilons();

/// Re-voxelizes the deblurring-path window for every epsilon and scores L hat.
std::vector<SweepRow> sweep_temporal(DualPathNet& net, const std::vector<ExposureSample>& samples,
                                     const std::vector<double>& epsilons);

struct RatioSweepInput {
    FrameSequence clip;                // sharp, already interpolated
    std::vector<std::size_t> starts;   // short-exposure frame indices
};

/// Regenerates samples with `base.with_ratio(R)` for every R and scores L hat.
std::vector<SweepRow> sweep_ratio(DualPathNet& net, const std::vector<RatioSweepInput>& inputs,
                                  const SynthesisRecipe& base, const std::vector<int>& ratios);

std::string format_sweep_table(const std::string& key_name, const std::vector<SweepRow>& rows);

} // namespace edei
