#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "edei/kv_config.hpp"
#include "edei/model.hpp"
#include "edei/representation.hpp"
#include "edei/sample.hpp"

namespace edei {

// Tensor conversion

/// HWC frame to a 1 x C x H x W float32 tensor.
torch::Tensor frame_to_tensor(const Frame& frame);
/// 1 x C x H x W (or C x H x W) tensor back to a frame, values copied as-is.
Frame tensor_to_frame(const torch::Tensor& tensor);
torch::Tensor voxel_to_tensor(const VoxelGrid& grid);

/// Network-ready tensors for one sample; `gt` is undefined when absent.
struct TrainingExample {
    std::string name;
    torch::Tensor short_image, long_image, events_deblur, events_enhance, gt;
};

/// `epsilon` perturbs the deblurring-path window as in the temporal sweep.
TrainingExample make_example(const ExposureSample& sample, int bins, double epsilon = 0.0, std::string name = {});
std::vector<TrainingExample> make_examples(const std::vector<ExposureSample>& samples, int bins, double epsilon = 0.0);

ModelInputs to_inputs(const TrainingExample& example);

// Loss

struct LossWeights {
    double fused = 0.0;     // lambda_1, on L hat
    double enhanced = 1.0;  // lambda_2, on L_s hat
    double deblurred = 0.5; // lambda_3, on L_l hat

    friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

/// Weighted sum of mean absolute errors against `gt`; terms with zero weight
/// may pass undefined predictions.
torch::Tensor dei_loss(const torch::Tensor& fused, const torch::Tensor& enhanced, const torch::Tensor& deblurred,
                       const torch::Tensor& gt, const LossWeights& w);

// Training

struct StageConfig {
    LossWeights lambdas;
    double lr = 1e-4;
    int epochs = 100;
};

struct TrainConfig {
    StageConfig stage1{{0.0, 1.0, 0.5}, 1e-4, 100};
    StageConfig stage2{{1.0, 0.0, 0.0}, 5e-5, 50};
    int batch_size = 8;
    int crop = 256;
    std::uint64_t seed = 0;
    double grad_clip = 1.0;
    double lr_floor_ratio = 0.01; // cosine floor as a fraction of the stage lr
    double restart_fraction = 0.5; // restart period as a fraction of the stage length
    int max_steps = 0;             // caps the stage length when > 0
    int val_every = 1;             // epochs between validation passes
    int threads = 1;
    double event_window_epsilon = 0.0;
    ModelConfig model;

    void validate() const;
    const StageConfig& stage(int s) const;
    KvConfig to_config() const;
    static TrainConfig from_config(const KvConfig& cfg);
    /// Laptop-scale preset: desk model, 64 px crops, batch 4.
    static TrainConfig desk();
};

/// Warm-restart cosine schedule evaluated at optimizer step `step` of `total`.
double sgdr_lr(double base_lr, double floor_ratio, double restart_fraction, int step, int total);

/// Top-left corner of the random crop used for `slot` of optimizer step `step`.
std::pair<int, int> crop_origin(int height, int width, int crop, std::uint64_t seed, std::uint64_t step,
                                std::uint64_t slot);

struct EpochRecord {
    int epoch = 0;
    int stage = 1;
    double loss = 0.0;
    double val_psnr = 0.0;
    double val_ssim = 0.0;
    double lr = 0.0;
    bool validated = false;

    std::string to_json() const;
};

struct TrainResult {
    std::vector<EpochRecord> epochs;
    std::vector<double> step_losses;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Runs one stage in place. Stage 2 needs a network that finished stage 1
/// and trains only the fusion parameters.
TrainResult train_stage(DualPathNet& net, const std::vector<TrainingExample>& train,
                        const std::vector<TrainingExample>& val, const TrainConfig& cfg, int stage,
                        const EpochCallback& on_epoch = {});

/// Fresh network seeded from `cfg.seed`.
DualPathNet make_network(const TrainConfig& cfg);

struct Lambda3Row {
    double lambda3 = 0.0;
    double psnr_deblurred = 0.0;
    double psnr_enhanced = 0.0;
};

/// Retrains stage 1 from scratch for every lambda_3 value and reports both paths.
std::vector<Lambda3Row> lambda3_sweep(const std::vector<TrainingExample>& train,
                                      const std::vector<TrainingExample>& val, const TrainConfig& cfg,
                                      const std::vector<double>& values);

} // namespace edei
