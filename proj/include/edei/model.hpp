#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <torch/torch.h>

#include "edei/kv_config.hpp"

namespace edei {

/// Switches for the feeding-strategy and module ablations.
struct Ablation {
    bool feed_events_deblur = true;
    bool feed_events_enhance = true;
    bool enable_da = true;
    bool enable_caf = true;
    bool serial_pipeline = false;

    void validate() const;
    friend bool operator==(const Ablation&, const Ablation&) = default;
};

struct ModelConfig {
    int base_channels = 32;
    int num_scales = 3;
    int attn_heads = 4;
    int dcn_groups = 8;
    int event_bins = 6;
    int image_channels = 3;
    int res_blocks = 4; // residual blocks per scale, encoder and decoder alike
    int ffn_expansion = 2;
    bool zero_init_heads = true;
    Ablation ablation;

    void validate() const;
    KvConfig to_config() const;
    static ModelConfig from_config(const KvConfig& cfg);
    /// Small preset used by the overfit and ablation experiments.
    static ModelConfig desk();

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Building blocks

/// Channel LayerNorm applied independently at every pixel of an NCHW tensor.
class LayerNorm2dImpl : public torch::nn::Module {
public:
    explicit LayerNorm2dImpl(int64_t channels);
    torch::Tensor forward(const torch::Tensor& x);

    torch::Tensor weight, bias;
};
TORCH_MODULE(LayerNorm2d);

class ResBlockImpl : public torch::nn::Module {
public:
    explicit ResBlockImpl(int64_t channels);
    torch::Tensor forward(const torch::Tensor& x);

    torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
};
TORCH_MODULE(ResBlock);

/// 3x3 deformable convolution with `groups` offset groups. Offsets are laid
/// out as (dy, dx) pairs per group and kernel tap: channel 2*(g*9+k) is dy.
class DeformConv2dImpl : public torch::nn::Module {
public:
    DeformConv2dImpl(int64_t channels, int64_t groups);
    torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& offset);

    int64_t channels, groups;
    torch::Tensor weight, bias;
};
TORCH_MODULE(DeformConv2d);

/// DA: offsets from [F_l; F_s], values from F_l only.
class DeformableAlignImpl : public torch::nn::Module {
public:
    DeformableAlignImpl(int64_t channels, int64_t groups);
    torch::Tensor forward(const torch::Tensor& f_long, const torch::Tensor& f_short);
    torch::Tensor offsets(const torch::Tensor& f_long, const torch::Tensor& f_short);

    torch::nn::Conv2d offset_conv{nullptr};
    DeformConv2d dcn{nullptr};
};
TORCH_MODULE(DeformableAlign);

/// Channel-wise cross attention: queries from the enhancement features,
/// keys and values from the aligned deblurring features.
class CrossAttentionImpl : public torch::nn::Module {
public:
    CrossAttentionImpl(int64_t channels, int64_t heads);
    torch::Tensor forward(const torch::Tensor& f_short, const torch::Tensor& f_long_aligned);
    /// Softmax attention map, shape (N, heads, C/heads, C/heads).
    torch::Tensor attention(const torch::Tensor& f_short, const torch::Tensor& f_long_aligned);

    int64_t heads;
    LayerNorm2d norm_q{nullptr}, norm_kv{nullptr};
    torch::nn::Conv2d q{nullptr}, q_dw{nullptr}, kv{nullptr}, kv_dw{nullptr}, project_out{nullptr};
    torch::Tensor temperature;

    /// L2-normalized queries and keys plus values, each (N, heads, C/heads, HW).
    std::tuple<torch::Tensor, torch::Tensor, torch::Tensor> project(const torch::Tensor& f_short,
                                                                    const torch::Tensor& f_long_aligned);
    torch::Tensor softmax_map(const torch::Tensor& query, const torch::Tensor& key);
};
TORCH_MODULE(CrossAttention);

class FeedForwardImpl : public torch::nn::Module {
public:
    FeedForwardImpl(int64_t channels, int64_t expansion);
    /// Returns x + FFN(x).
    torch::Tensor forward(const torch::Tensor& x);

    LayerNorm2d norm{nullptr};
    torch::nn::Conv2d project_in{nullptr}, dwconv{nullptr}, project_out{nullptr};
};
TORCH_MODULE(FeedForward);

/// One DFAF site: deformable alignment then cross-attention fusion.
class DfafImpl : public torch::nn::Module {
public:
    DfafImpl(int64_t channels, const ModelConfig& cfg);
    std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& f_long, const torch::Tensor& f_short);

    DeformableAlign align{nullptr};
    CrossAttention attn{nullptr};
    FeedForward ffn{nullptr};
};
TORCH_MODULE(Dfaf);

/// Supervised attention: returns gated features and the image-domain estimate.
class SamImpl : public torch::nn::Module {
public:
    SamImpl(int64_t channels, int64_t image_channels);
    std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& features, const torch::Tensor& image);

    torch::nn::Conv2d conv1{nullptr}, conv2{nullptr}, conv3{nullptr};
};
TORCH_MODULE(Sam);

struct CgfOutput {
    torch::Tensor fused;
    torch::Tensor mask;
};

class CgfImpl : public torch::nn::Module {
public:
    CgfImpl(int64_t channels, int64_t image_channels, bool zero_init_out);
    /// `mask_override`, when defined, replaces the predicted mask M.
    CgfOutput forward(const torch::Tensor& deblurred, const torch::Tensor& enhanced, const torch::Tensor& f_long,
                      const torch::Tensor& f_short, const torch::Tensor& mask_override = {});

    Sam sam_long{nullptr}, sam_short{nullptr};
    torch::nn::Conv2d sa1{nullptr}, sa2{nullptr}, out{nullptr};
};
TORCH_MODULE(Cgf);

/// One encoder-decoder path; the network drives its stages step by step so
/// two paths can exchange features between stages.
class PathUNetImpl : public torch::nn::Module {
public:
    PathUNetImpl(int64_t in_channels, const ModelConfig& cfg);

    torch::Tensor stem(const torch::Tensor& x);
    torch::Tensor encode(int scale, const torch::Tensor& f);
    torch::Tensor down(int scale, const torch::Tensor& f);
    torch::Tensor up(int scale, const torch::Tensor& coarse, const torch::Tensor& skip);
    torch::Tensor decode(int scale, const torch::Tensor& f);
    torch::Tensor head(const torch::Tensor& f);

    int num_scales;
    torch::nn::Conv2d stem_conv{nullptr};
    ResBlock stem_block{nullptr};
    std::vector<torch::nn::Sequential> enc, dec;
    std::vector<torch::nn::Conv2d> downs, fuses;
    std::vector<torch::nn::ConvTranspose2d> ups;
    torch::nn::Conv2d head_conv{nullptr};
};
TORCH_MODULE(PathUNet);

struct ModelInputs {
    torch::Tensor short_image;   // I_s, N x 3 x H x W
    torch::Tensor long_image;    // I_l
    torch::Tensor events_deblur; // voxelized E[t_s, t_e], N x B x H x W
    torch::Tensor events_enhance; // voxelized E[t_s - dt, t_s + dt]
};

struct ModelOutputs {
    torch::Tensor deblurred; // L_l hat
    torch::Tensor enhanced;  // L_s hat
    torch::Tensor fused;     // L hat
    torch::Tensor features_long;
    torch::Tensor features_short;
    torch::Tensor mask;
};

class DualPathNetImpl : public torch::nn::Module {
public:
    explicit DualPathNetImpl(ModelConfig cfg);

    /// Both paths; `fused`/`mask` are left undefined.
    ModelOutputs forward_paths(const ModelInputs& in);
    ModelOutputs forward(const ModelInputs& in, const torch::Tensor& mask_override = {});

    /// Parameters of everything except the fusion module.
    std::vector<torch::Tensor> path_parameters();
    std::vector<torch::Tensor> fusion_parameters();

    const ModelConfig& config() const { return cfg_; }

    PathUNet deblur{nullptr}, enhance{nullptr};
    std::vector<Dfaf> enc_dfaf, dec_dfaf;
    Cgf cgf{nullptr};
    /// Highest completed training stage, persisted in checkpoints.
    int trained_stage = 0;

private:
    ModelConfig cfg_;
};
TORCH_MODULE(DualPathNet);

struct ParameterCount {
    int64_t total = 0;
    int64_t paths = 0; // without CGF
};

ParameterCount count_parameters(const ModelConfig& cfg);
ParameterCount count_parameters(DualPathNet& net);

// Checkpoints

void save_checkpoint(const std::string& path, DualPathNet& net);
DualPathNet load_checkpoint(const std::string& path);

} // namespace edei
