#include <cmath>

#include "edei/error.hpp"
#include "edei/model.hpp"

namespace edei {

namespace F = torch::nn::functional;

namespace {

torch::nn::Conv2d pointwise(int64_t in, int64_t out) {
    return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 1).bias(false));
}

torch::nn::Conv2d depthwise(int64_t channels) {
    return torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, channels, 3).padding(1).groups(channels).bias(false));
}

} // namespace

LayerNorm2dImpl::LayerNorm2dImpl(int64_t channels) {
    weight = register_parameter("weight", torch::ones({channels}));
    bias = register_parameter("bias", torch::zeros({channels}));
}

torch::Tensor LayerNorm2dImpl::forward(const torch::Tensor& x) {
    auto mu = x.mean(1, true);
    auto var = (x - mu).pow(2).mean(1, true);
    const int64_t c = x.size(1);
    return (x - mu) / torch::sqrt(var + 1e-5) * weight.view({1, c, 1, 1}) + bias.view({1, c, 1, 1});
}

CrossAttentionImpl::CrossAttentionImpl(int64_t channels, int64_t heads_) : heads(heads_) {
    if (channels % heads != 0) throw ConfigError("cross attention: channels not divisible by heads");
    norm_q = register_module("norm_q", LayerNorm2d(channels));
    norm_kv = register_module("norm_kv", LayerNorm2d(channels));
    q = register_module("q", pointwise(channels, channels));
    q_dw = register_module("q_dw", depthwise(channels));
    kv = register_module("kv", pointwise(channels, 2 * channels));
    kv_dw = register_module("kv_dw", depthwise(2 * channels));
    project_out = register_module("project_out", pointwise(channels, channels));
    temperature = register_parameter("temperature", torch::ones({heads, 1, 1}));
}

std::tuple<torch::Tensor, torch::Tensor, torch::Tensor> CrossAttentionImpl::project(
    const torch::Tensor& f_short, const torch::Tensor& f_long_aligned) {
    if (!f_short.sizes().equals(f_long_aligned.sizes())) throw DataError("cross attention: feature shapes differ");
    const int64_t N = f_short.size(0), C = f_short.size(1), HW = f_short.size(2) * f_short.size(3);
    auto query = q_dw->forward(q->forward(norm_q->forward(f_short))).reshape({N, heads, C / heads, HW});
    auto kv_out = kv_dw->forward(kv->forward(norm_kv->forward(f_long_aligned))).chunk(2, 1);
    auto key = kv_out[0].reshape({N, heads, C / heads, HW});
    auto value = kv_out[1].reshape({N, heads, C / heads, HW});
    auto l2 = F::NormalizeFuncOptions().dim(-1);
    return {F::normalize(query, l2), F::normalize(key, l2), value};
}

torch::Tensor CrossAttentionImpl::softmax_map(const torch::Tensor& query, const torch::Tensor& key) {
    const double d = static_cast<double>(query.size(2));
    return (torch::matmul(query, key.transpose(-2, -1)) * temperature / std::sqrt(d)).softmax(-1);
}

torch::Tensor CrossAttentionImpl::attention(const torch::Tensor& f_short, const torch::Tensor& f_long_aligned) {
    auto [query, key, value] = project(f_short, f_long_aligned);
    return softmax_map(query, key);
}

torch::Tensor CrossAttentionImpl::forward(const torch::Tensor& f_short, const torch::Tensor& f_long_aligned) {
    auto [query, key, value] = project(f_short, f_long_aligned);
    auto mixed = torch::matmul(softmax_map(query, key), value).reshape(f_short.sizes());
    return f_short + project_out->forward(mixed);
}

FeedForwardImpl::FeedForwardImpl(int64_t channels, int64_t expansion) {
    const int64_t hidden = channels * expansion;
    norm = register_module("norm", LayerNorm2d(channels));
    project_in = register_module("project_in", pointwise(channels, hidden));
    dwconv = register_module("dwconv", depthwise(hidden));
    project_out = register_module("project_out", pointwise(hidden, channels));
}

torch::Tensor FeedForwardImpl::forward(const torch::Tensor& x) {
    auto h = dwconv->forward(project_in->forward(norm->forward(x)));
    return x + project_out->forward(F::gelu(h));
}

DfafImpl::DfafImpl(int64_t channels, const ModelConfig& cfg) {
    if (cfg.ablation.enable_da) align = register_module("align", DeformableAlign(channels, cfg.dcn_groups));
    if (cfg.ablation.enable_caf) {
        attn = register_module("attn", CrossAttention(channels, cfg.attn_heads));
        ffn = register_module("ffn", FeedForward(channels, cfg.ffn_expansion));
    }
}

std::pair<torch::Tensor, torch::Tensor> DfafImpl::forward(const torch::Tensor& f_long, const torch::Tensor& f_short) {
    torch::Tensor aligned = align ? align->forward(f_long, f_short) : f_long;
    torch::Tensor fused = attn ? ffn->forward(attn->forward(f_short, aligned)) : f_short;
    return {aligned, fused};
}

} // namespace edei
