#include <cmath>

#include "edei/error.hpp"
#include "edei/model.hpp"

namespace edei {

namespace F = torch::nn::functional;

namespace {

torch::nn::Conv2d conv3x3(int64_t in, int64_t out, int64_t stride = 1) {
    return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).stride(stride).padding(1));
}

void zero_(torch::nn::Conv2d& conv) {
    torch::NoGradGuard no_grad;
    conv->weight.zero_();
    if (conv->bias.defined()) conv->bias.zero_();
}

torch::Tensor run(torch::nn::Sequential& seq, const torch::Tensor& x) { return seq->is_empty() ? x : seq->forward(x); }

void require_4d(const torch::Tensor& t, int64_t channels, const char* name) {
    if (!t.defined() || t.dim() != 4 || t.size(1) != channels) {
        throw DataError(std::string("model input ") + name + " must be N x " + std::to_string(channels) + " x H x W");
    }
}

} // namespace

// Configuration

void Ablation::validate() const {
    if (serial_pipeline && (enable_da || enable_caf)) {
        throw ConfigError("serial_pipeline excludes enable_da and enable_caf; set both to false");
    }
}

void ModelConfig::validate() const {
    if (base_channels < 1) throw ConfigError("base_channels must be >= 1");
    if (num_scales < 1) throw ConfigError("num_scales must be >= 1");
    if (attn_heads < 1 || base_channels % attn_heads != 0) {
        throw ConfigError("base_channels must be divisible by attn_heads");
    }
    if (dcn_groups < 1 || base_channels % dcn_groups != 0) {
        throw ConfigError("base_channels must be divisible by dcn_groups");
    }
    if (event_bins < 1) throw ConfigError("event_bins must be >= 1");
    if (image_channels != 3) throw ConfigError("image_channels must be 3");
    if (res_blocks < 0) throw ConfigError("res_blocks must be >= 0");
    if (ffn_expansion < 1) throw ConfigError("ffn_expansion must be >= 1");
    ablation.validate();
}

KvConfig ModelConfig::to_config() const {
    KvConfig c;
    c.set("base_channels", base_channels);
    c.set("num_scales", num_scales);
    c.set("attn_heads", attn_heads);
    c.set("dcn_groups", dcn_groups);
    c.set("event_bins", event_bins);
    c.set("image_channels", image_channels);
    c.set("res_blocks", res_blocks);
    c.set("ffn_expansion", ffn_expansion);
    c.set("zero_init_heads", zero_init_heads);
    c.set("feed_events_deblur", ablation.feed_events_deblur);
    c.set("feed_events_enhance", ablation.feed_events_enhance);
    c.set("enable_da", ablation.enable_da);
    c.set("enable_caf", ablation.enable_caf);
    c.set("serial_pipeline", ablation.serial_pipeline);
    return c;
}

ModelConfig ModelConfig::from_config(const KvConfig& c) {
    ModelConfig m;
    auto get = [&](const char* key, int fallback) { return static_cast<int>(c.get_int(key, fallback)); };
    m.base_channels = get("base_channels", m.base_channels);
    m.num_scales = get("num_scales", m.num_scales);
    m.attn_heads = get("attn_heads", m.attn_heads);
    m.dcn_groups = get("dcn_groups", m.dcn_groups);
    m.event_bins = get("event_bins", m.event_bins);
    m.image_channels = get("image_channels", m.image_channels);
    m.res_blocks = get("res_blocks", m.res_blocks);
    m.ffn_expansion = get("ffn_expansion", m.ffn_expansion);
    m.zero_init_heads = c.get_bool("zero_init_heads", m.zero_init_heads);
    auto& a = m.ablation;
    a.feed_events_deblur = c.get_bool("feed_events_deblur", a.feed_events_deblur);
    a.feed_events_enhance = c.get_bool("feed_events_enhance", a.feed_events_enhance);
    a.enable_da = c.get_bool("enable_da", a.enable_da);
    a.enable_caf = c.get_bool("enable_caf", a.enable_caf);
    a.serial_pipeline = c.get_bool("serial_pipeline", a.serial_pipeline);
    m.validate();
    return m;
}

ModelConfig ModelConfig::desk() {
    ModelConfig m;
    m.base_channels = 16;
    m.num_scales = 2;
    m.attn_heads = 2;
    m.dcn_groups = 4;
    m.res_blocks = 1;
    return m;
}

// Blocks

ResBlockImpl::ResBlockImpl(int64_t channels) {
    conv1 = register_module("conv1", conv3x3(channels, channels));
    conv2 = register_module("conv2", conv3x3(channels, channels));
}

torch::Tensor ResBlockImpl::forward(const torch::Tensor& x) {
    return x + conv2->forward(torch::relu(conv1->forward(x)));
}

SamImpl::SamImpl(int64_t channels, int64_t image_channels) {
    conv1 = register_module("conv1", conv3x3(channels, channels));
    conv2 = register_module("conv2", conv3x3(channels, image_channels));
    conv3 = register_module("conv3", conv3x3(image_channels, channels));
}

std::pair<torch::Tensor, torch::Tensor> SamImpl::forward(const torch::Tensor& features, const torch::Tensor& image) {
    auto estimate = conv2->forward(features) + image;
    auto gate = torch::sigmoid(conv3->forward(estimate));
    return {conv1->forward(features) * gate + features, estimate};
}

CgfImpl::CgfImpl(int64_t channels, int64_t image_channels, bool zero_init_out) {
    sam_long = register_module("sam_long", Sam(channels, image_channels));
    sam_short = register_module("sam_short", Sam(channels, image_channels));
    sa1 = register_module("sa1", conv3x3(2 * channels, channels));
    sa2 = register_module("sa2", conv3x3(channels, 1));
    out = register_module("out", conv3x3(channels, image_channels));
    if (zero_init_out) zero_(out);
}

CgfOutput CgfImpl::forward(const torch::Tensor& deblurred, const torch::Tensor& enhanced, const torch::Tensor& f_long,
                           const torch::Tensor& f_short, const torch::Tensor& mask_override) {
    auto gated_long = sam_long->forward(f_long, deblurred).first;
    auto gated_short = sam_short->forward(f_short, enhanced).first;
    torch::Tensor mask;
    if (mask_override.defined()) {
        mask = mask_override;
    } else {
        mask = torch::sigmoid(sa2->forward(torch::relu(sa1->forward(torch::cat({gated_long, gated_short}, 1)))));
    }
    auto blended = mask * gated_short + (1.0 - mask) * gated_long;
    return {out->forward(blended) + enhanced, mask};
}

PathUNetImpl::PathUNetImpl(int64_t in_channels, const ModelConfig& cfg) : num_scales(cfg.num_scales) {
    const int64_t C = cfg.base_channels;
    stem_conv = register_module("stem_conv", conv3x3(in_channels, C));
    stem_block = register_module("stem_block", ResBlock(C));
    for (int s = 0; s < num_scales; ++s) {
        const int64_t width = C << s;
        torch::nn::Sequential e, d;
        for (int b = 0; b < cfg.res_blocks; ++b) {
            e->push_back(ResBlock(width));
            d->push_back(ResBlock(width));
        }
        enc.push_back(register_module("enc" + std::to_string(s), e));
        dec.push_back(register_module("dec" + std::to_string(s), d));
        if (s + 1 < num_scales) {
            downs.push_back(register_module("down" + std::to_string(s), conv3x3(width, 2 * width, 2)));
            ups.push_back(register_module(
                "up" + std::to_string(s),
                torch::nn::ConvTranspose2d(torch::nn::ConvTranspose2dOptions(2 * width, width, 2).stride(2))));
            fuses.push_back(register_module(
                "fuse" + std::to_string(s), torch::nn::Conv2d(torch::nn::Conv2dOptions(2 * width, width, 1))));
        }
    }
    head_conv = register_module("head", conv3x3(C, cfg.image_channels));
    if (cfg.zero_init_heads) zero_(head_conv);
}

torch::Tensor PathUNetImpl::stem(const torch::Tensor& x) { return stem_block->forward(stem_conv->forward(x)); }
torch::Tensor PathUNetImpl::encode(int s, const torch::Tensor& f) { return run(enc[s], f); }
torch::Tensor PathUNetImpl::down(int s, const torch::Tensor& f) { return downs[s]->forward(f); }
torch::Tensor PathUNetImpl::decode(int s, const torch::Tensor& f) { return run(dec[s], f); }
torch::Tensor PathUNetImpl::head(const torch::Tensor& f) { return head_conv->forward(f); }

torch::Tensor PathUNetImpl::up(int s, const torch::Tensor& coarse, const torch::Tensor& skip) {
    return fuses[s]->forward(torch::cat({ups[s]->forward(coarse), skip}, 1));
}

// Network

DualPathNetImpl::DualPathNetImpl(ModelConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const int64_t img = cfg_.image_channels, bins = cfg_.event_bins;
    deblur = register_module("deblur", PathUNet(img + bins, cfg_));
    if (cfg_.ablation.serial_pipeline) {
        enhance = register_module("enhance", PathUNet(2 * img + bins, cfg_));
    } else {
        enhance = register_module("enhance", PathUNet(img + bins, cfg_));
        if (cfg_.ablation.enable_da || cfg_.ablation.enable_caf) {
            for (int s = 0; s < cfg_.num_scales; ++s) {
                const int64_t width = static_cast<int64_t>(cfg_.base_channels) << s;
                enc_dfaf.push_back(register_module("enc_dfaf" + std::to_string(s), Dfaf(width, cfg_)));
                dec_dfaf.push_back(register_module("dec_dfaf" + std::to_string(s), Dfaf(width, cfg_)));
            }
        }
    }
    cgf = register_module("cgf", Cgf(cfg_.base_channels, img, cfg_.zero_init_heads));
}

namespace {

// Single path run end to end, used by the serial pipeline.
std::pair<torch::Tensor, torch::Tensor> run_path(PathUNet& path, const torch::Tensor& x) {
    std::vector<torch::Tensor> skips;
    auto f = path->stem(x);
    for (int s = 0; s < path->num_scales; ++s) {
        f = path->encode(s, f);
        if (s + 1 < path->num_scales) {
            skips.push_back(f);
            f = path->down(s, f);
        }
    }
    for (int s = path->num_scales - 1; s >= 0; --s) {
        if (s + 1 < path->num_scales) f = path->up(s, f, skips[s]);
        f = path->decode(s, f);
    }
    return {f, path->head(f)};
}

} // namespace

ModelOutputs DualPathNetImpl::forward_paths(const ModelInputs& in) {
    const int64_t img = cfg_.image_channels, bins = cfg_.event_bins;
    require_4d(in.short_image, img, "short_image");
    require_4d(in.long_image, img, "long_image");
    require_4d(in.events_deblur, bins, "events_deblur");
    require_4d(in.events_enhance, bins, "events_enhance");
    const auto shape = in.short_image.sizes();
    for (const auto* t : {&in.long_image, &in.events_deblur, &in.events_enhance}) {
        if (t->size(0) != shape[0] || t->size(2) != shape[2] || t->size(3) != shape[3]) {
            throw DataError("model inputs differ in batch or spatial size");
        }
    }

    // Pad to a multiple of the coarsest stride; outputs are cropped back.
    const int64_t H = shape[2], W = shape[3], m = int64_t{1} << (cfg_.num_scales - 1);
    const int64_t ph = (m - H % m) % m, pw = (m - W % m) % m;
    auto pad = [&](const torch::Tensor& t) {
        return (ph || pw) ? F::pad(t, F::PadFuncOptions({0, pw, 0, ph}).mode(torch::kReplicate)) : t;
    };
    auto crop = [&](const torch::Tensor& t) {
        return (ph || pw) ? t.slice(2, 0, H).slice(3, 0, W) : t;
    };
    auto I_s = pad(in.short_image), I_l = pad(in.long_image);
    auto E_d = cfg_.ablation.feed_events_deblur ? pad(in.events_deblur) : torch::zeros_like(pad(in.events_deblur));
    auto E_e = cfg_.ablation.feed_events_enhance ? pad(in.events_enhance) : torch::zeros_like(pad(in.events_enhance));

    ModelOutputs out;
    if (cfg_.ablation.serial_pipeline) {
        auto [f_l, r_l] = run_path(deblur, torch::cat({I_l, E_d}, 1));
        auto L_l = I_l + r_l;
        auto [f_s, r_s] = run_path(enhance, torch::cat({I_s, L_l, E_e}, 1));
        out.deblurred = crop(L_l);
        out.enhanced = crop(I_s + r_s);
        out.features_long = crop(f_l);
        out.features_short = crop(f_s);
        return out;
    }

    auto f_l = deblur->stem(torch::cat({I_l, E_d}, 1));
    auto f_s = enhance->stem(torch::cat({I_s, E_e}, 1));
    std::vector<torch::Tensor> skip_l, skip_s;
    const int S = cfg_.num_scales;
    for (int s = 0; s < S; ++s) {
        f_l = deblur->encode(s, f_l);
        f_s = enhance->encode(s, f_s);
        if (!enc_dfaf.empty()) std::tie(f_l, f_s) = enc_dfaf[s]->forward(f_l, f_s);
        if (s + 1 < S) {
            skip_l.push_back(f_l);
            skip_s.push_back(f_s);
            f_l = deblur->down(s, f_l);
            f_s = enhance->down(s, f_s);
        }
    }
    for (int s = S - 1; s >= 0; --s) {
        if (s + 1 < S) {
            f_l = deblur->up(s, f_l, skip_l[s]);
            f_s = enhance->up(s, f_s, skip_s[s]);
        }
        f_l = deblur->decode(s, f_l);
        f_s = enhance->decode(s, f_s);
        if (!dec_dfaf.empty()) std::tie(f_l, f_s) = dec_dfaf[s]->forward(f_l, f_s);
    }
    out.deblurred = crop(I_l + deblur->head(f_l));
    out.enhanced = crop(I_s + enhance->head(f_s));
    out.features_long = crop(f_l);
    out.features_short = crop(f_s);
    return out;
}

ModelOutputs DualPathNetImpl::forward(const ModelInputs& in, const torch::Tensor& mask_override) {
    ModelOutputs out = forward_paths(in);
    auto fused = cgf->forward(out.deblurred, out.enhanced, out.features_long, out.features_short, mask_override);
    out.fused = fused.fused;
    out.mask = fused.mask;
    return out;
}

std::vector<torch::Tensor> DualPathNetImpl::path_parameters() {
    std::vector<torch::Tensor> out;
    for (const auto& item : named_parameters()) {
        if (item.key().rfind("cgf.", 0) != 0) out.push_back(item.value());
    }
    return out;
}

std::vector<torch::Tensor> DualPathNetImpl::fusion_parameters() { return cgf->parameters(); }

ParameterCount count_parameters(DualPathNet& net) {
    ParameterCount c;
    for (const auto& p : net->parameters()) c.total += p.numel();
    for (const auto& p : net->path_parameters()) c.paths += p.numel();
    return c;
}

ParameterCount count_parameters(const ModelConfig& cfg) {
    DualPathNet net(cfg);
    return count_parameters(net);
}

} // namespace edei
