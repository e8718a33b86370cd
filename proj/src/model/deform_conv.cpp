#include <cmath>

#include "edei/error.hpp"
#include "edei/model.hpp"

namespace edei {

namespace {

constexpr int kTaps = 9;
constexpr int kTapY[kTaps] = {-1, -1, -1, 0, 0, 0, 1, 1, 1};
constexpr int kTapX[kTaps] = {-1, 0, 1, -1, 0, 1, -1, 0, 1};

struct Dims {
    int64_t N, C, H, W, G, Cg;
};

// Bilinear footprint of one sampling position; out-of-image corners get weight 0.
template <typename T>
struct Footprint {
    int64_t index[4];
    T weight[4];
    T dwy[4]; // d weight / d py
    T dwx[4]; // d weight / d px
    bool valid[4];

    Footprint(T py, T px, int64_t H, int64_t W) {
        const T fy = std::floor(py), fx = std::floor(px);
        const T ly = py - fy, lx = px - fx;
        const int64_t y0 = static_cast<int64_t>(fy), x0 = static_cast<int64_t>(fx);
        for (int c = 0; c < 4; ++c) {
            const int cy = c >> 1, cx = c & 1;
            const int64_t y = y0 + cy, x = x0 + cx;
            const T wy = cy ? ly : T(1) - ly, wx = cx ? lx : T(1) - lx;
            valid[c] = y >= 0 && y < H && x >= 0 && x < W;
            index[c] = valid[c] ? y * W + x : 0;
            weight[c] = valid[c] ? wy * wx : T(0);
            dwy[c] = valid[c] ? (cy ? T(1) : T(-1)) * wx : T(0);
            dwx[c] = valid[c] ? (cx ? T(1) : T(-1)) * wy : T(0);
        }
    }
};

// Columns layout: (N, C*9, H*W) with row c*9 + k, matching a (C_out, C_in, 3, 3) weight.
template <typename T>
void sample_forward(const T* x, const T* off, T* cols, const Dims& d) {
    const int64_t HW = d.H * d.W;
    for (int64_t n = 0; n < d.N; ++n) {
        for (int64_t g = 0; g < d.G; ++g) {
            for (int k = 0; k < kTaps; ++k) {
                const T* oy = off + ((n * d.G + g) * kTaps + k) * 2 * HW;
                const T* ox = oy + HW;
                for (int64_t y = 0; y < d.H; ++y) {
                    for (int64_t xx = 0; xx < d.W; ++xx) {
                        const int64_t p = y * d.W + xx;
                        Footprint<T> f(T(y + kTapY[k]) + oy[p], T(xx + kTapX[k]) + ox[p], d.H, d.W);
                        for (int64_t cg = 0; cg < d.Cg; ++cg) {
                            const int64_t c = g * d.Cg + cg;
                            const T* plane = x + (n * d.C + c) * HW;
                            T v = 0;
                            for (int q = 0; q < 4; ++q) v += f.weight[q] * plane[f.index[q]];
                            cols[((n * d.C + c) * kTaps + k) * HW + p] = v;
                        }
                    }
                }
            }
        }
    }
}

template <typename T>
void sample_backward(const T* x, const T* off, const T* gcols, T* gx, T* goff, const Dims& d) {
    const int64_t HW = d.H * d.W;
    for (int64_t n = 0; n < d.N; ++n) {
        for (int64_t g = 0; g < d.G; ++g) {
            for (int k = 0; k < kTaps; ++k) {
                const int64_t obase = ((n * d.G + g) * kTaps + k) * 2 * HW;
                for (int64_t y = 0; y < d.H; ++y) {
                    for (int64_t xx = 0; xx < d.W; ++xx) {
                        const int64_t p = y * d.W + xx;
                        Footprint<T> f(T(y + kTapY[k]) + off[obase + p], T(xx + kTapX[k]) + off[obase + HW + p], d.H,
                                       d.W);
                        T sum_dy = 0, sum_dx = 0;
                        for (int64_t cg = 0; cg < d.Cg; ++cg) {
                            const int64_t c = g * d.Cg + cg;
                            const T gc = gcols[((n * d.C + c) * kTaps + k) * HW + p];
                            if (gc == T(0)) continue;
                            const T* plane = x + (n * d.C + c) * HW;
                            T* gplane = gx + (n * d.C + c) * HW;
                            for (int q = 0; q < 4; ++q) {
                                if (!f.valid[q]) continue;
                                gplane[f.index[q]] += f.weight[q] * gc;
                                sum_dy += f.dwy[q] * plane[f.index[q]] * gc;
                                sum_dx += f.dwx[q] * plane[f.index[q]] * gc;
                            }
                        }
                        goff[obase + p] += sum_dy;
                        goff[obase + HW + p] += sum_dx;
                    }
                }
            }
        }
    }
}

Dims dims_of(const torch::Tensor& x, int64_t groups) {
    return {x.size(0), x.size(1), x.size(2), x.size(3), groups, x.size(1) / groups};
}

class DeformSample : public torch::autograd::Function<DeformSample> {
public:
    static torch::Tensor forward(torch::autograd::AutogradContext* ctx, const torch::Tensor& x_in,
                                 const torch::Tensor& off_in, int64_t groups) {
        auto x = x_in.contiguous();
        auto off = off_in.contiguous();
        const Dims d = dims_of(x, groups);
        auto cols = torch::empty({d.N, d.C * kTaps, d.H * d.W}, x.options());
        if (x.scalar_type() == torch::kFloat64) {
            sample_forward(x.data_ptr<double>(), off.data_ptr<double>(), cols.data_ptr<double>(), d);
        } else if (x.scalar_type() == torch::kFloat32) {
            sample_forward(x.data_ptr<float>(), off.data_ptr<float>(), cols.data_ptr<float>(), d);
        } else {
            throw DataError("deformable conv supports float32 and float64 only");
        }
        ctx->save_for_backward({x, off});
        ctx->saved_data["groups"] = groups;
        return cols;
    }

    static torch::autograd::variable_list backward(torch::autograd::AutogradContext* ctx,
                                                   torch::autograd::variable_list grads) {
        auto saved = ctx->get_saved_variables();
        auto x = saved[0], off = saved[1];
        const Dims d = dims_of(x, ctx->saved_data["groups"].toInt());
        auto gcols = grads[0].contiguous();
        auto gx = torch::zeros_like(x);
        auto goff = torch::zeros_like(off);
        if (x.scalar_type() == torch::kFloat64) {
            sample_backward(x.data_ptr<double>(), off.data_ptr<double>(), gcols.data_ptr<double>(),
                            gx.data_ptr<double>(), goff.data_ptr<double>(), d);
        } else {
            sample_backward(x.data_ptr<float>(), off.data_ptr<float>(), gcols.data_ptr<float>(), gx.data_ptr<float>(),
                            goff.data_ptr<float>(), d);
        }
        return {gx, goff, torch::Tensor()};
    }
};

} // namespace

DeformConv2dImpl::DeformConv2dImpl(int64_t channels_, int64_t groups_) : channels(channels_), groups(groups_) {
    if (groups < 1 || channels % groups != 0) throw ConfigError("deformable conv: channels not divisible by groups");
    weight = register_parameter("weight", torch::empty({channels, channels, 3, 3}));
    bias = register_parameter("bias", torch::empty({channels}));
    torch::NoGradGuard no_grad;
    torch::nn::init::kaiming_uniform_(weight, std::sqrt(5.0));
    const double bound = 1.0 / std::sqrt(static_cast<double>(channels * 9));
    torch::nn::init::uniform_(bias, -bound, bound);
}

torch::Tensor DeformConv2dImpl::forward(const torch::Tensor& x, const torch::Tensor& offset) {
    if (x.dim() != 4 || x.size(1) != channels) throw DataError("deformable conv: channel mismatch");
    const int64_t N = x.size(0), H = x.size(2), W = x.size(3);
    if (offset.dim() != 4 || offset.size(0) != N || offset.size(1) != 2 * groups * kTaps || offset.size(2) != H ||
        offset.size(3) != W) {
        throw DataError("deformable conv: offset shape mismatch");
    }
    if (offset.scalar_type() != x.scalar_type()) throw DataError("deformable conv: offset dtype differs from input");
    auto cols = DeformSample::apply(x, offset, groups);
    auto out = torch::matmul(weight.reshape({channels, channels * kTaps}), cols);
    return (out + bias.view({1, channels, 1})).view({N, channels, H, W});
}

DeformableAlignImpl::DeformableAlignImpl(int64_t channels, int64_t groups) {
    offset_conv = register_module(
        "offset_conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(2 * channels, 2 * groups * 9, 3).padding(1)));
    torch::NoGradGuard no_grad;
    offset_conv->weight.zero_();
    offset_conv->bias.zero_();
    dcn = register_module("dcn", DeformConv2d(channels, groups));
}

torch::Tensor DeformableAlignImpl::offsets(const torch::Tensor& f_long, const torch::Tensor& f_short) {
    const double bound = std::ceil(static_cast<double>(std::max(f_long.size(2), f_long.size(3))) / 4.0);
    return offset_conv->forward(torch::cat({f_long, f_short}, 1)).clamp(-bound, bound);
}

torch::Tensor DeformableAlignImpl::forward(const torch::Tensor& f_long, const torch::Tensor& f_short) {
    return dcn->forward(f_long, offsets(f_long, f_short));
}

} // namespace edei
