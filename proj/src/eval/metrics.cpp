#include "edei/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "edei/error.hpp"

namespace edei {

namespace {

void require_same_shape(const Frame& a, const Frame& b, const char* what) {
    if (!a.same_shape(b)) throw DataError(std::string(what) + ": image shapes differ");
}

std::vector<double> gaussian_window(int size, double sigma) {
    std::vector<double> w(static_cast<std::size_t>(size) * size);
    const double c = (size - 1) / 2.0;
    double sum = 0.0;
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double v = std::exp(-((x - c) * (x - c) + (y - c) * (y - c)) / (2.0 * sigma * sigma));
            w[static_cast<std::size_t>(y) * size + x] = v;
            sum += v;
        }
    }
    for (double& v : w) v /= sum;
    return w;
}

} // namespace

double psnr(const Frame& a, const Frame& b) {
    require_same_shape(a, b, "psnr");
    auto da = a.data(), db = b.data();
    double sum = 0.0;
    for (std::size_t i = 0; i < da.size(); ++i) {
        const double d = da[i] - db[i];
        sum += d * d;
    }
    const double mse = sum / static_cast<double>(da.size());
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Frame& a, const Frame& b, const SsimOptions& o) {
    require_same_shape(a, b, "ssim");
    if (a.height() < o.window || a.width() < o.window) throw DataError("ssim: image smaller than window");
    const Frame ya = to_luma(clamped(a));
    const Frame yb = to_luma(clamped(b));
    const auto w = gaussian_window(o.window, o.sigma);
    const double c1 = (o.k1 * 1.0) * (o.k1 * 1.0);
    const double c2 = (o.k2 * 1.0) * (o.k2 * 1.0);

    const int H = a.height(), W = a.width(), S = o.window;
    double total = 0.0;
    std::size_t count = 0;
    for (int y = 0; y + S <= H; ++y) {
        for (int x = 0; x + S <= W; ++x) {
            double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
            for (int j = 0; j < S; ++j) {
                for (int i = 0; i < S; ++i) {
                    const double wi = w[static_cast<std::size_t>(j) * S + i];
                    const double va = ya.at(y + j, x + i, 0);
                    const double vb = yb.at(y + j, x + i, 0);
                    ma += wi * va;
                    mb += wi * vb;
                    saa += wi * va * va;
                    sbb += wi * vb * vb;
                    sab += wi * va * vb;
                }
            }
            const double var_a = saa - ma * ma;
            const double var_b = sbb - mb * mb;
            const double cov = sab - ma * mb;
            total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

Frame ratio_fusion_static(const Frame& short_exposure, const Frame& long_exposure, double eps) {
    require_same_shape(short_exposure, long_exposure, "ratio fusion");
    Frame out = long_exposure;
    auto s = short_exposure.data();
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); ++i) {
        const double ratio = o[i] / std::max(s[i], eps);
        o[i] = ratio * s[i];
    }
    return out;
}

void MetricReport::add(std::string name, const Frame& prediction, const Frame& reference) {
    const Frame p = clamped(prediction);
    SampleMetric m{std::move(name), edei::psnr(p, reference), edei::ssim(p, reference)};
    per_sample.push_back(m);
    const double n = static_cast<double>(per_sample.size());
    psnr_db += (m.psnr_db - psnr_db) / n;
    ssim += (m.ssim - ssim) / n;
}

} // namespace edei
