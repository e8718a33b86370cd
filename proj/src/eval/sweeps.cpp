#include <cmath>
#include <cstdio>

#include "edei/error.hpp"
#include "edei/evaluation.hpp"

namespace edei {

Predictions predict(DualPathNet& net, const TrainingExample& ex) {
    torch::NoGradGuard no_grad;
    const auto dtype = net->parameters().front().scalar_type();
    ModelInputs in{ex.short_image.to(dtype), ex.long_image.to(dtype), ex.events_deblur.to(dtype),
                   ex.events_enhance.to(dtype)};
    auto out = net->forward(in);
    return {tensor_to_frame(out.fused), tensor_to_frame(out.enhanced), tensor_to_frame(out.deblurred)};
}

EvalResult evaluate(DualPathNet& net, const std::vector<TrainingExample>& examples) {
    EvalResult r;
    for (const auto& ex : examples) {
        if (!ex.gt.defined()) continue;
        const Predictions p = predict(net, ex);
        const Frame gt = tensor_to_frame(ex.gt);
        r.fused.add(ex.name, p.fused, gt);
        r.enhanced.add(ex.name, p.enhanced, gt);
        r.deblurred.add(ex.name, p.deblurred, gt);
    }
    return r;
}

std::vector<double> default_epsilons() { return {-0.2, -0.15, -0.1, -0.05, 0.0, 0.05, 0.1, 0.15, 0.2}; }

std::vector<SweepRow> sweep_temporal(DualPathNet& net, const std::vector<ExposureSample>& samples,
                                     const std::vector<double>& epsilons) {
    std::vector<SweepRow> rows;
    for (double eps : epsilons) {
        if (std::abs(eps) > 0.5) throw ConfigError("temporal sweep offsets must lie within [-0.5, 0.5]");
        const auto report = evaluate(net, make_examples(samples, net->config().event_bins, eps)).fused;
        rows.push_back({eps, report.psnr_db, report.ssim});
    }
    return rows;
}

std::vector<SweepRow> sweep_ratio(DualPathNet& net, const std::vector<RatioSweepInput>& inputs,
                                  const SynthesisRecipe& base, const std::vector<int>& ratios) {
    std::vector<SweepRow> rows;
    for (int R : ratios) {
        const SynthesisRecipe recipe = base.with_ratio(R);
        std::vector<ExposureSample> samples;
        for (const auto& input : inputs) {
            for (std::size_t start : input.starts) {
                if (start >= input.clip.size()) throw DataError("ratio sweep start index outside the clip");
                samples.push_back(make_sample(input.clip, recipe, input.clip.timestamp(start)));
            }
        }
        const auto report = evaluate(net, make_examples(samples, net->config().event_bins)).fused;
        rows.push_back({static_cast<double>(R), report.psnr_db, report.ssim});
    }
    return rows;
}

std::string format_sweep_table(const std::string& key_name, const std::vector<SweepRow>& rows) {
    std::string out = key_name + "\tpsnr_db\tssim\n";
    char line[128];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%+.4g\t%.4f\t%.5f\n", r.key, r.psnr, r.ssim);
        out += line;
    }
    return out;
}

} // namespace edei
