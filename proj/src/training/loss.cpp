#include "edei/error.hpp"
#include "edei/training.hpp"

namespace edei {

torch::Tensor dei_loss(const torch::Tensor& fused, const torch::Tensor& enhanced, const torch::Tensor& deblurred,
                       const torch::Tensor& gt, const LossWeights& w) {
    if (w.fused < 0 || w.enhanced < 0 || w.deblurred < 0) throw ConfigError("loss weights must be non-negative");
    auto loss = torch::zeros({}, gt.options());
    auto term = [&](const torch::Tensor& pred, double weight, const char* name) {
        if (pred.defined() && !pred.sizes().equals(gt.sizes())) {
            throw DataError(std::string("loss: ") + name + " prediction does not match ground truth shape");
        }
        if (weight == 0.0) return;
        if (!pred.defined()) throw DataError(std::string("loss: ") + name + " prediction missing");
        loss = loss + weight * (pred - gt).abs().mean();
    };
    term(fused, w.fused, "fused");
    term(enhanced, w.enhanced, "enhanced");
    term(deblurred, w.deblurred, "deblurred");
    return loss;
}

} // namespace edei
