#include "edei/error.hpp"
#include "edei/training.hpp"

namespace edei {

torch::Tensor frame_to_tensor(const Frame& frame) {
    const int H = frame.height(), W = frame.width(), C = frame.channels();
    auto t = torch::empty({1, C, H, W}, torch::kFloat32);
    auto a = t.accessor<float, 4>();
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            for (int c = 0; c < C; ++c) a[0][c][y][x] = static_cast<float>(frame.at(y, x, c));
        }
    }
    return t;
}

Frame tensor_to_frame(const torch::Tensor& tensor) {
    auto t = tensor.detach().cpu().to(torch::kFloat64);
    if (t.dim() == 4) {
        if (t.size(0) != 1) throw DataError("tensor_to_frame expects a batch of one");
        t = t[0];
    }
    if (t.dim() != 3) throw DataError("tensor_to_frame expects C x H x W");
    const int C = static_cast<int>(t.size(0)), H = static_cast<int>(t.size(1)), W = static_cast<int>(t.size(2));
    Frame frame(H, W, C);
    auto a = t.accessor<double, 3>();
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            for (int c = 0; c < C; ++c) frame.at(y, x, c) = a[c][y][x];
        }
    }
    return frame;
}

torch::Tensor voxel_to_tensor(const VoxelGrid& grid) {
    auto t = torch::empty({1, grid.bins, grid.height, grid.width}, torch::kFloat32);
    auto* p = t.data_ptr<float>();
    for (std::size_t i = 0; i < grid.data.size(); ++i) p[i] = static_cast<float>(grid.data[i]);
    return t;
}

TrainingExample make_example(const ExposureSample& s, int bins, double epsilon, std::string name) {
    TrainingExample ex;
    ex.name = std::move(name);
    ex.short_image = frame_to_tensor(s.short_exposure);
    ex.long_image = frame_to_tensor(s.long_exposure);
    ex.events_deblur = voxel_to_tensor(voxelize(s.events, perturb_window(s.timing, epsilon), bins));
    ex.events_enhance = voxel_to_tensor(voxelize(s.events, enhancement_window(s.timing), bins));
    if (s.gt) ex.gt = frame_to_tensor(*s.gt);
    return ex;
}

std::vector<TrainingExample> make_examples(const std::vector<ExposureSample>& samples, int bins, double epsilon) {
    std::vector<TrainingExample> out;
    out.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        out.push_back(make_example(samples[i], bins, epsilon, "sample" + std::to_string(i)));
    }
    return out;
}

ModelInputs to_inputs(const TrainingExample& ex) {
    return {ex.short_image, ex.long_image, ex.events_deblur, ex.events_enhance};
}

} // namespace edei
