#include "edei/representation.hpp"

#include <cmath>
#include <numeric>

#include "edei/error.hpp"

namespace edei {

double VoxelGrid::total() const { return std::accumulate(data.begin(), data.end(), 0.0); }

VoxelGrid voxelize(const EventStream& events, TimeWindow window, int bins) {
    if (bins < 1) throw ConfigError("voxel grid needs at least one bin");
    if (!(window.start < window.end)) throw DataError("degenerate event window");

    VoxelGrid grid;
    grid.bins = bins;
    grid.height = events.height;
    grid.width = events.width;
    grid.window = window;
    grid.data.assign(static_cast<std::size_t>(bins) * events.height * events.width, 0.0);

    const double scale = static_cast<double>(bins - 1) / (window.end - window.start);
    for (const Event& e : events.events) {
        if (e.t < window.start || e.t > window.end) continue;
        const double u = (e.t - window.start) * scale;
        const int k = std::min(static_cast<int>(std::floor(u)), bins - 1);
        const double w = k == bins - 1 ? 0.0 : u - k;
        grid.at(k, e.y, e.x) += e.p * (1.0 - w);
        if (w > 0.0 && k + 1 < bins) grid.at(k + 1, e.y, e.x) += e.p * w;
    }
    return grid;
}

TimeWindow perturb_window(const ExposureTiming& timing, double epsilon) {
    return {timing.t_s - epsilon * timing.interval(), timing.t_e};
}

TimeWindow enhancement_window(const ExposureTiming& timing) {
    return {timing.t_s - timing.delta_t, timing.t_s + timing.delta_t};
}

} // namespace edei
