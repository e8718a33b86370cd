#pragma once

#include <utility>
#include <vector>

#include "edei/events.hpp"
#include "edei/sample.hpp"

namespace edei {

inline constexpr int kDefaultEventBins = 6;

struct TimeWindow {
    double start = 0.0;
    double end = 0.0;

    friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

/// B x H x W signed polarity mass; each event is split linearly between the
/// two nearest temporal bin centres.
struct VoxelGrid {
    int bins = 0;
    int height = 0;
    int width = 0;
    TimeWindow window;
    std::vector<double> data;

    double& at(int b, int y, int x) { return data[(static_cast<std::size_t>(b) * height + y) * width + x]; }
    double at(int b, int y, int x) const { return data[(static_cast<std::size_t>(b) * height + y) * width + x]; }
    double total() const;
};

VoxelGrid voxelize(const EventStream& events, TimeWindow window, int bins);

/// Deblurring-path window [t_s - eps * T_i, t_e]; eps = 0 gives [t_s, t_e].
TimeWindow perturb_window(const ExposureTiming& timing, double epsilon);

/// Enhancement-path window [t_s - delta_t, t_s + delta_t].
TimeWindow enhancement_window(const ExposureTiming& timing);

} // namespace edei
