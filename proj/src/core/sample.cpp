#include "edei/sample.hpp"

#include <cmath>

namespace edei {

namespace {

bool all_finite(const Frame& f) {
    for (double v : f.data()) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void check_frame(const Frame& f, const char* name, std::vector<std::string>& out) {
    if (f.empty()) {
        out.push_back(std::string(name) + " frame is empty");
        return;
    }
    if (f.height() < 8 || f.width() < 8) out.push_back(std::string(name) + " frame smaller than 8x8");
    if (!all_finite(f)) out.push_back(std::string(name) + " frame has non-finite values");
}

} // namespace

std::vector<std::string> validate_sample(const ExposureSample& s) {
    std::vector<std::string> out;

    check_frame(s.short_exposure, "short", out);
    check_frame(s.long_exposure, "long", out);
    if (s.gt) check_frame(*s.gt, "gt", out);

    if (!s.short_exposure.same_shape(s.long_exposure) || (s.gt && !s.gt->same_shape(s.short_exposure))) {
        out.emplace_back("frame shapes differ");
    }

    const auto& t = s.timing;
    if (!(t.t_s < t.t_b && t.t_b < t.t_e)) out.emplace_back("timing order violated");
    if (!(t.delta_t > 0.0)) out.emplace_back("delta_t must be positive");

    const auto& ev = s.events;
    if (ev.height != s.short_exposure.height() || ev.width != s.short_exposure.width()) {
        out.emplace_back("event sensor shape mismatch");
    }
    if (!(ev.t_start <= ev.t_end)) out.emplace_back("event span inverted");

    bool sorted = true, in_span = true, in_bounds = true, polarity = true;
    for (std::size_t i = 0; i < ev.events.size(); ++i) {
        const Event& e = ev.events[i];
        if (i > 0 && e.t < ev.events[i - 1].t) sorted = false;
        if (!(e.t >= ev.t_start && e.t <= ev.t_end)) in_span = false;
        if (e.x >= ev.width || e.y >= ev.height) in_bounds = false;
        if (e.p != 1 && e.p != -1) polarity = false;
    }
    if (!sorted) out.emplace_back("events not time-sorted");
    if (!in_span) out.emplace_back("event outside stream span");
    if (!in_bounds) out.emplace_back("event coordinates out of bounds");
    if (!polarity) out.emplace_back("event polarity not +1/-1");
    return out;
}

} // namespace edei
