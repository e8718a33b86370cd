#include "edei/events.hpp"

#include <algorithm>

namespace edei {

EventStream slice_events(const EventStream& stream, double t_start, double t_end) {
    EventStream out;
    out.height = stream.height;
    out.width = stream.width;
    out.t_start = t_start;
    out.t_end = t_end;
    auto first = std::lower_bound(stream.events.begin(), stream.events.end(), t_start,
                                  [](const Event& e, double t) { return e.t < t; });
    auto last = std::upper_bound(first, stream.events.end(), t_end,
                                 [](double t, const Event& e) { return t < e.t; });
    out.events.assign(first, last);
    return out;
}

} // namespace edei
