#pragma once

#include <cstdint>
#include <vector>

namespace edei {

struct Event {
    double t = 0.0; // seconds
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    std::int8_t p = 1; // +1 / -1

    friend bool operator==(const Event&, const Event&) = default;
};

/// Strict ordering used whenever a stream is sorted: time, then row, column, polarity.
inline bool event_before(const Event& a, const Event& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.y != b.y) return a.y < b.y;
    if (a.x != b.x) return a.x < b.x;
    return a.p < b.p;
}

struct EventStream {
    std::vector<Event> events;
    int height = 0;
    int width = 0;
    double t_start = 0.0;
    double t_end = 0.0;

    std::size_t size() const { return events.size(); }
    double duration() const { return t_end - t_start; }

    friend bool operator==(const EventStream&, const EventStream&) = default;
};

/// Events with t_start <= t <= t_end, span set to the window.
EventStream slice_events(const EventStream& stream, double t_start, double t_end);

} // namespace edei
