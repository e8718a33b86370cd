#include "edei/frame.hpp"

#include "edei/error.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace edei {

Frame::Frame(int height, int width, int channels, double fill)
    : Frame(height, width, channels,
            std::vector<double>(static_cast<std::size_t>(std::max(height, 0)) * std::max(width, 0) *
                                    std::max(channels, 0),
                                fill)) {}

Frame::Frame(int height, int width, int channels, std::vector<double> pixels)
    : height_(height), width_(width), channels_(channels), pixels_(std::move(pixels)) {
    if (height <= 0 || width <= 0) throw DataError("frame dimensions must be positive");
    if (channels != 1 && channels != 3) throw DataError("frame channels must be 1 or 3");
    if (pixels_.size() != static_cast<std::size_t>(height) * width * channels) {
        throw DataError("frame buffer size " + std::to_string(pixels_.size()) +
                                    " does not match shape");
    }
}

Frame to_luma(const Frame& frame) {
    if (frame.channels() == 1) return frame;
    Frame out(frame.height(), frame.width(), 1);
    auto src = frame.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
    }
    return out;
}

Frame clamped(const Frame& frame, double lo, double hi) {
    Frame out = frame;
    for (double& v : out.data()) v = std::clamp(v, lo, hi);
    return out;
}

FrameSequence::FrameSequence(std::vector<Frame> frames, std::vector<double> timestamps)
    : frames_(std::move(frames)), timestamps_(std::move(timestamps)) {
    if (frames_.size() != timestamps_.size()) {
        throw DataError("frame count and timestamp count differ");
    }
    for (std::size_t i = 1; i < frames_.size(); ++i) {
        if (!frames_[i].same_shape(frames_[0])) {
            throw DataError("frame " + std::to_string(i) + " has a different shape");
        }
        if (!(timestamps_[i] > timestamps_[i - 1])) {
            throw DataError("timestamps must be strictly increasing");
        }
    }
}

FrameSequence FrameSequence::slice(std::size_t first, std::size_t last) const {
    if (first > last || last >= frames_.size()) throw DataError("bad sequence slice");
    return FrameSequence(std::vector<Frame>(frames_.begin() + first, frames_.begin() + last + 1),
                         std::vector<double>(timestamps_.begin() + first, timestamps_.begin() + last + 1));
}

} // namespace edei
