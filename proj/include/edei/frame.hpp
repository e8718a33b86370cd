#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace edei {

/// Linear-radiance image, H x W x C interleaved, nominal range [0,1].
class Frame {
public:
    Frame() = default;
    Frame(int height, int width, int channels, double fill = 0.0);
    Frame(int height, int width, int channels, std::vector<double> pixels);

    int height() const { return height_; }
    int width() const { return width_; }
    int channels() const { return channels_; }
    std::size_t size() const { return pixels_.size(); }
    bool empty() const { return pixels_.empty(); }

    double& at(int y, int x, int c) { return pixels_[index(y, x, c)]; }
    double at(int y, int x, int c) const { return pixels_[index(y, x, c)]; }

    std::span<double> data() { return pixels_; }
    std::span<const double> data() const { return pixels_; }

    bool same_shape(const Frame& other) const {
        return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
    }

    friend bool operator==(const Frame&, const Frame&) = default;

private:
    std::size_t index(int y, int x, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<double> pixels_;
};

/// Rec.601 luma; single-channel frames pass through.
Frame to_luma(const Frame& frame);

Frame clamped(const Frame& frame, double lo = 0.0, double hi = 1.0);

/// Ordered frames with strictly increasing timestamps (seconds), all the same shape.
class FrameSequence {
public:
    FrameSequence() = default;
    FrameSequence(std::vector<Frame> frames, std::vector<double> timestamps);

    std::size_t size() const { return frames_.size(); }
    bool empty() const { return frames_.empty(); }
    const Frame& frame(std::size_t i) const { return frames_[i]; }
    double timestamp(std::size_t i) const { return timestamps_[i]; }
    const std::vector<Frame>& frames() const { return frames_; }
    const std::vector<double>& timestamps() const { return timestamps_; }
    int height() const { return frames_.empty() ? 0 : frames_.front().height(); }
    int width() const { return frames_.empty() ? 0 : frames_.front().width(); }
    int channels() const { return frames_.empty() ? 0 : frames_.front().channels(); }

    /// Contiguous sub-range [first, last] (inclusive).
    FrameSequence slice(std::size_t first, std::size_t last) const;

private:
    std::vector<Frame> frames_;
    std::vector<double> timestamps_;
};

} // namespace edei
