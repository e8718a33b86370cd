#include <cmath>

#include <opencv2/imgproc.hpp>
#include <opencv2/video/tracking.hpp>

#include "edei/error.hpp"
#include "edei/metrics.hpp"

namespace edei {

namespace {

cv::Mat luma_mat(const Frame& frame) {
    const Frame y = to_luma(frame);
    cv::Mat mat(y.height(), y.width(), CV_32F);
    for (int r = 0; r < y.height(); ++r) {
        auto* row = mat.ptr<float>(r);
        for (int c = 0; c < y.width(); ++c) row[c] = static_cast<float>(y.at(r, c, 0));
    }
    return mat;
}

} // namespace

double farneback_motion(const Frame& a, const Frame& b, const FarnebackParams& p) {
    if (!a.same_shape(b)) throw DataError("flow: frame shapes differ");
    cv::Mat prev, next;
    luma_mat(a).convertTo(prev, CV_8U, 255.0);
    luma_mat(b).convertTo(next, CV_8U, 255.0);
    cv::Mat flow;
    cv::calcOpticalFlowFarneback(prev, next, flow, p.pyramid_scale, p.levels, p.window, p.iterations, p.poly_n,
                                 p.poly_sigma, 0);
    double sum = 0.0;
    for (int r = 0; r < flow.rows; ++r) {
        const auto* row = flow.ptr<cv::Vec2f>(r);
        for (int c = 0; c < flow.cols; ++c) sum += std::hypot(row[c][0], row[c][1]);
    }
    return sum / static_cast<double>(flow.total());
}

FlowEstimator farneback_estimator(FarnebackParams params) {
    return [params](const Frame& a, const Frame& b) { return farneback_motion(a, b, params); };
}

double mean_luma(const Frame& frame) {
    const Frame y = to_luma(frame);
    double sum = 0.0;
    for (double v : y.data()) sum += v;
    return sum / static_cast<double>(y.size());
}

double mean_sobel(const Frame& frame) {
    cv::Mat y = luma_mat(frame), gx, gy;
    cv::Sobel(y, gx, CV_32F, 1, 0, 3);
    cv::Sobel(y, gy, CV_32F, 0, 1, 3);
    double sum = 0.0;
    for (int r = 0; r < y.rows; ++r) {
        const auto* px = gx.ptr<float>(r);
        const auto* py = gy.ptr<float>(r);
        for (int c = 0; c < y.cols; ++c) sum += std::hypot(px[c], py[c]);
    }
    return sum / static_cast<double>(y.total());
}

StatsReport dataset_stats(const std::vector<std::vector<ExposureSample>>& sequences, const FlowEstimator& flow) {
    StatsReport report;
    double motion_sum = 0.0, luma_sum = 0.0, texture_sum = 0.0, duration = 0.0;
    std::size_t motion_pairs = 0, frames = 0, events = 0;

    for (std::size_t s = 0; s < sequences.size(); ++s) {
        const auto& seq = sequences[s];
        std::size_t with_gt = 0;
        const Frame* prev = nullptr;
        for (const auto& sample : seq) {
            events += sample.events.size();
            duration += sample.events.duration();
            const Frame& img = sample.gt ? *sample.gt : sample.long_exposure;
            luma_sum += mean_luma(img);
            texture_sum += mean_sobel(img);
            ++frames;
            if (!sample.gt) continue;
            ++with_gt;
            if (prev) {
                motion_sum += flow(*prev, *sample.gt);
                ++motion_pairs;
            }
            prev = &*sample.gt;
        }
        if (with_gt < 2) {
            report.notices.push_back("sequence " + std::to_string(s) +
                                     " has fewer than 2 ground-truth frames; motion omitted");
        }
    }
    if (frames > 0) {
        report.illumination = luma_sum / static_cast<double>(frames);
        report.texture = texture_sum / static_cast<double>(frames);
    }
    if (motion_pairs > 0) {
        report.motion_mag = motion_sum / static_cast<double>(motion_pairs);
        report.motion_available = true;
    }
    if (duration > 0.0) report.event_rate = static_cast<double>(events) / duration / 1e6;
    return report;
}

} // namespace edei
