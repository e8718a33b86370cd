#include "edei/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "edei/error.hpp"

namespace edei {

namespace fs = std::filesystem;

namespace {

constexpr double kLevels = 65535.0;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value, std::size_t bytes = sizeof(T)) {
    auto v = static_cast<std::uint64_t>(value);
    for (std::size_t i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(const std::uint8_t* p, std::size_t bytes) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

cv::Mat frame_to_mat16(const Frame& frame) {
    const int type = frame.channels() == 3 ? CV_16UC3 : CV_16UC1;
    cv::Mat mat(frame.height(), frame.width(), type);
    const int c = frame.channels();
    for (int y = 0; y < frame.height(); ++y) {
        auto* row = mat.ptr<std::uint16_t>(y);
        for (int x = 0; x < frame.width(); ++x) {
            for (int k = 0; k < c; ++k) {
                double v = std::clamp(frame.at(y, x, k), 0.0, 1.0);
                // OpenCV stores BGR
                row[x * c + (c == 3 ? 2 - k : k)] = static_cast<std::uint16_t>(std::lround(v * kLevels));
            }
        }
    }
    return mat;
}

Frame mat_to_frame(const cv::Mat& input, const fs::path& path) {
    if (input.empty()) throw DataError("cannot read image " + path.string());
    cv::Mat mat;
    double scale = 1.0;
    switch (input.depth()) {
    case CV_8U: scale = 255.0; break;
    case CV_16U: scale = kLevels; break;
    default: throw DataError("unsupported image depth in " + path.string());
    }
    input.convertTo(mat, CV_64F);
    int channels = mat.channels();
    if (channels == 4) {
        cv::cvtColor(mat, mat, cv::COLOR_BGRA2BGR);
        channels = 3;
    }
    if (channels != 1 && channels != 3) throw DataError("unsupported channel count in " + path.string());
    Frame frame(mat.rows, mat.cols, channels);
    for (int y = 0; y < mat.rows; ++y) {
        const auto* row = mat.ptr<double>(y);
        for (int x = 0; x < mat.cols; ++x) {
            for (int k = 0; k < channels; ++k) {
                frame.at(y, x, k) = row[x * channels + (channels == 3 ? 2 - k : k)] / scale;
            }
        }
    }
    return frame;
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

bool is_image_extension(const fs::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".tif" || ext == ".tiff" ||
           ext == ".bmp" || ext == ".img";
}

} // namespace

Frame quantize_frame(const Frame& frame) {
    Frame out = frame;
    for (double& v : out.data()) v = static_cast<double>(std::lround(std::clamp(v, 0.0, 1.0) * kLevels)) / kLevels;
    return out;
}

double quantize_time_us(double t) { return static_cast<double>(std::llround(t * 1e6)) / 1e6; }

ExposureSample quantized_for_storage(const ExposureSample& sample) {
    ExposureSample out = sample;
    out.short_exposure = quantize_frame(sample.short_exposure);
    out.long_exposure = quantize_frame(sample.long_exposure);
    if (sample.gt) out.gt = quantize_frame(*sample.gt);
    for (Event& e : out.events.events) e.t = quantize_time_us(e.t);
    // Round the span outward so every rounded event stays inside it.
    const double t0 = sample.events.t_start, t1 = sample.events.t_end;
    auto k0 = std::llround(t0 * 1e6), k1 = std::llround(t1 * 1e6);
    if (static_cast<double>(k0) / 1e6 > t0) --k0;
    if (static_cast<double>(k1) / 1e6 < t1) ++k1;
    out.events.t_start = static_cast<double>(k0) / 1e6;
    out.events.t_end = static_cast<double>(k1) / 1e6;
    return out;
}

void write_image16(const fs::path& path, const Frame& frame) {
    // The .img container is PNG; force the encoder since OpenCV picks it by extension.
    std::vector<std::uint8_t> buf;
    if (!cv::imencode(".png", frame_to_mat16(frame), buf)) throw DataError("cannot encode " + path.string());
    write_bytes(path, buf);
}

Frame read_image16(const fs::path& path) {
    auto bytes = read_bytes(path);
    cv::Mat mat = cv::imdecode(bytes, cv::IMREAD_UNCHANGED);
    if (!mat.empty() && mat.depth() != CV_16U) throw DataError(path.string() + " is not a 16-bit image");
    return mat_to_frame(mat, path);
}

Frame read_image_any(const fs::path& path) {
    auto bytes = read_bytes(path);
    return mat_to_frame(cv::imdecode(bytes, cv::IMREAD_UNCHANGED), path);
}

void write_image8(const fs::path& path, const Frame& frame) {
    const int type = frame.channels() == 3 ? CV_8UC3 : CV_8UC1;
    const int c = frame.channels();
    cv::Mat mat(frame.height(), frame.width(), type);
    for (int y = 0; y < frame.height(); ++y) {
        auto* row = mat.ptr<std::uint8_t>(y);
        for (int x = 0; x < frame.width(); ++x) {
            for (int k = 0; k < c; ++k) {
                double v = std::clamp(frame.at(y, x, k), 0.0, 1.0);
                row[x * c + (c == 3 ? 2 - k : k)] = static_cast<std::uint8_t>(std::lround(v * 255.0));
            }
        }
    }
    std::vector<std::uint8_t> buf;
    if (!cv::imencode(".png", mat, buf)) throw DataError("cannot encode " + path.string());
    write_bytes(path, buf);
}

std::vector<std::uint8_t> encode_events(const EventStream& stream) {
    if (stream.height > 0xffff || stream.width > 0xffff) throw DataError("sensor too large for event file");
    if (stream.events.size() >= (1ULL << 48)) throw DataError("too many events for event file");
    std::vector<std::uint8_t> out;
    out.reserve(kEventHeaderBytes + kEventRecordBytes * stream.events.size());
    out.insert(out.end(), {'E', 'D', 'E', 'I'});
    put_le<std::uint16_t>(out, kEventFileVersion);
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(stream.height));
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(stream.width));
    put_le<std::uint64_t>(out, stream.events.size(), 6);
    for (const Event& e : stream.events) {
        if (e.t < 0.0) throw DataError("negative event timestamp cannot be stored");
        put_le<std::uint64_t>(out, static_cast<std::uint64_t>(std::llround(e.t * 1e6)));
        put_le<std::uint16_t>(out, e.x);
        put_le<std::uint16_t>(out, e.y);
        out.push_back(static_cast<std::uint8_t>(e.p));
        out.push_back(0);
    }
    return out;
}

EventStream decode_events(const std::vector<std::uint8_t>& bytes, double t_start, double t_end) {
    if (bytes.size() < kEventHeaderBytes || std::memcmp(bytes.data(), "EDEI", 4) != 0) {
        throw DataError("event file: bad magic");
    }
    const auto version = get_le(bytes.data() + 4, 2);
    if (version != kEventFileVersion) throw DataError("event file: unsupported version " + std::to_string(version));
    EventStream stream;
    stream.height = static_cast<int>(get_le(bytes.data() + 6, 2));
    stream.width = static_cast<int>(get_le(bytes.data() + 8, 2));
    const auto count = get_le(bytes.data() + 10, 6);
    if (bytes.size() != kEventHeaderBytes + count * kEventRecordBytes) {
        throw DataError("event file: size does not match event count " + std::to_string(count));
    }
    stream.t_start = t_start;
    stream.t_end = t_end;
    stream.events.resize(count);
    const std::uint8_t* p = bytes.data() + kEventHeaderBytes;
    for (auto& e : stream.events) {
        e.t = static_cast<double>(get_le(p, 8)) / 1e6;
        e.x = static_cast<std::uint16_t>(get_le(p + 8, 2));
        e.y = static_cast<std::uint16_t>(get_le(p + 10, 2));
        e.p = static_cast<std::int8_t>(p[12]);
        p += kEventRecordBytes;
    }
    return stream;
}

void write_events(const fs::path& path, const EventStream& stream) { write_bytes(path, encode_events(stream)); }

EventStream read_events(const fs::path& path, double t_start, double t_end) {
    return decode_events(read_bytes(path), t_start, t_end);
}

void write_sample(const fs::path& dir, const ExposureSample& sample) {
    const ExposureSample q = quantized_for_storage(sample);
    fs::create_directories(dir);
    write_image16(dir / "short.img", q.short_exposure);
    write_image16(dir / "long.img", q.long_exposure);
    if (q.gt) write_image16(dir / "gt.img", *q.gt);
    write_events(dir / "events.evt", q.events);

    KvConfig meta;
    meta.set("t_s", q.timing.t_s);
    meta.set("t_b", q.timing.t_b);
    meta.set("t_e", q.timing.t_e);
    meta.set("delta_t", q.timing.delta_t);
    meta.set("events_t_start", q.events.t_start);
    meta.set("events_t_end", q.events.t_end);
    meta.set("seed", std::to_string(q.seed));
    for (const auto& [k, v] : q.provenance.entries()) meta.set("synth." + k, v);
    meta.save(dir / "meta.cfg");
}

ExposureSample read_sample(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError("sample directory not found: " + dir.string());
    KvConfig meta;
    try {
        meta = KvConfig::load(dir / "meta.cfg");
    } catch (const ConfigError& e) {
        throw DataError(dir.string() + ": " + e.what());
    }

    ExposureSample s;
    try {
        s.timing.t_s = meta.require_double("t_s");
        s.timing.t_b = meta.require_double("t_b");
        s.timing.t_e = meta.require_double("t_e");
        s.timing.delta_t = meta.require_double("delta_t");
        const double t0 = meta.require_double("events_t_start");
        const double t1 = meta.require_double("events_t_end");
        s.seed = std::stoull(meta.get_string("seed", "0"));
        s.events = read_events(dir / "events.evt", t0, t1);
    } catch (const ConfigError& e) {
        throw DataError(dir.string() + "/meta.cfg: " + e.what());
    }
    for (const auto& [k, v] : meta.entries()) {
        if (k.rfind("synth.", 0) == 0) s.provenance.set(k.substr(6), v);
    }
    s.short_exposure = read_image16(dir / "short.img");
    s.long_exposure = read_image16(dir / "long.img");
    if (fs::exists(dir / "gt.img")) s.gt = read_image16(dir / "gt.img");
    return s;
}

std::vector<SampleRef> list_dataset(const fs::path& root) {
    if (!fs::is_directory(root)) throw DataError("dataset root not found: " + root.string());
    std::vector<SampleRef> out;
    for (const auto& seq : fs::directory_iterator(root)) {
        if (!seq.is_directory()) continue;
        for (const auto& idx : fs::directory_iterator(seq.path())) {
            if (idx.is_directory() && fs::exists(idx.path() / "meta.cfg")) {
                out.push_back({seq.path().filename().string(), idx.path().filename().string(), idx.path()});
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const SampleRef& a, const SampleRef& b) {
        return std::tie(a.sequence, a.index) < std::tie(b.sequence, b.index);
    });
    return out;
}

std::vector<fs::path> list_images(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError("frame directory not found: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && is_image_extension(entry.path())) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace edei
