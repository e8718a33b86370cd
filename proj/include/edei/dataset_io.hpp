#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "edei/events.hpp"
#include "edei/frame.hpp"
#include "edei/sample.hpp"

namespace edei {

// On-disk dataset layout:
//   <root>/<sequence>/<index>/{short.img, long.img, gt.img, events.evt, meta.cfg}
// `.img` files are 16-bit PNG, `.evt` files the packed little-endian format below.

inline constexpr std::uint16_t kEventFileVersion = 1;
inline constexpr std::size_t kEventHeaderBytes = 16;
inline constexpr std::size_t kEventRecordBytes = 14;

/// Frame quantized to the 16-bit storage grid (clamped to [0,1]).
Frame quantize_frame(const Frame& frame);
/// Microsecond timestamp grid used by `.evt` files.
double quantize_time_us(double t);

/// The exact value a sample takes after a write/read round trip.
ExposureSample quantized_for_storage(const ExposureSample& sample);

void write_image16(const std::filesystem::path& path, const Frame& frame);
Frame read_image16(const std::filesystem::path& path);
/// Reads any 8/16-bit image OpenCV understands and normalizes to [0,1] RGB.
Frame read_image_any(const std::filesystem::path& path);
/// 8-bit export of a clamped frame.
void write_image8(const std::filesystem::path& path, const Frame& frame);

// Header: magic "EDEI", version u16, H u16, W u16, count (48-bit unsigned).
// Record: t_us u64, x u16, y u16, p i8, pad i8.
std::vector<std::uint8_t> encode_events(const EventStream& stream);
EventStream decode_events(const std::vector<std::uint8_t>& bytes, double t_start, double t_end);
void write_events(const std::filesystem::path& path, const EventStream& stream);
EventStream read_events(const std::filesystem::path& path, double t_start, double t_end);

void write_sample(const std::filesystem::path& dir, const ExposureSample& sample);
/// Reads a sample directory; gt.img is optional.
ExposureSample read_sample(const std::filesystem::path& dir);

struct SampleRef {
    std::string sequence;
    std::string index;
    std::filesystem::path dir;
};

/// All sample directories under a dataset root, sorted by (sequence, index).
std::vector<SampleRef> list_dataset(const std::filesystem::path& root);

/// Image files in a directory, sorted by filename.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

} // namespace edei
