#include "common.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <iterator>

#include "json.hpp"

#include "edei/dataset_io.hpp"
#include "edei/error.hpp"
#include "edei/rng.hpp"

#ifndef EDEI_VERSION
#define EDEI_VERSION "unknown"
#endif

namespace edei::cli {

KvConfig resolve_config(const GlobalOptions& g, const std::string& file) {
    const std::string path = file.empty() ? g.config_path : file;
    KvConfig cfg;
    if (!path.empty()) {
        if (!fs::exists(path)) throw ConfigError("config file not found: " + path);
        cfg = KvConfig::load(path);
    }
    cfg.apply_overrides(g.overrides);
    if (g.seed) cfg.set("seed", static_cast<std::int64_t>(*g.seed));
    return cfg;
}

namespace {

bool is_manifest(const fs::path& p) {
    const std::string name = p.filename().string();
    return name.rfind("manifest", 0) == 0 || name.ends_with(".manifest.json");
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DataError("cannot read " + p.string());
    return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

std::string hash_tree(const fs::path& root) {
    if (!fs::exists(root)) return hex64(fnv1a64(""));
    if (fs::is_regular_file(root)) return hex64(fnv1a64(read_bytes(root)));
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file() && !is_manifest(e.path())) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::uint64_t h = fnv1a64("");
    for (const auto& f : files) {
        h = fnv1a64(fs::relative(f, root).generic_string(), h);
        h = fnv1a64(read_bytes(f), h);
    }
    return hex64(h);
}

void RunManifest::write(const fs::path& path) const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["config_hash"] = hex64(fnv1a64(config_text));
    j["seed"] = seed;
    j["dataset_hash"] = dataset_hash;
    j["code_version"] = EDEI_VERSION;
    j["wall_clock_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    // Output paths are relative to the manifest.
    const fs::path base = fs::absolute(path).parent_path();
    std::vector<std::string> relative;
    for (const auto& o : outputs) {
        relative.push_back(fs::absolute(o).lexically_normal().lexically_relative(base).generic_string());
    }
    j["outputs"] = relative;
    write_text(path, j.dump(2) + "\n");
}

void print_plan(const std::string& command, const std::vector<std::string>& steps) {
    std::cout << "dry run: " << command << "\n";
    for (const auto& s : steps) std::cout << "  - " << s << "\n";
}

std::vector<LoadedSample> load_dataset(const fs::path& root) {
    if (!fs::is_directory(root)) throw DataError("dataset root is not a directory: " + root.string());
    std::vector<LoadedSample> out;
    for (const auto& ref : list_dataset(root)) {
        out.push_back({ref.sequence + "/" + ref.index, ref.sequence, read_sample(ref.dir)});
    }
    if (out.empty()) throw DataError("no samples under " + root.string());
    return out;
}

std::vector<SourceSequence> find_sequences(const fs::path& input) {
    if (!fs::is_directory(input)) throw DataError("input is not a directory: " + input.string());
    std::vector<SourceSequence> out;
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(input)) {
        if (e.is_directory()) dirs.push_back(e.path());
    }
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) {
        auto images = list_images(d);
        if (!images.empty()) out.push_back({d.filename().string(), std::move(images)});
    }
    if (out.empty()) {
        auto images = list_images(input);
        if (images.empty()) throw DataError("no images found in " + input.string());
        out.push_back({fs::absolute(input).lexically_normal().filename().string(), std::move(images)});
        if (out.back().name.empty()) out.back().name = "seq";
    }
    return out;
}

FrameSequence load_sequence(const SourceSequence& source, double fps) {
    std::vector<Frame> frames;
    std::vector<double> times;
    for (std::size_t i = 0; i < source.images.size(); ++i) {
        frames.push_back(read_image_any(source.images[i]));
        times.push_back(static_cast<double>(i) / fps);
    }
    return FrameSequence(std::move(frames), std::move(times));
}

SynthesisRecipe sequence_recipe(const SynthesisRecipe& base, const std::string& sequence) {
    SynthesisRecipe r = base;
    r.rng_seed = derive_seed(base.rng_seed, fnv1a64(sequence));
    return r;
}

std::size_t interpolated_size(std::size_t count, int factor) {
    return count < 2 ? count : (count - 1) * static_cast<std::size_t>(factor + 1) + 1;
}

std::vector<std::size_t> sample_starts(const FrameSequence& clip, const SynthesisRecipe& recipe) {
    const std::size_t n = clip.size();
    const std::size_t interval = static_cast<std::size_t>(recipe.interval_frames);
    const std::size_t span = interval + static_cast<std::size_t>(recipe.blur_count) - 1;
    const std::size_t stride =
        recipe.sample_stride > 0 ? static_cast<std::size_t>(recipe.sample_stride) : span + 1;
    auto delta = [&](std::size_t i) {
        return recipe.delta_t > 0.0 ? recipe.delta_t : 0.5 * (clip.timestamp(i + interval) - clip.timestamp(i));
    };
    std::size_t first = 0;
    while (first + span < n && clip.timestamp(first) - delta(first) < clip.timestamp(0)) ++first;
    std::vector<std::size_t> out;
    for (std::size_t i = first; i + span < n; i += stride) {
        out.push_back(i);
        if (recipe.max_samples > 0 && out.size() == static_cast<std::size_t>(recipe.max_samples)) break;
    }
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw DataError("cannot write " + path.string());
}

} // namespace edei::cli
