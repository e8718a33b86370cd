#include <cstdlib>
#include <iostream>

#include <unistd.h>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "json.hpp"

#include "common.hpp"
#include "edei/dataset_io.hpp"
#include "edei/error.hpp"
#include "edei/metrics.hpp"

namespace edei::cli {

namespace {

std::string index_name(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06zu", i);
    return buf;
}

std::optional<fs::path> synth_cache_dir() {
    const char* env = std::getenv("EDEI_CACHE");
    if (!env || !*env) return std::nullopt;
    return fs::path(env);
}

std::string sequence_key(const SourceSequence& seq, const SynthesisRecipe& recipe) {
    std::uint64_t h = fnv1a64(recipe.to_config().to_string());
    h = fnv1a64(std::to_string(recipe.rng_seed), h);
    for (const auto& img : seq.images) h = fnv1a64(hash_tree(img), h);
    return hex64(h);
}

} // namespace

int cmd_synth(const GlobalOptions& g, const std::string& input, const std::string& out, const std::string& recipe_file) {
    const KvConfig cfg = resolve_config(g, recipe_file);
    const SynthesisRecipe base = SynthesisRecipe::from_config(cfg);
    base.validate();
    const auto sources = find_sequences(input);

    if (g.dry_run) {
        std::vector<std::string> steps;
        for (const auto& s : sources) {
            steps.push_back(s.name + ": " + std::to_string(s.images.size()) + " frames, interpolated to " +
                            std::to_string(interpolated_size(s.images.size(), base.interp_factor)) + " -> " +
                            (fs::path(out) / s.name).string());
        }
        steps.push_back("recipe hash " + hex64(fnv1a64(cfg.to_string())) + ", seed " +
                        std::to_string(base.rng_seed));
        print_plan("synth", steps);
        return 0;
    }

    RunManifest manifest;
    manifest.command = "synth";
    manifest.config_text = cfg.to_string();
    manifest.seed = base.rng_seed;
    manifest.dataset_hash = hash_tree(input);
    const auto cache = synth_cache_dir();

    for (const auto& source : sources) {
        const SynthesisRecipe recipe = sequence_recipe(base, source.name);
        const fs::path dest = fs::path(out) / source.name;
        const std::string key = sequence_key(source, recipe);
        const fs::path cached = cache ? *cache / ("synth-" + key) : fs::path();
        if (cache && fs::is_directory(cached)) {
            fs::remove_all(dest);
            fs::create_directories(dest);
            fs::copy(cached, dest, fs::copy_options::recursive);
            std::cerr << source.name << ": cache hit " << key << "\n";
        } else {
            const FrameSequence clip = interpolate(load_sequence(source, recipe.fps), recipe.interp_factor);
            const auto starts = sample_starts(clip, recipe);
            if (starts.empty()) {
                throw DataError("sequence " + source.name + " is too short for one sample (" +
                                std::to_string(clip.size()) + " interpolated frames)");
            }
            fs::remove_all(dest);
            for (std::size_t k = 0; k < starts.size(); ++k) {
                write_sample(dest / index_name(k), make_sample(clip, recipe, clip.timestamp(starts[k])));
            }
            std::cerr << source.name << ": " << starts.size() << " samples\n";
            if (cache) {
                const fs::path tmp = *cache / ("synth-" + key + ".tmp" + std::to_string(::getpid()));
                fs::create_directories(tmp);
                fs::copy(dest, tmp, fs::copy_options::recursive);
                std::error_code ec;
                fs::rename(tmp, cached, ec);
                if (ec) fs::remove_all(tmp);
            }
        }
        for (const auto& ref : list_dataset(out)) {
            if (ref.sequence == source.name) manifest.outputs.push_back(ref.dir.string());
        }
    }
    manifest.write(fs::path(out) / "manifest.json");
    return 0;
}

int cmd_stats(const GlobalOptions& g, const std::string& data, const std::string& out) {
    const KvConfig cfg = resolve_config(g);
    FarnebackParams fp;
    fp.levels = static_cast<int>(cfg.get_int("flow_levels", fp.levels));
    fp.window = static_cast<int>(cfg.get_int("flow_window", fp.window));
    if (g.dry_run) {
        print_plan("stats", {"dataset " + data, "flow levels " + std::to_string(fp.levels) + ", window " +
                                                  std::to_string(fp.window),
                             "report -> " + out});
        return 0;
    }
    RunManifest manifest;
    manifest.command = "stats";
    manifest.config_text = cfg.to_string();
    manifest.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
    manifest.dataset_hash = hash_tree(data);

    std::vector<std::vector<ExposureSample>> sequences;
    std::string current;
    for (auto& s : load_dataset(data)) {
        if (sequences.empty() || s.sequence != current) {
            sequences.emplace_back();
            current = s.sequence;
        }
        sequences.back().push_back(std::move(s.sample));
    }
    const StatsReport r = dataset_stats(sequences, farneback_estimator(fp));
    nlohmann::ordered_json j;
    j["sequences"] = sequences.size();
    j["motion_mag_px"] = r.motion_available ? nlohmann::ordered_json(r.motion_mag) : nlohmann::ordered_json();
    j["illumination"] = r.illumination;
    j["texture"] = r.texture;
    j["event_rate_mevs"] = r.event_rate;
    j["notices"] = r.notices;
    for (const auto& n : r.notices) std::cerr << "notice: " << n << "\n";
    write_text(out, j.dump(2) + "\n");
    manifest.outputs.push_back(out);
    manifest.write(out + ".manifest.json");
    return 0;
}

// Visual comparison

namespace {

cv::Mat to_bgr8(const Frame& f, double gain = 1.0) {
    if (f.channels() != 3) throw DataError("viz expects RGB frames");
    cv::Mat m(f.height(), f.width(), CV_8UC3);
    for (int y = 0; y < f.height(); ++y) {
        auto* row = m.ptr<cv::Vec3b>(y);
        for (int x = 0; x < f.width(); ++x) {
            for (int c = 0; c < 3; ++c) {
                const double v = std::clamp(f.at(y, x, c) * gain, 0.0, 1.0);
                row[x][2 - c] = static_cast<std::uint8_t>(std::lround(v * 255.0));
            }
        }
    }
    return m;
}

Frame crop_frame(const Frame& f, const Inset& r) {
    Frame out(r.h, r.w, f.channels());
    for (int y = 0; y < r.h; ++y) {
        for (int x = 0; x < r.w; ++x) {
            for (int c = 0; c < f.channels(); ++c) out.at(y, x, c) = f.at(r.y + y, r.x + x, c);
        }
    }
    return out;
}

double mean_value(const Frame& f) {
    long double s = 0;
    for (double v : f.data()) s += v;
    return f.empty() ? 0.0 : static_cast<double>(s / f.size());
}

const cv::Scalar kInsetColors[] = {{0, 0, 255}, {0, 200, 0}, {255, 128, 0}, {0, 200, 255}};

std::vector<std::string> caption(const Frame& pred, const Frame* ref) {
    if (!ref) return {"no-reference"};
    char psnr_text[32], ssim_text[32];
    std::snprintf(psnr_text, sizeof(psnr_text), "%.2f dB", psnr(clamped(pred), *ref));
    if (pred.height() >= 11 && pred.width() >= 11) {
        std::snprintf(ssim_text, sizeof(ssim_text), "SSIM %.3f", ssim(clamped(pred), *ref));
    } else {
        std::snprintf(ssim_text, sizeof(ssim_text), "SSIM n/a");
    }
    return {psnr_text, ssim_text};
}

} // namespace

int cmd_viz(const GlobalOptions& g, const std::string& sample_dir, const std::string& pred_dir, const std::string& out,
            const std::vector<Inset>& requested, int zoom) {
    const KvConfig cfg = resolve_config(g);
    if (zoom < 1) throw ConfigError("zoom must be >= 1");
    if (g.dry_run) {
        print_plan("viz", {"sample " + sample_dir, "predictions " + pred_dir,
                           std::to_string(requested.size()) + " insets at zoom " + std::to_string(zoom),
                           "composite -> " + out});
        return 0;
    }
    const ExposureSample s = read_sample(sample_dir);
    const Frame fused = read_image16(fs::path(pred_dir) / "fused.png");
    const Frame enhanced = read_image16(fs::path(pred_dir) / "enhanced.png");
    const int H = s.long_exposure.height(), W = s.long_exposure.width();
    for (const Frame* f : {&fused, &enhanced}) {
        if (f->height() != H || f->width() != W) throw DataError("predictions do not match the sample size");
    }

    std::vector<Inset> insets;
    for (const auto& r : requested) {
        Inset c{std::max(0, r.y), std::max(0, r.x), 0, 0};
        c.h = std::min(H, r.y + r.h) - c.y;
        c.w = std::min(W, r.x + r.w) - c.x;
        if (c.h <= 0 || c.w <= 0) {
            std::cerr << "warning: inset " << r.y << "," << r.x << "," << r.h << "," << r.w
                      << " lies outside the image and is skipped\n";
            continue;
        }
        if (c.h != r.h || c.w != r.w || c.y != r.y || c.x != r.x) {
            std::cerr << "warning: inset " << r.y << "," << r.x << "," << r.h << "," << r.w << " clipped to " << c.y
                      << "," << c.x << "," << c.h << "," << c.w << "\n";
        }
        insets.push_back(c);
    }

    // Short exposure brightened to the long exposure's mean level for display.
    const double gain = mean_value(s.long_exposure) / std::max(mean_value(s.short_exposure), 1e-6);
    const Frame* ref = s.gt ? &*s.gt : nullptr;
    struct Panel {
        std::string label;
        const Frame* frame;
        double gain;
    };
    const std::vector<Panel> panels = {{"short x" + std::to_string(static_cast<int>(std::lround(gain))),
                                        &s.short_exposure, gain},
                                       {"long", &s.long_exposure, 1.0},
                                       {"fused", &fused, 1.0},
                                       {ref ? "ground truth" : "enhanced", ref ? ref : &enhanced, 1.0}};

    const int header = 18, line_h = 13, caption_h = 2 * line_h + 2, gap = 4, min_col = 100;
    int inset_rows = 0;
    for (const auto& r : insets) inset_rows += r.h * zoom + caption_h + gap;
    int col_w = std::max(W, min_col);
    for (const auto& r : insets) col_w = std::max(col_w, r.w * zoom);
    cv::Mat canvas(header + H + gap + inset_rows, 4 * col_w + 3 * gap, CV_8UC3, cv::Scalar(255, 255, 255));

    for (int p = 0; p < 4; ++p) {
        const int x0 = p * (col_w + gap);
        cv::putText(canvas, panels[p].label, {x0 + 2, header - 5}, cv::FONT_HERSHEY_SIMPLEX, 0.4, {0, 0, 0}, 1,
                    cv::LINE_8);
        cv::Mat img = to_bgr8(*panels[p].frame, panels[p].gain);
        for (std::size_t k = 0; k < insets.size(); ++k) {
            const auto& r = insets[k];
            cv::rectangle(img, cv::Rect(r.x, r.y, r.w, r.h), kInsetColors[k % 4], 1, cv::LINE_8);
        }
        img.copyTo(canvas(cv::Rect(x0, header, W, H)));

        int y = header + H + gap;
        for (std::size_t k = 0; k < insets.size(); ++k) {
            const auto& r = insets[k];
            const Frame crop = crop_frame(*panels[p].frame, r);
            cv::Mat zoomed;
            cv::resize(to_bgr8(crop, panels[p].gain), zoomed, {r.w * zoom, r.h * zoom}, 0, 0, cv::INTER_NEAREST);
            zoomed.copyTo(canvas(cv::Rect(x0, y, zoomed.cols, zoomed.rows)));
            cv::rectangle(canvas, cv::Rect(x0, y, zoomed.cols, zoomed.rows), kInsetColors[k % 4], 1, cv::LINE_8);
            y += zoomed.rows;
            std::vector<std::string> text;
            if (p == 3 && ref) {
                text = {"reference"};
            } else {
                const Frame ref_crop = ref ? crop_frame(*ref, r) : Frame();
                text = caption(crop, ref ? &ref_crop : nullptr);
            }
            for (std::size_t l = 0; l < text.size(); ++l) {
                cv::putText(canvas, text[l], {x0 + 2, y + static_cast<int>(l + 1) * line_h - 2},
                            cv::FONT_HERSHEY_SIMPLEX, 0.35, {0, 0, 0}, 1, cv::LINE_8);
            }
            y += caption_h + gap;
        }
    }

    RunManifest manifest;
    manifest.command = "viz";
    manifest.config_text = cfg.to_string();
    manifest.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
    manifest.dataset_hash = hash_tree(sample_dir);
    if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
    if (!cv::imwrite(out, canvas)) throw DataError("cannot write " + out);
    manifest.outputs.push_back(out);
    manifest.write(out + ".manifest.json");
    return 0;
}

} // namespace edei::cli
