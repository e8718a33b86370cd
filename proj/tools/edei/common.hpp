#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "edei/kv_config.hpp"
#include "edei/sample.hpp"
#include "edei/synthesis.hpp"

namespace edei::cli {

namespace fs = std::filesystem;

struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    bool dry_run = false;
    std::string config_path;
    std::vector<std::string> overrides;
};

/// `file` (falling back to --config), then --set overrides, then --seed as the
/// `seed` key.
KvConfig resolve_config(const GlobalOptions& g, const std::string& file = {});

/// Hash of every regular file below `root` (paths and bytes), ignoring run manifests.
std::string hash_tree(const fs::path& root);

struct RunManifest {
    std::string command;
    std::string config_text;
    std::uint64_t seed = 0;
    std::string dataset_hash;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    /// Single JSON object; `wall_clock_s` is the only field that varies between runs.
    void write(const fs::path& path) const;
};

void print_plan(const std::string& command, const std::vector<std::string>& steps);

/// Sample directories grouped by sequence, in dataset order.
struct LoadedSample {
    std::string name; // "<sequence>/<index>"
    std::string sequence;
    ExposureSample sample;
};
std::vector<LoadedSample> load_dataset(const fs::path& root);

/// Source sequences under an input directory: every subdirectory holding
/// images, or the directory itself when it holds the images directly.
struct SourceSequence {
    std::string name;
    std::vector<fs::path> images;
};
std::vector<SourceSequence> find_sequences(const fs::path& input);

FrameSequence load_sequence(const SourceSequence& source, double fps);

/// Per-sequence recipe: the synthesis seed is derived from the base seed and the sequence name.
SynthesisRecipe sequence_recipe(const SynthesisRecipe& base, const std::string& sequence);

/// Short-exposure indices of the interpolated clip that `synth` turns into samples.
std::vector<std::size_t> sample_starts(const FrameSequence& clip, const SynthesisRecipe& recipe);

/// Number of frames `interpolate` produces from `count` source frames.
std::size_t interpolated_size(std::size_t count, int factor);

void write_text(const fs::path& path, const std::string& text);

int cmd_synth(const GlobalOptions& g, const std::string& input, const std::string& out, const std::string& recipe);
int cmd_stats(const GlobalOptions& g, const std::string& data, const std::string& out);
struct Inset {
    int y = 0, x = 0, h = 0, w = 0;
};
int cmd_viz(const GlobalOptions& g, const std::string& sample, const std::string& pred, const std::string& out,
            const std::vector<Inset>& insets, int zoom);
int cmd_train(const GlobalOptions& g, const std::string& data, const std::string& config, int stage,
              const std::string& out, const std::string& init, const std::string& val);
int cmd_eval(const GlobalOptions& g, const std::string& ckpt, const std::string& data, const std::string& sweep,
             const std::string& out, const std::string& frames, const std::string& recipe,
             const std::vector<int>& ratios);
int cmd_infer(const GlobalOptions& g, const std::string& ckpt, const std::string& sample, const std::string& out);

int run(int argc, char** argv);

} // namespace edei::cli
