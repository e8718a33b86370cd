#include <iostream>

#include "CLI11.hpp"

#include "common.hpp"
#include "edei/error.hpp"

namespace edei::cli {

namespace {

Inset parse_inset(const std::string& text) {
    Inset r;
    char c1 = 0, c2 = 0, c3 = 0;
    std::istringstream in(text);
    if (!(in >> r.y >> c1 >> r.x >> c2 >> r.h >> c3 >> r.w) || c1 != ',' || c2 != ',' || c3 != ',' || r.h <= 0 ||
        r.w <= 0) {
        throw ConfigError("inset must be y,x,height,width with positive size: " + text);
    }
    return r;
}

} // namespace

int run(int argc, char** argv) {
    CLI::App app{"Event-guided dual-exposure imaging: synthesis, training, evaluation"};
    app.require_subcommand(1);
    GlobalOptions g;
    std::uint64_t seed = 0;
    auto* seed_opt = app.add_option("--seed", seed, "seed overriding the config's `seed` key")->group("Global");
    app.add_flag("--dry-run", g.dry_run, "validate and print the plan without writing")->group("Global");
    app.add_option("--config", g.config_path, "flat key=value config file")->group("Global");
    app.add_option("--set", g.overrides, "key=value override, repeatable")->group("Global");
    app.fallthrough();

    std::string input, out, recipe, data, config, ckpt, sweep, init, val, frames, sample, pred;
    int stage = 1, zoom = 3;
    std::vector<int> ratios = {3, 4, 5, 6, 7, 8, 9, 10, 11};
    std::vector<std::string> inset_text;

    auto* synth = app.add_subcommand("synth", "turn sharp frame folders into a dataset");
    synth->add_option("--input", input, "frames directory (one subfolder per sequence)")->required();
    synth->add_option("--out", out, "dataset root")->required();
    synth->add_option("--recipe", recipe, "synthesis recipe");

    auto* train = app.add_subcommand("train", "train one stage");
    train->add_option("--data", data, "dataset root")->required();
    train->add_option("--config", config, "training config");
    train->add_option("--stage", stage, "1 (paths) or 2 (fusion)")->check(CLI::IsMember({1, 2}));
    train->add_option("--out", out, "checkpoint directory")->required();
    train->add_option("--init", init, "stage-1 checkpoint for stage 2 (default <out>/stage1.ckpt)");
    train->add_option("--val", val, "validation dataset root (default: training data)");

    auto* eval = app.add_subcommand("eval", "score a checkpoint, optionally as a sweep");
    eval->add_option("--ckpt", ckpt, "checkpoint")->required();
    eval->add_option("--data", data, "dataset root")->required();
    eval->add_option("--sweep", sweep, "temporal or ratio")->check(CLI::IsMember({"temporal", "ratio"}));
    eval->add_option("--out", out, "report (line-delimited JSON)")->required();
    eval->add_option("--frames", frames, "sharp source frames, for the ratio sweep");
    eval->add_option("--recipe", recipe, "synthesis recipe used for the dataset, for the ratio sweep");
    eval->add_option("--ratios", ratios, "exposure ratios for the ratio sweep")->delimiter(',');

    auto* infer = app.add_subcommand("infer", "run the network on one sample");
    infer->add_option("--ckpt", ckpt, "checkpoint")->required();
    infer->add_option("--sample", sample, "sample directory")->required();
    infer->add_option("--out", out, "output directory")->required();

    auto* stats = app.add_subcommand("stats", "dataset statistics");
    stats->add_option("--data", data, "dataset root")->required();
    stats->add_option("--out", out, "report (JSON)")->required();

    auto* viz = app.add_subcommand("viz", "side-by-side comparison with zoomed insets");
    viz->add_option("--sample", sample, "sample directory")->required();
    viz->add_option("--pred", pred, "directory written by infer")->required();
    viz->add_option("--out", out, "composite image")->required();
    viz->add_option("--inset", inset_text, "y,x,height,width; repeatable");
    viz->add_option("--zoom", zoom, "inset magnification");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (*seed_opt) g.seed = seed;

    try {
        if (*synth) return cmd_synth(g, input, out, recipe);
        if (*train) return cmd_train(g, data, config, stage, out, init, val);
        if (*eval) return cmd_eval(g, ckpt, data, sweep, out, frames, recipe, ratios);
        if (*infer) return cmd_infer(g, ckpt, sample, out);
        if (*stats) return cmd_stats(g, data, out);
        std::vector<Inset> insets;
        for (const auto& t : inset_text) insets.push_back(parse_inset(t));
        return cmd_viz(g, sample, pred, out, insets, zoom);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace edei::cli
