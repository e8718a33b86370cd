#include <cmath>
#include <fstream>
#include <iostream>
#include <map>

#include "json.hpp"

#include "common.hpp"
#include "edei/dataset_io.hpp"
#include "edei/error.hpp"
#include "edei/evaluation.hpp"
#include "edei/training.hpp"

namespace edei::cli {

namespace {

using ojson = nlohmann::ordered_json;

std::vector<TrainingExample> to_examples(const std::vector<LoadedSample>& samples, int bins, double epsilon) {
    std::vector<TrainingExample> out;
    for (const auto& s : samples) out.push_back(make_example(s.sample, bins, epsilon, s.name));
    return out;
}

ojson report_json(const MetricReport& r) {
    ojson j;
    j["psnr_db"] = r.psnr_db;
    j["ssim"] = r.ssim;
    return j;
}

void append_line(std::ofstream& out, const std::string& line) {
    out << line << "\n";
    out.flush();
}

} // namespace

int cmd_train(const GlobalOptions& g, const std::string& data, const std::string& config, int stage,
              const std::string& out, const std::string& init, const std::string& val_root) {
    const KvConfig kv = resolve_config(g, config);
    TrainConfig cfg = TrainConfig::from_config(kv);
    if (stage != 1 && stage != 2) throw ConfigError("--stage must be 1 or 2");
    const fs::path out_dir(out);
    const fs::path init_path = !init.empty() ? fs::path(init) : out_dir / "stage1.ckpt";
    const fs::path ckpt_path = out_dir / ("stage" + std::to_string(stage) + ".ckpt");

    if (g.dry_run) {
        const auto& sc = cfg.stage(stage);
        std::vector<std::string> steps = {
            "dataset " + data + (val_root.empty() ? " (also used for validation)" : ", validation " + val_root),
            "stage " + std::to_string(stage) + ": " + std::to_string(sc.epochs) + " epochs, lr " +
                format_double(sc.lr) + ", lambdas " + format_double(sc.lambdas.fused) + "," +
                format_double(sc.lambdas.enhanced) + "," + format_double(sc.lambdas.deblurred),
            "batch " + std::to_string(cfg.batch_size) + ", crop " + std::to_string(cfg.crop) + ", seed " +
                std::to_string(cfg.seed),
            "model " + std::to_string(count_parameters(cfg.model).total) + " parameters",
        };
        if (stage == 2) steps.push_back("initial weights " + init_path.string());
        steps.push_back("checkpoint -> " + ckpt_path.string() + ", metrics -> " + (out_dir / "metrics.jsonl").string());
        print_plan("train", steps);
        return 0;
    }

    DualPathNet net{nullptr};
    if (stage == 1) {
        net = make_network(cfg);
    } else {
        if (!fs::exists(init_path)) throw CheckpointError("stage 2 needs a stage-1 checkpoint at " + init_path.string());
        net = load_checkpoint(init_path.string());
        bool model_keys = false;
        for (const auto& [k, v] : kv.entries()) model_keys = model_keys || k.rfind("model.", 0) == 0;
        if (model_keys && !(net->config() == cfg.model)) {
            throw ConfigError("model settings in the config differ from the checkpoint " + init_path.string());
        }
        cfg.model = net->config();
        torch::set_num_threads(cfg.threads);
        torch::manual_seed(cfg.seed);
    }

    RunManifest manifest;
    manifest.command = "train --stage " + std::to_string(stage);
    manifest.config_text = cfg.to_config().to_string();
    manifest.seed = cfg.seed;
    manifest.dataset_hash = hash_tree(data);

    const int bins = cfg.model.event_bins;
    const auto train = to_examples(load_dataset(data), bins, cfg.event_window_epsilon);
    const auto val = val_root.empty() ? train : to_examples(load_dataset(val_root), bins, 0.0);

    fs::create_directories(out_dir);
    std::ofstream metrics(out_dir / "metrics.jsonl", std::ios::app);
    if (!metrics) throw DataError("cannot open " + (out_dir / "metrics.jsonl").string());
    train_stage(net, train, val, cfg, stage, [&](const EpochRecord& e) {
        append_line(metrics, e.to_json());
        if (e.validated) {
            std::cerr << "stage " << e.stage << " epoch " << e.epoch << " loss " << e.loss << " val " << e.val_psnr
                      << " dB\n";
        }
    });
    save_checkpoint(ckpt_path.string(), net);
    manifest.outputs = {ckpt_path.string(), (out_dir / "metrics.jsonl").string()};
    manifest.write(out_dir / ("manifest_stage" + std::to_string(stage) + ".json"));
    return 0;
}

int cmd_eval(const GlobalOptions& g, const std::string& ckpt, const std::string& data, const std::string& sweep,
             const std::string& out, const std::string& frames, const std::string& recipe_file,
             const std::vector<int>& ratios) {
    const KvConfig kv = resolve_config(g);
    if (!sweep.empty() && sweep != "temporal" && sweep != "ratio") {
        throw ConfigError("--sweep must be 'temporal' or 'ratio'");
    }
    if (sweep == "ratio" && frames.empty()) throw ConfigError("--sweep ratio needs --frames with the sharp source clips");
    const std::vector<double> epsilons = kv.get_doubles("epsilons", default_epsilons());
    if (g.dry_run) {
        std::vector<std::string> steps = {"checkpoint " + ckpt, "dataset " + data};
        if (sweep == "temporal") steps.push_back("temporal sweep over " + std::to_string(epsilons.size()) + " offsets");
        if (sweep == "ratio") steps.push_back("ratio sweep over " + std::to_string(ratios.size()) + " ratios from " + frames);
        steps.push_back("report -> " + out);
        print_plan("eval", steps);
        return 0;
    }
    const std::uint64_t seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
    torch::manual_seed(seed);
    DualPathNet net = load_checkpoint(ckpt);
    const auto samples = load_dataset(data);

    RunManifest manifest;
    manifest.command = "eval" + (sweep.empty() ? std::string() : " --sweep " + sweep);
    manifest.config_text = kv.to_string();
    manifest.seed = seed;
    manifest.dataset_hash = hash_tree(data);

    std::ostringstream lines;
    std::string table;
    if (sweep.empty()) {
        const auto result = evaluate(net, to_examples(samples, net->config().event_bins, 0.0));
        const std::pair<const char*, const MetricReport*> outputs[] = {
            {"fused", &result.fused}, {"enhanced", &result.enhanced}, {"deblurred", &result.deblurred}};
        for (const auto& [name, report] : outputs) {
            for (const auto& m : report->per_sample) {
                ojson j;
                j["sample"] = m.name;
                j["output"] = name;
                j["psnr_db"] = m.psnr_db;
                j["ssim"] = m.ssim;
                lines << j.dump() << "\n";
            }
        }
        for (const auto& [name, report] : outputs) {
            ojson j;
            j["summary"] = name;
            j["samples"] = report->per_sample.size();
            j.update(report_json(*report));
            lines << j.dump() << "\n";
        }
        if (result.fused.per_sample.empty()) std::cerr << "notice: no sample carries ground truth; nothing scored\n";
    } else if (sweep == "temporal") {
        std::vector<ExposureSample> plain;
        for (const auto& s : samples) plain.push_back(s.sample);
        const auto rows = sweep_temporal(net, plain, epsilons);
        for (const auto& r : rows) {
            ojson j;
            j["sweep"] = "temporal";
            j["epsilon"] = r.key;
            j["psnr_db"] = r.psnr;
            j["ssim"] = r.ssim;
            lines << j.dump() << "\n";
        }
        table = format_sweep_table("epsilon", rows);
    } else {
        const SynthesisRecipe base = SynthesisRecipe::from_config(resolve_config(g, recipe_file));
        std::map<std::string, std::vector<const LoadedSample*>> by_sequence;
        for (const auto& s : samples) by_sequence[s.sequence].push_back(&s);
        // Rows pooled over sequences, weighted by sample count.
        std::vector<SweepRow> pooled(ratios.size());
        std::size_t total = 0;
        for (const auto& source : find_sequences(frames)) {
            auto it = by_sequence.find(source.name);
            if (it == by_sequence.end()) continue;
            const SynthesisRecipe recipe = sequence_recipe(base, source.name);
            RatioSweepInput input{interpolate(load_sequence(source, recipe.fps), recipe.interp_factor), {}};
            for (const auto* s : it->second) {
                std::size_t best = 0;
                for (std::size_t i = 1; i < input.clip.size(); ++i) {
                    if (std::abs(input.clip.timestamp(i) - s->sample.timing.t_s) <
                        std::abs(input.clip.timestamp(best) - s->sample.timing.t_s)) {
                        best = i;
                    }
                }
                input.starts.push_back(best);
            }
            const std::size_t n = input.starts.size();
            const auto rows = sweep_ratio(net, {input}, recipe, ratios);
            for (std::size_t k = 0; k < rows.size(); ++k) {
                ojson j;
                j["sweep"] = "ratio";
                j["sequence"] = source.name;
                j["R"] = ratios[k];
                j["psnr_db"] = rows[k].psnr;
                j["ssim"] = rows[k].ssim;
                lines << j.dump() << "\n";
                pooled[k].key = rows[k].key;
                pooled[k].psnr += rows[k].psnr * static_cast<double>(n);
                pooled[k].ssim += rows[k].ssim * static_cast<double>(n);
            }
            total += n;
        }
        if (total == 0) throw DataError("no dataset sequence matches a source clip under " + frames);
        for (auto& r : pooled) {
            r.psnr /= static_cast<double>(total);
            r.ssim /= static_cast<double>(total);
            ojson j;
            j["sweep"] = "ratio";
            j["R"] = static_cast<int>(r.key);
            j.update(ojson{{"psnr_db", r.psnr}, {"ssim", r.ssim}});
            lines << j.dump() << "\n";
        }
        table = format_sweep_table("R", pooled);
    }

    write_text(out, lines.str());
    manifest.outputs.push_back(out);
    if (!table.empty()) {
        write_text(out + ".table.txt", table);
        manifest.outputs.push_back(out + ".table.txt");
        std::cout << table;
    }
    manifest.write(out + ".manifest.json");
    return 0;
}

int cmd_infer(const GlobalOptions& g, const std::string& ckpt, const std::string& sample_dir, const std::string& out) {
    const KvConfig kv = resolve_config(g);
    if (g.dry_run) {
        print_plan("infer", {"checkpoint " + ckpt, "sample " + sample_dir,
                             "fused.png, enhanced.png, deblurred.png, report.json -> " + out});
        return 0;
    }
    const std::uint64_t seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
    torch::manual_seed(seed);
    DualPathNet net = load_checkpoint(ckpt);
    const ExposureSample sample = read_sample(sample_dir);
    const auto& mc = net->config();
    if (sample.short_exposure.channels() != mc.image_channels) {
        throw ConfigError("checkpoint expects " + std::to_string(mc.image_channels) + "-channel images, sample has " +
                          std::to_string(sample.short_exposure.channels()));
    }
    const auto ex = make_example(sample, mc.event_bins, 0.0, fs::path(sample_dir).filename().string());
    const Predictions p = predict(net, ex);

    RunManifest manifest;
    manifest.command = "infer";
    manifest.config_text = kv.to_string();
    manifest.seed = seed;
    manifest.dataset_hash = hash_tree(sample_dir);

    const fs::path dir(out);
    fs::create_directories(dir);
    const std::pair<const char*, const Frame*> images[] = {
        {"fused", &p.fused}, {"enhanced", &p.enhanced}, {"deblurred", &p.deblurred}};
    ojson report;
    const fs::path sample_path = fs::path(sample_dir).lexically_normal();
    const fs::path leaf = sample_path.has_filename() ? sample_path : sample_path.parent_path();
    report["sample"] = (leaf.parent_path().filename() / leaf.filename()).generic_string();
    report["reference"] = sample.gt ? "gt" : "no-reference";
    for (const auto& [name, frame] : images) {
        const fs::path path = dir / (std::string(name) + ".png");
        write_image16(path, clamped(*frame));
        manifest.outputs.push_back(path.string());
        if (sample.gt) {
            MetricReport m;
            m.add(name, *frame, *sample.gt);
            report["metrics"][name] = report_json(m);
        }
    }
    write_text(dir / "report.json", report.dump(2) + "\n");
    manifest.outputs.push_back((dir / "report.json").string());
    manifest.write(dir / "manifest.json");
    return 0;
}

} // namespace edei::cli
