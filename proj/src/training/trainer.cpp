#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

#include "edei/error.hpp"
#include "edei/evaluation.hpp"
#include "edei/rng.hpp"
#include "edei/training.hpp"

namespace edei {

namespace {

std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
    return out;
}

LossWeights parse_lambdas(const KvConfig& c, const std::string& key, LossWeights fallback) {
    auto v = c.get_doubles(key, {fallback.fused, fallback.enhanced, fallback.deblurred});
    if (v.size() != 3) throw ConfigError(key + " needs three comma-separated values");
    return {v[0], v[1], v[2]};
}

torch::Tensor crop_batch(const std::vector<const TrainingExample*>& items, torch::Tensor TrainingExample::*field,
                         const std::vector<std::pair<int, int>>& origins, int crop) {
    std::vector<torch::Tensor> parts;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto& t = items[i]->*field;
        parts.push_back(t.slice(2, origins[i].first, origins[i].first + crop)
                            .slice(3, origins[i].second, origins[i].second + crop));
    }
    return torch::cat(parts, 0);
}

} // namespace

// Configuration

void TrainConfig::validate() const {
    for (const StageConfig* s : {&stage1, &stage2}) {
        if (s->lambdas.fused < 0 || s->lambdas.enhanced < 0 || s->lambdas.deblurred < 0) {
            throw ConfigError("loss weights must be non-negative");
        }
        if (!(s->lr > 0)) throw ConfigError("learning rate must be positive");
        if (s->epochs < 1) throw ConfigError("epochs must be >= 1");
    }
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (crop < 8) throw ConfigError("crop must be >= 8");
    if (!(grad_clip > 0)) throw ConfigError("grad_clip must be positive");
    if (!(lr_floor_ratio >= 0 && lr_floor_ratio <= 1)) throw ConfigError("lr_floor_ratio must be in [0, 1]");
    if (!(restart_fraction > 0 && restart_fraction <= 1)) throw ConfigError("restart_fraction must be in (0, 1]");
    if (max_steps < 0) throw ConfigError("max_steps must be >= 0");
    if (val_every < 1) throw ConfigError("val_every must be >= 1");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (std::abs(event_window_epsilon) > 0.5) throw ConfigError("event_window_epsilon must be within [-0.5, 0.5]");
    model.validate();
}

const StageConfig& TrainConfig::stage(int s) const {
    if (s == 1) return stage1;
    if (s == 2) return stage2;
    throw ConfigError("stage must be 1 or 2");
}

KvConfig TrainConfig::to_config() const {
    KvConfig c;
    for (int s : {1, 2}) {
        const auto& st = stage(s);
        const std::string p = "stage" + std::to_string(s) + ".";
        c.set(p + "lambdas", join({st.lambdas.fused, st.lambdas.enhanced, st.lambdas.deblurred}));
        c.set(p + "lr", st.lr);
        c.set(p + "epochs", st.epochs);
    }
    c.set("batch_size", batch_size);
    c.set("crop", crop);
    c.set("seed", static_cast<std::int64_t>(seed));
    c.set("grad_clip", grad_clip);
    c.set("lr_floor_ratio", lr_floor_ratio);
    c.set("restart_fraction", restart_fraction);
    c.set("max_steps", max_steps);
    c.set("val_every", val_every);
    c.set("threads", threads);
    c.set("event_window_epsilon", event_window_epsilon);
    const KvConfig model_cfg = model.to_config();
    for (const auto& [k, v] : model_cfg.entries()) c.set("model." + k, v);
    return c;
}

TrainConfig TrainConfig::from_config(const KvConfig& c) {
    TrainConfig t;
    for (int s : {1, 2}) {
        StageConfig& st = s == 1 ? t.stage1 : t.stage2;
        const std::string p = "stage" + std::to_string(s) + ".";
        st.lambdas = parse_lambdas(c, p + "lambdas", st.lambdas);
        st.lr = c.get_double(p + "lr", st.lr);
        st.epochs = static_cast<int>(c.get_int(p + "epochs", st.epochs));
    }
    t.batch_size = static_cast<int>(c.get_int("batch_size", t.batch_size));
    t.crop = static_cast<int>(c.get_int("crop", t.crop));
    t.seed = static_cast<std::uint64_t>(c.get_int("seed", static_cast<std::int64_t>(t.seed)));
    t.grad_clip = c.get_double("grad_clip", t.grad_clip);
    t.lr_floor_ratio = c.get_double("lr_floor_ratio", t.lr_floor_ratio);
    t.restart_fraction = c.get_double("restart_fraction", t.restart_fraction);
    t.max_steps = static_cast<int>(c.get_int("max_steps", t.max_steps));
    t.val_every = static_cast<int>(c.get_int("val_every", t.val_every));
    t.threads = static_cast<int>(c.get_int("threads", t.threads));
    t.event_window_epsilon = c.get_double("event_window_epsilon", t.event_window_epsilon);

    KvConfig model_cfg = t.model.to_config();
    for (const auto& [k, v] : c.entries()) {
        if (k.rfind("model.", 0) == 0) model_cfg.set(k.substr(6), v);
    }
    t.model = ModelConfig::from_config(model_cfg);
    t.validate();
    return t;
}

TrainConfig TrainConfig::desk() {
    TrainConfig t;
    t.model = ModelConfig::desk();
    t.crop = 64;
    t.batch_size = 4;
    t.stage1 = {{0.0, 1.0, 0.5}, 1e-3, 500};
    t.stage2 = {{1.0, 0.0, 0.0}, 5e-4, 100};
    t.val_every = 50;
    return t;
}

// Schedule and sampling

double sgdr_lr(double base_lr, double floor_ratio, double restart_fraction, int step, int total) {
    const int period = std::max(1, static_cast<int>(std::lround(total * restart_fraction)));
    const double phase = static_cast<double>(step % period) / period;
    const double floor = base_lr * floor_ratio;
    return floor + 0.5 * (base_lr - floor) * (1.0 + std::cos(M_PI * phase));
}

std::pair<int, int> crop_origin(int height, int width, int crop, std::uint64_t seed, std::uint64_t step,
                                std::uint64_t slot) {
    if (crop > height || crop > width) throw DataError("crop larger than the sample");
    CounterRng rng(seed, RngStream::Crop, step, slot);
    std::uniform_int_distribution<int> ry(0, height - crop), rx(0, width - crop);
    const int y = ry(rng);
    return {y, rx(rng)};
}

std::string EpochRecord::to_json() const {
    nlohmann::ordered_json j;
    j["epoch"] = epoch;
    j["stage"] = stage;
    j["loss"] = loss;
    j["val_psnr"] = validated ? nlohmann::ordered_json(val_psnr) : nlohmann::ordered_json(nullptr);
    j["val_ssim"] = validated ? nlohmann::ordered_json(val_ssim) : nlohmann::ordered_json(nullptr);
    j["lr"] = lr;
    return j.dump();
}

// Training loop

DualPathNet make_network(const TrainConfig& cfg) {
    cfg.validate();
    torch::set_num_threads(cfg.threads);
    torch::manual_seed(cfg.seed);
    return DualPathNet(cfg.model);
}

TrainResult train_stage(DualPathNet& net, const std::vector<TrainingExample>& train,
                        const std::vector<TrainingExample>& val, const TrainConfig& cfg, int stage,
                        const EpochCallback& on_epoch) {
    cfg.validate();
    const StageConfig& sc = cfg.stage(stage);
    if (stage == 2 && net->trained_stage < 1) throw CheckpointError("stage 2 requires a stage-1 checkpoint");
    if (train.empty()) throw DataError("no training samples");
    if (!(net->config() == cfg.model)) throw ConfigError("network config differs from the training config");
    torch::set_num_threads(cfg.threads);

    int crop = cfg.crop;
    for (const auto& ex : train) {
        if (!ex.gt.defined()) throw DataError("training sample " + ex.name + " has no ground truth");
        crop = std::min<int>(crop, static_cast<int>(std::min(ex.gt.size(2), ex.gt.size(3))));
    }

    std::vector<torch::Tensor> params;
    if (stage == 1) {
        params = net->parameters();
    } else {
        for (auto& p : net->path_parameters()) p.set_requires_grad(false);
        params = net->fusion_parameters();
    }
    torch::optim::Adam optimizer(params, torch::optim::AdamOptions(sc.lr).betas({0.9, 0.999}).weight_decay(0.0));

    const int n = static_cast<int>(train.size());
    const int steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    int total = sc.epochs * steps_per_epoch;
    if (cfg.max_steps > 0) total = std::min(total, cfg.max_steps);
    const int epochs = (total + steps_per_epoch - 1) / steps_per_epoch;

    TrainResult result;
    std::vector<int> order(n);
    int step = 0;
    for (int epoch = 1; epoch <= epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        CounterRng shuffle_rng(cfg.seed, RngStream::Shuffle, static_cast<std::uint64_t>(stage), epoch);
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double loss_sum = 0.0, lr = sc.lr;
        int loss_count = 0;
        for (int b = 0; b < steps_per_epoch && step < total; ++b, ++step) {
            std::vector<const TrainingExample*> items;
            std::vector<std::pair<int, int>> origins;
            for (int i = b * cfg.batch_size; i < std::min(n, (b + 1) * cfg.batch_size); ++i) {
                const auto& ex = train[order[i]];
                items.push_back(&ex);
                origins.push_back(crop_origin(static_cast<int>(ex.gt.size(2)), static_cast<int>(ex.gt.size(3)), crop,
                                              cfg.seed, (static_cast<std::uint64_t>(stage) << 32) | step,
                                              items.size() - 1));
            }
            ModelInputs in{crop_batch(items, &TrainingExample::short_image, origins, crop),
                           crop_batch(items, &TrainingExample::long_image, origins, crop),
                           crop_batch(items, &TrainingExample::events_deblur, origins, crop),
                           crop_batch(items, &TrainingExample::events_enhance, origins, crop)};
            auto gt = crop_batch(items, &TrainingExample::gt, origins, crop);
            const auto dtype = net->parameters().front().scalar_type();
            in = {in.short_image.to(dtype), in.long_image.to(dtype), in.events_deblur.to(dtype),
                  in.events_enhance.to(dtype)};
            gt = gt.to(dtype);

            lr = sgdr_lr(sc.lr, cfg.lr_floor_ratio, cfg.restart_fraction, step, total);
            for (auto& group : optimizer.param_groups()) {
                static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
            }

            optimizer.zero_grad();
            torch::Tensor loss;
            if (stage == 1) {
                auto out = sc.lambdas.fused > 0 ? net->forward(in) : net->forward_paths(in);
                loss = dei_loss(out.fused, out.enhanced, out.deblurred, gt, sc.lambdas);
            } else {
                ModelOutputs paths;
                {
                    torch::NoGradGuard no_grad;
                    paths = net->forward_paths(in);
                }
                auto fused = net->cgf->forward(paths.deblurred, paths.enhanced, paths.features_long,
                                               paths.features_short);
                loss = dei_loss(fused.fused, paths.enhanced, paths.deblurred, gt, sc.lambdas);
            }
            loss.backward();
            torch::nn::utils::clip_grad_norm_(params, cfg.grad_clip);
            optimizer.step();

            const double value = loss.item<double>();
            result.step_losses.push_back(value);
            loss_sum += value;
            ++loss_count;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.stage = stage;
        rec.loss = loss_sum / std::max(1, loss_count);
        rec.lr = lr;
        if (!val.empty() && (epoch % cfg.val_every == 0 || epoch == epochs)) {
            const EvalResult ev = evaluate(net, val);
            const MetricReport& r = stage == 1 ? ev.enhanced : ev.fused;
            rec.val_psnr = r.psnr_db;
            rec.val_ssim = r.ssim;
            rec.validated = true;
        }
        result.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec);
    }

    if (stage == 2) {
        for (auto& p : net->path_parameters()) p.set_requires_grad(true);
    }
    net->trained_stage = std::max(net->trained_stage, stage);
    return result;
}

std::vector<Lambda3Row> lambda3_sweep(const std::vector<TrainingExample>& train,
                                      const std::vector<TrainingExample>& val, const TrainConfig& cfg,
                                      const std::vector<double>& values) {
    std::vector<Lambda3Row> rows;
    for (double v : values) {
        TrainConfig c = cfg;
        c.stage1.lambdas.deblurred = v;
        DualPathNet net = make_network(c);
        train_stage(net, train, {}, c, 1);
        const EvalResult ev = evaluate(net, val.empty() ? train : val);
        rows.push_back({v, ev.deblurred.psnr_db, ev.enhanced.psnr_db});
    }
    return rows;
}

} // namespace edei
