#include "edei/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "edei/error.hpp"
#include "edei/rng.hpp"

namespace edei {

namespace {

// Slack on threshold comparisons so that a change of exactly k*C in exact
// arithmetic still yields k events after log() rounding.
constexpr double kCrossingSlack = 1e-9;

std::size_t find_frame(const FrameSequence& seq, double t) {
    const auto& ts = seq.timestamps();
    auto it = std::lower_bound(ts.begin(), ts.end(), t);
    std::size_t best = static_cast<std::size_t>(std::distance(ts.begin(), it));
    if (best == ts.size() || (best > 0 && std::abs(ts[best - 1] - t) < std::abs(ts[best] - t))) --best;
    const double step = seq.size() > 1 ? (ts.back() - ts.front()) / static_cast<double>(seq.size() - 1) : 1.0;
    if (std::abs(ts[best] - t) > 1e-6 * step + 1e-12) {
        throw DataError("t_s = " + format_double(t) + " is not a frame timestamp");
    }
    return best;
}

} // namespace

void DegradationParams::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0,1]");
    if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in (0,1]");
    if (!(gamma >= 1.0)) throw ConfigError("gamma must be >= 1");
    if (!(sigma_p >= 0.0) || !(sigma_g >= 0.0)) throw ConfigError("noise sigmas must be non-negative");
}

DegradationParams DegradationParams::sample(std::uint64_t seed) {
    CounterRng rng(seed, RngStream::Degradation);
    auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    DegradationParams p;
    p.alpha = uniform(0.9, 1.0);
    p.beta = uniform(0.5, 1.0);
    p.gamma = uniform(2.0, 3.5);
    p.sigma_p = uniform(0.05, 0.1);
    p.sigma_g = uniform(0.05, 0.1);
    return p;
}

void SimulatorConfig::validate() const {
    if (!(threshold_C > 0.0)) throw ConfigError("threshold_C must be positive");
    if (!(cutoff_hz > 0.0)) throw ConfigError("cutoff_hz must be positive");
    if (!(noise_rate_hz >= 0.0)) throw ConfigError("noise_rate_hz must be non-negative");
    if (!(refractory_s >= 0.0)) throw ConfigError("refractory_s must be non-negative");
}

void SynthesisRecipe::validate() const {
    if (!(fps > 0.0)) throw ConfigError("fps must be positive");
    if (interp_factor < 0) throw ConfigError("interp_factor must be >= 0");
    if (blur_count < 1) throw ConfigError("blur_count must be >= 1");
    if (!(exposure_ratio_R > 0.0)) throw ConfigError("exposure_ratio_R must be positive");
    if (interval_frames < 1) throw ConfigError("interval_frames must be >= 1 (short exposure precedes long)");
    if (sample_stride < 0 || max_samples < 0) throw ConfigError("sample_stride and max_samples must be >= 0");
    if (!randomize_degradation) degradation.validate();
    simulator.validate();
}

KvConfig SynthesisRecipe::to_config() const {
    KvConfig c;
    c.set("fps", fps);
    c.set("interp_factor", interp_factor);
    c.set("blur_count", blur_count);
    c.set("exposure_ratio_R", exposure_ratio_R);
    c.set("interval_frames", interval_frames);
    c.set("delta_t", delta_t);
    c.set("sample_stride", sample_stride);
    c.set("max_samples", max_samples);
    c.set("randomize_degradation", randomize_degradation);
    c.set("alpha", degradation.alpha);
    c.set("beta", degradation.beta);
    c.set("gamma", degradation.gamma);
    c.set("sigma_p", degradation.sigma_p);
    c.set("sigma_g", degradation.sigma_g);
    c.set("threshold_C", simulator.threshold_C);
    c.set("cutoff_hz", simulator.cutoff_hz);
    c.set("noise_rate_hz", simulator.noise_rate_hz);
    c.set("refractory_s", simulator.refractory_s);
    c.set("seed", std::to_string(rng_seed));
    return c;
}

SynthesisRecipe SynthesisRecipe::from_config(const KvConfig& c) {
    SynthesisRecipe r;
    r.fps = c.get_double("fps", r.fps);
    r.interp_factor = static_cast<int>(c.get_int("interp_factor", r.interp_factor));
    r.blur_count = static_cast<int>(c.get_int("blur_count", r.blur_count));
    r.exposure_ratio_R = c.get_double("exposure_ratio_R", r.exposure_ratio_R);
    r.interval_frames = static_cast<int>(c.get_int("interval_frames", r.interval_frames));
    r.delta_t = c.get_double("delta_t", r.delta_t);
    r.sample_stride = static_cast<int>(c.get_int("sample_stride", r.sample_stride));
    r.max_samples = static_cast<int>(c.get_int("max_samples", r.max_samples));
    r.randomize_degradation = c.get_bool("randomize_degradation", r.randomize_degradation);
    r.degradation.alpha = c.get_double("alpha", r.degradation.alpha);
    r.degradation.beta = c.get_double("beta", r.degradation.beta);
    r.degradation.gamma = c.get_double("gamma", r.degradation.gamma);
    r.degradation.sigma_p = c.get_double("sigma_p", r.degradation.sigma_p);
    r.degradation.sigma_g = c.get_double("sigma_g", r.degradation.sigma_g);
    r.simulator.threshold_C = c.get_double("threshold_C", r.simulator.threshold_C);
    r.simulator.cutoff_hz = c.get_double("cutoff_hz", r.simulator.cutoff_hz);
    r.simulator.noise_rate_hz = c.get_double("noise_rate_hz", r.simulator.noise_rate_hz);
    r.simulator.refractory_s = c.get_double("refractory_s", r.simulator.refractory_s);
    r.rng_seed = static_cast<std::uint64_t>(c.get_int("seed", 0));
    r.validate();
    return r;
}

SynthesisRecipe SynthesisRecipe::with_ratio(double ratio) const {
    if (!(ratio > 0.0)) throw ConfigError("exposure ratio must be positive");
    SynthesisRecipe r = *this;
    r.blur_count = std::max(1, static_cast<int>(std::lround(ratio * blur_count / exposure_ratio_R)));
    r.exposure_ratio_R = ratio;
    return r;
}

FrameSequence interpolate(const FrameSequence& seq, int factor) {
    if (factor < 0) throw ConfigError("interpolation factor must be >= 0");
    if (seq.size() < 2) throw DataError("cannot interpolate a sequence with fewer than 2 frames");

    std::vector<Frame> frames;
    std::vector<double> ts;
    frames.reserve((seq.size() - 1) * (factor + 1) + 1);
    ts.reserve(frames.capacity());
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
        const Frame& a = seq.frame(i);
        const Frame& b = seq.frame(i + 1);
        const double t0 = seq.timestamp(i), t1 = seq.timestamp(i + 1);
        frames.push_back(a);
        ts.push_back(t0);
        for (int j = 1; j <= factor; ++j) {
            const double w = static_cast<double>(j) / (factor + 1);
            Frame f = a;
            auto fa = a.data(), fb = b.data();
            auto out = f.data();
            for (std::size_t k = 0; k < out.size(); ++k) out[k] = fa[k] + w * (fb[k] - fa[k]);
            frames.push_back(std::move(f));
            ts.push_back(t0 + w * (t1 - t0));
        }
    }
    frames.push_back(seq.frame(seq.size() - 1));
    ts.push_back(seq.timestamp(seq.size() - 1));
    return FrameSequence(std::move(frames), std::move(ts));
}

Frame synth_long(const FrameSequence& seq, const ExposureTiming& timing) {
    if (seq.empty()) throw DataError("no frames in exposure");
    // Extended-precision accumulation keeps the mean of identical frames exact.
    std::vector<long double> acc(seq.frame(0).size(), 0.0L);
    std::size_t count = 0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const double t = seq.timestamp(i);
        if (t < timing.t_b || t > timing.t_e) continue;
        auto src = seq.frame(i).data();
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += src[k];
        ++count;
    }
    if (count == 0) throw DataError("no frames in exposure [" + format_double(timing.t_b) + ", " +
                                    format_double(timing.t_e) + "]");
    Frame out(seq.height(), seq.width(), seq.channels(), 0.0);
    auto dst = out.data();
    for (std::size_t k = 0; k < acc.size(); ++k) dst[k] = static_cast<double>(acc[k] / count);
    return out;
}

Frame darken(const Frame& gt, const DegradationParams& params) {
    params.validate();
    Frame out = gt;
    for (double& v : out.data()) v = params.beta * std::pow(params.alpha * std::max(v, 0.0), params.gamma);
    return out;
}

Frame sample_short_unclamped(const Frame& gt, const DegradationParams& params, std::uint64_t seed) {
    Frame out = darken(gt, params);
    const double var_g = params.sigma_g * params.sigma_g;
    if (params.sigma_p == 0.0 && params.sigma_g == 0.0) return out;
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
            CounterRng rng(seed, RngStream::ShortNoise, static_cast<std::uint64_t>(x), static_cast<std::uint64_t>(y));
            std::normal_distribution<double> normal(0.0, 1.0);
            for (int c = 0; c < out.channels(); ++c) {
                double& j = out.at(y, x, c);
                j += std::sqrt(params.sigma_p * j + var_g) * normal(rng);
            }
        }
    }
    return out;
}

Frame synth_short(const Frame& gt, const DegradationParams& params, std::uint64_t seed) {
    return clamped(sample_short_unclamped(gt, params, seed));
}

EventStream simulate_events(const FrameSequence& seq, const SimulatorConfig& cfg, std::uint64_t seed,
                            SimulatorStats* stats) {
    cfg.validate();
    if (seq.size() < 2) throw DataError("event simulation needs at least 2 frames");
    const int H = seq.height(), W = seq.width();
    if (H > 0xffff || W > 0xffff) throw DataError("sensor too large for 16-bit event coordinates");

    const std::size_t n = seq.size();
    std::vector<Frame> log_luma;
    log_luma.reserve(n);
    for (const Frame& f : seq.frames()) {
        Frame l = to_luma(f);
        for (double& v : l.data()) v = std::log(std::max(v, 0.0) + kLogFloor);
        log_luma.push_back(std::move(l));
    }
    std::vector<double> gain(n, 1.0);
    if (std::isfinite(cfg.cutoff_hz)) {
        for (std::size_t k = 1; k < n; ++k) {
            const double dt = seq.timestamp(k) - seq.timestamp(k - 1);
            gain[k] = 1.0 - std::exp(-2.0 * std::numbers::pi * cfg.cutoff_hz * dt);
        }
    }

    const double C = cfg.threshold_C;
    const double t0 = seq.timestamp(0), t1 = seq.timestamp(n - 1);
    SimulatorStats local;
    EventStream out;
    out.height = H;
    out.width = W;
    out.t_start = t0;
    out.t_end = t1;

    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const std::size_t px = static_cast<std::size_t>(y) * W + x;
            double filtered = log_luma[0].data()[px];
            double reference = filtered;
            double last_t = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 1; k < n; ++k) {
                const double next = filtered + gain[k] * (log_luma[k].data()[px] - filtered);
                const double step = std::abs(next - filtered) / C;
                ++local.steps;
                local.max_step_over_C = std::max(local.max_step_over_C, step);
                if (step > 3.0) ++local.large_steps;

                const double delta = next - reference;
                const auto count = static_cast<long>(std::floor(std::abs(delta) / C + kCrossingSlack));
                if (count > 0) {
                    const int p = delta > 0 ? 1 : -1;
                    const double ta = seq.timestamp(k - 1), tb = seq.timestamp(k);
                    for (long j = 1; j <= count; ++j) {
                        const double level = reference + static_cast<double>(j) * C * p;
                        double frac = next != filtered ? (level - filtered) / (next - filtered) : 1.0;
                        frac = std::clamp(frac, 0.0, 1.0);
                        const double t = ta + frac * (tb - ta);
                        if (t - last_t < cfg.refractory_s) continue;
                        last_t = t;
                        out.events.push_back({t, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y),
                                              static_cast<std::int8_t>(p)});
                    }
                    reference += static_cast<double>(count) * C * p;
                }
                filtered = next;
            }

            if (cfg.noise_rate_hz > 0.0) {
                CounterRng rng(seed, RngStream::EventNoise, static_cast<std::uint64_t>(x),
                               static_cast<std::uint64_t>(y));
                const long spurious = std::poisson_distribution<long>(cfg.noise_rate_hz * (t1 - t0))(rng);
                std::uniform_real_distribution<double> when(t0, t1);
                for (long i = 0; i < spurious; ++i) {
                    const double t = when(rng);
                    const auto p = static_cast<std::int8_t>((rng() & 1U) ? 1 : -1);
                    out.events.push_back({t, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), p});
                }
            }
        }
    }
    std::sort(out.events.begin(), out.events.end(), event_before);
    if (stats) *stats = local;
    return out;
}

ExposureTiming derive_timing(const FrameSequence& seq, const SynthesisRecipe& recipe, std::size_t short_index) {
    recipe.validate();
    const std::size_t n = seq.size();
    const std::size_t i_b = short_index + static_cast<std::size_t>(recipe.interval_frames);
    const std::size_t i_e = i_b + static_cast<std::size_t>(recipe.blur_count) - 1;
    const double step = n > 1 ? (seq.timestamp(n - 1) - seq.timestamp(0)) / static_cast<double>(n - 1) : 0.0;
    if (i_e >= n) {
        std::ostringstream msg;
        msg << "sequence does not cover the long exposure: needs frame " << i_e << " (about "
            << format_double(seq.timestamp(short_index) + static_cast<double>(i_e - short_index) * step)
            << " s) but ends at frame " << n - 1 << " (" << format_double(seq.timestamp(n - 1)) << " s)";
        throw DataError(msg.str());
    }
    ExposureTiming timing;
    timing.t_s = seq.timestamp(short_index);
    timing.t_b = seq.timestamp(i_b);
    timing.t_e = seq.timestamp(i_e);
    timing.delta_t = recipe.delta_t > 0.0 ? recipe.delta_t : 0.5 * timing.interval();
    if (timing.t_s - timing.delta_t < seq.timestamp(0)) {
        throw DataError("sequence does not cover the enhancement event window: needs [" +
                        format_double(timing.t_s - timing.delta_t) + ", " + format_double(timing.t_e) +
                        "] s, missing [" + format_double(timing.t_s - timing.delta_t) + ", " +
                        format_double(seq.timestamp(0)) + ") s");
    }
    return timing;
}

ExposureSample make_sample(const FrameSequence& seq, const SynthesisRecipe& recipe, double t_s) {
    recipe.validate();
    if (seq.size() < 2) throw DataError("sample synthesis needs at least 2 frames");
    const std::size_t i_s = find_frame(seq, t_s);
    const ExposureTiming timing = derive_timing(seq, recipe, i_s);

    const std::uint64_t seed = derive_seed(recipe.rng_seed, 0x5eed, i_s);
    const DegradationParams params =
        recipe.randomize_degradation ? DegradationParams::sample(derive_seed(recipe.rng_seed, i_s)) : recipe.degradation;
    params.validate();

    ExposureSample s;
    s.timing = timing;
    s.seed = seed;
    s.gt = seq.frame(i_s);
    s.short_exposure = synth_short(*s.gt, params, seed);
    s.long_exposure = synth_long(seq, timing);

    // Events come from the darkened luminance, starting at the last frame at or
    // before the enhancement window so the reference level is settled there.
    const double w0 = timing.t_s - timing.delta_t;
    const auto& ts = seq.timestamps();
    std::size_t i0 = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), w0) - ts.begin());
    i0 = i0 == 0 ? 0 : i0 - 1;
    const std::size_t i_e = i_s + recipe.interval_frames + recipe.blur_count - 1;
    std::vector<Frame> dark;
    dark.reserve(i_e - i0 + 1);
    for (std::size_t i = i0; i <= i_e; ++i) dark.push_back(darken(seq.frame(i), params));
    FrameSequence dark_seq(std::move(dark), std::vector<double>(ts.begin() + i0, ts.begin() + i_e + 1));
    s.events = slice_events(simulate_events(dark_seq, recipe.simulator, seed), w0, timing.t_e);

    s.provenance.set("alpha", params.alpha);
    s.provenance.set("beta", params.beta);
    s.provenance.set("gamma", params.gamma);
    s.provenance.set("sigma_p", params.sigma_p);
    s.provenance.set("sigma_g", params.sigma_g);
    s.provenance.set("threshold_C", recipe.simulator.threshold_C);
    s.provenance.set("cutoff_hz", recipe.simulator.cutoff_hz);
    s.provenance.set("noise_rate_hz", recipe.simulator.noise_rate_hz);
    s.provenance.set("refractory_s", recipe.simulator.refractory_s);
    s.provenance.set("exposure_ratio_R", recipe.exposure_ratio_R);
    s.provenance.set("blur_count", recipe.blur_count);
    s.provenance.set("interval_frames", recipe.interval_frames);
    s.provenance.set("short_exposure", timing.exposure() / recipe.exposure_ratio_R);
    return s;
}

} // namespace edei
