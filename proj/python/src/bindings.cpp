#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "edei/dataset_io.hpp"
#include "edei/error.hpp"
#include "edei/metrics.hpp"
#include "edei/representation.hpp"
#include "edei/synthesis.hpp"

namespace py = pybind11;
using namespace edei;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// H x W or H x W x C float64 array <-> Frame.
Frame to_frame(const Array& a) {
    if (a.ndim() != 2 && a.ndim() != 3) throw DataError("expected an H x W or H x W x C array");
    const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
    const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
    return Frame(h, w, c, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Frame& f) {
    std::vector<py::ssize_t> shape = {f.height(), f.width()};
    if (f.channels() != 1) shape.push_back(f.channels());
    Array out(shape);
    std::copy(f.data().begin(), f.data().end(), out.mutable_data());
    return out;
}

FrameSequence to_sequence(const std::vector<Array>& frames, const std::vector<double>& timestamps) {
    std::vector<Frame> fs;
    for (const auto& a : frames) fs.push_back(to_frame(a));
    return FrameSequence(std::move(fs), timestamps);
}

py::dict events_as_columns(const EventStream& s) {
    const auto n = static_cast<py::ssize_t>(s.size());
    py::array_t<double> t(n);
    py::array_t<std::uint16_t> x(n), y(n);
    py::array_t<std::int8_t> p(n);
    for (py::ssize_t i = 0; i < n; ++i) {
        const Event& e = s.events[i];
        t.mutable_at(i) = e.t;
        x.mutable_at(i) = e.x;
        y.mutable_at(i) = e.y;
        p.mutable_at(i) = e.p;
    }
    py::dict d;
    d["t"] = t;
    d["x"] = x;
    d["y"] = y;
    d["p"] = p;
    return d;
}

} // namespace

PYBIND11_MODULE(_edei, m) {
    m.doc() = "Dual-exposure data synthesis, event representation and metrics";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);

    py::class_<DegradationParams>(m, "DegradationParams")
        .def(py::init<>())
        .def_readwrite("alpha", &DegradationParams::alpha)
        .def_readwrite("beta", &DegradationParams::beta)
        .def_readwrite("gamma", &DegradationParams::gamma)
        .def_readwrite("sigma_p", &DegradationParams::sigma_p)
        .def_readwrite("sigma_g", &DegradationParams::sigma_g)
        .def("validate", &DegradationParams::validate)
        .def_static("sample", &DegradationParams::sample, py::arg("seed"));

    py::class_<SimulatorConfig>(m, "SimulatorConfig")
        .def(py::init<>())
        .def_readwrite("threshold_C", &SimulatorConfig::threshold_C)
        .def_readwrite("cutoff_hz", &SimulatorConfig::cutoff_hz)
        .def_readwrite("noise_rate_hz", &SimulatorConfig::noise_rate_hz)
        .def_readwrite("refractory_s", &SimulatorConfig::refractory_s);

    py::class_<SynthesisRecipe>(m, "SynthesisRecipe")
        .def(py::init<>())
        .def_readwrite("fps", &SynthesisRecipe::fps)
        .def_readwrite("interp_factor", &SynthesisRecipe::interp_factor)
        .def_readwrite("blur_count", &SynthesisRecipe::blur_count)
        .def_readwrite("exposure_ratio_R", &SynthesisRecipe::exposure_ratio_R)
        .def_readwrite("interval_frames", &SynthesisRecipe::interval_frames)
        .def_readwrite("delta_t", &SynthesisRecipe::delta_t)
        .def_readwrite("randomize_degradation", &SynthesisRecipe::randomize_degradation)
        .def_readwrite("degradation", &SynthesisRecipe::degradation)
        .def_readwrite("simulator", &SynthesisRecipe::simulator)
        .def_readwrite("rng_seed", &SynthesisRecipe::rng_seed)
        .def("validate", &SynthesisRecipe::validate)
        .def("with_ratio", &SynthesisRecipe::with_ratio, py::arg("ratio"));

    py::class_<ExposureTiming>(m, "ExposureTiming")
        .def(py::init<>())
        .def_readwrite("t_s", &ExposureTiming::t_s)
        .def_readwrite("t_b", &ExposureTiming::t_b)
        .def_readwrite("t_e", &ExposureTiming::t_e)
        .def_readwrite("delta_t", &ExposureTiming::delta_t)
        .def_property_readonly("exposure", &ExposureTiming::exposure)
        .def_property_readonly("interval", &ExposureTiming::interval);

    py::class_<EventStream>(m, "EventStream")
        .def_readonly("height", &EventStream::height)
        .def_readonly("width", &EventStream::width)
        .def_readonly("t_start", &EventStream::t_start)
        .def_readonly("t_end", &EventStream::t_end)
        .def("__len__", &EventStream::size)
        .def("columns", &events_as_columns, "Events as numpy columns t, x, y, p");

    py::class_<ExposureSample>(m, "Sample")
        .def_property_readonly("short_exposure", [](const ExposureSample& s) { return to_array(s.short_exposure); })
        .def_property_readonly("long_exposure", [](const ExposureSample& s) { return to_array(s.long_exposure); })
        .def_property_readonly("gt",
                               [](const ExposureSample& s) -> py::object {
                                   return s.gt ? py::object(to_array(*s.gt)) : py::none();
                               })
        .def_readonly("events", &ExposureSample::events)
        .def_readonly("timing", &ExposureSample::timing)
        .def_readonly("seed", &ExposureSample::seed)
        .def("problems", &validate_sample);

    m.def("darken", [](const Array& gt, const DegradationParams& p) { return to_array(darken(to_frame(gt), p)); });
    m.def(
        "synth_short",
        [](const Array& gt, const DegradationParams& p, std::uint64_t seed) {
            return to_array(synth_short(to_frame(gt), p, seed));
        },
        py::arg("gt"), py::arg("params"), py::arg("seed"));
    m.def(
        "synth_long",
        [](const std::vector<Array>& frames, const std::vector<double>& ts, double t_b, double t_e) {
            ExposureTiming t;
            t.t_s = ts.empty() ? 0.0 : ts.front();
            t.t_b = t_b;
            t.t_e = t_e;
            return to_array(synth_long(to_sequence(frames, ts), t));
        },
        py::arg("frames"), py::arg("timestamps"), py::arg("t_b"), py::arg("t_e"));
    m.def(
        "interpolate",
        [](const std::vector<Array>& frames, const std::vector<double>& ts, int factor) {
            const FrameSequence out = interpolate(to_sequence(frames, ts), factor);
            std::vector<Array> arrays;
            for (const auto& f : out.frames()) arrays.push_back(to_array(f));
            return py::make_tuple(arrays, out.timestamps());
        },
        py::arg("frames"), py::arg("timestamps"), py::arg("factor"));
    m.def(
        "simulate_events",
        [](const std::vector<Array>& frames, const std::vector<double>& ts, const SimulatorConfig& cfg,
           std::uint64_t seed) { return simulate_events(to_sequence(frames, ts), cfg, seed); },
        py::arg("frames"), py::arg("timestamps"), py::arg("config") = SimulatorConfig{}, py::arg("seed") = 0);
    m.def(
        "make_sample",
        [](const std::vector<Array>& frames, const std::vector<double>& ts, const SynthesisRecipe& recipe,
           double t_s) { return make_sample(to_sequence(frames, ts), recipe, t_s); },
        py::arg("frames"), py::arg("timestamps"), py::arg("recipe"), py::arg("t_s"),
        "Sample from an already interpolated clip; t_s must be one of its timestamps");
    m.def(
        "voxelize",
        [](const EventStream& s, double start, double end, int bins) {
            const VoxelGrid g = voxelize(s, {start, end}, bins);
            Array out({g.bins, g.height, g.width});
            std::copy(g.data.begin(), g.data.end(), out.mutable_data());
            return out;
        },
        py::arg("events"), py::arg("start"), py::arg("end"), py::arg("bins") = kDefaultEventBins);

    m.def("psnr", [](const Array& a, const Array& b) { return psnr(to_frame(a), to_frame(b)); });
    m.def("ssim", [](const Array& a, const Array& b) { return ssim(to_frame(a), to_frame(b)); });
    m.def(
        "ratio_fusion_static",
        [](const Array& s, const Array& l, double eps) {
            return to_array(ratio_fusion_static(to_frame(s), to_frame(l), eps));
        },
        py::arg("short_exposure"), py::arg("long_exposure"), py::arg("eps") = 1e-6);
    m.def(
        "dataset_stats",
        [](const std::vector<std::vector<ExposureSample>>& sequences) {
            const StatsReport r = dataset_stats(sequences);
            py::dict d;
            d["motion_mag_px"] = r.motion_available ? py::object(py::float_(r.motion_mag)) : py::none();
            d["illumination"] = r.illumination;
            d["texture"] = r.texture;
            d["event_rate_mevs"] = r.event_rate;
            d["notices"] = r.notices;
            return d;
        },
        py::arg("sequences"));

    m.def("read_sample", &read_sample, py::arg("directory"));
    m.def("write_sample", &write_sample, py::arg("directory"), py::arg("sample"));
}
