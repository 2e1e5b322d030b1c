#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "strokenet/errors.hpp"
#include "strokenet/label_codec.hpp"
#include "strokenet/neural.hpp"
#include "strokenet/postprocess.hpp"
#include "strokenet/signal_core.hpp"
#include "strokenet/softed.hpp"
#include "strokenet/synth.hpp"
#include "strokenet/weights_io.hpp"

namespace py = pybind11;
using namespace strokenet;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using EventTuple = std::tuple<std::size_t, int>;
using DetectionTuple = std::tuple<std::size_t, int, double>;

std::span<const double> view(const Array& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-D array");
  return {a.data(), static_cast<std::size_t>(a.size())};
}

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

EventKind kind_of(int k) {
  if (k == 1) return EventKind::Onset;
  if (k == -1) return EventKind::Ending;
  throw py::value_error("event kind must be +1 or -1");
}

std::vector<EventLabel> events_of(const std::vector<EventTuple>& in) {
  std::vector<EventLabel> out;
  for (const auto& [t, k] : in) out.push_back({t, kind_of(k)});
  return out;
}

std::vector<Detection> detections_of(const std::vector<DetectionTuple>& in) {
  std::vector<Detection> out;
  for (const auto& [t, k, s] : in) out.push_back({t, kind_of(k), s});
  return out;
}

std::vector<DetectionTuple> tuples_of(const std::vector<Detection>& in) {
  std::vector<DetectionTuple> out;
  for (const auto& d : in) out.emplace_back(d.t, static_cast<int>(d.kind), d.score);
  return out;
}

py::object opt(const std::optional<double>& v) {
  return v ? py::object(py::float_(*v)) : py::object(py::none());
}

py::dict confusion_dict(const softed::SoftConfusion& c) {
  py::dict d;
  d["tp"] = c.tp;
  d["fp"] = c.fp;
  d["fn"] = c.fn;
  d["tn"] = c.tn;
  const auto m = softed::soft_metrics(c);
  d["precision"] = opt(m.precision);
  d["recall"] = opt(m.recall);
  d["f1"] = opt(m.f1);
  return d;
}

ExtractorConfig extractor(std::size_t sg_window, int sg_order, double upper, double lower,
                          std::size_t radius) {
  return {sg_window, sg_order, upper, lower, radius};
}

py::dict params_dict(const nn::ModelParams& params) {
  py::dict out;
  for (const auto& a : params.arrays()) {
    std::vector<py::ssize_t> shape(a.dims.begin(), a.dims.end());
    py::array_t<double> arr(shape);
    std::copy(a.data.begin(), a.data.end(), arr.mutable_data());
    out[py::str(a.name)] = arr;
  }
  return out;
}

nn::ModelParams params_from(const nn::ArchitectureSpec& spec, const py::dict& arrays) {
  auto params = nn::ModelParams::zeros(spec, true);
  for (auto& a : params.arrays()) {
    if (!arrays.contains(a.name)) throw DataError("missing parameter array '" + a.name + "'");
    auto src = arrays[py::str(a.name)].cast<Array>();
    if (static_cast<std::size_t>(src.size()) != a.data.size())
      throw DataError("parameter array '" + a.name + "' has the wrong size");
    std::copy(src.data(), src.data() + src.size(), a.data.begin());
  }
  return params;
}

}  // namespace

PYBIND11_MODULE(_strokenet, m) {
  m.doc() = "strokenet core: architectures, event extraction and SoftED scoring";

  auto config_error = py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  (void)config_error;

  m.def("architecture_names", &nn::architecture_names);
  m.def("count_params", [](const std::string& name) {
    return nn::count_params(nn::build_architecture(name));
  });
  m.def("layer_params", [](const std::string& name) {
    const auto spec = nn::build_architecture(name);
    std::vector<std::pair<std::string, std::size_t>> out;
    for (const auto& l : spec.layers) out.emplace_back(l.name, nn::count_params(l, spec.window_length));
    return out;
  }, "Per-layer parameter counts in order.");
  m.def("summary_table", [](const std::string& name) {
    return nn::summary_table(nn::build_architecture(name));
  });

  m.def("minmax_normalize", [](const Array& x) { return to_array(minmax_normalize(view(x))); });
  m.def("encode_ternary", [](const std::vector<EventTuple>& events, std::size_t length) {
    return to_array(encode_ternary(events_of(events), length));
  }, py::arg("events"), py::arg("length") = 1000);
  m.def("gaussian_smooth", [](const Array& labels, std::size_t kernel_window, double sigma) {
    return to_array(gaussian_smooth(view(labels), kernel_window, sigma));
  }, py::arg("labels"), py::arg("kernel_window") = 100, py::arg("sigma") = 10.0);

  m.def("savgol_filter", [](const Array& x, std::size_t window, int order) {
    return to_array(savgol_filter(view(x), window, order));
  }, py::arg("x"), py::arg("window") = 31, py::arg("order") = 2);
  m.def("savgol_coefficients", &savgol_coefficients, py::arg("left"), py::arg("right"),
        py::arg("order") = 2);
  m.def("percentile", [](const Array& x, double p) { return opt(percentile(view(x), p)); });

  m.def("extract_events",
        [](const Array& y, std::size_t sg_window, int sg_order, double upper, double lower,
           std::size_t radius) {
          return tuples_of(extract_events(view(y), extractor(sg_window, sg_order, upper, lower, radius)));
        },
        py::arg("y"), py::arg("sg_window") = 31, py::arg("sg_order") = 2,
        py::arg("upper_pct") = 85.0, py::arg("lower_pct") = 15.0, py::arg("cluster_radius") = 5,
        "Detections as (t, kind, score) tuples; kind is +1 onset, -1 ending.");
  m.def("cluster_detections", [](const std::vector<DetectionTuple>& d, std::size_t radius) {
    return tuples_of(cluster_detections(detections_of(d), radius));
  }, py::arg("detections"), py::arg("radius") = 5);

  m.def("membership", &softed::membership, py::arg("t_event"), py::arg("t_detection"),
        py::arg("k") = 15.0);
  m.def("soft_confusion",
        [](const std::vector<EventTuple>& e, const std::vector<DetectionTuple>& d,
           std::size_t n_time, std::size_t k) {
          return confusion_dict(softed::soft_confusion(events_of(e), detections_of(d), n_time, k));
        },
        py::arg("events"), py::arg("detections"), py::arg("n_time"), py::arg("k") = 15);
  m.def("evaluate_windowed",
        [](const std::vector<std::tuple<std::vector<EventTuple>, std::vector<DetectionTuple>, std::size_t>>&
               windows,
           std::size_t k, std::size_t h) {
          std::vector<softed::WindowInput> in;
          for (const auto& [e, d, n] : windows) in.push_back({events_of(e), detections_of(d), n});
          const auto r = softed::evaluate_windowed(in, {k, h});
          auto out = confusion_dict(r.confusion);
          out["n_windows"] = r.n_windows;
          out["histogram"] = r.histogram.counts;
          return out;
        },
        py::arg("windows"), py::arg("k") = 15, py::arg("h") = 15,
        "windows: list of (events, detections, n_time).");

  m.def("generate_run",
        [](double stroke_rate, double duration, std::uint64_t seed) {
          synth::SynthConfig cfg;
          cfg.run_duration = duration;
          cfg.stroke_rate_min = cfg.stroke_rate_max = stroke_rate;
          Rng style_rng(mix_seed(seed, 1));
          const auto style = synth::draw_style(cfg, "01", style_rng);
          Rng rng(mix_seed(seed, 2));
          const auto run = synth::generate_run(cfg, style, "0001", rng);
          std::vector<EventTuple> events;
          for (const auto& e : run.events) events.emplace_back(e.t, static_cast<int>(e.kind));
          return std::make_pair(to_array(run.run.forces()), events);
        },
        py::arg("stroke_rate") = 60.0, py::arg("duration") = 10.0, py::arg("seed") = 0,
        "Synthetic force signal and its (t, kind) events.");

  m.def("init_params", [](const std::string& name, std::uint64_t seed) {
    return params_dict(nn::init_params(nn::build_architecture(name), seed));
  }, py::arg("arch"), py::arg("seed") = 0);
  m.def("predict", [](const std::string& name, const py::dict& arrays, const Array& x) {
    const auto spec = nn::build_architecture(name);
    const auto params = params_from(spec, arrays);
    return to_array(nn::predict(spec, params, view(x)));
  }, py::arg("arch"), py::arg("params"), py::arg("x"));
  m.def("load_weights", [](const std::filesystem::path& p) { return params_dict(nn::load_weights(p)); });
  m.def("save_weights", [](const std::filesystem::path& p, const std::string& name, const py::dict& arrays) {
    nn::save_weights(p, params_from(nn::build_architecture(name), arrays));
  }, py::arg("path"), py::arg("arch"), py::arg("params"));
}
