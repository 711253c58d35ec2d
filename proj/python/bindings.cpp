#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "gsformer/analysis.hpp"
#include "gsformer/cli.hpp"
#include "gsformer/config.hpp"
#include "gsformer/data.hpp"
#include "gsformer/errors.hpp"
#include "gsformer/metrics.hpp"
#include "gsformer/model.hpp"

namespace py = pybind11;
using namespace gsf;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::pair<std::uint64_t, std::uint64_t> frac(const Rational& r) { return {r.num, r.den}; }

ModelConfig config_from(const std::string& text) {
    if (text.empty()) return ModelConfig{};
    const auto j = nlohmann::json::parse(text);
    // Accept a full run configuration as well as a bare model section.
    return j.contains("model") ? run_config_from_json(j).model : model_config_from_json(j);
}

Array to_array(std::span<const double> values, std::vector<py::ssize_t> shape) {
    Array out(shape);
    std::copy(values.begin(), values.end(), out.mutable_data());
    return out;
}

std::span<const double> pose_span(const Array& a, std::size_t* joints) {
    if (a.ndim() < 2 || a.shape(a.ndim() - 1) != 3) throw dimension_error("expected an array of shape (..., J, 3)");
    *joints = static_cast<std::size_t>(a.shape(a.ndim() - 2));
    return {a.data(), static_cast<std::size_t>(a.size())};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Skipped-attention pose lifting core";

    py::register_exception<Error>(m, "GsfError");

    m.def("analytic_ssa", [](std::uint64_t t, std::uint64_t d, std::uint64_t i) { return frac(analytic_ssa(t, d, i)); });
    m.def("analytic_skt", [](std::uint64_t t, std::uint64_t d, std::uint64_t i) { return frac(analytic_skt(t, d, i)); });
    m.def("analytic_stt", [](std::uint64_t t, std::uint64_t d, std::uint64_t k, std::uint64_t s) {
        return frac(analytic_stt(t, d, k, s));
    });
    m.def("analytic_vanilla", [](std::uint64_t t, std::uint64_t d) { return frac(analytic_vanilla(t, d)); });
    m.def("cost_report_json", [](const std::string& config, std::uint64_t k, std::uint64_t s) {
        return to_json(cost_report(config_from(config), k, s)).dump();
    });
    m.def("default_config_json", [] { return to_json(RunConfig{}).dump(); });
    m.def("param_count", [](const std::string& config) { return param_count(config_from(config)); });

    m.def("skip_partition", [](std::size_t t, std::size_t i) { return skip_partition(t, i).sets; });

    m.def("mpjpe", [](const Array& pred, const Array& gt) {
        std::size_t joints = 0;
        const auto p = pose_span(pred, &joints);
        return mpjpe(p, pose_span(gt, &joints), joints);
    });
    m.def("p_mpjpe", [](const Array& pred, const Array& gt) {
        std::size_t joints = 0;
        const auto p = pose_span(pred, &joints);
        const auto r = p_mpjpe(p, pose_span(gt, &joints), joints);
        return py::make_tuple(r.value, r.degenerate);
    });

    m.def(
        "synth_generate",
        [](std::uint64_t seed, std::size_t count, std::size_t frames, double noise) {
            SynthOptions o;
            o.seed = seed;
            o.count = count;
            o.frames = frames;
            o.noise = noise;
            const auto d = synth_generate(o);
            py::list out;
            for (std::size_t s = 0; s < d.size(); ++s) {
                const auto v = static_cast<py::ssize_t>(d.inputs[s].frames);
                const auto j = static_cast<py::ssize_t>(d.inputs[s].joints);
                out.append(py::make_tuple(to_array(d.inputs[s].coords, {v, j, 2}),
                                          to_array(d.targets[s].coords, {v, j, 3})));
            }
            return out;
        },
        py::arg("seed") = 0, py::arg("count") = 10, py::arg("frames") = 100, py::arg("noise") = 2.0);

    py::class_<GSFormer>(m, "Model")
        .def(py::init([](const std::string& config, std::uint64_t seed) { return GSFormer(config_from(config), seed); }),
             py::arg("config") = "", py::arg("seed") = 0)
        .def_static("load", &load_checkpoint)
        .def("save", [](const GSFormer& self, const std::string& path) { save_checkpoint(self, path); })
        .def("config_json", [](const GSFormer& self) { return to_json(self.config()).dump(); })
        .def("param_count", [](const GSFormer& self) { return self.params().count(); })
        .def("forward", [](const GSFormer& self, const Array& frames) {
            const auto& c = self.config();
            if (frames.ndim() != 3 || static_cast<std::size_t>(frames.shape(1)) != c.joints || frames.shape(2) != 2) {
                throw dimension_error("forward expects an array of shape (T, J, 2)");
            }
            const auto t = static_cast<std::size_t>(frames.shape(0));
            Tensor input({t, 2 * c.joints}, std::vector<double>(frames.data(), frames.data() + frames.size()));
            GSFormer::Output out;
            {
                py::gil_scoped_release release;
                out = self.forward(input);
            }
            const auto j = static_cast<py::ssize_t>(c.joints);
            return py::make_tuple(to_array(out.sequence.values(), {static_cast<py::ssize_t>(t), j, 3}),
                                  to_array(out.target.values(), {j, 3}));
        });

    m.def("run_cli", [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
    });
}
