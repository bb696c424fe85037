// SPDX-License-Identifier: Apache-2.0
//
// Python bindings. Tensors cross the boundary as complex128 arrays of shape
// (snapshots, symbols, subcarriers), i.e. the in-memory storage order.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nextsense/channel.hpp"
#include "nextsense/estimation.hpp"
#include "nextsense/runner.hpp"
#include "nextsense/scenario_json.hpp"
#include "nextsense/validation.hpp"
#include "nextsense/waveform.hpp"

namespace py = pybind11;
namespace ns = nextsense;

namespace {

using ComplexArray = py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>;

py::array_t<std::complex<double>> to_numpy(const ns::IQTensor& t)
{
    py::array_t<std::complex<double>> out({t.snapshots(), t.symbols(), t.subcarriers()});
    std::copy(t.data().begin(), t.data().end(), out.mutable_data());
    return out;
}

ns::IQTensor from_numpy(const ComplexArray& a)
{
    if (a.ndim() != 3) {
        throw ns::ValidationError("expected an array of shape (snapshots, symbols, subcarriers)");
    }
    ns::IQTensor t(static_cast<std::size_t>(a.shape(2)), static_cast<std::size_t>(a.shape(1)),
                   static_cast<std::size_t>(a.shape(0)));
    std::copy(a.data(), a.data() + a.size(), t.data().begin());
    return t;
}

py::dict tap_dict(const ns::channel::Tap& t)
{
    py::dict d;
    d["delay_ns"] = t.delay_ns;
    d["power_db"] = t.power_db;
    d["doppler_hz"] = t.doppler_hz;
    return d;
}

std::vector<ns::channel::Tap> taps_from(const std::vector<std::tuple<double, double, double>>& rows)
{
    std::vector<ns::channel::Tap> taps;
    for (const auto& [delay, power, doppler] : rows) {
        taps.push_back({delay, power, doppler, false});
    }
    return taps;
}

py::object json_to_python(const nlohmann::json& j)
{
    return py::module_::import("json").attr("loads")(j.dump());
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "nextsense core: channel emulation, estimation, datasets and ensemble statistics";
    m.attr("__version__") = NEXTSENSE_VERSION;

    py::register_exception<ns::ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ns::IntegrityError>(m, "IntegrityError", PyExc_RuntimeError);
    py::register_exception<ns::IoError>(m, "IoError", PyExc_OSError);

    m.def(
        "generate_reference",
        [](std::uint64_t seed, std::size_t num_subcarriers, std::size_t num_symbols, double scs_khz) {
            ns::GridDims dims{num_subcarriers, num_symbols, 1, scs_khz};
            const auto x = ns::waveform::generate_reference(seed, dims);
            py::array_t<std::complex<double>> out({num_symbols, num_subcarriers});
            std::copy(x.values.begin(), x.values.end(), out.mutable_data());
            return out;
        },
        py::arg("seed"), py::arg("num_subcarriers") = 360, py::arg("num_symbols") = 4,
        py::arg("subcarrier_spacing_khz") = 30.0, "Pilot grid X of shape (symbols, subcarriers).");

    m.def(
        "load_tdl_preset",
        [](const std::string& name, std::optional<double> delay_spread_ns, double doppler_hz) {
            py::list out;
            for (const auto& t : ns::channel::load_tdl_preset(name, delay_spread_ns, doppler_hz)) {
                out.append(tap_dict(t));
            }
            return out;
        },
        py::arg("name"), py::arg("delay_spread_ns") = py::none(), py::arg("doppler_hz") = 0.0);

    m.def(
        "apply_channel",
        [](std::uint64_t pilot_seed, const std::vector<std::tuple<double, double, double>>& taps,
           std::size_t num_snapshots, double snapshot_interval_s, std::size_t num_subcarriers,
           std::size_t num_symbols, double scs_khz, std::optional<double> noise_dbm_hz, std::uint64_t seed) {
            ns::GridDims dims{num_subcarriers, num_symbols, num_snapshots, scs_khz};
            const auto x = ns::waveform::generate_reference(pilot_seed, dims);
            ns::channel::ChannelScenario sc;
            sc.taps = taps_from(taps);
            sc.noise_spectral_density_dbm_hz = noise_dbm_hz.value_or(ns::channel::kNoiseDisabled);
            sc.seed = seed;
            const auto times = ns::channel::uniform_times(num_snapshots, snapshot_interval_s);
            return to_numpy(ns::channel::apply_channel(x, sc, times));
        },
        py::arg("pilot_seed"), py::arg("taps"), py::arg("num_snapshots") = 100, py::arg("snapshot_interval_s") = 0.01,
        py::arg("num_subcarriers") = 360, py::arg("num_symbols") = 4, py::arg("subcarrier_spacing_khz") = 30.0,
        py::arg("noise_dbm_hz") = py::none(), py::arg("seed") = 0,
        "Received tensor for taps given as (delay_ns, power_db, doppler_hz) tuples.");

    m.def(
        "estimate_impulse_response",
        [](const ComplexArray& y, std::uint64_t pilot_seed, double scs_khz) {
            const ns::IQTensor t = from_numpy(y);
            ns::GridDims dims{t.subcarriers(), t.symbols(), t.snapshots(), scs_khz};
            const auto x = ns::waveform::generate_reference(pilot_seed, dims);
            const auto h = ns::estimation::impulse_response(ns::estimation::estimate_freq_channel(t, x));
            py::array_t<std::complex<double>> out({h.num_snapshots, h.num_bins});
            std::copy(h.values.begin(), h.values.end(), out.mutable_data());
            return py::make_tuple(out, h.bin_duration_s);
        },
        py::arg("y"), py::arg("pilot_seed"), py::arg("subcarrier_spacing_khz") = 30.0,
        "Returns (h[snapshot, bin], bin_duration_s).");

    m.def(
        "reconstruct_taps",
        [](const ComplexArray& y, std::uint64_t pilot_seed, double scs_khz, double snapshot_interval_s,
           std::size_t max_taps, double floor_db) {
            const ns::IQTensor t = from_numpy(y);
            ns::GridDims dims{t.subcarriers(), t.symbols(), t.snapshots(), scs_khz};
            const auto x = ns::waveform::generate_reference(pilot_seed, dims);
            ns::estimation::TapSelectionPolicy policy{max_taps, floor_db};
            const auto rec = ns::estimation::reconstruct(t, x, snapshot_interval_s, policy, {});
            py::dict d;
            py::list taps;
            for (const auto& tap : rec.taps) {
                taps.append(tap_dict(tap));
            }
            d["taps"] = taps;
            d["rms_delay_spread_s"] = rec.rms_delay_spread_s;
            d["pdp"] = rec.pdp.power;
            d["bin_duration_s"] = rec.pdp.bin_duration_s;
            return d;
        },
        py::arg("y"), py::arg("pilot_seed"), py::arg("subcarrier_spacing_khz") = 30.0,
        py::arg("snapshot_interval_s") = 0.0, py::arg("max_taps") = 12, py::arg("floor_db") = -25.0);

    m.def(
        "validate_spec",
        [](const std::string& text) {
            py::list out;
            for (const auto& v : ns::scenario::validate_spec(ns::scenario::parse_spec(text))) {
                out.append(py::make_tuple(v.path, v.reason));
            }
            return out;
        },
        py::arg("spec_json"), "List of (path, reason) violations; empty when valid.");

    m.def(
        "default_spec", [] { return ns::scenario::dump_spec(ns::scenario::default_spec()); },
        "Canonical JSON of the default experiment.");

    m.def(
        "run_experiment",
        [](const std::string& text, const std::string& out_dir) {
            const auto spec = ns::scenario::parse_spec(text);
            ns::runner::RunDataset ds;
            {
                py::gil_scoped_release release;
                ds = ns::runner::run_experiment(spec);
            }
            return ns::runner::write_dataset(ds, out_dir);
        },
        py::arg("spec_json"), py::arg("out_dir"), "Runs the experiment, writes the dataset, returns the IQ digest.");

    m.def(
        "read_iq", [](const std::string& dir, std::size_t ue) { return to_numpy(ns::runner::read_ue_iq(dir, ue)); },
        py::arg("dataset_dir"), py::arg("ue") = 0, "Verified IQ tensor of one UE.");

    m.def(
        "verify_dataset", [](const std::string& dir) { ns::runner::verify_dataset(dir); }, py::arg("dataset_dir"));

    m.def(
        "ks_two_sample",
        [](const std::vector<double>& a, const std::vector<double>& b) {
            const auto r = ns::validation::ks_two_sample(a, b);
            return py::make_tuple(r.d, r.p);
        },
        py::arg("a"), py::arg("b"), "Returns (d, p).");

    m.def("wasserstein_1d", [](const std::vector<double>& a, const std::vector<double>& b) {
        return ns::validation::wasserstein_1d(a, b);
    });

    m.def(
        "temporal_autocorrelation",
        [](const ComplexArray& t, std::size_t max_lag) {
            return ns::validation::temporal_autocorrelation(from_numpy(t), max_lag);
        },
        py::arg("tensor"), py::arg("max_lag"));

    m.def(
        "ensemble_report",
        [](const ComplexArray& a, const ComplexArray& b, std::size_t max_lag) {
            return json_to_python(ns::validation::to_json(ns::validation::ensemble_report(from_numpy(a), from_numpy(b), max_lag)));
        },
        py::arg("a"), py::arg("b"), py::arg("max_lag") = ns::validation::kDefaultMaxLag);

    m.def(
        "train_eval_classifier",
        [](const std::vector<ComplexArray>& a, const std::vector<ComplexArray>& b, double train_fraction,
           std::uint64_t seed) {
            std::vector<ns::IQTensor> ta;
            std::vector<ns::IQTensor> tb;
            for (const auto& x : a) {
                ta.push_back(from_numpy(x));
            }
            for (const auto& x : b) {
                tb.push_back(from_numpy(x));
            }
            ns::validation::ClassifierConfig cfg;
            cfg.seed = seed;
            return ns::validation::train_eval_classifier(ta, tb, train_fraction, cfg).accuracy;
        },
        py::arg("class_a"), py::arg("class_b"), py::arg("train_fraction") = 0.8, py::arg("seed") = 1);
}
