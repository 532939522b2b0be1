// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "mimo_doa/array_model.hpp"
#include "mimo_doa/error.hpp"
#include "mimo_doa/experiment.hpp"
#include "mimo_doa/metrics.hpp"
#include "mimo_doa/neural_emulator.hpp"
#include "mimo_doa/subspace_doa.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace mimo_doa;

namespace {

CovarianceEstimate covariance_of(const Eigen::MatrixXcd &data) {
    return sample_covariance(data, {0, data.cols()});
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "MIMO radar DOA estimation with a neural large-array emulator";

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    py::class_<ArrayConfig>(m, "ArrayConfig")
        .def(py::init([](int tx, int rx, double spacing) {
                 ArrayConfig c{tx, rx, spacing};
                 c.validate();
                 return c;
             }),
             py::arg("tx"), py::arg("rx"), py::arg("spacing") = 0.5)
        .def_readwrite("tx_count", &ArrayConfig::tx_count)
        .def_readwrite("rx_count", &ArrayConfig::rx_count)
        .def_readwrite("spacing_wavelengths", &ArrayConfig::spacing_wavelengths)
        .def_property_readonly("virtual_size", &ArrayConfig::virtual_size)
        .def("max_identifiable_targets", &ArrayConfig::max_identifiable_targets)
        .def("__repr__", [](const ArrayConfig &c) {
            return "ArrayConfig(" + std::to_string(c.tx_count) + ", " + std::to_string(c.rx_count) + ")";
        });

    py::class_<AngleRange>(m, "AngleRange")
        .def(py::init<double, double>(), py::arg("lo_deg"), py::arg("hi_deg"))
        .def_readwrite("lo_deg", &AngleRange::lo_deg)
        .def_readwrite("hi_deg", &AngleRange::hi_deg);

    py::class_<TargetScene>(m, "TargetScene")
        .def(py::init<>())
        .def(py::init([](std::vector<double> angles, Eigen::MatrixXcd rcs) { return TargetScene{angles, rcs}; }),
             py::arg("angles_rad"), py::arg("rcs"))
        .def_readwrite("angles_rad", &TargetScene::angles_rad)
        .def_readwrite("rcs", &TargetScene::rcs);

    py::class_<SnapshotBlock>(m, "SnapshotBlock")
        .def_readonly("data", &SnapshotBlock::data)
        .def_readonly("snr_db", &SnapshotBlock::snr_db)
        .def_readonly("array", &SnapshotBlock::array);

    m.def("virtual_steering", &virtual_steering, py::arg("theta_rad"), py::arg("array"));
    m.def(
        "steering_matrix",
        [](const std::vector<double> &angles, const ArrayConfig &cfg) { return steering_matrix(angles, cfg); },
        py::arg("angles_rad"), py::arg("array"));
    m.def("draw_scene", &draw_scene, py::arg("range_deg"), py::arg("k"), py::arg("min_sep_deg"), py::arg("pulses"),
          py::arg("seed"), py::arg("rejection_cap") = kDefaultRejectionCap);
    m.def("synthesize", &synthesize, py::arg("scene"), py::arg("array"), py::arg("snr_db"), py::arg("seed"));
    m.def("synthesize_pair", &synthesize_pair, py::arg("scene"), py::arg("low"), py::arg("high"), py::arg("snr_db"),
          py::arg("seed"));
    m.def("snr_to_noise_var", &snr_to_noise_var, py::arg("snr_db"));

    m.def(
        "sample_covariance", [](const Eigen::MatrixXcd &data) { return covariance_of(data).matrix; },
        py::arg("data"));
    m.def(
        "music_spectrum",
        [](const Eigen::MatrixXcd &data, const ArrayConfig &cfg, int k, double lo, double hi, double step) {
            const auto un = noise_subspace(hermitian_eig(covariance_of(data)), k);
            const SpectrumResult s = music_spectrum(un, cfg, {lo, hi, step});
            return py::make_tuple(s.grid_deg, s.values);
        },
        py::arg("data"), py::arg("array"), py::arg("k"), py::arg("lo_deg"), py::arg("hi_deg"), py::arg("step_deg") = 0.1);
    m.def(
        "music_estimate",
        [](const Eigen::MatrixXcd &data, const ArrayConfig &cfg, int k, double lo, double hi, double step) {
            return music_estimate(covariance_of(data), cfg, k, {lo, hi, step}).angles_deg;
        },
        py::arg("data"), py::arg("array"), py::arg("k"), py::arg("lo_deg"), py::arg("hi_deg"), py::arg("step_deg") = 0.1,
        "MUSIC DOA estimates in degrees, ascending");
    m.def("doa_mse", &doa_mse, py::arg("estimates_deg"), py::arg("truths_deg"));

    m.def(
        "cov_error",
        [](const Eigen::MatrixXcd &ref, const Eigen::MatrixXcd &pre) { return cov_error({ref, 1}, {pre, 1}); },
        py::arg("reference"), py::arg("predicted"));
    m.def("steering_derivative", &steering_derivative, py::arg("theta_rad"), py::arg("array"));
    m.def(
        "crb",
        [](const std::vector<double> &angles, const Eigen::MatrixXcd &x, double sigma2, const ArrayConfig &cfg) {
            return crb(angles, x, sigma2, cfg).matrix;
        },
        py::arg("angles_rad"), py::arg("x"), py::arg("sigma2"), py::arg("array"));

    py::class_<MlpModel>(m, "MlpModel")
        .def_readonly("layer_dims", &MlpModel::layer_dims)
        .def_property_readonly("output_activation",
                               [](const MlpModel &mm) { return std::string(to_string(mm.output_activation)); })
        .def("parameter_count", &MlpModel::parameter_count)
        .def(
            "forward",
            [](const MlpModel &mm, const Eigen::MatrixXd &x) { return mlp_forward_batch(mm, x); },
            py::arg("inputs"), "raw network output on normalized inputs, one column per sample")
        .def(
            "predict",
            [](const MlpModel &mm, const Eigen::MatrixXcd &low, const ArrayConfig &high) {
                const int l = static_cast<int>(low.rows());
                return predict(mm, {low, 0.0, {1, l, 0.5}}, high).data;
            },
            py::arg("low"), py::arg("high"))
        .def("save", [](const MlpModel &mm, const std::filesystem::path &p) { save_model(mm, p); }, py::arg("path"));
    m.def("load_model", &load_model, py::arg("path"));

    py::class_<LossHistory>(m, "LossHistory")
        .def_readonly("initial_train", &LossHistory::initial_train)
        .def_readonly("initial_val", &LossHistory::initial_val)
        .def_readonly("train", &LossHistory::train)
        .def_readonly("val", &LossHistory::val)
        .def_readonly("best_epoch", &LossHistory::best_epoch);

    m.def(
        "train",
        [](const Eigen::MatrixXd &inputs, const Eigen::MatrixXd &targets, int epochs, int batch_size, double lr,
           const std::string &activation, std::uint64_t seed, double val_fraction) {
            Dataset d{inputs, targets, std::vector<float>(static_cast<std::size_t>(inputs.cols()), 0.0f)};
            TrainConfig c;
            c.epochs = epochs;
            c.batch_size = batch_size;
            c.adam.lr = lr;
            c.output_activation = parse_output_activation(activation);
            c.seed = seed;
            c.train_fraction = 1.0 - val_fraction;
            c.val_fraction = val_fraction;
            c.test_fraction = 0.0;
            TrainResult r;
            {
                py::gil_scoped_release release;
                r = train(d, c);
            }
            return py::make_tuple(std::move(r.model), std::move(r.history));
        },
        py::arg("inputs"), py::arg("targets"), py::arg("epochs") = 150, py::arg("batch_size") = 120,
        py::arg("lr") = 1e-3, py::arg("output_activation") = "linear", py::arg("seed") = 1,
        py::arg("val_fraction") = 0.25, "train an emulator on stacked real/imag columns; returns (model, history)");
    m.def("stack_real_imag", py::overload_cast<const Eigen::MatrixXcd &>(&stack_real_imag), py::arg("data"));
    m.def("unstack_real_imag", &unstack_real_imag, py::arg("stacked"));

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def_static("full_scale", &ExperimentConfig::full_scale)
        .def_static("from_text", &ExperimentConfig::from_text, py::arg("text"))
        .def_static("load", &ExperimentConfig::load, py::arg("path"))
        .def("set", &ExperimentConfig::set, py::arg("key"), py::arg("value"))
        .def("to_text", &ExperimentConfig::to_text)
        .def("validate", &ExperimentConfig::validate)
        .def("trials", &ExperimentConfig::trials)
        .def_static("keys", [] {
            std::vector<std::string> k;
            for (const auto &kv : ExperimentConfig::key_help()) {
                k.push_back(kv.first);
            }
            return k;
        });

    py::class_<SweepRow>(m, "SweepRow")
        .def_readonly("angle_range", &SweepRow::angle_range)
        .def_readonly("train_set_id", &SweepRow::train_set_id)
        .def_readonly("test_snr_db", &SweepRow::test_snr_db)
        .def_readonly("doa_mse_rad2", &SweepRow::doa_mse_rad2)
        .def_readonly("crb_low", &SweepRow::crb_low)
        .def_readonly("crb_high", &SweepRow::crb_high)
        .def_readonly("mse_low_array", &SweepRow::mse_low_array)
        .def_readonly("mse_high_array", &SweepRow::mse_high_array)
        .def_readonly("r_e", &SweepRow::r_e)
        .def_readonly("r_offset", &SweepRow::r_offset);

    py::class_<Experiment>(m, "Experiment")
        .def(py::init<ExperimentConfig>(), py::arg("config"))
        .def("build_datasets", &Experiment::build_datasets, py::call_guard<py::gil_scoped_release>())
        .def("train_models", &Experiment::train_models, py::call_guard<py::gil_scoped_release>())
        .def(
            "evaluate", [](const Experiment &e) { return e.evaluate().rows; },
            py::call_guard<py::gil_scoped_release>())
        .def(
            "run_case_sweep",
            [](Experiment &e, const std::string &which) { return e.run_case_sweep(parse_sweep_case(which)).rows; },
            py::arg("case"));
}
