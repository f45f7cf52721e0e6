#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

#include "risu/channel_model.hpp"
#include "risu/checkpoint.hpp"
#include "risu/config.hpp"
#include "risu/estimators.hpp"
#include "risu/experiments.hpp"
#include "risu/sounding.hpp"
#include "risu/unfolding_net.hpp"

namespace py = pybind11;
using namespace risu;

namespace {

ExperimentSpec spec_from_json(const std::string& text) {
  return parse_experiment_config(nlohmann::json::parse(text));
}

}  // namespace

PYBIND11_MODULE(_risu, m) {
  m.doc() = "Deep-unfolding cascaded channel estimation for RIS-aided mmWave SIMO links.";

  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);
  py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.attr("NOISELESS_SNR_DB") = kNoiselessSnrDb;

  // Channel model
  py::class_<ChannelConfig>(m, "ChannelConfig")
      .def(py::init<>())
      .def_readwrite("M", &ChannelConfig::M)
      .def_readwrite("N", &ChannelConfig::N)
      .def_readwrite("L1", &ChannelConfig::L1)
      .def_readwrite("L2", &ChannelConfig::L2)
      .def_readwrite("var_los", &ChannelConfig::var_los)
      .def_readwrite("var_nlos", &ChannelConfig::var_nlos)
      .def_property(
          "angle_sine_range",
          [](const ChannelConfig& c) {
            return std::make_pair(c.angle_sine_range.lower, c.angle_sine_range.upper);
          },
          [](ChannelConfig& c, std::pair<double, double> r) {
            c.angle_sine_range = {r.first, r.second};
          })
      .def("validate", &ChannelConfig::validate);

  m.def("steering_vector", &steering_vector, py::arg("sine"), py::arg("n_elems"));
  m.def(
      "draw_cascaded_channel",
      [](const ChannelConfig& cfg, std::uint64_t seed) {
        Rng rng(seed);
        const CascadedChannel c = draw_cascaded_channel(cfg, rng);
        return py::make_tuple(c.matrix, c.vector);
      },
      py::arg("cfg"), py::arg("seed"), "Returns (H_c, vec(H_c)).");
  m.def("draw_channels", &draw_channels, py::arg("cfg"), py::arg("n"), py::arg("seed"),
        "n cascaded channels as the columns of an MN x n matrix.");
  m.def("vectorize", &vectorize);
  m.def("unvectorize", &unvectorize, py::arg("v"), py::arg("rows"), py::arg("cols"));

  // Sounding
  m.def("build_phase_schedule", &build_phase_schedule, py::arg("N"), py::arg("K"));
  m.def("build_combiner", &build_combiner, py::arg("M"), py::arg("N_W"));
  m.def("noise_variance", &noise_variance, py::arg("snr_db"));
  m.def("lift", py::overload_cast<const CMatrix&>(&lift), py::arg("a"));
  m.def("lift_vector", py::overload_cast<const CVector&>(&lift), py::arg("x"));
  m.def("unlift", &unlift, py::arg("x"));

  py::class_<MeasurementModel>(m, "MeasurementModel")
      .def_static(
          "build",
          [](Index M, Index N, Index K, Index N_W) {
            return MeasurementModel::build(M, N, SoundingConfig{K, N_W, 20.0});
          },
          py::arg("M"), py::arg("N"), py::arg("K"), py::arg("N_W"))
      .def_static("from_matrices",
                  py::overload_cast<const CMatrix&, const CMatrix&>(&MeasurementModel::build),
                  py::arg("phase_schedule"), py::arg("combiner"))
      .def_property_readonly("M", &MeasurementModel::M)
      .def_property_readonly("N", &MeasurementModel::N)
      .def_property_readonly("K", &MeasurementModel::K)
      .def_property_readonly("N_W", &MeasurementModel::N_W)
      .def_property_readonly("dim", &MeasurementModel::dim)
      .def_property_readonly("phase_schedule", &MeasurementModel::phase_schedule)
      .def_property_readonly("combiner", &MeasurementModel::combiner)
      .def_property_readonly("psi", &MeasurementModel::psi)
      .def_property_readonly("psi_real", &MeasurementModel::psi_real)
      .def_property_readonly("gram_real", &MeasurementModel::gram_real)
      .def_property_readonly("pinv", &MeasurementModel::pinv)
      .def_property_readonly("spectral_norm_sq", &MeasurementModel::spectral_norm_sq);

  py::class_<Observation>(m, "Observation")
      .def_readonly("y", &Observation::y)
      .def_readonly("y_real", &Observation::y_real)
      .def_readonly("stat_real", &Observation::stat_real)
      .def_readonly("noise_var", &Observation::noise_var);

  m.def(
      "observe",
      [](const MeasurementModel& model, const CVector& h, double snr_db, std::uint64_t seed) {
        Rng rng(seed);
        return observe(model, h, snr_db, rng);
      },
      py::arg("model"), py::arg("h"), py::arg("snr_db"), py::arg("seed"));
  m.def("make_observation", &make_observation, py::arg("model"), py::arg("y"),
        py::arg("noise_var"));

  // Classic estimators
  m.def("ls_estimate", &ls_estimate, py::arg("model"), py::arg("y"));
  m.def("lambda_reference", &lambda_reference, py::arg("noise_var"), py::arg("M"), py::arg("N"),
        py::arg("N_W"), py::arg("K"));
  m.def(
      "reg_gradient_descent",
      [](const MeasurementModel& model, const CVector& y, double lambda,
         std::optional<double> step_size, int max_iters, double tol) {
        GdConfig cfg = GdConfig::defaults_for(model, lambda);
        if (step_size) cfg.step_size = *step_size;
        cfg.max_iters = max_iters;
        cfg.tol = tol;
        return reg_gradient_descent(model, y, cfg);
      },
      py::arg("model"), py::arg("y"), py::arg("lam") = 0.0, py::arg("step_size") = py::none(),
      py::arg("max_iters") = 5000, py::arg("tol") = 1e-8);
  m.def(
      "svt_nuclear_solve",
      [](const MeasurementModel& model, const CVector& y, double lambda,
         std::optional<double> step_size, int max_iters, double tol) {
        SvtConfig cfg = SvtConfig::defaults_for(model, lambda);
        if (step_size) cfg.step_size = *step_size;
        cfg.max_iters = max_iters;
        cfg.tol = tol;
        SvtTrace trace;
        CVector h = svt_nuclear_solve(model, y, cfg, &trace);
        return py::make_tuple(h, trace.objective);
      },
      py::arg("model"), py::arg("y"), py::arg("lam"), py::arg("step_size") = py::none(),
      py::arg("max_iters") = 5000, py::arg("tol") = 1e-8,
      "Returns (estimate, objective after each iteration).");
  m.def("nuclear_objective", &nuclear_objective, py::arg("model"), py::arg("y"), py::arg("h"),
        py::arg("lam"));
  m.def("nmse", &nmse, py::arg("estimate"), py::arg("truth"));

  // Unfolding network
  py::class_<LayerParams>(m, "LayerParams")
      .def(py::init<>())
      .def_readwrite("delta1", &LayerParams::delta1)
      .def_readwrite("delta2", &LayerParams::delta2)
      .def_readwrite("delta3", &LayerParams::delta3)
      .def_readwrite("weight", &LayerParams::weight)
      .def_readwrite("bias", &LayerParams::bias);

  py::class_<UnfoldingParams>(m, "UnfoldingParams")
      .def(py::init<>())
      .def_readwrite("layers", &UnfoldingParams::layers)
      .def_property_readonly("dim", &UnfoldingParams::dim)
      .def_property_readonly("depth", &UnfoldingParams::depth);

  py::class_<EpochRecord>(m, "EpochRecord")
      .def_readonly("epoch", &EpochRecord::epoch)
      .def_readonly("learning_rate", &EpochRecord::learning_rate)
      .def_readonly("train_nmse", &EpochRecord::train_nmse);

  m.def("init_params", &init_params, py::arg("M"), py::arg("N"), py::arg("layers"),
        py::arg("gram_real"));
  m.def(
      "forward",
      [](const UnfoldingParams& p, const RMatrix& gram, const RMatrix& stats, const RMatrix& h0,
         bool hidden_relu) { return forward(p, gram, stats, h0, hidden_relu).output; },
      py::arg("params"), py::arg("gram"), py::arg("stats"), py::arg("h0"),
      py::arg("hidden_relu") = true, "Network output for a D x B batch.");
  m.def(
      "gradients",
      [](const UnfoldingParams& p, const RMatrix& gram, const RMatrix& stats, const RMatrix& h0,
         const RMatrix& truths) {
        return backward(p, forward(p, gram, stats, h0), gram, stats, truths);
      },
      py::arg("params"), py::arg("gram"), py::arg("stats"), py::arg("h0"), py::arg("truths"),
      "Gradients of the mean batch NMSE, laid out like the parameters.");
  m.def("predict", &predict, py::arg("params"), py::arg("gram"), py::arg("stat"));
  m.def("predict_batch", &predict_batch, py::arg("params"), py::arg("gram"), py::arg("stats"),
        py::arg("chunk") = 256);
  m.def("nmse_loss", py::overload_cast<const RMatrix&, const RMatrix&>(&nmse_loss),
        py::arg("estimates"), py::arg("truths"));
  m.def(
      "train",
      [](UnfoldingParams& params, const RMatrix& gram, const RMatrix& stats, const RMatrix& truths,
         int epochs, Index batch_size, double learning_rate, std::uint64_t seed) {
        TrainSchedule s;
        s.epochs = epochs;
        s.batch_size = batch_size;
        s.learning_rate = learning_rate;
        Rng rng(seed);
        py::gil_scoped_release release;
        return train(params, TrainingSet{gram, stats, truths}, s, rng);
      },
      py::arg("params"), py::arg("gram"), py::arg("stats"), py::arg("truths"),
      py::arg("epochs") = 40, py::arg("batch_size") = 64, py::arg("learning_rate") = 1e-3,
      py::arg("seed") = 1, "Trains `params` in place and returns the per-epoch history.");

  m.def("save_checkpoint", &save_checkpoint, py::arg("params"), py::arg("path"));
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

  // Experiments
  m.def(
      "resolve_config",
      [](const std::string& config_json) { return to_json(spec_from_json(config_json)).dump(); },
      py::arg("config_json"), "Fills every unset field of a JSON config from its profile.");
  m.def(
      "run_study",
      [](const std::string& name, const std::string& config_json) {
        const ExperimentSpec spec = spec_from_json(config_json);
        const StudyName study = parse_study_name(name);
        std::vector<ResultRow> rows;
        {
          py::gil_scoped_release release;
          rows = run_study(study, spec);
        }
        py::list out;
        for (const auto& r : rows) out.append(py::make_tuple(r.curve, r.test_snr_db, r.nmse, r.n_samples));
        return out;
      },
      py::arg("name"), py::arg("config_json"),
      "Rows of (curve, test_snr_db, nmse, n_samples).");
}
