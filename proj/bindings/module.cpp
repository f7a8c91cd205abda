// Python face of the library: datasets, training, weight-noise
// ensembles, calibration metrics, curvature probes, and the JSON report
// builders the CLI ships.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <vector>

#include "pepkit/baselines.hpp"
#include "pepkit/checkpoint.hpp"
#include "pepkit/curvature.hpp"
#include "pepkit/data.hpp"
#include "pepkit/errors.hpp"
#include "pepkit/metrics.hpp"
#include "pepkit/nn.hpp"
#include "pepkit/pep.hpp"
#include "pepkit/report.hpp"
#include "pepkit/rng.hpp"
#include "pepkit/trainer.hpp"

namespace py = pybind11;
using namespace pepkit;

namespace {

Optimizer parse_optimizer(const std::string& name) {
  if (name == "sgd") return Optimizer::sgd;
  if (name == "adam") return Optimizer::adam;
  throw config_error("optimizer must be sgd or adam, got '" + name + "'");
}

PerturbDistribution parse_distribution(const std::string& name) {
  if (name == "gaussian") return PerturbDistribution::gaussian;
  if (name == "uniform") return PerturbDistribution::uniform;
  throw config_error("distribution must be gaussian or uniform, got '" + name + "'");
}

std::vector<SegmentRef> parse_mask(const NetworkSpec& spec, const std::string& name) {
  if (name == "weights") return weight_mask(spec);
  if (name == "all") return full_mask(spec);
  throw config_error("mask must be weights or all, got '" + name + "'");
}

PerturbConfig make_perturb(const NetworkSpec& spec, double sigma, int members,
                           const std::string& distribution, const std::string& mask,
                           std::uint64_t seed) {
  PerturbConfig config;
  config.sigma = sigma;
  config.member_count = members;
  config.distribution = parse_distribution(distribution);
  config.mask = parse_mask(spec, mask);
  config.seed = seed;
  return config;
}

MethodProvenance make_provenance(const std::string& name, std::optional<double> sigma,
                                 std::optional<int> members, std::optional<std::uint64_t> seed,
                                 std::optional<double> temperature,
                                 std::optional<bool> temperature_fitted) {
  MethodProvenance method;
  method.name = name;
  method.sigma = sigma;
  method.member_count = members;
  method.seed = seed;
  method.temperature = temperature;
  method.temperature_fitted = temperature_fitted;
  return method;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Weight-noise ensembling and curvature probes for small softmax classifiers";

  py::register_exception<config_error>(m, "ConfigError");
  py::register_exception<data_error>(m, "DataError");
  py::register_exception<numeric_error>(m, "NumericError");

  py::class_<NetworkSpec>(m, "NetworkSpec")
      .def_static("mlp", &NetworkSpec::mlp, py::arg("input_width"), py::arg("hidden"),
                  py::arg("class_count"), "Fully connected tanh net ending in logits.")
      .def_property_readonly("input_width", &NetworkSpec::input_width)
      .def_property_readonly("class_count", &NetworkSpec::class_count)
      .def("__repr__", [](const NetworkSpec& spec) {
        std::string out = "NetworkSpec(" + std::to_string(spec.input_width());
        for (const auto& layer : spec.layers) out += " -> " + std::to_string(layer.output_width);
        return out + ")";
      });

  py::class_<ParamVector>(m, "ParamVector")
      .def_property(
          "values", [](const ParamVector& params) { return params.values; },
          [](ParamVector& params, const Eigen::VectorXd& values) {
            if (values.size() != params.size()) {
              throw shape_error("expected " + std::to_string(params.size()) +
                                " parameters, got " + std::to_string(values.size()));
            }
            params.values = values;
          })
      .def("__len__", [](const ParamVector& params) { return params.size(); });

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<>())
      .def(py::init([](const FeatureMatrix& features, const std::vector<int>& labels,
                       int class_count) {
             Dataset ds;
             ds.features = features;
             ds.labels = labels;
             ds.class_count = class_count;
             ds.splits.assign(labels.size(), Split::none);
             ds.validate();
             return ds;
           }),
           py::arg("features"), py::arg("labels"), py::arg("class_count"))
      .def_readwrite("features", &Dataset::features)
      .def_readwrite("labels", &Dataset::labels)
      .def_readwrite("class_count", &Dataset::class_count)
      .def_property_readonly("splits",
                             [](const Dataset& ds) {
                               std::vector<std::string> names;
                               names.reserve(ds.splits.size());
                               for (const Split split : ds.splits)
                                 names.emplace_back(split_name(split));
                               return names;
                             })
      .def("n", &Dataset::n)
      .def("dim", &Dataset::dim)
      .def(
          "subset",
          [](const Dataset& ds, const std::string& split) {
            return ds.subset(split_from_name(split));
          },
          py::arg("split"))
      .def("filter_classes", &Dataset::filter_classes, py::arg("keep"));

  m.def("synth_blobs", &synth_blobs, py::arg("class_count"), py::arg("per_class"), py::arg("dim"),
        py::arg("spread"), py::arg("seed"),
        "Gaussian class blobs with means on a sphere of radius 3*spread.");
  m.def("load_idx", &load_idx, py::arg("images"), py::arg("labels"));
  m.def("save_idx", &save_idx, py::arg("dataset"), py::arg("images"), py::arg("labels"));
  m.def(
      "assign_splits",
      [](Dataset& ds, double train_fraction, double validation_fraction, double test_fraction,
         std::uint64_t seed) {
        SplitSpec spec;
        spec.train_fraction = train_fraction;
        spec.validation_fraction = validation_fraction;
        spec.test_fraction = test_fraction;
        spec.seed = seed;
        assign_splits(ds, spec);
      },
      py::arg("dataset"), py::kw_only(), py::arg("train_fraction") = 0.8,
      py::arg("validation_fraction") = 0.1, py::arg("test_fraction") = 0.1, py::arg("seed") = 0,
      "Shuffle rows deterministically and tag train/validation/test in place.");

  py::class_<EpochCheckpoint>(m, "EpochCheckpoint")
      .def_readonly("epoch", &EpochCheckpoint::epoch)
      .def_readonly("params", &EpochCheckpoint::params)
      .def_readonly("train_nll", &EpochCheckpoint::train_nll)
      .def_readonly("val_nll", &EpochCheckpoint::val_nll);

  py::class_<CheckpointSeries>(m, "CheckpointSeries")
      .def_readonly("epochs", &CheckpointSeries::epochs)
      .def_readonly("diverged_epoch", &CheckpointSeries::diverged_epoch);

  m.def(
      "train",
      [](const NetworkSpec& spec, const Dataset& ds, const std::string& optimizer,
         double learning_rate, double beta1, double beta2, double epsilon, Index batch_size,
         int epochs, std::uint64_t seed) {
        TrainConfig config;
        config.optimizer = parse_optimizer(optimizer);
        config.learning_rate = learning_rate;
        config.beta1 = beta1;
        config.beta2 = beta2;
        config.epsilon = epsilon;
        config.batch_size = batch_size;
        config.epochs = epochs;
        config.seed = seed;
        return train(spec, ds, config);
      },
      py::arg("spec"), py::arg("dataset"), py::kw_only(), py::arg("optimizer") = "adam",
      py::arg("learning_rate") = 1e-3, py::arg("beta1") = 0.9, py::arg("beta2") = 0.999,
      py::arg("epsilon") = 1e-8, py::arg("batch_size") = 128, py::arg("epochs") = 15,
      py::arg("seed") = 0, "Mini-batch training over the train split; returns every epoch.");
  m.def("overfit_gap", &overfit_gap, py::arg("spec"), py::arg("params"), py::arg("train"),
        py::arg("test"), "Mean test log-likelihood shortfall against the train split.");

  m.def(
      "logits",
      [](const NetworkSpec& spec, const ParamVector& params, const FeatureMatrix& features) {
        return forward(spec, params, features);
      },
      py::arg("spec"), py::arg("params"), py::arg("features"));
  m.def(
      "predict_probs",
      [](const NetworkSpec& spec, const ParamVector& params, const FeatureMatrix& features) {
        return softmax(forward(spec, params, features));
      },
      py::arg("spec"), py::arg("params"), py::arg("features"));
  m.def(
      "mean_log_likelihood",
      [](const NetworkSpec& spec, const ParamVector& params, const FeatureMatrix& features,
         const std::vector<int>& labels) {
        return mean_log_likelihood(spec, params, features, labels);
      },
      py::arg("spec"), py::arg("params"), py::arg("features"), py::arg("labels"));

  py::class_<EnsembleLogLik>(m, "EnsembleLogLik")
      .def_readonly("ensemble", &EnsembleLogLik::ensemble)
      .def_readonly("members", &EnsembleLogLik::members)
      .def_readonly("floored", &EnsembleLogLik::floored);

  m.def(
      "ensemble_predict",
      [](const NetworkSpec& spec, const ParamVector& params, const FeatureMatrix& features,
         double sigma, int members, const std::string& distribution, const std::string& mask,
         std::uint64_t seed) {
        return ensemble_predict(spec, params,
                                make_perturb(spec, sigma, members, distribution, mask, seed),
                                features);
      },
      py::arg("spec"), py::arg("params"), py::arg("features"), py::kw_only(), py::arg("sigma"),
      py::arg("members") = 5, py::arg("distribution") = "gaussian", py::arg("mask") = "weights",
      py::arg("seed") = 0, "Average softmax outputs over noise-perturbed parameter copies.");
  m.def(
      "ensemble_log_likelihood",
      [](const NetworkSpec& spec, const ParamVector& params, const FeatureMatrix& features,
         const std::vector<int>& labels, double sigma, int members,
         const std::string& distribution, const std::string& mask, std::uint64_t seed) {
        return ensemble_log_likelihood(spec, params,
                                       make_perturb(spec, sigma, members, distribution, mask, seed),
                                       features, labels);
      },
      py::arg("spec"), py::arg("params"), py::arg("features"), py::arg("labels"), py::kw_only(),
      py::arg("sigma"), py::arg("members") = 5, py::arg("distribution") = "gaussian",
      py::arg("mask") = "weights", py::arg("seed") = 0);

  py::class_<SigmaCurvePoint>(m, "SigmaCurvePoint")
      .def_readonly("sigma", &SigmaCurvePoint::sigma)
      .def_readonly("ensemble_ll", &SigmaCurvePoint::ensemble_ll)
      .def_readonly("member_ll", &SigmaCurvePoint::member_ll);

  py::class_<SigmaSearchResult>(m, "SigmaSearchResult")
      .def_readonly("sigma_star", &SigmaSearchResult::sigma_star)
      .def_readonly("ll_at_sigma_star", &SigmaSearchResult::ll_at_sigma_star)
      .def_readonly("ll_baseline", &SigmaSearchResult::ll_baseline)
      .def_readonly("no_pep_benefit", &SigmaSearchResult::no_pep_benefit)
      .def_property_readonly(
          "curve", [](const SigmaSearchResult& result) { return result.curve.points; });

  m.def(
      "golden_section_sigma",
      [](const NetworkSpec& spec, const ParamVector& params, const FeatureMatrix& features,
         const std::vector<int>& labels, double sigma_low, double sigma_high, int iterations,
         int members, std::uint64_t seed, const std::string& distribution,
         const std::string& mask) {
        SigmaSearchConfig config;
        config.sigma_low = sigma_low;
        config.sigma_high = sigma_high;
        config.iterations = iterations;
        config.member_count = members;
        config.seed = seed;
        return golden_section_sigma(spec, params, config, features, labels,
                                    parse_distribution(distribution), parse_mask(spec, mask));
      },
      py::arg("spec"), py::arg("params"), py::arg("features"), py::arg("labels"), py::kw_only(),
      py::arg("sigma_low") = 5e-5, py::arg("sigma_high") = 5e-3, py::arg("iterations") = 7,
      py::arg("members") = 5, py::arg("seed") = 0, py::arg("distribution") = "gaussian",
      py::arg("mask") = "weights",
      "Bracket search for the noise scale maximizing the ensemble log-likelihood; "
      "all evaluations share one noise stream.");

  py::class_<TemperatureFit>(m, "TemperatureFit")
      .def_readonly("t_star", &TemperatureFit::t_star)
      .def_readonly("val_nll_before", &TemperatureFit::val_nll_before)
      .def_readonly("val_nll_after", &TemperatureFit::val_nll_after)
      .def_readonly("at_bracket_edge", &TemperatureFit::at_bracket_edge);

  m.def(
      "fit_temperature",
      [](const LogitMatrix& logits, const std::vector<int>& labels) {
        return fit_temperature(logits, labels);
      },
      py::arg("logits"), py::arg("labels"),
      "Grid-refined single temperature minimizing NLL; never worse than T=1.");
  m.def("scale_logits", &scale_logits, py::arg("logits"), py::arg("temperature"));

  m.def(
      "nll", [](const ProbMatrix& probs, const std::vector<int>& labels) {
        return nll(probs, labels);
      },
      py::arg("probs"), py::arg("labels"));
  m.def("brier", &brier, py::arg("probs"), py::arg("labels"));
  m.def("accuracy", &accuracy, py::arg("probs"), py::arg("labels"));
  m.def("confidences", &confidences, py::arg("probs"));
  m.def(
      "ece_percent",
      [](const ProbMatrix& probs, const std::vector<int>& labels, int bins) {
        return ece_percent(reliability(probs, labels, bins));
      },
      py::arg("probs"), py::arg("labels"), py::arg("bins") = kDefaultEceBins);
  m.def("symmetrized_kld", &symmetrized_kld, py::arg("in_confidences"), py::arg("out_confidences"),
        py::arg("bins"), "Histogram KLD between confidence samples, symmetrized.");

  py::class_<CurvatureEstimate>(m, "CurvatureEstimate")
      .def_readonly("value", &CurvatureEstimate::value)
      .def_readonly("standard_error", &CurvatureEstimate::standard_error)
      .def_readonly("method", &CurvatureEstimate::method)
      .def_readonly("probe_count", &CurvatureEstimate::probe_count)
      .def_readonly("h", &CurvatureEstimate::h)
      .def_readonly("conditioning_warning", &CurvatureEstimate::conditioning_warning);

  py::class_<McEstimate>(m, "McEstimate")
      .def_readonly("mean", &McEstimate::mean)
      .def_readonly("standard_error", &McEstimate::standard_error);

  m.def(
      "laplacian_loglik",
      [](const NetworkSpec& spec, const ParamVector& params, const Dataset& data, double h,
         int hutchinson_probes, std::uint64_t seed, Index exact_threshold) {
        CurvatureOptions options;
        options.h = h;
        options.hutchinson_probes = hutchinson_probes;
        options.seed = seed;
        options.exact_threshold = exact_threshold;
        return laplacian_loglik(spec, params, data, options);
      },
      py::arg("spec"), py::arg("params"), py::arg("data"), py::kw_only(), py::arg("h") = 0.0,
      py::arg("hutchinson_probes") = 1000, py::arg("seed") = 0, py::arg("exact_threshold") = 300,
      "Sum of second derivatives of the summed log-likelihood.");
  m.def("fisher_trace", &fisher_trace, py::arg("spec"), py::arg("params"), py::arg("data"),
        "Summed squared gradient norms of per-example log-likelihoods.");
  m.def("pep_effect_predicted", &pep_effect_predicted, py::arg("laplacian"),
        py::arg("fisher_trace"), py::arg("sigma"));
  m.def(
      "pep_effect_direct",
      [](const NetworkSpec& spec, const ParamVector& params, const Dataset& data, double sigma,
         double h) {
        CurvatureOptions options;
        options.h = h;
        return pep_effect_direct(spec, params, data, sigma, options);
      },
      py::arg("spec"), py::arg("params"), py::arg("data"), py::arg("sigma"), py::kw_only(),
      py::arg("h") = 0.0);
  m.def("observed_pep_effect", &observed_pep_effect, py::arg("spec"), py::arg("params"),
        py::arg("data"), py::arg("sigma"), py::arg("members"), py::arg("groups"), py::arg("seed"),
        "Monte-Carlo ensemble gain, grouped for a standard error.");

  m.def(
      "save_checkpoint",
      [](const NetworkSpec& spec, const ParamVector& params, const std::filesystem::path& path) {
        save_checkpoint(Checkpoint{spec, params}, path);
      },
      py::arg("spec"), py::arg("params"), py::arg("path"));
  m.def(
      "load_checkpoint",
      [](const std::filesystem::path& path) {
        Checkpoint ckpt = load_checkpoint(path);
        return py::make_tuple(ckpt.spec, ckpt.params);
      },
      py::arg("path"), "Returns (spec, params).");

  m.def(
      "derive_seed",
      [](std::uint64_t master, const std::string& purpose) {
        return rng::derive_seed(master, purpose);
      },
      py::arg("master"), py::arg("purpose"),
      "Stream seed for a purpose label; the CLI uses 'pep.search' and 'pep.test'.");

  m.def(
      "calibration_report_json",
      [](const ProbMatrix& probs, const std::vector<int>& labels, int bins,
         const std::string& method, std::optional<double> sigma, std::optional<int> members,
         std::optional<std::uint64_t> seed, std::optional<double> temperature,
         std::optional<bool> temperature_fitted) {
        const MethodProvenance provenance =
            make_provenance(method, sigma, members, seed, temperature, temperature_fitted);
        return to_json(calibration_report(probs, labels, bins, provenance)).dump(2) + "\n";
      },
      py::arg("probs"), py::arg("labels"), py::kw_only(), py::arg("bins") = kDefaultEceBins,
      py::arg("method") = "baseline", py::arg("sigma") = py::none(),
      py::arg("members") = py::none(), py::arg("seed") = py::none(),
      py::arg("temperature") = py::none(), py::arg("temperature_fitted") = py::none(),
      "NLL, Brier, ECE, accuracy, and reliability bins as report JSON.");
  m.def(
      "pep_search_json",
      [](const NetworkSpec& spec, const ParamVector& params, const FeatureMatrix& features,
         const std::vector<int>& labels, double sigma_low, double sigma_high, int iterations,
         int members, std::uint64_t seed) {
        SigmaSearchConfig config;
        config.sigma_low = sigma_low;
        config.sigma_high = sigma_high;
        config.iterations = iterations;
        config.member_count = members;
        config.seed = seed;
        const SigmaSearchResult result =
            golden_section_sigma(spec, params, config, features, labels);
        return to_json(result, config).dump(2) + "\n";
      },
      py::arg("spec"), py::arg("params"), py::arg("features"), py::arg("labels"), py::kw_only(),
      py::arg("sigma_low") = 5e-5, py::arg("sigma_high") = 5e-3, py::arg("iterations") = 7,
      py::arg("members") = 5, py::arg("seed") = 0,
      "Run the noise-scale search and serialize the result as report JSON.");
  m.def(
      "curvature_report_json",
      [](const NetworkSpec& spec, const ParamVector& params, const Dataset& data, double sigma,
         double h, int hutchinson_probes, std::uint64_t seed, Index exact_threshold,
         int observed_members, int observed_groups) {
        CurvatureOptions options;
        options.h = h;
        options.hutchinson_probes = hutchinson_probes;
        options.seed = seed;
        options.exact_threshold = exact_threshold;
        return to_json(curvature_report(spec, params, data, sigma, options, observed_members,
                                        observed_groups))
                   .dump(2) +
               "\n";
      },
      py::arg("spec"), py::arg("params"), py::arg("data"), py::arg("sigma"), py::kw_only(),
      py::arg("h") = 0.0, py::arg("hutchinson_probes") = 1000, py::arg("seed") = 0,
      py::arg("exact_threshold") = 300, py::arg("observed_members") = 1000,
      py::arg("observed_groups") = 10,
      "Laplacian, Fisher trace, and the three ensemble-effect estimates as report JSON.");
}
