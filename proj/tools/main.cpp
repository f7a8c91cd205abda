// pepkit command-line front end. One command per process; every output
// file is a pure function of the config and the master seed.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pepkit/baselines.hpp"
#include "pepkit/checkpoint.hpp"
#include "pepkit/config.hpp"
#include "pepkit/curvature.hpp"
#include "pepkit/data.hpp"
#include "pepkit/errors.hpp"
#include "pepkit/metrics.hpp"
#include "pepkit/pep.hpp"
#include "pepkit/report.hpp"
#include "pepkit/rng.hpp"
#include "pepkit/trainer.hpp"

namespace fs = std::filesystem;
using namespace pepkit;

namespace {

struct Options {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = ".";

  std::string data_desc;
  std::string ood_desc;
  std::string classes_spec;
  double train_fraction = 0.8;
  double validation_fraction = 0.1;
  double test_fraction = 0.1;

  std::string hidden_spec = "32";

  std::string optimizer = "adam";
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long batch_size = 128;
  long epochs = 15;

  double sigma_low = 5e-5;
  double sigma_high = 5e-3;
  long iterations = 7;
  long members = 5;
  long test_members = 10;
  double sigma = -1.0;  // unset
  std::string distribution = "gaussian";
  std::string mask_spec = "weights";

  double temperature = 0.0;  // unset
  bool fit_temperature = false;

  long ece_bins = kDefaultEceBins;
  long kld_bins = 20;

  double probe_sigma = -1.0;  // unset
  double probe_h = 0.0;
  long hutchinson_probes = 1000;
  long exact_threshold = 300;
  long observed_members = 1000;
  long observed_groups = 10;

  std::string method = "baseline";
  std::string split;  // per-command default when empty
  std::string checkpoint;
  std::string series_dir;
  std::vector<std::string> inputs;
};

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      "seed",
      "out.dir",
      "data.source",
      "data.ood_source",
      "data.classes",
      "data.train_fraction",
      "data.validation_fraction",
      "data.test_fraction",
      "model.hidden",
      "train.optimizer",
      "train.learning_rate",
      "train.beta1",
      "train.beta2",
      "train.epsilon",
      "train.batch_size",
      "train.epochs",
      "pep.sigma_low",
      "pep.sigma_high",
      "pep.iterations",
      "pep.members",
      "pep.test_members",
      "pep.sigma",
      "pep.distribution",
      "pep.mask",
      "metrics.ece_bins",
      "metrics.kld_bins",
      "probe.sigma",
      "probe.h",
      "probe.hutchinson_probes",
      "probe.exact_threshold",
      "probe.observed_members",
      "probe.observed_groups",
  };
  return keys;
}

void apply_config(Options& o, const ConfigMap& c) {
  o.seed = c.get_u64("seed", o.seed);
  o.out_dir = c.get_string("out.dir", o.out_dir);
  o.data_desc = c.get_string("data.source", o.data_desc);
  o.ood_desc = c.get_string("data.ood_source", o.ood_desc);
  o.classes_spec = c.get_string("data.classes", o.classes_spec);
  o.train_fraction = c.get_double("data.train_fraction", o.train_fraction);
  o.validation_fraction = c.get_double("data.validation_fraction", o.validation_fraction);
  o.test_fraction = c.get_double("data.test_fraction", o.test_fraction);
  o.hidden_spec = c.get_string("model.hidden", o.hidden_spec);
  o.optimizer = c.get_string("train.optimizer", o.optimizer);
  o.learning_rate = c.get_double("train.learning_rate", o.learning_rate);
  o.beta1 = c.get_double("train.beta1", o.beta1);
  o.beta2 = c.get_double("train.beta2", o.beta2);
  o.epsilon = c.get_double("train.epsilon", o.epsilon);
  o.batch_size = c.get_long("train.batch_size", o.batch_size);
  o.epochs = c.get_long("train.epochs", o.epochs);
  o.sigma_low = c.get_double("pep.sigma_low", o.sigma_low);
  o.sigma_high = c.get_double("pep.sigma_high", o.sigma_high);
  o.iterations = c.get_long("pep.iterations", o.iterations);
  o.members = c.get_long("pep.members", o.members);
  o.test_members = c.get_long("pep.test_members", o.test_members);
  o.sigma = c.get_double("pep.sigma", o.sigma);
  o.distribution = c.get_string("pep.distribution", o.distribution);
  o.mask_spec = c.get_string("pep.mask", o.mask_spec);
  o.ece_bins = c.get_long("metrics.ece_bins", o.ece_bins);
  o.kld_bins = c.get_long("metrics.kld_bins", o.kld_bins);
  o.probe_sigma = c.get_double("probe.sigma", o.probe_sigma);
  o.probe_h = c.get_double("probe.h", o.probe_h);
  o.hutchinson_probes = c.get_long("probe.hutchinson_probes", o.hutchinson_probes);
  o.exact_threshold = c.get_long("probe.exact_threshold", o.exact_threshold);
  o.observed_members = c.get_long("probe.observed_members", o.observed_members);
  o.observed_groups = c.get_long("probe.observed_groups", o.observed_groups);
}

long parse_long_str(std::string_view text, const std::string& what) {
  long value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw config_error(what + ": not an integer: '" + std::string(text) + "'");
  }
  return value;
}

std::uint64_t parse_u64_str(std::string_view text, const std::string& what) {
  std::uint64_t value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw config_error(what + ": not an unsigned integer: '" + std::string(text) + "'");
  }
  return value;
}

double parse_double_str(std::string_view text, const std::string& what) {
  double value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw config_error(what + ": not a number: '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string> split_on(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.emplace_back(text.substr(start));
      return parts;
    }
    parts.emplace_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

// "idx:<images>,<labels>" or "blobs:<classes>,<per_class>,<dim>,<spread>,<seed>"
Dataset load_descriptor(const std::string& desc) {
  if (desc.rfind("idx:", 0) == 0) {
    const std::string rest = desc.substr(4);
    const std::size_t comma = rest.find(',');
    if (comma == std::string::npos || comma == 0 || comma + 1 == rest.size()) {
      throw config_error("idx descriptor wants two paths: idx:<images>,<labels>");
    }
    return load_idx(rest.substr(0, comma), rest.substr(comma + 1));
  }
  if (desc.rfind("blobs:", 0) == 0) {
    const auto parts = split_on(desc.substr(6), ',');
    if (parts.size() != 5) {
      throw config_error("blobs descriptor wants blobs:<classes>,<per_class>,<dim>,<spread>,<seed>");
    }
    return synth_blobs(parse_long_str(parts[0], "blobs classes"),
                       parse_long_str(parts[1], "blobs per_class"),
                       parse_long_str(parts[2], "blobs dim"),
                       parse_double_str(parts[3], "blobs spread"),
                       parse_u64_str(parts[4], "blobs seed"));
  }
  throw config_error("unknown dataset descriptor '" + desc + "' (want idx:... or blobs:...)");
}

// "0-4" / "0,2,7" / mixes; sorted and deduplicated.
std::vector<int> parse_classes(const std::string& spec) {
  std::vector<int> keep;
  for (const std::string& token : split_on(spec, ',')) {
    const std::size_t dash = token.find('-', 1);  // position 0 would be a sign
    if (dash == std::string::npos) {
      keep.push_back(static_cast<int>(parse_long_str(token, "classes")));
    } else {
      const long lo = parse_long_str(token.substr(0, dash), "classes");
      const long hi = parse_long_str(token.substr(dash + 1), "classes");
      if (lo > hi) throw config_error("classes range '" + token + "' runs backwards");
      for (long c = lo; c <= hi; ++c) keep.push_back(static_cast<int>(c));
    }
  }
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  return keep;
}

std::vector<Index> parse_hidden(const std::string& spec) {
  if (spec.empty() || spec == "none") return {};
  std::vector<Index> widths;
  for (const std::string& token : split_on(spec, ',')) {
    widths.push_back(parse_long_str(token, "model hidden widths"));
  }
  return widths;
}

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

Split resolve_split(const Options& o, const char* fallback) {
  return split_from_name(o.split.empty() ? fallback : o.split);
}

Dataset prepare_data(const Options& o) {
  if (o.data_desc.empty()) throw config_error("no dataset: pass --data or set data.source");
  Dataset ds = load_descriptor(o.data_desc);
  if (!o.classes_spec.empty()) ds = ds.filter_classes(parse_classes(o.classes_spec));
  SplitSpec split;
  split.train_fraction = o.train_fraction;
  split.validation_fraction = o.validation_fraction;
  split.test_fraction = o.test_fraction;
  split.seed = o.seed;
  assign_splits(ds, split);
  return ds;
}

Checkpoint load_model(const Options& o) {
  if (o.checkpoint.empty()) throw config_error("--checkpoint is required");
  return load_checkpoint(o.checkpoint);
}

void check_model_data(const NetworkSpec& spec, const Dataset& ds) {
  if (spec.input_width() != ds.dim()) {
    throw shape_error("model takes " + std::to_string(spec.input_width()) +
                      " features, data has " + std::to_string(ds.dim()));
  }
  if (spec.class_count() != ds.class_count) {
    throw shape_error("model has " + std::to_string(spec.class_count()) +
                      " classes, data has " + std::to_string(ds.class_count));
  }
}

fs::path out_path(const Options& o, const std::string& name) {
  fs::create_directories(o.out_dir);
  return fs::path(o.out_dir) / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw config_error("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw config_error("cannot write " + path.string());
  std::printf("wrote %s\n", path.string().c_str());
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

nlohmann::json parse_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw data_error(path.string() + ": " + e.what());
  }
}

PerturbConfig test_perturb_config(const Options& o, const NetworkSpec& spec, double sigma) {
  PerturbConfig pc;
  pc.sigma = sigma;
  pc.member_count = static_cast<int>(o.test_members);
  pc.distribution = parse_distribution(o.distribution);
  pc.mask = parse_mask(spec, o.mask_spec);
  pc.seed = rng::derive_seed(o.seed, "pep.test");
  return pc;
}

SigmaSearchResult run_sigma_search(const Options& o, const NetworkSpec& spec,
                                   const ParamVector& params, const Dataset& validation) {
  SigmaSearchConfig sc;
  sc.sigma_low = o.sigma_low;
  sc.sigma_high = o.sigma_high;
  sc.iterations = static_cast<int>(o.iterations);
  sc.member_count = static_cast<int>(o.members);
  sc.seed = rng::derive_seed(o.seed, "pep.search");
  return golden_section_sigma(spec, params, sc, validation.features, validation.labels,
                              parse_distribution(o.distribution), parse_mask(spec, o.mask_spec));
}

// Resolved prediction method, applicable to any feature matrix with the
// model's width. `data` supplies the validation split when ts fits T.
struct Method {
  std::function<ProbMatrix(const FeatureMatrix&)> predict;
  MethodProvenance provenance;
};

Method resolve_method(const Options& o, const NetworkSpec& spec, const ParamVector& params,
                      const Dataset& data) {
  Method m;
  if (o.method == "baseline") {
    m.provenance.name = "baseline";
    m.predict = [&spec, &params](const FeatureMatrix& x) {
      return softmax(forward(spec, params, x));
    };
    return m;
  }
  if (o.method == "pep") {
    if (o.sigma < 0) throw config_error("method pep needs --sigma (or pep.sigma)");
    const PerturbConfig pc = test_perturb_config(o, spec, o.sigma);
    m.provenance.name = "pep";
    m.provenance.sigma = pc.sigma;
    m.provenance.member_count = pc.member_count;
    m.provenance.seed = pc.seed;
    m.predict = [&spec, &params, pc](const FeatureMatrix& x) {
      return ensemble_predict(spec, params, pc, x);
    };
    return m;
  }
  if (o.method == "ts") {
    if (o.fit_temperature && o.temperature > 0) {
      throw config_error("pass either --temperature or --fit-temperature, not both");
    }
    double t = o.temperature;
    bool fitted = false;
    if (o.fit_temperature) {
      const Dataset val = data.subset(Split::validation);
      const TemperatureFit fit = fit_temperature(forward(spec, params, val.features), val.labels);
      t = fit.t_star;
      fitted = true;
    } else if (t <= 0) {
      throw config_error("method ts needs --temperature or --fit-temperature");
    }
    m.provenance.name = "ts";
    m.provenance.temperature = t;
    m.provenance.temperature_fitted = fitted;
    m.predict = [&spec, &params, t](const FeatureMatrix& x) {
      return scale_logits(forward(spec, params, x), t);
    };
    return m;
  }
  throw config_error("method must be baseline, pep, or ts, got '" + o.method + "'");
}

void cmd_train(const Options& o) {
  const Dataset ds = prepare_data(o);
  const NetworkSpec spec = NetworkSpec::mlp(ds.dim(), parse_hidden(o.hidden_spec), ds.class_count);
  TrainConfig tc;
  tc.optimizer = parse_optimizer(o.optimizer);
  tc.learning_rate = o.learning_rate;
  tc.beta1 = o.beta1;
  tc.beta2 = o.beta2;
  tc.epsilon = o.epsilon;
  tc.batch_size = o.batch_size;
  tc.epochs = static_cast<int>(o.epochs);
  tc.seed = o.seed;
  const CheckpointSeries series = train(spec, ds, tc);
  for (const EpochCheckpoint& epoch : series.epochs) {
    char name[32];
    std::snprintf(name, sizeof(name), "epoch_%04d.ckpt", epoch.epoch);
    const fs::path path = out_path(o, name);
    save_checkpoint({spec, epoch.params}, path);
    std::printf("wrote %s\n", path.string().c_str());
  }
  write_text(out_path(o, "train_metrics.csv"), train_metrics_csv(series));
  if (series.diverged_epoch) {
    throw numeric_error("training diverged at epoch " + std::to_string(*series.diverged_epoch) +
                        "; kept " + std::to_string(series.epochs.size()) + " finite checkpoints");
  }
}

void cmd_pep_search(const Options& o) {
  const Checkpoint ckpt = load_model(o);
  const Dataset ds = prepare_data(o);
  check_model_data(ckpt.spec, ds);
  const SigmaSearchResult result =
      run_sigma_search(o, ckpt.spec, ckpt.params, ds.subset(Split::validation));
  write_text(out_path(o, "sigma_curve.csv"), sigma_curve_csv(result.curve));
  SigmaSearchConfig sc;
  sc.sigma_low = o.sigma_low;
  sc.sigma_high = o.sigma_high;
  sc.iterations = static_cast<int>(o.iterations);
  sc.member_count = static_cast<int>(o.members);
  sc.seed = rng::derive_seed(o.seed, "pep.search");
  write_text(out_path(o, "pep_search.json"), dump_json(to_json(result, sc)));
}

void cmd_evaluate(const Options& o) {
  const Checkpoint ckpt = load_model(o);
  const Dataset ds = prepare_data(o);
  check_model_data(ckpt.spec, ds);
  const Method method = resolve_method(o, ckpt.spec, ckpt.params, ds);
  const Dataset eval = ds.subset(resolve_split(o, "test"));
  const ProbMatrix probs = method.predict(eval.features);
  const CalibrationReport report =
      calibration_report(probs, eval.labels, static_cast<int>(o.ece_bins), method.provenance);
  write_text(out_path(o, "evaluate_" + o.method + ".json"), dump_json(to_json(report)));
  write_text(out_path(o, "reliability_" + o.method + ".csv"), reliability_csv(report.bins));
}

void cmd_probe(const Options& o) {
  const Checkpoint ckpt = load_model(o);
  const Dataset ds = prepare_data(o);
  check_model_data(ckpt.spec, ds);
  if (o.probe_sigma < 0) throw config_error("probe needs --sigma (or probe.sigma)");
  const Dataset sub = ds.subset(resolve_split(o, "train"));
  CurvatureOptions copts;
  copts.h = o.probe_h;
  copts.hutchinson_probes = static_cast<int>(o.hutchinson_probes);
  copts.seed = o.seed;
  copts.exact_threshold = o.exact_threshold;
  const CurvatureReport report =
      curvature_report(ckpt.spec, ckpt.params, sub, o.probe_sigma, copts,
                       static_cast<int>(o.observed_members), static_cast<int>(o.observed_groups));
  write_text(out_path(o, "curvature.json"), dump_json(to_json(report)));
}

void cmd_overfit_probe(const Options& o) {
  if (o.series_dir.empty()) throw config_error("--series is required");
  const Dataset ds = prepare_data(o);
  std::vector<std::pair<int, fs::path>> series;
  if (!fs::is_directory(o.series_dir)) {
    throw config_error("--series is not a directory: " + o.series_dir);
  }
  for (const auto& entry : fs::directory_iterator(o.series_dir)) {
    const std::string stem = entry.path().stem().string();
    if (!entry.is_regular_file() || entry.path().extension() != ".ckpt" ||
        stem.rfind("epoch_", 0) != 0) {
      continue;
    }
    series.emplace_back(static_cast<int>(parse_long_str(stem.substr(6), "epoch file name")),
                        entry.path());
  }
  if (series.empty()) throw config_error("no epoch_*.ckpt files in " + o.series_dir);
  std::sort(series.begin(), series.end());

  const Dataset tr = ds.subset(Split::train);
  const Dataset va = ds.subset(Split::validation);
  const Dataset te = ds.subset(Split::test);
  std::vector<OverfitProbeRow> rows;
  for (const auto& [epoch, path] : series) {
    const Checkpoint ckpt = load_checkpoint(path);
    check_model_data(ckpt.spec, ds);
    OverfitProbeRow row;
    row.epoch = epoch;
    row.overfit_gap = overfit_gap(ckpt.spec, ckpt.params, tr, te);
    const SigmaSearchResult search = run_sigma_search(o, ckpt.spec, ckpt.params, va);
    row.sigma_star = search.sigma_star;
    const PerturbConfig pc = test_perturb_config(o, ckpt.spec, search.sigma_star);
    const EnsembleLogLik ll =
        ensemble_log_likelihood(ckpt.spec, ckpt.params, pc, te.features, te.labels);
    row.pep_effect_observed =
        ll.ensemble - mean_log_likelihood(ckpt.spec, ckpt.params, te.features, te.labels);
    rows.push_back(row);
  }
  write_text(out_path(o, "overfit_probe.csv"), overfit_probe_csv(rows));
}

void cmd_ood(const Options& o) {
  const Checkpoint ckpt = load_model(o);
  const Dataset in_ds = prepare_data(o);
  check_model_data(ckpt.spec, in_ds);
  if (o.ood_desc.empty()) throw config_error("--ood-data is required (or data.ood_source)");
  Dataset out_ds = load_descriptor(o.ood_desc);
  if (out_ds.dim() != ckpt.spec.input_width()) {
    throw shape_error("model takes " + std::to_string(ckpt.spec.input_width()) +
                      " features, ood data has " + std::to_string(out_ds.dim()));
  }
  SplitSpec split;
  split.train_fraction = o.train_fraction;
  split.validation_fraction = o.validation_fraction;
  split.test_fraction = o.test_fraction;
  split.seed = o.seed;
  assign_splits(out_ds, split);

  const Split sp = resolve_split(o, "test");
  const FeatureMatrix in_x = in_ds.subset(sp).features;
  const FeatureMatrix out_x = out_ds.subset(sp).features;
  const int bins = static_cast<int>(o.kld_bins);

  const auto baseline = [&](const FeatureMatrix& x) {
    return softmax(forward(ckpt.spec, ckpt.params, x));
  };
  const double kld_baseline =
      symmetrized_kld(confidences(baseline(in_x)), confidences(baseline(out_x)), bins);
  const Method method = resolve_method(o, ckpt.spec, ckpt.params, in_ds);
  const double kld_method =
      o.method == "baseline"
          ? kld_baseline
          : symmetrized_kld(confidences(method.predict(in_x)), confidences(method.predict(out_x)),
                            bins);

  const nlohmann::json j{{"kind", "ood_report"},
                         {"method", to_json(method.provenance)},
                         {"bins", bins},
                         {"split", split_name(sp)},
                         {"kld_baseline", kld_baseline},
                         {"kld_method", kld_method}};
  write_text(out_path(o, "ood.json"), dump_json(j));
}

void cmd_report(const Options& o) {
  if (o.inputs.empty()) throw config_error("--inputs needs at least one evaluate JSON");
  std::vector<nlohmann::json> reports;
  std::vector<std::string> names;
  std::map<std::string, int> seen;
  for (const std::string& input : o.inputs) {
    nlohmann::json j = parse_json_file(input);
    if (!j.is_object() || j.value("kind", "") != std::string("calibration_report")) {
      throw data_error(input + ": not a calibration report");
    }
    std::string name = j.at("method").value("name", "unknown");
    const int n = ++seen[name];
    if (n > 1) name += "_" + std::to_string(n);
    names.push_back(name);
    reports.push_back(std::move(j));
  }

  nlohmann::json methods = nlohmann::json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    methods.push_back({{"name", names[i]}, {"report", reports[i]}});
  }
  write_text(out_path(o, "report.json"),
             dump_json({{"kind", "method_comparison"}, {"methods", methods}}));

  std::string csv = "metric";
  for (const std::string& name : names) csv += "," + name;
  csv += "\n";
  for (const char* metric :
       {"nll", "brier", "ece_percent", "accuracy", "top1_error_percent"}) {
    csv += metric;
    for (const nlohmann::json& j : reports) {
      csv += "," + format_double(j.at("metrics").at(metric).get<double>());
    }
    csv += "\n";
  }
  write_text(out_path(o, "report.csv"), csv);
}

void emit_error(const std::string& type, const std::string& message) {
  const nlohmann::json j{{"error", {{"type", type}, {"message", message}}}};
  std::fprintf(stderr, "%s\n", j.dump().c_str());
}

void add_common_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "key = value config file; flags override its keys");
  cmd->add_option("--seed", o.seed, "master seed; every stream derives from it");
  cmd->add_option("--out", o.out_dir, "output directory");
}

void add_data_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--data", o.data_desc,
                  "idx:<images>,<labels> or blobs:<classes>,<per_class>,<dim>,<spread>,<seed>");
  cmd->add_option("--classes", o.classes_spec, "keep only these labels, e.g. 0-4 or 0,2,7");
  cmd->add_option("--train-fraction", o.train_fraction);
  cmd->add_option("--validation-fraction", o.validation_fraction);
  cmd->add_option("--test-fraction", o.test_fraction);
}

void add_search_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--sigma-low", o.sigma_low)->check(CLI::NonNegativeNumber);
  cmd->add_option("--sigma-high", o.sigma_high)->check(CLI::PositiveNumber);
  cmd->add_option("--iterations", o.iterations)->check(CLI::PositiveNumber);
  cmd->add_option("--members", o.members, "ensemble size during the search")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--distribution", o.distribution, "gaussian or uniform");
  cmd->add_option("--mask", o.mask_spec, "perturbed coordinates: weights or all");
}

void add_method_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--method", o.method, "baseline, pep, or ts");
  cmd->add_option("--sigma", o.sigma, "pep: perturbation scale")->check(CLI::NonNegativeNumber);
  cmd->add_option("--members", o.test_members, "pep: ensemble size")->check(CLI::PositiveNumber);
  cmd->add_option("--distribution", o.distribution, "pep: gaussian or uniform");
  cmd->add_option("--mask", o.mask_spec, "pep: weights or all");
  cmd->add_option("--temperature", o.temperature, "ts: fixed temperature")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--fit-temperature", o.fit_temperature,
                "ts: fit the temperature on the validation split");
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  try {
    for (int i = 1; i < argc; ++i) {
      const std::string_view arg = argv[i];
      if (arg == "--config" && i + 1 < argc) {
        o.config_path = argv[i + 1];
      } else if (arg.rfind("--config=", 0) == 0) {
        o.config_path = std::string(arg.substr(9));
      }
    }
    if (!o.config_path.empty()) {
      const ConfigMap cfg = ConfigMap::parse_file(o.config_path);
      cfg.expect_keys(known_config_keys());
      apply_config(o, cfg);
    }

    CLI::App app{"softmax classifiers with perturbation ensembles and curvature probes"};
    app.require_subcommand(1);

    CLI::App* train = app.add_subcommand("train", "fit a model; one checkpoint per epoch");
    add_common_options(train, o);
    add_data_options(train, o);
    train->add_option("--hidden", o.hidden_spec, "hidden widths, e.g. 32,16; none for one layer");
    train->add_option("--optimizer", o.optimizer, "sgd or adam");
    train->add_option("--learning-rate", o.learning_rate)->check(CLI::PositiveNumber);
    train->add_option("--beta1", o.beta1);
    train->add_option("--beta2", o.beta2);
    train->add_option("--epsilon", o.epsilon);
    train->add_option("--batch-size", o.batch_size)->check(CLI::PositiveNumber);
    train->add_option("--epochs", o.epochs)->check(CLI::PositiveNumber);
    train->callback([&o] { cmd_train(o); });

    CLI::App* search = app.add_subcommand(
        "pep-search", "golden-section search for the best perturbation scale");
    add_common_options(search, o);
    add_data_options(search, o);
    search->add_option("--checkpoint", o.checkpoint, "trained model")->required();
    add_search_options(search, o);
    search->callback([&o] { cmd_pep_search(o); });

    CLI::App* evaluate = app.add_subcommand("evaluate", "calibration metrics for one method");
    add_common_options(evaluate, o);
    add_data_options(evaluate, o);
    evaluate->add_option("--checkpoint", o.checkpoint, "trained model")->required();
    evaluate->add_option("--split", o.split, "train, validation, or test (default test)");
    evaluate->add_option("--ece-bins", o.ece_bins)->check(CLI::PositiveNumber);
    add_method_options(evaluate, o);
    evaluate->callback([&o] { cmd_evaluate(o); });

    CLI::App* probe = app.add_subcommand("probe", "curvature probes at one perturbation scale");
    add_common_options(probe, o);
    add_data_options(probe, o);
    probe->add_option("--checkpoint", o.checkpoint, "trained model")->required();
    probe->add_option("--split", o.split, "train, validation, or test (default train)");
    probe->add_option("--sigma", o.probe_sigma, "perturbation scale")
        ->check(CLI::NonNegativeNumber);
    probe->add_option("--fd-step", o.probe_h, "finite-difference step; 0 picks one from the scale");
    probe->add_option("--hutchinson-probes", o.hutchinson_probes)->check(CLI::PositiveNumber);
    probe->add_option("--exact-threshold", o.exact_threshold,
                      "coordinate loop up to this many parameters")
        ->check(CLI::PositiveNumber);
    probe->add_option("--observed-members", o.observed_members)->check(CLI::PositiveNumber);
    probe->add_option("--observed-groups", o.observed_groups)->check(CLI::PositiveNumber);
    probe->callback([&o] { cmd_probe(o); });

    CLI::App* overfit = app.add_subcommand(
        "overfit-probe", "per-epoch overfit gap, sigma*, and ensemble effect");
    add_common_options(overfit, o);
    add_data_options(overfit, o);
    overfit->add_option("--series", o.series_dir, "directory of epoch_*.ckpt files")->required();
    add_search_options(overfit, o);
    overfit->add_option("--test-members", o.test_members, "ensemble size on the test split")
        ->check(CLI::PositiveNumber);
    overfit->callback([&o] { cmd_overfit_probe(o); });

    CLI::App* ood = app.add_subcommand(
        "ood", "confidence-histogram divergence between two datasets");
    add_common_options(ood, o);
    add_data_options(ood, o);
    ood->add_option("--checkpoint", o.checkpoint, "trained model")->required();
    ood->add_option("--ood-data", o.ood_desc, "out-of-distribution dataset descriptor");
    ood->add_option("--split", o.split, "train, validation, or test (default test)");
    ood->add_option("--kld-bins", o.kld_bins)->check(CLI::PositiveNumber);
    add_method_options(ood, o);
    ood->callback([&o] { cmd_ood(o); });

    CLI::App* report = app.add_subcommand("report", "merge evaluate outputs into one comparison");
    add_common_options(report, o);
    report->add_option("--inputs", o.inputs, "calibration report JSON files")
        ->required()
        ->expected(-1);
    report->callback([&o] { cmd_report(o); });

    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      emit_error("config", e.what());
      return kExitConfig;
    }
    return 0;
  } catch (const data_error& e) {
    emit_error("data", e.what());
    return kExitData;
  } catch (const numeric_error& e) {
    emit_error("numeric", e.what());
    return kExitNumeric;
  } catch (const config_error& e) {
    emit_error("config", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    emit_error("internal", e.what());
    return kExitConfig;
  }
}
