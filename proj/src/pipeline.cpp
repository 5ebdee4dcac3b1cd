#include "lowfreq/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "lowfreq/errors.hpp"
#include "lowfreq/objective.hpp"
#include "lowfreq/random.hpp"
#include "lowfreq/spectral.hpp"

namespace lowfreq {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json train_config_json(const TrainConfig& t, bool with_epochs) {
  json j{{"learning_rate", t.learning_rate},
         {"lr_decay_factor", t.lr_decay_factor},
         {"lr_decay_every", t.lr_decay_every},
         {"batch_size", t.batch_size}};
  if (with_epochs) j["epochs"] = t.epochs;
  return j;
}

TrainConfig train_config_from(const json& j, int default_epochs) {
  TrainConfig t;
  t.learning_rate = j.at("learning_rate").get<double>();
  t.lr_decay_factor = j.at("lr_decay_factor").get<double>();
  t.lr_decay_every = j.at("lr_decay_every").get<int>();
  t.batch_size = j.at("batch_size").get<int>();
  t.epochs = j.contains("epochs") ? j.at("epochs").get<int>() : default_epochs;
  return t;
}

json defense_json(const DefenseSpec& d) {
  json j{{"kind", d.name()}};
  if (d.kind == DefenseKind::Gaussian || d.kind == DefenseKind::Wiener) j["window"] = d.window;
  if (d.kind == DefenseKind::Gaussian && d.sigma > 0.0) j["sigma"] = d.sigma;
  if (d.kind == DefenseKind::Jpeg) j["quality"] = d.quality;
  return j;
}

// Wraps one pipeline stage so that failures carry the stage name.
template <typename F>
auto run_stage(const std::string& name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::ofstream open_report(const fs::path& path, const ExperimentConfig& config) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot create " + path.string());
  out << report_header(config) << "\n";
  return out;
}

void set_dotted(json& root, const std::string& key, const json& value) {
  json* node = &root;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) throw ConfigError("empty override key");
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    node = &(*node)[parts[i]];
    if (!node->is_object()) throw ConfigError("override key '" + key + "' does not name a section");
  }
  (*node)[parts.back()] = value;
}

std::vector<Image> items(const LabeledDataset& ds, const std::vector<std::size_t>& idx) {
  std::vector<Image> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(ds.images[i]);
  return out;
}

}  // namespace

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json default_config_json() {
  return json::parse(R"({
    "data": {
      "train_images": "data/mnist5k/train-images-idx3-ubyte",
      "train_labels": "data/mnist5k/train-labels-idx1-ubyte",
      "test_images": "data/mnist5k/t10k-images-idx3-ubyte",
      "test_labels": "data/mnist5k/t10k-labels-idx1-ubyte",
      "train_cap": 1000,
      "test_cap": 1000
    },
    "trigger": {"n": 3, "epsilon": 0.1, "region_fraction": 0.183},
    "poison": {"ratio": 0.05, "target_label": 7},
    "model": {"descriptor": "default"},
    "surrogate": {"learning_rate": 0.01, "lr_decay_factor": 0.1, "lr_decay_every": 50, "batch_size": 64},
    "victim": {"learning_rate": 0.01, "lr_decay_factor": 0.1, "lr_decay_every": 50, "batch_size": 64,
               "epochs": 10},
    "sa": {"initial_temperature": 1.0, "final_temperature": 0.1, "alpha": 0.3, "iters_per_temp": 4,
           "retrain_epochs": 1, "semi_train_epochs": 1, "acceptance_mode": "metropolis",
           "lambda_p": 1.0, "workers": 1},
    "variants": {"full_spectrum_control": true, "high_frequency_control": true, "patch_baseline": true},
    "defenses": [
      {"kind": "none"},
      {"kind": "gaussian", "window": 3},
      {"kind": "wiener", "window": 3},
      {"kind": "jpeg", "quality": 90},
      {"kind": "jpeg", "quality": 50}
    ],
    "stealth": {"samples": 500},
    "strip": {"samples": 20, "overlays": 100, "blend": 0.5},
    "output_dir": "lowfreq_out",
    "seed": 1
  })");
}

json ExperimentConfig::to_json() const {
  json j;
  j["data"] = {{"train_images", train_images.string()}, {"train_labels", train_labels.string()},
               {"test_images", test_images.string()},   {"test_labels", test_labels.string()},
               {"train_cap", train_cap},                {"test_cap", test_cap}};
  j["trigger"] = {{"n", n_bands}, {"epsilon", epsilon}, {"region_fraction", region_fraction}};
  j["poison"] = {{"ratio", poison_ratio}, {"target_label", target_label}};
  j["model"] = {{"descriptor", descriptor}};
  j["surrogate"] = train_config_json(surrogate, false);
  j["victim"] = train_config_json(victim, true);
  j["sa"] = {{"initial_temperature", sa.initial_temperature},
             {"final_temperature", sa.final_temperature},
             {"alpha", sa.alpha},
             {"iters_per_temp", sa.iters_per_temp},
             {"retrain_epochs", sa.retrain_epochs},
             {"semi_train_epochs", sa.semi_train_epochs},
             {"acceptance_mode", lowfreq::to_string(sa.acceptance_mode)},
             {"lambda_p", sa.lambda_p},
             {"workers", sa.workers}};
  j["variants"] = {{"full_spectrum_control", full_spectrum_control},
                   {"high_frequency_control", high_frequency_control},
                   {"patch_baseline", patch_baseline}};
  j["defenses"] = json::array();
  for (const auto& d : defenses) j["defenses"].push_back(defense_json(d));
  j["stealth"] = {{"samples", stealth_samples}};
  j["strip"] = {{"samples", strip_samples}, {"overlays", strip_overlays}, {"blend", strip_blend}};
  j["output_dir"] = output_dir.string();
  j["seed"] = seed;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  try {
    const auto& d = j.at("data");
    c.train_images = d.at("train_images").get<std::string>();
    c.train_labels = d.at("train_labels").get<std::string>();
    c.test_images = d.at("test_images").get<std::string>();
    c.test_labels = d.at("test_labels").get<std::string>();
    c.train_cap = d.at("train_cap").get<std::size_t>();
    c.test_cap = d.at("test_cap").get<std::size_t>();
    c.n_bands = j.at("trigger").at("n").get<int>();
    c.epsilon = j.at("trigger").at("epsilon").get<double>();
    c.region_fraction = j.at("trigger").at("region_fraction").get<double>();
    c.poison_ratio = j.at("poison").at("ratio").get<double>();
    c.target_label = j.at("poison").at("target_label").get<int>();
    c.descriptor = j.at("model").at("descriptor").get<std::string>();
    c.surrogate = train_config_from(j.at("surrogate"), 0);
    c.victim = train_config_from(j.at("victim"), 10);
    const auto& s = j.at("sa");
    c.sa.initial_temperature = s.at("initial_temperature").get<double>();
    c.sa.final_temperature = s.at("final_temperature").get<double>();
    c.sa.alpha = s.at("alpha").get<double>();
    c.sa.iters_per_temp = s.at("iters_per_temp").get<int>();
    c.sa.retrain_epochs = s.at("retrain_epochs").get<int>();
    c.sa.semi_train_epochs = s.at("semi_train_epochs").get<int>();
    c.sa.acceptance_mode = parse_acceptance_mode(s.at("acceptance_mode").get<std::string>());
    c.sa.lambda_p = s.at("lambda_p").get<double>();
    c.sa.workers = s.at("workers").get<int>();
    const auto& v = j.at("variants");
    c.full_spectrum_control = v.at("full_spectrum_control").get<bool>();
    c.high_frequency_control = v.at("high_frequency_control").get<bool>();
    c.patch_baseline = v.at("patch_baseline").get<bool>();
    for (const auto& dj : j.at("defenses")) {
      c.defenses.push_back(parse_defense(dj.at("kind").get<std::string>(), dj.value("window", 3),
                                         dj.value("sigma", 0.0), dj.value("quality", 90)));
    }
    c.stealth_samples = j.at("stealth").at("samples").get<std::size_t>();
    c.strip_samples = j.at("strip").at("samples").get<std::size_t>();
    c.strip_overlays = j.at("strip").at("overlays").get<int>();
    c.strip_blend = j.at("strip").at("blend").get<double>();
    c.output_dir = j.at("output_dir").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad configuration: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("bad configuration: ") + e.what());
  }
  return c;
}

void ExperimentConfig::validate() const {
  for (const auto& p : {train_images, train_labels, test_images, test_labels}) {
    if (!fs::exists(p)) throw ConfigError("input file does not exist: " + p.string());
  }
  if (train_cap < 1 || test_cap < 1) throw ConfigError("subset caps must be positive");
  if (n_bands < 1) throw ConfigError("trigger.n must be at least 1");
  if (!(epsilon >= 0.0)) throw ConfigError("trigger.epsilon must be non-negative");
  if (!(region_fraction > 0.0 && region_fraction <= 1.0)) throw ConfigError("region_fraction must lie in (0,1]");
  if (!(poison_ratio >= 0.0 && poison_ratio <= 1.0)) throw ConfigError("poison.ratio must lie in [0,1]");
  if (target_label < 0) throw ConfigError("poison.target_label must be non-negative");
  if (strip_overlays < 1 || !(strip_blend >= 0.0 && strip_blend <= 1.0)) throw ConfigError("bad strip settings");
  try {
    surrogate.validate();
    victim.validate();
    sa.validate();
    for (const auto& d : defenses) d.validate();
    if (descriptor != "default") parse_descriptor(descriptor);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
  json j = default_config_json();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    json file;
    try {
      file = json::parse(in);
    } catch (const json::exception& e) {
      throw FormatError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    // Relative data paths in a file are taken relative to that file.
    if (file.contains("data") && file["data"].is_object()) {
      for (const char* key : {"train_images", "train_labels", "test_images", "test_labels"}) {
        if (file["data"].contains(key) && file["data"][key].is_string()) {
          fs::path p = file["data"][key].get<std::string>();
          if (p.is_relative()) file["data"][key] = (path.parent_path() / p).lexically_normal().string();
        }
      }
    }
    j.merge_patch(file);
  }
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
    const std::string key = o.substr(0, eq);
    const std::string raw = o.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::exception&) {
      value = raw;
    }
    set_dotted(j, key, value);
  }
  return ExperimentConfig::from_json(j);
}

std::string config_hash(const ExperimentConfig& config) {
  json j = config.to_json();
  j.erase("output_dir");
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

std::string report_header(const ExperimentConfig& config) {
  return "# config_hash=" + config_hash(config) + " seed=" + std::to_string(config.seed);
}

std::uint64_t stage_seed(const ExperimentConfig& config, const std::string& stage) {
  return derive_seed(config.seed, stage);
}

Datasets load_datasets(const ExperimentConfig& config) {
  Datasets d;
  d.train = load_idx(config.train_images, config.train_labels).head(config.train_cap);
  d.test = load_idx(config.test_images, config.test_labels).head(config.test_cap);
  const int k = std::max(d.train.num_classes, d.test.num_classes);
  d.train.num_classes = k;
  d.test.num_classes = k;
  if (d.train.empty() || d.test.empty()) throw ConsistencyError("train and test sets must be non-empty");
  if (d.train.shape() != d.test.shape()) throw ConsistencyError("train and test image shapes differ");
  if (config.target_label >= k) throw ConfigError("target label outside the dataset's classes");
  return d;
}

Descriptor resolve_descriptor(const ExperimentConfig& config, int num_classes) {
  return config.descriptor == "default" ? default_descriptor(num_classes) : parse_descriptor(config.descriptor);
}

ImageTransform Variant::transform() const {
  if (patch) {
    return [p = *patch](const Image& im) { return apply_patch_trigger(im, p); };
  }
  return [t = trigger](const Image& im) { return apply_frequency_trigger(im, t); };
}

SAResult stage_search(const ExperimentConfig& config, const LabeledDataset& train, bool full_spectrum,
                      Classifier* surrogate_out) {
  const Shape& shape = train.shape();
  SAConfig sa = config.sa;
  sa.epsilon = config.epsilon;
  sa.n_bands = config.n_bands;
  sa.region = full_spectrum ? FrequencyRegion{shape.height, shape.width}
                            : make_low_frequency_region(shape.height, shape.width, config.region_fraction);
  sa.seed = stage_seed(config, full_spectrum ? "search-full" : "search-low");
  SearchSetup setup;
  setup.descriptor = resolve_descriptor(config, train.num_classes);
  setup.train = config.surrogate;
  setup.poison_ratio = config.poison_ratio;
  setup.target_label = config.target_label;
  return search_trigger(sa, setup, train, surrogate_out);
}

std::vector<std::size_t> stage_poison_indices(const ExperimentConfig& config, const LabeledDataset& train) {
  return select_poison_indices(train, config.poison_ratio, stage_seed(config, "poison"));
}

LabeledDataset stage_poison(const ExperimentConfig& config, const LabeledDataset& train, const Variant& variant) {
  const auto indices = stage_poison_indices(config, train);
  if (!variant.patch) return poison_dataset(train, variant.trigger, indices, config.target_label);
  LabeledDataset out = train;
  for (std::size_t i : indices) {
    out.images[i] = apply_patch_trigger(train.images[i], *variant.patch);
    out.labels[i] = config.target_label;
    out.poison_flags[i] = 1;
  }
  out.poison_meta = PoisonMeta{static_cast<double>(indices.size()) / static_cast<double>(out.size()),
                               config.target_label};
  return out;
}

Classifier stage_train_victim(const ExperimentConfig& config, const LabeledDataset& training_set) {
  const Classifier init = Classifier::init(resolve_descriptor(config, training_set.num_classes),
                                           training_set.shape(), training_set.num_classes,
                                           stage_seed(config, "victim-init"));
  TrainConfig t = config.victim;
  t.seed = stage_seed(config, "victim-train");
  return train(init, training_set, t);
}

VariantMetrics stage_evaluate(const ExperimentConfig& config, const Classifier& model,
                              const LabeledDataset& test, const Variant& variant) {
  const auto m = model.as_model();
  return {variant.name, accuracy(m, test), attack_success_rate(m, test, variant.transform(), config.target_label)};
}

std::vector<RobustnessRow> stage_defend(const ExperimentConfig& config, const ProbabilityModel& model,
                                        const LabeledDataset& test, const Variant& variant,
                                        const std::vector<DefenseSpec>& defenses) {
  std::vector<RobustnessRow> rows;
  const auto transform = variant.transform();
  for (const DefenseSpec& d : defenses) {
    rows.push_back({variant.name, d.name(), d.param(), defended_accuracy(model, test, d),
                    attack_success_rate(model, test, transform, config.target_label, d)});
  }
  return rows;
}

std::vector<StealthReport> stage_stealth(const ExperimentConfig& config, const LabeledDataset& train,
                                         const Variant& variant) {
  LabeledDataset probe = train;
  const double ratio = std::min(1.0, static_cast<double>(config.stealth_samples) / static_cast<double>(train.size()));
  const auto idx = select_poison_indices(probe, ratio, stage_seed(config, "stealth"));
  const auto transform = variant.transform();
  std::vector<StealthReport> out;
  for (std::size_t i : idx) out.push_back(stealth_report(train.images[i], transform(train.images[i])));
  return out;
}

void write_metrics_csv(const ExperimentConfig& config, const std::vector<VariantMetrics>& rows, const fs::path& path) {
  auto out = open_report(path, config);
  out << "attack_variant,ACC,ASR\n";
  for (const auto& r : rows) out << r.name << "," << fmt(r.acc) << "," << fmt(r.asr) << "\n";
}

void write_robustness_csv(const ExperimentConfig& config, const std::vector<RobustnessRow>& rows,
                          const fs::path& path) {
  auto out = open_report(path, config);
  out << "attack_variant,defense,param,ACC,ASR\n";
  for (const auto& r : rows) {
    out << r.variant << "," << r.defense << "," << r.param << "," << fmt(r.acc) << "," << fmt(r.asr) << "\n";
  }
}

void write_stealth_csv(const ExperimentConfig& config, const std::vector<StealthReport>& rows, const fs::path& path) {
  auto out = open_report(path, config);
  out << "sample_id,psnr,ssim,freq_l2\n";
  double p = 0, s = 0, f = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << i << "," << format_psnr(rows[i].psnr) << "," << fmt(rows[i].ssim) << "," << fmt(rows[i].freq_l2) << "\n";
    p += rows[i].psnr;
    s += rows[i].ssim;
    f += rows[i].freq_l2;
  }
  if (!rows.empty()) {
    const double n = static_cast<double>(rows.size());
    out << "mean," << format_psnr(p / n) << "," << fmt(s / n) << "," << fmt(f / n) << "\n";
  }
}

void write_manifest_csv(const ExperimentConfig& config, const LabeledDataset& original,
                        const LabeledDataset& poisoned, const fs::path& path) {
  auto out = open_report(path, config);
  out << "index,original_label,label,poisoned\n";
  for (std::size_t i = 0; i < poisoned.size(); ++i) {
    if (!poisoned.poison_flags[i]) continue;
    out << i << "," << original.labels[i] << "," << poisoned.labels[i] << ",1\n";
  }
}

void write_sweep_csv(const ExperimentConfig& config, const std::vector<SweepRow>& rows, const fs::path& path) {
  auto out = open_report(path, config);
  out << "poison_ratio,ACC,ASR\n";
  for (const auto& r : rows) out << fmt(r.ratio) << "," << fmt(r.acc) << "," << fmt(r.asr) << "\n";
}

std::vector<std::size_t> read_manifest_indices(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::vector<std::size_t> idx;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line.rfind("index,", 0) != 0) throw FormatError("manifest lacks its column header");
      header_seen = true;
      continue;
    }
    try {
      idx.push_back(static_cast<std::size_t>(std::stoull(line.substr(0, line.find(',')))));
    } catch (const std::exception&) {
      throw FormatError("bad manifest row '" + line + "'");
    }
  }
  return idx;
}

ExperimentSummary run_experiment(const ExperimentConfig& config) {
  run_stage("validate", [&] {
    config.validate();
    return 0;
  });
  const fs::path dir = config.output_dir;
  run_stage("prepare", [&] {
    fs::create_directories(dir);
    std::ofstream(dir / "config_effective.json") << config.to_json().dump(2) << "\n";
    return 0;
  });
  const Datasets data = run_stage("load", [&] { return load_datasets(config); });
  const std::string header = report_header(config);

  ExperimentSummary summary;
  Classifier surrogate = Classifier::init(resolve_descriptor(config, data.train.num_classes), data.train.shape(),
                                          data.train.num_classes, 0);
  summary.low_search = run_stage("search", [&] {
    auto r = stage_search(config, data.train, false, &surrogate);
    save_classifier(surrogate, dir / "surrogate.ckpt");
    write_trace_csv(r, dir / "sa_trace_low.csv", header);
    save_trigger(r.best_trigger, dir / "trigger_low.json");
    return r;
  });
  summary.variants.push_back({"low_frequency", summary.low_search.best_trigger, std::nullopt});

  if (config.full_spectrum_control) {
    summary.full_search = run_stage("search-full", [&] {
      auto r = stage_search(config, data.train, true);
      write_trace_csv(r, dir / "sa_trace_full.csv", header);
      save_trigger(r.best_trigger, dir / "trigger_full.json");
      return r;
    });
    summary.variants.push_back({"full_spectrum", summary.full_search->best_trigger, std::nullopt});
  }
  if (config.high_frequency_control) {
    auto t = run_stage("handcraft", [&] {
      auto hf = high_frequency_trigger(data.train.shape(), config.n_bands, config.epsilon);
      save_trigger(hf, dir / "trigger_high.json");
      return hf;
    });
    summary.variants.push_back({"high_frequency", t, std::nullopt});
  }
  if (config.patch_baseline) {
    const Shape& s = data.train.shape();
    // Kept clear of the last rows/columns, which the default network crops away.
    summary.variants.push_back({"patch", {}, square_patch(s, 3, s.height - 6, s.width - 6)});
  }

  for (const Variant& v : summary.variants) {
    const std::string tag = v.name;
    const LabeledDataset poisoned = run_stage("poison:" + tag, [&] { return stage_poison(config, data.train, v); });
    if (v.name == "low_frequency") {
      run_stage("poison:" + tag, [&] {
        write_manifest_csv(config, data.train, poisoned, dir / "poison_manifest.csv");
        return 0;
      });
    }
    const Classifier victim = run_stage("train:" + tag, [&] {
      auto m = stage_train_victim(config, poisoned);
      save_classifier(m, dir / ("victim_" + tag + ".ckpt"));
      return m;
    });
    summary.metrics.push_back(run_stage("evaluate:" + tag, [&] { return stage_evaluate(config, victim, data.test, v); }));
    auto rows = run_stage("defend:" + tag, [&] {
      return stage_defend(config, victim.as_model(), data.test, v, config.defenses);
    });
    summary.robustness.insert(summary.robustness.end(), rows.begin(), rows.end());

    run_stage("strip:" + tag, [&] {
      std::ofstream out(dir / ("strip_" + tag + ".csv"));
      out << header << "\ninput,sample_id,entropy\n";
      const auto m = victim.as_model();
      const auto transform = v.transform();
      const int overlays = std::min<int>(config.strip_overlays, static_cast<int>(data.test.size()));
      std::size_t taken = 0;
      for (std::size_t i = 0; i < data.test.size() && taken < config.strip_samples; ++i) {
        if (data.test.labels[i] == config.target_label) continue;
        const std::uint64_t s = stage_seed(config, "strip") + i;
        out << "clean," << i << "," << fmt(strip_entropy(m, data.test.images[i], data.test.images, overlays,
                                                          config.strip_blend, s))
            << "\n";
        out << "triggered," << i << ","
            << fmt(strip_entropy(m, transform(data.test.images[i]), data.test.images, overlays, config.strip_blend, s))
            << "\n";
        ++taken;
      }
      return 0;
    });
  }

  run_stage("report", [&] {
    write_metrics_csv(config, summary.metrics, dir / "metrics.csv");
    write_robustness_csv(config, summary.robustness, dir / "robustness.csv");
    return 0;
  });

  summary.stealth = run_stage("inspect", [&] {
    const Variant& low = summary.variants.front();
    auto rows = stage_stealth(config, data.train, low);
    write_stealth_csv(config, rows, dir / "stealth_report.csv");

    const double ratio =
        std::min(1.0, static_cast<double>(config.stealth_samples) / static_cast<double>(data.train.size()));
    const auto idx = select_poison_indices(data.train, ratio, stage_seed(config, "stealth"));
    const auto clean = items(data.train, idx);
    std::vector<Image> poisoned;
    for (const Image& im : clean) poisoned.push_back(apply_frequency_trigger(im, low.trigger));
    const Spectrum sc = average_log_spectrum(clean);
    const Spectrum sp = average_log_spectrum(poisoned);
    save_heatmap_pgm(sc, dir / "spectrum_clean.pgm");
    save_heatmap_pgm(sp, dir / "spectrum_poisoned.pgm");
    save_matrix_csv(sc, dir / "spectrum_clean.csv");
    save_matrix_csv(sp, dir / "spectrum_poisoned.csv");
    if (!clean.empty()) {
      const auto d = disparity_map(poisoned.front(), clean.front(), 5.0);
      save_pnm(d.map, dir / "disparity_sample.pgm");
      save_pnm(poisoned.front(), dir / "poisoned_sample.pgm");
      save_pnm(clean.front(), dir / "clean_sample.pgm");
    }
    return rows;
  });
  return summary;
}

std::vector<SweepRow> run_poison_sweep(const ExperimentConfig& config, const FrequencyTrigger& trigger,
                                       const std::vector<double>& ratios) {
  const Datasets data = load_datasets(config);
  std::vector<SweepRow> rows;
  for (double r : ratios) {
    ExperimentConfig c = config;
    c.poison_ratio = r;
    const Variant v{"low_frequency", trigger, std::nullopt};
    const LabeledDataset poisoned = stage_poison(c, data.train, v);
    const Classifier victim = stage_train_victim(c, poisoned);
    const auto m = stage_evaluate(c, victim, data.test, v);
    rows.push_back({r, m.acc, m.asr});
  }
  return rows;
}

}  // namespace lowfreq
