// lowfreq: command-line front end for trigger search, poisoning, training,
// evaluation, defenses and inspection.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lowfreq/errors.hpp"
#include "lowfreq/pipeline.hpp"
#include "lowfreq/random.hpp"
#include "lowfreq/spectral.hpp"

namespace fs = std::filesystem;
using namespace lowfreq;

namespace {

enum Exit { kOk = 0, kUsage = 2, kIo = 3, kValidation = 4, kStage = 5 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "experiment config (JSON)");
  cmd->add_option("--set", c.overrides, "override a setting, e.g. --set trigger.epsilon=0.2")->take_all();
}

ExperimentConfig resolve_config(const Common& c) {
  ExperimentConfig cfg = load_config(c.config, c.overrides);
  if (const char* env = std::getenv("LOWFREQ_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
  cfg.validate();
  return cfg;
}

fs::path in_output(const ExperimentConfig& cfg, const std::string& given, const std::string& fallback) {
  if (!given.empty()) return given;
  fs::create_directories(cfg.output_dir);
  return cfg.output_dir / fallback;
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw UsageError(what + " is required");
  if (!fs::exists(path)) throw UsageError(what + " '" + path + "' does not exist");
}

LabeledDataset load_set(const std::string& images, const std::string& labels, const fs::path& default_images,
                        const fs::path& default_labels, std::size_t cap) {
  if (images.empty() != labels.empty()) throw UsageError("--images and --labels must be given together");
  if (!images.empty()) return load_idx(images, labels).head(cap);
  return load_idx(default_images, default_labels).head(cap);
}

Variant frequency_variant(const std::string& path) {
  require_file(path, "--trigger");
  return Variant{"low_frequency", load_trigger(path), std::nullopt};
}

// Each layer kind checked on a model small enough for finite differences.
std::vector<std::pair<std::string, Classifier>> gradcheck_models() {
  const Shape s{10, 10, 3};
  std::vector<std::pair<std::string, Descriptor>> d = {
      {"conv", {LayerSpec::conv(3, 3, 1), LayerSpec::dense(4), LayerSpec::softmax()}},
      {"conv_stride2", {LayerSpec::conv(3, 3, 2), LayerSpec::dense(4), LayerSpec::softmax()}},
      {"relu", {LayerSpec::dense(6), LayerSpec::relu(), LayerSpec::dense(4), LayerSpec::softmax()}},
      {"maxpool", {LayerSpec::conv(2, 3, 1), LayerSpec::maxpool(2), LayerSpec::dense(4), LayerSpec::softmax()}},
      {"dense", {LayerSpec::dense(4), LayerSpec::softmax()}},
      {"default", default_descriptor(4)},
  };
  std::vector<std::pair<std::string, Classifier>> out;
  std::uint64_t seed = 11;
  for (auto& [name, desc] : d) out.emplace_back(name, Classifier::init(desc, s, 4, seed++));
  return out;
}

Image random_image(const Shape& s, std::uint64_t seed) {
  Rng rng(seed);
  Grid g(s);
  for (double& v : g.values) v = rng.uniform();
  return Image(std::move(g));
}

int cmd_run(const Common& c) {
  const ExperimentConfig cfg = resolve_config(c);
  const ExperimentSummary s = run_experiment(cfg);
  for (const auto& m : s.metrics) {
    std::printf("%-16s ACC=%.4f ASR=%.4f\n", m.name.c_str(), m.acc, m.asr);
  }
  std::printf("artifacts in %s\n", cfg.output_dir.string().c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-frequency trigger toolkit"};
  app.require_subcommand(1);

  Common common;
  std::string trigger_path, model_path, manifest_path, out_path, trace_path, surrogate_path;
  std::string images, labels, other_images, other_labels;
  std::string defense_kind = "none";
  int window = 3, quality = 90, sample = 0;
  double sigma = 0.0;
  bool full_spectrum = false;
  std::vector<double> ratios;

  auto* run = app.add_subcommand("run", "run every stage and write all reports");
  add_common(run, common);

  auto* search = app.add_subcommand("search", "simulated-annealing trigger search only");
  add_common(search, common);
  search->add_flag("--full-spectrum", full_spectrum, "search the whole spectrum instead of the low region");
  search->add_option("--out", out_path, "trigger file to write");
  search->add_option("--trace", trace_path, "trace CSV to write");
  search->add_option("--surrogate", surrogate_path, "surrogate checkpoint to write");

  auto* poison = app.add_subcommand("poison", "poison the training set with a trigger");
  add_common(poison, common);
  poison->add_option("--trigger", trigger_path, "trigger file")->required();
  poison->add_option("--manifest", manifest_path, "manifest CSV to write");
  poison->add_option("--images-out", images, "poisoned IDX images to write (8-bit)");
  poison->add_option("--labels-out", labels, "poisoned IDX labels to write");

  auto* train_cmd = app.add_subcommand("train", "train a victim on clean or poisoned data");
  add_common(train_cmd, common);
  train_cmd->add_option("--trigger", trigger_path, "trigger to poison with (omit for clean training)");
  train_cmd->add_option("--manifest", manifest_path, "indices to poison (default: the configured selection)");
  train_cmd->add_option("--out", out_path, "checkpoint to write");

  auto* evaluate = app.add_subcommand("evaluate", "clean accuracy and attack success rate");
  add_common(evaluate, common);
  evaluate->add_option("--model", model_path, "checkpoint")->required();
  evaluate->add_option("--trigger", trigger_path, "trigger file")->required();
  evaluate->add_option("--images", images, "test IDX images (default: configured test set)");
  evaluate->add_option("--labels", labels, "test IDX labels");
  evaluate->add_option("--out", out_path, "metrics CSV to write");

  auto* defend = app.add_subcommand("defend", "ACC and ASR under one input-preprocessing defense");
  add_common(defend, common);
  defend->add_option("--model", model_path, "checkpoint")->required();
  defend->add_option("--trigger", trigger_path, "trigger file")->required();
  defend->add_option("--defense", defense_kind, "none | gaussian | wiener | jpeg");
  defend->add_option("--window", window, "filter window (odd, >= 3)");
  defend->add_option("--sigma", sigma, "gaussian sigma (0 picks the window default)");
  defend->add_option("--quality", quality, "jpeg quality 1..100");
  defend->add_option("--images", images, "test IDX images (default: configured test set)");
  defend->add_option("--labels", labels, "test IDX labels");
  defend->add_option("--out", out_path, "robustness CSV to write");

  auto* inspect = app.add_subcommand("inspect", "averaged spectra and spectral disparity");
  add_common(inspect, common);
  inspect->add_option("--images", images, "first IDX image set (default: configured train set)");
  inspect->add_option("--labels", labels, "labels of the first set");
  inspect->add_option("--other-images", other_images, "second IDX image set");
  inspect->add_option("--other-labels", other_labels, "labels of the second set");
  inspect->add_option("--trigger", trigger_path, "build the second set by applying this trigger");
  inspect->add_option("--sample", sample, "index of the image used for the amplified disparity map");
  inspect->add_option("--out-dir", out_path, "directory for the maps");

  auto* strip = app.add_subcommand("strip", "STRIP entropy of clean and triggered test inputs");
  add_common(strip, common);
  strip->add_option("--model", model_path, "checkpoint")->required();
  strip->add_option("--trigger", trigger_path, "trigger file")->required();
  strip->add_option("--out", out_path, "entropy CSV to write");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every layer type");
  gradcheck->add_option("--out", out_path, "CSV to write (default: stdout only)");

  auto* sweep = app.add_subcommand("sweep", "retrain over several poison ratios");
  add_common(sweep, common);
  sweep->add_option("--trigger", trigger_path, "trigger file")->required();
  sweep->add_option("--ratios", ratios, "poison ratios")->required();
  sweep->add_option("--out", out_path, "sweep CSV to write");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(common);

    if (*gradcheck) {
      std::ostringstream csv;
      csv << "layer_set,max_relative_error\n";
      int status = kOk;
      for (auto& [name, model] : gradcheck_models()) {
        const Image x = random_image(model.input_shape(), 3);
        const double err = gradient_check(model, x, 1);
        csv << name << "," << fmt(err) << "\n";
        std::printf("%-14s %.3e %s\n", name.c_str(), err, err <= 1e-4 ? "ok" : "FAIL");
        if (err > 1e-4) status = kStage;
      }
      if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw IoError("cannot create " + out_path);
        out << csv.str();
      }
      return status;
    }

    const ExperimentConfig cfg = resolve_config(common);

    if (*search) {
      for (const auto& p : {cfg.train_images, cfg.train_labels}) require_file(p.string(), "training data");
      const LabeledDataset train = load_idx(cfg.train_images, cfg.train_labels).head(cfg.train_cap);
      Classifier surrogate = Classifier::init(resolve_descriptor(cfg, train.num_classes), train.shape(),
                                              train.num_classes, 0);
      const SAResult r = stage_search(cfg, train, full_spectrum, &surrogate);
      const std::string tag = full_spectrum ? "full" : "low";
      save_trigger(r.best_trigger, in_output(cfg, out_path, "trigger_" + tag + ".json"));
      write_trace_csv(r, in_output(cfg, trace_path, "sa_trace_" + tag + ".csv"), report_header(cfg));
      save_classifier(surrogate, in_output(cfg, surrogate_path, "surrogate.ckpt"));
      std::printf("best total %.6g (O=%.6g, P=%.6g) after %d evaluations\n", r.best_objective.total,
                  r.best_objective.backdoor_loss, r.best_objective.penalty, r.evaluations);
      return kOk;
    }

    if (*poison) {
      const Variant v = frequency_variant(trigger_path);
      const LabeledDataset train = load_idx(cfg.train_images, cfg.train_labels).head(cfg.train_cap);
      const LabeledDataset poisoned = stage_poison(cfg, train, v);
      write_manifest_csv(cfg, train, poisoned, in_output(cfg, manifest_path, "poison_manifest.csv"));
      if (images.empty() != labels.empty()) throw UsageError("--images-out and --labels-out go together");
      if (!images.empty()) save_idx(poisoned, images, labels);
      std::printf("poisoned %zu of %zu images\n", poisoned.poisoned_count(), poisoned.size());
      return kOk;
    }

    if (*train_cmd) {
      LabeledDataset train = load_idx(cfg.train_images, cfg.train_labels).head(cfg.train_cap);
      if (!trigger_path.empty()) {
        const Variant v = frequency_variant(trigger_path);
        if (manifest_path.empty()) {
          train = stage_poison(cfg, train, v);
        } else {
          require_file(manifest_path, "--manifest");
          train = poison_dataset(train, v.trigger, read_manifest_indices(manifest_path), cfg.target_label);
        }
      } else if (!manifest_path.empty()) {
        throw UsageError("--manifest needs --trigger");
      }
      const Classifier m = stage_train_victim(cfg, train);
      save_classifier(m, in_output(cfg, out_path, "victim.ckpt"));
      return kOk;
    }

    if (*evaluate || *defend || *strip) {
      require_file(model_path, "--model");
      const Classifier model = load_classifier(model_path);
      const Variant v = frequency_variant(trigger_path);
      const LabeledDataset test = load_set(images, labels, cfg.test_images, cfg.test_labels, cfg.test_cap);
      if (*evaluate) {
        const VariantMetrics m = stage_evaluate(cfg, model, test, v);
        write_metrics_csv(cfg, {m}, in_output(cfg, out_path, "metrics.csv"));
        std::printf("ACC=%.4f ASR=%.4f\n", m.acc, m.asr);
      } else if (*defend) {
        const DefenseSpec d = parse_defense(defense_kind, window, sigma, quality);
        const auto rows = stage_defend(cfg, model.as_model(), test, v, {d});
        write_robustness_csv(cfg, rows, in_output(cfg, out_path, "robustness.csv"));
        std::printf("%s(%s) ACC=%.4f ASR=%.4f\n", rows[0].defense.c_str(), rows[0].param.c_str(), rows[0].acc,
                    rows[0].asr);
      } else {
        const fs::path path = in_output(cfg, out_path, "strip.csv");
        std::ofstream out(path);
        if (!out) throw IoError("cannot create " + path.string());
        out << report_header(cfg) << "\ninput,sample_id,entropy\n";
        const auto m = model.as_model();
        const auto transform = v.transform();
        const int overlays = std::min<int>(cfg.strip_overlays, static_cast<int>(test.size()));
        std::size_t taken = 0;
        for (std::size_t i = 0; i < test.size() && taken < cfg.strip_samples; ++i) {
          if (test.labels[i] == cfg.target_label) continue;
          const std::uint64_t s = stage_seed(cfg, "strip") + i;
          out << "clean," << i << "," << fmt(strip_entropy(m, test.images[i], test.images, overlays, cfg.strip_blend, s))
              << "\n";
          out << "triggered," << i << ","
              << fmt(strip_entropy(m, transform(test.images[i]), test.images, overlays, cfg.strip_blend, s)) << "\n";
          ++taken;
        }
      }
      return kOk;
    }

    if (*inspect) {
      const LabeledDataset a = load_set(images, labels, cfg.train_images, cfg.train_labels, cfg.train_cap);
      LabeledDataset b;
      if (!other_images.empty()) {
        if (!trigger_path.empty()) throw UsageError("give either --other-images or --trigger, not both");
        b = load_set(other_images, other_labels, {}, {}, cfg.train_cap);
      } else if (!trigger_path.empty()) {
        const FrequencyTrigger t = frequency_variant(trigger_path).trigger;
        b = a;
        for (Image& im : b.images) im = apply_frequency_trigger(im, t);
      } else {
        throw UsageError("inspect needs --other-images or --trigger");
      }
      if (a.size() != b.size() || a.shape() != b.shape()) {
        throw ConsistencyError("the two image sets differ in size or shape");
      }
      const fs::path dir = out_path.empty() ? cfg.output_dir : fs::path(out_path);
      fs::create_directories(dir);
      Grid mean_abs(a.shape());
      for (std::size_t i = 0; i < a.size(); ++i) {
        const Spectrum d = spectrum_disparity(b.images[i], a.images[i]);
        for (std::size_t k = 0; k < d.values.size(); ++k) {
          mean_abs.values[k] += std::abs(d.values[k]) / static_cast<double>(a.size());
        }
      }
      save_matrix_csv(mean_abs, dir / "disparity_mean.csv");
      save_heatmap_pgm(mean_abs, dir / "disparity_mean.pgm");
      const Spectrum sa = average_log_spectrum(a.images);
      const Spectrum sb = average_log_spectrum(b.images);
      save_heatmap_pgm(sa, dir / "spectrum_a.pgm");
      save_heatmap_pgm(sb, dir / "spectrum_b.pgm");
      save_matrix_csv(sa, dir / "spectrum_a.csv");
      save_matrix_csv(sb, dir / "spectrum_b.csv");
      if (sample < 0 || static_cast<std::size_t>(sample) >= a.size()) throw UsageError("--sample out of range");
      const auto dm = disparity_map(b.images[sample], a.images[sample]);
      save_pnm(dm.map, dir / "disparity_sample.pgm");
      double peak = 0.0;
      for (double v : mean_abs.values) peak = std::max(peak, v);
      std::printf("max mean |disparity| %.6g, sample l2 %.6g\n", peak, dm.l2);
      return kOk;
    }

    if (*sweep) {
      const FrequencyTrigger t = frequency_variant(trigger_path).trigger;
      const auto rows = run_poison_sweep(cfg, t, ratios);
      write_sweep_csv(cfg, rows, in_output(cfg, out_path, "poison_sweep.csv"));
      for (const auto& r : rows) std::printf("rho=%.4f ACC=%.4f ASR=%.4f\n", r.ratio, r.acc, r.asr);
      return kOk;
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const StageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kStage;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kIo;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kValidation;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kValidation;
  } catch (const ConsistencyError& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kStage;
  }
  return kUsage;
}
