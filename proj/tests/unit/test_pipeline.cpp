#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lowfreq/errors.hpp"
#include "lowfreq/pipeline.hpp"

namespace fs = std::filesystem;
using namespace lowfreq;

namespace {

std::vector<std::size_t> sorted(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> data_rows(const fs::path& csv) {
  std::istringstream in(slurp(csv));
  std::vector<std::string> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    rows.push_back(line);
  }
  return rows;
}

// A scratch directory with small IDX subsets and a fast config.
struct Workspace {
  fs::path dir;
  fs::path config;

  explicit Workspace(const std::string& tag, std::size_t n_train = 60, std::size_t n_test = 30) {
    dir = fs::temp_directory_path() / ("lowfreq_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path src = LOWFREQ_DATA_DIR;
    save_idx(load_idx(src / "train-images-idx3-ubyte", src / "train-labels-idx1-ubyte").head(n_train),
             dir / "train-images", dir / "train-labels");
    save_idx(load_idx(src / "t10k-images-idx3-ubyte", src / "t10k-labels-idx1-ubyte").head(n_test),
             dir / "test-images", dir / "test-labels");
    nlohmann::json j = {
        {"data",
         {{"train_images", "train-images"},
          {"train_labels", "train-labels"},
          {"test_images", "test-images"},
          {"test_labels", "test-labels"}}},
        {"poison", {{"ratio", 0.1}}},
        {"victim", {{"epochs", 1}, {"batch_size", 8}}},
        {"surrogate", {{"batch_size", 8}}},
        {"sa", {{"initial_temperature", 1.0}, {"final_temperature", 0.5}, {"alpha", 0.5}, {"iters_per_temp", 2}}},
        {"stealth", {{"samples", 5}}},
        {"strip", {{"samples", 2}, {"overlays", 3}}},
        {"output_dir", (dir / "out").string()},
    };
    config = dir / "config.json";
    std::ofstream(config) << j.dump(2);
  }
  ~Workspace() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }

  ExperimentConfig load(std::vector<std::string> overrides = {}) const {
    ExperimentConfig c = load_config(config, overrides);
    c.validate();
    return c;
  }
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LOWFREQ_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config loading, overrides and hashing") {
  Workspace ws("config");
  const ExperimentConfig base = ws.load();
  CHECK(base.train_images == (ws.dir / "train-images").lexically_normal());
  CHECK(base.victim.epochs == 1);
  CHECK(base.epsilon == 0.1);
  CHECK(base.target_label == 7);
  CHECK(base.defenses.size() == 5);

  const ExperimentConfig over = ws.load({"trigger.epsilon=0.2", "seed=9"});
  CHECK(over.epsilon == 0.2);
  CHECK(over.seed == 9);
  CHECK(config_hash(over) != config_hash(base));

  ExperimentConfig moved = base;
  moved.output_dir = ws.dir / "elsewhere";
  CHECK(config_hash(moved) == config_hash(base));
  CHECK(report_header(base) == "# config_hash=" + config_hash(base) + " seed=1");

  const ExperimentConfig round = ExperimentConfig::from_json(base.to_json());
  CHECK(round.to_json() == base.to_json());

  CHECK(stage_seed(base, "poison") != stage_seed(base, "victim-train"));
  CHECK(stage_seed(base, "poison") == stage_seed(ws.load(), "poison"));

  CHECK_THROWS_AS(ws.load({"trigger.epsilon=-1"}), ConfigError);
  CHECK_THROWS_AS(ws.load({"poison.ratio=1.5"}), ConfigError);
  CHECK_THROWS_AS(ws.load({"data.train_images=\"/nonexistent/file\""}), ConfigError);
  CHECK_THROWS_AS(ws.load({"not_an_assignment"}), ConfigError);
  CHECK_THROWS_AS(load_config(ws.dir / "missing.json"), IoError);
}

TEST_CASE("minimal run completes with a single trace entry") {
  Workspace ws("smoke", 10, 10);
  ExperimentConfig cfg = ws.load({"sa.iters_per_temp=0", "stealth.samples=3"});
  cfg.full_spectrum_control = false;
  cfg.high_frequency_control = false;
  cfg.patch_baseline = false;
  const ExperimentSummary s = run_experiment(cfg);
  CHECK(s.low_search.trace.size() == 1);
  REQUIRE(s.metrics.size() == 1);
  CHECK(s.metrics[0].name == "low_frequency");
  CHECK(s.metrics[0].acc >= 0.0);
  CHECK(s.metrics[0].acc <= 1.0);
  CHECK(s.metrics[0].asr >= 0.0);
  CHECK(s.metrics[0].asr <= 1.0);
  for (const char* f : {"surrogate.ckpt", "sa_trace_low.csv", "trigger_low.json", "poison_manifest.csv",
                        "victim_low_frequency.ckpt", "metrics.csv", "stealth_report.csv", "robustness.csv",
                        "spectrum_clean.pgm", "spectrum_poisoned.pgm"}) {
    CHECK_MESSAGE(fs::exists(cfg.output_dir / f), f);
  }
  for (const char* f : {"sa_trace_low.csv", "metrics.csv", "stealth_report.csv", "robustness.csv",
                        "poison_manifest.csv"}) {
    const std::string text = slurp(cfg.output_dir / f);
    CHECK(text.rfind(report_header(cfg) + "\n", 0) == 0);
  }
  CHECK(data_rows(cfg.output_dir / "sa_trace_low.csv").size() == 1);
}

TEST_CASE("report rows cover every variant and defense") {
  Workspace ws("rows");
  const ExperimentConfig cfg = ws.load();
  const ExperimentSummary s = run_experiment(cfg);

  const std::vector<std::string> names = {"low_frequency", "full_spectrum", "high_frequency", "patch"};
  REQUIRE(s.metrics.size() == names.size());
  for (std::size_t i = 0; i < names.size(); ++i) CHECK(s.metrics[i].name == names[i]);
  CHECK(s.full_search.has_value());

  const auto rows = data_rows(cfg.output_dir / "robustness.csv");
  CHECK(rows.size() == names.size() * cfg.defenses.size());
  CHECK(s.robustness.size() == rows.size());
  for (const auto& v : names) {
    for (const auto& d : cfg.defenses) {
      int hits = 0;
      for (const auto& r : s.robustness) hits += r.variant == v && r.defense == d.name() && r.param == d.param();
      CHECK_MESSAGE(hits == 1, v << " " << d.name() << " " << d.param());
    }
  }
  const auto metric_rows = data_rows(cfg.output_dir / "metrics.csv");
  REQUIRE(metric_rows.size() == names.size());
  CHECK(metric_rows[0].rfind("low_frequency,", 0) == 0);
  CHECK(metric_rows[1].rfind("full_spectrum,", 0) == 0);

  CHECK(data_rows(cfg.output_dir / "stealth_report.csv").size() == cfg.stealth_samples + 1);
  for (const auto& r : s.stealth) CHECK(r.freq_l2 <= s.low_search.best_trigger.delta_norm() + 1e-6);

  const auto manifest = read_manifest_indices(cfg.output_dir / "poison_manifest.csv");
  CHECK(manifest.size() == 6);
  const Datasets data = load_datasets(cfg);
  CHECK(manifest == sorted(stage_poison_indices(cfg, data.train)));
}

TEST_CASE("two runs with one config are byte-identical") {
  Workspace ws("repro");
  ExperimentConfig a = ws.load();
  a.output_dir = ws.dir / "run_a";
  ExperimentConfig b = ws.load();
  b.output_dir = ws.dir / "run_b";
  b.sa.workers = 1;
  run_experiment(a);
  run_experiment(b);
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(a.output_dir)) {
    const std::string name = entry.path().filename().string();
    if (name == "config_effective.json") continue;
    REQUIRE_MESSAGE(fs::exists(b.output_dir / name), name);
    CHECK_MESSAGE(slurp(entry.path()) == slurp(b.output_dir / name), name);
    ++compared;
  }
  CHECK(compared >= 15);
}

TEST_CASE("command line front end") {
  Workspace ws("cli");
  const std::string cfg = "-c " + ws.config.string();
  const fs::path out = ws.dir / "out";
  const ExperimentConfig config = ws.load();

  SUBCASE("usage and validation errors") {
    CHECK(run_cli("") == 2);
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("evaluate " + cfg) == 2);
    CHECK(run_cli("evaluate " + cfg + " --model " + (ws.dir / "none.ckpt").string() + " --trigger x.json") == 2);
    CHECK(run_cli("search -c " + (ws.dir / "absent.json").string()) == 3);
    CHECK(run_cli("search " + cfg + " --set trigger.epsilon=-2") == 4);
    CHECK(run_cli("gradcheck") == 0);
  }

  SUBCASE("defend matches the library call") {
    const FrequencyTrigger t = random_trigger({12, 12}, 1, 3, 0.1, 5);
    save_trigger(t, ws.dir / "t.json");
    const Datasets data = load_datasets(config);
    const Classifier model = Classifier::init(default_descriptor(10), {28, 28, 1}, 10, 3);
    save_classifier(model, ws.dir / "m.ckpt");
    REQUIRE(run_cli("defend " + cfg + " --model " + (ws.dir / "m.ckpt").string() + " --trigger " +
                    (ws.dir / "t.json").string() + " --defense jpeg --quality 50 --out " +
                    (ws.dir / "rob.csv").string()) == 0);
    const auto rows = data_rows(ws.dir / "rob.csv");
    REQUIRE(rows.size() == 1);
    const auto direct =
        stage_defend(config, model.as_model(), data.test, Variant{"low_frequency", t, std::nullopt},
                     {parse_defense("jpeg", 3, 0.0, 50)});
    REQUIRE(direct.size() == 1);
    CHECK(rows[0] == direct[0].variant + "," + direct[0].defense + "," + direct[0].param + "," +
                         fmt(direct[0].acc) + "," + fmt(direct[0].asr));
  }

  SUBCASE("evaluate with a model that always answers the target") {
    const Descriptor d = {LayerSpec::dense(10), LayerSpec::softmax()};
    LayerParams dense{std::vector<double>(28 * 28 * 10, 0.0), std::vector<double>(10, 0.0)};
    dense.bias[7] = 20.0;
    const Classifier stub = Classifier::from_parts(d, {28, 28, 1}, 10, {dense, LayerParams{}});
    save_classifier(stub, ws.dir / "stub.ckpt");
    save_trigger(random_trigger({12, 12}, 1, 3, 0.1, 1), ws.dir / "t.json");
    REQUIRE(run_cli("evaluate " + cfg + " --model " + (ws.dir / "stub.ckpt").string() + " --trigger " +
                    (ws.dir / "t.json").string() + " --out " + (ws.dir / "m.csv").string()) == 0);
    const auto rows = data_rows(ws.dir / "m.csv");
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].substr(rows[0].rfind(',') + 1) == "1");
  }

  SUBCASE("inspect on identical sets gives a zero map") {
    const std::string set = " --images " + (ws.dir / "train-images").string() + " --labels " +
                            (ws.dir / "train-labels").string();
    const std::string other = " --other-images " + (ws.dir / "train-images").string() + " --other-labels " +
                              (ws.dir / "train-labels").string();
    REQUIRE(run_cli("inspect " + cfg + set + other + " --out-dir " + (ws.dir / "insp").string()) == 0);
    std::istringstream in(slurp(ws.dir / "insp" / "disparity_mean.csv"));
    std::string cell;
    int cells = 0;
    bool all_zero = true;
    while (std::getline(in, cell, ',')) {
      std::istringstream line(cell);
      std::string tok;
      while (line >> tok) {
        ++cells;
        all_zero = all_zero && std::stod(tok) == 0.0;
      }
    }
    CHECK(cells == 28 * 28);
    CHECK(all_zero);
    const Image map = load_pnm(ws.dir / "insp" / "disparity_sample.pgm");
    for (double v : map.pixels()) CHECK(v == 0.0);
  }

  SUBCASE("stages chained through files agree with the library") {
    REQUIRE(run_cli("search " + cfg + " --out " + (ws.dir / "s.json").string()) == 0);
    const Datasets data = load_datasets(config);
    const SAResult direct = stage_search(config, data.train, false);
    CHECK(load_trigger(ws.dir / "s.json") == direct.best_trigger);
    REQUIRE(run_cli("poison " + cfg + " --trigger " + (ws.dir / "s.json").string() + " --manifest " +
                    (ws.dir / "man.csv").string()) == 0);
    CHECK(read_manifest_indices(ws.dir / "man.csv") == sorted(stage_poison_indices(config, data.train)));
    CHECK(fs::exists(out / "sa_trace_low.csv"));
  }
}
