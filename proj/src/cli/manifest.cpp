#include "spatial/cli/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "spatial/cli/plot.hpp"
#include "spatial/train/trainer.hpp"

namespace spatial::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

eval::ProbeConfig probe_from_json(const json& j) {
  eval::ProbeConfig p;
  static const std::set<std::string> known{"n_patches",  "epochs",      "learning_rate", "batch_size",
                                           "affine",     "train_count", "test_count"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) config_fail("unknown probe config key: " + key);
    (void)value;
  }
  if (j.contains("n_patches")) p.n_patches = j.at("n_patches").get<int>();
  if (j.contains("epochs")) p.epochs = j.at("epochs").get<int>();
  if (j.contains("learning_rate")) p.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("batch_size")) p.batch_size = j.at("batch_size").get<int>();
  if (j.contains("affine")) p.affine_augment = j.at("affine").get<bool>();
  if (j.contains("train_count")) p.train_count = j.at("train_count").get<int>();
  if (j.contains("test_count")) p.test_count = j.at("test_count").get<int>();
  return p;
}

}  // namespace

ExperimentManifest ExperimentManifest::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    config_fail(std::string("manifest parse error: ") + e.what());
  }
  static const std::set<std::string> known{"name", "task", "base", "probe", "seeds",
                                           "sweep", "output_dir", "reference"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) config_fail("unknown manifest key: " + key);
    (void)value;
  }
  ExperimentManifest m;
  m.name = j.value("name", "experiment");
  m.task = j.value("task", "");
  m.base = train::RunConfig::from_json_text(j.value("base", json::object()).dump());
  if (m.task.empty()) m.task = m.base.dataset;
  m.probe = probe_from_json(j.value("probe", json::object()));
  if (j.contains("seeds")) m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("sweep")) {
    const auto& sw = j.at("sweep");
    m.axis = sw.at("axis").get<std::string>();
    static const std::set<std::string> axes{"patch_size_px", "patches_per_image", "n_patches", "patch_mode"};
    if (!axes.count(m.axis)) config_fail("unknown sweep axis: " + m.axis);
    for (const auto& v : sw.at("values")) {
      if (v.is_string())
        m.values.push_back(v.get<std::string>());
      else
        m.values.push_back(json(v).dump());
    }
  }
  if (j.contains("output_dir")) m.output_dir = j.at("output_dir").get<std::string>();
  if (m.output_dir.empty()) m.output_dir = "runs/" + m.name;
  if (j.contains("reference")) m.reference_json = j.at("reference").dump(2);
  return m;
}

ExperimentManifest ExperimentManifest::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) data_fail("cannot open manifest: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::uint64_t ExperimentManifest::hash() const {
  json j;
  j["name"] = name;
  j["task"] = task;
  j["base"] = json::parse(base.canonical_json());
  j["probe"] = {{"n_patches", probe.n_patches}, {"epochs", probe.epochs},
                {"learning_rate", probe.learning_rate}, {"batch_size", probe.batch_size},
                {"affine", probe.affine_augment}, {"train_count", probe.train_count},
                {"test_count", probe.test_count}};
  j["seeds"] = seeds;
  j["axis"] = axis;
  j["values"] = values;
  return fnv1a(j.dump());
}

std::vector<SweepPoint> expand_manifest(const ExperimentManifest& m) {
  std::vector<SweepPoint> points;
  if (m.axis.empty()) {
    points.push_back({"base", "", "", m.base, m.probe});
    return points;
  }
  for (const auto& v : m.values) {
    SweepPoint p;
    p.axis = m.axis;
    p.value = v;
    p.run = m.base;
    p.probe = m.probe;
    if (m.axis == "patch_size_px")
      p.run.patch_size_px = std::stoi(v);
    else if (m.axis == "patches_per_image")
      p.run.patches_per_image = std::stoi(v);
    else if (m.axis == "n_patches")
      p.probe.n_patches = std::stoi(v);
    else if (m.axis == "patch_mode")
      p.run.patch_mode = train::patch_mode_from_name(v);
    else
      config_fail("unknown sweep axis: " + m.axis);
    p.label = m.axis + "=" + v;
    // every point must expand to a valid config
    p.run.validate();
    points.push_back(std::move(p));
  }
  return points;
}

namespace {

struct PointOutcome {
  SweepPoint point;
  eval::EvalResult result;
  bool ok = false;
  std::string error;
};

std::string sanitize(std::string s) {
  for (auto& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
  return s;
}

void write_outputs(const ExperimentManifest& m, const std::vector<PointOutcome>& outcomes,
                   ManifestRunResult& out) {
  const std::string stamp = "manifest " + hex64(m.hash());
  fs::create_directories(m.output_dir);
  fs::create_directories(fs::path(m.output_dir) / "plots");
  const std::string csv_path = (fs::path(m.output_dir) / "results.csv").string();
  std::ofstream csv(csv_path);
  csv << "# " << stamp << "\n";
  csv << "manifest,point,axis,value,seed,train_accuracy,test_accuracy,ok\n";
  for (const auto& o : outcomes) {
    if (!o.ok) {
      csv << hex64(m.hash()) << "," << o.point.label << "," << o.point.axis << "," << o.point.value
          << ",,,," << "0\n";
      continue;
    }
    for (const auto& s : o.result.per_seed)
      csv << hex64(m.hash()) << "," << o.point.label << "," << o.point.axis << "," << o.point.value << ","
          << s.seed << "," << s.train_accuracy << "," << s.test_accuracy << "," << (s.ok ? 1 : 0) << "\n";
  }
  csv.close();
  out.csv_path = csv_path;

  // numeric axes get a min/max-whisker line plot
  PlotSeries series;
  series.name = m.name;
  bool numeric = !m.axis.empty() && m.axis != "patch_mode";
  if (numeric) {
    for (const auto& o : outcomes) {
      if (!o.ok || o.result.per_seed.empty()) continue;
      double lo = 1e99, hi = -1e99;
      for (const auto& s : o.result.per_seed) {
        lo = std::min(lo, s.test_accuracy);
        hi = std::max(hi, s.test_accuracy);
      }
      series.x.push_back(std::stod(o.point.value));
      series.mean.push_back(o.result.mean_test);
      series.lo.push_back(lo);
      series.hi.push_back(hi);
    }
    if (!series.x.empty()) {
      const std::string plot_path = (fs::path(m.output_dir) / "plots" / (sanitize(m.axis) + ".svg")).string();
      write_svg_plot(plot_path, m.name, m.axis, "test accuracy (%)", {series}, stamp);
      out.plot_paths.push_back(plot_path);
    }
  }
}

}  // namespace

ManifestRunResult run_manifest(const ExperimentManifest& m, std::ostream& log) {
  const auto points = expand_manifest(m);
  ManifestRunResult out;
  out.points_total = static_cast<int>(points.size());
  std::vector<PointOutcome> outcomes;
  {
    std::ofstream mf(fs::path(m.output_dir).empty() ? "manifest.json"
                                                    : (fs::create_directories(m.output_dir),
                                                       (fs::path(m.output_dir) / "manifest.json").string()));
    mf << "// manifest " << hex64(m.hash()) << "\n";
  }
  for (const auto& p : points) {
    PointOutcome o;
    o.point = p;
    try {
      train::RunConfig cfg = p.run;
      // pretraining is cached per config hash so probe-side sweeps reuse it
      cfg.output_dir = (fs::path(m.output_dir) / "pretrain" / hex64(cfg.hash())).string();
      fs::create_directories(cfg.output_dir);
      std::ofstream(fs::path(cfg.output_dir) / "manifest_hash.txt") << hex64(m.hash()) << "\n";
      train::Trainer trainer(cfg);
      const auto stats = trainer.run();
      auto ck = model::Checkpoint::load(stats.final_checkpoint);
      const auto task = data::task_from_name(m.task);
      eval::ProbeConfig probe = p.probe;
      if (ck.patch_mode == patching::PatchMode::kAdditive) probe.n_patches = 0;
      o.result = eval::linear_probe(ck, task, probe,
                                    cfg.data_root.empty() ? std::getenv("SPATIAL_DATA_ROOT") : cfg.data_root,
                                    m.seeds);
      o.ok = true;
      const auto dir = fs::path(m.output_dir) / "points" / sanitize(p.label);
      fs::create_directories(dir);
      std::ofstream rj(dir / "result.json");
      rj << "// manifest " << hex64(m.hash()) << "\n" << o.result.to_json() << "\n";
      log << "[point] " << p.label << " mean test acc " << o.result.mean_test << "%\n";
    } catch (const std::exception& e) {
      o.ok = false;
      o.error = e.what();
      ++out.points_failed;
      log << "[point] " << p.label << " FAILED: " << e.what() << "\n";
    }
    outcomes.push_back(std::move(o));
  }
  write_outputs(m, outcomes, out);
  return out;
}

ManifestRunResult report_manifest(const ExperimentManifest& m, std::ostream& log) {
  const auto points = expand_manifest(m);
  ManifestRunResult out;
  out.points_total = static_cast<int>(points.size());
  std::vector<PointOutcome> outcomes;
  for (const auto& p : points) {
    PointOutcome o;
    o.point = p;
    const auto path = fs::path(m.output_dir) / "points" / sanitize(p.label) / "result.json";
    if (fs::exists(path)) {
      std::ifstream in(path);
      std::string line;
      std::getline(in, line);  // comment stamp
      std::stringstream ss;
      ss << in.rdbuf();
      try {
        const json j = json::parse(ss.str());
        for (const auto& s : j.at("per_seed")) {
          eval::SeedResult sr;
          sr.seed = s.at("seed").get<std::uint64_t>();
          sr.train_accuracy = s.at("train_accuracy").get<double>();
          sr.test_accuracy = s.at("test_accuracy").get<double>();
          sr.ok = s.at("ok").get<bool>();
          o.result.per_seed.push_back(sr);
        }
        o.result.mean_test = j.at("mean_test_accuracy").get<double>();
        o.result.std_test = j.at("std_test_accuracy").get<double>();
        o.result.mean_train = j.at("mean_train_accuracy").get<double>();
        o.ok = true;
      } catch (const std::exception& e) {
        o.ok = false;
        o.error = e.what();
        ++out.points_failed;
      }
    } else {
      o.ok = false;
      o.error = "missing result";
      ++out.points_failed;
      log << "[report] missing point output: " << p.label << "\n";
    }
    outcomes.push_back(std::move(o));
  }
  write_outputs(m, outcomes, out);
  log << "[report] " << (out.points_total - out.points_failed) << "/" << out.points_total
      << " points assembled\n";
  return out;
}

}  // namespace spatial::cli
