#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "spatial/cli/manifest.hpp"
#include "spatial/cli/plot.hpp"
#include "spatial/agg/aggregation.hpp"
#include "spatial/cli/verify.hpp"
#include "spatial/data/dataset.hpp"

using namespace spatial;
using namespace spatial::cli;
namespace fs = std::filesystem;

TEST_CASE("verify-pairs: worked anchors agree across formula, enumeration and aggregation") {
  auto r = verify_pairs(64, 4, 3);
  CHECK(r.match);
  CHECK(r.formula_total == 960);
  CHECK(r.enumerated_patch == 192);
  r = verify_pairs(64, 4, 2);
  CHECK(r.match);
  CHECK(r.formula_total == 832);
  r = verify_pairs(4, 2, 0);
  CHECK(r.match);
  CHECK(r.formula_total == 8);
}

TEST_CASE("dump-pairs CSV is deterministic and carries targets in range") {
  const auto a = dump_pairs_csv(2, 2, 3, 9);
  const auto b = dump_pairs_csv(2, 2, 3, 9);
  CHECK(a == b);
  CHECK(a.find("IMAGE_POS") != std::string::npos);
  CHECK(a.find("PATCH") != std::string::npos);
  std::istringstream in(a);
  std::string line;
  std::getline(in, line);  // header
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == spatial::agg::total_pair_count(2, 2, 3));
}

TEST_CASE("manifest: parsing, expansion, unknown keys, empty sweep") {
  const std::string text = R"({
    "name": "sweep_test",
    "task": "cifar10",
    "base": {"dataset": "cifar10", "epochs": 1, "images_per_batch": 4, "augmentations": 2},
    "probe": {"n_patches": 9, "epochs": 2},
    "seeds": [1, 2],
    "sweep": {"axis": "patch_size_px", "values": [12, 13, 14]},
    "output_dir": "/tmp/spatial_manifest_test"
  })";
  const auto m = ExperimentManifest::from_json_text(text);
  CHECK(m.name == "sweep_test");
  CHECK(m.seeds.size() == 2);
  const auto points = expand_manifest(m);
  REQUIRE(points.size() == 3);
  CHECK(points[0].run.patch_size_px == 12);
  CHECK(points[2].run.patch_size_px == 14);
  CHECK(points[1].label == "patch_size_px=13");
  CHECK(m.hash() == ExperimentManifest::from_json_text(text).hash());

  CHECK_THROWS_AS(ExperimentManifest::from_json_text("{\"nope\": 1}"), ConfigError);
  CHECK_THROWS_AS(ExperimentManifest::from_json_text(
                      R"({"base": {}, "sweep": {"axis": "bogus", "values": [1]}})"),
                  ConfigError);

  // n_patches sweeps expand into probe configs sharing one RunConfig
  const auto m2 = ExperimentManifest::from_json_text(R"({
    "base": {"epochs": 1}, "sweep": {"axis": "n_patches", "values": [1, 5, 9]}})");
  const auto p2 = expand_manifest(m2);
  REQUIRE(p2.size() == 3);
  CHECK(p2[0].probe.n_patches == 1);
  CHECK(p2[0].run.hash() == p2[2].run.hash());

  // variant axis
  const auto m3 = ExperimentManifest::from_json_text(R"({
    "base": {"epochs": 1}, "sweep": {"axis": "patch_mode", "values": ["rescaled", "additive"]}})");
  const auto p3 = expand_manifest(m3);
  CHECK(p3[1].run.patch_mode == patching::PatchMode::kAdditive);

  // empty sweep expands to no points
  const auto m4 = ExperimentManifest::from_json_text(R"({
    "base": {"epochs": 1}, "sweep": {"axis": "patch_size_px", "values": []}})");
  CHECK(expand_manifest(m4).empty());
}

TEST_CASE("empty manifest sweep produces an empty table and succeeds") {
  const fs::path dir = fs::temp_directory_path() / "spatial_empty_manifest";
  fs::remove_all(dir);
  const auto m = ExperimentManifest::from_json_text(
      R"({"name": "empty", "base": {"epochs": 1}, "sweep": {"axis": "patch_size_px", "values": []},
          "output_dir": ")" +
      dir.string() + R"("})");
  std::ostringstream log;
  const auto res = run_manifest(m, log);
  CHECK(res.points_total == 0);
  CHECK(res.points_failed == 0);
  std::ifstream csv(res.csv_path);
  REQUIRE(csv.good());
  std::string line1, line2;
  std::getline(csv, line1);
  std::getline(csv, line2);
  CHECK(line1.find("# manifest") == 0);  // manifest hash stamp
  CHECK(line2 == "manifest,point,axis,value,seed,train_accuracy,test_accuracy,ok");
  fs::remove_all(dir);
}

TEST_CASE("run-manifest end to end: tiny sweep, identical CSV on re-run, manifest hash stamped") {
  const fs::path base = fs::temp_directory_path() / "spatial_sweep_e2e";
  fs::remove_all(base);
  const fs::path data_root = base / "data";
  data::write_synthetic_cifar10(data_root.string(), 48, 24, 12);

  const std::string text = R"({
    "name": "e2e",
    "task": "cifar10",
    "base": {"dataset": "cifar10", "data_root": ")" + data_root.string() + R"(",
             "images_per_batch": 4, "augmentations": 2, "patches_per_image": 2,
             "patch_size_px": 12, "epochs": 1, "pretrain_count": 16, "seed": 5},
    "probe": {"n_patches": 1, "epochs": 3, "train_count": 16, "test_count": 16},
    "seeds": [1, 2],
    "sweep": {"axis": "patch_size_px", "values": [12, 13]},
    "output_dir": ")" + (base / "out").string() + R"("
  })";
  const auto m = ExperimentManifest::from_json_text(text);
  std::ostringstream log;
  const auto res = run_manifest(m, log);
  CHECK(res.points_total == 2);
  CHECK(res.points_failed == 0);
  REQUIRE(fs::exists(res.csv_path));
  CHECK(res.plot_paths.size() == 1);

  auto slurp = [](const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string first = slurp(res.csv_path);
  CHECK(first.find(hex64(m.hash())) != std::string::npos);
  CHECK(first.find("patch_size_px=12") != std::string::npos);

  // pretrain dirs carry the manifest hash stamp
  bool stamped = false;
  for (const auto& e : fs::recursive_directory_iterator(base / "out"))
    if (e.path().filename() == "manifest_hash.txt") {
      stamped = true;
      CHECK(slurp(e.path().string()).find(hex64(m.hash())) != std::string::npos);
    }
  CHECK(stamped);

  // identical manifest + identical seeds reproduce identical CSV contents
  // (pretraining is resumed from the per-point cache, probes recompute)
  fs::remove(res.csv_path);
  const auto res2 = run_manifest(m, log);
  CHECK(slurp(res2.csv_path) == first);

  // the report reducer reassembles the same table from point outputs
  fs::remove(res2.csv_path);
  const auto res3 = report_manifest(m, log);
  CHECK(slurp(res3.csv_path) == first);
  fs::remove_all(base);
}

TEST_CASE("svg plot writer emits whiskers, markers and the manifest stamp") {
  const fs::path path = fs::temp_directory_path() / "spatial_plot_test.svg";
  PlotSeries s;
  s.name = "series";
  s.x = {1, 2, 3};
  s.mean = {10, 12, 11};
  s.lo = {9, 11, 10.5};
  s.hi = {11, 13, 11.5};
  write_svg_plot(path.string(), "title", "x", "y", {s}, "manifest deadbeef");
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string svg = ss.str();
  CHECK(svg.find("manifest deadbeef") != std::string::npos);
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.find("<rect") != std::string::npos);
  fs::remove(path);
}
