// spatial: experiment entry points.
//
// Subcommands: pretrain, linear-eval, embed, verify-pairs, dump-pairs,
// run-manifest, report, make-synthetic, ingest, schema.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "spatial/cli/manifest.hpp"
#include "spatial/cli/verify.hpp"
#include "spatial/data/dataset.hpp"
#include "spatial/eval/probe.hpp"
#include "spatial/rep/representation.hpp"
#include "spatial/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace spatial;

namespace {

std::string resolve_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("SPATIAL_DATA_ROOT")) return env;
  config_fail("pass --data-root or set SPATIAL_DATA_ROOT");
}

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) seeds.push_back(std::stoull(item));
  }
  SPATIAL_CHECK_CONFIG(!seeds.empty(), "empty seed list");
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatial: patch-relation self-supervised pretraining and evaluation"};
  app.require_subcommand(1);

  // ---- pretrain ----
  auto* pre = app.add_subcommand("pretrain", "run self-supervised pretraining from a config file");
  std::string pre_config;
  pre->add_option("--config", pre_config, "RunConfig JSON file")->required();

  // ---- linear-eval ----
  auto* le = app.add_subcommand("linear-eval", "frozen-backbone linear evaluation of a checkpoint");
  std::string le_ckpt, le_task, le_seeds = "1,2,3", le_root, le_out;
  int le_n = 9, le_epochs = 100, le_train_count = 0, le_test_count = 0;
  bool le_affine = false;
  double le_lr = 1e-3;
  le->add_option("--checkpoint", le_ckpt)->required();
  le->add_option("--task", le_task, "dataset or a->b cross-domain task")->required();
  le->add_option("--n-patches", le_n, "composite grid patches {0,1,3,5,7,9}");
  le->add_flag("--affine", le_affine, "affine-augment probe training inputs");
  le->add_option("--seeds", le_seeds, "comma-separated probe seeds");
  le->add_option("--epochs", le_epochs);
  le->add_option("--probe-lr", le_lr);
  le->add_option("--train-count", le_train_count, "cap probe train images (0 = all)");
  le->add_option("--test-count", le_test_count, "cap probe test images (0 = all)");
  le->add_option("--data-root", le_root);
  le->add_option("--out", le_out, "write EvalResult JSON here (plus .csv next to it)");

  // ---- embed ----
  auto* em = app.add_subcommand("embed", "write representations for a dataset split");
  std::string em_ckpt, em_root, em_out, em_dataset, em_split = "test";
  int em_n = 9, em_count = 0;
  em->add_option("--checkpoint", em_ckpt)->required();
  em->add_option("--dataset", em_dataset, "dataset to embed (default: checkpoint dataset)");
  em->add_option("--split", em_split, "train|test");
  em->add_option("--n-patches", em_n);
  em->add_option("--count", em_count, "cap images (0 = all)");
  em->add_option("--data-root", em_root);
  em->add_option("--out", em_out)->required();

  // ---- verify-pairs ----
  auto* vp = app.add_subcommand("verify-pairs", "formula-vs-enumeration audit of pair aggregation");
  int vp_m = 64, vp_k = 4, vp_n = 3;
  vp->add_option("--m", vp_m)->required();
  vp->add_option("--k", vp_k)->required();
  vp->add_option("--n", vp_n)->required();

  // ---- dump-pairs ----
  auto* dp = app.add_subcommand("dump-pairs", "dump the aggregated pair table as CSV");
  int dp_m = 4, dp_k = 2, dp_n = 2;
  std::uint64_t dp_seed = 1;
  std::string dp_out;
  dp->add_option("--m", dp_m);
  dp->add_option("--k", dp_k);
  dp->add_option("--n", dp_n);
  dp->add_option("--seed", dp_seed);
  dp->add_option("--out", dp_out, "output path (default stdout)");

  // ---- run-manifest / report ----
  auto* rm = app.add_subcommand("run-manifest", "execute a sweep manifest: pretrain + probe per point");
  std::string rm_path;
  rm->add_option("--manifest", rm_path)->required();
  auto* rp = app.add_subcommand("report", "assemble CSV and plots from completed manifest points");
  std::string rp_path;
  rp->add_option("--manifest", rp_path)->required();

  // ---- make-synthetic ----
  auto* ms = app.add_subcommand("make-synthetic",
                                "write the procedural surrogate dataset in CIFAR-10 binary layout");
  std::string ms_root;
  int ms_train = 10000, ms_test = 5000;
  std::uint64_t ms_seed = 7;
  ms->add_option("--root", ms_root)->required();
  ms->add_option("--train-count", ms_train);
  ms->add_option("--test-count", ms_test);
  ms->add_option("--seed", ms_seed);

  // ---- ingest ----
  auto* ig = app.add_subcommand("ingest", "scan a dataset and write its ingestion manifest JSON");
  std::string ig_dataset, ig_root, ig_out;
  bool ig_continue = false;
  ig->add_option("--dataset", ig_dataset)->required();
  ig->add_option("--data-root", ig_root);
  ig->add_option("--out", ig_out, "manifest output path (default stdout)");
  ig->add_flag("--checksum-continue", ig_continue, "warn instead of failing on checksum mismatch");

  auto* sc = app.add_subcommand("schema", "print the pretraining config schema");

  CLI11_PARSE(app, argc, argv);

  try {
    if (pre->parsed()) {
      auto cfg = train::RunConfig::from_file(pre_config);
      train::Trainer trainer(cfg);
      std::ofstream mf(fs::path(cfg.output_dir) / "ingest_manifest.json");
      mf << trainer.dataset().manifest.to_json() << "\n";
      const auto stats = trainer.run();
      std::cout << "final checkpoint: " << stats.final_checkpoint << "\n";
      std::cout << "steps: " << stats.steps << "  last l_total: " << stats.last_loss.total << "\n";
      return 0;
    }
    if (le->parsed()) {
      auto ck = model::Checkpoint::load(le_ckpt);
      eval::ProbeConfig pc;
      pc.n_patches = ck.patch_mode == patching::PatchMode::kAdditive ? 0 : le_n;
      pc.epochs = le_epochs;
      pc.affine_augment = le_affine;
      pc.learning_rate = le_lr;
      pc.train_count = le_train_count;
      pc.test_count = le_test_count;
      const auto res = eval::linear_probe(ck, data::task_from_name(le_task), pc, resolve_root(le_root),
                                          parse_seeds(le_seeds));
      const std::string js = res.to_json();
      std::cout << js << "\n";
      if (!le_out.empty()) {
        std::ofstream out(le_out);
        out << js << "\n";
        std::ofstream csv(le_out + ".csv");
        csv << res.csv_header() << "\n" << res.csv_row(le_task);
      }
      return res.complete ? 0 : 1;
    }
    if (em->parsed()) {
      auto ck = model::Checkpoint::load(em_ckpt);
      const std::string ds_name = em_dataset.empty() ? ck.config.dataset : em_dataset;
      const auto ds = data::load_dataset(data::dataset_from_name(ds_name), resolve_root(em_root));
      const auto& src = em_split == "train" ? ds.train : ds.test;
      const std::size_t count =
          em_count > 0 ? std::min<std::size_t>(src->size(), static_cast<std::size_t>(em_count)) : src->size();
      std::vector<Image> images;
      images.reserve(count);
      for (std::size_t i = 0; i < count; ++i) images.push_back(src->fetch(i).pixels);
      const bool single = ck.patch_mode == patching::PatchMode::kAdditive;
      const int n = single ? 0 : em_n;
      const auto grid = single ? rep::GridSpec{0, ck.config.patch_size_px, {}}
                               : rep::make_grid(ck.image_side, ck.config.patch_size_px, n, ck.config.seed);
      const auto rows = single ? rep::single_pass_representations(images, ck)
                               : rep::compose_representations(images, ck, grid);
      rep::write_embeddings(em_out, ck.encoder->feature_dim(), n, rows);
      std::cout << "wrote " << rows.size() << " rows of width " << rows.front().size() << " to " << em_out
                << "\n";
      return 0;
    }
    if (vp->parsed()) {
      const auto rep = cli::verify_pairs(vp_m, vp_k, vp_n);
      std::cout << rep.text << "\n";
      return rep.match ? 0 : 1;
    }
    if (dp->parsed()) {
      const std::string csv = cli::dump_pairs_csv(dp_m, dp_k, dp_n, dp_seed);
      if (dp_out.empty())
        std::cout << csv;
      else {
        std::ofstream out(dp_out);
        out << csv;
      }
      return 0;
    }
    if (rm->parsed()) {
      const auto m = cli::ExperimentManifest::from_file(rm_path);
      const auto res = cli::run_manifest(m, std::cout);
      std::cout << "sweep points: " << res.points_total << ", failed: " << res.points_failed << "\n"
                << "results: " << res.csv_path << "\n";
      return 0;  // point failures are recorded in the table, the sweep itself succeeded
    }
    if (rp->parsed()) {
      const auto m = cli::ExperimentManifest::from_file(rp_path);
      const auto res = cli::report_manifest(m, std::cout);
      std::cout << "results: " << res.csv_path << "\n";
      return 0;
    }
    if (ms->parsed()) {
      data::write_synthetic_cifar10(ms_root, static_cast<std::size_t>(ms_train),
                                    static_cast<std::size_t>(ms_test), ms_seed);
      std::cout << "surrogate dataset written under " << ms_root << "/cifar-10-batches-bin\n";
      return 0;
    }
    if (ig->parsed()) {
      const auto ds = data::load_dataset(data::dataset_from_name(ig_dataset), resolve_root(ig_root),
                                         ig_continue);
      auto manifest = ds.manifest;
      const auto split = data::make_pretrain_split(ds.pretrain_pool()->size(), 0, 1);
      const auto stats = data::compute_norm_stats(*ds.pretrain_pool(), split.indices);
      manifest.norm_mean = stats.mean;
      manifest.norm_std = stats.stddev;
      if (ig_out.empty())
        std::cout << manifest.to_json() << "\n";
      else {
        std::ofstream out(ig_out);
        out << manifest.to_json() << "\n";
      }
      return 0;
    }
    if (sc->parsed()) {
      std::cout << train::run_config_schema();
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
