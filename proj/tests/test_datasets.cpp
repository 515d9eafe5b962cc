#include <array>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "spatial/data/dataset.hpp"

using namespace spatial;
using namespace spatial::data;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("spatial_ds_" + std::to_string(Rng(::time(nullptr)).next_u64() % 100000));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_cifar10_fixture(const fs::path& root, int per_batch, int test_n) {
  fs::create_directories(root / "cifar-10-batches-bin");
  Rng rng(5);
  auto write = [&](const fs::path& p, int n) {
    std::ofstream out(p, std::ios::binary);
    for (int i = 0; i < n; ++i) {
      out.put(static_cast<char>(i % 10));
      for (int b = 0; b < 3072; ++b) out.put(static_cast<char>(rng.uniform_int(0, 255)));
    }
  };
  for (int b = 1; b <= 5; ++b)
    write(root / "cifar-10-batches-bin" / ("data_batch_" + std::to_string(b) + ".bin"), per_batch);
  write(root / "cifar-10-batches-bin" / "test_batch.bin", test_n);
}

void write_cifar100_fixture(const fs::path& root, int train_n, int test_n) {
  fs::create_directories(root / "cifar-100-binary");
  Rng rng(6);
  auto write = [&](const fs::path& p, int n) {
    std::ofstream out(p, std::ios::binary);
    for (int i = 0; i < n; ++i) {
      const int fine = i % 100;
      out.put(static_cast<char>(coarse_label_map(fine)));
      out.put(static_cast<char>(fine));
      for (int b = 0; b < 3072; ++b) out.put(static_cast<char>(rng.uniform_int(0, 255)));
    }
  };
  write(root / "cifar-100-binary" / "train.bin", train_n);
  write(root / "cifar-100-binary" / "test.bin", test_n);
}

void write_stl10_fixture(const fs::path& root, int train_n, int test_n, int unlabeled_n) {
  fs::create_directories(root / "stl10_binary");
  Rng rng(7);
  auto write_x = [&](const fs::path& p, int n) {
    std::ofstream out(p, std::ios::binary);
    for (int i = 0; i < n * 3 * 96 * 96; ++i) out.put(static_cast<char>(rng.uniform_int(0, 255)));
  };
  auto write_y = [&](const fs::path& p, int n) {
    std::ofstream out(p, std::ios::binary);
    for (int i = 0; i < n; ++i) out.put(static_cast<char>(1 + i % 10));  // 1-indexed labels
  };
  write_x(root / "stl10_binary" / "train_X.bin", train_n);
  write_y(root / "stl10_binary" / "train_y.bin", train_n);
  write_x(root / "stl10_binary" / "test_X.bin", test_n);
  write_y(root / "stl10_binary" / "test_y.bin", test_n);
  write_x(root / "stl10_binary" / "unlabeled_X.bin", unlabeled_n);
}

void write_tiny_fixture(const fs::path& root, int train_n, int val_n) {
  fs::create_directories(root / "tiny-imagenet-bin");
  Rng rng(8);
  auto write = [&](const fs::path& p, int n) {
    std::ofstream out(p, std::ios::binary);
    for (int i = 0; i < n; ++i) {
      const int label = i % 200;
      out.put(static_cast<char>(label & 0xff));
      out.put(static_cast<char>((label >> 8) & 0xff));
      for (int b = 0; b < 64 * 64 * 3; ++b) out.put(static_cast<char>(rng.uniform_int(0, 255)));
    }
  };
  write(root / "tiny-imagenet-bin" / "train.bin", train_n);
  write(root / "tiny-imagenet-bin" / "val.bin", val_n);
}

}  // namespace

TEST_CASE("coarse label map: 5 fine classes per coarse class, surjective, deterministic") {
  std::array<int, 20> counts{};
  for (int fine = 0; fine < 100; ++fine) {
    const int c = coarse_label_map(fine);
    REQUIRE(c >= 0);
    REQUIRE(c < 20);
    ++counts[static_cast<std::size_t>(c)];
    REQUIRE(coarse_label_map(fine) == c);
  }
  for (int c = 0; c < 20; ++c) REQUIRE(counts[static_cast<std::size_t>(c)] == 5);
  // with the canonical 500 train images per fine class this yields exactly
  // 2500 per coarse class
  CHECK(5 * 500 == 2500);
  CHECK_THROWS(coarse_label_map(100));
  CHECK_THROWS(coarse_label_map(-1));
}

TEST_CASE("cifar10 loader reads the canonical batch layout") {
  TempDir tmp;
  write_cifar10_fixture(tmp.path, 20, 30);
  const auto ds = load_dataset(DatasetId::kCifar10, tmp.path.string());
  CHECK(ds.train->size() == 100);
  CHECK(ds.test->size() == 30);
  CHECK(ds.manifest.train_count == 100);
  const auto rec = ds.train->fetch(13);
  CHECK(rec.pixels.h == 32);
  CHECK(rec.label == 13 % 10);
  for (float v : rec.pixels.data) {
    REQUIRE(v >= 0.f);
    REQUIRE(v <= 1.f);
    REQUIRE(std::isfinite(v));
  }
  CHECK(ds.manifest.files.size() == 6);
}

TEST_CASE("cifar100 fine and coarse loaders agree with the table") {
  TempDir tmp;
  write_cifar100_fixture(tmp.path, 200, 50);
  const auto fine = load_dataset(DatasetId::kCifar100, tmp.path.string());
  const auto coarse = load_dataset(DatasetId::kCifar100Coarse, tmp.path.string());
  CHECK(fine.train->size() == 200);
  for (std::size_t i = 0; i < 100; ++i) {
    const int f = fine.train->fetch(i).label;
    REQUIRE(f >= 0);
    REQUIRE(f < 100);
    REQUIRE(coarse.train->fetch(i).label == coarse_label_map(f));
  }
}

TEST_CASE("stl10 loader: column-major decode, 1-indexed labels, unlabeled split") {
  TempDir tmp;
  write_stl10_fixture(tmp.path, 10, 8, 25);
  const auto ds = load_dataset(DatasetId::kStl10, tmp.path.string());
  CHECK(ds.train->size() == 10);
  CHECK(ds.test->size() == 8);
  REQUIRE(ds.unlabeled != nullptr);
  CHECK(ds.unlabeled->size() == 25);
  CHECK(ds.pretrain_pool() == ds.unlabeled);
  const auto urec = ds.unlabeled->fetch(24);
  CHECK(urec.pixels.h == 96);
  CHECK(urec.label == -1);
  const auto rec = ds.train->fetch(3);
  CHECK(rec.pixels.h == 96);
  CHECK(rec.label == 3 % 10);

  // decode transposes columns to rows: byte k of plane 0 is column k's top
  std::ifstream in(tmp.path / "stl10_binary" / "train_X.bin", std::ios::binary);
  std::vector<unsigned char> raw(3 * 96 * 96);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  const auto rec0 = ds.train->fetch(0);
  CHECK(rec0.pixels.at(0, 5, 2) == doctest::Approx(raw[2 * 96 + 5] / 255.f));
}

TEST_CASE("tiny-imagenet sidecar binary loader") {
  TempDir tmp;
  write_tiny_fixture(tmp.path, 30, 12);
  const auto ds = load_dataset(DatasetId::kTinyImagenet, tmp.path.string());
  CHECK(ds.train->size() == 30);
  CHECK(ds.test->size() == 12);
  CHECK(ds.train->fetch(7).label == 7);
  CHECK(ds.train->fetch(7).pixels.h == 64);
  bool noted = false;
  for (const auto& n : ds.manifest.notes) noted |= n.find("val") != std::string::npos;
  CHECK(noted);
}

TEST_CASE("missing and corrupt archives raise DataError naming the path") {
  TempDir tmp;
  CHECK_THROWS_AS(load_dataset(DatasetId::kCifar10, tmp.path.string()), DataError);
  write_cifar10_fixture(tmp.path, 10, 10);
  // truncate a batch to a non-record-multiple size
  std::ofstream((tmp.path / "cifar-10-batches-bin" / "data_batch_2.bin"), std::ios::binary) << "garbage";
  try {
    load_dataset(DatasetId::kCifar10, tmp.path.string());
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("data_batch_2.bin") != std::string::npos);
  }
}

TEST_CASE("checksum file: mismatch fails hard or degrades to a warning") {
  TempDir tmp;
  write_cifar10_fixture(tmp.path, 10, 10);
  std::ofstream(tmp.path / "checksums.txt") << "test_batch.bin 0000000000000000\n";
  CHECK_THROWS_AS(load_dataset(DatasetId::kCifar10, tmp.path.string(), false), DataError);
  const auto ds = load_dataset(DatasetId::kCifar10, tmp.path.string(), true);
  bool warned = false;
  for (const auto& n : ds.manifest.notes) warned |= n.find("checksum mismatch") != std::string::npos;
  CHECK(warned);
}

TEST_CASE("splits: deterministic under a fixed seed, disjoint probe carve") {
  const auto a = make_pretrain_split(1000, 128, 42);
  const auto b = make_pretrain_split(1000, 128, 42);
  CHECK(a.indices == b.indices);
  CHECK(a.indices.size() == 128);
  const auto c = make_pretrain_split(1000, 128, 43);
  CHECK(a.indices != c.indices);

  const auto [tr, te] = make_disjoint_splits(500, 300, 200, 9);
  std::set<std::uint32_t> s(tr.indices.begin(), tr.indices.end());
  for (auto i : te.indices) REQUIRE(s.count(i) == 0);
  CHECK(tr.indices.size() + te.indices.size() == 500);
  CHECK_THROWS_AS(make_disjoint_splits(100, 80, 30, 1), ConfigError);
}

TEST_CASE("cross-domain tasks: 10->100, 100->10, identity; geometry mismatch rejected") {
  const auto t1 = cross_domain_task(DatasetId::kCifar10, DatasetId::kCifar100);
  CHECK(t1.name == "cifar10->cifar100");
  const auto t2 = cross_domain_task(DatasetId::kCifar100, DatasetId::kCifar10);
  CHECK(t2.pretrain_dataset == DatasetId::kCifar100);
  const auto t3 = cross_domain_task(DatasetId::kCifar10, DatasetId::kCifar10);
  CHECK(t3.pretrain_dataset == t3.probe_dataset);
  CHECK_THROWS_AS(cross_domain_task(DatasetId::kCifar10, DatasetId::kStl10), ConfigError);
  CHECK(task_from_name("cifar10->cifar100").name == t1.name);
  CHECK(task_from_name("tiny_imagenet").probe_dataset == DatasetId::kTinyImagenet);
}

TEST_CASE("norm stats are exact on a constant source and recorded in [0,1]") {
  TempDir tmp;
  write_cifar10_fixture(tmp.path, 10, 5);
  const auto ds = load_dataset(DatasetId::kCifar10, tmp.path.string());
  std::vector<std::uint32_t> idx{0, 1, 2, 3, 4};
  const auto st = compute_norm_stats(*ds.train, idx);
  for (int c = 0; c < 3; ++c) {
    REQUIRE(st.mean[c] > 0.0);
    REQUIRE(st.mean[c] < 1.0);
    REQUIRE(st.stddev[c] > 0.0);
  }
}

TEST_CASE("synthetic surrogate loads through the canonical cifar10 loader") {
  TempDir tmp;
  write_synthetic_cifar10(tmp.path.string(), 50, 20, 3);
  const auto ds = load_dataset(DatasetId::kCifar10, tmp.path.string());
  CHECK(ds.train->size() == 50);
  CHECK(ds.test->size() == 20);
  std::set<int> labels;
  for (std::size_t i = 0; i < ds.train->size(); ++i) {
    const auto rec = ds.train->fetch(i);
    labels.insert(rec.label);
    REQUIRE(rec.label >= 0);
    REQUIRE(rec.label < 10);
  }
  CHECK(labels.size() >= 8);  // all ten classes present at any real size
  // determinism
  TempDir tmp2;
  write_synthetic_cifar10(tmp2.path.string(), 50, 20, 3);
  const auto ds2 = load_dataset(DatasetId::kCifar10, tmp2.path.string());
  const auto r1 = ds.train->fetch(11);
  const auto r2 = ds2.train->fetch(11);
  CHECK(r1.label == r2.label);
  CHECK(r1.pixels.data == r2.pixels.data);
}
