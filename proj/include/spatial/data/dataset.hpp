#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "spatial/core/image.hpp"
#include "spatial/core/rng.hpp"

namespace spatial::data {

enum class DatasetId { kCifar10, kCifar100, kCifar100Coarse, kTinyImagenet, kStl10 };

struct DatasetTraits {
  int side;
  int classes;
  const char* name;
};

DatasetTraits traits(DatasetId id);
DatasetId dataset_from_name(const std::string& name);

struct ImageRecord {
  Image pixels;  // side x side, [0,1]
  int label = -1;
  DatasetId dataset = DatasetId::kCifar10;
};

// Random-access record provider; fetch is pure so parallel loader workers
// can decode disjoint shards deterministically.
class RecordSource {
public:
  virtual ~RecordSource() = default;
  virtual std::size_t size() const = 0;
  virtual ImageRecord fetch(std::size_t index) const = 0;
};

using SourcePtr = std::shared_ptr<RecordSource>;

// Dense u8 in-memory source: pixels plane-major RGB per record.
class MemorySource : public RecordSource {
public:
  MemorySource(DatasetId id, int side, std::vector<std::uint8_t> pixels, std::vector<std::int32_t> labels);
  std::size_t size() const override { return labels_.size(); }
  ImageRecord fetch(std::size_t index) const override;

private:
  DatasetId id_;
  int side_;
  std::vector<std::uint8_t> pixels_;
  std::vector<std::int32_t> labels_;
};

// Unlabeled records streamed from an STL-10 style image file (column-major
// planes) on demand; keeps the 100k-image split out of memory. fetch is
// pure and thread-safe (pread).
class Stl10FileSource : public RecordSource {
public:
  Stl10FileSource(const std::string& path, std::size_t count);
  ~Stl10FileSource() override;
  Stl10FileSource(const Stl10FileSource&) = delete;
  Stl10FileSource& operator=(const Stl10FileSource&) = delete;
  std::size_t size() const override { return count_; }
  ImageRecord fetch(std::size_t index) const override;

private:
  std::string path_;
  std::size_t count_;
  int fd_ = -1;
};

struct FileInfo {
  std::string path;
  std::uint64_t bytes = 0;
  std::uint64_t fnv = 0;
};

struct IngestManifest {
  std::string dataset;
  std::string root;
  std::vector<FileInfo> files;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  std::size_t unlabeled_count = 0;
  std::array<double, 3> norm_mean{};
  std::array<double, 3> norm_std{};
  std::vector<std::string> notes;

  std::string to_json() const;
};

struct LoadedDataset {
  DatasetId id;
  SourcePtr train;      // labeled train records
  SourcePtr test;       // probe test records
  SourcePtr unlabeled;  // STL-10 only, otherwise null
  IngestManifest manifest;

  // Pretraining pool: the unlabeled split when present, else train.
  const SourcePtr& pretrain_pool() const { return unlabeled ? unlabeled : train; }
};

// Load a dataset from its canonical published binary layout under root.
// Missing or malformed files raise DataError with the offending path.
// expected_checksums: optional "<filename> <fnv1a-hex>" lines file at
// <root>/checksums.txt; mismatches either fail or warn per checksum_continue.
LoadedDataset load_dataset(DatasetId id, const std::string& root, bool checksum_continue = false);

// The canonical CIFAR-100 fine -> coarse superclass mapping.
int coarse_label_map(int fine_label);

// Per-channel normalization statistics over a set of records.
struct ChannelStats {
  std::array<double, 3> mean{};
  std::array<double, 3> stddev{};
};
ChannelStats compute_norm_stats(const RecordSource& src, const std::vector<std::uint32_t>& indices);

// --- splits ------------------------------------------------------------

enum class SplitRole { kPretrain, kProbeTrain, kProbeTest };

struct SplitSpec {
  SplitRole role = SplitRole::kPretrain;
  std::vector<std::uint32_t> indices;
  std::uint64_t seed = 0;
};

// First `count` entries of a seeded permutation of [0, n); count 0 = all n.
SplitSpec make_pretrain_split(std::size_t n, std::size_t count, std::uint64_t seed);

// Disjoint carve of [0, n) into two index lists of the given sizes.
std::pair<SplitSpec, SplitSpec> make_disjoint_splits(std::size_t n, std::size_t first, std::size_t second,
                                                     std::uint64_t seed);

// --- evaluation tasks ---------------------------------------------------

struct EvalTaskSpec {
  DatasetId pretrain_dataset;
  DatasetId probe_dataset;
  std::string name;
};

// Cross-domain task: pretrain on train_ds, probe on test_ds. Geometries
// must match.
EvalTaskSpec cross_domain_task(DatasetId train_ds, DatasetId test_ds);
EvalTaskSpec same_domain_task(DatasetId ds);
EvalTaskSpec task_from_name(const std::string& name);

// --- synthetic surrogate -------------------------------------------------

// Writes a procedurally generated 10-class dataset in the canonical
// CIFAR-10 binary layout (data_batch_*.bin / test_batch.bin) under root.
// Classes are defined by shape identity and by the spatial arrangement of
// identical parts, with nuisance color/position/scale, so probes cannot
// shortcut through color statistics. Used when no real dataset is mounted.
void write_synthetic_cifar10(const std::string& root, std::size_t train_count, std::size_t test_count,
                             std::uint64_t seed);

}  // namespace spatial::data
