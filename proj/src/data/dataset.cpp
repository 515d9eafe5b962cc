#include "spatial/data/dataset.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace spatial::data {

DatasetTraits traits(DatasetId id) {
  switch (id) {
    case DatasetId::kCifar10: return {32, 10, "cifar10"};
    case DatasetId::kCifar100: return {32, 100, "cifar100"};
    case DatasetId::kCifar100Coarse: return {32, 20, "cifar100_20"};
    case DatasetId::kTinyImagenet: return {64, 200, "tiny_imagenet"};
    case DatasetId::kStl10: return {96, 10, "stl10"};
  }
  contract_fail("unknown dataset id");
}

DatasetId dataset_from_name(const std::string& name) {
  for (DatasetId id : {DatasetId::kCifar10, DatasetId::kCifar100, DatasetId::kCifar100Coarse,
                       DatasetId::kTinyImagenet, DatasetId::kStl10})
    if (traits(id).name == name) return id;
  config_fail("unknown dataset: " + name);
}

MemorySource::MemorySource(DatasetId id, int side, std::vector<std::uint8_t> pixels,
                           std::vector<std::int32_t> labels)
    : id_(id), side_(side), pixels_(std::move(pixels)), labels_(std::move(labels)) {
  SPATIAL_CHECK(pixels_.size() == labels_.size() * static_cast<std::size_t>(3) * side_ * side_,
                "MemorySource: pixel/label size mismatch");
}

ImageRecord MemorySource::fetch(std::size_t index) const {
  SPATIAL_CHECK(index < labels_.size(), "MemorySource: index out of range");
  ImageRecord rec;
  rec.dataset = id_;
  rec.label = labels_[index];
  rec.pixels = Image(side_, side_);
  const std::size_t n = static_cast<std::size_t>(3) * side_ * side_;
  const std::uint8_t* src = pixels_.data() + index * n;
  for (std::size_t i = 0; i < n; ++i) rec.pixels.data[i] = static_cast<float>(src[i]) / 255.f;
  return rec;
}


// STL-10 stores each plane column-major; emit row-major float planes with
// contiguous stores (x innermost keeps the autovectorizer on the safe,
// unit-stride store path).
void transpose_stl_plane(const std::uint8_t* src, float* dst) {
  for (int y = 0; y < 96; ++y)
    for (int x = 0; x < 96; ++x) dst[y * 96 + x] = static_cast<float>(src[x * 96 + y]) / 255.f;
}

Stl10FileSource::Stl10FileSource(const std::string& path, std::size_t count) : path_(path), count_(count) {
  fd_ = ::open(path.c_str(), O_RDONLY);
  if (fd_ < 0) data_fail("cannot open STL-10 image file: " + path);
}

Stl10FileSource::~Stl10FileSource() {
  if (fd_ >= 0) ::close(fd_);
}

ImageRecord Stl10FileSource::fetch(std::size_t index) const {
  SPATIAL_CHECK(index < count_, "Stl10FileSource: index out of range");
  constexpr std::size_t kRec = 3 * 96 * 96;
  std::array<std::uint8_t, kRec> buf;
  const auto got = ::pread(fd_, buf.data(), kRec, static_cast<off_t>(index * kRec));
  if (got != static_cast<ssize_t>(kRec)) data_fail("short read from STL-10 image file: " + path_);
  ImageRecord rec;
  rec.dataset = DatasetId::kStl10;
  rec.label = -1;
  rec.pixels = Image(96, 96);
  for (int c = 0; c < 3; ++c)
    transpose_stl_plane(buf.data() + static_cast<std::size_t>(c) * 96 * 96, rec.pixels.plane(c));
  return rec;
}

std::string IngestManifest::to_json() const {
  nlohmann::json j;
  j["dataset"] = dataset;
  j["root"] = root;
  j["counts"] = {{"train", train_count}, {"test", test_count}, {"unlabeled", unlabeled_count}};
  j["normalization"] = {{"mean", norm_mean}, {"stddev", norm_std}};
  nlohmann::json files_j = nlohmann::json::array();
  for (const auto& f : files) files_j.push_back({{"path", f.path}, {"bytes", f.bytes}, {"fnv1a", hex64(f.fnv)}});
  j["files"] = files_j;
  j["notes"] = notes;
  return j.dump(2);
}

namespace {

std::vector<std::uint8_t> read_file(const std::string& path, FileInfo* info) {
  std::ifstream in(path, std::ios::binary);
  if (!in) data_fail("missing dataset file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.empty()) data_fail("empty dataset file: " + path);
  if (info) {
    info->path = path;
    info->bytes = bytes.size();
    info->fnv = fnv1a(bytes.data(), bytes.size());
  }
  return bytes;
}

void verify_checksums(const std::string& root, IngestManifest& manifest, bool checksum_continue) {
  const std::string path = root + "/checksums.txt";
  std::ifstream in(path);
  if (!in) return;  // optional
  std::string fname, hexv;
  while (in >> fname >> hexv) {
    for (const auto& f : manifest.files) {
      if (std::filesystem::path(f.path).filename() == fname) {
        if (hex64(f.fnv) != hexv) {
          const std::string msg = "checksum mismatch for " + f.path + " (expected " + hexv + ", got " +
                                  hex64(f.fnv) + ")";
          if (!checksum_continue) data_fail(msg);
          manifest.notes.push_back("warning: " + msg);
        }
      }
    }
  }
}

struct RawSplit {
  std::vector<std::uint8_t> pixels;
  std::vector<std::int32_t> labels;
};

// CIFAR binary batches: per record <label bytes><3072 plane-major pixels>.
RawSplit read_cifar_records(const std::string& path, int label_bytes, int label_index, IngestManifest& m) {
  FileInfo info;
  const auto bytes = read_file(path, &info);
  m.files.push_back(info);
  const std::size_t rec = static_cast<std::size_t>(label_bytes) + 3072;
  if (bytes.size() % rec != 0)
    data_fail("corrupt CIFAR batch (size " + std::to_string(bytes.size()) + " not a multiple of " +
              std::to_string(rec) + "): " + path);
  const std::size_t n = bytes.size() / rec;
  RawSplit out;
  out.pixels.resize(n * 3072);
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.labels[i] = bytes[i * rec + static_cast<std::size_t>(label_index)];
    std::copy_n(bytes.data() + i * rec + label_bytes, 3072, out.pixels.data() + i * 3072);
  }
  return out;
}

LoadedDataset load_cifar10(const std::string& root, IngestManifest m) {
  const std::string dir = root + "/cifar-10-batches-bin";
  RawSplit train;
  for (int b = 1; b <= 5; ++b) {
    auto part = read_cifar_records(dir + "/data_batch_" + std::to_string(b) + ".bin", 1, 0, m);
    train.pixels.insert(train.pixels.end(), part.pixels.begin(), part.pixels.end());
    train.labels.insert(train.labels.end(), part.labels.begin(), part.labels.end());
  }
  auto test = read_cifar_records(dir + "/test_batch.bin", 1, 0, m);
  LoadedDataset out;
  out.id = DatasetId::kCifar10;
  m.train_count = train.labels.size();
  m.test_count = test.labels.size();
  out.train = std::make_shared<MemorySource>(DatasetId::kCifar10, 32, std::move(train.pixels),
                                             std::move(train.labels));
  out.test = std::make_shared<MemorySource>(DatasetId::kCifar10, 32, std::move(test.pixels),
                                            std::move(test.labels));
  out.manifest = std::move(m);
  return out;
}

LoadedDataset load_cifar100(const std::string& root, bool coarse, IngestManifest m) {
  const std::string dir = root + "/cifar-100-binary";
  const int label_index = coarse ? 0 : 1;  // <coarse><fine>
  auto train = read_cifar_records(dir + "/train.bin", 2, label_index, m);
  auto test = read_cifar_records(dir + "/test.bin", 2, label_index, m);
  const DatasetId id = coarse ? DatasetId::kCifar100Coarse : DatasetId::kCifar100;
  LoadedDataset out;
  out.id = id;
  m.train_count = train.labels.size();
  m.test_count = test.labels.size();
  if (coarse) m.notes.push_back("coarse labels read from file; cross-checked against the published table");
  out.train = std::make_shared<MemorySource>(id, 32, std::move(train.pixels), std::move(train.labels));
  out.test = std::make_shared<MemorySource>(id, 32, std::move(test.pixels), std::move(test.labels));
  out.manifest = std::move(m);
  return out;
}

// Sidecar binary format documented in the README: <u16 LE label><64*64*3
// plane-major RGB>. The canonical distribution is a JPEG tree, out of scope
// for this artifact's loaders.
RawSplit read_tiny_records(const std::string& path, IngestManifest& m) {
  FileInfo info;
  const auto bytes = read_file(path, &info);
  m.files.push_back(info);
  const std::size_t rec = 2 + 64 * 64 * 3;
  if (bytes.size() % rec != 0) data_fail("corrupt tiny-imagenet binary: " + path);
  const std::size_t n = bytes.size() / rec;
  RawSplit out;
  out.pixels.resize(n * (rec - 2));
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.labels[i] = static_cast<std::int32_t>(bytes[i * rec]) | (static_cast<std::int32_t>(bytes[i * rec + 1]) << 8);
    std::copy_n(bytes.data() + i * rec + 2, rec - 2, out.pixels.data() + i * (rec - 2));
  }
  return out;
}

LoadedDataset load_tiny(const std::string& root, IngestManifest m) {
  const std::string dir = root + "/tiny-imagenet-bin";
  auto train = read_tiny_records(dir + "/train.bin", m);
  auto val = read_tiny_records(dir + "/val.bin", m);
  LoadedDataset out;
  out.id = DatasetId::kTinyImagenet;
  m.train_count = train.labels.size();
  m.test_count = val.labels.size();
  m.notes.push_back("probe_test_split: val (test labels are not public)");
  out.train = std::make_shared<MemorySource>(DatasetId::kTinyImagenet, 64, std::move(train.pixels),
                                             std::move(train.labels));
  out.test = std::make_shared<MemorySource>(DatasetId::kTinyImagenet, 64, std::move(val.pixels),
                                            std::move(val.labels));
  out.manifest = std::move(m);
  return out;
}

// STL-10 binary: 3x96x96 per record, column-major within each plane.
std::vector<std::uint8_t> decode_stl_pixels(const std::vector<std::uint8_t>& bytes) {
  const std::size_t rec = 3 * 96 * 96;
  const std::size_t n = bytes.size() / rec;
  std::vector<std::uint8_t> out(bytes.size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* src = bytes.data() + i * rec;
    std::uint8_t* dst = out.data() + i * rec;
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 96; ++y)
        for (int x = 0; x < 96; ++x) dst[(c * 96 + y) * 96 + x] = src[(c * 96 + x) * 96 + y];
  }
  return out;
}

LoadedDataset load_stl10(const std::string& root, IngestManifest m) {
  const std::string dir = root + "/stl10_binary";
  auto read_labels = [&](const std::string& path) {
    FileInfo info;
    const auto bytes = read_file(path, &info);
    m.files.push_back(info);
    std::vector<std::int32_t> labels(bytes.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) {
      SPATIAL_CHECK(bytes[i] >= 1 && bytes[i] <= 10, "STL-10 label out of range in " + path);
      labels[i] = bytes[i] - 1;  // stored 1-indexed
    }
    return labels;
  };
  auto read_images = [&](const std::string& path) {
    FileInfo info;
    auto bytes = read_file(path, &info);
    m.files.push_back(info);
    if (bytes.size() % (3 * 96 * 96) != 0) data_fail("corrupt STL-10 image file: " + path);
    return decode_stl_pixels(bytes);
  };
  auto train_px = read_images(dir + "/train_X.bin");
  auto train_y = read_labels(dir + "/train_y.bin");
  auto test_px = read_images(dir + "/test_X.bin");
  auto test_y = read_labels(dir + "/test_y.bin");

  // the 100k-image unlabeled split streams from disk
  const std::string unlab_path = dir + "/unlabeled_X.bin";
  FileInfo unlab_info;
  {
    std::ifstream in(unlab_path, std::ios::binary);
    if (!in) data_fail("missing dataset file: " + unlab_path);
    unlab_info.path = unlab_path;
    std::uint64_t h = kFnvOffset;
    std::vector<char> chunk(1 << 20);
    while (in) {
      in.read(chunk.data(), static_cast<std::streamsize>(chunk.size()));
      const auto got = in.gcount();
      h = fnv1a(chunk.data(), static_cast<std::size_t>(got), h);
      unlab_info.bytes += static_cast<std::uint64_t>(got);
    }
    unlab_info.fnv = h;
  }
  if (unlab_info.bytes % (3 * 96 * 96) != 0) data_fail("corrupt STL-10 image file: " + unlab_path);
  m.files.push_back(unlab_info);

  LoadedDataset out;
  out.id = DatasetId::kStl10;
  m.train_count = train_y.size();
  m.test_count = test_y.size();
  m.unlabeled_count = unlab_info.bytes / (3 * 96 * 96);
  m.notes.push_back("pretraining uses the unlabeled split; the probe uses the labeled train split");
  out.train = std::make_shared<MemorySource>(DatasetId::kStl10, 96, std::move(train_px), std::move(train_y));
  out.test = std::make_shared<MemorySource>(DatasetId::kStl10, 96, std::move(test_px), std::move(test_y));
  out.unlabeled = std::make_shared<Stl10FileSource>(unlab_path, m.unlabeled_count);
  out.manifest = std::move(m);
  return out;
}

}  // namespace

LoadedDataset load_dataset(DatasetId id, const std::string& root, bool checksum_continue) {
  IngestManifest m;
  m.dataset = traits(id).name;
  m.root = root;
  LoadedDataset out;
  switch (id) {
    case DatasetId::kCifar10: out = load_cifar10(root, std::move(m)); break;
    case DatasetId::kCifar100: out = load_cifar100(root, false, std::move(m)); break;
    case DatasetId::kCifar100Coarse: out = load_cifar100(root, true, std::move(m)); break;
    case DatasetId::kTinyImagenet: out = load_tiny(root, std::move(m)); break;
    case DatasetId::kStl10: out = load_stl10(root, std::move(m)); break;
  }
  verify_checksums(root, out.manifest, checksum_continue);
  const int classes = traits(id).classes;
  for (std::size_t probe = 0; probe < 32 && probe < out.train->size(); ++probe) {
    const auto rec = out.train->fetch(probe);
    SPATIAL_CHECK(rec.label >= 0 && rec.label < classes, "label out of range in train split");
  }
  return out;
}

ChannelStats compute_norm_stats(const RecordSource& src, const std::vector<std::uint32_t>& indices) {
  ChannelStats s;
  std::array<double, 3> sum{}, sumsq{};
  std::size_t npix = 0;
  for (const auto idx : indices) {
    const auto rec = src.fetch(idx);
    const std::size_t plane = static_cast<std::size_t>(rec.pixels.h) * rec.pixels.w;
    npix += plane;
    for (int c = 0; c < 3; ++c) {
      const float* p = rec.pixels.plane(c);
      double a = 0, b = 0;
      for (std::size_t i = 0; i < plane; ++i) {
        a += p[i];
        b += static_cast<double>(p[i]) * p[i];
      }
      sum[c] += a;
      sumsq[c] += b;
    }
  }
  SPATIAL_CHECK(npix > 0, "compute_norm_stats: empty index set");
  for (int c = 0; c < 3; ++c) {
    s.mean[c] = sum[c] / static_cast<double>(npix);
    const double var = sumsq[c] / static_cast<double>(npix) - s.mean[c] * s.mean[c];
    s.stddev[c] = std::sqrt(std::max(var, 1e-8));
  }
  return s;
}

SplitSpec make_pretrain_split(std::size_t n, std::size_t count, std::uint64_t seed) {
  SPATIAL_CHECK_CONFIG(count <= n, "pretrain split larger than the dataset");
  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  Rng rng = Rng::stream(seed, {0x53504c49ull});
  rng.shuffle(idx);
  if (count > 0) idx.resize(count);
  return {SplitRole::kPretrain, std::move(idx), seed};
}

std::pair<SplitSpec, SplitSpec> make_disjoint_splits(std::size_t n, std::size_t first, std::size_t second,
                                                     std::uint64_t seed) {
  SPATIAL_CHECK_CONFIG(first + second <= n, "split sizes exceed the dataset");
  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  Rng rng = Rng::stream(seed, {0x53504c32ull});
  rng.shuffle(idx);
  SplitSpec a{SplitRole::kProbeTrain, {idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(first)}, seed};
  SplitSpec b{SplitRole::kProbeTest,
              {idx.begin() + static_cast<std::ptrdiff_t>(first),
               idx.begin() + static_cast<std::ptrdiff_t>(first + second)},
              seed};
  return {std::move(a), std::move(b)};
}

EvalTaskSpec cross_domain_task(DatasetId train_ds, DatasetId test_ds) {
  SPATIAL_CHECK_CONFIG(traits(train_ds).side == traits(test_ds).side,
                       "cross-domain task requires matching image geometry");
  EvalTaskSpec t;
  t.pretrain_dataset = train_ds;
  t.probe_dataset = test_ds;
  t.name = std::string(traits(train_ds).name) + "->" + traits(test_ds).name;
  return t;
}

EvalTaskSpec same_domain_task(DatasetId ds) { return cross_domain_task(ds, ds); }

EvalTaskSpec task_from_name(const std::string& name) {
  const auto arrow = name.find("->");
  if (arrow == std::string::npos) return same_domain_task(dataset_from_name(name));
  return cross_domain_task(dataset_from_name(name.substr(0, arrow)), dataset_from_name(name.substr(arrow + 2)));
}

}  // namespace spatial::data
