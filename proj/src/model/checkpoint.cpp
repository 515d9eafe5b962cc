#include "spatial/model/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace spatial::model {

void Checkpoint::save(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) data_fail("cannot open checkpoint for writing: " + tmp);
    BinWriter w(out);
    w.u32(kMagic);
    w.u32(kVersion);
    w.str(config.canonical_json());
    w.u64(config_hash);
    w.str(arch_name(arch));
    w.str(train::patch_mode_name(patch_mode));
    for (double v : norm.mean) w.f64(v);
    for (double v : norm.stddev) w.f64(v);
    w.u32(static_cast<std::uint32_t>(image_side));
    w.u32(static_cast<std::uint32_t>(epoch));
    w.i64(step);
    encoder->save(w);
    const_cast<RelationHead<float>*>(head.get())->save(w);
    w.str(adam_blob);
    if (!w.ok()) data_fail("short write on checkpoint: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) data_fail("cannot open checkpoint: " + path);
  BinReader r(in);
  const auto magic = r.u32();
  if (magic != kMagic) data_fail("not a checkpoint file: " + path);
  const auto version = r.u32();
  if (version != kVersion)
    data_fail("checkpoint format version " + std::to_string(version) + " unsupported (expected " +
              std::to_string(kVersion) + "): " + path);
  Checkpoint ck;
  ck.config = train::RunConfig::from_json_text(r.str());
  ck.config_hash = r.u64();
  ck.arch = arch_from_name(r.str());
  ck.patch_mode = train::patch_mode_from_name(r.str());
  for (double& v : ck.norm.mean) v = r.f64();
  for (double& v : ck.norm.stddev) v = r.f64();
  ck.image_side = static_cast<int>(r.u32());
  ck.epoch = static_cast<int>(r.u32());
  ck.step = r.i64();
  ck.encoder = std::make_unique<Encoder>(ck.arch, /*init_seed=*/0);
  ck.encoder->load(r);
  ck.head = std::make_unique<RelationHead<float>>(ck.encoder->feature_dim(), 256, 0);
  ck.head->load(r);
  ck.adam_blob = r.str();
  return ck;
}

}  // namespace spatial::model
