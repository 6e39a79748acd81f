#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gazegrade/error.hpp"
#include "gazegrade/features.hpp"
#include "gazegrade/nn.hpp"

namespace gazegrade::nn {

// Binary container: magic, version, JSON header (config echo, normalizer,
// tensor directory), then raw float32 tensors. Little-endian, as produced
// and consumed on the same platform class.
inline constexpr char kCheckpointMagic[8] = {'G', 'A', 'Z', 'E', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  double window_size_s = 0;
  double nominal_rate = 0;
  FeatureStats normalizer;
};

namespace detail {

inline nlohmann::json moments_json(const FeatureStats::Moments& m) {
  return {{"mean", m.mean}, {"std", m.std}, {"constant", m.constant}};
}

inline FeatureStats::Moments moments_from_json(const nlohmann::json& j) {
  FeatureStats::Moments m;
  m.mean = j.at("mean").get<double>();
  m.std = j.at("std").get<double>();
  m.constant = j.at("constant").get<bool>();
  return m;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Model<float>& m,
                            const CheckpointMeta& meta) {
  nlohmann::json header;
  header["model"] = {{"seq_len", m.cfg.seq_len},
                     {"in_channels", m.cfg.in_channels},
                     {"stem_channels", m.cfg.stem_channels},
                     {"block_channels", m.cfg.block_channels},
                     {"kernel", m.cfg.kernel},
                     {"scalar_hidden", m.cfg.scalar_hidden},
                     {"fusion_hidden", m.cfg.fusion_hidden},
                     {"seed", m.cfg.seed}};
  header["window_size_s"] = meta.window_size_s;
  header["nominal_rate"] = meta.nominal_rate;
  header["normalizer"] = {{"afd", detail::moments_json(meta.normalizer.afd)},
                          {"fc", detail::moments_json(meta.normalizer.fc)},
                          {"aed", detail::moments_json(meta.normalizer.aed)}};

  nlohmann::json tensors = nlohmann::json::array();
  std::uint64_t offset = 0;
  m.for_each_param([&](const std::string& name, const Param<float>& p) {
    tensors.push_back({{"name", name},
                       {"rows", p.rows},
                       {"cols", p.cols},
                       {"offset", offset}});
    offset += p.v.size();
  });
  header["tensors"] = std::move(tensors);

  std::string hs = header.dump();
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCategory::io, "cannot open for writing: " + path);
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  std::uint32_t ver = kCheckpointVersion;
  os.write(reinterpret_cast<const char*>(&ver), sizeof(ver));
  std::uint64_t hlen = hs.size();
  os.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  m.for_each_param([&](const std::string&, const Param<float>& p) {
    os.write(reinterpret_cast<const char*>(p.v.data()),
             static_cast<std::streamsize>(p.v.size() * sizeof(float)));
  });
  if (!os) fail(ErrorCategory::io, "write failed: " + path);
}

struct LoadedCheckpoint {
  Model<float> model;
  CheckpointMeta meta;
};

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCategory::io, "cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    fail(ErrorCategory::parse, "not a model checkpoint: " + path);
  std::uint32_t ver = 0;
  is.read(reinterpret_cast<char*>(&ver), sizeof(ver));
  if (ver != kCheckpointVersion)
    fail(ErrorCategory::parse,
         "unsupported checkpoint version " + std::to_string(ver) + " in " + path);
  std::uint64_t hlen = 0;
  is.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  if (!is || hlen > (1u << 24)) fail(ErrorCategory::parse, "corrupt checkpoint header: " + path);
  std::string hs(hlen, '\0');
  is.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!is) fail(ErrorCategory::parse, "truncated checkpoint header: " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(hs);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::parse, std::string("bad checkpoint header json: ") + e.what());
  }

  LoadedCheckpoint out;
  try {
    const auto& jm = header.at("model");
    ModelConfig cfg;
    cfg.seq_len = jm.at("seq_len").get<int>();
    cfg.in_channels = jm.at("in_channels").get<int>();
    cfg.stem_channels = jm.at("stem_channels").get<int>();
    cfg.block_channels = jm.at("block_channels").get<std::vector<int>>();
    cfg.kernel = jm.at("kernel").get<int>();
    cfg.scalar_hidden = jm.at("scalar_hidden").get<int>();
    cfg.fusion_hidden = jm.at("fusion_hidden").get<int>();
    cfg.seed = jm.at("seed").get<std::uint64_t>();
    out.model = init_model<float>(cfg);
    out.meta.window_size_s = header.at("window_size_s").get<double>();
    out.meta.nominal_rate = header.at("nominal_rate").get<double>();
    const auto& jn = header.at("normalizer");
    out.meta.normalizer.afd = detail::moments_from_json(jn.at("afd"));
    out.meta.normalizer.fc = detail::moments_from_json(jn.at("fc"));
    out.meta.normalizer.aed = detail::moments_from_json(jn.at("aed"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::parse, std::string("bad checkpoint header: ") + e.what());
  }

  // Tensor directory must match the constructed model exactly.
  const auto& jt = header.at("tensors");
  std::size_t ti = 0;
  out.model.for_each_param([&](const std::string& name, Param<float>& p) {
    if (ti >= jt.size()) fail(ErrorCategory::parse, "checkpoint missing tensor: " + name);
    const auto& e = jt.at(ti++);
    if (e.at("name").get<std::string>() != name ||
        e.at("rows").get<int>() != p.rows || e.at("cols").get<int>() != p.cols)
      fail(ErrorCategory::parse, "checkpoint tensor mismatch at: " + name);
    is.read(reinterpret_cast<char*>(p.v.data()),
            static_cast<std::streamsize>(p.v.size() * sizeof(float)));
    if (!is) fail(ErrorCategory::parse, "truncated tensor data at: " + name);
  });
  if (ti != jt.size()) fail(ErrorCategory::parse, "checkpoint has extra tensors");
  return out;
}

}  // namespace gazegrade::nn
