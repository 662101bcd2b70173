#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cfpn/model.hpp"

namespace cfpn {

// Checkpoint layout (little-endian):
//   "CFPN" | u32 version=1 | u32 segment count |
//   per segment: u8 name length, name bytes, u32 rank, u32 dims[rank], f64 payload
// The first segment, "meta", holds the ModelConfig as 12 float64 values
// (ch, t, e1, e2, z, ae_output, nsdru_channels, branches, hidden, f_low,
// f_high, filter_order). Parameter segments follow in ModelParams::visit order.
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr const char* kMetaSegment = "meta";

struct Checkpoint {
  ModelConfig config;
  ModelParams params;
};

struct SegmentInfo {
  std::string name;
  std::vector<std::size_t> dims;
  std::size_t elements = 0;
};

std::string encode_checkpoint(const ModelParams& params, const ModelConfig& config);
Checkpoint decode_checkpoint(const std::string& bytes);
/// Segment headers only; no shape validation against a config.
std::vector<SegmentInfo> list_segments(const std::string& bytes);

void save_checkpoint(const ModelParams& params, const ModelConfig& config, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cfpn
