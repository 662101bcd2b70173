#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cfpn/signal.hpp"

namespace cfpn {

// Epoch file layout (little-endian):
//   "EEG1" | u32 version=1 | u32 ch | u32 t | f32 sampling_rate | u8 label |
//   u8[15] subject_id, NUL padded | f32 samples[ch*t], channel-major
inline constexpr std::uint32_t kEpochFileVersion = 1;
inline constexpr std::size_t kEpochHeaderBytes = 4 + 4 + 4 + 4 + 4 + 1 + 15;

std::string encode_epoch(const Epoch& epoch);
Epoch decode_epoch(const std::string& bytes);

/// Samples are narrowed to float32 on write.
void write_epoch_file(const Epoch& epoch, const std::filesystem::path& path);
Epoch read_epoch_file(const std::filesystem::path& path);

/// One relative epoch path per line; blank lines and '#' comments ignored.
std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<std::string>& entries, const std::filesystem::path& path);
/// Reads every epoch listed in a manifest, resolving paths against its directory.
std::vector<Epoch> load_dataset(const std::filesystem::path& manifest);

/// Writes `bytes` to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace cfpn
