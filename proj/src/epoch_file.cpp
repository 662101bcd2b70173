#include "cfpn/epoch_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cfpn/errors.hpp"

namespace cfpn {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t get_u32(const std::string& in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  return v;
}

[[noreturn]] void format_error(const std::string& what, std::size_t offset) {
  throw FormatError("epoch file: " + what + " at offset " + std::to_string(offset));
}

}  // namespace

std::string encode_epoch(const Epoch& epoch) {
  if (epoch.data.size() != epoch.channels * epoch.samples)
    throw ShapeError("encode_epoch: data length does not match channels*samples");
  std::string out = "EEG1";
  out.reserve(kEpochHeaderBytes + 4 * epoch.data.size());
  put_u32(out, kEpochFileVersion);
  put_u32(out, static_cast<std::uint32_t>(epoch.channels));
  put_u32(out, static_cast<std::uint32_t>(epoch.samples));
  put_f32(out, static_cast<float>(epoch.sampling_rate));
  out.push_back(static_cast<char>(epoch.label));
  std::string id = epoch.subject_id.substr(0, 15);
  id.resize(15, '\0');
  out += id;
  for (double v : epoch.data) put_f32(out, static_cast<float>(v));
  return out;
}

Epoch decode_epoch(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "EEG1") != 0) format_error("bad magic", 0);
  if (bytes.size() < kEpochHeaderBytes) format_error("truncated header", bytes.size());
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kEpochFileVersion)
    format_error("unsupported version " + std::to_string(version), 4);

  Epoch e;
  e.channels = get_u32(bytes, 8);
  e.samples = get_u32(bytes, 12);
  e.sampling_rate = std::bit_cast<float>(get_u32(bytes, 16));
  e.label = static_cast<std::uint8_t>(bytes[20]);
  if (e.label > 1) format_error("label must be 0 or 1", 20);
  e.subject_id = bytes.substr(21, 15);
  e.subject_id.resize(std::strlen(e.subject_id.c_str()));

  const std::size_t count = e.channels * e.samples;
  const std::size_t need = kEpochHeaderBytes + 4 * count;
  if (bytes.size() < need)
    format_error("truncated payload: expected " + std::to_string(4 * count) + " sample bytes, found " +
                     std::to_string(bytes.size() - kEpochHeaderBytes),
                 bytes.size());
  if (bytes.size() > need) format_error("trailing bytes after payload", need);
  e.data.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    e.data[i] = std::bit_cast<float>(get_u32(bytes, kEpochHeaderBytes + 4 * i));
  return e;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_epoch_file(const Epoch& epoch, const std::filesystem::path& path) {
  write_file_atomic(path, encode_epoch(epoch));
}

Epoch read_epoch_file(const std::filesystem::path& path) {
  try {
    return decode_epoch(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::filesystem::path> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    entries.emplace_back(line.substr(first, last - first + 1));
  }
  return entries;
}

void write_manifest(const std::vector<std::string>& entries, const std::filesystem::path& path) {
  std::string text = "# epoch files, one per line\n";
  for (const auto& e : entries) text += e + "\n";
  write_file_atomic(path, text);
}

std::vector<Epoch> load_dataset(const std::filesystem::path& manifest) {
  const auto base = manifest.parent_path();
  std::vector<Epoch> epochs;
  for (const auto& rel : read_manifest(manifest)) epochs.push_back(read_epoch_file(base / rel));
  if (epochs.empty()) throw FormatError("manifest " + manifest.string() + " lists no epochs");
  return epochs;
}

}  // namespace cfpn
