#include "cfpn/checkpoint.hpp"

#include <bit>
#include <cmath>

#include "cfpn/epoch_file.hpp"

namespace cfpn {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

void put_segment(std::string& out, const std::string& name, const Tensor& t) {
  out.push_back(static_cast<char>(name.size()));
  out += name;
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
  for (double v : t.values()) put_f64(out, v);
}

Tensor meta_tensor(const ModelConfig& c) {
  return Tensor({12}, {static_cast<double>(c.channels), static_cast<double>(c.samples),
                       static_cast<double>(c.e1), static_cast<double>(c.e2), static_cast<double>(c.z),
                       c.ae_output == OutputActivation::relu ? 0.0 : 1.0,
                       static_cast<double>(c.nsdru_channels), static_cast<double>(c.branches),
                       static_cast<double>(c.hidden), c.filter.f_low, c.filter.f_high,
                       static_cast<double>(c.filter.order)});
}

ModelConfig config_from_meta(const Tensor& m) {
  if (m.size() != 12) throw FormatError("checkpoint: meta segment must hold 12 values");
  auto count = [&](std::size_t i) {
    const double v = m[i];
    if (!(v >= 0.0) || v != std::floor(v)) throw FormatError("checkpoint: meta value " + std::to_string(i) + " is not a count");
    return static_cast<std::size_t>(v);
  };
  ModelConfig c;
  c.channels = count(0);
  c.samples = count(1);
  c.e1 = count(2);
  c.e2 = count(3);
  c.z = count(4);
  c.ae_output = m[5] == 0.0 ? OutputActivation::relu : OutputActivation::linear;
  c.nsdru_channels = count(6);
  c.branches = count(7);
  c.hidden = count(8);
  c.filter.f_low = m[9];
  c.filter.f_high = m[10];
  c.filter.order = static_cast<int>(count(11));
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: invalid model config: ") + e.what());
  }
  return c;
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  bool has(std::size_t n) const { return pos_ + n <= bytes_.size(); }
  std::size_t pos() const { return pos_; }

  std::uint8_t u8() {
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }
  std::string str(std::size_t n) {
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

struct RawSegment {
  SegmentInfo info;
  std::size_t payload_offset = 0;
};

// Reads one segment header; `expected` names the segment for truncation errors.
bool read_segment_header(Reader& r, RawSegment& seg, const std::string& expected) {
  auto truncated = [&] {
    throw FormatError("checkpoint truncated: missing segment '" + expected + "' at offset " +
                      std::to_string(r.pos()));
  };
  if (!r.has(1)) truncated();
  const std::size_t len = r.u8();
  if (!r.has(len + 4)) truncated();
  seg.info.name = r.str(len);
  const std::uint32_t rank = r.u32();
  if (rank > 8) throw FormatError("checkpoint: segment '" + seg.info.name + "' has implausible rank " + std::to_string(rank));
  if (!r.has(4 * rank)) truncated();
  seg.info.dims.clear();
  for (std::uint32_t i = 0; i < rank; ++i) seg.info.dims.push_back(r.u32());
  seg.info.elements = shape_product(seg.info.dims);
  seg.payload_offset = r.pos();
  if (!r.has(8 * seg.info.elements))
    throw FormatError("checkpoint truncated: payload of segment '" + seg.info.name + "' is incomplete");
  return true;
}

void read_header(Reader& r, std::uint32_t& segments) {
  if (!r.has(4) || r.str(4) != "CFPN") throw FormatError("checkpoint: bad magic at offset 0");
  if (!r.has(8)) throw FormatError("checkpoint truncated: header incomplete");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint: unsupported version " + std::to_string(version) + " (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  segments = r.u32();
}

}  // namespace

std::string encode_checkpoint(const ModelParams& params, const ModelConfig& config) {
  std::string out = "CFPN";
  put_u32(out, kCheckpointVersion);
  std::uint32_t count = 1;
  params.visit([&](const std::string&, const Tensor&) { ++count; });
  put_u32(out, count);
  put_segment(out, kMetaSegment, meta_tensor(config));
  params.visit([&](const std::string& name, const Tensor& t) { put_segment(out, name, t); });
  return out;
}

std::vector<SegmentInfo> list_segments(const std::string& bytes) {
  Reader r(bytes);
  std::uint32_t count = 0;
  read_header(r, count);
  std::vector<SegmentInfo> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    RawSegment seg;
    read_segment_header(r, seg, "#" + std::to_string(i));
    for (std::size_t j = 0; j < seg.info.elements; ++j) r.f64();
    out.push_back(seg.info);
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  std::uint32_t count = 0;
  read_header(r, count);

  RawSegment meta;
  read_segment_header(r, meta, kMetaSegment);
  if (meta.info.name != kMetaSegment) throw FormatError("checkpoint: first segment must be 'meta'");
  Tensor meta_values(meta.info.dims);
  for (auto& v : meta_values.values()) v = r.f64();

  Checkpoint ck;
  ck.config = config_from_meta(meta_values);
  ck.params = zero_model(ck.config);

  std::vector<std::pair<std::string, Tensor*>> expected;
  ck.params.visit([&](const std::string& n, Tensor& t) { expected.emplace_back(n, &t); });
  if (count != expected.size() + 1)
    throw FormatError("checkpoint: segment count " + std::to_string(count) + " does not match model (" +
                      std::to_string(expected.size() + 1) + ")");

  for (auto& [name, tensor] : expected) {
    RawSegment seg;
    read_segment_header(r, seg, name);
    if (seg.info.name != name)
      throw FormatError("checkpoint: expected segment '" + name + "', found '" + seg.info.name + "'");
    if (seg.info.dims != tensor->shape())
      throw FormatError("checkpoint: segment '" + name + "' has shape " + shape_string(seg.info.dims) +
                        ", model expects " + shape_string(tensor->shape()));
    for (auto& v : tensor->values()) v = r.f64();
  }
  if (r.has(1)) throw FormatError("checkpoint: trailing bytes at offset " + std::to_string(r.pos()));
  return ck;
}

void save_checkpoint(const ModelParams& params, const ModelConfig& config, const std::filesystem::path& path) {
  write_file_atomic(path, encode_checkpoint(params, config));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace cfpn
