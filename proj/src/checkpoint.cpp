#include "risu/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <string>

namespace risu {
namespace {

class Writer {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    checksum_ += bits;
    put(bits, 8);
  }
  void raw(const char* s, std::size_t n) { bytes_.insert(bytes_.end(), s, s + n); }

  std::uint64_t checksum() const { return checksum_; }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  std::vector<std::uint8_t> bytes_;
  std::uint64_t checksum_ = 0;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() {
    const std::uint64_t bits = get(8);
    checksum_ += bits;
    return std::bit_cast<double>(bits);
  }
  void expect(const char* s, std::size_t n) {
    need(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (bytes_[pos_ + i] != static_cast<std::uint8_t>(s[i]))
        throw CheckpointError("checkpoint: bad magic bytes");
    }
    pos_ += n;
  }

  std::uint64_t checksum() const { return checksum_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw CheckpointError("checkpoint: truncated file");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
  std::uint64_t checksum_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const UnfoldingParams& params) {
  params.validate();
  const Index d = params.dim();
  Writer w;
  w.raw("RISU", 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(d));
  w.u32(static_cast<std::uint32_t>(params.layers.size()));
  for (const auto& l : params.layers) {
    w.f64(l.delta1);
    w.f64(l.delta2);
    w.f64(l.delta3);
    for (Index r = 0; r < d; ++r) {
      for (Index c = 0; c < d; ++c) w.f64(l.weight(r, c));
    }
    for (Index r = 0; r < d; ++r) w.f64(l.bias(r));
  }
  w.u64(w.checksum());
  return w.take();
}

UnfoldingParams decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  r.expect("RISU", 4);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
  const Index d = r.u32();
  const std::uint32_t depth = r.u32();
  if (d == 0 || depth == 0) throw CheckpointError("checkpoint: empty network");
  const std::size_t payload =
      static_cast<std::size_t>(depth) * (3 + static_cast<std::size_t>(d * d + d)) * 8;
  if (r.remaining() != payload + 8)
    throw CheckpointError("checkpoint: size does not match header (D = " + std::to_string(d) +
                          ", L = " + std::to_string(depth) + ")");

  UnfoldingParams params;
  params.layers.resize(depth);
  for (auto& l : params.layers) {
    l.delta1 = r.f64();
    l.delta2 = r.f64();
    l.delta3 = r.f64();
    l.weight.resize(d, d);
    for (Index row = 0; row < d; ++row) {
      for (Index c = 0; c < d; ++c) l.weight(row, c) = r.f64();
    }
    l.bias.resize(d);
    for (Index row = 0; row < d; ++row) l.bias(row) = r.f64();
  }
  const std::uint64_t computed = r.checksum();
  if (r.u64() != computed) throw CheckpointError("checkpoint: checksum mismatch");
  return params;
}

void save_checkpoint(const UnfoldingParams& params, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

UnfoldingParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  return decode_checkpoint(bytes);
}

}  // namespace risu
