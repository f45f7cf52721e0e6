#include "risu/dataset_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace risu {
namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(b, 8);
}

std::uint64_t get_le(std::istream& in, int n) {
  unsigned char b[8] = {};
  if (!in.read(reinterpret_cast<char*>(b), n)) throw std::runtime_error("dataset: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_le(in, 8)); }

}  // namespace

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const Index d = data.truths.rows();
  const Index n = data.size();
  out.write("RISD", 4);
  put_u32(out, kDatasetVersion);
  put_u32(out, static_cast<std::uint32_t>(d));
  put_u32(out, static_cast<std::uint32_t>(n));
  for (Index r = 0; r < d; ++r) {
    for (Index c = 0; c < d; ++c) put_f64(out, data.gram(r, c));
  }
  for (Index j = 0; j < n; ++j) {
    put_f64(out, data.snr_db[static_cast<std::size_t>(j)]);
    for (Index r = 0; r < d; ++r) put_f64(out, data.stats(r, j));
    for (Index r = 0; r < d; ++r) put_f64(out, data.truths(r, j));
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "RISD", 4) != 0)
    throw std::runtime_error("dataset: bad magic bytes");
  if (get_le(in, 4) != kDatasetVersion) throw std::runtime_error("dataset: unsupported version");
  const auto d = static_cast<Index>(get_le(in, 4));
  const auto n = static_cast<Index>(get_le(in, 4));

  Dataset data;
  data.gram.resize(d, d);
  for (Index r = 0; r < d; ++r) {
    for (Index c = 0; c < d; ++c) data.gram(r, c) = get_f64(in);
  }
  data.stats.resize(d, n);
  data.truths.resize(d, n);
  for (Index j = 0; j < n; ++j) {
    const double snr = get_f64(in);
    data.snr_db.push_back(snr);
    data.noise_var.push_back(noise_variance(snr));
    for (Index r = 0; r < d; ++r) data.stats(r, j) = get_f64(in);
    for (Index r = 0; r < d; ++r) data.truths(r, j) = get_f64(in);
  }
  return data;
}

}  // namespace risu
