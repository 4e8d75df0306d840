#include "icubench/neural/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "icubench/errors.hpp"

namespace icubench::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'I', 'C', 'U', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw DataError("checkpoint truncated: " + path.string());
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamSet& params, std::uint64_t schema_hash) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint: " + path.string());
  out.write(kMagic, sizeof kMagic);
  put<std::uint64_t>(out, schema_hash);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.blocks().size()));
  for (const auto& b : params.blocks()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(b.name.size()));
    out.write(b.name.data(), static_cast<std::streamsize>(b.name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(b.value.rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(b.value.cols()));
    for (Eigen::Index r = 0; r < b.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < b.value.cols(); ++c) put<double>(out, b.value(r, c));
    }
  }
  if (!out) throw DataError("failed writing checkpoint: " + path.string());
}

void load_checkpoint(const std::filesystem::path& path, ParamSet& params, std::uint64_t expected_schema_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw DataError("not a checkpoint: " + path.string());
  }
  const auto hash = get<std::uint64_t>(in, path);
  if (hash != expected_schema_hash) {
    throw DataError("checkpoint schema hash mismatch: file was trained against different vocabularies");
  }
  const auto n = get<std::uint32_t>(in, path);
  if (n != params.blocks().size()) throw DataError("checkpoint block count mismatch");
  std::vector<Mat> values;
  values.reserve(n);
  for (const auto& b : params.blocks()) {
    const auto len = get<std::uint32_t>(in, path);
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw DataError("checkpoint truncated: " + path.string());
    const auto rows = get<std::uint32_t>(in, path);
    const auto cols = get<std::uint32_t>(in, path);
    if (name != b.name || rows != b.value.rows() || cols != b.value.cols()) {
      throw DataError("checkpoint block '" + name + "' does not match model block '" + b.name + "'");
    }
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = get<double>(in, path);
    }
    values.push_back(std::move(m));
  }
  std::size_t i = 0;
  for (auto& b : params.blocks()) b.value = std::move(values[i++]);
}

}  // namespace icubench::nn
