#include "ldenhancer/weight_archive.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace ldenhancer {

namespace {

constexpr char kMagic[4] = {'L', 'D', 'E', 'W'};
constexpr std::uint32_t kVersion = 1;

template <typename U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(U)];
    std::memcpy(b, &v, sizeof(U));
    for (std::size_t i = 0; i < sizeof(U) / 2; ++i) std::swap(b[i], b[sizeof(U) - 1 - i]);
    std::memcpy(&v, b, sizeof(U));
  }
  return v;
}

template <typename U>
void put(std::ostream& os, U v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(U));
}

template <typename U>
U get(std::istream& is, const std::filesystem::path& path) {
  U v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(U))) throw IoError("weight archive truncated: " + path.string());
  return to_little(v);
}

}  // namespace

void WeightArchive::add(std::string name, Dims dims, std::vector<float> values) {
  if (element_count(dims) != values.size()) throw ShapeError("weight archive: size mismatch for " + name);
  if (find(name)) throw ValueError("weight archive: duplicate entry " + name);
  entries_.push_back({std::move(name), std::move(dims), std::move(values)});
}

const ArchiveEntry* WeightArchive::find(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return &e;
  return nullptr;
}

const ArchiveEntry& WeightArchive::at(const std::string& name) const {
  if (const ArchiveEntry* e = find(name)) return *e;
  throw IoError("weight archive: missing entry " + name);
}

void WeightArchive::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write weight archive " + path.string());
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& e : entries_) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(e.name.size()));
    os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(e.dims.size()));
    for (auto d : e.dims) put<std::uint64_t>(os, d);
    for (float v : e.values) put<std::uint32_t>(os, std::bit_cast<std::uint32_t>(v));
  }
  if (!os) throw IoError("failed writing weight archive " + path.string());
}

WeightArchive WeightArchive::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read weight archive " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("not a weight archive: " + path.string());
  }
  if (get<std::uint32_t>(is, path) != kVersion) throw IoError("unsupported weight archive version: " + path.string());
  const auto count = get<std::uint32_t>(is, path);
  WeightArchive archive;
  for (std::uint32_t k = 0; k < count; ++k) {
    ArchiveEntry e;
    const auto len = get<std::uint32_t>(is, path);
    if (len > (1u << 20)) throw IoError("weight archive: implausible name length in " + path.string());
    e.name.resize(len);
    if (!is.read(e.name.data(), len)) throw IoError("weight archive truncated: " + path.string());
    const auto rank = get<std::uint32_t>(is, path);
    if (rank > 8) throw IoError("weight archive: implausible rank for " + e.name);
    for (std::uint32_t r = 0; r < rank; ++r) e.dims.push_back(static_cast<std::size_t>(get<std::uint64_t>(is, path)));
    const std::size_t n = element_count(e.dims);
    if (n > (std::size_t{1} << 32)) throw IoError("weight archive: implausible size for " + e.name);
    e.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) e.values[i] = std::bit_cast<float>(get<std::uint32_t>(is, path));
    archive.entries_.push_back(std::move(e));
  }
  return archive;
}

template <typename T>
WeightArchive archive_network(Network<T>& net) {
  WeightArchive a;
  for (const auto& p : net.parameters()) a.add(p.name, p.param->value);
  for (const auto& b : net.buffers()) a.add(b.name, *b.tensor);
  return a;
}

template <typename T>
void restore_network(Network<T>& net, const WeightArchive& archive) {
  auto load_into = [&](const std::string& name, Tensor<T>& dst) {
    const ArchiveEntry& e = archive.at(name);
    if (e.dims != dst.dims()) {
      throw ShapeError("weight archive: " + name + " has shape " + to_string(e.dims) + ", network expects " +
                       to_string(dst.dims()));
    }
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(e.values[i]);
  };
  for (const auto& p : net.parameters()) load_into(p.name, p.param->value);
  for (const auto& b : net.buffers()) load_into(b.name, *b.tensor);
}

template WeightArchive archive_network<float>(Network<float>&);
template WeightArchive archive_network<double>(Network<double>&);
template void restore_network<float>(Network<float>&, const WeightArchive&);
template void restore_network<double>(Network<double>&, const WeightArchive&);

}  // namespace ldenhancer
