#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ldenhancer/network.hpp"
#include "ldenhancer/tensor.hpp"

namespace ldenhancer {

// Binary layout, all integers little-endian:
//   "LDEW" | u32 version (1) | u32 entry count
//   per entry: u32 name length | UTF-8 name | u32 rank | u64 dims[rank] |
//              float32 values[prod(dims)] (row-major, little-endian)
struct ArchiveEntry {
  std::string name;
  Dims dims;
  std::vector<float> values;
};

class WeightArchive {
 public:
  void add(std::string name, Dims dims, std::vector<float> values);
  template <typename T>
  void add(std::string name, const Tensor<T>& t) {
    std::vector<float> v(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) v[i] = static_cast<float>(t[i]);
    add(std::move(name), t.dims(), std::move(v));
  }

  const std::vector<ArchiveEntry>& entries() const { return entries_; }
  const ArchiveEntry* find(const std::string& name) const;
  // Throws IoError naming the missing entry.
  const ArchiveEntry& at(const std::string& name) const;
  template <typename T>
  Tensor<T> tensor(const std::string& name) const {
    const ArchiveEntry& e = at(name);
    Tensor<T> t(e.dims);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(e.values[i]);
    return t;
  }

  void save(const std::filesystem::path& path) const;
  static WeightArchive load(const std::filesystem::path& path);

 private:
  std::vector<ArchiveEntry> entries_;
};

// Parameters and batch-norm running statistics under their dotted names.
template <typename T>
WeightArchive archive_network(Network<T>& net);
// Names and shapes must match the network exactly.
template <typename T>
void restore_network(Network<T>& net, const WeightArchive& archive);

template <typename T>
void save_network(Network<T>& net, const std::filesystem::path& path) {
  archive_network(net).save(path);
}

template <typename T>
void load_network(Network<T>& net, const std::filesystem::path& path) {
  restore_network(net, WeightArchive::load(path));
}

}  // namespace ldenhancer
