#include "heatlab/partitions.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "heatlab/error.hpp"

namespace heatlab {

namespace {

void check_order(int n) {
  if (n < 1 || n > kMaxPartitionOrder) {
    throw ArgumentError("set partition order must lie in [1, " +
                        std::to_string(kMaxPartitionOrder) + "], got " +
                        std::to_string(n));
  }
}

}  // namespace

std::uint64_t bell_number(int n) {
  if (n < 0 || n > 25) throw ArgumentError("bell_number: n out of range");
  std::vector<std::uint64_t> bell(static_cast<std::size_t>(n) + 1, 0);
  bell[0] = 1;
  for (int m = 0; m < n; ++m) {
    std::uint64_t c = 1;  // C(m, k)
    std::uint64_t acc = 0;
    for (int k = 0; k <= m; ++k) {
      acc += c * bell[k];
      c = c * (m - k) / (k + 1);
    }
    bell[m + 1] = acc;
  }
  return bell[n];
}

PartitionFamily::PartitionFamily(int n) : n_(n) {
  check_order(n);
  const auto total = bell_number(n);
  codes_.reserve(total * static_cast<std::size_t>(n));
  block_counts_.reserve(total);

  // Restricted-growth strings a[0..n-1]: a[0] = 0, a[j] <= 1 + max(a[0..j-1]).
  std::array<std::uint8_t, kMaxPartitionOrder> a{};
  std::array<std::uint8_t, kMaxPartitionOrder> prefix_max{};
  while (true) {
    codes_.insert(codes_.end(), a.begin(), a.begin() + n);
    block_counts_.push_back(static_cast<std::uint8_t>(prefix_max[n - 1] + 1));

    int j = n - 1;
    while (j > 0 && a[j] > prefix_max[j - 1]) --j;
    if (j == 0) break;
    ++a[j];
    prefix_max[j] = std::max(prefix_max[j - 1], a[j]);
    for (int k = j + 1; k < n; ++k) {
      a[k] = 0;
      prefix_max[k] = prefix_max[j];
    }
  }
}

std::vector<std::vector<int>> PartitionFamily::blocks(std::size_t i) const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(block_count(i)));
  const auto code = rgs(i);
  for (int j = 0; j < n_; ++j) out[code[j]].push_back(j + 1);
  return out;
}

void PartitionFamily::block_sizes(std::size_t i, std::span<int> sizes) const {
  const int m = block_count(i);
  std::fill(sizes.begin(), sizes.begin() + m, 0);
  for (auto b : rgs(i)) ++sizes[b];
}

const PartitionFamily& set_partitions(int n) {
  check_order(n);
  static std::array<std::unique_ptr<PartitionFamily>, kMaxPartitionOrder + 1> cache;
  static std::array<std::once_flag, kMaxPartitionOrder + 1> once;
  std::call_once(once[n], [n] { cache[n] = std::make_unique<PartitionFamily>(n); });
  return *cache[n];
}

const std::vector<BlockSignature>& block_signatures(int n) {
  check_order(n);
  static std::array<std::vector<BlockSignature>, kMaxPartitionOrder + 1> cache;
  static std::array<std::once_flag, kMaxPartitionOrder + 1> once;
  std::call_once(once[n], [n] {
    const auto& family = set_partitions(n);
    std::map<std::vector<int>, std::uint64_t> groups;
    std::array<int, kMaxPartitionOrder> sizes{};
    for (std::size_t i = 0; i < family.size(); ++i) {
      const int m = family.block_count(i);
      family.block_sizes(i, sizes);
      std::vector<int> key(sizes.begin(), sizes.begin() + m);
      std::sort(key.begin(), key.end(), std::greater<>());
      ++groups[key];
    }
    auto& out = cache[n];
    for (auto& [key, count] : groups) out.push_back({key, count});
  });
  return cache[n];
}

}  // namespace heatlab
