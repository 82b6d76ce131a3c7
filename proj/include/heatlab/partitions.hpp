#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace heatlab {

inline constexpr int kMaxPartitionOrder = 12;

/// Bell number B(n) from the recurrence B(n+1) = sum_k C(n,k) B(k).
std::uint64_t bell_number(int n);

/// All set partitions of {1..n}, stored as restricted-growth strings in
/// lexicographic order. Block labels are 0-based; block b of partition i
/// contains every element j with rgs(i)[j] == b.
class PartitionFamily {
 public:
  explicit PartitionFamily(int n);

  int n() const { return n_; }
  std::size_t size() const { return block_counts_.size(); }

  std::span<const std::uint8_t> rgs(std::size_t i) const {
    return {codes_.data() + i * static_cast<std::size_t>(n_),
            static_cast<std::size_t>(n_)};
  }
  int block_count(std::size_t i) const { return block_counts_[i]; }

  /// Blocks as lists of 1-based element indices.
  std::vector<std::vector<int>> blocks(std::size_t i) const;

  /// Block sizes of partition i written into `sizes` (length >= block_count).
  void block_sizes(std::size_t i, std::span<int> sizes) const;

 private:
  int n_;
  std::vector<std::uint8_t> codes_;
  std::vector<std::uint8_t> block_counts_;
};

/// Cached family for 1 <= n <= 12; thread-safe.
const PartitionFamily& set_partitions(int n);

/// Partitions of order n grouped by their multiset of block sizes. In one
/// dimension every partition with the same block-size signature contributes
/// the same product, so the signed partition sums can be evaluated per group.
struct BlockSignature {
  std::vector<int> sizes;  // sorted descending
  std::uint64_t count = 0;
};

const std::vector<BlockSignature>& block_signatures(int n);

}  // namespace heatlab
