#pragma once

#include <cstdint>
#include <vector>

namespace memetect {

/// Burkhard-Keller tree over 64-bit hashes with Hamming distance.
/// Values are (hash, id) pairs; ids are caller-assigned and break ties.
class BkTree {
 public:
  struct Result {
    std::uint32_t id;
    int distance;
    friend bool operator==(const Result&, const Result&) = default;
  };

  void insert(std::uint64_t hash, std::uint32_t id);
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }

  /// The k nearest values ordered by (distance, id). Exact.
  std::vector<Result> nearest(std::uint64_t query, std::size_t k) const;

  /// Every value within `radius`, ordered by (distance, id).
  std::vector<Result> within(std::uint64_t query, int radius) const;

  /// Number of distance evaluations made by the last query (for benchmarks).
  std::size_t last_visits() const { return visits_; }

 private:
  struct Node {
    std::uint64_t hash;
    std::uint32_t id;
    std::vector<std::pair<int, std::uint32_t>> children;  // (edge distance, node index)
  };
  std::vector<Node> nodes_;
  mutable std::size_t visits_ = 0;
};

}  // namespace memetect
