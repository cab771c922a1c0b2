#include "memetect/bktree.hpp"

#include <algorithm>
#include <cstdlib>
#include <queue>
#include <tuple>

#include "memetect/fingerprint.hpp"

namespace memetect {

namespace {

bool closer(const BkTree::Result& a, const BkTree::Result& b) {
  return std::tie(a.distance, a.id) < std::tie(b.distance, b.id);
}

}  // namespace

void BkTree::insert(std::uint64_t hash, std::uint32_t id) {
  const auto index = static_cast<std::uint32_t>(nodes_.size());
  if (nodes_.empty()) {
    nodes_.push_back({hash, id, {}});
    return;
  }
  std::uint32_t at = 0;
  for (;;) {
    const int d = hamming(nodes_[at].hash, hash);
    auto& kids = nodes_[at].children;
    auto it = std::find_if(kids.begin(), kids.end(), [d](const auto& c) { return c.first == d; });
    if (it == kids.end()) {
      kids.emplace_back(d, index);
      break;
    }
    at = it->second;
  }
  nodes_.push_back({hash, id, {}});
}

std::vector<BkTree::Result> BkTree::nearest(std::uint64_t query, std::size_t k) const {
  visits_ = 0;
  std::vector<Result> best;  // max-heap under `closer`
  if (nodes_.empty() || k == 0) return best;

  auto bound = [&]() { return best.size() < k ? 65 : best.front().distance; };
  std::vector<std::pair<std::uint32_t, int>> stack{{0, 0}};  // (node, lower bound)
  while (!stack.empty()) {
    const auto [at, lower] = stack.back();
    stack.pop_back();
    if (lower > bound()) continue;
    const Node& node = nodes_[at];
    ++visits_;
    const int d = hamming(node.hash, query);
    const Result r{node.id, d};
    if (best.size() < k) {
      best.push_back(r);
      std::push_heap(best.begin(), best.end(), closer);
    } else if (closer(r, best.front())) {
      std::pop_heap(best.begin(), best.end(), closer);
      best.back() = r;
      std::push_heap(best.begin(), best.end(), closer);
    }
    // Values under edge e are at least |d - e| from the query. Equal bounds
    // are still explored because a smaller id may win the tie.
    const int limit = bound();
    for (const auto& [e, child] : node.children) {
      if (std::abs(d - e) <= limit) stack.emplace_back(child, std::abs(d - e));
    }
  }
  std::sort_heap(best.begin(), best.end(), closer);
  return best;
}

std::vector<BkTree::Result> BkTree::within(std::uint64_t query, int radius) const {
  visits_ = 0;
  std::vector<Result> out;
  if (nodes_.empty()) return out;
  std::vector<std::uint32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    ++visits_;
    const int d = hamming(node.hash, query);
    if (d <= radius) out.push_back({node.id, d});
    for (const auto& [e, child] : node.children) {
      if (std::abs(d - e) <= radius) stack.push_back(child);
    }
  }
  std::sort(out.begin(), out.end(), closer);
  return out;
}

}  // namespace memetect
