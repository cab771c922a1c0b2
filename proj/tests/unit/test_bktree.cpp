#include <gtest/gtest.h>

#include <algorithm>

#include "memetect/bktree.hpp"
#include "memetect/fingerprint.hpp"
#include "memetect/random.hpp"

using namespace memetect;

namespace {

std::vector<BkTree::Result> brute(const std::vector<std::uint64_t>& hashes, std::uint64_t q) {
  std::vector<BkTree::Result> out;
  for (std::uint32_t i = 0; i < hashes.size(); ++i) out.push_back({i, hamming(q, hashes[i])});
  std::sort(out.begin(), out.end(), [](auto& a, auto& b) { return std::tie(a.distance, a.id) < std::tie(b.distance, b.id); });
  return out;
}

}  // namespace

TEST(BkTree, EmptyTree) {
  BkTree t;
  EXPECT_TRUE(t.nearest(0, 5).empty());
  EXPECT_TRUE(t.within(0, 64).empty());
}

TEST(BkTree, NearestMatchesBruteForce) {
  SplitMix64 rng(77);
  std::vector<std::uint64_t> hashes;
  BkTree t;
  for (std::uint32_t i = 0; i < 500; ++i) {
    // Clustered values so ties and small distances occur.
    const auto h = i % 3 == 0 && i > 0 ? hashes[i - 1] ^ (1ULL << (rng.next() % 64)) : rng.next();
    hashes.push_back(h);
    t.insert(h, i);
  }
  for (int q = 0; q < 50; ++q) {
    const auto query = q % 2 ? hashes[rng.uniform_below(hashes.size())] : rng.next();
    auto want = brute(hashes, query);
    want.resize(20);
    EXPECT_EQ(t.nearest(query, 20), want);
  }
}

TEST(BkTree, WithinRadius) {
  BkTree t;
  t.insert(0b0000, 0);
  t.insert(0b0001, 1);
  t.insert(0b0011, 2);
  t.insert(0b0111, 3);
  t.insert(0b0001, 4);  // duplicate hash
  const auto r = t.within(0, 2);
  ASSERT_EQ(r.size(), 4u);
  EXPECT_EQ(r[0], (BkTree::Result{0, 0}));
  EXPECT_EQ(r[1], (BkTree::Result{1, 1}));
  EXPECT_EQ(r[2], (BkTree::Result{4, 1}));
  EXPECT_EQ(r[3], (BkTree::Result{2, 2}));
}

TEST(BkTree, PrunesSearch) {
  SplitMix64 rng(3);
  BkTree t;
  for (std::uint32_t i = 0; i < 5000; ++i) t.insert(rng.next(), i);
  t.within(rng.next(), 4);
  EXPECT_LT(t.last_visits(), 5000u);
}
