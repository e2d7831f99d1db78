#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>

#include "hedb/crypto/crypto.hpp"
#include "hedb/index/cipher_btree.hpp"

namespace hedb {
namespace {

class CipherIndexTest : public ::testing::Test {
 protected:
  MasterKey master = MasterKey::generate();
  ColumnKey key = derive_column_key(master, "idx_col", Scheme::kOre);
  std::mt19937_64 rng{77};

  OreCipher enc(std::uint64_t v) { return ore_encrypt(v, key); }

  // Oracle: row ids of plaintext values in [lo, hi], sorted by (value, row id).
  static std::vector<std::uint64_t> oracle_range(const std::vector<std::pair<std::uint32_t, std::uint64_t>>& rows,
                                                 std::uint32_t lo, std::uint32_t hi) {
    std::vector<std::pair<std::uint32_t, std::uint64_t>> hits;
    for (const auto& r : rows)
      if (r.first >= lo && r.first <= hi) hits.push_back(r);
    std::sort(hits.begin(), hits.end());
    std::vector<std::uint64_t> out;
    for (const auto& h : hits) out.push_back(h.second);
    return out;
  }
};

TEST_F(CipherIndexTest, TenThousandRandomKeysScanInPlaintextOrder) {
  CipherBTree tree(16);
  std::vector<std::pair<std::uint32_t, std::uint64_t>> rows;
  for (std::uint64_t i = 0; i < 10000; ++i) {
    auto v = static_cast<std::uint32_t>(rng());
    rows.emplace_back(v, i);
    tree.insert({enc(v), i});
  }
  EXPECT_EQ(tree.check_invariants(), "");
  EXPECT_EQ(tree.range_scan(RangeBound::unbounded(), RangeBound::unbounded()),
            oracle_range(rows, 0, UINT32_MAX));
  for (int q = 0; q < 20; ++q) {
    auto a = static_cast<std::uint32_t>(rng()), b = static_cast<std::uint32_t>(rng());
    if (a > b) std::swap(a, b);
    OreCipher lo = enc(a), hi = enc(b);
    EXPECT_EQ(tree.range_scan(RangeBound::closed(lo), RangeBound::closed(hi)), oracle_range(rows, a, b));
  }
}

TEST_F(CipherIndexTest, DuplicatesAreOrderedByRowId) {
  CipherBTree tree(4);
  for (std::uint64_t r : {9, 3, 7, 1, 5}) tree.insert({enc(42), r});
  tree.insert({enc(41), 100});
  tree.insert({enc(43), 0});
  OreCipher v = enc(42);
  EXPECT_EQ(tree.equal_scan(v), (std::vector<std::uint64_t>{1, 3, 5, 7, 9}));
  EXPECT_EQ(tree.check_invariants(), "");
}

TEST_F(CipherIndexTest, SingleInsertIntoEmptyTreeHasHeightOne) {
  CipherBTree tree;
  EXPECT_EQ(tree.height(), 0u);
  tree.insert({enc(5), 1});
  EXPECT_EQ(tree.height(), 1u);
  EXPECT_EQ(tree.live_count(), 1u);
}

TEST_F(CipherIndexTest, ClosedRangeOverOneToHundred) {
  CipherBTree tree(4);
  for (std::uint64_t v = 1; v <= 100; ++v) tree.insert({enc(v), v});
  OreCipher lo = enc(10), hi = enc(20);
  auto ids = tree.range_scan(RangeBound::closed(lo), RangeBound::closed(hi));
  ASSERT_EQ(ids.size(), 11u);
  for (std::size_t i = 0; i < ids.size(); ++i) EXPECT_EQ(ids[i], 10 + i);
  EXPECT_EQ(tree.range_scan(RangeBound::open(lo), RangeBound::open(hi)).size(), 9u);
  EXPECT_EQ(tree.range_scan(RangeBound::unbounded(), RangeBound::open(lo)).size(), 9u);
  EXPECT_EQ(tree.range_scan(RangeBound::open(hi), RangeBound::unbounded()).size(), 80u);
}

TEST_F(CipherIndexTest, OpenDegenerateIntervalIsEmpty) {
  CipherBTree tree(4);
  for (std::uint64_t v = 1; v <= 10; ++v) tree.insert({enc(v), v});
  OreCipher x = enc(5);
  EXPECT_TRUE(tree.range_scan(RangeBound::open(x), RangeBound::open(x)).empty());
  EXPECT_EQ(tree.range_scan(RangeBound::closed(x), RangeBound::closed(x)).size(), 1u);
}

TEST_F(CipherIndexTest, InvertedBoundsAreRejected) {
  CipherBTree tree(4);
  tree.insert({enc(1), 1});
  OreCipher lo = enc(20), hi = enc(10);
  EXPECT_THROW(tree.range_scan(RangeBound::closed(lo), RangeBound::closed(hi)), Error);
}

TEST_F(CipherIndexTest, MinAndMax) {
  CipherBTree tree(4);
  EXPECT_THROW(tree.ore_min(), Error);
  EXPECT_THROW(tree.ore_max(), Error);
  for (std::uint64_t v : {5, 1, 9}) tree.insert({enc(v), v});
  EXPECT_TRUE(ore_eq(tree.ore_min(), enc(1)));
  EXPECT_TRUE(ore_eq(tree.ore_max(), enc(9)));
}

TEST_F(CipherIndexTest, DeletingMaxUsesTombstoneUntilRebuild) {
  CipherBTree tree(4);
  std::map<std::uint64_t, OreCipher> ct;
  for (std::uint64_t v = 1; v <= 50; ++v) {
    ct.emplace(v, enc(v));
    tree.insert({ct.at(v), v});
  }
  EXPECT_TRUE(tree.erase(ct.at(50), 50));
  EXPECT_FALSE(tree.erase(ct.at(50), 50));
  EXPECT_EQ(tree.tombstone_count(), 1u);
  EXPECT_TRUE(ore_eq(tree.ore_max(), enc(49)));
  EXPECT_EQ(tree.live_count(), 49u);
  tree.rebuild();
  EXPECT_EQ(tree.tombstone_count(), 0u);
  EXPECT_EQ(tree.live_count(), 49u);
  EXPECT_TRUE(ore_eq(tree.ore_max(), enc(49)));
  EXPECT_EQ(tree.check_invariants(), "");
}

TEST_F(CipherIndexTest, ComparatorIsAntisymmetric) {
  OreKeyCompare cmp;
  for (int i = 0; i < 500; ++i) {
    OreKey a{enc(rng() % 64), rng() % 4}, b{enc(rng() % 64), rng() % 4};
    EXPECT_EQ(cmp(a, b), -cmp(b, a));
  }
}

TEST_F(CipherIndexTest, OccupancyAndHeightBoundsHoldAcrossFanouts) {
  for (std::size_t fanout : {4, 6, 8, 32}) {
    CipherBTree tree(fanout);
    for (std::uint64_t i = 0; i < 2000; ++i) {
      tree.insert({enc(rng() % 500), i});
      if (i % 250 == 0) ASSERT_EQ(tree.check_invariants(), "") << "fanout " << fanout;
    }
    EXPECT_EQ(tree.check_invariants(), "");
    EXPECT_LE(tree.height(), tree.height_bound());
  }
}

TEST_F(CipherIndexTest, RejectsBadFanout) {
  EXPECT_THROW(CipherBTree(3), Error);
  EXPECT_THROW(CipherBTree(7), Error);
}

// The comparator outcome sequence depends only on the relative order of the
// inserted plaintexts, not their values.
TEST_F(CipherIndexTest, ComparisonTraceDependsOnlyOnOrder) {
  auto trace = [&](const std::vector<std::uint64_t>& values, const ColumnKey& k) {
    std::vector<int> outcomes;
    CipherComparator recording = [&](const OreCipher& a, const OreCipher& b) {
      int c = ore_comparator(a, b);
      outcomes.push_back(c);
      return c;
    };
    CipherBTree tree(4, recording);
    for (std::size_t i = 0; i < values.size(); ++i) tree.insert({ore_encrypt(values[i], k), i});
    OreCipher lo = ore_encrypt(values[3], k), hi = ore_encrypt(values[7], k);
    if (ore_gt(lo, hi)) std::swap(lo, hi);
    tree.range_scan(RangeBound::closed(lo), RangeBound::closed(hi));
    return outcomes;
  };
  std::vector<std::uint64_t> a(200);
  for (auto& v : a) v = rng() % 1000;
  // Strictly increasing map preserves order.
  std::vector<std::uint64_t> b;
  for (auto v : a) b.push_back(v * 7919 + 123456);
  ColumnKey other = derive_column_key(MasterKey::generate(), "idx_col", Scheme::kOre);
  EXPECT_EQ(trace(a, key), trace(b, other));
}

TEST_F(CipherIndexTest, PageFileRoundTrip) {
  CipherBTree tree(6);
  std::vector<std::pair<std::uint32_t, std::uint64_t>> rows;
  for (std::uint64_t i = 0; i < 700; ++i) {
    auto v = static_cast<std::uint32_t>(rng() % 5000);
    rows.emplace_back(v, i);
    tree.insert({enc(v), i});
  }
  tree.erase(enc(rows[0].first), rows[0].second);
  auto path = std::filesystem::temp_directory_path() / ("hedb_idx_" + std::to_string(rng()) + ".pages");
  tree.save(path.string());
  CipherBTree loaded = CipherBTree::load(path.string());
  EXPECT_EQ(loaded.check_invariants(), "");
  EXPECT_EQ(loaded.height(), tree.height());
  EXPECT_EQ(loaded.tombstone_count(), 1u);
  EXPECT_EQ(loaded.range_scan(RangeBound::unbounded(), RangeBound::unbounded()),
            tree.range_scan(RangeBound::unbounded(), RangeBound::unbounded()));

  // Truncated files are rejected.
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 5);
  EXPECT_THROW(CipherBTree::load(path.string()), Error);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace hedb
