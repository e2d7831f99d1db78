#pragma once

// B-tree index over ORE ciphertexts. The index never sees a key: ordering
// comes only from the public ORE comparator (or an injected comparator for
// instrumentation), with row ids breaking ties between equal ciphertexts.

#include <cstdint>
#include <functional>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "hedb/crypto/ore.hpp"
#include "hedb/index/btree.hpp"

namespace hedb {

struct OreKey {
  OreCipher cipher;
  std::uint64_t row_id = 0;
  bool dead = false;  // tombstone; removed at the next rebuild
};

using CipherComparator = std::function<int(const OreCipher&, const OreCipher&)>;

struct OreKeyCompare {
  CipherComparator cmp = ore_comparator;
  int operator()(const OreKey& a, const OreKey& b) const {
    int c = cmp(a.cipher, b.cipher);
    if (c != 0) return c;
    return a.row_id < b.row_id ? -1 : (a.row_id > b.row_id ? 1 : 0);
  }
};

struct RangeBound {
  const OreCipher* cipher = nullptr;  // nullptr = unbounded
  bool inclusive = true;

  static RangeBound unbounded() { return {}; }
  static RangeBound closed(const OreCipher& c) { return {&c, true}; }
  static RangeBound open(const OreCipher& c) { return {&c, false}; }
};

class CipherBTree {
 public:
  static constexpr std::uint16_t kKeyLayoutVersion = 1;

  explicit CipherBTree(std::size_t fanout = 64, CipherComparator cmp = ore_comparator);
  // Moves are not synchronized; the source must not be in use.
  CipherBTree(CipherBTree&& other) noexcept;

  void insert(OreKey key);
  // Tombstones the entry (cipher, row_id). Returns false when absent.
  bool erase(const OreCipher& cipher, std::uint64_t row_id);
  // Rebuilds the tree from live entries, dropping tombstones.
  void rebuild();

  // Row ids whose key lies in the interval, ascending by plaintext order.
  std::vector<std::uint64_t> range_scan(RangeBound low, RangeBound high) const;
  std::vector<std::uint64_t> equal_scan(const OreCipher& value) const;

  std::optional<OreCipher> try_min() const;
  std::optional<OreCipher> try_max() const;
  OreCipher ore_min() const;
  OreCipher ore_max() const;

  std::vector<OreKey> entries() const;  // live entries in order

  std::size_t live_count() const;
  std::size_t tombstone_count() const;
  std::size_t height() const;
  std::size_t fanout() const { return fanout_; }
  std::string check_invariants() const;
  std::size_t height_bound() const;

  // Page file: header {magic "HEDBIDX1", version u16, fanout u32, key layout
  // version u16, page count u64, root page u64, key count u64, live u64,
  // height u64} then one length-prefixed page per node, children first.
  void save(const std::string& path) const;
  static CipherBTree load(const std::string& path, CipherComparator cmp = ore_comparator);

 private:
  using Tree = BTree<OreKey, OreKeyCompare>;

  std::size_t fanout_;
  CipherComparator cmp_;
  Tree tree_;
  std::size_t tombstones_ = 0;
  mutable std::shared_mutex mu_;
};

}  // namespace hedb
