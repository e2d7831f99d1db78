#pragma once

// In-memory B-tree over keys ordered by a three-way comparator.
//
// Minimum degree t = fanout / 2: every node holds at most 2t-1 keys and
// every non-root node at least t-1. Keys live in internal nodes as well as
// leaves. Insertion splits full nodes on the way down, so each insert makes
// a single root-to-leaf pass.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hedb/common/error.hpp"

namespace hedb {

template <typename Key, typename Compare>
class BTree {
 public:
  struct Node {
    bool leaf = true;
    std::vector<Key> keys;
    std::vector<std::unique_ptr<Node>> children;
  };

  explicit BTree(std::size_t fanout = 64, Compare cmp = Compare{}) : fanout_(fanout), cmp_(std::move(cmp)) {
    if (fanout < 4 || fanout % 2 != 0) throw Error(ErrorCode::kInvalidArgument, "B-tree fanout must be even and >= 4");
  }

  BTree(BTree&&) noexcept = default;
  BTree& operator=(BTree&&) noexcept = default;

  void insert(Key key) {
    if (!root_) {
      root_ = std::make_unique<Node>();
      height_ = 1;
    }
    if (root_->keys.size() == max_keys()) {
      auto new_root = std::make_unique<Node>();
      new_root->leaf = false;
      new_root->children.push_back(std::move(root_));
      root_ = std::move(new_root);
      split_child(*root_, 0);
      ++height_;
    }
    insert_nonfull(*root_, std::move(key));
    ++size_;
  }

  // In-order visit; the visitor returns false to stop early.
  template <typename Visitor>
  void for_each(Visitor&& visit) const {
    if (root_) walk(*root_, visit);
  }

  // In-order visit of keys k with lower(k) && upper(k), where lower is
  // monotone non-decreasing along the order and upper non-increasing.
  // Subtrees entirely below the lower bound are skipped.
  template <typename Lower, typename Upper, typename Visitor>
  void scan(Lower&& above_low, Upper&& below_high, Visitor&& visit) const {
    if (root_) scan_node(*root_, above_low, below_high, visit);
  }

  // Find a key equal under the comparator; returns nullptr if absent.
  Key* find(const Key& key) {
    Node* n = root_.get();
    while (n) {
      std::size_t i = lower_bound(*n, key);
      if (i < n->keys.size() && cmp_(n->keys[i], key) == 0) return &n->keys[i];
      if (n->leaf) return nullptr;
      n = n->children[i].get();
    }
    return nullptr;
  }

  std::size_t size() const { return size_; }
  std::size_t height() const { return height_; }
  std::size_t fanout() const { return fanout_; }
  std::size_t max_keys() const { return fanout_ - 1; }
  std::size_t min_keys() const { return fanout_ / 2 - 1; }
  const Node* root() const { return root_.get(); }
  const Compare& comparator() const { return cmp_; }

  // Used by the persistence layer to rebuild a tree from pages.
  void adopt(std::unique_ptr<Node> root, std::size_t size, std::size_t height) {
    root_ = std::move(root);
    size_ = size;
    height_ = height;
  }

  // Structural audit: occupancy, uniform leaf depth, child counts, key order.
  // Returns an empty string when every invariant holds.
  std::string check_invariants() const {
    if (!root_) return size_ == 0 ? "" : "empty root with non-zero size";
    std::size_t count = 0;
    std::size_t leaf_depth = 0;
    const Key* prev = nullptr;
    std::string err = check_node(*root_, true, 1, leaf_depth, count, prev);
    if (!err.empty()) return err;
    if (count != size_) return "key count mismatch";
    if (leaf_depth != height_) return "height mismatch";
    return "";
  }

  // Upper bound on height for the current size: ceil(log_t(N)) + 1.
  std::size_t height_bound() const {
    if (size_ <= 1) return 1;
    const double t = static_cast<double>(fanout_ / 2);
    return static_cast<std::size_t>(std::ceil(std::log(static_cast<double>(size_)) / std::log(t))) + 1;
  }

 private:
  std::size_t lower_bound(const Node& n, const Key& key) const {
    std::size_t lo = 0, hi = n.keys.size();
    while (lo < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (cmp_(n.keys[mid], key) < 0) lo = mid + 1;
      else hi = mid;
    }
    return lo;
  }

  std::size_t upper_bound(const Node& n, const Key& key) const {
    std::size_t lo = 0, hi = n.keys.size();
    while (lo < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (cmp_(key, n.keys[mid]) < 0) hi = mid;
      else lo = mid + 1;
    }
    return lo;
  }

  void split_child(Node& parent, std::size_t i) {
    Node& full = *parent.children[i];
    const std::size_t t = fanout_ / 2;
    auto right = std::make_unique<Node>();
    right->leaf = full.leaf;
    right->keys.assign(std::make_move_iterator(full.keys.begin() + static_cast<std::ptrdiff_t>(t)),
                       std::make_move_iterator(full.keys.end()));
    Key median = std::move(full.keys[t - 1]);
    full.keys.resize(t - 1);
    if (!full.leaf) {
      right->children.assign(std::make_move_iterator(full.children.begin() + static_cast<std::ptrdiff_t>(t)),
                             std::make_move_iterator(full.children.end()));
      full.children.resize(t);
    }
    parent.keys.insert(parent.keys.begin() + static_cast<std::ptrdiff_t>(i), std::move(median));
    parent.children.insert(parent.children.begin() + static_cast<std::ptrdiff_t>(i) + 1, std::move(right));
  }

  void insert_nonfull(Node& start, Key key) {
    Node* n = &start;
    while (true) {
      std::size_t i = upper_bound(*n, key);
      if (n->leaf) {
        n->keys.insert(n->keys.begin() + static_cast<std::ptrdiff_t>(i), std::move(key));
        return;
      }
      if (n->children[i]->keys.size() == max_keys()) {
        split_child(*n, i);
        if (cmp_(n->keys[i], key) <= 0) ++i;
      }
      n = n->children[i].get();
    }
  }

  template <typename Visitor>
  bool walk(const Node& n, Visitor& visit) const {
    for (std::size_t i = 0; i < n.keys.size(); ++i) {
      if (!n.leaf && !walk(*n.children[i], visit)) return false;
      if (!visit(n.keys[i])) return false;
    }
    return n.leaf || walk(*n.children.back(), visit);
  }

  // Returns false once a key above the upper bound has been seen.
  template <typename Lower, typename Upper, typename Visitor>
  bool scan_node(const Node& n, Lower& above_low, Upper& below_high, Visitor& visit) const {
    // First key that satisfies the lower bound.
    std::size_t lo = 0, hi = n.keys.size();
    while (lo < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (above_low(n.keys[mid])) hi = mid;
      else lo = mid + 1;
    }
    for (std::size_t i = lo; i < n.keys.size(); ++i) {
      if (!n.leaf && !scan_node(*n.children[i], above_low, below_high, visit)) return false;
      if (!below_high(n.keys[i])) return false;
      if (!visit(n.keys[i])) return false;
    }
    return n.leaf || scan_node(*n.children.back(), above_low, below_high, visit);
  }

  std::string check_node(const Node& n, bool is_root, std::size_t depth, std::size_t& leaf_depth, std::size_t& count,
                         const Key*& prev) const {
    if (n.keys.size() > max_keys()) return "node overflow";
    if (!is_root && n.keys.size() < min_keys()) return "node underflow";
    if (is_root && n.keys.empty() && size_ > 0) return "empty root";
    if (n.leaf) {
      if (!n.children.empty()) return "leaf with children";
      if (leaf_depth == 0) leaf_depth = depth;
      else if (leaf_depth != depth) return "leaves at different depths";
    } else if (n.children.size() != n.keys.size() + 1) {
      return "child count mismatch";
    }
    for (std::size_t i = 0; i < n.keys.size(); ++i) {
      if (!n.leaf) {
        std::string err = check_node(*n.children[i], false, depth + 1, leaf_depth, count, prev);
        if (!err.empty()) return err;
      }
      if (prev && cmp_(*prev, n.keys[i]) > 0) return "keys out of order";
      prev = &n.keys[i];
      ++count;
    }
    if (!n.leaf) return check_node(*n.children.back(), false, depth + 1, leaf_depth, count, prev);
    return "";
  }

  std::size_t fanout_;
  Compare cmp_;
  std::unique_ptr<Node> root_;
  std::size_t size_ = 0;
  std::size_t height_ = 0;
};

}  // namespace hedb
