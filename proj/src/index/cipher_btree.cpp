#include "hedb/index/cipher_btree.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <mutex>
#include <unordered_map>

namespace hedb {

namespace {

constexpr char kMagic[8] = {'H', 'E', 'D', 'B', 'I', 'D', 'X', '1'};
constexpr std::uint16_t kFileVersion = 1;

}  // namespace

CipherBTree::CipherBTree(std::size_t fanout, CipherComparator cmp)
    : fanout_(fanout), cmp_(std::move(cmp)), tree_(fanout, OreKeyCompare{cmp_}) {}

CipherBTree::CipherBTree(CipherBTree&& other) noexcept
    : fanout_(other.fanout_), cmp_(other.cmp_), tree_(std::move(other.tree_)), tombstones_(other.tombstones_) {}

void CipherBTree::insert(OreKey key) {
  std::unique_lock lock(mu_);
  key.dead = false;
  tree_.insert(std::move(key));
}

bool CipherBTree::erase(const OreCipher& cipher, std::uint64_t row_id) {
  std::unique_lock lock(mu_);
  OreKey probe{cipher, row_id, false};
  OreKey* hit = tree_.find(probe);
  if (!hit || hit->dead) return false;
  hit->dead = true;
  ++tombstones_;
  return true;
}

void CipherBTree::rebuild() {
  std::unique_lock lock(mu_);
  Tree fresh(fanout_, OreKeyCompare{cmp_});
  tree_.for_each([&](const OreKey& k) {
    if (!k.dead) fresh.insert(k);
    return true;
  });
  tree_ = std::move(fresh);
  tombstones_ = 0;
}

std::vector<std::uint64_t> CipherBTree::range_scan(RangeBound low, RangeBound high) const {
  std::shared_lock lock(mu_);
  if (low.cipher && high.cipher) {
    int c = cmp_(*low.cipher, *high.cipher);
    if (c > 0) throw Error(ErrorCode::kInvalidArgument, "range scan bounds are inverted");
    if (c == 0 && (!low.inclusive || !high.inclusive)) return {};
  }
  auto above_low = [&](const OreKey& k) {
    if (!low.cipher) return true;
    int c = cmp_(k.cipher, *low.cipher);
    return c > 0 || (c == 0 && low.inclusive);
  };
  auto below_high = [&](const OreKey& k) {
    if (!high.cipher) return true;
    int c = cmp_(k.cipher, *high.cipher);
    return c < 0 || (c == 0 && high.inclusive);
  };
  std::vector<std::uint64_t> out;
  tree_.scan(above_low, below_high, [&](const OreKey& k) {
    if (!k.dead) out.push_back(k.row_id);
    return true;
  });
  return out;
}

std::vector<std::uint64_t> CipherBTree::equal_scan(const OreCipher& value) const {
  return range_scan(RangeBound::closed(value), RangeBound::closed(value));
}

std::optional<OreCipher> CipherBTree::try_min() const {
  std::shared_lock lock(mu_);
  std::optional<OreCipher> out;
  tree_.for_each([&](const OreKey& k) {
    if (k.dead) return true;
    out = k.cipher;
    return false;
  });
  return out;
}

std::optional<OreCipher> CipherBTree::try_max() const {
  std::shared_lock lock(mu_);
  // Right spine first; fall back to a full walk when the tail is tombstoned.
  const auto* n = tree_.root();
  while (n && !n->leaf) n = n->children.back().get();
  if (n && !n->keys.empty() && !n->keys.back().dead) return n->keys.back().cipher;
  std::optional<OreCipher> out;
  tree_.for_each([&](const OreKey& k) {
    if (!k.dead) out = k.cipher;
    return true;
  });
  return out;
}

OreCipher CipherBTree::ore_min() const {
  auto v = try_min();
  if (!v) throw Error(ErrorCode::kNotFound, "ore_min on an empty index");
  return *v;
}

OreCipher CipherBTree::ore_max() const {
  auto v = try_max();
  if (!v) throw Error(ErrorCode::kNotFound, "ore_max on an empty index");
  return *v;
}

std::vector<OreKey> CipherBTree::entries() const {
  std::shared_lock lock(mu_);
  std::vector<OreKey> out;
  out.reserve(tree_.size() - tombstones_);
  tree_.for_each([&](const OreKey& k) {
    if (!k.dead) out.push_back(k);
    return true;
  });
  return out;
}

std::size_t CipherBTree::live_count() const {
  std::shared_lock lock(mu_);
  return tree_.size() - tombstones_;
}

std::size_t CipherBTree::tombstone_count() const {
  std::shared_lock lock(mu_);
  return tombstones_;
}

std::size_t CipherBTree::height() const {
  std::shared_lock lock(mu_);
  return tree_.height();
}

std::string CipherBTree::check_invariants() const {
  std::shared_lock lock(mu_);
  std::string err = tree_.check_invariants();
  if (err.empty() && tree_.height() > tree_.height_bound()) err = "height exceeds bound";
  return err;
}

std::size_t CipherBTree::height_bound() const {
  std::shared_lock lock(mu_);
  return tree_.height_bound();
}

void CipherBTree::save(const std::string& path) const {
  std::shared_lock lock(mu_);
  std::vector<Bytes> pages;
  std::function<std::uint64_t(const Tree::Node&)> emit = [&](const Tree::Node& n) -> std::uint64_t {
    std::vector<std::uint64_t> child_ids;
    for (const auto& c : n.children) child_ids.push_back(emit(*c));
    ByteWriter w;
    w.u8(n.leaf ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(n.keys.size()));
    for (const auto& k : n.keys) {
      w.u64(k.row_id);
      w.u8(k.dead ? 1 : 0);
      w.blob(k.cipher.serialize());
    }
    for (auto id : child_ids) w.u64(id);
    pages.push_back(std::move(w).take());
    return pages.size() - 1;
  };
  std::uint64_t root = tree_.root() ? emit(*tree_.root()) : UINT64_MAX;

  ByteWriter out;
  out.raw(ByteView(reinterpret_cast<const std::uint8_t*>(kMagic), 8));
  out.u16(kFileVersion);
  out.u32(static_cast<std::uint32_t>(fanout_));
  out.u16(kKeyLayoutVersion);
  out.u64(pages.size());
  out.u64(root);
  out.u64(tree_.size());
  out.u64(tombstones_);
  out.u64(tree_.height());
  for (const auto& p : pages) out.blob(p);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIo, "cannot open index file " + path);
  const Bytes& b = out.bytes();
  f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  if (!f) throw Error(ErrorCode::kIo, "short write to " + path);
}

CipherBTree CipherBTree::load(const std::string& path, CipherComparator cmp) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot open index file " + path);
  Bytes data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  ByteReader r(data);
  ByteView magic = r.raw(8);
  if (!std::equal(magic.begin(), magic.end(), kMagic)) throw Error(ErrorCode::kFormat, "not an index page file");
  if (r.u16() != kFileVersion) throw Error(ErrorCode::kFormat, "unsupported index file version");
  std::uint32_t fanout = r.u32();
  if (r.u16() != kKeyLayoutVersion) throw Error(ErrorCode::kFormat, "unsupported key layout version");
  std::uint64_t npages = r.u64(), root = r.u64(), size = r.u64(), tombstones = r.u64(), height = r.u64();

  CipherBTree out(fanout, std::move(cmp));
  std::vector<std::unique_ptr<Tree::Node>> nodes;
  for (std::uint64_t p = 0; p < npages; ++p) {
    Bytes page = r.blob();
    ByteReader pr(page);
    auto n = std::make_unique<Tree::Node>();
    n->leaf = pr.u8() == 1;
    std::uint32_t nkeys = pr.u32();
    for (std::uint32_t i = 0; i < nkeys; ++i) {
      OreKey k;
      k.row_id = pr.u64();
      k.dead = pr.u8() == 1;
      k.cipher = OreCipher::parse(pr.blob());
      n->keys.push_back(std::move(k));
    }
    if (!n->leaf) {
      for (std::uint32_t i = 0; i <= nkeys; ++i) {
        std::uint64_t id = pr.u64();
        if (id >= nodes.size() || !nodes[id]) throw Error(ErrorCode::kFormat, "index page references a missing child");
        n->children.push_back(std::move(nodes[id]));
      }
    }
    pr.expect_done();
    nodes.push_back(std::move(n));
  }
  r.expect_done();
  if (root != UINT64_MAX) {
    if (root >= nodes.size() || !nodes[root]) throw Error(ErrorCode::kFormat, "bad root page");
    out.tree_.adopt(std::move(nodes[root]), size, height);
  }
  out.tombstones_ = tombstones;
  std::string err = out.tree_.check_invariants();
  if (!err.empty()) throw Error(ErrorCode::kFormat, "index file fails structural audit: " + err);
  return out;
}

}  // namespace hedb
