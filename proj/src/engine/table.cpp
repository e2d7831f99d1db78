#include "hedb/engine/table.hpp"

#include <filesystem>
#include <iterator>
#include <mutex>

#include "hedb/common/error.hpp"

namespace hedb {

namespace {

constexpr char kTableMagic[] = "HEDBTBL1";
constexpr char kManifestMagic[] = "HEDBMAN1";
constexpr std::uint8_t kInsert = 1;
constexpr std::uint8_t kUpdate = 2;

std::string table_path(const std::string& dir, const std::string& anon) { return dir + "/" + anon + ".tbl"; }
std::string manifest_path(const std::string& dir, const std::string& anon) { return dir + "/" + anon + ".manifest"; }

Bytes read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot read " + path);
  return Bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

}  // namespace

std::size_t StoredRow::bytes() const {
  std::size_t n = 0;
  for (const Bytes& f : row.fields) n += f.size();
  return n;
}

EncryptedTable::EncryptedTable(TableLayout layout, std::string dir, std::size_t index_fanout)
    : layout_(std::move(layout)), dir_(std::move(dir)) {
  if (layout_.fields.empty()) throw Error(ErrorCode::kInvalidArgument, "table layout has no fields");
  for (std::size_t i = 0; i < layout_.fields.size(); ++i)
    if (layout_.fields[i].scheme == Scheme::kOre && layout_.fields[i].indexed)
      indexes_.emplace(i, std::make_unique<CipherBTree>(index_fanout));
  if (dir_.empty()) return;

  std::filesystem::create_directories(dir_);
  const std::string tpath = table_path(dir_, layout_.table);
  const std::string mpath = manifest_path(dir_, layout_.table);
  if (std::filesystem::exists(mpath)) {
    Bytes m = read_file(mpath);
    if (m.size() < 8 || std::string(m.begin(), m.begin() + 8) != kManifestMagic)
      throw Error(ErrorCode::kFormat, "bad manifest " + mpath);
    if (TableLayout::parse(ByteView(m).subspan(8)) != layout_)
      throw Error(ErrorCode::kLayoutMismatch, "existing manifest differs from the requested layout");
  } else {
    std::ofstream mf(mpath, std::ios::binary | std::ios::trunc);
    Bytes l = layout_.serialize();
    mf.write(kManifestMagic, 8);
    mf.write(reinterpret_cast<const char*>(l.data()), static_cast<std::streamsize>(l.size()));
    if (!mf) throw Error(ErrorCode::kIo, "cannot write " + mpath);
  }

  if (std::filesystem::exists(tpath)) {
    Bytes data = read_file(tpath);
    ByteReader r(data);
    ByteView magic = r.raw(8);
    if (std::string(magic.begin(), magic.end()) != kTableMagic) throw Error(ErrorCode::kFormat, "bad table file " + tpath);
    while (!r.done()) {
      ByteReader rec(r.raw(r.u32()));
      std::uint8_t kind = rec.u8();
      std::uint64_t id = rec.u64();
      std::uint32_t n = rec.u32();
      EncryptedRow row;
      for (std::uint32_t i = 0; i < n; ++i) row.fields.push_back(rec.blob());
      rec.expect_done();
      if (kind == kInsert) {
        if (id != rows_.size()) throw Error(ErrorCode::kFormat, "row ids out of sequence in " + tpath);
        apply_insert(make_row(id, std::move(row)));
      } else if (kind == kUpdate) {
        if (id >= rows_.size()) throw Error(ErrorCode::kFormat, "update of a missing row in " + tpath);
        std::map<std::size_t, Bytes> changed;
        for (std::size_t i = 0; i < row.fields.size(); ++i)
          if (row.fields[i] != rows_[id]->row.fields.at(i)) changed[i] = std::move(row.fields[i]);
        update(id, changed);
      } else {
        throw Error(ErrorCode::kFormat, "unknown record kind in " + tpath);
      }
    }
  }
  const bool fresh = !std::filesystem::exists(tpath);
  file_.open(tpath, std::ios::binary | std::ios::app);
  if (!file_) throw Error(ErrorCode::kIo, "cannot open " + tpath);
  if (fresh) file_.write(kTableMagic, 8);
  file_.flush();
}

EncryptedTable::~EncryptedTable() = default;

std::unique_ptr<EncryptedTable> EncryptedTable::open(const std::string& dir, const std::string& anon_name,
                                                     std::size_t index_fanout) {
  Bytes m = read_file(manifest_path(dir, anon_name));
  if (m.size() < 8 || std::string(m.begin(), m.begin() + 8) != kManifestMagic)
    throw Error(ErrorCode::kFormat, "bad manifest for " + anon_name);
  return std::make_unique<EncryptedTable>(TableLayout::parse(ByteView(m).subspan(8)), dir, index_fanout);
}

RowRef EncryptedTable::make_row(std::uint64_t id, EncryptedRow row) const {
  check_row(layout_, row);
  auto r = std::make_shared<StoredRow>();
  r->id = id;
  r->ore.resize(row.fields.size());
  for (std::size_t i = 0; i < row.fields.size(); ++i)
    if (layout_.fields[i].scheme == Scheme::kOre) r->ore[i] = OreCipher::parse(row.fields[i]);
  r->row = std::move(row);
  return r;
}

void EncryptedTable::apply_insert(RowRef r) {
  for (auto& [field, tree] : indexes_) tree->insert(OreKey{*r->ore[field], r->id, false});
  field_bytes_ += r->bytes();
  rows_.push_back(std::move(r));
}

void EncryptedTable::append_record(std::uint8_t kind, const StoredRow& r) {
  if (dir_.empty()) return;
  ByteWriter w;
  w.u8(kind);
  w.u64(r.id);
  w.u32(static_cast<std::uint32_t>(r.row.fields.size()));
  for (const Bytes& f : r.row.fields) w.blob(f);
  const Bytes& b = w.bytes();
  std::uint8_t len[4];
  for (int i = 0; i < 4; ++i) len[i] = static_cast<std::uint8_t>(b.size() >> (8 * i));
  file_.write(reinterpret_cast<const char*>(len), 4);
  file_.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  file_.flush();
  if (!file_) throw Error(ErrorCode::kIo, "append failed for table " + layout_.table);
}

std::uint64_t EncryptedTable::insert(EncryptedRow row) {
  std::unique_lock lock(mu_);
  RowRef r = make_row(rows_.size(), std::move(row));
  append_record(kInsert, *r);
  const std::uint64_t id = r->id;
  apply_insert(std::move(r));
  return id;
}

void EncryptedTable::update(std::uint64_t row_id, const std::map<std::size_t, Bytes>& fields) {
  if (fields.empty()) return;
  std::unique_lock lock(mu_, std::defer_lock);
  // Replays during construction run before any other thread can see us.
  if (file_.is_open() || dir_.empty()) lock.lock();
  if (row_id >= rows_.size()) throw Error(ErrorCode::kNotFound, "no row " + std::to_string(row_id));
  const RowRef old = rows_[row_id];
  EncryptedRow next = old->row;
  for (auto& [i, b] : fields) {
    if (i >= next.fields.size()) throw Error(ErrorCode::kLayoutMismatch, "field index out of range");
    next.fields[i] = b;
  }
  RowRef r = make_row(row_id, std::move(next));
  if (file_.is_open()) append_record(kUpdate, *r);
  for (auto& [field, tree] : indexes_) {
    if (!fields.count(field)) continue;
    tree->erase(*old->ore[field], row_id);
    tree->insert(OreKey{*r->ore[field], row_id, false});
  }
  field_bytes_ += r->bytes();
  field_bytes_ -= old->bytes();
  rows_[row_id] = std::move(r);
}

std::size_t EncryptedTable::row_count() const {
  std::shared_lock lock(mu_);
  return rows_.size();
}

RowRef EncryptedTable::row(std::uint64_t id) const {
  std::shared_lock lock(mu_);
  if (id >= rows_.size()) throw Error(ErrorCode::kNotFound, "no row " + std::to_string(id));
  return rows_[id];
}

std::vector<RowRef> EncryptedTable::rows(const std::vector<std::uint64_t>& ids) const {
  std::shared_lock lock(mu_);
  std::vector<RowRef> out;
  out.reserve(ids.size());
  for (std::uint64_t id : ids) {
    if (id >= rows_.size()) throw Error(ErrorCode::kNotFound, "no row " + std::to_string(id));
    out.push_back(rows_[id]);
  }
  return out;
}

const CipherBTree& EncryptedTable::index(std::size_t field) const {
  auto it = indexes_.find(field);
  if (it == indexes_.end()) throw Error(ErrorCode::kNotFound, "field has no index");
  return *it->second;
}

std::uint64_t EncryptedTable::file_bytes() const {
  if (dir_.empty()) return 0;
  std::error_code ec;
  auto n = std::filesystem::file_size(table_path(dir_, layout_.table), ec);
  return ec ? 0 : n;
}

}  // namespace hedb
