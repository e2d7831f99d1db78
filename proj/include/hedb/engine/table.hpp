#pragma once

// Encrypted table: immutable field layout, append-only record file and an
// in-memory row array with parsed ORE fields and attached cipher indexes.
//
// Files in the table directory:
//   <anon>.manifest  "HEDBMAN1" | TableLayout bytes
//   <anon>.tbl       "HEDBTBL1" then records
//                    [u32 len][u8 kind 1=insert 2=update][u64 row id][u32 n][n x blob]
// Indexes are rebuilt from the rows when a table is opened.

#include <atomic>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "hedb/crypto/ore.hpp"
#include "hedb/index/cipher_btree.hpp"
#include "hedb/schema/layout.hpp"

namespace hedb {

struct StoredRow {
  std::uint64_t id = 0;
  EncryptedRow row;
  std::vector<std::optional<OreCipher>> ore;  // parsed ORE fields, by field index
  std::size_t bytes() const;
};

using RowRef = std::shared_ptr<const StoredRow>;

class EncryptedTable {
 public:
  // Empty `dir` keeps the table in memory only.
  EncryptedTable(TableLayout layout, std::string dir = "", std::size_t index_fanout = 64);
  ~EncryptedTable();
  static std::unique_ptr<EncryptedTable> open(const std::string& dir, const std::string& anon_name,
                                              std::size_t index_fanout = 64);

  const TableLayout& layout() const { return layout_; }
  bool persistent() const { return !dir_.empty(); }

  std::uint64_t insert(EncryptedRow row);
  // Replaces the given fields of an existing row.
  void update(std::uint64_t row_id, const std::map<std::size_t, Bytes>& fields);

  std::size_t row_count() const;
  RowRef row(std::uint64_t id) const;
  std::vector<RowRef> rows(const std::vector<std::uint64_t>& ids) const;

  bool has_index(std::size_t field) const { return indexes_.count(field) != 0; }
  const CipherBTree& index(std::size_t field) const;

  // Sum of field sizes over current rows.
  std::uint64_t field_bytes() const { return field_bytes_.load(); }
  std::uint64_t file_bytes() const;

 private:
  RowRef make_row(std::uint64_t id, EncryptedRow row) const;
  void append_record(std::uint8_t kind, const StoredRow& r);
  void apply_insert(RowRef r);

  TableLayout layout_;
  std::string dir_;
  mutable std::shared_mutex mu_;
  std::vector<RowRef> rows_;
  std::map<std::size_t, std::unique_ptr<CipherBTree>> indexes_;
  std::atomic<std::uint64_t> field_bytes_{0};
  std::ofstream file_;
};

}  // namespace hedb
