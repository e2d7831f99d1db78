#pragma once

// Client-side catalog: plaintext names, anonymous names and per-column
// scheme sets. Holds no key material.
//
// Text file format, one record per line, fields separated by single spaces:
//   hedb-catalog 1
//   mode <mode>
//   table <plain name> <anon name> <column count>
//   column <plain> <anon> <kind> <scale> <width> <sensitive 0|1> <indexed 0|1> <ore bits> <schemes|->
//   ...
// Schemes are comma separated names (AHE,MHE,ORE,DET,RND).

#include <cstdint>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "hedb/common/mode.hpp"
#include "hedb/crypto/keys.hpp"
#include "hedb/schema/layout.hpp"
#include "hedb/schema/value.hpp"

namespace hedb {

struct ColumnSpec {
  std::string plain_name;
  std::string anon_name;  // filled at registration when empty
  DataKind kind = DataKind::kInt;
  std::uint32_t scale = 0;       // decimal digits after the point
  std::uint32_t width = 16;      // max text length in bytes
  std::vector<Scheme> schemes;   // empty for plaintext columns
  bool sensitive = true;
  bool indexed = false;          // ORE index, when the column has an ORE field
  std::uint32_t ore_bits = 32;   // integer ORE width

  bool has(Scheme s) const;
  ValueType type() const { return value_type_of(kind); }
  std::uint32_t ore_width() const { return kind == DataKind::kText ? 8 * width : ore_bits; }
};

struct TableSpec {
  std::string plain_name;
  std::string anon_name;
  std::vector<ColumnSpec> columns;

  const ColumnSpec* find(const std::string& plain) const;
  const ColumnSpec& column(const std::string& plain) const;
  std::string label(const ColumnSpec& c) const { return anon_name + "." + c.anon_name; }
};

// Scheme set given to a sensitive column when none is specified.
std::vector<Scheme> default_schemes(Mode mode, DataKind kind);

// Canonical field order inside a row.
inline constexpr Scheme kSchemeOrder[] = {Scheme::kAhe, Scheme::kMhe, Scheme::kOre, Scheme::kDet, Scheme::kRnd};

std::string random_anon_name();

class Catalog {
 public:
  explicit Catalog(Mode mode = Mode::kSoftware) : mode_(mode) {}
  Catalog(const Catalog& other);
  Catalog& operator=(const Catalog& other);

  Mode mode() const { return mode_; }

  // Validates names, assigns anonymous names and fills default schemes.
  const TableSpec& register_table(const std::string& name, std::vector<ColumnSpec> specs);

  bool has_table(const std::string& name) const;
  const TableSpec& table(const std::string& name) const;
  std::vector<std::string> table_names() const;
  TableLayout layout(const std::string& name) const;

  // Reverse lookup from a key label; nullptr when unknown.
  struct LabelInfo {
    const TableSpec* table;
    const ColumnSpec* column;
  };
  std::optional<LabelInfo> by_label(const std::string& label) const;

  void save(const std::string& path) const;
  static Catalog load(const std::string& path);
  std::string to_text() const;
  static Catalog from_text(const std::string& text);

 private:
  Mode mode_;
  mutable std::shared_mutex mu_;
  std::map<std::string, TableSpec> tables_;
};

}  // namespace hedb
