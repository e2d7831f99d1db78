#pragma once

// Client side of the pipeline: encrypts rows, rewrites plaintext queries into
// anonymised ciphertext queries, resolves round trips and decrypts results.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hedb/common/mode.hpp"
#include "hedb/schema/catalog.hpp"
#include "hedb/schema/keystore.hpp"
#include "hedb/schema/layout.hpp"
#include "hedb/schema/sql.hpp"

namespace hedb {

enum class Capability : std::uint8_t { kPlain, kDetEqual, kOreCompare, kHeAdd, kHeMul, kTeeBridge };
const char* capability_name(Capability c);

// A literal encoded once per scheme a path may need.
using CipherLiteral = std::map<Scheme, Bytes>;

struct RwColumn {
  std::string column;  // anonymous name
  std::string label;
  ValueType type = ValueType::kInt;
  bool plain = false;  // stored unencrypted
};

struct RwPredicate {
  RwColumn column;
  std::optional<ArithOp> arith;
  CipherLiteral arith_operand;
  CompareOp cmp = CompareOp::kEq;
  CipherLiteral rhs;
  std::optional<Capability> software;  // set when the software path is usable
  bool tee = false;                    // RND encodings present for the bridge
  bool round_trip = false;             // software path needs the client
  std::uint32_t round_trip_ore_bits = 64;

  std::vector<Capability> capabilities() const;
};

struct RwProjection {
  ProjKind kind = ProjKind::kColumn;
  RwColumn column;             // unused for COUNT
  Scheme output = Scheme::kPlain;           // field shipped for plain projections
  Scheme software_output = Scheme::kPlain;  // field shipped by the software MIN/MAX path
  bool software = false;
  bool tee = false;
};

struct RwOrder {
  RwColumn column;
  bool desc = false;
  bool software = false;  // ORE comparator
  bool tee = false;       // bridge comparisons over RND
};

struct RwGroup {
  RwColumn column;
  bool software = false;  // DET field present
  bool tee = false;       // RND converted to DET inside the enclave
};

struct RwAssignment {
  RwColumn column;
  bool is_literal = true;
  std::vector<Bytes> values;  // literal case: one encoding per field of the column, layout order
  ArithOp op = ArithOp::kAdd;
  CipherLiteral operand;
  bool software = false;  // round trip through the client
  bool tee = false;
  Scheme round_trip_source = Scheme::kDet;  // field sent to the client
};

struct RewrittenQuery {
  StatementKind kind = StatementKind::kSelect;
  Mode mode = Mode::kSoftware;
  std::string table;  // anonymous
  bool star = false;
  std::vector<RwProjection> projections;
  std::vector<RwPredicate> where;
  std::optional<RwGroup> group_by;
  std::optional<RwOrder> order_by;
  std::optional<std::uint64_t> limit;
  EncryptedRow insert_row;
  std::vector<RwAssignment> assignments;

  Bytes serialize() const;
};

struct ResultColumn {
  std::string label;  // key label; empty for COUNT
  ValueType type = ValueType::kInt;
  ProjKind kind = ProjKind::kColumn;
};

struct ResultCell {
  Scheme scheme = Scheme::kPlain;
  Bytes bytes;
  bool null = false;
};

struct EncryptedResult {
  std::vector<ResultColumn> columns;
  std::vector<std::vector<ResultCell>> rows;
  std::uint64_t affected = 0;
};

using PlainRow = std::vector<std::optional<Value>>;

struct PlainResult {
  std::vector<std::string> columns;
  std::vector<PlainRow> rows;
  std::uint64_t affected = 0;
};

enum class RoundTripKind : std::uint8_t { kCompare, kUpdate };

// Intermediate values the server cannot finish on its own.
struct RoundTripRequest {
  RoundTripKind kind = RoundTripKind::kCompare;
  std::size_t target = 0;  // predicate or assignment index
  Scheme scheme = Scheme::kAhe;
  std::vector<Bytes> values;
};

struct RoundTripResponse {
  std::vector<Bytes> ore;                  // kCompare: ORE ciphertexts of the intermediates
  std::vector<std::vector<Bytes>> fields;  // kUpdate: new field encodings per row
};

class Client {
 public:
  Client(Catalog catalog, std::shared_ptr<const KeyStore> keys);

  Mode mode() const { return catalog_.mode(); }
  const Catalog& catalog() const { return catalog_; }
  Catalog& catalog() { return catalog_; }
  const KeyStore& keys() const { return *keys_; }

  // Values in table column order.
  EncryptedRow encrypt_row(const std::string& table, const std::vector<Value>& values) const;

  RewrittenQuery rewrite(const QueryAst& q) const { return rewrite(q, mode()); }
  // `mode` may differ from the catalog's as long as the required schemes exist.
  RewrittenQuery rewrite(const QueryAst& q, Mode mode) const;
  RewrittenQuery rewrite(std::string_view sql) const { return rewrite(parse_sql(sql)); }

  PlainResult decrypt_results(const EncryptedResult& result) const;
  std::optional<Value> decrypt_cell(const ResultColumn& column, const ResultCell& cell) const;

  RoundTripResponse resolve(const RewrittenQuery& q, const RoundTripRequest& request) const;

  // Single field encoding of a value for one scheme.
  Bytes encrypt_field(const TableSpec& t, const ColumnSpec& c, Scheme scheme, const Value& v,
                      std::uint32_t ore_bits = 0) const;

 private:
  Value decrypt_field(const std::string& label, ValueType type, Scheme scheme, ByteView bytes) const;
  std::vector<Bytes> encode_column(const TableSpec& t, const ColumnSpec& c, const Value& v) const;

  Catalog catalog_;
  std::shared_ptr<const KeyStore> keys_;
};

}  // namespace hedb
