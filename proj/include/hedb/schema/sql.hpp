#pragma once

// Minimal single-table SQL surface:
//   SELECT proj[, proj...] FROM t [WHERE pred [AND pred...]] [GROUP BY c]
//          [ORDER BY c [ASC|DESC]] [LIMIT n]
//   INSERT INTO t [(c, ...)] VALUES (lit, ...)
//   UPDATE t SET c = expr[, ...] [WHERE ...]
// proj := * | c | SUM(c) | MIN(c) | MAX(c) | COUNT(*)
// pred := expr cmp lit | lit cmp expr | expr BETWEEN lit AND lit
// expr := c | c (+|-|*|/) lit

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hedb/enclave/bridge.hpp"

namespace hedb {

enum class StatementKind : std::uint8_t { kSelect, kInsert, kUpdate };
enum class ProjKind : std::uint8_t { kColumn, kSum, kMin, kMax, kCount };

const char* proj_kind_name(ProjKind k);

struct SqlLiteral {
  std::string raw;
  bool quoted = false;
  bool operator==(const SqlLiteral&) const = default;
};

struct SqlExpr {
  std::string column;
  std::optional<ArithOp> op;
  SqlLiteral operand;  // valid when op is set
  bool operator==(const SqlExpr&) const = default;
};

struct SqlPredicate {
  SqlExpr left;
  CompareOp cmp = CompareOp::kEq;
  SqlLiteral right;
  bool operator==(const SqlPredicate&) const = default;
};

struct SqlProjection {
  ProjKind kind = ProjKind::kColumn;
  std::string column;  // empty for COUNT(*)
  bool operator==(const SqlProjection&) const = default;
};

struct SqlAssignment {
  std::string column;
  bool is_literal = true;
  SqlLiteral literal;  // SET c = lit
  SqlExpr expr;        // SET c = c op lit (expr.column must equal column)
  bool operator==(const SqlAssignment&) const = default;
};

struct QueryAst {
  StatementKind kind = StatementKind::kSelect;
  std::string table;
  bool star = false;
  std::vector<SqlProjection> projections;
  std::vector<SqlPredicate> where;
  std::optional<std::string> group_by;
  std::optional<std::string> order_by;
  bool order_desc = false;
  std::optional<std::uint64_t> limit;
  std::vector<std::string> insert_columns;  // empty: table order
  std::vector<SqlLiteral> insert_values;
  std::vector<SqlAssignment> assignments;
  bool operator==(const QueryAst&) const = default;
};

// Throws Error(kInvalidArgument) with the offending position on bad input.
QueryAst parse_sql(std::string_view sql);

// Mirror of a comparison when its operands are swapped (a < b  <=>  b > a).
CompareOp flip_compare(CompareOp op);

}  // namespace hedb
