#include "hedb/schema/sql.hpp"

#include <cctype>
#include <charconv>

#include "hedb/common/error.hpp"

namespace hedb {

const char* proj_kind_name(ProjKind k) {
  switch (k) {
    case ProjKind::kColumn: return "column";
    case ProjKind::kSum: return "SUM";
    case ProjKind::kMin: return "MIN";
    case ProjKind::kMax: return "MAX";
    case ProjKind::kCount: return "COUNT";
  }
  return "?";
}

CompareOp flip_compare(CompareOp op) {
  switch (op) {
    case CompareOp::kLt: return CompareOp::kGt;
    case CompareOp::kLe: return CompareOp::kGe;
    case CompareOp::kGt: return CompareOp::kLt;
    case CompareOp::kGe: return CompareOp::kLe;
    default: return op;
  }
}

namespace {

enum class Tok { kIdent, kNumber, kString, kSymbol, kEnd };

struct Token {
  Tok kind;
  std::string text;  // identifiers upper-cased copy lives in `upper`
  std::string upper;
  std::size_t pos;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto fail = [&](const std::string& msg) { throw Error(ErrorCode::kInvalidArgument, msg + " at offset " + std::to_string(i)); };
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      std::string t(s.substr(start, i - start)), u = t;
      for (char& ch : u) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      out.push_back({Tok::kIdent, t, u, start});
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
      std::string t(s.substr(start, i - start));
      out.push_back({Tok::kNumber, t, t, start});
    } else if (c == '\'') {
      std::string t;
      ++i;
      while (true) {
        if (i >= s.size()) fail("unterminated string literal");
        if (s[i] == '\'') {
          if (i + 1 < s.size() && s[i + 1] == '\'') {
            t += '\'';
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        t += s[i++];
      }
      out.push_back({Tok::kString, t, t, start});
    } else {
      static const char* two[] = {"<=", ">=", "<>", "!="};
      std::string sym(1, c);
      for (const char* t : two)
        if (s.substr(i, 2) == t) sym = t;
      if (sym.size() == 1 && std::string_view("(),*=<>+-/;").find(c) == std::string_view::npos)
        fail(std::string("unexpected character '") + c + "'");
      i += sym.size();
      out.push_back({Tok::kSymbol, sym, sym, start});
    }
  }
  out.push_back({Tok::kEnd, "", "", s.size()});
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view sql) : toks_(tokenize(sql)) {}

  QueryAst parse() {
    QueryAst q;
    if (accept_kw("SELECT")) parse_select(q);
    else if (accept_kw("INSERT")) parse_insert(q);
    else if (accept_kw("UPDATE")) parse_update(q);
    else fail("expected SELECT, INSERT or UPDATE");
    accept_sym(";");
    if (peek().kind != Tok::kEnd) fail("unexpected trailing input");
    return q;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::kInvalidArgument, msg + " at offset " + std::to_string(peek().pos));
  }

  bool accept_kw(const char* kw) {
    if (peek().kind == Tok::kIdent && peek().upper == kw) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect_kw(const char* kw) {
    if (!accept_kw(kw)) fail(std::string("expected ") + kw);
  }
  bool accept_sym(const char* s) {
    if (peek().kind == Tok::kSymbol && peek().text == s) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect_sym(const char* s) {
    if (!accept_sym(s)) fail(std::string("expected '") + s + "'");
  }

  static bool reserved(const std::string& upper) {
    static const char* words[] = {"SELECT", "FROM", "WHERE", "AND", "GROUP", "BY", "ORDER", "LIMIT", "INSERT", "INTO",
                                  "VALUES", "UPDATE", "SET", "BETWEEN", "ASC", "DESC", "OR", "NOT"};
    for (const char* w : words)
      if (upper == w) return true;
    return false;
  }

  std::string ident() {
    if (peek().kind != Tok::kIdent || reserved(peek().upper)) fail("expected identifier");
    return next().text;
  }

  bool at_literal() const {
    const Token& t = peek();
    if (t.kind == Tok::kNumber || t.kind == Tok::kString) return true;
    return t.kind == Tok::kSymbol && t.text == "-" && toks_[pos_ + 1].kind == Tok::kNumber;
  }

  SqlLiteral literal() {
    if (accept_sym("-")) {
      if (peek().kind != Tok::kNumber) fail("expected number after '-'");
      return {"-" + next().text, false};
    }
    if (peek().kind == Tok::kNumber) return {next().text, false};
    if (peek().kind == Tok::kString) return {next().text, true};
    fail("expected literal");
  }

  std::optional<ArithOp> arith_op() {
    if (accept_sym("+")) return ArithOp::kAdd;
    if (accept_sym("-")) return ArithOp::kSub;
    if (accept_sym("*")) return ArithOp::kMul;
    if (accept_sym("/")) return ArithOp::kDiv;
    return std::nullopt;
  }

  std::optional<CompareOp> compare_op() {
    if (accept_sym("<")) return CompareOp::kLt;
    if (accept_sym("<=")) return CompareOp::kLe;
    if (accept_sym(">")) return CompareOp::kGt;
    if (accept_sym(">=")) return CompareOp::kGe;
    if (accept_sym("=")) return CompareOp::kEq;
    if (accept_sym("<>") || accept_sym("!=")) return CompareOp::kNe;
    return std::nullopt;
  }

  SqlExpr expr() {
    SqlExpr e;
    e.column = ident();
    e.op = arith_op();
    if (e.op) {
      if (!at_literal()) fail("arithmetic operand must be a literal");
      e.operand = literal();
    }
    return e;
  }

  void parse_predicates(QueryAst& q) {
    do {
      if (at_literal()) {
        SqlLiteral lit = literal();
        auto op = compare_op();
        if (!op) fail("expected comparison operator");
        q.where.push_back({expr(), flip_compare(*op), lit});
        continue;
      }
      SqlExpr e = expr();
      if (accept_kw("BETWEEN")) {
        SqlLiteral lo = literal();
        expect_kw("AND");
        SqlLiteral hi = literal();
        q.where.push_back({e, CompareOp::kGe, lo});
        q.where.push_back({e, CompareOp::kLe, hi});
        continue;
      }
      auto op = compare_op();
      if (!op) fail("expected comparison operator");
      if (!at_literal()) fail("comparisons must be against a literal");
      q.where.push_back({e, *op, literal()});
    } while (accept_kw("AND"));
    if (peek().kind == Tok::kIdent && peek().upper == "OR") fail("OR is not supported");
  }

  void parse_select(QueryAst& q) {
    q.kind = StatementKind::kSelect;
    if (accept_sym("*")) {
      q.star = true;
    } else {
      do {
        SqlProjection p;
        const std::string& u = peek().upper;
        if (peek().kind == Tok::kIdent && (u == "SUM" || u == "MIN" || u == "MAX" || u == "COUNT") &&
            toks_[pos_ + 1].text == "(") {
          std::string fn = next().upper;
          expect_sym("(");
          if (fn == "COUNT") {
            expect_sym("*");
            p.kind = ProjKind::kCount;
          } else {
            p.kind = fn == "SUM" ? ProjKind::kSum : fn == "MIN" ? ProjKind::kMin : ProjKind::kMax;
            p.column = ident();
          }
          expect_sym(")");
        } else {
          p.column = ident();
        }
        q.projections.push_back(std::move(p));
      } while (accept_sym(","));
    }
    expect_kw("FROM");
    q.table = ident();
    if (accept_kw("WHERE")) parse_predicates(q);
    if (accept_kw("GROUP")) {
      expect_kw("BY");
      q.group_by = ident();
    }
    if (accept_kw("ORDER")) {
      expect_kw("BY");
      q.order_by = ident();
      if (accept_kw("DESC")) q.order_desc = true;
      else accept_kw("ASC");
    }
    if (accept_kw("LIMIT")) {
      if (peek().kind != Tok::kNumber) fail("expected LIMIT count");
      const std::string& t = next().text;
      std::uint64_t n = 0;
      auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), n);
      if (ec != std::errc() || p != t.data() + t.size()) fail("bad LIMIT count");
      q.limit = n;
    }
  }

  void parse_insert(QueryAst& q) {
    q.kind = StatementKind::kInsert;
    expect_kw("INTO");
    q.table = ident();
    if (accept_sym("(")) {
      do q.insert_columns.push_back(ident());
      while (accept_sym(","));
      expect_sym(")");
    }
    expect_kw("VALUES");
    expect_sym("(");
    do q.insert_values.push_back(literal());
    while (accept_sym(","));
    expect_sym(")");
    if (!q.insert_columns.empty() && q.insert_columns.size() != q.insert_values.size())
      fail("column and value counts differ");
  }

  void parse_update(QueryAst& q) {
    q.kind = StatementKind::kUpdate;
    q.table = ident();
    expect_kw("SET");
    do {
      SqlAssignment a;
      a.column = ident();
      expect_sym("=");
      if (at_literal()) {
        a.literal = literal();
      } else {
        a.is_literal = false;
        a.expr = expr();
        if (a.expr.column != a.column) fail("SET expression must reference the assigned column");
        if (!a.expr.op) fail("SET expression needs an arithmetic operator");
      }
      q.assignments.push_back(std::move(a));
    } while (accept_sym(","));
    if (accept_kw("WHERE")) parse_predicates(q);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

QueryAst parse_sql(std::string_view sql) { return Parser(sql).parse(); }

}  // namespace hedb
