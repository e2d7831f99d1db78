#include "hedb/schema/rewriter.hpp"

#include "hedb/common/error.hpp"
#include "hedb/crypto/crypto.hpp"

namespace hedb {

const char* capability_name(Capability c) {
  switch (c) {
    case Capability::kPlain: return "plain";
    case Capability::kDetEqual: return "det-equal";
    case Capability::kOreCompare: return "ore-compare";
    case Capability::kHeAdd: return "he-add";
    case Capability::kHeMul: return "he-mul";
    case Capability::kTeeBridge: return "tee-bridge";
  }
  return "?";
}

std::vector<Capability> RwPredicate::capabilities() const {
  std::vector<Capability> out;
  if (software) out.push_back(*software);
  if (tee) out.push_back(Capability::kTeeBridge);
  return out;
}

namespace {

void write_literal(ByteWriter& w, const CipherLiteral& lit) {
  w.u32(static_cast<std::uint32_t>(lit.size()));
  for (auto& [s, b] : lit) {
    w.u8(static_cast<std::uint8_t>(s));
    w.blob(b);
  }
}

void write_column(ByteWriter& w, const RwColumn& c) {
  w.str(c.column);
  w.str(c.label);
  w.u8(static_cast<std::uint8_t>(c.type));
  w.u8(c.plain);
}

std::int64_t apply_arith(ArithOp op, std::int64_t a, std::int64_t b) {
  std::int64_t r = 0;
  bool overflow = false;
  switch (op) {
    case ArithOp::kAdd: overflow = __builtin_add_overflow(a, b, &r); break;
    case ArithOp::kSub: overflow = __builtin_sub_overflow(a, b, &r); break;
    case ArithOp::kMul: overflow = __builtin_mul_overflow(a, b, &r); break;
    case ArithOp::kDiv:
      if (b == 0) throw Error(ErrorCode::kNotInvertible, "division by zero");
      if (a % b != 0) throw Error(ErrorCode::kUnsupported, "inexact integer division");
      overflow = a == INT64_MIN && b == -1;
      r = overflow ? 0 : a / b;
      break;
  }
  if (overflow) throw Error(ErrorCode::kOutOfRange, "arithmetic overflow");
  return r;
}

}  // namespace

Bytes RewrittenQuery::serialize() const {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(kind));
  w.u8(static_cast<std::uint8_t>(mode));
  w.str(table);
  w.u8(star);
  w.u32(static_cast<std::uint32_t>(projections.size()));
  for (const RwProjection& p : projections) {
    w.u8(static_cast<std::uint8_t>(p.kind));
    write_column(w, p.column);
    w.u8(static_cast<std::uint8_t>(p.output));
    w.u8(static_cast<std::uint8_t>(p.software_output));
    w.u8(p.software);
    w.u8(p.tee);
  }
  w.u32(static_cast<std::uint32_t>(where.size()));
  for (const RwPredicate& p : where) {
    write_column(w, p.column);
    w.u8(p.arith ? static_cast<std::uint8_t>(*p.arith) + 1 : 0);
    write_literal(w, p.arith_operand);
    w.u8(static_cast<std::uint8_t>(p.cmp));
    write_literal(w, p.rhs);
    w.u8(p.software ? static_cast<std::uint8_t>(*p.software) + 1 : 0);
    w.u8(p.tee);
    w.u8(p.round_trip);
  }
  w.u8(group_by.has_value());
  if (group_by) write_column(w, group_by->column);
  w.u8(order_by.has_value());
  if (order_by) {
    write_column(w, order_by->column);
    w.u8(order_by->desc);
  }
  w.u64(limit.value_or(0));
  w.u32(static_cast<std::uint32_t>(insert_row.fields.size()));
  for (const Bytes& f : insert_row.fields) w.blob(f);
  w.u32(static_cast<std::uint32_t>(assignments.size()));
  for (const RwAssignment& a : assignments) {
    write_column(w, a.column);
    w.u8(a.is_literal);
    for (const Bytes& v : a.values) w.blob(v);
    w.u8(static_cast<std::uint8_t>(a.op));
    write_literal(w, a.operand);
  }
  return std::move(w).take();
}

Client::Client(Catalog catalog, std::shared_ptr<const KeyStore> keys)
    : catalog_(std::move(catalog)), keys_(std::move(keys)) {
  if (!keys_) throw Error(ErrorCode::kMissingKeys, "client needs a keystore");
}

Bytes Client::encrypt_field(const TableSpec& t, const ColumnSpec& c, Scheme scheme, const Value& v,
                            std::uint32_t ore_bits) const {
  if (is_text(v) != (c.kind == DataKind::kText))
    throw Error(ErrorCode::kInvalidArgument, "value type does not match column '" + c.plain_name + "'");
  if (is_text(v) && as_text(v).size() > c.width)
    throw Error(ErrorCode::kOutOfRange, "text longer than the width of column '" + c.plain_name + "'");
  if (scheme == Scheme::kPlain) return encode_value(v);
  const std::string label = t.label(c);
  const ColumnKey& key = keys_->key(label, scheme);
  switch (scheme) {
    case Scheme::kAhe: return sahe_encrypt(encode_signed(as_int(v)), key, random_u64()).serialize();
    case Scheme::kMhe: return smhe_encrypt(encode_signed(as_int(v)), key, random_u64()).serialize();
    case Scheme::kOre: {
      OreParams params{ore_bits ? ore_bits : c.ore_width(), 8};
      if (is_text(v)) return ore_encrypt_bytes(to_bytes(as_text(v)), key, params).serialize();
      return ore_encrypt(ore_offset_signed(as_int(v), params.bit_width), key, params).serialize();
    }
    case Scheme::kDet: return det_encrypt(encode_value(v), key).serialize();
    case Scheme::kRnd: return rnd_encrypt(encode_value(v), key).serialize();
    default: break;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown scheme");
}

std::vector<Bytes> Client::encode_column(const TableSpec& t, const ColumnSpec& c, const Value& v) const {
  std::vector<Bytes> out;
  if (c.schemes.empty()) {
    out.push_back(encrypt_field(t, c, Scheme::kPlain, v));
    return out;
  }
  for (Scheme s : c.schemes) out.push_back(encrypt_field(t, c, s, v));
  return out;
}

EncryptedRow Client::encrypt_row(const std::string& table, const std::vector<Value>& values) const {
  const TableSpec& t = catalog_.table(table);
  if (values.size() != t.columns.size())
    throw Error(ErrorCode::kLayoutMismatch, "expected " + std::to_string(t.columns.size()) + " values");
  EncryptedRow row;
  for (std::size_t i = 0; i < values.size(); ++i)
    for (Bytes& b : encode_column(t, t.columns[i], values[i])) row.fields.push_back(std::move(b));
  return row;
}

RewrittenQuery Client::rewrite(const QueryAst& q, Mode mode) const {
  const TableSpec& t = catalog_.table(q.table);
  const bool sw = mode == Mode::kSoftware || mode == Mode::kAdaptive || mode == Mode::kPlaintext;
  const bool tee = mode_uses_tee(mode);

  auto column = [&](const std::string& name) -> std::pair<const ColumnSpec&, RwColumn> {
    const ColumnSpec& c = t.column(name);
    return {c, RwColumn{c.anon_name, t.label(c), c.type(), c.schemes.empty()}};
  };
  auto value = [&](const ColumnSpec& c, const SqlLiteral& lit) { return parse_value(lit.raw, lit.quoted, c.kind, c.scale); };
  // Multiplicative operands are plain factors, never rescaled.
  auto operand = [&](const ColumnSpec& c, ArithOp op, const SqlLiteral& lit) {
    if (c.kind == DataKind::kText) throw Error(ErrorCode::kInvalidArgument, "arithmetic on text column '" + c.plain_name + "'");
    if (op == ArithOp::kMul || op == ArithOp::kDiv) return parse_value(lit.raw, lit.quoted, DataKind::kInt, 0);
    return value(c, lit);
  };
  auto decryptable = [](const ColumnSpec& c) -> std::optional<Scheme> {
    for (Scheme s : {Scheme::kDet, Scheme::kAhe, Scheme::kMhe})
      if (c.has(s)) return s;
    return std::nullopt;
  };

  RewrittenQuery r;
  r.kind = q.kind;
  r.mode = mode;
  r.table = t.anon_name;
  r.limit = q.limit;

  for (const SqlPredicate& p : q.where) {
    auto [c, rc] = column(p.left.column);
    RwPredicate rp;
    rp.column = rc;
    rp.cmp = p.cmp;
    rp.arith = p.left.op;
    Value rhs = value(c, p.right);
    std::optional<Value> arg;
    if (p.left.op) arg = operand(c, *p.left.op, p.left.operand);

    if (rc.plain) {
      rp.software = Capability::kPlain;
      rp.rhs[Scheme::kPlain] = encode_value(rhs);
      if (arg) rp.arith_operand[Scheme::kPlain] = encode_value(*arg);
      r.where.push_back(std::move(rp));
      continue;
    }
    if (!p.left.op) {
      if (sw) {
        const bool eq = p.cmp == CompareOp::kEq || p.cmp == CompareOp::kNe;
        if (eq && c.has(Scheme::kDet)) {
          rp.software = Capability::kDetEqual;
          rp.rhs[Scheme::kDet] = encrypt_field(t, c, Scheme::kDet, rhs);
          // Lets the planner answer the lookup from the cipher index.
          if (c.indexed && p.cmp == CompareOp::kEq) rp.rhs[Scheme::kOre] = encrypt_field(t, c, Scheme::kOre, rhs);
        } else if (c.has(Scheme::kOre)) {
          rp.software = Capability::kOreCompare;
          rp.rhs[Scheme::kOre] = encrypt_field(t, c, Scheme::kOre, rhs);
        }
      }
      if (tee && c.has(Scheme::kRnd)) {
        rp.tee = true;
        rp.rhs[Scheme::kRnd] = encrypt_field(t, c, Scheme::kRnd, rhs);
      }
    } else {
      const ArithOp op = *p.left.op;
      const Scheme he = op == ArithOp::kMul ? Scheme::kMhe : Scheme::kAhe;
      if (sw && op != ArithOp::kDiv && c.has(he)) {
        rp.software = he == Scheme::kAhe ? Capability::kHeAdd : Capability::kHeMul;
        rp.round_trip = true;
        rp.arith_operand[he] = encrypt_field(t, c, he, *arg);
        rp.rhs[Scheme::kOre] = encrypt_field(t, c, Scheme::kOre, rhs, rp.round_trip_ore_bits);
      }
      if (tee && c.has(Scheme::kRnd)) {
        rp.tee = true;
        rp.arith_operand[Scheme::kRnd] = encrypt_field(t, c, Scheme::kRnd, *arg);
        rp.rhs[Scheme::kRnd] = encrypt_field(t, c, Scheme::kRnd, rhs);
      }
    }
    if (!rp.software && !rp.tee)
      throw Error(ErrorCode::kSchemeMismatch, "no scheme of column '" + c.plain_name + "' supports this predicate in " +
                                                  mode_name(mode) + " mode");
    r.where.push_back(std::move(rp));
  }

  if (q.kind == StatementKind::kSelect) {
    std::vector<SqlProjection> projs = q.projections;
    if (q.star) {
      r.star = true;
      projs.clear();
      for (const ColumnSpec& c : t.columns) projs.push_back({ProjKind::kColumn, c.plain_name});
    }
    for (const SqlProjection& p : projs) {
      RwProjection rp;
      rp.kind = p.kind;
      if (p.kind == ProjKind::kCount) {
        rp.software = true;
        r.projections.push_back(std::move(rp));
        continue;
      }
      auto [c, rc] = column(p.column);
      rp.column = rc;
      if (q.group_by && p.kind == ProjKind::kColumn && p.column != *q.group_by)
        throw Error(ErrorCode::kInvalidArgument, "column '" + p.column + "' must appear in GROUP BY");
      if ((p.kind == ProjKind::kSum) && c.kind == DataKind::kText)
        throw Error(ErrorCode::kInvalidArgument, "SUM over text column '" + c.plain_name + "'");
      if (rc.plain) {
        rp.software = true;
        r.projections.push_back(std::move(rp));
        continue;
      }
      switch (p.kind) {
        case ProjKind::kColumn:
          if (tee && c.has(Scheme::kRnd)) rp.output = Scheme::kRnd;
          else if (auto s = decryptable(c); sw && s) rp.output = *s;
          else throw Error(ErrorCode::kSchemeMismatch, "column '" + c.plain_name + "' has no decryptable field");
          rp.software = rp.output != Scheme::kRnd;
          rp.tee = rp.output == Scheme::kRnd;
          break;
        case ProjKind::kSum:
          rp.software = sw && c.has(Scheme::kAhe);
          rp.software_output = Scheme::kAhe;
          rp.tee = tee && c.has(Scheme::kRnd);
          break;
        case ProjKind::kMin:
        case ProjKind::kMax: {
          auto s = decryptable(c);
          rp.software = sw && c.has(Scheme::kOre) && s;
          if (s) rp.software_output = *s;
          rp.tee = tee && c.has(Scheme::kRnd);
          break;
        }
        default: break;
      }
      if (!rp.software && !rp.tee)
        throw Error(ErrorCode::kSchemeMismatch, std::string("no scheme of column '") + c.plain_name + "' supports " +
                                                    proj_kind_name(p.kind) + " in " + mode_name(mode) + " mode");
      r.projections.push_back(std::move(rp));
    }

    if (q.group_by) {
      auto [c, rc] = column(*q.group_by);
      RwGroup g{rc, rc.plain || (sw && c.has(Scheme::kDet)), !rc.plain && tee && c.has(Scheme::kRnd)};
      if (!g.software && !g.tee) throw Error(ErrorCode::kSchemeMismatch, "GROUP BY needs a DET or RND field");
      r.group_by = g;
    }
    if (q.order_by) {
      auto [c, rc] = column(*q.order_by);
      RwOrder o{rc, q.order_desc, rc.plain || (sw && c.has(Scheme::kOre)), !rc.plain && tee && c.has(Scheme::kRnd)};
      if (!o.software && !o.tee) throw Error(ErrorCode::kSchemeMismatch, "ORDER BY needs an ORE or RND field");
      r.order_by = o;
    }
  } else if (q.kind == StatementKind::kInsert) {
    std::vector<Value> values(t.columns.size());
    if (q.insert_columns.empty()) {
      if (q.insert_values.size() != t.columns.size())
        throw Error(ErrorCode::kLayoutMismatch, "INSERT must supply every column");
      for (std::size_t i = 0; i < values.size(); ++i) values[i] = value(t.columns[i], q.insert_values[i]);
    } else {
      std::vector<bool> seen(t.columns.size(), false);
      for (std::size_t i = 0; i < q.insert_columns.size(); ++i) {
        const ColumnSpec& c = t.column(q.insert_columns[i]);
        std::size_t idx = static_cast<std::size_t>(&c - t.columns.data());
        if (seen[idx]) throw Error(ErrorCode::kDuplicate, "column '" + c.plain_name + "' given twice");
        seen[idx] = true;
        values[idx] = value(c, q.insert_values[i]);
      }
      for (std::size_t i = 0; i < seen.size(); ++i)
        if (!seen[i]) throw Error(ErrorCode::kLayoutMismatch, "INSERT must supply column '" + t.columns[i].plain_name + "'");
    }
    r.insert_row = encrypt_row(q.table, values);
  } else {
    for (const SqlAssignment& a : q.assignments) {
      auto [c, rc] = column(a.column);
      RwAssignment ra;
      ra.column = rc;
      ra.is_literal = a.is_literal;
      if (a.is_literal) {
        ra.values = encode_column(t, c, value(c, a.literal));
        ra.software = ra.tee = true;
      } else {
        ra.op = *a.expr.op;
        Value arg = operand(c, ra.op, a.expr.operand);
        if (rc.plain) {
          ra.software = true;
          ra.operand[Scheme::kPlain] = encode_value(arg);
        } else {
          if (auto s = decryptable(c); sw && s) {
            ra.software = true;
            ra.round_trip_source = *s;
            ra.operand[Scheme::kDet] = encrypt_field(t, c, Scheme::kDet, arg);
          }
          if (tee && c.has(Scheme::kRnd)) {
            ra.tee = true;
            ra.operand[Scheme::kRnd] = encrypt_field(t, c, Scheme::kRnd, arg);
          }
          if (!ra.software && !ra.tee)
            throw Error(ErrorCode::kSchemeMismatch, "column '" + c.plain_name + "' cannot be updated arithmetically");
        }
      }
      r.assignments.push_back(std::move(ra));
    }
  }
  return r;
}

Value Client::decrypt_field(const std::string& label, ValueType type, Scheme scheme, ByteView bytes) const {
  switch (scheme) {
    case Scheme::kPlain: return decode_value(bytes, type);
    case Scheme::kAhe:
      if (type != ValueType::kInt) break;
      return decode_signed(sahe_decrypt(AheCipher::parse(bytes), keys_->key(label, Scheme::kAhe)));
    case Scheme::kMhe:
      if (type != ValueType::kInt) break;
      return decode_signed(smhe_decrypt(MheCipher::parse(bytes), keys_->key(label, Scheme::kMhe)));
    case Scheme::kDet: return decode_value(det_decrypt(DetCipher::parse(bytes), keys_->key(label, Scheme::kDet)), type);
    case Scheme::kRnd: return decode_value(rnd_decrypt(RndCipher::parse(bytes), keys_->key(label, Scheme::kRnd)), type);
    case Scheme::kOre: throw Error(ErrorCode::kUnsupported, "ORE ciphertexts cannot be decrypted");
  }
  throw Error(ErrorCode::kSchemeMismatch, "scheme does not match the column type");
}

std::optional<Value> Client::decrypt_cell(const ResultColumn& column, const ResultCell& cell) const {
  if (cell.null) return std::nullopt;
  if (column.label.empty()) {
    if (column.kind != ProjKind::kCount || cell.scheme != Scheme::kPlain)
      throw Error(ErrorCode::kNotFound, "result column without a key label");
    return decode_value(cell.bytes, ValueType::kInt);
  }
  auto info = catalog_.by_label(column.label);
  if (!info) throw Error(ErrorCode::kNotFound, "result references an unknown column label");
  const ColumnSpec& c = *info->column;
  if (column.type != c.type()) throw Error(ErrorCode::kSchemeMismatch, "result column type differs from the catalog");
  if (c.schemes.empty() != (cell.scheme == Scheme::kPlain))
    throw Error(ErrorCode::kSchemeMismatch, "result cell scheme does not match the column's storage");
  return decrypt_field(column.label, column.type, cell.scheme, cell.bytes);
}

PlainResult Client::decrypt_results(const EncryptedResult& result) const {
  PlainResult out;
  out.affected = result.affected;
  for (const ResultColumn& col : result.columns) {
    if (col.label.empty()) {
      if (col.kind != ProjKind::kCount) throw Error(ErrorCode::kNotFound, "result column without a key label");
      out.columns.push_back("COUNT(*)");
      continue;
    }
    auto info = catalog_.by_label(col.label);
    if (!info) throw Error(ErrorCode::kNotFound, "result references an unknown column label");
    const std::string& name = info->column->plain_name;
    out.columns.push_back(col.kind == ProjKind::kColumn ? name : std::string(proj_kind_name(col.kind)) + "(" + name + ")");
  }
  for (const auto& row : result.rows) {
    if (row.size() != result.columns.size()) throw Error(ErrorCode::kFormat, "result row width differs from its header");
    PlainRow pr;
    pr.reserve(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) pr.push_back(decrypt_cell(result.columns[i], row[i]));
    out.rows.push_back(std::move(pr));
  }
  return out;
}

RoundTripResponse Client::resolve(const RewrittenQuery& q, const RoundTripRequest& request) const {
  RoundTripResponse resp;
  if (request.kind == RoundTripKind::kCompare) {
    const RwPredicate& p = q.where.at(request.target);
    if (!p.round_trip) throw Error(ErrorCode::kProtocol, "predicate does not need a round trip");
    if (request.scheme != Scheme::kAhe && request.scheme != Scheme::kMhe)
      throw Error(ErrorCode::kProtocol, "round trip intermediates must be homomorphic ciphertexts");
    const ColumnKey& ore_key = keys_->key(p.column.label, Scheme::kOre);
    OreParams params{p.round_trip_ore_bits, 8};
    for (const Bytes& b : request.values) {
      std::int64_t v = as_int(decrypt_field(p.column.label, ValueType::kInt, request.scheme, b));
      resp.ore.push_back(ore_encrypt(ore_offset_signed(v, params.bit_width), ore_key, params).serialize());
    }
    return resp;
  }

  const RwAssignment& a = q.assignments.at(request.target);
  if (a.is_literal || !a.software) throw Error(ErrorCode::kProtocol, "assignment does not need a round trip");
  auto info = catalog_.by_label(a.column.label);
  if (!info) throw Error(ErrorCode::kNotFound, "round trip references an unknown column label");
  auto it = a.operand.find(Scheme::kDet);
  if (it == a.operand.end()) throw Error(ErrorCode::kProtocol, "assignment operand missing");
  std::int64_t arg = as_int(decrypt_field(a.column.label, ValueType::kInt, Scheme::kDet, it->second));
  for (const Bytes& b : request.values) {
    std::int64_t cur = as_int(decrypt_field(a.column.label, ValueType::kInt, request.scheme, b));
    resp.fields.push_back(encode_column(*info->table, *info->column, apply_arith(a.op, cur, arg)));
  }
  return resp;
}

}  // namespace hedb
