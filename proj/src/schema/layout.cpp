#include "hedb/schema/layout.hpp"

#include "hedb/common/error.hpp"
#include "hedb/crypto/homomorphic.hpp"
#include "hedb/crypto/ore.hpp"
#include "hedb/crypto/symmetric.hpp"

namespace hedb {

std::optional<std::size_t> TableLayout::find(const std::string& column, Scheme scheme) const {
  for (std::size_t i = 0; i < fields.size(); ++i)
    if (fields[i].column == column && fields[i].scheme == scheme) return i;
  return std::nullopt;
}

std::size_t TableLayout::require(const std::string& column, Scheme scheme) const {
  auto i = find(column, scheme);
  if (!i) throw Error(ErrorCode::kSchemeMismatch, std::string("column has no ") + scheme_name(scheme) + " field");
  return *i;
}

Bytes TableLayout::serialize() const {
  ByteWriter w;
  w.u8(1);
  w.str(table);
  w.u32(static_cast<std::uint32_t>(fields.size()));
  for (const FieldSpec& f : fields) {
    w.str(f.column);
    w.str(f.label);
    w.u8(static_cast<std::uint8_t>(f.scheme));
    w.u8(static_cast<std::uint8_t>(f.type));
    w.u32(f.ore_bits);
    w.u8(f.indexed ? 1 : 0);
  }
  return std::move(w).take();
}

TableLayout TableLayout::parse(ByteView b) {
  ByteReader r(b);
  if (r.u8() != 1) throw Error(ErrorCode::kFormat, "unsupported layout version");
  TableLayout t;
  t.table = r.str();
  std::uint32_t n = r.u32();
  if (n > 4096) throw Error(ErrorCode::kFormat, "implausible field count");
  for (std::uint32_t i = 0; i < n; ++i) {
    FieldSpec f;
    f.column = r.str();
    f.label = r.str();
    std::uint8_t s = r.u8();
    if (s > static_cast<std::uint8_t>(Scheme::kRnd)) throw Error(ErrorCode::kFormat, "bad scheme tag");
    f.scheme = static_cast<Scheme>(s);
    std::uint8_t ty = r.u8();
    if (ty > 1) throw Error(ErrorCode::kFormat, "bad value type");
    f.type = static_cast<ValueType>(ty);
    f.ore_bits = r.u32();
    f.indexed = r.u8() != 0;
    t.fields.push_back(std::move(f));
  }
  r.expect_done();
  return t;
}

void check_row(const TableLayout& layout, const EncryptedRow& row) {
  if (row.fields.size() != layout.fields.size())
    throw Error(ErrorCode::kLayoutMismatch, "row has " + std::to_string(row.fields.size()) + " fields, layout has " +
                                                std::to_string(layout.fields.size()));
  for (std::size_t i = 0; i < row.fields.size(); ++i) {
    const FieldSpec& f = layout.fields[i];
    const Bytes& b = row.fields[i];
    try {
      switch (f.scheme) {
        case Scheme::kPlain:
          if (f.type == ValueType::kInt && b.size() != 8) throw Error(ErrorCode::kFormat, "plain integer must be 8 bytes");
          break;
        case Scheme::kAhe: AheCipher::parse(b); break;
        case Scheme::kMhe: MheCipher::parse(b); break;
        case Scheme::kOre: {
          OreCipher c = OreCipher::parse(b);
          if (c.bit_width != f.ore_bits) throw Error(ErrorCode::kFormat, "ORE width differs from the layout");
          break;
        }
        case Scheme::kDet: {
          DetCipher c = DetCipher::parse(b);
          if (f.type == ValueType::kInt && c.bytes.size() != 16 + 8)
            throw Error(ErrorCode::kFormat, "DET integer has the wrong length");
          break;
        }
        case Scheme::kRnd: {
          RndCipher c = RndCipher::parse(b);
          if (f.type == ValueType::kInt && c.body.size() != 8) throw Error(ErrorCode::kFormat, "RND integer has the wrong length");
          break;
        }
      }
    } catch (const Error& e) {
      throw Error(ErrorCode::kLayoutMismatch, "field " + std::to_string(i) + ": " + e.what());
    }
  }
}

}  // namespace hedb
