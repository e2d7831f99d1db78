#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "hedb/schema/catalog.hpp"
#include "hedb/schema/keystore.hpp"
#include "hedb/schema/rewriter.hpp"
#include "hedb/schema/sql.hpp"
#include "test_util.hpp"

namespace hedb {
namespace {

using testing_util::expect_code;

std::vector<ColumnSpec> accounts_columns() {
  ColumnSpec id{.plain_name = "id", .sensitive = false};
  ColumnSpec balance{.plain_name = "balance"};
  ColumnSpec owner{.plain_name = "owner", .kind = DataKind::kText, .width = 12};
  return {id, balance, owner};
}

Client make_client(Mode mode) {
  Catalog cat(mode);
  cat.register_table("accounts", accounts_columns());
  return Client(cat, std::make_shared<KeyStore>(MasterKey::generate()));
}

bool contains(const Bytes& hay, const std::string& needle) {
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

TEST(ValueTest, ParseAndFormat) {
  EXPECT_EQ(as_int(parse_value("12.34", false, DataKind::kDecimal, 2)), 1234);
  EXPECT_EQ(as_int(parse_value("-0.5", false, DataKind::kDecimal, 2)), -50);
  EXPECT_EQ(as_int(parse_value("7", false, DataKind::kDecimal, 3)), 7000);
  EXPECT_EQ(format_value(Value{std::int64_t{-50}}, DataKind::kDecimal, 2), "-0.50");
  EXPECT_EQ(format_value(Value{std::int64_t{1234}}, DataKind::kDecimal, 2), "12.34");
  EXPECT_THROW(parse_value("1.234", false, DataKind::kDecimal, 2), Error);
  EXPECT_THROW(parse_value("abc", true, DataKind::kInt, 0), Error);
  EXPECT_THROW(parse_value("12", false, DataKind::kText, 0), Error);
  for (std::int64_t v : {INT64_MIN, std::int64_t{-1}, std::int64_t{0}, INT64_MAX})
    EXPECT_EQ(as_int(decode_value(encode_value(v), ValueType::kInt)), v);
}

TEST(CatalogTest, AnonymousNamesAndDefaults) {
  Catalog cat(Mode::kSoftware);
  const TableSpec& t = cat.register_table("accounts", accounts_columns());
  std::set<std::string> names{t.anon_name};
  for (const ColumnSpec& c : t.columns) {
    names.insert(c.anon_name);
    EXPECT_NE(c.anon_name, c.plain_name);
  }
  EXPECT_EQ(names.size(), 4u);
  EXPECT_NE(t.anon_name.find("accounts"), 0u);

  EXPECT_TRUE(t.column("id").schemes.empty());
  EXPECT_EQ(t.column("balance").schemes,
            (std::vector<Scheme>{Scheme::kAhe, Scheme::kMhe, Scheme::kOre, Scheme::kDet}));
  EXPECT_EQ(t.column("owner").schemes, (std::vector<Scheme>{Scheme::kOre, Scheme::kDet}));

  TableLayout l = cat.layout("accounts");
  EXPECT_EQ(l.fields.size(), 1u + 4u + 2u);
  EXPECT_EQ(l.fields[0].scheme, Scheme::kPlain);
  EXPECT_EQ(l.fields[3].ore_bits, 32u);
  EXPECT_EQ(l.fields[5].ore_bits, 96u);

  expect_code([&] { cat.register_table("accounts", accounts_columns()); }, ErrorCode::kDuplicate);
  expect_code([&] { cat.register_table("bad name", accounts_columns()); }, ErrorCode::kInvalidArgument);
  ColumnSpec wide{.plain_name = "x", .kind = DataKind::kText, .width = 0};
  expect_code([&] { cat.register_table("t2", {wide}); }, ErrorCode::kInvalidArgument);
}

TEST(CatalogTest, SchemeSetsPerMode) {
  Catalog tee(Mode::kStaticTee);
  EXPECT_EQ(tee.register_table("a", accounts_columns()).column("balance").schemes, (std::vector<Scheme>{Scheme::kRnd}));
  Catalog plain(Mode::kPlaintext);
  EXPECT_TRUE(plain.register_table("a", accounts_columns()).column("balance").schemes.empty());
  Catalog adaptive(Mode::kAdaptive);
  EXPECT_EQ(adaptive.register_table("a", accounts_columns()).column("balance").schemes.size(), 5u);
}

TEST(CatalogTest, TextRoundTrip) {
  Catalog cat(Mode::kAdaptive);
  auto cols = accounts_columns();
  cols[1].indexed = true;
  cat.register_table("accounts", cols);
  cat.register_table("audit", {ColumnSpec{.plain_name = "amount", .kind = DataKind::kDecimal, .scale = 2}});
  Catalog back = Catalog::from_text(cat.to_text());
  EXPECT_EQ(back.to_text(), cat.to_text());
  EXPECT_EQ(back.mode(), Mode::kAdaptive);
  EXPECT_TRUE(back.table("accounts").column("balance").indexed);
  EXPECT_EQ(back.table("audit").column("amount").scale, 2u);
  const TableSpec& t = back.table("accounts");
  auto info = back.by_label(t.label(t.column("owner")));
  ASSERT_TRUE(info);
  EXPECT_EQ(info->column->plain_name, "owner");
  EXPECT_FALSE(back.by_label("nope.nope"));
  EXPECT_THROW(Catalog::from_text("hedb-catalog 9\n"), Error);
}

TEST(KeyStoreTest, SaveLoadWithPassphrase) {
  auto dir = std::filesystem::temp_directory_path() / "hedb_keystore_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "keys.bin").string();
  KeyStore ks(MasterKey::generate());
  ks.save(path, "correct horse", 1000);
  KeyStore back = KeyStore::load(path, "correct horse");
  EXPECT_EQ(back.key("t.c", Scheme::kDet).key_bytes, ks.key("t.c", Scheme::kDet).key_bytes);
  expect_code([&] { KeyStore::load(path, "wrong"); }, ErrorCode::kAuthFailure);
  std::filesystem::remove_all(dir);
}

TEST(SqlTest, ParsesSupportedForms) {
  QueryAst q = parse_sql("SELECT owner, SUM(balance) FROM accounts WHERE balance BETWEEN 10 AND 20 GROUP BY owner");
  EXPECT_EQ(q.kind, StatementKind::kSelect);
  ASSERT_EQ(q.where.size(), 2u);
  EXPECT_EQ(q.where[0].cmp, CompareOp::kGe);
  EXPECT_EQ(q.where[1].cmp, CompareOp::kLe);
  EXPECT_EQ(q.projections[1].kind, ProjKind::kSum);
  EXPECT_EQ(q.group_by, "owner");

  q = parse_sql("select * from accounts where 5 < balance * 2 order by balance desc limit 3");
  ASSERT_EQ(q.where.size(), 1u);
  EXPECT_EQ(q.where[0].cmp, CompareOp::kGt);
  EXPECT_EQ(q.where[0].left.op, ArithOp::kMul);
  EXPECT_TRUE(q.order_desc);
  EXPECT_EQ(q.limit, 3u);

  q = parse_sql("UPDATE accounts SET balance = balance - 5 WHERE owner = 'bob'");
  ASSERT_EQ(q.assignments.size(), 1u);
  EXPECT_FALSE(q.assignments[0].is_literal);
  EXPECT_EQ(q.where[0].right.raw, "bob");
  EXPECT_TRUE(q.where[0].right.quoted);

  q = parse_sql("INSERT INTO accounts (id, balance, owner) VALUES (1, -20, 'it''s')");
  EXPECT_EQ(q.insert_values[2].raw, "it's");

  EXPECT_THROW(parse_sql("SELECT * FROM a WHERE x = 1 OR y = 2"), Error);
  EXPECT_THROW(parse_sql("UPDATE a SET x = y + 1"), Error);
  EXPECT_THROW(parse_sql("SELECT FROM a"), Error);
  EXPECT_THROW(parse_sql("SELECT * FROM a WHERE x = 'open"), Error);
}

TEST(ClientTest, EncryptRowSchemes) {
  Client client = make_client(Mode::kSoftware);
  const TableLayout l = client.catalog().layout("accounts");
  EncryptedRow a = client.encrypt_row("accounts", {std::int64_t{1}, std::int64_t{500}, std::string("ann")});
  EncryptedRow b = client.encrypt_row("accounts", {std::int64_t{2}, std::int64_t{500}, std::string("ann")});
  check_row(l, a);
  for (std::size_t f = 1; f < l.fields.size(); ++f) {
    if (l.fields[f].scheme == Scheme::kDet) EXPECT_EQ(a.fields[f], b.fields[f]);
    if (l.fields[f].scheme == Scheme::kAhe || l.fields[f].scheme == Scheme::kMhe) EXPECT_NE(a.fields[f], b.fields[f]);
  }
  expect_code([&] { client.encrypt_row("accounts", {std::int64_t{1}, std::int64_t{2}}); }, ErrorCode::kLayoutMismatch);
  expect_code([&] { client.encrypt_row("accounts", {std::int64_t{1}, std::int64_t{2}, std::string(13, 'x')}); },
              ErrorCode::kOutOfRange);
}

TEST(ClientTest, RewriteCapabilities) {
  Client sw = make_client(Mode::kSoftware);
  auto r = sw.rewrite("SELECT id FROM accounts WHERE owner = 'ann' AND balance > 10 AND balance + 5 < 100 AND id = 3");
  ASSERT_EQ(r.where.size(), 4u);
  EXPECT_EQ(r.where[0].software, Capability::kDetEqual);
  EXPECT_EQ(r.where[1].software, Capability::kOreCompare);
  EXPECT_EQ(r.where[2].software, Capability::kHeAdd);
  EXPECT_TRUE(r.where[2].round_trip);
  EXPECT_EQ(r.where[3].software, Capability::kPlain);
  for (const auto& p : r.where) EXPECT_FALSE(p.tee);
  expect_code([&] { sw.rewrite("SELECT id FROM accounts WHERE balance / 2 > 1"); }, ErrorCode::kSchemeMismatch);

  Client tee = make_client(Mode::kStaticTee);
  r = tee.rewrite("SELECT balance FROM accounts WHERE balance / 2 > 1 AND owner < 'm'");
  for (const auto& p : r.where) {
    EXPECT_TRUE(p.tee);
    EXPECT_FALSE(p.software);
  }
  EXPECT_EQ(r.projections[0].output, Scheme::kRnd);

  Client ad = make_client(Mode::kAdaptive);
  r = ad.rewrite("SELECT SUM(balance) FROM accounts WHERE balance > 1");
  EXPECT_TRUE(r.where[0].software && r.where[0].tee);
  EXPECT_TRUE(r.projections[0].software && r.projections[0].tee);
}

TEST(ClientTest, RewrittenQueryHidesNamesAndLiterals) {
  Client client = make_client(Mode::kAdaptive);
  for (const char* sql : {"SELECT owner, balance FROM accounts WHERE owner = 'zebulon' AND balance > 987654",
                          "UPDATE accounts SET owner = 'quixotic' WHERE balance < 31337",
                          "INSERT INTO accounts VALUES (4, 271828, 'marmalade')"}) {
    Bytes wire = client.rewrite(sql).serialize();
    for (const char* leak : {"accounts", "owner", "balance", "zebulon", "quixotic", "marmalade", "987654", "31337", "271828"})
      EXPECT_FALSE(contains(wire, leak)) << sql << " leaks " << leak;
  }
}

TEST(ClientTest, DecryptFailsClosed) {
  Client client = make_client(Mode::kSoftware);
  const TableSpec& t = client.catalog().table("accounts");
  const std::string label = t.label(t.column("balance"));
  Bytes det = client.encrypt_field(t, t.column("balance"), Scheme::kDet, Value{std::int64_t{9}});
  EXPECT_EQ(as_int(*client.decrypt_cell({label, ValueType::kInt, ProjKind::kColumn}, {Scheme::kDet, det, false})), 9);
  expect_code([&] { client.decrypt_cell({"tfeed.beef", ValueType::kInt, ProjKind::kColumn}, {Scheme::kDet, det, false}); },
              ErrorCode::kNotFound);
  expect_code([&] { client.decrypt_cell({label, ValueType::kText, ProjKind::kColumn}, {Scheme::kDet, det, false}); },
              ErrorCode::kSchemeMismatch);
  expect_code([&] { client.decrypt_cell({label, ValueType::kInt, ProjKind::kColumn}, {Scheme::kPlain, encode_value(Value{std::int64_t{9}}), false}); },
              ErrorCode::kSchemeMismatch);
  Bytes bad = det;
  bad.back() ^= 1;
  EXPECT_THROW(client.decrypt_cell({label, ValueType::kInt, ProjKind::kColumn}, {Scheme::kDet, bad, false}), Error);
  EXPECT_FALSE(client.decrypt_cell({label, ValueType::kInt, ProjKind::kSum}, {Scheme::kPlain, {}, true}));
}

}  // namespace
}  // namespace hedb
