#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>

#include "hedb/bench/deployment.hpp"
#include "test_util.hpp"

namespace hedb {
namespace {

using testing_util::expect_code;

// Plain model of the test table, evaluated independently of the engine.
struct Item {
  std::int64_t id;
  std::int64_t qty;
  std::int64_t price;  // cents
  std::string name;
};

std::vector<ColumnSpec> item_columns() {
  return {ColumnSpec{.plain_name = "id", .sensitive = false},
          ColumnSpec{.plain_name = "qty", .indexed = true},
          ColumnSpec{.plain_name = "price", .kind = DataKind::kDecimal, .scale = 2},
          ColumnSpec{.plain_name = "name", .kind = DataKind::kText, .width = 6}};
}

const char* kNames[] = {"a", "ab", "ann", "b", "bob", "cy"};

std::string cents(std::int64_t c) {
  std::ostringstream o;
  if (c < 0) o << '-';
  const std::int64_t m = c < 0 ? -c : c;
  o << m / 100 << '.' << (m % 100 < 10 ? "0" : "") << m % 100;
  return o.str();
}

std::vector<Item> random_items(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<std::int64_t> qty(-50, 50), price(-2000, 20000);
  std::uniform_int_distribution<std::size_t> name(0, std::size(kNames) - 1);
  std::vector<Item> items;
  for (std::size_t i = 0; i < n; ++i) items.push_back({static_cast<std::int64_t>(i), qty(rng), price(rng), kNames[name(rng)]});
  return items;
}

std::unique_ptr<Deployment> make_deployment(Mode mode, const std::vector<Item>& items, EngineOptions eo = {}) {
  DeploymentOptions opts;
  opts.engine = eo;
  auto d = std::make_unique<Deployment>(mode, opts);
  d->create_table("items", item_columns());
  for (const Item& it : items) d->load_row("items", {it.id, it.qty, it.price, it.name});
  return d;
}

using Rows = std::vector<PlainRow>;

PlainRow row_of(std::initializer_list<std::optional<Value>> v) { return PlainRow(v); }

bool holds(const std::string& op, std::int64_t a, std::int64_t b) {
  if (op == "<") return a < b;
  if (op == "<=") return a <= b;
  if (op == ">") return a > b;
  if (op == ">=") return a >= b;
  if (op == "=") return a == b;
  return a != b;
}

bool holds_text(const std::string& op, const std::string& a, const std::string& b) {
  return holds(op, a.compare(b) < 0 ? -1 : a.compare(b) > 0 ? 1 : 0, 0);
}

// One randomly drawn query with its expected answer.
struct Case {
  std::string sql;
  Rows expected;
};

Case draw_case(std::mt19937_64& rng, const std::vector<Item>& items) {
  static const char* ops[] = {"<", "<=", ">", ">=", "=", "<>"};
  std::uniform_int_distribution<int> pick(0, 8), opi(0, 5), v(-55, 55), k(-9, 9), lim(0, 12);
  std::uniform_int_distribution<std::int64_t> p(-2100, 20100);
  std::uniform_int_distribution<std::size_t> nm(0, std::size(kNames) - 1);
  const std::string op = ops[opi(rng)];
  Case c;
  switch (pick(rng)) {
    case 0: {
      const int x = v(rng);
      c.sql = "SELECT id FROM items WHERE qty " + op + " " + std::to_string(x);
      for (const Item& it : items)
        if (holds(op, it.qty, x)) c.expected.push_back(row_of({Value{it.id}}));
      break;
    }
    case 1: {
      int a = v(rng), b = v(rng);
      if (a > b) std::swap(a, b);
      const std::string name = kNames[nm(rng)];
      c.sql = "SELECT COUNT(*) FROM items WHERE qty BETWEEN " + std::to_string(a) + " AND " + std::to_string(b) +
              " AND name = '" + name + "'";
      std::int64_t n = 0;
      for (const Item& it : items) n += it.qty >= a && it.qty <= b && it.name == name;
      c.expected.push_back(row_of({Value{n}}));
      break;
    }
    case 2: {
      const std::int64_t x = p(rng);
      c.sql = "SELECT SUM(qty), MIN(price), MAX(name) FROM items WHERE price " + op + " " + cents(x);
      std::optional<Value> sum, mn, mx;
      for (const Item& it : items) {
        if (!holds(op, it.price, x)) continue;
        sum = Value{(sum ? as_int(*sum) : 0) + it.qty};
        if (!mn || it.price < as_int(*mn)) mn = Value{it.price};
        if (!mx || it.name > as_text(*mx)) mx = Value{it.name};
      }
      c.expected.push_back(row_of({sum, mn, mx}));
      break;
    }
    case 3: {
      const std::string name = kNames[nm(rng)];
      c.sql = "SELECT id, name FROM items WHERE name " + op + " '" + name + "'";
      for (const Item& it : items)
        if (holds_text(op, it.name, name)) c.expected.push_back(row_of({Value{it.id}, Value{it.name}}));
      break;
    }
    case 4: {
      const int a = k(rng), x = v(rng);
      const std::string cmp = op == "=" || op == "<>" ? ">" : op;
      c.sql = "SELECT id FROM items WHERE qty " + std::string(a < 0 ? "- " : "+ ") + std::to_string(a < 0 ? -a : a) + " " +
              cmp + " " + std::to_string(x);
      for (const Item& it : items)
        if (holds(cmp, it.qty + a, x)) c.expected.push_back(row_of({Value{it.id}}));
      break;
    }
    case 5: {
      const int a = k(rng), x = v(rng) * 3;
      c.sql = "SELECT id FROM items WHERE qty * " + std::to_string(a) + " <= " + std::to_string(x);
      for (const Item& it : items)
        if (it.qty * a <= x) c.expected.push_back(row_of({Value{it.id}}));
      break;
    }
    case 6: {
      const bool desc = v(rng) > 0;
      const int n = lim(rng);
      c.sql = std::string("SELECT id, qty FROM items ORDER BY qty") + (desc ? " DESC" : "") + " LIMIT " + std::to_string(n);
      std::vector<Item> s = items;
      std::stable_sort(s.begin(), s.end(), [&](const Item& x, const Item& y) { return desc ? y.qty < x.qty : x.qty < y.qty; });
      for (int i = 0; i < n && i < static_cast<int>(s.size()); ++i) c.expected.push_back(row_of({Value{s[i].id}, Value{s[i].qty}}));
      break;
    }
    case 7: {
      const int x = v(rng);
      c.sql = "SELECT name, COUNT(*), SUM(qty) FROM items WHERE qty > " + std::to_string(x) + " GROUP BY name";
      std::vector<std::string> order;
      std::map<std::string, std::pair<std::int64_t, std::int64_t>> agg;
      for (const Item& it : items) {
        if (it.qty <= x) continue;
        if (!agg.count(it.name)) order.push_back(it.name);
        agg[it.name].first += 1;
        agg[it.name].second += it.qty;
      }
      for (const auto& n : order) c.expected.push_back(row_of({Value{n}, Value{agg[n].first}, Value{agg[n].second}}));
      break;
    }
    default: {
      const int x = v(rng);
      const std::int64_t y = p(rng);
      c.sql = "SELECT * FROM items WHERE qty = " + std::to_string(x) + " AND price > " + cents(y);
      for (const Item& it : items)
        if (it.qty == x && it.price > y) c.expected.push_back(row_of({Value{it.id}, Value{it.qty}, Value{it.price}, Value{it.name}}));
      break;
    }
  }
  return c;
}

TEST(EngineTest, RegistryErrors) {
  UdfRegistry empty;
  expect_code([&] { empty.lookup(UdfKind::kCompare); }, ErrorCode::kNotFound);
  UdfRegistry reg = UdfRegistry::builtin();
  for (int k = 0; k < kUdfKindCount; ++k) EXPECT_TRUE(reg.has(static_cast<UdfKind>(k)));
  expect_code([&] { reg.register_udf(UdfKind::kCompare, nullptr, nullptr); }, ErrorCode::kDuplicate);
  expect_code([] { Engine e(Mode::kStaticTee, nullptr); }, ErrorCode::kInvalidArgument);
}

TEST(EngineTest, SumOfHundredOnes) {
  for (Mode m : kAllModes) {
    Deployment d(m);
    d.create_table("t", {ColumnSpec{.plain_name = "v"}});
    for (int i = 0; i < 100; ++i) d.load_row("t", {std::int64_t{1}});
    PlainResult r = d.query("SELECT SUM(v), COUNT(*) FROM t");
    ASSERT_EQ(r.rows.size(), 1u) << mode_name(m);
    EXPECT_EQ(as_int(*r.rows[0][0]), 100) << mode_name(m);
    EXPECT_EQ(as_int(*r.rows[0][1]), 100) << mode_name(m);
    PlainResult empty = d.query("SELECT SUM(v), COUNT(*) FROM t WHERE v > 1");
    EXPECT_FALSE(empty.rows[0][0]) << mode_name(m);
    EXPECT_EQ(as_int(*empty.rows[0][1]), 0);
  }
}

TEST(EngineTest, ModesAgreeWithPlainOracle) {
  std::mt19937_64 rng(20261019);
  const std::vector<Item> items = random_items(rng, 60);
  std::vector<std::unique_ptr<Deployment>> ds;
  for (Mode m : kAllModes) ds.push_back(make_deployment(m, items));
  int non_empty = 0;
  for (int trial = 0; trial < 120; ++trial) {
    Case c = draw_case(rng, items);
    non_empty += !c.expected.empty();
    for (auto& d : ds) {
      PlainResult r = d->query(c.sql);
      EXPECT_EQ(r.rows, c.expected) << mode_name(d->mode()) << ": " << c.sql;
    }
  }
  EXPECT_GT(non_empty, 80);
}

TEST(EngineTest, UpdatesAgreeAcrossModes) {
  std::mt19937_64 rng(77);
  std::vector<Item> items = random_items(rng, 40);
  std::vector<std::unique_ptr<Deployment>> ds;
  for (Mode m : kAllModes) ds.push_back(make_deployment(m, items));
  std::uniform_int_distribution<int> v(-20, 20), which(0, 2);
  std::uniform_int_distribution<std::size_t> nm(0, std::size(kNames) - 1);
  for (int round = 0; round < 12; ++round) {
    const std::string name = kNames[nm(rng)];
    const int x = v(rng);
    std::string sql;
    switch (which(rng)) {
      case 0:
        sql = "UPDATE items SET qty = qty + " + std::to_string(x < 0 ? -x : x) + " WHERE name = '" + name + "'";
        for (Item& it : items)
          if (it.name == name) it.qty += x < 0 ? -x : x;
        break;
      case 1:
        sql = "UPDATE items SET qty = qty * 2, name = 'cy' WHERE qty < " + std::to_string(x);
        for (Item& it : items)
          if (it.qty < x) {
            it.qty *= 2;
            it.name = "cy";
          }
        break;
      default:
        sql = "UPDATE items SET price = 1.25 WHERE qty = " + std::to_string(x);
        for (Item& it : items)
          if (it.qty == x) it.price = 125;
        break;
    }
    for (auto& d : ds) d->query(sql);
    for (int q = 0; q < 5; ++q) {
      Case c = draw_case(rng, items);
      for (auto& d : ds) EXPECT_EQ(d->query(c.sql).rows, c.expected) << mode_name(d->mode()) << ": " << sql << " / " << c.sql;
    }
  }
  PlainResult r = ds[1]->query("UPDATE items SET qty = 0 WHERE id < 5");
  EXPECT_EQ(r.affected, 5u);
}

TEST(EngineTest, InsertThroughSql) {
  for (Mode m : kAllModes) {
    Deployment d(m);
    d.create_table("items", item_columns());
    d.query("INSERT INTO items VALUES (1, -4, 2.50, 'bob')");
    d.query("INSERT INTO items (name, price, qty, id) VALUES ('ann', -0.01, 9, 2)");
    PlainResult r = d.query("SELECT * FROM items ORDER BY qty");
    Rows want{row_of({Value{std::int64_t{1}}, Value{std::int64_t{-4}}, Value{std::int64_t{250}}, Value{std::string("bob")}}),
              row_of({Value{std::int64_t{2}}, Value{std::int64_t{9}}, Value{std::int64_t{-1}}, Value{std::string("ann")}})};
    EXPECT_EQ(r.rows, want) << mode_name(m);
    EXPECT_EQ(r.columns, (std::vector<std::string>{"id", "qty", "price", "name"}));
  }
}

TEST(EngineTest, StaticTeeRoutesEveryOperatorToEnclave) {
  std::mt19937_64 rng(5);
  auto d = make_deployment(Mode::kStaticTee, random_items(rng, 30));
  d->query("SELECT id FROM items WHERE qty < 3 AND name = 'ann'");
  d->query("SELECT id FROM items ORDER BY price");
  const MetricsSink& m = d->engine().metrics();
  EXPECT_GT(m.count(UdfKind::kCompare, Path::kTee), 0u);
  EXPECT_GT(m.count(UdfKind::kEqual, Path::kTee), 0u);
  for (int k = 0; k < kUdfKindCount; ++k) EXPECT_EQ(m.count(static_cast<UdfKind>(k), Path::kSoftware), 0u);
  EXPECT_GT(d->enclave()->tasks_executed(), 0u);
}

TEST(EngineTest, SoftwareAndEnclavePathsAgree) {
  std::mt19937_64 rng(99);
  const std::vector<Item> items = random_items(rng, 100);
  auto d = make_deployment(Mode::kAdaptive, items);
  auto sw = std::make_shared<ConstantChooser>(Path::kSoftware);
  auto tee = std::make_shared<ConstantChooser>(Path::kTee);
  std::uniform_int_distribution<int> v(-55, 55);
  std::uniform_int_distribution<std::size_t> nm(0, std::size(kNames) - 1);
  std::uint64_t compared = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::string sql = trial % 2 ? "SELECT id FROM items WHERE price < " + cents(v(rng) * 200)
                                      : "SELECT id FROM items WHERE name <> '" + std::string(kNames[nm(rng)]) + "'";
    d->engine().set_chooser(sw);
    PlainResult a = d->query(sql);
    d->engine().set_chooser(tee);
    PlainResult b = d->query(sql);
    EXPECT_EQ(a.rows, b.rows) << sql;
    compared += items.size();
  }
  EXPECT_EQ(compared, 10000u);
  const MetricsSink& m = d->engine().metrics();
  EXPECT_EQ(m.count(UdfKind::kCompare, Path::kSoftware) + m.count(UdfKind::kEqual, Path::kSoftware), 10000u);
  EXPECT_EQ(m.count(UdfKind::kCompare, Path::kTee) + m.count(UdfKind::kEqual, Path::kTee), 10000u);
}

TEST(EngineTest, PlannerPrefersIndexAndCheapFilters) {
  std::mt19937_64 rng(3);
  auto d = make_deployment(Mode::kSoftware, random_items(rng, 200));
  Client& c = d->client();

  Plan p = d->engine().plan(c.rewrite("SELECT id FROM items WHERE qty = 7"));
  EXPECT_TRUE(p.index_scan);
  EXPECT_EQ(p.nodes.front().op, PlanOp::kIndexScan);
  EXPECT_TRUE(p.filters.empty());

  p = d->engine().plan(c.rewrite("SELECT id FROM items WHERE qty > 3 AND qty <= 9 AND name = 'ann'"));
  EXPECT_TRUE(p.index_scan);
  EXPECT_TRUE(p.index_low && p.index_high);
  EXPECT_EQ(p.filters.size(), 1u);

  p = d->engine().plan(c.rewrite("SELECT id FROM items WHERE price > 3 AND id > 2 AND name = 'ann'"));
  EXPECT_FALSE(p.index_scan);
  EXPECT_EQ(p.nodes.front().op, PlanOp::kSeqScan);
  ASSERT_EQ(p.filters.size(), 3u);
  EXPECT_EQ(p.filters, (std::vector<std::size_t>{1, 2, 0}));  // plain, DET, ORE
  EXPECT_TRUE(std::is_sorted(p.filter_costs.begin(), p.filter_costs.end()));
  EXPECT_FALSE(p.describe().empty());

  // The index answers the same as a scan while touching fewer comparisons.
  ExecContext idx_ctx, scan_ctx;
  PlainResult a = d->query("SELECT id FROM items WHERE qty = 7", idx_ctx);
  PlainResult b = d->query("SELECT id FROM items WHERE qty + 0 = 7", scan_ctx);
  EXPECT_EQ(a.rows, b.rows);
  EXPECT_LT(idx_ctx.busy, scan_ctx.busy);

  expect_code([&] { d->engine().plan(c.rewrite("SELECT name, COUNT(*) FROM items GROUP BY name ORDER BY name")); },
              ErrorCode::kUnsupported);
}

TEST(EngineTest, RoundTripProtocol) {
  std::mt19937_64 rng(8);
  const std::vector<Item> items = random_items(rng, 60);
  auto d = make_deployment(Mode::kSoftware, items);
  const RewrittenQuery q = d->client().rewrite("SELECT id FROM items WHERE qty + 4 > 10");
  ExecContext ctx;
  expect_code([&] { d->engine().execute(q, ctx); }, ErrorCode::kProtocol);

  auto exec = d->engine().start(q);
  std::size_t trips = 0;
  while (exec->step(ctx) != QueryExecution::State::kDone) {
    if (exec->state() != QueryExecution::State::kNeedClient) continue;
    EXPECT_LE(exec->request().values.size(), d->engine().options().rows_per_step);
    ++trips;
    exec->resume(d->client().resolve(q, exec->request()));
  }
  EXPECT_EQ(trips, 3u);  // 60 rows in steps of 25
  PlainResult r = d->client().decrypt_results(exec->take_result());
  std::size_t want = 0;
  for (const Item& it : items) want += it.qty + 4 > 10;
  EXPECT_EQ(r.rows.size(), want);

  auto bad = d->engine().start(q);
  while (bad->step(ctx) != QueryExecution::State::kNeedClient) {}
  expect_code([&] { bad->resume(RoundTripResponse{}); bad->step(ctx); }, ErrorCode::kProtocol);
}

TEST(EngineTest, RejectsMalformedRows) {
  Deployment d(Mode::kSoftware);
  const TableSpec& t = d.create_table("items", item_columns());
  EncryptedRow row = d.client().encrypt_row("items", {std::int64_t{1}, std::int64_t{2}, std::int64_t{3}, std::string("a")});
  EncryptedRow shorter = row;
  shorter.fields.pop_back();
  expect_code([&] { d.engine().insert(t.anon_name, shorter); }, ErrorCode::kLayoutMismatch);
  EncryptedRow garbled = row;
  garbled.fields[3] = Bytes{1, 2, 3};
  expect_code([&] { d.engine().insert(t.anon_name, garbled); }, ErrorCode::kLayoutMismatch);
  expect_code([&] { d.engine().table("tmissing"); }, ErrorCode::kNotFound);
  RewrittenQuery foreign = d.client().rewrite(parse_sql("SELECT id FROM items"), Mode::kStaticTee);
  expect_code([&] { d.engine().start(foreign); }, ErrorCode::kInvalidArgument);
}

TEST(EngineTest, TablesSurviveReopen) {
  auto dir = std::filesystem::temp_directory_path() / "hedb_engine_reopen";
  std::filesystem::remove_all(dir);
  std::mt19937_64 rng(12);
  const std::vector<Item> items = random_items(rng, 50);
  DeploymentOptions opts;
  opts.data_dir = dir.string();
  Deployment d(Mode::kSoftware, opts);
  const std::string anon = d.create_table("items", item_columns()).anon_name;
  for (const Item& it : items) d.load_row("items", {it.id, it.qty, it.price, it.name});
  d.query("UPDATE items SET qty = 1000 WHERE id = 3");
  PlainResult before = d.query("SELECT * FROM items WHERE qty >= 0");

  Engine fresh(Mode::kSoftware, nullptr);
  EncryptedTable& t = fresh.open_table((dir / anon).string(), anon);
  EXPECT_EQ(t.row_count(), items.size());
  for (std::size_t f = 0; f < t.layout().fields.size(); ++f) EXPECT_EQ(t.has_index(f), d.engine().table(anon).has_index(f));
  ExecContext ctx;
  PlainResult after = d.client().decrypt_results(fresh.execute(d.client().rewrite("SELECT * FROM items WHERE qty >= 0"), ctx));
  EXPECT_EQ(after.rows, before.rows);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace hedb
