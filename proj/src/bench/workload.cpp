#include "hedb/bench/workload.hpp"

#include <cmath>
#include <sstream>

#include "hedb/common/error.hpp"

namespace hedb {

const char* workload_kind_name(WorkloadKind k) { return k == WorkloadKind::kTpccLike ? "tpcc_like" : "synthetic"; }

WorkloadKind workload_kind_from_name(const std::string& name) {
  if (name == "tpcc_like") return WorkloadKind::kTpccLike;
  if (name == "synthetic") return WorkloadKind::kSynthetic;
  throw Error(ErrorCode::kInvalidArgument, "unknown workload '" + name + "'");
}

void WorkloadSpec::validate() const {
  if (!(scale > 0.0) || scale > 10.0) throw Error(ErrorCode::kInvalidArgument, "scale must be in (0, 10]");
  if (!(read_write_ratio >= 0.0 && read_write_ratio <= 1.0))
    throw Error(ErrorCode::kInvalidArgument, "read/write ratio must be in [0, 1]");
  if (!(eq_fraction >= 0.0 && eq_fraction <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "eq fraction must be in [0, 1]");
  if (concurrency == 0 || cores == 0) throw Error(ErrorCode::kInvalidArgument, "concurrency and cores must be positive");
  if (op_count == 0 && !(duration_micros > 0.0)) throw Error(ErrorCode::kInvalidArgument, "need a duration or an op count");
}

const TableData& Dataset::table(const std::string& name) const {
  for (const TableData& t : tables)
    if (t.name == name) return t;
  throw Error(ErrorCode::kNotFound, "no table " + name);
}

std::size_t Dataset::column_count() const {
  std::size_t n = 0;
  for (const TableData& t : tables) n += t.columns.size();
  return n;
}

std::uint64_t Dataset::plaintext_bytes() const {
  std::uint64_t n = 0;
  for (const TableData& t : tables)
    for (const auto& row : t.rows)
      for (const Value& v : row) n += encode_value(v).size();
  return n;
}

std::string Dataset::dump() const {
  std::ostringstream out;
  for (const TableData& t : tables) {
    out << "# " << t.name << "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i].plain_name;
    out << "\n";
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i)
        out << (i ? "," : "") << format_value(row[i], t.columns[i].kind, t.columns[i].scale);
      out << "\n";
    }
  }
  return out.str();
}

namespace {

ColumnSpec int_col(const std::string& name, bool indexed = false) {
  return ColumnSpec{.plain_name = name, .indexed = indexed};
}
ColumnSpec dec_col(const std::string& name, std::uint32_t scale = 2) {
  return ColumnSpec{.plain_name = name, .kind = DataKind::kDecimal, .scale = scale};
}
ColumnSpec text_col(const std::string& name, std::uint32_t width) {
  return ColumnSpec{.plain_name = name, .kind = DataKind::kText, .width = width};
}

std::int64_t rows_at(double base, double scale) { return std::max<std::int64_t>(1, std::llround(base * scale)); }

// Deterministic helpers; std distributions are not portable across
// standard libraries, modulo is.
struct Gen {
  std::mt19937_64 rng;
  std::int64_t num(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  std::string text(std::size_t lo, std::size_t hi) {
    static const char kAlpha[] = "abcdefghijklmnopqrstuvwxyz";
    std::string s(static_cast<std::size_t>(num(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi))), 'a');
    for (char& c : s) c = kAlpha[rng() % 26];
    return s;
  }
  std::string digits(std::size_t n) {
    std::string s(n, '0');
    for (char& c : s) c = static_cast<char>('0' + rng() % 10);
    return s;
  }
};

constexpr std::int64_t kEpoch = 1700000000;

void tpcc(const WorkloadSpec& spec, Dataset& d) {
  Gen g{std::mt19937_64(spec.seed)};
  const std::int64_t W = rows_at(100, spec.scale), D = rows_at(1000, spec.scale), C = rows_at(30000, spec.scale),
                     H = rows_at(30000, spec.scale), O = rows_at(30000, spec.scale), NO = rows_at(9000, spec.scale),
                     OL = rows_at(300000, spec.scale), S = rows_at(100000, spec.scale), I = rows_at(100000, spec.scale);
  auto address = [&](std::vector<Value>& r) {
    r.push_back(g.text(10, 20));
    r.push_back(g.text(10, 20));
    r.push_back(g.text(10, 20));
    r.push_back(g.text(2, 2));
    r.push_back(g.digits(4) + "11111");
  };

  TableData w{"warehouse",
              {int_col("w_id", true), text_col("w_name", 10), text_col("w_street_1", 20), text_col("w_street_2", 20),
               text_col("w_city", 20), text_col("w_state", 2), text_col("w_zip", 9), dec_col("w_tax", 4), dec_col("w_ytd")},
              {}};
  for (std::int64_t i = 1; i <= W; ++i) {
    std::vector<Value> r{i, g.text(6, 10)};
    address(r);
    r.push_back(g.num(0, 2000));
    r.push_back(std::int64_t{30000000});
    w.rows.push_back(std::move(r));
  }

  TableData dist{"district",
                 {int_col("d_id", true), int_col("d_w_id"), text_col("d_name", 10), text_col("d_street_1", 20),
                  text_col("d_street_2", 20), text_col("d_city", 20), text_col("d_state", 2), text_col("d_zip", 9),
                  dec_col("d_tax", 4), dec_col("d_ytd"), int_col("d_next_o_id")},
                 {}};
  for (std::int64_t i = 1; i <= D; ++i) {
    std::vector<Value> r{i, 1 + (i - 1) % W, g.text(6, 10)};
    address(r);
    r.push_back(g.num(0, 2000));
    r.push_back(std::int64_t{3000000});
    r.push_back(O + 1);
    dist.rows.push_back(std::move(r));
  }

  TableData cust{"customer",
                 {int_col("c_id", true), int_col("c_d_id"), int_col("c_w_id"), text_col("c_first", 16), text_col("c_middle", 2),
                  text_col("c_last", 16), text_col("c_street_1", 20), text_col("c_street_2", 20), text_col("c_city", 20),
                  text_col("c_state", 2), text_col("c_zip", 9), text_col("c_phone", 16), int_col("c_since"),
                  text_col("c_credit", 2), dec_col("c_credit_lim"), dec_col("c_discount", 4), dec_col("c_balance"),
                  dec_col("c_ytd_payment"), int_col("c_payment_cnt"), int_col("c_delivery_cnt"), text_col("c_data", 50)},
                 {}};
  for (std::int64_t i = 1; i <= C; ++i) {
    std::vector<Value> r{i, g.num(1, D), g.num(1, W), g.text(8, 16), std::string("OE"), g.text(6, 16)};
    address(r);
    r.push_back(g.digits(16));
    r.push_back(kEpoch + g.num(0, 86400 * 30));
    r.push_back(std::string(g.num(0, 9) == 0 ? "BC" : "GC"));
    r.push_back(std::int64_t{5000000});
    r.push_back(g.num(0, 5000));
    r.push_back(std::int64_t{-1000});
    r.push_back(std::int64_t{1000});
    r.push_back(std::int64_t{1});
    r.push_back(std::int64_t{0});
    r.push_back(g.text(30, 50));
    cust.rows.push_back(std::move(r));
  }

  TableData hist{"history",
                 {int_col("h_c_id"), int_col("h_c_d_id"), int_col("h_c_w_id"), int_col("h_d_id"), int_col("h_w_id"),
                  int_col("h_date"), dec_col("h_amount"), text_col("h_data", 24)},
                 {}};
  for (std::int64_t i = 1; i <= H; ++i) {
    const std::int64_t dd = g.num(1, D), ww = g.num(1, W);
    hist.rows.push_back({g.num(1, C), dd, ww, dd, ww, kEpoch + g.num(0, 86400 * 30), std::int64_t{1000}, g.text(12, 24)});
  }

  TableData ord{"orders",
                {int_col("o_id", true), int_col("o_d_id"), int_col("o_w_id"), int_col("o_c_id"), int_col("o_entry_d"),
                 int_col("o_carrier_id"), int_col("o_ol_cnt"), int_col("o_all_local"), dec_col("o_total")},
                {}};
  for (std::int64_t i = 1; i <= O; ++i)
    ord.rows.push_back({i, g.num(1, D), g.num(1, W), g.num(1, C), kEpoch + g.num(0, 86400 * 30),
                        i > O - NO ? std::int64_t{0} : g.num(1, 10), std::int64_t{10}, std::int64_t{1}, g.num(100, 500000)});

  TableData neword{"new_orders", {int_col("no_o_id", true), int_col("no_d_id"), int_col("no_w_id")}, {}};
  for (std::int64_t i = O - NO + 1; i <= O; ++i) neword.rows.push_back({i, g.num(1, D), g.num(1, W)});

  TableData ol{"order_line",
               {int_col("ol_o_id", true), int_col("ol_d_id"), int_col("ol_w_id"), int_col("ol_number"), int_col("ol_i_id"),
                int_col("ol_supply_w_id"), int_col("ol_delivery_d"), int_col("ol_quantity"), dec_col("ol_amount"),
                text_col("ol_dist_info", 24)},
               {}};
  const std::int64_t per_order = std::max<std::int64_t>(1, OL / O);
  for (std::int64_t i = 0; i < OL; ++i)
    ol.rows.push_back({1 + std::min(i / per_order, O - 1), g.num(1, D), g.num(1, W), 1 + i % per_order, g.num(1, I),
                       g.num(1, W), kEpoch + g.num(0, 86400 * 30), g.num(1, 10), g.num(1, 999999), g.text(24, 24)});

  TableData stock{"stock", {int_col("s_i_id", true), int_col("s_w_id"), int_col("s_quantity")}, {}};
  for (int k = 1; k <= 10; ++k) stock.columns.push_back(text_col(std::string("s_dist_") + (k < 10 ? "0" : "") + std::to_string(k), 24));
  for (const char* c : {"s_ytd", "s_order_cnt", "s_remote_cnt"}) stock.columns.push_back(int_col(c));
  stock.columns.push_back(text_col("s_data", 50));
  for (std::int64_t i = 1; i <= S; ++i) {
    std::vector<Value> r{i, g.num(1, W), g.num(10, 100)};
    for (int k = 0; k < 10; ++k) r.push_back(g.text(24, 24));
    r.push_back(std::int64_t{0});
    r.push_back(std::int64_t{0});
    r.push_back(std::int64_t{0});
    r.push_back(g.text(26, 50));
    stock.rows.push_back(std::move(r));
  }

  TableData item{"item", {int_col("i_id", true), int_col("i_im_id"), text_col("i_name", 24), dec_col("i_price"), text_col("i_data", 50)}, {}};
  for (std::int64_t i = 1; i <= I; ++i) item.rows.push_back({i, g.num(1, 10000), g.text(14, 24), g.num(100, 10000), g.text(26, 50)});

  d.tables = {std::move(w), std::move(dist), std::move(cust), std::move(hist), std::move(ord),
              std::move(neword), std::move(ol), std::move(stock), std::move(item)};
}

void synthetic(const WorkloadSpec& spec, Dataset& d) {
  Gen g{std::mt19937_64(spec.seed)};
  TableData kv{"kv", {int_col("k", true), int_col("v"), text_col("tag", 8)}, {}};
  const std::int64_t n = rows_at(100000, spec.scale);
  for (std::int64_t i = 1; i <= n; ++i) kv.rows.push_back({i, g.num(0, 1000), g.text(1, 8)});
  d.tables = {std::move(kv)};
}

}  // namespace

Dataset generate_dataset(const WorkloadSpec& spec) {
  spec.validate();
  Dataset d;
  if (spec.kind == WorkloadKind::kTpccLike) tpcc(spec, d);
  else synthetic(spec, d);
  return d;
}

void load_dataset(Deployment& dep, const Dataset& data) {
  for (const TableData& t : data.tables) {
    dep.create_table(t.name, t.columns);
    for (const auto& row : t.rows) dep.load_row(t.name, row);
  }
}

WorkloadState initial_state(const Dataset& data, const WorkloadSpec& spec) {
  WorkloadState s;
  if (spec.kind == WorkloadKind::kTpccLike) {
    s.next_order = static_cast<std::int64_t>(data.table("orders").rows.size()) + 1;
    s.order_lines = static_cast<std::int64_t>(data.table("order_line").rows.size());
    s.items = static_cast<std::int64_t>(data.table("stock").rows.size());
    s.districts = static_cast<std::int64_t>(data.table("district").rows.size());
  } else {
    s.keys = static_cast<std::int64_t>(data.table("kv").rows.size());
  }
  return s;
}

OperationStream::OperationStream(const WorkloadSpec& spec, std::uint64_t session)
    : spec_(spec), rng_(spec.seed * 0x9E3779B97F4A7C15ull + session + 1) {}

std::int64_t OperationStream::uniform(std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(rng_() % static_cast<std::uint64_t>(hi - lo + 1));
}

bool OperationStream::chance(double p) { return static_cast<double>(rng_() >> 11) * 0x1.0p-53 < p; }

Operation OperationStream::next(WorkloadState& s) {
  Operation op;
  op.write = !chance(spec_.read_write_ratio);
  const bool eq = chance(spec_.eq_fraction);
  auto n = [](std::int64_t v) { return std::to_string(v); };

  if (spec_.kind == WorkloadKind::kSynthetic) {
    if (op.write) {
      op.statements.push_back("UPDATE kv SET v = v + " + n(uniform(1, 9)) + " WHERE k = " + n(uniform(1, s.keys)));
    } else if (eq) {
      op.statements.push_back("SELECT v, tag FROM kv WHERE k = " + n(uniform(1, s.keys)));
    } else {
      const std::int64_t lo = uniform(0, 1000);
      op.statements.push_back("SELECT COUNT(*) FROM kv WHERE v BETWEEN " + n(lo) + " AND " + n(lo + uniform(0, 100)));
    }
    return op;
  }

  if (!op.write) {
    if (eq) {
      const std::int64_t orders = s.next_order - 1;
      op.statements.push_back("SELECT ol_i_id, ol_quantity FROM order_line WHERE ol_o_id = " + n(uniform(1, orders)));
    } else {
      op.statements.push_back("SELECT COUNT(*) FROM stock WHERE s_quantity < " + n(uniform(10, 100)));
    }
    return op;
  }

  // New-order style transaction with two lines.
  const std::int64_t o = s.next_order++;
  const std::int64_t d = uniform(1, s.districts);
  op.statements.push_back("UPDATE district SET d_next_o_id = d_next_o_id + 1 WHERE d_id = " + n(d));
  op.statements.push_back("INSERT INTO orders VALUES (" + n(o) + ", " + n(d) + ", 1, " + n(uniform(1, 300)) + ", " +
                          n(kEpoch + uniform(0, 86400 * 30)) + ", 0, 2, 1, " + n(uniform(1, 5000)) + ".00)");
  op.statements.push_back("INSERT INTO new_orders VALUES (" + n(o) + ", " + n(d) + ", 1)");
  for (int line = 1; line <= 2; ++line) {
    const std::int64_t item = uniform(1, s.items), qty = uniform(1, 10);
    op.statements.push_back("UPDATE stock SET s_quantity = s_quantity - " + n(qty) + " WHERE s_i_id = " + n(item));
    std::string dist = "dist";
    for (int k = 0; k < 20; ++k) dist.push_back(static_cast<char>('a' + uniform(0, 25)));
    op.statements.push_back("INSERT INTO order_line VALUES (" + n(o) + ", " + n(d) + ", 1, " + n(line) + ", " + n(item) +
                            ", 1, 0, " + n(qty) + ", " + n(uniform(1, 9999)) + ".50, '" + dist + "')");
    ++s.order_lines;
  }
  return op;
}

}  // namespace hedb
