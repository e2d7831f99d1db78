#include "hedb/schema/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include "hedb/common/error.hpp"

namespace hedb {

bool ColumnSpec::has(Scheme s) const { return std::find(schemes.begin(), schemes.end(), s) != schemes.end(); }

const ColumnSpec* TableSpec::find(const std::string& plain) const {
  for (const ColumnSpec& c : columns)
    if (c.plain_name == plain) return &c;
  return nullptr;
}

const ColumnSpec& TableSpec::column(const std::string& plain) const {
  const ColumnSpec* c = find(plain);
  if (!c) throw Error(ErrorCode::kNotFound, "unknown column '" + plain + "' in table '" + plain_name + "'");
  return *c;
}

std::vector<Scheme> default_schemes(Mode mode, DataKind kind) {
  const bool text = kind == DataKind::kText;
  switch (mode) {
    case Mode::kPlaintext: return {};
    case Mode::kSoftware:
      if (text) return {Scheme::kOre, Scheme::kDet};
      return {Scheme::kAhe, Scheme::kMhe, Scheme::kOre, Scheme::kDet};
    case Mode::kStaticTee:
    case Mode::kStaticTeePool: return {Scheme::kRnd};
    case Mode::kAdaptive:
      if (text) return {Scheme::kOre, Scheme::kDet, Scheme::kRnd};
      return {Scheme::kAhe, Scheme::kMhe, Scheme::kOre, Scheme::kDet, Scheme::kRnd};
  }
  return {};
}

std::string random_anon_name() {
  std::uint8_t b[8];
  random_fill(b);
  return to_hex(b);
}

namespace {

bool valid_identifier(const std::string& s) {
  if (s.empty() || s.size() > 64) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

std::string schemes_text(const std::vector<Scheme>& s) {
  if (s.empty()) return "-";
  std::string out;
  for (Scheme x : s) {
    if (!out.empty()) out += ',';
    out += scheme_name(x);
  }
  return out;
}

std::vector<Scheme> parse_schemes(const std::string& text) {
  std::vector<Scheme> out;
  if (text == "-") return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(scheme_from_name(item));
  return out;
}

}  // namespace

Catalog::Catalog(const Catalog& other) {
  std::shared_lock lock(other.mu_);
  mode_ = other.mode_;
  tables_ = other.tables_;
}

Catalog& Catalog::operator=(const Catalog& other) {
  if (this == &other) return *this;
  Catalog copy(other);
  std::unique_lock lock(mu_);
  mode_ = copy.mode_;
  tables_ = std::move(copy.tables_);
  return *this;
}

const TableSpec& Catalog::register_table(const std::string& name, std::vector<ColumnSpec> specs) {
  if (!valid_identifier(name)) throw Error(ErrorCode::kInvalidArgument, "bad table name '" + name + "'");
  if (specs.empty()) throw Error(ErrorCode::kInvalidArgument, "table needs at least one column");
  std::unique_lock lock(mu_);
  if (tables_.count(name)) throw Error(ErrorCode::kDuplicate, "table '" + name + "' already registered");

  TableSpec t;
  t.plain_name = name;
  std::set<std::string> anon_tables;
  for (auto& [_, other] : tables_) anon_tables.insert(other.anon_name);
  do t.anon_name = "t" + random_anon_name();
  while (anon_tables.count(t.anon_name));

  std::set<std::string> plain_seen, anon_seen;
  for (ColumnSpec& c : specs) {
    if (!valid_identifier(c.plain_name)) throw Error(ErrorCode::kInvalidArgument, "bad column name '" + c.plain_name + "'");
    if (!plain_seen.insert(c.plain_name).second)
      throw Error(ErrorCode::kDuplicate, "duplicate column '" + c.plain_name + "'");
    if (c.kind == DataKind::kText && (c.width == 0 || c.width > 255))
      throw Error(ErrorCode::kInvalidArgument, "text width must be 1..255");
    if (c.kind != DataKind::kText && c.ore_bits != 8 && c.ore_bits != 32 && c.ore_bits != 64)
      throw Error(ErrorCode::kInvalidArgument, "integer ORE width must be 8, 32 or 64");
    if (c.kind != DataKind::kDecimal) c.scale = 0;

    if (mode_ == Mode::kPlaintext || !c.sensitive) {
      c.schemes.clear();
    } else {
      if (c.schemes.empty()) c.schemes = default_schemes(mode_, c.kind);
      std::vector<Scheme> ordered;
      for (Scheme s : kSchemeOrder)
        if (c.has(s)) ordered.push_back(s);
      if (ordered.size() != c.schemes.size()) throw Error(ErrorCode::kInvalidArgument, "invalid or repeated scheme");
      if (c.kind == DataKind::kText && (c.has(Scheme::kAhe) || c.has(Scheme::kMhe)))
        throw Error(ErrorCode::kInvalidArgument, "homomorphic schemes need a numeric column");
      c.schemes = std::move(ordered);
    }
    c.indexed = c.indexed && c.has(Scheme::kOre);

    if (c.anon_name.empty()) {
      do c.anon_name = random_anon_name();
      while (anon_seen.count(c.anon_name));
    }
    if (!anon_seen.insert(c.anon_name).second) throw Error(ErrorCode::kDuplicate, "anonymous name collision");
  }
  t.columns = std::move(specs);
  return tables_.emplace(name, std::move(t)).first->second;
}

bool Catalog::has_table(const std::string& name) const {
  std::shared_lock lock(mu_);
  return tables_.count(name) != 0;
}

const TableSpec& Catalog::table(const std::string& name) const {
  std::shared_lock lock(mu_);
  auto it = tables_.find(name);
  if (it == tables_.end()) throw Error(ErrorCode::kNotFound, "unknown table '" + name + "'");
  return it->second;
}

std::vector<std::string> Catalog::table_names() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (auto& [name, _] : tables_) out.push_back(name);
  return out;
}

TableLayout Catalog::layout(const std::string& name) const {
  const TableSpec& t = table(name);
  TableLayout l;
  l.table = t.anon_name;
  for (const ColumnSpec& c : t.columns) {
    FieldSpec f;
    f.column = c.anon_name;
    f.label = t.label(c);
    f.type = c.type();
    if (c.schemes.empty()) {
      l.fields.push_back(f);
      continue;
    }
    for (Scheme s : c.schemes) {
      FieldSpec g = f;
      g.scheme = s;
      if (s == Scheme::kOre) {
        g.ore_bits = c.ore_width();
        g.indexed = c.indexed;
      }
      l.fields.push_back(std::move(g));
    }
  }
  return l;
}

std::optional<Catalog::LabelInfo> Catalog::by_label(const std::string& label) const {
  auto dot = label.find('.');
  if (dot == std::string::npos) return std::nullopt;
  std::string tbl = label.substr(0, dot), col = label.substr(dot + 1);
  std::shared_lock lock(mu_);
  for (auto& [_, t] : tables_) {
    if (t.anon_name != tbl) continue;
    for (const ColumnSpec& c : t.columns)
      if (c.anon_name == col) return LabelInfo{&t, &c};
  }
  return std::nullopt;
}

std::string Catalog::to_text() const {
  std::shared_lock lock(mu_);
  std::ostringstream out;
  out << "hedb-catalog 1\n";
  out << "mode " << mode_name(mode_) << "\n";
  for (auto& [_, t] : tables_) {
    out << "table " << t.plain_name << ' ' << t.anon_name << ' ' << t.columns.size() << "\n";
    for (const ColumnSpec& c : t.columns) {
      out << "column " << c.plain_name << ' ' << c.anon_name << ' ' << data_kind_name(c.kind) << ' ' << c.scale << ' '
          << c.width << ' ' << (c.sensitive ? 1 : 0) << ' ' << (c.indexed ? 1 : 0) << ' ' << c.ore_bits << ' '
          << schemes_text(c.schemes) << "\n";
    }
  }
  return out.str();
}

Catalog Catalog::from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "hedb-catalog 1") throw Error(ErrorCode::kFormat, "not a version 1 catalog");
  std::string word, value;
  if (!std::getline(in, line)) throw Error(ErrorCode::kFormat, "catalog is missing the mode line");
  std::istringstream ml(line);
  ml >> word >> value;
  if (word != "mode") throw Error(ErrorCode::kFormat, "catalog is missing the mode line");
  Catalog cat(mode_from_name(value));

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream tl(line);
    std::string plain, anon;
    std::size_t n = 0;
    tl >> word >> plain >> anon >> n;
    if (word != "table" || tl.fail()) throw Error(ErrorCode::kFormat, "bad table record: " + line);
    TableSpec t{plain, anon, {}};
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::getline(in, line)) throw Error(ErrorCode::kFormat, "truncated catalog");
      std::istringstream cl(line);
      ColumnSpec c;
      std::string kind, schemes;
      int sens = 0, idx = 0;
      cl >> word >> c.plain_name >> c.anon_name >> kind >> c.scale >> c.width >> sens >> idx >> c.ore_bits >> schemes;
      if (word != "column" || cl.fail()) throw Error(ErrorCode::kFormat, "bad column record: " + line);
      c.kind = data_kind_from_name(kind);
      c.sensitive = sens != 0;
      c.indexed = idx != 0;
      c.schemes = parse_schemes(schemes);
      t.columns.push_back(std::move(c));
    }
    if (!cat.tables_.emplace(plain, std::move(t)).second) throw Error(ErrorCode::kFormat, "duplicate table in catalog");
  }
  return cat;
}

void Catalog::save(const std::string& path) const {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIo, "cannot write catalog " + path);
  f << to_text();
  if (!f) throw Error(ErrorCode::kIo, "short write on catalog " + path);
}

Catalog Catalog::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::kIo, "cannot read catalog " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return from_text(ss.str());
}

}  // namespace hedb
