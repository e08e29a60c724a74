#include "atrapos/hin.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "atrapos/error.hpp"
#include "binary_io.hpp"
#include "csv.hpp"

namespace atrapos {

namespace {

using nlohmann::json;

constexpr char kFixtureMagic[8] = {'A', 'T', 'R', 'H', 'I', 'N', '0', '1'};

ValueKind parse_kind(const std::string& s) {
  if (s == "integer" || s == "int") return ValueKind::Integer;
  if (s == "string" || s == "str") return ValueKind::String;
  throw SchemaError("unknown value kind '" + s + "'");
}

const char* kind_name(ValueKind k) {
  return k == ValueKind::Integer ? "integer" : "string";
}

char parse_symbol(const json& j, const char* what) {
  const auto s = j.get<std::string>();
  if (s.size() != 1) {
    throw SchemaError(std::string(what) + " must be a single character: '" +
                      s + "'");
  }
  return s[0];
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  std::int64_t v = 0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (s.empty() || ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

PropertyValue parse_cell(const std::string& cell, ValueKind kind,
                         const std::string& where) {
  if (kind == ValueKind::String) return cell;
  auto v = parse_int(cell);
  if (!v) {
    throw IngestError(where + ": expected integer, got '" + cell + "'");
  }
  return *v;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string edge_display(const EdgeTypeDecl& e) {
  return e.label.empty() ? e.symbol : e.label;
}

}  // namespace

// ---------------------------------------------------------------- Schema --

Schema::Schema(std::vector<NodeTypeDecl> node_types,
               std::vector<EdgeTypeDecl> edge_types)
    : node_types_(std::move(node_types)), edge_types_(std::move(edge_types)) {
  if (node_types_.size() < 2 || edge_types_.size() < 2) {
    throw SchemaError("a HIN needs at least two node types and two edge types");
  }
  std::set<char> symbols;
  for (const auto& n : node_types_) {
    if (n.symbol == '|' || n.symbol == '-' || n.symbol == '.' ||
        std::isspace(static_cast<unsigned char>(n.symbol)) ||
        !std::isprint(static_cast<unsigned char>(n.symbol))) {
      throw SchemaError(std::string("unusable node type symbol '") + n.symbol +
                        "'");
    }
    if (!symbols.insert(n.symbol).second) {
      throw SchemaError(std::string("duplicate node type symbol '") +
                        n.symbol + "'");
    }
    std::set<std::string> props{n.id_column, "id"};
    for (const auto& p : n.properties) {
      if (!props.insert(p.name).second) {
        throw SchemaError("duplicate property '" + p.name + "' on type " +
                          n.symbol);
      }
    }
  }
  std::set<std::string> edge_names;
  for (const auto& e : edge_types_) {
    if (!symbols.count(e.source) || !symbols.count(e.target)) {
      throw SchemaError("edge type " + e.symbol +
                        " references an undeclared node type");
    }
    if (e.symbol.empty() || !edge_names.insert(e.symbol).second) {
      throw SchemaError("edge type symbols must be unique and non-empty: '" +
                        e.symbol + "'");
    }
  }
  for (const auto& e : edge_types_) {
    if (!e.label.empty() && e.label != e.symbol && edge_names.count(e.label)) {
      throw SchemaError("edge label '" + e.label +
                        "' collides with another edge symbol");
    }
  }
}

Schema Schema::from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("schema config is not valid JSON: ") +
                      e.what());
  }
  try {
    std::vector<NodeTypeDecl> nodes;
    for (const auto& jn : doc.at("node_types")) {
      NodeTypeDecl n;
      n.symbol = parse_symbol(jn.at("symbol"), "node type symbol");
      n.name = jn.value("name", std::string(1, n.symbol));
      n.id_column = jn.value("id_column", std::string("id"));
      n.id_kind = parse_kind(jn.value("id_kind", std::string("string")));
      n.file = jn.value("file", std::string());
      if (jn.contains("properties")) {
        for (const auto& jp : jn.at("properties")) {
          n.properties.push_back(
              {jp.at("name").get<std::string>(),
               parse_kind(jp.value("kind", std::string("string")))});
        }
      }
      nodes.push_back(std::move(n));
    }
    std::vector<EdgeTypeDecl> edges;
    for (const auto& je : doc.at("edge_types")) {
      EdgeTypeDecl e;
      e.source = parse_symbol(je.at("source"), "edge source");
      e.target = parse_symbol(je.at("target"), "edge target");
      e.symbol = je.value("symbol", std::string{e.source, e.target});
      e.label = je.value("label", std::string());
      e.file = je.value("file", std::string());
      edges.push_back(std::move(e));
    }
    return Schema(std::move(nodes), std::move(edges));
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed schema config: ") + e.what());
  }
}

Schema Schema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::string Schema::to_json() const {
  json doc;
  doc["node_types"] = json::array();
  for (const auto& n : node_types_) {
    json jn;
    jn["symbol"] = std::string(1, n.symbol);
    jn["name"] = n.name;
    jn["id_column"] = n.id_column;
    jn["id_kind"] = kind_name(n.id_kind);
    if (!n.file.empty()) jn["file"] = n.file;
    jn["properties"] = json::array();
    for (const auto& p : n.properties) {
      jn["properties"].push_back({{"name", p.name}, {"kind", kind_name(p.kind)}});
    }
    doc["node_types"].push_back(std::move(jn));
  }
  doc["edge_types"] = json::array();
  for (const auto& e : edge_types_) {
    json je;
    je["symbol"] = e.symbol;
    je["source"] = std::string(1, e.source);
    je["target"] = std::string(1, e.target);
    if (!e.label.empty()) je["label"] = e.label;
    if (!e.file.empty()) je["file"] = e.file;
    doc["edge_types"].push_back(std::move(je));
  }
  return doc.dump(2);
}

bool Schema::has_node_type(char symbol) const {
  return std::any_of(node_types_.begin(), node_types_.end(),
                     [&](const auto& n) { return n.symbol == symbol; });
}

std::size_t Schema::node_type_index(char symbol) const {
  for (std::size_t i = 0; i < node_types_.size(); ++i) {
    if (node_types_[i].symbol == symbol) return i;
  }
  throw SchemaError(std::string("unknown node type '") + symbol + "'");
}

const NodeTypeDecl& Schema::node_type(char symbol) const {
  return node_types_[node_type_index(symbol)];
}

const EdgeTypeDecl* Schema::find_edge_type(
    std::string_view symbol_or_label) const {
  for (const auto& e : edge_types_) {
    if (e.symbol == symbol_or_label) return &e;
  }
  for (const auto& e : edge_types_) {
    if (!e.label.empty() && e.label == symbol_or_label) return &e;
  }
  return nullptr;
}

const EdgeTypeDecl& Schema::edge_type(std::string_view symbol) const {
  const auto* e = find_edge_type(symbol);
  if (e == nullptr) {
    throw SchemaError("unknown edge type '" + std::string(symbol) + "'");
  }
  return *e;
}

std::vector<const EdgeTypeDecl*> Schema::edges_between(char source,
                                                       char target) const {
  std::vector<const EdgeTypeDecl*> out;
  for (const auto& e : edge_types_) {
    if (e.source == source && e.target == target) out.push_back(&e);
  }
  return out;
}

std::optional<ValueKind> Schema::property_kind(
    char type, std::string_view property) const {
  if (!has_node_type(type)) return std::nullopt;
  const auto& n = node_type(type);
  if (property == "id" || property == n.id_column) return n.id_kind;
  for (const auto& p : n.properties) {
    if (p.name == property) return p.kind;
  }
  return std::nullopt;
}

// ------------------------------------------------------------- NodeTable --

NodeTable::NodeTable(const NodeTypeDecl& decl) {
  names_.push_back(decl.id_column);
  columns_.push_back(decl.id_kind == ValueKind::Integer
                         ? Column(std::vector<std::int64_t>{})
                         : Column(std::vector<std::string>{}));
  for (const auto& p : decl.properties) {
    names_.push_back(p.name);
    columns_.push_back(p.kind == ValueKind::Integer
                           ? Column(std::vector<std::int64_t>{})
                           : Column(std::vector<std::string>{}));
  }
}

void NodeTable::add_row(std::string id, std::vector<PropertyValue> properties) {
  if (properties.size() + 1 != columns_.size()) {
    throw IngestError("node '" + id + "': expected " +
                      std::to_string(columns_.size() - 1) +
                      " property values");
  }
  if (index_.count(id)) throw IngestError("duplicate node id '" + id + "'");
  PropertyValue id_value = id;
  if (std::holds_alternative<std::vector<std::int64_t>>(columns_[0])) {
    auto v = parse_int(id);
    if (!v) throw IngestError("node id '" + id + "' is not an integer");
    id_value = *v;
    id = std::to_string(*v);
    if (index_.count(id)) throw IngestError("duplicate node id '" + id + "'");
  }
  properties.insert(properties.begin(), std::move(id_value));
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const bool ok = std::visit(
        [&](auto& col) {
          using Vec = std::decay_t<decltype(col)>;
          using T = typename Vec::value_type;
          if (!std::holds_alternative<T>(properties[c])) return false;
          col.push_back(std::get<T>(std::move(properties[c])));
          return true;
        },
        columns_[c]);
    if (!ok) {
      throw IngestError("node '" + id + "': property '" + names_[c] +
                        "' has the wrong kind");
    }
  }
  index_.emplace(id, static_cast<std::uint32_t>(ids_.size()));
  ids_.push_back(std::move(id));
}

std::optional<std::uint32_t> NodeTable::row_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) {
    // Integer ids are stored canonically; accept e.g. "+7" or " 7".
    if (std::holds_alternative<std::vector<std::int64_t>>(columns_[0])) {
      if (auto v = parse_int(id)) it = index_.find(std::to_string(*v));
    }
    if (it == index_.end()) return std::nullopt;
  }
  return it->second;
}

std::optional<std::size_t> NodeTable::column_index(
    std::string_view property) const {
  if (property == "id") return 0;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == property) return i;
  }
  return std::nullopt;
}

PropertyValue NodeTable::value(std::size_t row, std::size_t column) const {
  return std::visit([&](const auto& col) { return PropertyValue(col[row]); },
                    columns_[column]);
}

// ------------------------------------------------------------------- Hin --

Hin::Hin(Schema schema, std::map<char, NodeTable> tables,
         AdjacencyMap adjacency)
    : schema_(std::move(schema)),
      tables_(std::move(tables)),
      adjacency_(std::move(adjacency)) {
  for (const auto& n : schema_.node_types()) {
    if (!tables_.count(n.symbol)) {
      throw IngestError(std::string("missing node table for type ") + n.symbol);
    }
  }
  for (const auto& e : schema_.edge_types()) {
    auto it = adjacency_.find(e.symbol);
    if (it == adjacency_.end()) {
      throw IngestError("missing adjacency matrix for edge type " + e.symbol);
    }
    if (it->second.rows() != tables_.at(e.source).size() ||
        it->second.cols() != tables_.at(e.target).size()) {
      throw IngestError("adjacency matrix for " + e.symbol +
                        " has the wrong shape");
    }
  }
}

const NodeTable& Hin::nodes(char type) const {
  auto it = tables_.find(type);
  if (it == tables_.end()) {
    throw SchemaError(std::string("unknown node type '") + type + "'");
  }
  return it->second;
}

const SparseMatrix& Hin::adjacency(std::string_view edge_symbol) const {
  auto it = adjacency_.find(edge_symbol);
  if (it == adjacency_.end()) {
    throw SchemaError("unknown edge type '" + std::string(edge_symbol) + "'");
  }
  return it->second;
}

std::size_t Hin::node_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : tables_) n += t.size();
  return n;
}

std::size_t Hin::edge_count() const {
  std::size_t n = 0;
  for (const auto& [_, m] : adjacency_) n += m.nonzeros();
  return n;
}

void Hin::write(std::ostream& out) const {
  out.write(kFixtureMagic, sizeof(kFixtureMagic));
  detail::put_string(out, schema_.to_json());
  for (const auto& decl : schema_.node_types()) {
    const NodeTable& t = tables_.at(decl.symbol);
    detail::put_u64(out, t.size());
    for (const auto& col : t.columns()) {
      std::visit(
          [&](const auto& values) {
            using T = typename std::decay_t<decltype(values)>::value_type;
            for (const auto& v : values) {
              if constexpr (std::is_same_v<T, std::int64_t>) {
                detail::put_u64(out, static_cast<std::uint64_t>(v));
              } else {
                detail::put_string(out, v);
              }
            }
          },
          col);
    }
  }
  for (const auto& e : schema_.edge_types()) {
    adjacency_.at(e.symbol).write(out);
  }
  if (!out) throw Error("failed to write HIN fixture");
}

Hin Hin::read(std::istream& in) {
  char magic[sizeof(kFixtureMagic)] = {};
  if (!in.read(magic, sizeof(magic)) ||
      !std::equal(std::begin(magic), std::end(magic), kFixtureMagic)) {
    throw IngestError("not a HIN fixture");
  }
  Schema schema = Schema::from_json(detail::get_string(in));
  std::map<char, NodeTable> tables;
  for (const auto& decl : schema.node_types()) {
    NodeTable table(decl);
    const std::uint64_t rows = detail::get_u64(in);
    std::vector<std::vector<PropertyValue>> cells(
        rows, std::vector<PropertyValue>(decl.properties.size() + 1));
    std::vector<ValueKind> kinds{decl.id_kind};
    for (const auto& p : decl.properties) kinds.push_back(p.kind);
    for (std::size_t c = 0; c < kinds.size(); ++c) {
      for (std::uint64_t r = 0; r < rows; ++r) {
        if (kinds[c] == ValueKind::Integer) {
          cells[r][c] = static_cast<std::int64_t>(detail::get_u64(in));
        } else {
          cells[r][c] = detail::get_string(in);
        }
      }
    }
    for (auto& row : cells) {
      std::string id = std::visit(
          [](const auto& v) {
            if constexpr (std::is_same_v<std::decay_t<decltype(v)>,
                                         std::int64_t>) {
              return std::to_string(v);
            } else {
              return v;
            }
          },
          row[0]);
      row.erase(row.begin());
      table.add_row(std::move(id), std::move(row));
    }
    tables.emplace(decl.symbol, std::move(table));
  }
  AdjacencyMap adjacency;
  for (const auto& e : schema.edge_types()) {
    adjacency.emplace(e.symbol, SparseMatrix::read(in));
  }
  return Hin(std::move(schema), std::move(tables), std::move(adjacency));
}

void Hin::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write(out);
}

Hin Hin::open(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open " + path.string());
  char magic[sizeof(kFixtureMagic)] = {};
  in.read(magic, sizeof(magic));
  if (in.gcount() == sizeof(magic) &&
      std::equal(std::begin(magic), std::end(magic), kFixtureMagic)) {
    in.seekg(0);
    return read(in);
  }
  return load_hin(path);
}

// ------------------------------------------------------------- Ingestion --

Hin load_hin(const std::filesystem::path& schema_config) {
  Schema schema = Schema::load(schema_config);
  const auto base = schema_config.parent_path();
  std::map<char, std::filesystem::path> node_files;
  std::map<std::string, std::filesystem::path> edge_files;
  for (const auto& n : schema.node_types()) {
    if (!n.file.empty()) node_files[n.symbol] = base / n.file;
  }
  for (const auto& e : schema.edge_types()) {
    if (!e.file.empty()) edge_files[e.symbol] = base / e.file;
  }
  return load_hin(schema, node_files, edge_files);
}

Hin load_hin(const Schema& schema,
             const std::map<char, std::filesystem::path>& node_files,
             const std::map<std::string, std::filesystem::path>& edge_files) {
  std::map<char, NodeTable> tables;
  for (const auto& decl : schema.node_types()) {
    NodeTable table(decl);
    auto it = node_files.find(decl.symbol);
    if (it == node_files.end()) {
      throw IngestError(std::string("no node file for type ") + decl.symbol);
    }
    const auto records = detail::read_csv(it->second);
    if (records.empty()) {
      throw IngestError(it->second.string() + ": missing header row");
    }
    const auto& header = records.front();
    if (header.empty() || std::string(trim(header[0])) != decl.id_column) {
      throw IngestError(it->second.string() + ": first column must be '" +
                        decl.id_column + "'");
    }
    // Property columns may appear in any order but must match the schema.
    std::vector<std::size_t> column_of(decl.properties.size());
    if (header.size() != decl.properties.size() + 1) {
      throw IngestError(it->second.string() +
                        ": header does not match declared properties");
    }
    for (std::size_t p = 0; p < decl.properties.size(); ++p) {
      auto pos = std::find_if(header.begin() + 1, header.end(),
                              [&](const std::string& h) {
                                return trim(h) == decl.properties[p].name;
                              });
      if (pos == header.end()) {
        throw IngestError(it->second.string() + ": missing property column '" +
                          decl.properties[p].name + "'");
      }
      column_of[p] = static_cast<std::size_t>(pos - header.begin());
    }
    for (std::size_t r = 1; r < records.size(); ++r) {
      const auto& rec = records[r];
      const std::string where =
          it->second.filename().string() + ":" + std::to_string(r + 1);
      if (rec.size() != header.size()) {
        throw IngestError(where + ": wrong number of fields");
      }
      std::vector<PropertyValue> props;
      for (std::size_t p = 0; p < decl.properties.size(); ++p) {
        props.push_back(parse_cell(rec[column_of[p]], decl.properties[p].kind,
                                   where));
      }
      try {
        table.add_row(rec[0], std::move(props));
      } catch (const IngestError& e) {
        throw IngestError(where + ": " + e.what());
      }
    }
    tables.emplace(decl.symbol, std::move(table));
  }

  Hin::AdjacencyMap adjacency;
  for (const auto& e : schema.edge_types()) {
    const NodeTable& src = tables.at(e.source);
    const NodeTable& dst = tables.at(e.target);
    std::vector<std::pair<SparseMatrix::Index, SparseMatrix::Index>> coords;
    auto it = edge_files.find(e.symbol);
    if (it == edge_files.end()) {
      throw IngestError("no edge file for type " + e.symbol);
    }
    const auto records = detail::read_csv(it->second);
    for (std::size_t r = 1; r < records.size(); ++r) {
      const auto& rec = records[r];
      const std::string where =
          it->second.filename().string() + ":" + std::to_string(r + 1);
      if (rec.size() != 2) throw IngestError(where + ": expected two columns");
      auto s = src.row_of(trim(rec[0]));
      auto d = dst.row_of(trim(rec[1]));
      if (!s || !d) {
        throw IngestError(where + ": unknown node id '" +
                          (!s ? rec[0] : rec[1]) + "'");
      }
      coords.emplace_back(*s, *d);
    }
    adjacency.emplace(e.symbol, SparseMatrix::from_pattern(
                                    src.size(), dst.size(), std::move(coords)));
  }
  return Hin(schema, std::move(tables), std::move(adjacency));
}

// ----------------------------------------------------------- Constraints --

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::Less: return "<";
    case CompareOp::LessEqual: return "<=";
    case CompareOp::Greater: return ">";
    case CompareOp::GreaterEqual: return ">=";
    case CompareOp::Equal: return "=";
    case CompareOp::NotEqual: return "!=";
  }
  return "?";
}

bool Constraint::matches(const PropertyValue& v) const {
  if (v.index() != value.index()) return false;
  const auto cmp = v <=> value;
  switch (op) {
    case CompareOp::Less: return cmp < 0;
    case CompareOp::LessEqual: return cmp <= 0;
    case CompareOp::Greater: return cmp > 0;
    case CompareOp::GreaterEqual: return cmp >= 0;
    case CompareOp::Equal: return cmp == 0;
    case CompareOp::NotEqual: return cmp != 0;
  }
  return false;
}

std::string Constraint::to_string() const {
  std::string out(1, node_type);
  out += '.';
  out += property;
  out += atrapos::to_string(op);
  if (const auto* i = std::get_if<std::int64_t>(&value)) {
    out += std::to_string(*i);
  } else {
    out += quote(std::get<std::string>(value));
  }
  return out;
}

// --------------------------------------------------------------- Queries --

std::string MetapathQuery::path() const {
  return std::string(nodes.begin(), nodes.end());
}

std::string MetapathQuery::to_string(const Schema& schema) const {
  bool simple = true;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    if (schema.edges_between(nodes[k], nodes[k + 1]).size() != 1) {
      simple = false;
    }
  }
  std::string out;
  if (simple) {
    out = path();
  } else {
    out.push_back(nodes[0]);
    for (std::size_t k = 0; k < edges.size(); ++k) {
      out += "-[" + edge_display(schema.edge_type(edges[k])) + "]->";
      out.push_back(nodes[k + 1]);
    }
  }
  if (!constraints.empty()) {
    out += " | ";
    for (std::size_t i = 0; i < constraints.size(); ++i) {
      if (i > 0) out += ", ";
      out += constraints[i].to_string();
    }
  }
  return out;
}

namespace {

// Splits on commas outside double quotes.
std::vector<std::string_view> split_constraints(std::string_view text) {
  std::vector<std::string_view> parts;
  bool quoted = false;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\\' && quoted) {
      ++i;
    } else if (text[i] == '"') {
      quoted = !quoted;
    } else if (text[i] == ',' && !quoted) {
      parts.push_back(text.substr(start, i - start));
      start = i + 1;
    }
  }
  if (quoted) throw ParseError("unterminated string literal");
  parts.push_back(text.substr(start));
  return parts;
}

Constraint parse_constraint(std::string_view text, const Schema& schema) {
  text = trim(text);
  if (text.size() < 4 || text[1] != '.') {
    throw ParseError("malformed constraint '" + std::string(text) + "'");
  }
  Constraint c;
  c.node_type = text[0];
  if (!schema.has_node_type(c.node_type)) {
    throw ParseError(std::string("unknown symbol '") + c.node_type +
                     "' in constraint");
  }
  std::size_t i = 2;
  while (i < text.size() && (std::isalnum(static_cast<unsigned char>(text[i])) ||
                             text[i] == '_')) {
    ++i;
  }
  c.property = std::string(text.substr(2, i - 2));
  if (c.property.empty()) throw ParseError("missing property name");
  const std::string_view rest = trim(text.substr(i));
  static constexpr std::pair<std::string_view, CompareOp> kOps[] = {
      {"<=", CompareOp::LessEqual}, {">=", CompareOp::GreaterEqual},
      {"!=", CompareOp::NotEqual},  {"==", CompareOp::Equal},
      {"<", CompareOp::Less},       {">", CompareOp::Greater},
      {"=", CompareOp::Equal}};
  std::string_view literal;
  bool found = false;
  for (const auto& [tok, op] : kOps) {
    if (rest.substr(0, tok.size()) == tok) {
      c.op = op;
      literal = trim(rest.substr(tok.size()));
      found = true;
      break;
    }
  }
  if (!found) {
    throw ParseError("missing comparison operator in '" + std::string(text) +
                     "'");
  }
  const auto kind = schema.property_kind(c.node_type, c.property);
  if (!kind) {
    throw ParseError("property '" + c.property + "' is not declared on type " +
                     c.node_type);
  }
  if (literal.empty()) throw ParseError("missing literal");
  if (*kind == ValueKind::Integer) {
    auto v = parse_int(literal);
    if (!v) {
      throw ParseError("ill-formed integer literal '" + std::string(literal) +
                       "'");
    }
    c.value = *v;
  } else if (literal.front() == '"') {
    std::string s;
    std::size_t j = 1;
    for (; j < literal.size() && literal[j] != '"'; ++j) {
      if (literal[j] == '\\' && j + 1 < literal.size()) ++j;
      s.push_back(literal[j]);
    }
    if (j != literal.size() - 1) {
      throw ParseError("ill-formed string literal " + std::string(literal));
    }
    c.value = std::move(s);
  } else {
    if (literal.find_first_of("\"\\") != std::string_view::npos) {
      throw ParseError("ill-formed string literal " + std::string(literal));
    }
    c.value = std::string(literal);
  }
  if (c.property == schema.node_type(c.node_type).id_column) c.property = "id";
  return c;
}

}  // namespace

MetapathQuery parse_metapath(std::string_view text, const Schema& schema) {
  const auto bar = text.find('|');
  const std::string_view path_text = trim(text.substr(0, bar));
  MetapathQuery q;
  if (path_text.find("-[") != std::string_view::npos) {
    std::size_t i = 0;
    auto take_symbol = [&] {
      while (i < path_text.size() &&
             std::isspace(static_cast<unsigned char>(path_text[i]))) {
        ++i;
      }
      if (i >= path_text.size()) throw ParseError("metapath ends early");
      const char s = path_text[i++];
      if (!schema.has_node_type(s)) {
        throw ParseError(std::string("unknown symbol '") + s + "'");
      }
      q.nodes.push_back(s);
    };
    take_symbol();
    while (i < path_text.size()) {
      const auto open = path_text.find("-[", i);
      const auto close = path_text.find("]->", i);
      if (open != i || close == std::string_view::npos) {
        throw ParseError("malformed edge annotation in '" +
                         std::string(path_text) + "'");
      }
      const auto label = trim(path_text.substr(open + 2, close - open - 2));
      i = close + 3;
      take_symbol();
      const char src = q.nodes[q.nodes.size() - 2];
      const char dst = q.nodes.back();
      const EdgeTypeDecl* match = nullptr;
      for (const auto* e : schema.edges_between(src, dst)) {
        if (e->symbol == label || e->label == label) match = e;
      }
      if (match == nullptr) {
        throw ParseError("no edge '" + std::string(label) + "' from " + src +
                         " to " + dst);
      }
      q.edges.push_back(match->symbol);
    }
  } else {
    for (char s : path_text) {
      if (std::isspace(static_cast<unsigned char>(s))) continue;
      if (!schema.has_node_type(s)) {
        throw ParseError(std::string("unknown symbol '") + s + "'");
      }
      if (!q.nodes.empty()) {
        const auto candidates = schema.edges_between(q.nodes.back(), s);
        if (candidates.empty()) {
          throw ParseError(std::string("no edge type from ") + q.nodes.back() +
                           " to " + s);
        }
        if (candidates.size() > 1) {
          throw ParseError(std::string("ambiguous edge from ") +
                           q.nodes.back() + " to " + s +
                           "; use the -[label]-> form");
        }
        q.edges.push_back(candidates.front()->symbol);
      }
      q.nodes.push_back(s);
    }
  }
  if (q.nodes.size() < 2) {
    throw ParseError("a metapath needs at least two node types");
  }
  if (bar != std::string_view::npos) {
    const auto ctext = trim(text.substr(bar + 1));
    if (!ctext.empty()) {
      for (auto part : split_constraints(ctext)) {
        q.constraints.push_back(parse_constraint(part, schema));
      }
    }
  }
  std::sort(q.constraints.begin(), q.constraints.end());
  q.constraints.erase(std::unique(q.constraints.begin(), q.constraints.end()),
                      q.constraints.end());
  validate_query(q, schema);
  return q;
}

void validate_query(const MetapathQuery& query, const Schema& schema) {
  if (query.nodes.size() < 2 || query.edges.size() + 1 != query.nodes.size()) {
    throw ParseError("metapath shape is inconsistent");
  }
  for (std::size_t k = 0; k < query.edges.size(); ++k) {
    const auto& e = schema.edge_type(query.edges[k]);
    if (e.source != query.nodes[k] || e.target != query.nodes[k + 1]) {
      throw ParseError("edge type " + e.symbol + " does not connect " +
                       query.nodes[k] + " to " + query.nodes[k + 1]);
    }
  }
  for (const auto& c : query.constraints) {
    if (std::find(query.nodes.begin(), query.nodes.end(), c.node_type) ==
        query.nodes.end()) {
      throw ParseError("constraint " + c.to_string() +
                       " targets a type absent from the metapath");
    }
    const auto kind = schema.property_kind(c.node_type, c.property);
    if (!kind) throw ParseError("undeclared property in " + c.to_string());
    const bool int_value = std::holds_alternative<std::int64_t>(c.value);
    if (int_value != (*kind == ValueKind::Integer)) {
      throw ParseError("literal kind mismatch in " + c.to_string());
    }
  }
}

// ------------------------------------------------ Constrained adjacency --

std::vector<bool> node_selector(const Hin& hin, char type,
                                const std::vector<Constraint>& constraints) {
  const NodeTable& table = hin.nodes(type);
  std::vector<bool> keep;
  for (const auto& c : constraints) {
    if (c.node_type != type) continue;
    const auto col = table.column_index(c.property);
    if (!col) {
      throw SchemaError("property '" + c.property + "' not declared on " +
                        type);
    }
    if (keep.empty()) keep.assign(table.size(), true);
    for (std::size_t r = 0; r < table.size(); ++r) {
      if (keep[r] && !c.matches(table.value(r, *col))) keep[r] = false;
    }
  }
  return keep;
}

SparseMatrix constrained_adjacency(const Hin& hin, std::string_view edge_type,
                                   const std::vector<Constraint>& constraints) {
  const auto& e = hin.schema().edge_type(edge_type);
  std::vector<Constraint> src;
  std::vector<Constraint> dst;
  for (const auto& c : constraints) {
    if (c.node_type != e.source && c.node_type != e.target) {
      throw SchemaError("constraint " + c.to_string() +
                        " is not incident to edge type " + e.symbol);
    }
    if (c.node_type == e.source) src.push_back(c);
    if (c.node_type == e.target) dst.push_back(c);
  }
  return constrained_adjacency(hin, edge_type, src, dst);
}

SparseMatrix constrained_adjacency(
    const Hin& hin, std::string_view edge_type,
    const std::vector<Constraint>& source_constraints,
    const std::vector<Constraint>& target_constraints) {
  const auto& e = hin.schema().edge_type(edge_type);
  for (const auto& c : source_constraints) {
    if (c.node_type != e.source) {
      throw SchemaError("constraint " + c.to_string() +
                        " does not target the source of " + e.symbol);
    }
  }
  for (const auto& c : target_constraints) {
    if (c.node_type != e.target) {
      throw SchemaError("constraint " + c.to_string() +
                        " does not target the target of " + e.symbol);
    }
  }
  const SparseMatrix& a = hin.adjacency(e.symbol);
  if (source_constraints.empty() && target_constraints.empty()) return a;
  return a.filter(node_selector(hin, e.source, source_constraints),
                  node_selector(hin, e.target, target_constraints));
}

}  // namespace atrapos
