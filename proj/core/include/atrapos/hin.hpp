#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "atrapos/sparse_matrix.hpp"

namespace atrapos {

enum class ValueKind { Integer, String };

using PropertyValue = std::variant<std::int64_t, std::string>;

struct PropertyDecl {
  std::string name;
  ValueKind kind = ValueKind::String;
};

struct NodeTypeDecl {
  char symbol = '?';
  std::string name;
  std::string id_column = "id";
  ValueKind id_kind = ValueKind::String;
  std::vector<PropertyDecl> properties;
  // CSV location, relative to the schema file. Optional.
  std::string file;
};

struct EdgeTypeDecl {
  std::string symbol;
  char source = '?';
  char target = '?';
  std::string label;
  std::string file;
};

// Node and edge types of a HIN. Needs at least two of each; every edge
// endpoint must be a declared node type.
class Schema {
 public:
  Schema() = default;
  Schema(std::vector<NodeTypeDecl> node_types,
         std::vector<EdgeTypeDecl> edge_types);

  static Schema from_json(std::string_view text);
  static Schema load(const std::filesystem::path& path);
  std::string to_json() const;

  const std::vector<NodeTypeDecl>& node_types() const { return node_types_; }
  const std::vector<EdgeTypeDecl>& edge_types() const { return edge_types_; }

  bool has_node_type(char symbol) const;
  std::size_t node_type_index(char symbol) const;
  const NodeTypeDecl& node_type(char symbol) const;

  // Lookup by symbol first, then by label.
  const EdgeTypeDecl* find_edge_type(std::string_view symbol_or_label) const;
  const EdgeTypeDecl& edge_type(std::string_view symbol) const;
  std::vector<const EdgeTypeDecl*> edges_between(char source,
                                                 char target) const;

  // Kind of `property` on `type`; the id column answers both to its own name
  // and to "id".
  std::optional<ValueKind> property_kind(char type,
                                         std::string_view property) const;

 private:
  std::vector<NodeTypeDecl> node_types_;
  std::vector<EdgeTypeDecl> edge_types_;
};

// Rows of one node type, in ingestion order. Column 0 holds the node id.
class NodeTable {
 public:
  using Column = std::variant<std::vector<std::int64_t>,
                              std::vector<std::string>>;

  NodeTable() = default;
  explicit NodeTable(const NodeTypeDecl& decl);

  // Appends a node; throws IngestError on a duplicate id.
  void add_row(std::string id, std::vector<PropertyValue> properties);

  std::size_t size() const { return ids_.size(); }
  const std::string& id(std::size_t row) const { return ids_[row]; }
  std::optional<std::uint32_t> row_of(std::string_view id) const;

  // Property column index (0 = id) or nullopt.
  std::optional<std::size_t> column_index(std::string_view property) const;
  PropertyValue value(std::size_t row, std::size_t column) const;
  const std::vector<std::string>& column_names() const { return names_; }
  const std::vector<Column>& columns() const { return columns_; }

 private:
  std::vector<std::string> names_;
  std::vector<Column> columns_;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// Immutable heterogeneous information network: typed node tables plus one
// 0/1 adjacency matrix per edge type.
class Hin {
 public:
  using AdjacencyMap = std::map<std::string, SparseMatrix, std::less<>>;

  Hin() = default;
  // Validates that every edge type has a matrix of shape
  // |source| x |target|.
  Hin(Schema schema, std::map<char, NodeTable> tables,
      AdjacencyMap adjacency);

  const Schema& schema() const { return schema_; }
  const NodeTable& nodes(char type) const;
  const SparseMatrix& adjacency(std::string_view edge_symbol) const;
  std::size_t node_count() const;
  std::size_t edge_count() const;

  // Self-contained binary fixture (schema JSON, node tables, matrices).
  void write(std::ostream& out) const;
  static Hin read(std::istream& in);
  void save(const std::filesystem::path& path) const;
  // Accepts either a binary fixture or a JSON schema config with CSV files.
  static Hin open(const std::filesystem::path& path);

 private:
  Schema schema_;
  std::map<char, NodeTable> tables_;
  AdjacencyMap adjacency_;
};

// Ingests a schema config whose node and edge types name their CSV files.
Hin load_hin(const std::filesystem::path& schema_config);
Hin load_hin(const Schema& schema,
             const std::map<char, std::filesystem::path>& node_files,
             const std::map<std::string, std::filesystem::path>& edge_files);

enum class CompareOp { Less, LessEqual, Greater, GreaterEqual, Equal, NotEqual };

std::string_view to_string(CompareOp op);

struct Constraint {
  char node_type = '?';
  std::string property;
  CompareOp op = CompareOp::Equal;
  PropertyValue value;

  bool matches(const PropertyValue& v) const;
  // Canonical `Type.prop OP literal` with no whitespace; string literals are
  // double-quoted with backslash escapes.
  std::string to_string() const;

  friend auto operator<=>(const Constraint&, const Constraint&) = default;
  friend bool operator==(const Constraint&, const Constraint&) = default;
};

struct MetapathQuery {
  std::vector<char> nodes;
  std::vector<std::string> edges;  // edge type symbols, nodes.size() - 1
  std::vector<Constraint> constraints;  // sorted, unique

  std::size_t length() const { return nodes.size(); }
  // Node symbols only, e.g. "APT".
  std::string path() const;
  // Canonical text in the workload grammar. Edge annotations appear only
  // where the simplified form would be ambiguous.
  std::string to_string(const Schema& schema) const;

  friend bool operator==(const MetapathQuery&, const MetapathQuery&) = default;
};

// Parses `APT | P.year>2020` or `A-[writes]->P-[about]->T | ...`.
MetapathQuery parse_metapath(std::string_view text, const Schema& schema);

// Checks edge/node agreement and constraint declarations against the schema.
void validate_query(const MetapathQuery& query, const Schema& schema);

// Nodes of `type` satisfying every constraint in the list that targets that
// type. Returns an empty vector when no constraint targets it.
std::vector<bool> node_selector(const Hin& hin, char type,
                                const std::vector<Constraint>& constraints);

// A_r restricted to qualifying source rows and target columns.
SparseMatrix constrained_adjacency(const Hin& hin, std::string_view edge_type,
                                   const std::vector<Constraint>& constraints);
// Explicit-side form: source_constraints filter rows, target_constraints
// filter columns. Each list may only reference the corresponding type.
SparseMatrix constrained_adjacency(
    const Hin& hin, std::string_view edge_type,
    const std::vector<Constraint>& source_constraints,
    const std::vector<Constraint>& target_constraints);

}  // namespace atrapos
