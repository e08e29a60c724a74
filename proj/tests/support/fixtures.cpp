#include "fixtures.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "atrapos/error.hpp"

namespace atrapos::testing {

namespace fs = std::filesystem;

fs::path data_dir() { return fs::path(ATRAPOS_TEST_DATA_DIR); }

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("atrapos-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path toy_schema_path() { return data_dir() / "toy" / "schema.json"; }

Hin toy_hin() { return load_hin(toy_schema_path()); }

namespace {

using Pairs = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

NodeTypeDecl node_decl(char symbol, std::string name,
                       std::vector<PropertyDecl> props,
                       ValueKind id_kind = ValueKind::String) {
  NodeTypeDecl d;
  d.symbol = symbol;
  d.name = std::move(name);
  d.id_kind = id_kind;
  d.properties = std::move(props);
  return d;
}

EdgeTypeDecl edge_decl(std::string symbol, char src, char dst,
                       std::string label) {
  EdgeTypeDecl e;
  e.symbol = std::move(symbol);
  e.source = src;
  e.target = dst;
  e.label = std::move(label);
  return e;
}

Pairs reversed(const Pairs& p) {
  Pairs out;
  out.reserve(p.size());
  for (auto [a, b] : p) out.emplace_back(b, a);
  return out;
}

std::size_t distinct(Pairs& p) {
  std::sort(p.begin(), p.end());
  p.erase(std::unique(p.begin(), p.end()), p.end());
  return p.size();
}

const char* const kWords[] = {"alpha", "bravo", "delta", "echo", "kilo",
                              "lima",  "oscar", "sierra", "tango", "zulu"};

std::string word(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> w(0, 9);
  return std::string(kWords[w(rng)]) + " " + kWords[w(rng)];
}

}  // namespace

Hin news_hin(const NewsShape& shape) {
  std::mt19937_64 rng(shape.seed);
  const std::size_t a = std::max<std::size_t>(shape.articles, 20);
  std::map<char, std::size_t> n{
      {'A', a},
      {'O', std::max<std::size_t>(a / 4, 5)},
      {'P', std::max<std::size_t>(a / 3, 5)},
      {'L', std::max<std::size_t>(a / 10, 4)},
      {'T', std::max<std::size_t>(a / 20, 4)},
      {'S', std::max<std::size_t>(a / 30, 3)},
      {'C', std::max<std::size_t>(a / 20, 4)},
      {'I', std::max<std::size_t>(a / 100, 3)},
  };

  const PropertyDecl name{"name", ValueKind::String};
  std::vector<NodeTypeDecl> types{
      node_decl('A', "article",
                {{"day", ValueKind::Integer}, {"tone", ValueKind::Integer}}),
      node_decl('O', "organization", {name}),
      node_decl('P', "person", {name}),
      node_decl('L', "location", {name}),
      node_decl('T', "theme", {name}),
      node_decl('S', "source", {name}),
      node_decl('C', "company",
                {{"country", ValueKind::String}, {"year", ValueKind::Integer}}),
      node_decl('I', "intermediary", {name}),
  };
  std::vector<EdgeTypeDecl> edges;
  for (const char* pair : {"IC", "CP", "PA", "OA", "LA", "TA", "SA"}) {
    const char s = pair[0];
    const char t = pair[1];
    edges.push_back(edge_decl(std::string{s, t}, s, t,
                              std::string{static_cast<char>(s + 32), '_',
                                          static_cast<char>(t + 32)}));
    edges.push_back(edge_decl(std::string{t, s}, t, s,
                              std::string{static_cast<char>(t + 32), '_',
                                          static_cast<char>(s + 32)}));
  }
  Schema schema(types, edges);

  std::map<char, NodeTable> tables;
  std::uniform_int_distribution<std::int64_t> day(1, 30), tone(-10, 10),
      year(1990, 2016);
  const char* const countries[] = {"PA", "VG", "BS", "SC", "CY"};
  std::uniform_int_distribution<int> country(0, 4);
  for (const auto& d : types) {
    NodeTable t(d);
    for (std::size_t r = 0; r < n[d.symbol]; ++r) {
      std::string id{static_cast<char>(d.symbol + 32)};
      id += std::to_string(r);
      std::vector<PropertyValue> props;
      if (d.symbol == 'A') {
        props = {day(rng), tone(rng)};
      } else if (d.symbol == 'C') {
        props = {std::string(countries[country(rng)]), year(rng)};
      } else {
        props = {word(rng)};
      }
      t.add_row(std::move(id), std::move(props));
    }
    tables.emplace(d.symbol, std::move(t));
  }

  // Popularity skew: low row indices are picked more often.
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto pick = [&](char type) {
    const double x = u(rng);
    return static_cast<std::uint32_t>(
        std::min<double>(static_cast<double>(n[type]) * x * x,
                         static_cast<double>(n[type] - 1)));
  };
  auto link = [&](char from, char to, int lo, int hi) {
    Pairs p;
    std::uniform_int_distribution<int> k(lo, hi);
    for (std::uint32_t r = 0; r < n[from]; ++r) {
      for (int i = k(rng); i > 0; --i) p.emplace_back(r, pick(to));
    }
    distinct(p);
    return p;
  };
  std::map<std::string, Pairs> forward{
      {"AO", link('A', 'O', 0, 3)}, {"AP", link('A', 'P', 1, 4)},
      {"AL", link('A', 'L', 1, 3)}, {"AT", link('A', 'T', 2, 5)},
      {"AS", link('A', 'S', 1, 1)}, {"PC", link('P', 'C', 0, 1)},
      {"CI", link('C', 'I', 1, 1)},
  };
  Hin::AdjacencyMap adjacency;
  for (const auto& e : schema.edge_types()) {
    const std::string fwd{e.target, e.source};
    const bool reverse = forward.count(e.symbol) == 0;
    Pairs p = reverse ? reversed(forward.at(fwd)) : forward.at(e.symbol);
    adjacency.emplace(e.symbol,
                      SparseMatrix::from_pattern(n[e.source], n[e.target],
                                                 std::move(p)));
  }
  return Hin(std::move(schema), std::move(tables), std::move(adjacency));
}

GeneratedHin random_hin(std::uint64_t seed, std::size_t max_nodes) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> type_count(3, 5);
  const std::size_t k = type_count(rng);
  const std::string symbols = "ABCDE";
  std::uniform_int_distribution<std::size_t> size(1, max_nodes / k);

  GeneratedHin g;
  std::vector<NodeTypeDecl> types;
  for (std::size_t i = 0; i < k; ++i) {
    types.push_back(node_decl(
        symbols[i], std::string("type_") + symbols[i],
        {{"year", ValueKind::Integer}, {"name", ValueKind::String}},
        i == 0 ? ValueKind::Integer : ValueKind::String));
    g.node_counts[symbols[i]] = size(rng);
  }

  std::vector<EdgeTypeDecl> edges;
  std::set<std::pair<char, char>> present;
  auto add = [&](char s, char t, std::string suffix = {}) {
    std::string sym{s, t};
    sym += suffix;
    edges.push_back(edge_decl(sym, s, t, "r_" + sym));
    present.insert({s, t});
  };
  for (std::size_t i = 0; i + 1 < k; ++i) {
    add(symbols[i], symbols[i + 1]);
    add(symbols[i + 1], symbols[i]);
  }
  std::bernoulli_distribution extra(0.2), parallel(0.4);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (!present.count({symbols[i], symbols[j]}) && extra(rng)) {
        add(symbols[i], symbols[j]);
      }
    }
  }
  if (parallel(rng)) {
    std::uniform_int_distribution<std::size_t> any(0, edges.size() - 1);
    const EdgeTypeDecl base = edges[any(rng)];
    add(base.source, base.target, "x");
  }
  Schema schema(types, edges);

  std::map<char, NodeTable> tables;
  std::uniform_int_distribution<std::int64_t> year(1990, 2024);
  for (const auto& d : types) {
    NodeTable t(d);
    for (std::size_t r = 0; r < g.node_counts[d.symbol]; ++r) {
      std::string id = d.id_kind == ValueKind::Integer
                           ? std::to_string(1000 + 7 * r)
                           : std::string{d.symbol} + "-" + std::to_string(r);
      t.add_row(std::move(id), {year(rng), word(rng)});
    }
    tables.emplace(d.symbol, std::move(t));
  }

  Hin::AdjacencyMap adjacency;
  std::uniform_real_distribution<double> density(0.02, 0.3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& e : schema.edge_types()) {
    const std::string reverse{e.target, e.source};
    Pairs p;
    const long gap = static_cast<long>(symbols.find(e.source)) -
                     static_cast<long>(symbols.find(e.target));
    const bool mirror = e.symbol.size() == 2 && (gap == 1 || gap == -1) &&
                        g.edges.count(reverse);
    if (mirror) {
      p = reversed(g.edges.at(reverse));
    } else {
      const double d = density(rng);
      for (std::uint32_t r = 0; r < g.node_counts[e.source]; ++r) {
        for (std::uint32_t c = 0; c < g.node_counts[e.target]; ++c) {
          if (u(rng) < d) p.emplace_back(r, c);
        }
      }
    }
    g.edge_counts[e.symbol] = distinct(p);
    adjacency.emplace(e.symbol,
                      SparseMatrix::from_pattern(g.node_counts[e.source],
                                                 g.node_counts[e.target], p));
    g.edges[e.symbol] = std::move(p);
  }
  g.hin = Hin(std::move(schema), std::move(tables), std::move(adjacency));
  return g;
}

namespace {

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

std::string cell_text(const PropertyValue& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  return csv_cell(std::get<std::string>(v));
}

}  // namespace

fs::path write_hin_files(const Hin& hin, const fs::path& dir) {
  fs::create_directories(dir);
  auto node_types = hin.schema().node_types();
  auto edge_types = hin.schema().edge_types();
  for (auto& d : node_types) {
    d.file = std::string("nodes_") + d.symbol + ".csv";
    const NodeTable& t = hin.nodes(d.symbol);
    std::ofstream out(dir / d.file);
    const auto& names = t.column_names();
    for (std::size_t c = 0; c < names.size(); ++c) {
      out << (c ? "," : "") << names[c];
    }
    out << '\n';
    for (std::size_t r = 0; r < t.size(); ++r) {
      for (std::size_t c = 0; c < names.size(); ++c) {
        out << (c ? "," : "") << cell_text(t.value(r, c));
      }
      out << '\n';
    }
  }
  for (auto& e : edge_types) {
    e.file = "edges_" + e.symbol + ".csv";
    const SparseMatrix& m = hin.adjacency(e.symbol);
    const NodeTable& src = hin.nodes(e.source);
    const NodeTable& dst = hin.nodes(e.target);
    std::ofstream out(dir / e.file);
    out << "source,target\n";
    const auto off = m.col_offsets();
    const auto rows = m.row_indices();
    for (std::size_t c = 0; c < m.cols(); ++c) {
      for (std::size_t k = off[c]; k < off[c + 1]; ++k) {
        out << csv_cell(src.id(rows[k])) << ',' << csv_cell(dst.id(c)) << '\n';
      }
    }
  }
  const Schema with_files(node_types, edge_types);
  const fs::path schema_path = dir / "schema.json";
  std::ofstream(schema_path) << with_files.to_json();
  return schema_path;
}

MetapathQuery random_query(const Hin& hin, std::mt19937_64& rng,
                           std::size_t min_len, std::size_t max_len,
                           std::size_t max_constraints) {
  const Schema& schema = hin.schema();
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  while (true) {
    const std::size_t target = len(rng);
    MetapathQuery q;
    std::uniform_int_distribution<std::size_t> start(
        0, schema.node_types().size() - 1);
    q.nodes.push_back(schema.node_types()[start(rng)].symbol);
    while (q.nodes.size() < target) {
      std::vector<const EdgeTypeDecl*> out;
      for (const auto& e : schema.edge_types()) {
        if (e.source == q.nodes.back()) out.push_back(&e);
      }
      if (out.empty()) break;
      std::uniform_int_distribution<std::size_t> pick(0, out.size() - 1);
      const EdgeTypeDecl* e = out[pick(rng)];
      q.edges.push_back(e->symbol);
      q.nodes.push_back(e->target);
    }
    if (q.nodes.size() < target) continue;

    std::uniform_int_distribution<std::size_t> count(0, max_constraints);
    std::uniform_int_distribution<std::size_t> position(0, q.nodes.size() - 1);
    std::uniform_int_distribution<int> op(0, 5);
    std::bernoulli_distribution existing(0.7);
    static constexpr CompareOp kOps[] = {
        CompareOp::Less,  CompareOp::LessEqual, CompareOp::Greater,
        CompareOp::GreaterEqual, CompareOp::Equal, CompareOp::NotEqual};
    for (std::size_t i = count(rng); i > 0; --i) {
      const char type = q.nodes[position(rng)];
      const NodeTable& t = hin.nodes(type);
      if (t.size() == 0) continue;
      std::uniform_int_distribution<std::size_t> column(
          0, t.column_names().size() - 1);
      std::uniform_int_distribution<std::size_t> row(0, t.size() - 1);
      const std::size_t col = column(rng);
      Constraint c;
      c.node_type = type;
      c.property = col == 0 ? "id" : t.column_names()[col];
      c.op = kOps[op(rng)];
      c.value = t.value(row(rng), col);
      if (!existing(rng)) {
        if (auto* v = std::get_if<std::int64_t>(&c.value)) {
          *v += std::uniform_int_distribution<std::int64_t>(-3, 3)(rng);
        } else {
          std::get<std::string>(c.value) += "~";
        }
      }
      q.constraints.push_back(std::move(c));
    }
    return parse_metapath(q.to_string(schema), schema);
  }
}

}  // namespace atrapos::testing
