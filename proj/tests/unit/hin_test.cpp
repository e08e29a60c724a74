#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "atrapos/error.hpp"
#include "atrapos/hin.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace atrapos {
namespace {

namespace fs = std::filesystem;
using testing::dense_multiply;
using testing::diagonal;
using testing::same;
using testing::to_dense;

fs::path toy_copy(const std::string& name) {
  const fs::path dir = testing::scratch_dir(name);
  for (const auto& f : fs::directory_iterator(testing::data_dir() / "toy")) {
    fs::copy_file(f.path(), dir / f.path().filename());
  }
  return dir;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

TEST(LoadHin, ToyNetwork) {
  const Hin hin = testing::toy_hin();
  EXPECT_EQ(hin.node_count(), 14u);
  EXPECT_EQ(hin.nodes('A').size(), 4u);
  EXPECT_EQ(hin.nodes('P').size(), 5u);
  EXPECT_EQ(hin.nodes('V').size(), 2u);
  EXPECT_EQ(hin.nodes('T').size(), 3u);
  const SparseMatrix& ap = hin.adjacency("AP");
  EXPECT_EQ(ap.rows(), 4u);
  EXPECT_EQ(ap.cols(), 5u);
  for (auto v : ap.values()) EXPECT_EQ(v, 1u);
  // Row order is file order.
  EXPECT_EQ(hin.nodes('A').id(2), "a3");
  EXPECT_EQ(std::get<std::string>(hin.nodes('A').value(3, 1)), "Hyde, E.");
  EXPECT_EQ(ap.at(2, 2), 1u);  // Y. Vuvuli wrote p3
  EXPECT_EQ(hin.adjacency("PV").at(2, 0), 1u);  // p3 appeared at VLDB
}

TEST(LoadHin, ReverseEdgeTypesAreTransposes) {
  const Hin hin = testing::toy_hin();
  for (const auto& [a, b] : {std::pair{"AP", "PA"}, {"PV", "VP"}, {"PT", "TP"}}) {
    EXPECT_EQ(hin.adjacency(a).transpose(), hin.adjacency(b));
  }
}

TEST(LoadHin, EmptyEdgeFileGivesZeroMatrix) {
  const fs::path dir = toy_copy("empty-edges");
  write(dir / "pt.csv", "paper,topic\n");
  const Hin hin = load_hin(dir / "schema.json");
  EXPECT_EQ(hin.adjacency("PT").nonzeros(), 0u);
  EXPECT_EQ(hin.adjacency("PT").rows(), 5u);
  EXPECT_EQ(hin.adjacency("PT").cols(), 3u);
}

TEST(LoadHin, IngestErrors) {
  {
    const fs::path dir = toy_copy("unknown-id");
    write(dir / "pv.csv", "paper,venue\np1,v9\n");
    EXPECT_THROW(load_hin(dir / "schema.json"), IngestError);
  }
  {
    const fs::path dir = toy_copy("bad-kind");
    write(dir / "papers.csv", "id,title,year\np1,x,soon\n");
    EXPECT_THROW(load_hin(dir / "schema.json"), IngestError);
  }
  {
    const fs::path dir = toy_copy("dup-id");
    write(dir / "venues.csv", "id,name\nv1,VLDB\nv1,KDD\n");
    EXPECT_THROW(load_hin(dir / "schema.json"), IngestError);
  }
  {
    const fs::path dir = toy_copy("bad-header");
    write(dir / "venues.csv", "key,name\nv1,VLDB\n");
    EXPECT_THROW(load_hin(dir / "schema.json"), Error);
  }
}

TEST(LoadHin, RandomNetworksMatchGeneratorCounts) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto g = testing::random_hin(seed);
    const fs::path dir = testing::scratch_dir("random-" + std::to_string(seed));
    const Hin hin = load_hin(testing::write_hin_files(g.hin, dir));
    std::size_t total = 0;
    for (const auto& [type, n] : g.node_counts) {
      EXPECT_EQ(hin.nodes(type).size(), n);
      total += n;
    }
    EXPECT_LE(total, 200u);
    for (const auto& [edge, n] : g.edge_counts) {
      EXPECT_EQ(hin.adjacency(edge).nonzeros(), n) << edge;
      EXPECT_EQ(hin.adjacency(edge), g.hin.adjacency(edge));
    }
  }
}

TEST(Schema, Validation) {
  NodeTypeDecl a{'A', "a"}, b{'B', "b"};
  EdgeTypeDecl ab{"AB", 'A', 'B'}, ba{"BA", 'B', 'A'}, ax{"AX", 'A', 'X'};
  EXPECT_NO_THROW(Schema({a, b}, {ab, ba}));
  EXPECT_THROW(Schema({a}, {ab, ba}), SchemaError);
  EXPECT_THROW(Schema({a, b}, {ab}), SchemaError);
  EXPECT_THROW(Schema({a, a}, {ab, ba}), SchemaError);
  EXPECT_THROW(Schema({a, b}, {ab, ax}), SchemaError);
  EXPECT_THROW(Schema({a, b}, {ab, ab}), SchemaError);
  NodeTypeDecl pipe{'|', "pipe"};
  EXPECT_THROW(Schema({a, pipe}, {ab, ba}), SchemaError);
}

TEST(Schema, JsonRoundTrip) {
  const Hin hin = testing::toy_hin();
  const Schema again = Schema::from_json(hin.schema().to_json());
  EXPECT_EQ(again.to_json(), hin.schema().to_json());
  EXPECT_THROW(Schema::from_json("{not json"), Error);
}

TEST(Hin, BinaryFixtureRoundTrip) {
  const Hin hin = testing::toy_hin();
  const fs::path dir = testing::scratch_dir("fixture");
  hin.save(dir / "toy.hin");
  const Hin back = Hin::open(dir / "toy.hin");
  EXPECT_EQ(back.schema().to_json(), hin.schema().to_json());
  for (const auto& e : hin.schema().edge_types()) {
    EXPECT_EQ(back.adjacency(e.symbol), hin.adjacency(e.symbol));
  }
  EXPECT_EQ(back.nodes('P').id(4), "p5");
  EXPECT_EQ(std::get<std::int64_t>(back.nodes('P').value(4, 2)), 2023);
  // A schema path opens as CSV ingestion.
  EXPECT_EQ(Hin::open(testing::toy_schema_path()).node_count(), 14u);
}

TEST(ParseMetapath, SimplifiedAndConstrained) {
  const Hin hin = testing::toy_hin();
  const auto q = parse_metapath("APT | P.year>2020", hin.schema());
  EXPECT_EQ(q.nodes, (std::vector<char>{'A', 'P', 'T'}));
  EXPECT_EQ(q.edges, (std::vector<std::string>{"AP", "PT"}));
  ASSERT_EQ(q.constraints.size(), 1u);
  EXPECT_EQ(q.constraints[0].node_type, 'P');
  EXPECT_EQ(q.constraints[0].property, "year");
  EXPECT_EQ(q.constraints[0].op, CompareOp::Greater);
  EXPECT_EQ(q.constraints[0].value, PropertyValue(std::int64_t{2020}));

  const auto ap = parse_metapath("AP", hin.schema());
  EXPECT_EQ(ap.length(), 2u);
  EXPECT_TRUE(ap.constraints.empty());

  const auto named =
      parse_metapath("APA | A.name = \"Hyde, E.\", P.year<=2021", hin.schema());
  EXPECT_EQ(named.constraints.size(), 2u);
  EXPECT_EQ(parse_metapath(named.to_string(hin.schema()), hin.schema()), named);
}

TEST(ParseMetapath, ExplicitForm) {
  const Hin hin = testing::toy_hin();
  const auto q = parse_metapath("A-[writes]->P-[PV]->V", hin.schema());
  EXPECT_EQ(q.path(), "APV");
  EXPECT_EQ(q.edges, (std::vector<std::string>{"AP", "PV"}));
}

TEST(ParseMetapath, Errors) {
  const Schema s = testing::toy_hin().schema();
  EXPECT_THROW(parse_metapath("AXT", s), Error);
  EXPECT_THROW(parse_metapath("A", s), Error);
  EXPECT_THROW(parse_metapath("AV", s), Error);
  EXPECT_THROW(parse_metapath("APT | P.year>soon", s), ParseError);
  EXPECT_THROW(parse_metapath("APT | P.colour=1", s), Error);
  EXPECT_THROW(parse_metapath("APT | V.name=\"KDD\"", s), Error);
  EXPECT_THROW(parse_metapath("APT | P.year", s), ParseError);
  EXPECT_THROW(parse_metapath("A-[writes]->V", s), Error);
}

TEST(ParseMetapath, AmbiguousPairsNeedExplicitEdges) {
  NodeTypeDecl a{'A', "a"}, b{'B', "b"};
  const Schema s({a, b}, {{"AB", 'A', 'B', "likes"},
                          {"BA", 'B', 'A', "liked_by"},
                          {"AB2", 'A', 'B', "hates"}});
  EXPECT_THROW(parse_metapath("ABA", s), ParseError);
  const auto q = parse_metapath("A-[hates]->B-[BA]->A", s);
  EXPECT_EQ(q.edges, (std::vector<std::string>{"AB2", "BA"}));
  EXPECT_EQ(parse_metapath(q.to_string(s), s), q);
  // A pair with a single edge type stays simplified.
  const auto ba = parse_metapath("BA", s);
  EXPECT_EQ(ba.to_string(s), "BA");
}

TEST(ConstrainedAdjacency, YearFilterOnPapers) {
  const Hin hin = testing::toy_hin();
  const auto c = parse_metapath("PT | P.year>2020", hin.schema()).constraints;
  const SparseMatrix m = constrained_adjacency(hin, "PT", c);
  std::vector<bool> recent{false, true, true, false, true};
  EXPECT_TRUE(same(m, dense_multiply(diagonal(recent),
                                     to_dense(hin.adjacency("PT")))));
  EXPECT_EQ(constrained_adjacency(hin, "PT", {}), hin.adjacency("PT"));
  const auto all = parse_metapath("PT | P.year>1900", hin.schema()).constraints;
  EXPECT_EQ(constrained_adjacency(hin, "PT", all), hin.adjacency("PT"));
  const auto venue = parse_metapath("APV | V.name=\"KDD\"", hin.schema()).constraints;
  EXPECT_THROW(constrained_adjacency(hin, "PT", venue), Error);
}

std::vector<bool> qualifying(const NodeTable& t, const Constraint& c) {
  const std::size_t col = c.property == "id" ? 0 : 1;  // id or year
  std::vector<bool> keep(t.size());
  for (std::size_t r = 0; r < t.size(); ++r) {
    keep[r] = testing::satisfies(c, t.value(r, col));
  }
  return keep;
}

TEST(ConstrainedAdjacency, RandomNetworksAgainstDiagonalProducts) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::int64_t> year(1988, 2026);
  std::uniform_int_distribution<int> op(0, 5);
  static constexpr CompareOp kOps[] = {
      CompareOp::Less,  CompareOp::LessEqual, CompareOp::Greater,
      CompareOp::GreaterEqual, CompareOp::Equal, CompareOp::NotEqual};
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    const auto g = testing::random_hin(seed, 100);
    for (const auto& e : g.hin.schema().edge_types()) {
      const NodeTable& src = g.hin.nodes(e.source);
      const NodeTable& dst = g.hin.nodes(e.target);
      Constraint cs{e.source, "year", kOps[op(rng)], year(rng)};
      std::uniform_int_distribution<std::size_t> row(0, dst.size() - 1);
      Constraint ct{e.target, "id", CompareOp::NotEqual, dst.value(row(rng), 0)};
      const SparseMatrix& a = g.hin.adjacency(e.symbol);
      const auto want = dense_multiply(
          dense_multiply(diagonal(qualifying(src, cs)), to_dense(a)),
          diagonal(qualifying(dst, ct)));
      SparseMatrix m;
      if (e.source == e.target) {
        m = constrained_adjacency(g.hin, e.symbol, {cs}, {ct});
      } else {
        m = constrained_adjacency(g.hin, e.symbol, {cs, ct});
        EXPECT_EQ(m, constrained_adjacency(g.hin, e.symbol, {cs}, {ct}));
      }
      EXPECT_TRUE(same(m, want)) << e.symbol;
      EXPECT_LE(m.nonzeros(), a.nonzeros());
      EXPECT_EQ(m.filter(node_selector(g.hin, e.source, {cs}),
                         node_selector(g.hin, e.target, {ct})),
                m);
    }
  }
}

}  // namespace
}  // namespace atrapos
