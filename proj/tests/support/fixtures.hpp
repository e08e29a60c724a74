#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "atrapos/hin.hpp"

namespace atrapos::testing {

std::filesystem::path data_dir();

// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

// Four authors, five papers, two venues, three topics (tests/data/toy).
Hin toy_hin();
std::filesystem::path toy_schema_path();

// News-style network: articles (A) at the hub, linked to organizations (O),
// persons (P), locations (L), themes (T) and sources (S); persons link to
// companies (C), which link to intermediaries (I). Every relation comes with
// its reverse. `articles` scales the other types proportionally.
struct NewsShape {
  std::size_t articles = 200;
  std::uint64_t seed = 1;
};
Hin news_hin(const NewsShape& shape);

// Random schema with 3-5 node types and <= max_nodes nodes. Edge lists are
// kept so the ground truth does not depend on ingestion.
struct GeneratedHin {
  Hin hin;
  std::map<char, std::size_t> node_counts;
  std::map<std::string, std::size_t> edge_counts;
  std::map<std::string, std::vector<std::pair<std::uint32_t, std::uint32_t>>>
      edges;
};
GeneratedHin random_hin(std::uint64_t seed, std::size_t max_nodes = 200);

// Writes schema.json plus one CSV per node and edge type; returns the schema
// path.
std::filesystem::path write_hin_files(const Hin& hin,
                                      const std::filesystem::path& dir);

// Random walk over the schema with node count in [min_len, max_len] and up
// to max_constraints constraints on types along the walk. Round-tripped
// through the text grammar, so constraints are canonical.
MetapathQuery random_query(const Hin& hin, std::mt19937_64& rng,
                           std::size_t min_len, std::size_t max_len,
                           std::size_t max_constraints);

}  // namespace atrapos::testing
