#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "atrapos/calibration.hpp"
#include "atrapos/engine.hpp"
#include "atrapos/error.hpp"
#include "atrapos/workload.hpp"

namespace {

using namespace atrapos;

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Writes to `path`, or stdout when it is empty or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path);
      if (!file_) throw Error("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

struct RunOptions {
  std::string hin;
  std::string workload;
  std::string variant = "atrapos";
  std::string policy;
  double cache_mb = 64;
  std::string coeffs;
  std::string cost_unit = "micros";
  std::string out;
  std::string trace;
};

EngineConfig make_config(const std::string& variant, const std::string& policy,
                         double cache_mb, const std::string& coeffs,
                         const std::string& unit) {
  EngineConfig c;
  const auto v = parse_variant(variant);
  if (!v) throw Error("unknown variant " + variant);
  c.variant = *v;
  if (!policy.empty()) {
    const auto p = parse_policy(policy);
    if (!p) throw Error("unknown policy " + policy);
    c.policy = *p;
  }
  if (cache_mb < 0) throw Error("cache size must be non-negative");
  c.cache_bytes = static_cast<std::size_t>(cache_mb * 1024.0 * 1024.0);
  if (!coeffs.empty()) c.coeffs = load_coefficients(coeffs);
  if (unit == "ops" || unit == "operations") {
    c.cost_unit = CostUnit::Operations;
  } else if (unit != "micros" && unit != "microseconds") {
    throw Error("unknown cost unit " + unit);
  }
  return c;
}

int cmd_ingest(const std::string& schema, const std::string& out) {
  const Hin hin = load_hin(schema);
  hin.save(out);
  std::cerr << fmt::format("{} nodes, {} edges -> {}\n", hin.node_count(),
                           hin.edge_count(), out);
  return 0;
}

struct GenOptions {
  std::string hin;
  std::string out;
  WorkloadSpec spec;
  std::string dist = "uniform";
  std::string constraints = "entity";
  std::string metapaths;
  bool sessions = false;
};

int cmd_gen_workload(GenOptions o) {
  const Hin hin = Hin::open(o.hin);
  if (o.dist == "zipf") {
    o.spec.distribution = Distribution::Zipf;
  } else if (o.dist != "uniform") {
    throw Error("unknown distribution " + o.dist);
  }
  if (o.constraints == "range") {
    o.spec.constraint_mode = ConstraintMode::Range;
  } else if (o.constraints == "mixed") {
    o.spec.constraint_mode = ConstraintMode::Mixed;
  } else if (o.constraints != "entity") {
    throw Error("unknown constraint mode " + o.constraints);
  }
  std::stringstream list(o.metapaths);
  for (std::string m; std::getline(list, m, ',');) {
    if (!m.empty()) o.spec.metapaths.push_back(m);
  }
  o.spec.seed = seed_from_env(o.spec.seed);
  const auto generated = generate_workload(hin, o.spec);
  Output out(o.out);
  out.stream() << fmt::format(
      "# count={} p={} len={}..{} dist={} alpha={} seed={}\n", o.spec.count,
      o.spec.restart_p, o.spec.len_min, o.spec.len_max,
      to_string(o.spec.distribution), o.spec.alpha, o.spec.seed);
  for (const auto& g : generated) {
    if (o.sessions) out.stream() << "# session " << g.session << '\n';
    out.stream() << g.query.to_string(hin.schema()) << '\n';
  }
  return 0;
}

int cmd_fit(const std::string& out, CalibrationGrid grid) {
  grid.seed = seed_from_env(grid.seed);
  const auto samples = collect_cost_samples(grid);
  const CostCoefficients c = fit_cost_model(samples);
  save_coefficients(out, c);
  std::vector<double> rel;
  for (const auto& s : samples) {
    rel.push_back(std::abs(estimate_cost(s.x, s.y, c).cost - s.measured) /
                  s.measured);
  }
  std::sort(rel.begin(), rel.end());
  std::cerr << fmt::format(
      "{} samples: alpha={} beta={} gamma={} (median relative error {:.1f}%)\n",
      samples.size(), c.alpha, c.beta, c.gamma, 100 * rel[rel.size() / 2]);
  return 0;
}

int cmd_run(const RunOptions& o) {
  const Hin hin = Hin::open(o.hin);
  const auto workload = read_workload(o.workload, hin.schema());
  EngineConfig config =
      make_config(o.variant, o.policy, o.cache_mb, o.coeffs, o.cost_unit);
  config.trace = !o.trace.empty();
  Engine engine(hin, config);
  const WorkloadReport rep = engine.run_workload(workload);

  Output out(o.out);
  auto& os = out.stream();
  os << "query,ms,op_count,hits,evictions,plan\n";
  for (const auto& q : rep.queries) {
    os << csv_field(q.query) << ',' << fmt::format("{:.3f}", q.metrics.micros / 1000)
       << ',' << q.metrics.op_count << ',' << q.metrics.hits << ','
       << q.metrics.evictions << ','
       << csv_field(q.error ? "error: " + *q.error : q.metrics.plan) << '\n';
  }
  if (!o.trace.empty() && engine.cache()) {
    Output trace(o.trace);
    for (const auto& line : engine.cache()->trace()) trace.stream() << line << '\n';
  }
  std::size_t errors = 0;
  for (const auto& q : rep.queries) errors += q.error.has_value();
  std::cerr << fmt::format(
      "{} queries ({} failed): {:.1f} ms, {} ops, {} hits, {} evictions, peak "
      "cache {} bytes\n",
      rep.queries.size(), errors, rep.total_micros / 1000, rep.total_ops,
      rep.hits, rep.evictions, rep.peak_cache_bytes);
  return errors == 0 ? 0 : 2;
}

struct BenchOptions {
  std::string hin;
  std::string workload;
  std::vector<std::string> variants{"hranks", "cbs1", "cbs2", "atrapos"};
  std::vector<double> cache_mb{1, 4, 16, 64};
  std::string coeffs;
  std::string cost_unit = "micros";
  std::size_t repeat = 1;
  std::string out;
};

int cmd_bench(const BenchOptions& o) {
  const Hin hin = Hin::open(o.hin);
  const auto workload = read_workload(o.workload, hin.schema());
  Output out(o.out);
  auto& os = out.stream();
  os << "variant,policy,cache_mb,repeat,queries,total_ms,total_ops,hits,misses,"
        "evictions,peak_cache_bytes\n";
  for (const auto& spec : o.variants) {
    // "variant" or "variant:policy".
    const auto colon = spec.find(':');
    const std::string variant = spec.substr(0, colon);
    const std::string policy =
        colon == std::string::npos ? "" : spec.substr(colon + 1);
    const bool cached = variant != "hranks";
    const std::vector<double> sizes =
        cached ? o.cache_mb : std::vector<double>{0};
    for (double mb : sizes) {
      for (std::size_t r = 0; r < o.repeat; ++r) {
        const EngineConfig c =
            make_config(variant, policy, mb, o.coeffs, o.cost_unit);
        Engine engine(hin, c);
        const WorkloadReport rep = engine.run_workload(workload);
        os << to_string(c.variant) << ','
           << (cached ? std::string(to_string(c.effective_policy())) : "none")
           << ',' << mb << ',' << r << ',' << rep.queries.size() << ','
           << fmt::format("{:.3f}", rep.total_micros / 1000) << ','
           << rep.total_ops << ',' << rep.hits << ',' << rep.misses << ','
           << rep.evictions << ',' << rep.peak_cache_bytes << '\n';
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metapath query workload engine"};
  app.require_subcommand(1);

  std::string ingest_schema, ingest_out;
  auto* ingest = app.add_subcommand("ingest", "Schema config + CSV files -> binary fixture");
  ingest->add_option("--schema", ingest_schema, "Schema JSON naming the CSV files")->required();
  ingest->add_option("--out", ingest_out, "Binary fixture to write")->required();

  GenOptions gen;
  auto* g = app.add_subcommand("gen-workload", "Generate a session-based query workload");
  g->add_option("--hin", gen.hin, "Binary fixture or schema JSON")->required();
  g->add_option("--count", gen.spec.count, "Number of queries")->capture_default_str();
  g->add_option("--p", gen.spec.restart_p, "Session restart probability")->capture_default_str();
  g->add_option("--len-min", gen.spec.len_min, "Shortest metapath (node types)")->capture_default_str();
  g->add_option("--len-max", gen.spec.len_max, "Longest metapath (node types)")->capture_default_str();
  g->add_option("--dist", gen.dist, "uniform or zipf")->capture_default_str();
  g->add_option("--alpha", gen.spec.alpha, "Zipf exponent")->capture_default_str();
  g->add_option("--seed", gen.spec.seed, "Generator seed (ATRAPOS_SEED overrides)")->capture_default_str();
  g->add_option("--constraints", gen.constraints, "entity, range or mixed")->capture_default_str();
  g->add_option("--pool", gen.spec.constraint_pool, "Distinct constraints to draw from")->capture_default_str();
  g->add_option("--metapaths", gen.metapaths, "Comma separated metapath universe");
  g->add_flag("--sessions", gen.sessions, "Annotate session ids as comments");
  g->add_option("--out", gen.out, "Workload file (default stdout)");

  std::string fit_out = "coeffs.json";
  CalibrationGrid grid;
  auto* fit = app.add_subcommand("fit-cost-model", "Time random products and fit the cost model");
  fit->add_option("--out", fit_out, "Coefficients file")->capture_default_str();
  fit->add_option("--dims", grid.dims, "Square operand sizes");
  fit->add_option("--densities", grid.densities, "Operand densities");
  fit->add_option("--reps", grid.repetitions, "Samples per grid point")->capture_default_str();
  fit->add_option("--timing-repeats", grid.timing_repeats, "Timed runs per sample (fastest kept)")->capture_default_str();
  fit->add_option("--seed", grid.seed, "Generator seed (ATRAPOS_SEED overrides)")->capture_default_str();

  RunOptions run;
  auto* r = app.add_subcommand("run", "Evaluate a workload and print a per-query CSV report");
  r->add_option("--hin", run.hin, "Binary fixture or schema JSON")->required();
  r->add_option("--workload", run.workload, "Workload file")->required();
  r->add_option("--variant", run.variant, "hranks, cbs1, cbs2 or atrapos")->capture_default_str();
  r->add_option("--policy", run.policy, "lru, pgds or otree (default per variant)");
  r->add_option("--cache-mb", run.cache_mb, "Cache capacity in MiB")->capture_default_str();
  r->add_option("--coeffs", run.coeffs, "Coefficients file from fit-cost-model");
  r->add_option("--cost-unit", run.cost_unit, "micros or ops")->capture_default_str();
  r->add_option("--out", run.out, "CSV report (default stdout)");
  r->add_option("--trace", run.trace, "Write the cache event trace here");

  BenchOptions bench;
  auto* b = app.add_subcommand("bench", "Variants x cache sizes, one aggregate CSV row each");
  b->add_option("--hin", bench.hin, "Binary fixture or schema JSON")->required();
  b->add_option("--workload", bench.workload, "Workload file")->required();
  b->add_option("--variants", bench.variants, "variant or variant:policy")->capture_default_str();
  b->add_option("--cache-mb", bench.cache_mb, "Cache capacities in MiB")->capture_default_str();
  b->add_option("--coeffs", bench.coeffs, "Coefficients file from fit-cost-model");
  b->add_option("--cost-unit", bench.cost_unit, "micros or ops")->capture_default_str();
  b->add_option("--repeat", bench.repeat, "Runs per configuration")->capture_default_str();
  b->add_option("--out", bench.out, "CSV output (default stdout)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*ingest) return cmd_ingest(ingest_schema, ingest_out);
    if (*g) return cmd_gen_workload(gen);
    if (*fit) return cmd_fit(fit_out, grid);
    if (*r) return cmd_run(run);
    if (*b) return cmd_bench(bench);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
