#pragma once

// Command-line front end: gen, solve, weights, enumerate, oracle.
// Exit codes: 0 success, 1 numerical failure, 2 I/O or validation error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "msbtree/error.hpp"
#include "msbtree/io.hpp"
#include "msbtree/measures.hpp"
#include "msbtree/mst.hpp"
#include "msbtree/trees.hpp"
#include "msbtree/verify.hpp"

namespace msbtree::cli {

using nlohmann::json;
namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kNumerical = 1, kInput = 2 };

struct RunConfig {
  double eta = 0.0;
  std::string cost = "sqeuclidean";
  double tol = 1e-9;
  std::size_t max_iter = 100000;
  std::size_t cap = kDefaultTensorCap;
  std::size_t threads = 1;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::size_t top_k = 10;
  bool prune = false;
  bool allow_nonconverged = false;
  bool emit_coupling = false;
  std::string mst = "prim";
  std::string direct = "auto";
  std::string tree;
  std::size_t samples = 0;  // gen: overrides the spec's n when > 0

  void validate() const {
    if (!(eta > 0.0)) throw ValidationError("--eta must be > 0");
    if (!(tol > 0.0)) throw ValidationError("--tol must be > 0");
    if (max_iter < 1) throw ValidationError("--max-iter must be >= 1");
    if (cap < 1) throw ValidationError("--cap must be >= 1");
  }

  SolverConfig solver() const {
    SolverConfig c;
    c.eta = eta;
    c.sinkhorn.tol = tol;
    c.sinkhorn.max_iter = max_iter;
    c.allow_nonconverged = allow_nonconverged;
    c.threads = threads;
    c.tensor_cap = cap;
    c.mst = mst == "boruvka" ? MstAlgorithm::boruvka : MstAlgorithm::prim;
    return c;
  }
};

inline MeasureCollection load_measures(const std::vector<std::string>& files, bool prune) {
  std::vector<DiscreteMeasure> ms;
  for (const auto& f : files) {
    auto m = io::read_measure_file(f);
    ms.push_back(prune ? m.pruned() : std::move(m));
  }
  return MeasureCollection(std::move(ms));
}

inline CostModel load_cost_model(const std::string& spec) {
  if (spec == "sqeuclidean") return CostModel::metric(CostKind::squared_euclidean);
  if (spec == "euclidean") return CostModel::metric(CostKind::euclidean);
  const std::string prefix = "matrix:";
  if (spec.rfind(prefix, 0) == 0) {
    const std::string path = spec.substr(prefix.size());
    try {
      return io::parse_cost_file(io::parse_json(io::read_text(path), path));
    } catch (const ValidationError& e) {
      throw ValidationError(path + ": " + e.what());
    }
  }
  throw ValidationError("unknown cost '" + spec + "' (expected sqeuclidean, euclidean or matrix:<file>)");
}

inline json edge_report(const Edge& e, const EdgeAttachment& att, bool in_tree) {
  return {{"pair", {e.a + 1, e.b + 1}},
          {"g", io::round15(att.g)},
          {"sb", io::round15(att.sb)},
          {"transport_cost", io::round15(att.transport_cost)},
          {"iterations", att.report.iterations},
          {"residual", att.report.residual},
          {"converged", att.report.converged},
          {"in_tree", in_tree}};
}

inline fs::path output_dir(const RunConfig& cfg) { return cfg.out_dir.empty() ? fs::path(".") : fs::path(cfg.out_dir); }

inline int cmd_solve(const RunConfig& cfg, const std::vector<std::string>& files, std::ostream& out) {
  cfg.validate();
  const auto measures = load_measures(files, cfg.prune);
  const auto costs = load_cost_model(cfg.cost);
  SolverConfig solver = cfg.solver();
  solver.compose = cfg.emit_coupling;
  const auto result = optimal_msb(measures, costs, solver);

  const fs::path dir = output_dir(cfg);
  const json tree = io::tree_to_json(result.tree, result.total_cost);
  json edges = json::array();
  for (const auto& [e, att] : result.weights.edges) {
    const bool in_tree = std::find(result.tree.edges().begin(), result.tree.edges().end(), e) != result.tree.edges().end();
    edges.push_back(edge_report(e, att, in_tree));
  }
  json entropies = json::array();
  for (double h : result.weights.entropies) entropies.push_back(io::round15(h));
  json report = {{"s", measures.size()},
                 {"eta", cfg.eta},
                 {"cost", cfg.cost},
                 {"tol", cfg.tol},
                 {"max_iter", cfg.max_iter},
                 {"mst", cfg.mst},
                 {"entropies", entropies},
                 {"edges", edges},
                 {"tree", tree},
                 {"total_cost", io::round15(result.total_cost)}};
  if (!result.note.empty()) report["note"] = result.note;

  io::write_text(dir / "weights.csv", io::weights_csv(result.weights.g));
  io::write_text(dir / "tree.dot", to_dot(result.tree, &result.weights.g));
  io::write_text(dir / "tree.json", tree.dump(2) + "\n");
  io::write_text(dir / "prufer.txt", result.prufer.str() + "\n");
  io::write_text(dir / "report.json", report.dump(2) + "\n");
  // Wall-clock numbers live apart from the report so the report stays reproducible.
  const json timings = {{"weights_seconds", result.weights_seconds},
                        {"mst_seconds", result.mst_seconds},
                        {"compose_seconds", result.compose_seconds}};
  io::write_text(dir / "timings.json", timings.dump(2) + "\n");
  if (result.coupling) io::write_text(dir / "coupling.json", io::coupling_to_json(*result.coupling).dump() + "\n");

  out << tree.dump() << "\n";
  return kOk;
}

inline int cmd_weights(const RunConfig& cfg, const std::vector<std::string>& files, std::ostream& out) {
  cfg.validate();
  const auto measures = load_measures(files, cfg.prune);
  SolverConfig solver = cfg.solver();
  solver.keep_plans = false;
  const auto weights = build_weight_matrix(measures, load_cost_model(cfg.cost), solver);
  const std::string csv = io::weights_csv(weights.g);
  if (!cfg.out_dir.empty()) io::write_text(fs::path(cfg.out_dir) / "weights.csv", csv);
  out << csv;
  return kOk;
}

inline DirectMode parse_direct(const std::string& s) {
  if (s == "auto") return DirectMode::automatic;
  if (s == "oracle") return DirectMode::oracle;
  if (s == "composed") return DirectMode::composed;
  if (s == "none") return DirectMode::none;
  throw ValidationError("unknown --direct mode '" + s + "'");
}

inline int cmd_enumerate(const RunConfig& cfg, const std::vector<std::string>& files, std::ostream& out) {
  cfg.validate();
  const auto measures = load_measures(files, cfg.prune);
  const auto costs = load_cost_model(cfg.cost);
  const DirectMode mode = parse_direct(cfg.direct);
  // Refuse before doing any work.
  TreeEnumerator probe(measures.size());
  SolverConfig solver = cfg.solver();
  solver.keep_plans = mode != DirectMode::none;
  const auto weights = build_weight_matrix(measures, costs, solver);
  const auto rows = rank_trees(measures, costs, weights, solver, cfg.top_k, mode);

  std::string table = "rank,prufer,cost_additive,cost_direct,direct_method\n";
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    table += std::to_string(k + 1) + "," + r.code.str() + "," + io::format15(r.cost_additive) + "," +
             (r.cost_direct ? io::format15(*r.cost_direct) : std::string()) + "," + to_string(r.method) + "\n";
  }
  if (!cfg.out_dir.empty()) io::write_text(fs::path(cfg.out_dir) / "enumerate.csv", table);
  out << table;
  return kOk;
}

inline int cmd_oracle(const RunConfig& cfg, const std::vector<std::string>& files, std::ostream& out) {
  cfg.validate();
  const auto measures = load_measures(files, cfg.prune);
  const auto costs = load_cost_model(cfg.cost);
  const SpanningTree tree = prufer_decode(PruferCode::parse(cfg.tree), measures.size());
  const auto cmp = compare_with_oracle(measures, costs, tree, cfg.solver());
  const json report = {{"tree", io::tree_to_json(tree, cmp.cost_decomposed)},
                       {"entries", cmp.entries},
                       {"sup_norm_gap", cmp.sup_norm_gap},
                       {"cost_decomposed", io::round15(cmp.cost_decomposed)},
                       {"cost_oracle", io::round15(cmp.cost_oracle)},
                       {"cost_composed", io::round15(cmp.cost_composed)},
                       {"cost_gap", cmp.cost_gap},
                       {"oracle_sweeps", cmp.oracle_report.iterations},
                       {"oracle_residual", cmp.oracle_report.residual}};
  if (!cfg.out_dir.empty()) io::write_text(fs::path(cfg.out_dir) / "oracle.json", report.dump(2) + "\n");
  out << report.dump(2) << "\n";
  return kOk;
}

inline int cmd_gen(const RunConfig& cfg, const std::string& spec_file, std::ostream& out) {
  auto spec = io::parse_gmm_spec(io::parse_json(io::read_text(spec_file), spec_file));
  if (cfg.samples > 0) spec.n = cfg.samples;
  if (spec.n == 0) throw ValidationError("sample count must be >= 1");
  std::mt19937_64 rng(cfg.seed);
  const fs::path dir = output_dir(cfg);
  for (std::size_t k = 0; k < spec.mixtures.size(); ++k) {
    const auto m = sample_gmm(spec.mixtures[k], spec.n, spec.interval, rng);
    const fs::path path = dir / ("measure_" + std::to_string(k + 1) + ".json");
    io::write_measure_file(path, m);
    out << path.string() << "\n";
  }
  return kOk;
}

inline void print_error(std::ostream& err, const char* kind, const std::string& message) {
  err << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Optimal multimarginal Schrödinger bridge as a minimum spanning tree"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::vector<std::string> files;
  std::string spec_file;

  auto add_solver_flags = [&](CLI::App* sub, bool multi_files = true) {
    if (multi_files) sub->add_option("measures", files, "measure files (.json, .csv grid, .pgm)")->required();
    sub->add_option("--eta", cfg.eta, "entropic regularization (> 0)")->required();
    sub->add_option("--cost", cfg.cost, "sqeuclidean | euclidean | matrix:<file>");
    sub->add_option("--tol", cfg.tol, "sinkhorn TV tolerance");
    sub->add_option("--max-iter", cfg.max_iter, "sinkhorn sweep limit");
    sub->add_option("--cap", cfg.cap, "dense tensor entry cap");
    sub->add_option("--threads", cfg.threads, "edge-solve worker threads (0 = all cores)");
    sub->add_option("--out-dir", cfg.out_dir, "output directory");
    sub->add_flag("--prune", cfg.prune, "drop zero-weight support points on load");
    sub->add_flag("--allow-nonconverged", cfg.allow_nonconverged, "accept solves that hit --max-iter");
  };

  auto* solve = app.add_subcommand("solve", "optimal tree via pairwise SB weights and an MST");
  add_solver_flags(solve);
  solve->add_option("--mst", cfg.mst, "prim | boruvka")->check(CLI::IsMember({"prim", "boruvka"}));
  solve->add_flag("--emit-coupling", cfg.emit_coupling, "also write the composed coupling tensor");

  auto* weights = app.add_subcommand("weights", "edge weight matrix only");
  add_solver_flags(weights);

  auto* enumerate = app.add_subcommand("enumerate", "rank every spanning tree");
  add_solver_flags(enumerate);
  enumerate->add_option("--top-k", cfg.top_k, "rows to print (0 = all)");
  enumerate->add_option("--direct", cfg.direct, "auto | oracle | composed | none")
      ->check(CLI::IsMember({"auto", "oracle", "composed", "none"}));

  auto* oracle = app.add_subcommand("oracle", "compare the composed coupling with dense multimarginal Sinkhorn");
  add_solver_flags(oracle);
  oracle->add_option("--tree", cfg.tree, "Prüfer code, e.g. \"3 3 5\" (empty for s = 2)");

  auto* gen = app.add_subcommand("gen", "sample measures from Gaussian mixtures");
  gen->add_option("spec", spec_file, "mixture spec JSON")->required();
  gen->add_option("-n,--samples", cfg.samples, "points per measure (overrides the spec)");
  gen->add_option("--seed", cfg.seed, "random seed");
  gen->add_option("--out-dir", cfg.out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    print_error(err, "usage", e.what());
    return kInput;
  }

  try {
    if (*solve) return cmd_solve(cfg, files, out);
    if (*weights) return cmd_weights(cfg, files, out);
    if (*enumerate) return cmd_enumerate(cfg, files, out);
    if (*oracle) return cmd_oracle(cfg, files, out);
    if (*gen) return cmd_gen(cfg, spec_file, out);
  } catch (const IoError& e) {
    print_error(err, "io", e.what());
    return kInput;
  } catch (const CapacityError& e) {
    print_error(err, "capacity", e.what());
    return kInput;
  } catch (const ValidationError& e) {
    print_error(err, "validation", e.what());
    return kInput;
  } catch (const NumericalError& e) {
    print_error(err, "numerical", e.what());
    return kNumerical;
  }
  return kInput;
}

}  // namespace msbtree::cli
