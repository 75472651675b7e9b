// Copyright 2026 The qcmatch Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qcmatch/cli.h"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qcmatch/engine.h"
#include "qcmatch/instance.h"
#include "qcmatch/lpmatch.h"
#include "qcmatch/oracle.h"
#include "qcmatch/permdist.h"
#include "qcmatch/transform.h"
#include "qcmatch/verify.h"

namespace qcmatch {
namespace {

using Json = nlohmann::ordered_json;

// Bad arguments, missing or malformed inputs: exit status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr int kMaxExactEdges = 20;

template <typename F>
auto AsUsage(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
  if (!out) throw UsageError("failed writing " + path);
}

Json ParseJsonFile(const std::string& path) {
  const std::string text = ReadFile(path);
  try {
    return Json::parse(text);
  } catch (const std::exception& e) {
    throw UsageError(path + ": malformed JSON: " + e.what());
  }
}

StochasticGraph LoadGraph(const std::string& path) {
  return AsUsage([&] { return LoadInstanceFile(path); });
}

FractionalSolution LoadOrSolve(const StochasticGraph& graph,
                               const std::string& path) {
  if (path.empty()) return SolveLpMatch(graph);
  return AsUsage([&] { return LoadSolutionFile(path, graph.num_edges()); });
}

Json ToJson(const Eigen::VectorXd& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

// Writes to --out when given, otherwise to stdout.
void Emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    WriteFile(path, text);
  }
}

std::string Dump(const Json& j) { return j.dump(2) + "\n"; }

double LpObjective(const StochasticGraph& graph, const Eigen::VectorXd& x) {
  double total = 0.0;
  for (int e = 0; e < graph.num_edges(); ++e) total += x(e) * graph.edge(e).w;
  return total;
}

Json OptionalNumber(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

std::optional<double> Ratio(double num, double den) {
  if (den > 0.0) return num / den;
  return std::nullopt;
}

// ---- gen ----

struct GenArgs {
  std::string model = "uniform";
  GeneratorParams params;
  std::optional<uint64_t> seed;
  std::string out;
};

int CmdGen(const GenArgs& a, std::ostream& out) {
  if (!a.seed) throw UsageError("--seed is required");
  const StochasticGraph graph =
      AsUsage([&] { return GenerateInstance(a.model, a.params, *a.seed); });
  WriteFile(a.out, SaveInstance(graph));
  out << "wrote " << a.out << ": " << graph.a_count() << "x" << graph.b_count()
      << ", " << graph.num_edges() << " edges\n";
  return kExitOk;
}

// ---- solve ----

struct SolveArgs {
  std::string instance;
  std::string out;
  std::string check;
};

int CmdSolve(const SolveArgs& a, std::ostream& out) {
  const StochasticGraph graph = LoadGraph(a.instance);
  const FractionalSolution sol = SolveLpMatch(graph);
  WriteFile(a.out, SaveSolution(sol));
  out << "objective " << Json(sol.objective).dump() << " after " << sol.rounds
      << " separation rounds, " << sol.generated_constraints.size()
      << " constraints\n";
  if (a.check.empty()) return kExitOk;
  const FeasibilityMode mode = a.check == "exhaustive"
                                   ? FeasibilityMode::kExhaustive
                                   : FeasibilityMode::kPrefix;
  const FeasibilityReport rep = CheckFeasibility(graph, sol.x, mode);
  out << "check " << ToString(mode) << ": "
      << (rep.feasible ? "feasible" : "infeasible") << ", worst violation "
      << Json(rep.worst_violation).dump() << "\n";
  return rep.feasible ? kExitOk : kExitCheckFailed;
}

// ---- run ----

struct RunArgs {
  std::string algorithm;
  std::string instance;
  std::string solution;
  int64_t trials = 0;
  std::optional<uint64_t> seed;
  TransformParams params;
  std::string out;
  int threads = 1;
};

void RequireFeasible(const StochasticGraph& graph, const Eigen::VectorXd& x) {
  const FeasibilityReport feas =
      CheckFeasibility(graph, x, FeasibilityMode::kPrefix);
  if (!feas.feasible) {
    throw UsageError("solution violates a vertex constraint at " +
                     ToString(feas.witness_vertex) + " by " +
                     std::to_string(feas.worst_violation));
  }
}

int CmdRun(const RunArgs& a, std::ostream& out) {
  if (!a.seed) throw UsageError("--seed is required");
  const Algorithm algorithm =
      AsUsage([&] { return ParseAlgorithm(a.algorithm); });
  AsUsage([&] {
    a.params.Validate();
    return 0;
  });
  if (a.trials < 1) throw UsageError("--trials must be at least 1");
  if (a.threads < 1) throw UsageError("--threads must be at least 1");
  const StochasticGraph graph = LoadGraph(a.instance);
  const FractionalSolution sol = LoadOrSolve(graph, a.solution);
  if (algorithm != Algorithm::kGreedy) RequireFeasible(graph, sol.x);

  Eigen::VectorXd x = sol.x;
  double scale = 1.0;
  if (algorithm == Algorithm::kAlg1) {
    scale = SigmaScale(graph, x, a.params.sigma);
    x *= scale;
  }
  AlgorithmConfig config;
  config.algorithm = algorithm;
  config.params = a.params;
  config.seed = *a.seed;
  const MonteCarloEstimate est =
      RunMonteCarlo(graph, x, config, a.trials, a.threads);

  const double lp = LpObjective(graph, sol.x);
  std::optional<double> opt;
  if (graph.num_edges() <= kMaxExactEdges) opt = ExpectedOptExact(graph);

  Json j;
  j["algorithm"] = std::string(ToString(algorithm));
  j["instance"] = a.instance;
  j["trials"] = a.trials;
  j["seed"] = *a.seed;
  j["sigma"] = a.params.sigma;
  j["tau"] = a.params.tau;
  j["lambda"] = a.params.lambda;
  j["x_scale"] = scale;
  j["branch"] = std::string(ToString(est.branch));
  j["mean"] = est.mean;
  j["std_error"] = est.std_error;
  j["lp_objective"] = lp;
  j["ratio_vs_lp"] = OptionalNumber(Ratio(est.mean, lp));
  j["exact_opt"] = OptionalNumber(opt);
  j["ratio_vs_opt"] =
      OptionalNumber(opt ? Ratio(est.mean, *opt) : std::nullopt);
  j["edge_frequency"] = est.edge_frequency;
  WriteFile(a.out, Dump(j));
  out << ToString(algorithm) << ": mean " << Json(est.mean).dump()
      << " stderr " << Json(est.std_error).dump() << " -> " << a.out << "\n";
  return kExitOk;
}

// ---- oracle ----

struct OracleArgs {
  std::string instance;
  std::string solution;
  double sigma = 1.0;
  std::string algorithm = "alg1";
  std::vector<std::string> events;
  std::string out;
};

int CmdOracle(const OracleArgs& a, std::ostream& out) {
  if (!(a.sigma > 0.0 && a.sigma <= 1.0)) {
    throw UsageError("sigma must lie in (0,1]");
  }
  const Algorithm algorithm =
      AsUsage([&] { return ParseAlgorithm(a.algorithm); });
  if (algorithm != Algorithm::kAlg1 && algorithm != Algorithm::kSimple) {
    throw UsageError("oracle --alg must be alg1 or simple");
  }
  std::vector<std::string> which;
  for (const std::string& name : a.events) {
    if (name == "all") {
      which = LemmaNames();
      break;
    }
    if (std::find(LemmaNames().begin(), LemmaNames().end(), name) ==
        LemmaNames().end()) {
      throw UsageError("unknown event set \"" + name + "\"");
    }
    which.push_back(name);
  }
  const StochasticGraph graph = LoadGraph(a.instance);
  const FractionalSolution sol = LoadOrSolve(graph, a.solution);
  RequireFeasible(graph, sol.x);
  Eigen::VectorXd x = sol.x;
  const double scale = SigmaScale(graph, x, a.sigma);
  x *= scale;

  ExactEventReport ev;
  std::optional<LemmaCheck> lemmas;
  if (!which.empty()) {
    if (algorithm != Algorithm::kAlg1) {
      throw UsageError("--events requires --alg alg1");
    }
    lemmas = CheckLemmas(graph, x, a.sigma, which);
    ev = lemmas->events;
  } else {
    ExactOptions opt;
    opt.algorithm = algorithm;
    opt.sigma = a.sigma;
    ev = ExactEventProbabilities(graph, x, opt, {});
  }

  Json j;
  j["instance"] = a.instance;
  j["algorithm"] = std::string(ToString(algorithm));
  j["sigma"] = a.sigma;
  j["x_scale"] = scale;
  j["lp_objective"] = LpObjective(graph, sol.x);
  std::optional<double> opt;
  if (graph.num_edges() <= kMaxExactEdges) opt = ExpectedOptExact(graph);
  j["exact_opt"] = OptionalNumber(opt);
  j["expected_weight"] = ev.expected_weight;
  j["total_mass"] = ev.total_mass;
  j["matched"] = ToJson(ev.matched);
  j["examined"] = ToJson(ev.examined);
  j["available"] = ToJson(ev.available);
  j["proposed"] = ToJson(ev.proposed);
  j["a_unmatched"] = ToJson(ev.a_unmatched);
  j["b_unmatched"] = ToJson(ev.b_unmatched);
  j["nodes"] = ev.nodes;
  bool pass = true;
  if (lemmas) {
    j["checks"] = Json::parse(lemmas->report.ToJson());
    j["conditionals_evaluated"] = lemmas->conditionals_evaluated;
    j["conditionals_skipped"] = lemmas->conditionals_skipped;
    pass = lemmas->report.pass();
  }
  Emit(a.out, Dump(j), out);
  return pass ? kExitOk : kExitCheckFailed;
}

// ---- verify ----

struct VerifyArgs {
  std::string suite = "all";
  double grid_step = kDefaultGridStep;
  uint64_t seed = kDefaultVerifySeed;
  int trials = 100'000;
  int64_t mc_trials = 1'000'000;
  int threads = 1;
  std::string out;
  // Distribution probe.
  std::optional<int> probe_vertex;
  std::string instance;
  std::string solution;
};

int CmdProbe(const VerifyArgs& a, std::ostream& out) {
  if (a.instance.empty()) throw UsageError("--probe-vertex needs --instance");
  const StochasticGraph graph = LoadGraph(a.instance);
  const FractionalSolution sol = LoadOrSolve(graph, a.solution);
  const int v = *a.probe_vertex;
  if (v < 0 || v >= graph.a_count()) {
    throw UsageError("--probe-vertex must name an A vertex in [0," +
                     std::to_string(graph.a_count()) + ")");
  }
  const PermDistribution dist =
      BuildProportionalDistribution(graph, v, sol.x);
  const Eigen::VectorXd marg = FirstRealizedMarginals(dist, graph);
  Json j;
  j["vertex"] = v;
  j["edges"] = dist.edges;
  j["targets"] = ToJson(dist.targets);
  j["marginals"] = ToJson(marg);
  j["max_error"] = dist.edges.empty()
                       ? 0.0
                       : (marg - dist.targets).cwiseAbs().maxCoeff();
  Json support = Json::array();
  for (size_t i = 0; i < dist.perms.size(); ++i) {
    Json item;
    item["perm"] = dist.perms[i];
    item["prob"] = dist.probs[i];
    support.push_back(std::move(item));
  }
  j["support"] = std::move(support);
  Emit(a.out, Dump(j), out);
  return kExitOk;
}

int CmdVerify(const VerifyArgs& a, std::ostream& out) {
  if (a.probe_vertex) return CmdProbe(a, out);
  if (!(a.grid_step > 0.0 && a.grid_step <= 0.1)) {
    throw UsageError("--grid-step must lie in (0, 0.1]");
  }
  if (a.trials < 0 || a.mc_trials < 0) {
    throw UsageError("trial counts must be non-negative");
  }
  SuiteOptions options;
  options.grid_step = a.grid_step;
  options.seed = a.seed;
  options.random_trials = a.trials;
  options.limit.trials = a.mc_trials;
  options.limit.threads = a.threads;
  const VerificationReport report =
      AsUsage([&] { return RunSuite(a.suite, options); });
  Emit(a.out, report.ToJson(), out);
  return report.pass() ? kExitOk : kExitCheckFailed;
}

// ---- report ----

struct ReportArgs {
  std::string solution;
  std::string instance;
  std::vector<std::string> runs;
  std::string oracle;
  std::string out;
  std::string table;
};

std::string Cell(const Json& v, const char* fmt) {
  if (v.is_null()) return "-";
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v.get<double>());
  return buf;
}

int CmdReport(const ReportArgs& a, std::ostream& out) {
  if (a.runs.empty()) throw UsageError("--runs needs at least one file");
  double lp = 0.0;
  {
    const Json sol = ParseJsonFile(a.solution);
    if (!sol.contains("objective") || !sol["objective"].is_number()) {
      throw UsageError(a.solution + ": missing numeric \"objective\"");
    }
    lp = sol["objective"].get<double>();
  }
  std::optional<double> opt;
  if (!a.oracle.empty()) {
    const Json o = ParseJsonFile(a.oracle);
    if (o.contains("exact_opt") && o["exact_opt"].is_number()) {
      opt = o["exact_opt"].get<double>();
    }
  }
  Json rows = Json::array();
  bool consistent = true;
  for (const std::string& path : a.runs) {
    const Json r = ParseJsonFile(path);
    for (const char* key : {"algorithm", "mean", "std_error", "branch"}) {
      if (!r.contains(key)) {
        throw UsageError(path + ": missing \"" + std::string(key) + "\"");
      }
    }
    std::optional<double> row_opt = opt;
    if (!row_opt && r.contains("exact_opt") && r["exact_opt"].is_number()) {
      row_opt = r["exact_opt"].get<double>();
    }
    const double mean = r["mean"].get<double>();
    const std::optional<double> vs_lp = Ratio(mean, lp);
    const std::optional<double> vs_opt =
        row_opt ? Ratio(mean, *row_opt) : std::nullopt;
    // LP dominates OPT, so the OPT ratio can never be the smaller one.
    if (vs_lp && vs_opt && *vs_opt < *vs_lp - 1e-9) consistent = false;
    Json row;
    row["algorithm"] = r["algorithm"];
    row["mean"] = mean;
    row["std_error"] = r["std_error"];
    row["ratio_vs_lp"] = OptionalNumber(vs_lp);
    row["ratio_vs_opt"] = OptionalNumber(vs_opt);
    row["branch"] = r["branch"];
    row["source"] = path;
    rows.push_back(std::move(row));
  }
  Json j;
  j["lp_objective"] = lp;
  j["exact_opt"] = OptionalNumber(opt);
  j["rows"] = rows;
  j["lp_dominates_opt"] = consistent;
  Emit(a.out, Dump(j), out);

  std::ostringstream t;
  char line[160];
  std::snprintf(line, sizeof(line), "%-8s %12s %12s %12s %12s  %s\n",
                "alg", "mean", "stderr", "vs_lp", "vs_opt", "branch");
  t << line;
  for (const Json& row : rows) {
    std::snprintf(line, sizeof(line), "%-8s %12s %12s %12s %12s  %s\n",
                  row["algorithm"].get<std::string>().c_str(),
                  Cell(row["mean"], "%.6f").c_str(),
                  Cell(row["std_error"], "%.2e").c_str(),
                  Cell(row["ratio_vs_lp"], "%.6f").c_str(),
                  Cell(row["ratio_vs_opt"], "%.6f").c_str(),
                  row["branch"].get<std::string>().c_str());
    t << line;
  }
  if (a.table.empty()) {
    out << t.str();
  } else {
    WriteFile(a.table, t.str());
  }
  return consistent ? kExitOk : kExitCheckFailed;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Stochastic matching under query-commit: LP rounding toolkit",
               "qcmatch"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a random instance");
  gen_cmd->add_option("--model", gen.model,
                      "uniform | complete | star | small-x-high-ratio");
  gen_cmd->add_option("--na", gen.params.na, "A side size");
  gen_cmd->add_option("--nb", gen.params.nb, "B side size");
  gen_cmd->add_option("--density", gen.params.density, "edge density");
  gen_cmd->add_option("--w-min", gen.params.w_min);
  gen_cmd->add_option("--w-max", gen.params.w_max);
  gen_cmd->add_option("--p-min", gen.params.p_min);
  gen_cmd->add_option("--p-max", gen.params.p_max);
  gen_cmd->add_option("--seed", gen.seed, "generator seed (required)");
  gen_cmd->add_option("--out", gen.out, "instance JSON")->required();

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "solve LP-Match");
  solve_cmd->add_option("--instance", solve.instance)->required();
  solve_cmd->add_option("--out", solve.out, "solution JSON")->required();
  solve_cmd->add_option("--check", solve.check, "exhaustive | prefix")
      ->check(CLI::IsMember({"exhaustive", "prefix"}));

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Monte Carlo run of an algorithm");
  run_cmd->add_option("--alg", run.algorithm, "greedy | simple | alg1 | apx")
      ->required();
  run_cmd->add_option("--instance", run.instance)->required();
  run_cmd->add_option("--solution", run.solution,
                      "solution JSON; solved on the fly when omitted");
  run_cmd->add_option("--trials", run.trials)->required();
  run_cmd->add_option("--seed", run.seed, "master seed (required)");
  run_cmd->add_option("--tau", run.params.tau);
  run_cmd->add_option("--lambda", run.params.lambda);
  run_cmd->add_option("--sigma", run.params.sigma);
  run_cmd->add_option("--threads", run.threads);
  run_cmd->add_option("--out", run.out, "report JSON")->required();

  OracleArgs oracle;
  auto* oracle_cmd =
      app.add_subcommand("oracle", "exact event probabilities of one round");
  oracle_cmd->add_option("--instance", oracle.instance)->required();
  oracle_cmd->add_option("--solution", oracle.solution);
  oracle_cmd->add_option("--sigma", oracle.sigma);
  oracle_cmd->add_option("--alg", oracle.algorithm, "alg1 | simple");
  oracle_cmd->add_option("--events", oracle.events,
                         "lemma5 fact3 lemma6 lemma7 lemma8 lemma9 claim all")
      ->delimiter(',');
  oracle_cmd->add_option("--out", oracle.out);

  VerifyArgs verify;
  auto* verify_cmd =
      app.add_subcommand("verify", "numeric checks of inequalities/constants");
  verify_cmd->add_option("--suite", verify.suite,
                         "g | split | fact1 | minprod | constants | limit | all");
  verify_cmd->add_option("--grid-step", verify.grid_step);
  verify_cmd->add_option("--seed", verify.seed);
  verify_cmd->add_option("--trials", verify.trials, "random draws per check");
  verify_cmd->add_option("--mc-trials", verify.mc_trials,
                         "Monte Carlo trials for the limit check");
  verify_cmd->add_option("--threads", verify.threads);
  verify_cmd->add_option("--out", verify.out);
  verify_cmd->add_option("--probe-vertex", verify.probe_vertex,
                         "print the proportional distribution at an A vertex");
  verify_cmd->add_option("--instance", verify.instance);
  verify_cmd->add_option("--solution", verify.solution);

  ReportArgs report;
  auto* report_cmd =
      app.add_subcommand("report", "summary table over run reports");
  report_cmd->add_option("--solution", report.solution)->required();
  report_cmd->add_option("--runs", report.runs)->required();
  report_cmd->add_option("--oracle", report.oracle);
  report_cmd->add_option("--out", report.out);
  report_cmd->add_option("--table", report.table,
                         "aligned text table (stdout when omitted)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const CLI::App* sub = nullptr;
    for (auto* s : app.get_subcommands()) sub = s;
    err << "error: " << e.what() << "\n";
    if (sub) err << "see: qcmatch " << sub->get_name() << " --help\n";
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return CmdGen(gen, out);
    if (*solve_cmd) return CmdSolve(solve, out);
    if (*run_cmd) return CmdRun(run, out);
    if (*oracle_cmd) return CmdOracle(oracle, out);
    if (*verify_cmd) return CmdVerify(verify, out);
    if (*report_cmd) return CmdReport(report, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
  return kExitUsage;
}

}  // namespace qcmatch
