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

// Acceptance run: one PASS/FAIL line per criterion, exit status 0 iff all
// pass. Expected values come from direct evaluation in this file, not from
// the library's own reporting.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qcmatch/engine.h"
#include "qcmatch/instance.h"
#include "qcmatch/lpmatch.h"
#include "qcmatch/oracle.h"
#include "qcmatch/permdist.h"
#include "qcmatch/rng.h"
#include "qcmatch/transform.h"
#include "qcmatch/verify.h"

namespace qcmatch {
namespace {

namespace fs = std::filesystem;

const double kOneMinusInvE = 1.0 - std::exp(-1.0);
constexpr uint64_t kSeed = 20260101;

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string Fmt(const char* fmt, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), fmt, a, b, c);
  return buf;
}

std::string FirstFailure(const VerificationReport& r) {
  for (const CheckRecord& c : r.records) {
    if (c.gating && !c.pass) {
      return c.name + " at " + c.location + Fmt(" (violation %.3g)", c.worst_violation);
    }
  }
  return "";
}

double WorstGating(const VerificationReport& r) {
  double worst = -INFINITY;
  for (const CheckRecord& c : r.records) {
    if (c.gating) worst = std::max(worst, c.worst_violation);
  }
  return worst;
}

Outcome FromReport(const VerificationReport& r, double seconds, double budget) {
  Outcome o;
  const std::string fail = FirstFailure(r);
  o.pass = fail.empty() && seconds < budget;
  o.detail = std::to_string(r.records.size()) + " records, worst gating " +
             Fmt("%.3g", WorstGating(r)) + Fmt(", %.2fs (limit %.0fs)", seconds, budget);
  if (!fail.empty()) o.detail += "; first failure " + fail;
  return o;
}

// A vertex 0 with edges to d distinct B vertices.
StochasticGraph AStar(const std::vector<double>& p) {
  std::vector<Edge> edges;
  for (size_t i = 0; i < p.size(); ++i) {
    Edge e;
    e.b = static_cast<int>(i);
    e.p = p[i];
    edges.push_back(e);
  }
  return StochasticGraph(1, static_cast<int>(p.size()), edges);
}

// Random x at vertex 0 of `g`, scaled into every subset constraint.
Eigen::VectorXd RandomFeasibleX(const StochasticGraph& g, CounterRng& rng) {
  const int d = g.num_edges();
  Eigen::VectorXd x(d);
  for (int e = 0; e < d; ++e) x(e) = rng.Uniform() * g.edge(e).p;
  double worst = 1.0;
  for (int mask = 1; mask < (1 << d); ++mask) {
    double sum = 0.0, miss = 1.0;
    for (int e = 0; e < d; ++e) {
      if (mask >> e & 1) {
        sum += x(e);
        miss *= 1.0 - g.edge(e).p;
      }
    }
    worst = std::max(worst, sum / (1.0 - miss));
  }
  // Some draws sit exactly on the boundary, others strictly inside.
  return x / (worst * (rng.Uniform() < 0.5 ? 1.0 : 1.0 + rng.Uniform()));
}

Outcome Criterion1() {
  const auto t = Clock::now();
  const VerificationReport r = VerifyConstants();
  const double secs = Seconds(t);
  Outcome o = FromReport(r, secs, 1.0);
  // Direct recomputation of the headline numbers. The final ratio must clear
  // both 0.63353 - 1e-5 and 1 - 1/e + 0.0014; the latter is the larger.
  const double phi = Phi(0.8723);
  const double rho = Rho(0.8723);
  const double prune = -std::expm1(-0.5303) / 0.5303;
  const double ratio = FinalRatio(0.8723, 0.1837);
  const bool direct = phi >= 0.31719 && phi <= 0.3172 && rho <= 0.5303 &&
                      RhoGap(0.5303, 0.8723, phi) > 0.0 && prune > 0.7761 &&
                      ratio >= 0.63353 - 1e-5 &&
                      ratio >= kOneMinusInvE + 0.0014;
  o.pass = o.pass && direct;
  o.detail = Fmt("phi=%.10f rho=%.9f ", phi, rho) +
             Fmt("ratio=%.7f; ", ratio) + o.detail;
  return o;
}

Outcome Criterion2() {
  const auto t = Clock::now();
  const VerificationReport r = VerifyGClaims(1e-3);
  return FromReport(r, Seconds(t), 10.0);
}

Outcome Criterion3() {
  const auto t = Clock::now();
  const VerificationReport r = VerifySplitInequality(1e-3);
  return FromReport(r, Seconds(t), 10.0);
}

Outcome Criterion4() {
  const auto t = Clock::now();
  double worst = 0.0;
  int vectors = 0;
  std::string failure;
  for (int i = 0; i < 200; ++i) {
    CounterRng rng = DeriveStream(kSeed, 4000 + i, Stream::kVerify);
    const int d = 1 + i % 6;
    std::vector<double> p(d);
    for (double& v : p) v = 0.02 + 0.98 * rng.Uniform();
    const StochasticGraph g = AStar(p);
    const Eigen::VectorXd x = RandomFeasibleX(g, rng);
    try {
      const PermDistribution dist = BuildProportionalDistribution(g, 0, x);
      std::vector<double> m(d, 0.0);
      double total = 0.0;
      for (size_t k = 0; k < dist.perms.size(); ++k) {
        total += dist.probs[k];
        if (dist.probs[k] < 0.0) worst = std::max(worst, -dist.probs[k]);
        double miss = 1.0;
        for (int e : dist.perms[k]) {
          m[e] += dist.probs[k] * miss * p[e];
          miss *= 1.0 - p[e];
        }
      }
      worst = std::max(worst, std::abs(total - 1.0));
      for (int e = 0; e < d; ++e) worst = std::max(worst, std::abs(m[e] - x(e)));
      ++vectors;
    } catch (const std::exception& e) {
      if (failure.empty()) failure = "vector " + std::to_string(i) + ": " + e.what();
    }
  }
  const double secs = Seconds(t);
  Outcome o;
  o.pass = failure.empty() && worst <= 1e-7 && secs < 30.0;
  o.detail = std::to_string(vectors) + " vectors, max marginal error " +
             Fmt("%.3g, %.2fs (limit 30s)", worst, secs);
  if (!failure.empty()) o.detail += "; " + failure;
  return o;
}

// Exact proposal probabilities of the thinned walk, expanding the three-way
// branch (stop / keep / skip) at every edge of every support permutation.
std::vector<double> ProposalTree(const PermDistribution& dist,
                                 const StochasticGraph& g,
                                 const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& xt) {
  std::vector<double> out(g.num_edges(), 0.0);
  std::function<void(const std::vector<int>&, size_t, double)> walk =
      [&](const std::vector<int>& perm, size_t i, double mass) {
        if (i == perm.size() || mass == 0.0) return;
        const int e = perm[i];
        const double p = g.edge(e).p;
        const double r = xt(e) / x(e);
        out[e] += mass * r * p;
        walk(perm, i + 1, mass * r * (1.0 - p));
        walk(perm, i + 1, mass * (1.0 - r) * (1.0 - p));
      };
  for (size_t k = 0; k < dist.perms.size(); ++k) {
    walk(dist.perms[k], 0, dist.probs[k]);
  }
  return out;
}

Outcome Criterion5() {
  const auto t = Clock::now();
  double worst = 0.0;
  std::string failure;
  for (int i = 0; i < 100; ++i) {
    CounterRng rng = DeriveStream(kSeed, 5000 + i, Stream::kVerify);
    const int d = 1 + i % 4;
    const double sigma = i % 2 == 0 ? 1.0 : 0.5;
    std::vector<double> p(d);
    for (double& v : p) v = 0.05 + 0.95 * rng.Uniform();
    const StochasticGraph g = AStar(p);
    Eigen::VectorXd x = RandomFeasibleX(g, rng);
    x *= std::min(1.0, sigma / std::max(1e-300, x.maxCoeff()));
    try {
      const PermDistribution dist = BuildProportionalDistribution(g, 0, x);
      Eigen::VectorXd xt(d);
      for (int e = 0; e < d; ++e) {
        // The transform evaluated straight from its defining formula.
        const double s = sigma, xe = x(e);
        xt(e) = std::abs(s - xe) < 1e-12
                    ? 1.0 - std::exp(-s)
                    : (std::exp(s) - 1.0) * (s - xe) * xe /
                          (s * (std::exp(s) - std::exp(xe)));
      }
      const std::vector<double> prop = ProposalTree(dist, g, x, xt);
      for (int e = 0; e < d; ++e) worst = std::max(worst, std::abs(prop[e] - xt(e)));
      // The library's transform must agree with the formula too.
      worst = std::max(worst, (G(x, sigma) - xt).cwiseAbs().maxCoeff());
    } catch (const std::exception& e) {
      if (failure.empty()) failure = "support " + std::to_string(i) + ": " + e.what();
    }
  }
  Outcome o;
  o.pass = failure.empty() && worst <= 1e-9;
  o.detail = Fmt("100 supports, max |proposal - g(x)| %.3g, %.2fs", worst,
                 Seconds(t));
  if (!failure.empty()) o.detail += "; " + failure;
  return o;
}

// Tiny random instance: |A|, |B| <= 3 and |E| <= 6.
StochasticGraph TinyInstance(int i) {
  CounterRng rng = DeriveStream(kSeed, 6000 + i, Stream::kGenerator);
  const int na = 1 + static_cast<int>(rng() % 3);
  const int nb = 1 + static_cast<int>(rng() % 3);
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < na; ++a) {
    for (int b = 0; b < nb; ++b) pairs.emplace_back(a, b);
  }
  std::shuffle(pairs.begin(), pairs.end(), rng);
  const int m = 1 + static_cast<int>(rng() % std::min<size_t>(6, pairs.size()));
  std::vector<Edge> edges;
  for (int k = 0; k < m; ++k) {
    Edge e;
    e.a = pairs[k].first;
    e.b = pairs[k].second;
    e.w = std::round(rng.Uniform() * 3000.0) / 1000.0;
    e.p = 0.05 + std::round(rng.Uniform() * 950.0) / 1000.0;
    edges.push_back(e);
  }
  return StochasticGraph(na, nb, edges);
}

constexpr int kSweepInstances = 120;

Outcome Criterion6() {
  const auto t = Clock::now();
  std::map<std::string, double> worst;
  std::map<std::string, std::string> where;
  std::map<std::string, int> informational;
  double overall = -INFINITY;  // gating records only
  int evaluated = 0, skipped = 0, runs = 0;
  std::string failure;
  for (int i = 0; i < kSweepInstances; ++i) {
    const StochasticGraph g = TinyInstance(i);
    const FractionalSolution sol = SolveLpMatch(g);
    for (double sigma : {1.0, 0.5}) {
      const Eigen::VectorXd x = sol.x * SigmaScale(g, sol.x, sigma);
      const LemmaCheck c = CheckLemmas(g, x, sigma);
      ++runs;
      evaluated += c.conditionals_evaluated;
      skipped += c.conditionals_skipped;
      for (const CheckRecord& r : c.report.records) {
        if (!worst.count(r.name) || r.worst_violation > worst[r.name]) {
          worst[r.name] = r.worst_violation;
          where[r.name] = "instance " + std::to_string(i) +
                          Fmt(" sigma=%.1f ", sigma) + r.location;
        }
        if (r.gating) overall = std::max(overall, r.worst_violation);
        if (!r.pass && !r.gating) {
          ++informational[r.name];
        } else if (!r.pass && failure.empty()) {
          failure = r.name + " on " + where[r.name];
        }
      }
    }
  }
  const double secs = Seconds(t);
  Outcome o;
  o.pass = failure.empty() && secs < 300.0;
  o.detail = std::to_string(kSweepInstances) + " instances x 2 sigmas, " +
             std::to_string(worst.size()) + " checks, conditionals " +
             std::to_string(evaluated) + " evaluated / " +
             std::to_string(skipped) + " skipped, worst gating " +
             Fmt("%.3g, %.1fs (limit 300s)", overall, secs);
  for (const auto& [name, count] : informational) {
    o.detail += "; informational " + name + " below its sigma=1 constant on " +
                std::to_string(count) + " sigma=0.5 runs" +
                Fmt(" (worst %.3g)", worst[name]);
  }
  if (!failure.empty()) o.detail += "; first failure " + failure;
  return o;
}

Outcome Criterion7() {
  const auto t = Clock::now();
  double worst_gap = -INFINITY;
  std::string failure;
  for (int i = 0; i < kSweepInstances; ++i) {
    const StochasticGraph g = TinyInstance(i);
    const double lp = SolveLpMatch(g).objective;
    const double opt = ExpectedOptExact(g);
    worst_gap = std::max(worst_gap, opt - lp);
    if (lp < opt - 1e-9 && failure.empty()) {
      failure = "instance " + std::to_string(i) + Fmt(": LP %.9f < OPT %.9f", lp, opt);
    }
  }
  double worst_diff = 0.0;
  int infeasible = 0;
  for (int i = 0; i < 500; ++i) {
    const StochasticGraph g = TinyInstance(1000 + i);
    CounterRng rng = DeriveStream(kSeed, 7000 + i, Stream::kVerify);
    Eigen::VectorXd x(g.num_edges());
    // Roughly half the vectors violate some constraint.
    for (int e = 0; e < g.num_edges(); ++e) x(e) = rng.Uniform() * g.edge(e).p;
    const auto ex = CheckFeasibility(g, x, FeasibilityMode::kExhaustive);
    const auto pre = CheckFeasibility(g, x, FeasibilityMode::kPrefix);
    worst_diff = std::max(worst_diff, std::abs(ex.worst_violation - pre.worst_violation));
    infeasible += !ex.feasible;
    if (ex.feasible != pre.feasible && failure.empty()) {
      failure = "vector " + std::to_string(i) + ": feasibility verdicts differ";
    }
  }
  Outcome o;
  o.pass = failure.empty() && worst_diff <= 1e-9;
  o.detail = Fmt("max(OPT - LP) %.3g over %g instances; ", worst_gap,
                 kSweepInstances) +
             Fmt("prefix vs exhaustive max diff %.3g over 500 vectors "
                 "(%g infeasible), %.1fs",
                 worst_diff, infeasible, Seconds(t));
  if (!failure.empty()) o.detail += "; " + failure;
  return o;
}

// 30 instances with at most 6 vertices per side and at most 20 edges so the
// exact OPT is computable.
std::vector<StochasticGraph> EndToEndSuite() {
  std::vector<StochasticGraph> out;
  const char* models[] = {"uniform", "uniform", "complete", "star",
                          "small-x-high-ratio"};
  uint64_t seed = 800;
  while (out.size() < 30) {
    const size_t i = out.size();
    GeneratorParams params;
    const std::string model = models[i % 5];
    params.na = 2 + static_cast<int>(i % 5);
    params.nb = 2 + static_cast<int>((i / 5) % 5);
    params.density = 0.35 + 0.1 * static_cast<double>(i % 4);
    params.w_min = 1.0;
    params.w_max = i % 3 == 0 ? 1.0 : 10.0;
    params.p_min = 0.1;
    params.p_max = 1.0;
    if (model == "complete") {
      params.na = std::min(params.na, 4);
      params.nb = std::min(params.nb, 4);
    }
    if (model == "star") params.na = 3 + static_cast<int>(i % 4);
    const StochasticGraph g = GenerateInstance(model, params, seed++);
    if (g.num_edges() == 0 || g.num_edges() > 20) continue;
    out.push_back(g);
  }
  return out;
}

Outcome Criterion8() {
  const auto t = Clock::now();
  constexpr int64_t kTrials = 1'000'000;
  std::string failure;
  double min_alg1 = INFINITY, min_apx = INFINITY, min_greedy = INFINITY;
  int prune = 0;
  const auto suite = EndToEndSuite();
  for (size_t i = 0; i < suite.size(); ++i) {
    const StochasticGraph& g = suite[i];
    const FractionalSolution sol = SolveLpMatch(g);
    const double lp = sol.objective;
    const double opt = ExpectedOptExact(g);
    auto run = [&](Algorithm alg) {
      AlgorithmConfig config;
      config.algorithm = alg;
      config.seed = kSeed + i;
      return RunMonteCarlo(g, sol.x, config, kTrials);
    };
    const MonteCarloEstimate a1 = run(Algorithm::kAlg1);
    const MonteCarloEstimate apx = run(Algorithm::kApx);
    const MonteCarloEstimate gr = run(Algorithm::kGreedy);
    prune += apx.branch == Branch::kPrune;
    // Slack in units of standard errors: (mean - bound) / stderr.
    auto z = [](double mean, double bound, double se) {
      return se > 0.0 ? (mean - bound) / se : (mean >= bound ? INFINITY : -INFINITY);
    };
    const double z1 = z(a1.mean, kOneMinusInvE * lp, a1.std_error);
    const double z2 = z(apx.mean, 0.6335 * lp, apx.std_error);
    const double z3 = z(gr.mean, 0.5 * opt, gr.std_error);
    min_alg1 = std::min(min_alg1, z1);
    min_apx = std::min(min_apx, z2);
    min_greedy = std::min(min_greedy, z3);
    if (failure.empty() && (z1 < -4.0 || z2 < -4.0 || z3 < -4.0)) {
      failure = "instance " + std::to_string(i) +
                Fmt(": z alg1 %.2f apx %.2f greedy %.2f", z1, z2, z3);
    }
  }
  const double secs = Seconds(t);
  Outcome o;
  o.pass = failure.empty() && secs < 900.0;
  o.detail = std::to_string(suite.size()) + " instances (" +
             std::to_string(prune) + " prune branch), min slack in stderr: " +
             Fmt("alg1 %.1f, apx %.1f, ", min_alg1, min_apx) +
             Fmt("greedy %.1f; %.1fs (limit 900s)", min_greedy, secs);
  if (!failure.empty()) o.detail += "; " + failure;
  return o;
}

Outcome Criterion9() {
  const auto t = Clock::now();
  const VerificationReport r = VerifyLimitConvergence(LimitOptions{});
  Outcome o = FromReport(r, Seconds(t), 600.0);
  // Independent check of the limit value itself.
  const double limit = (1.0 - std::exp(-1.0)) * 0.5;
  for (const CheckRecord& c : r.records) {
    if (c.name == "limit.monte_carlo") {
      o.detail += Fmt("; monte carlo %.6f vs limit %.6f", c.value, limit);
    }
  }
  return o;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome Criterion10() {
  const auto t = Clock::now();
  const fs::path dir = fs::temp_directory_path() / "qcmatch_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto path = [&](const std::string& n) { return (dir / n).string(); };
  const std::string bin = QCMATCH_BINARY;
  const std::string inst = path("inst.json"), sol = path("sol.json");
  // name -> (command line, output files)
  const std::vector<std::pair<std::string, std::vector<std::string>>> commands = {
      {"gen --model uniform --na 5 --nb 4 --density 0.6 --w-min 1 --w-max 6 "
       "--p-min 0.1 --p-max 1 --seed 11 --out " + inst,
       {inst}},
      {"solve --instance " + inst + " --out " + sol + " --check prefix", {sol}},
      {"run --alg greedy --instance " + inst + " --solution " + sol +
           " --trials 20000 --seed 5 --out " + path("greedy.json"),
       {path("greedy.json")}},
      {"run --alg simple --instance " + inst + " --solution " + sol +
           " --trials 20000 --seed 5 --out " + path("simple.json"),
       {path("simple.json")}},
      {"run --alg alg1 --instance " + inst + " --solution " + sol +
           " --trials 20000 --seed 5 --sigma 0.5 --out " + path("alg1.json"),
       {path("alg1.json")}},
      {"run --alg apx --instance " + inst + " --solution " + sol +
           " --trials 20000 --seed 5 --threads 2 --out " + path("apx.json"),
       {path("apx.json")}},
      {"oracle --instance " + inst + " --solution " + sol +
           " --events all --out " + path("oracle.json"),
       {path("oracle.json")}},
      {"verify --suite all --mc-trials 100000 --trials 20000 --out " +
           path("verify.json"),
       {path("verify.json")}},
      {"verify --probe-vertex 1 --instance " + inst + " --solution " + sol +
           " --out " + path("probe.json"),
       {path("probe.json")}},
      {"report --solution " + sol + " --runs " + path("greedy.json") + " " +
           path("simple.json") + " " + path("alg1.json") + " " +
           path("apx.json") + " --oracle " + path("oracle.json") + " --out " +
           path("summary.json") + " --table " + path("summary.txt"),
       {path("summary.json"), path("summary.txt")}},
  };
  std::string failure;
  int files = 0;
  for (const auto& [args, outputs] : commands) {
    std::vector<std::string> first;
    int status[2];
    for (int rep = 0; rep < 2; ++rep) {
      const std::string cmd = bin + " " + args + " >" + path("stdout.txt") +
                              " 2>" + path("stderr.txt");
      const int raw = std::system(cmd.c_str());
      status[rep] = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
      std::vector<std::string> now;
      for (const auto& f : outputs) now.push_back(Slurp(f));
      if (rep == 0) {
        first = now;
      } else {
        for (size_t k = 0; k < outputs.size(); ++k) {
          ++files;
          if (now[k] != first[k] || now[k].empty()) {
            if (failure.empty()) failure = "differs or empty: " + outputs[k];
          }
        }
      }
    }
    if ((status[0] != 0 || status[1] != 0) && failure.empty()) {
      failure = "exit " + std::to_string(status[0]) + " for: " + args + " (" +
                Slurp(path("stderr.txt")) + ")";
    }
  }
  fs::remove_all(dir);
  Outcome o;
  o.pass = failure.empty();
  o.detail = std::to_string(commands.size()) + " commands run twice, " +
             std::to_string(files) + " output files compared" +
             Fmt(", %.1fs", Seconds(t));
  if (!failure.empty()) o.detail += "; " + failure;
  return o;
}

}  // namespace
}  // namespace qcmatch

int main() {
  using qcmatch::Outcome;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"constants suite", qcmatch::Criterion1},
      {"g-claims grid", qcmatch::Criterion2},
      {"split-inequality grid", qcmatch::Criterion3},
      {"proportional-distribution exactness", qcmatch::Criterion4},
      {"thinned-walk proposal marginals", qcmatch::Criterion5},
      {"exact-oracle lemma sweep", qcmatch::Criterion6},
      {"LP dominance and separation agreement", qcmatch::Criterion7},
      {"end-to-end ratios", qcmatch::Criterion8},
      {"star-family limit convergence", qcmatch::Criterion9},
      {"CLI determinism", qcmatch::Criterion10},
  };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
