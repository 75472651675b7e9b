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

#include "qcmatch/permdist.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "qcmatch/lpmatch.h"
#include "qcmatch/simplex.h"

namespace qcmatch {

namespace {

constexpr double kMarginalTolerance = 1e-7;
constexpr double kDropMass = 1e-15;

// Every ordered subset of {0, ..., s-1}, empty sequence first.
void EnumerateSequences(int s, std::vector<int>& current,
                        std::vector<bool>& used,
                        std::vector<std::vector<int>>& out) {
  out.push_back(current);
  for (int i = 0; i < s; ++i) {
    if (used[i]) continue;
    used[i] = true;
    current.push_back(i);
    EnumerateSequences(s, current, used, out);
    current.pop_back();
    used[i] = false;
  }
}

void FinishCumulative(PermDistribution& dist) {
  dist.cumulative.resize(dist.probs.size());
  std::partial_sum(dist.probs.begin(), dist.probs.end(),
                   dist.cumulative.begin());
}

std::string Witness(const StochasticGraph& graph, int v,
                    const Eigen::VectorXd& x) {
  const FeasibilityReport report =
      CheckFeasibility(graph, x, FeasibilityMode::kPrefix);
  std::string out = "worst violation " + std::to_string(report.worst_violation);
  if (!report.witness_set.empty()) {
    out += " at " + ToString(report.witness_vertex) + " on edges {";
    for (size_t i = 0; i < report.witness_set.size(); ++i) {
      out += (i ? "," : "") + std::to_string(report.witness_set[i]);
    }
    out += "}";
  }
  return out + " (vertex a" + std::to_string(v) + ")";
}

}  // namespace

int PermDistribution::SampleIndex(CounterRng& rng) const {
  if (cumulative.size() == 1) return 0;
  const double u = rng.Uniform() * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return static_cast<int>(
      std::min<ptrdiff_t>(it - cumulative.begin(), cumulative.size() - 1));
}

PermDistribution BuildProportionalDistribution(const StochasticGraph& graph,
                                               int v,
                                               const Eigen::VectorXd& x,
                                               int degree_cap) {
  PermDistribution dist;
  dist.vertex = v;
  for (int e : graph.EdgesOfA(v)) {
    if (x(e) > 0.0) dist.edges.push_back(e);
  }
  const int s = static_cast<int>(dist.edges.size());
  if (s > degree_cap) {
    throw PermDistError("vertex a" + std::to_string(v) + " has support " +
                        std::to_string(s) + " above the degree cap " +
                        std::to_string(degree_cap));
  }
  dist.targets.resize(s);
  for (int i = 0; i < s; ++i) dist.targets(i) = x(dist.edges[i]);

  if (s == 0) {
    dist.perms = {{}};
    dist.probs = {1.0};
    FinishCumulative(dist);
    return dist;
  }
  if (s == 1) {
    const int e = dist.edges[0];
    const double q = x(e) / graph.edge(e).p;
    if (q > 1.0 + kMarginalTolerance) {
      throw PermDistError("unreachable marginals: " + Witness(graph, v, x));
    }
    dist.perms.push_back({e});
    dist.probs.push_back(std::min(q, 1.0));
    if (q < 1.0) {
      dist.perms.push_back({});
      dist.probs.push_back(1.0 - q);
    }
    FinishCumulative(dist);
    return dist;
  }

  std::vector<std::vector<int>> sequences;
  std::vector<int> current;
  std::vector<bool> used(s, false);
  EnumerateSequences(s, current, used, sequences);
  const Eigen::Index cols = static_cast<Eigen::Index>(sequences.size());

  // Row i < s: first-realized probability of support edge i. Row s: mass.
  LinearProgram<double> lp(cols);
  lp.eq_matrix = Eigen::MatrixXd::Zero(s + 1, cols);
  lp.eq_rhs.resize(s + 1);
  for (Eigen::Index j = 0; j < cols; ++j) {
    double reach = 1.0;
    for (int i : sequences[j]) {
      const double p = graph.edge(dist.edges[i]).p;
      lp.eq_matrix(i, j) = reach * p;
      reach *= 1.0 - p;
    }
    lp.eq_matrix(s, j) = 1.0;
  }
  lp.eq_rhs.head(s) = dist.targets;
  lp.eq_rhs(s) = 1.0;

  SimplexOptions<double> options;
  options.feasibility_tolerance = kMarginalTolerance;
  const LpSolution<double> solution = SolveLinearProgram(lp, options);
  if (solution.status != LpStatus::kOptimal) {
    throw PermDistError("unreachable marginals: " + Witness(graph, v, x));
  }

  // Column 0 is the empty sequence; it absorbs the rounding slack.
  double nonempty = 0.0;
  for (Eigen::Index j = 1; j < cols; ++j) {
    if (solution.x(j) <= kDropMass) continue;
    std::vector<int> perm;
    for (int i : sequences[j]) perm.push_back(dist.edges[i]);
    dist.perms.push_back(std::move(perm));
    dist.probs.push_back(solution.x(j));
    nonempty += solution.x(j);
  }
  if (nonempty < 1.0) {
    dist.perms.push_back({});
    dist.probs.push_back(1.0 - nonempty);
  } else if (nonempty > 1.0) {
    for (double& q : dist.probs) q /= nonempty;
  }
  FinishCumulative(dist);

  const Eigen::VectorXd reached = FirstRealizedMarginals(dist, graph);
  const double error = (reached - dist.targets).cwiseAbs().maxCoeff();
  if (error > kMarginalTolerance) {
    throw PermDistError("distribution misses its targets by " +
                        std::to_string(error) + ": " + Witness(graph, v, x));
  }
  return dist;
}

Eigen::VectorXd FirstRealizedMarginals(const PermDistribution& dist,
                                       const StochasticGraph& graph) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dist.edges.size());
  for (size_t j = 0; j < dist.perms.size(); ++j) {
    double reach = dist.probs[j];
    for (int e : dist.perms[j]) {
      const auto pos = std::lower_bound(dist.edges.begin(), dist.edges.end(), e);
      const double p = graph.edge(e).p;
      out(pos - dist.edges.begin()) += reach * p;
      reach *= 1.0 - p;
    }
  }
  return out;
}

void DrawModifiedPermInto(const PermDistribution& dist,
                          const Eigen::VectorXd& x,
                          const Eigen::VectorXd& x_tilde,
                          const StochasticGraph& graph, CounterRng& rng,
                          std::vector<int>& out) {
  out.clear();
  for (int e : dist.Sample(rng)) {
    const double xe = x(e);
    const double xt = x_tilde(e);
    if (xt > xe + 1e-12) {
      throw PermDistError("x_tilde exceeds x on edge " + std::to_string(e));
    }
    const double keep = xe > 0.0 ? std::min(xt / xe, 1.0) : 0.0;
    const double stop = graph.edge(e).p * (1.0 - keep);
    const double c = rng.Uniform();
    if (c < stop) break;
    if (c < stop + keep) out.push_back(e);
  }
}

std::vector<int> DrawModifiedPerm(const PermDistribution& dist,
                                  const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& x_tilde,
                                  const StochasticGraph& graph,
                                  CounterRng& rng) {
  std::vector<int> out;
  DrawModifiedPermInto(dist, x, x_tilde, graph, rng, out);
  return out;
}

DistributionCache::DistributionCache(const StochasticGraph& graph,
                                     const Eigen::VectorXd& x, int degree_cap)
    : graph_(graph),
      x_(x),
      degree_cap_(degree_cap),
      full_support_(graph.a_count(), 0),
      entries_(graph.a_count()) {
  for (int v = 0; v < graph.a_count(); ++v) {
    const auto edges = graph.EdgesOfA(v);
    if (edges.size() > 64) {
      throw PermDistError("vertex a" + std::to_string(v) +
                          " has more than 64 edges");
    }
    for (size_t i = 0; i < edges.size(); ++i) {
      if (x(edges[i]) > 0.0) full_support_[v] |= uint64_t{1} << i;
    }
  }
}

std::shared_ptr<const PermDistribution> DistributionCache::Get(
    int v, uint64_t support_mask) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_[v].find(support_mask);
    if (it != entries_[v].end()) return it->second;
  }
  const auto edges = graph_.EdgesOfA(v);
  Eigen::VectorXd restricted = Eigen::VectorXd::Zero(x_.size());
  for (size_t i = 0; i < edges.size(); ++i) {
    if (support_mask >> i & 1) restricted(edges[i]) = x_(edges[i]);
  }
  auto dist = std::make_shared<const PermDistribution>(
      BuildProportionalDistribution(graph_, v, restricted, degree_cap_));
  std::lock_guard<std::mutex> lock(mu_);
  return entries_[v].emplace(support_mask, std::move(dist)).first->second;
}

}  // namespace qcmatch
