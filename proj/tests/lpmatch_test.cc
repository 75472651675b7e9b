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

#include "qcmatch/lpmatch.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "qcmatch/rng.h"
#include "test_util.h"

namespace qcmatch {
namespace {

using testing::Graph;
using testing::Vec;

// Max over all vertices and all subsets of sum(x) - (1 - prod(1 - p)),
// floored at 0, by direct enumeration.
double BruteWorstViolation(const StochasticGraph& g, const Eigen::VectorXd& x) {
  double worst = 0.0;
  auto scan = [&](std::span<const int> adj) {
    const int d = static_cast<int>(adj.size());
    for (int mask = 1; mask < (1 << d); ++mask) {
      double sum = 0.0, miss = 1.0;
      for (int i = 0; i < d; ++i) {
        if (mask >> i & 1) {
          sum += x(adj[i]);
          miss *= 1.0 - g.edge(adj[i]).p;
        }
      }
      worst = std::max(worst, sum - (1.0 - miss));
    }
  };
  for (int v = 0; v < g.a_count(); ++v) scan(g.EdgesOfA(v));
  for (int u = 0; u < g.b_count(); ++u) scan(g.EdgesOfB(u));
  for (int e = 0; e < g.num_edges(); ++e) worst = std::max(worst, -x(e));
  return worst;
}

TEST(ConstraintRhs, SmallSets) {
  const StochasticGraph g = Graph(2, 1, {{0, 0, 1, 0.5}, {1, 0, 1, 0.5}});
  EXPECT_DOUBLE_EQ(ConstraintRhs(g, std::vector<int>{}), 0.0);
  EXPECT_DOUBLE_EQ(ConstraintRhs(g, std::vector<int>{0}), 0.5);
  EXPECT_DOUBLE_EQ(ConstraintRhs(g, std::vector<int>{0, 1}), 0.75);
  const StochasticGraph h = Graph(2, 2, {{0, 0, 1, 0.5}, {1, 1, 1, 0.5}});
  EXPECT_THROW(ConstraintRhs(h, std::vector<int>{0, 1}), LpError);
}

TEST(Separate, FeasibleHasNoViolation) {
  const StochasticGraph g = Graph(2, 1, {{0, 0, 1, 0.5}, {1, 0, 1, 0.5}});
  EXPECT_TRUE(Separate(g, Vec({0.375, 0.375})).empty());
}

TEST(Separate, PairIsMostViolated) {
  const StochasticGraph g = Graph(2, 1, {{0, 0, 1, 0.5}, {1, 0, 1, 0.5}});
  const Eigen::VectorXd x = Vec({0.5, 0.5});
  const auto sets = Separate(g, x);
  ASSERT_FALSE(sets.empty());
  const auto best = *std::max_element(
      sets.begin(), sets.end(),
      [](const ViolatedSet& l, const ViolatedSet& r) {
        return l.violation < r.violation;
      });
  EXPECT_EQ(best.vertex, (VertexRef{Side::kB, 0}));
  std::vector<int> edges = best.edges;
  std::sort(edges.begin(), edges.end());
  EXPECT_EQ(edges, (std::vector<int>{0, 1}));
  EXPECT_NEAR(best.violation, 0.25, 1e-12);
  EXPECT_NEAR(BruteWorstViolation(g, x), 0.25, 1e-12);
}

TEST(Separate, SingletonViolation) {
  const StochasticGraph g = Graph(2, 1, {{0, 0, 1, 0.5}, {1, 0, 1, 1.0}});
  const auto sets = Separate(g, Vec({0.6, 0.0}));
  ASSERT_FALSE(sets.empty());
  bool found = false;
  for (const auto& s : sets) {
    if (s.edges == std::vector<int>{0}) {
      found = true;
      EXPECT_NEAR(s.violation, 0.1, 1e-12);
    }
  }
  EXPECT_TRUE(found);
}

TEST(SolveLpMatch, SingleEdge) {
  const FractionalSolution sol = SolveLpMatch(Graph(1, 1, {{0, 0, 1, 0.5}}));
  EXPECT_NEAR(sol.x(0), 0.5, 1e-9);
  EXPECT_NEAR(sol.objective, 0.5, 1e-9);
}

TEST(SolveLpMatch, CertainStar) {
  const FractionalSolution sol =
      SolveLpMatch(Graph(2, 1, {{0, 0, 1, 1}, {1, 0, 1, 1}}));
  EXPECT_NEAR(sol.objective, 1.0, 1e-9);
  EXPECT_NEAR(sol.x.sum(), 1.0, 1e-9);
}

TEST(SolveLpMatch, HalfProbabilityStar) {
  const FractionalSolution sol =
      SolveLpMatch(Graph(2, 1, {{0, 0, 1, 0.5}, {1, 0, 1, 0.5}}));
  // Constraints: x1, x2 <= 0.5 and x1 + x2 <= 0.75.
  EXPECT_NEAR(sol.objective, 0.75, 1e-9);
  EXPECT_LE(sol.x(0), 0.5 + 1e-9);
  EXPECT_LE(sol.x(1), 0.5 + 1e-9);
}

TEST(SolveLpMatch, EmptyGraph) {
  const FractionalSolution sol = SolveLpMatch(StochasticGraph(2, 2, {}));
  EXPECT_EQ(sol.x.size(), 0);
  EXPECT_EQ(sol.objective, 0.0);
}

TEST(SolveLpMatch, RandomInstancesAreFeasibleAndConsistent) {
  GeneratorParams params;
  params.na = 4;
  params.nb = 4;
  params.density = 0.7;
  params.w_max = 5.0;
  for (int s = 0; s < 50; ++s) {
    const StochasticGraph g = GenerateInstance("uniform", params, s);
    const FractionalSolution sol = SolveLpMatch(g);
    const FeasibilityReport rep =
        CheckFeasibility(g, sol.x, FeasibilityMode::kExhaustive);
    EXPECT_TRUE(rep.feasible) << "seed " << s;
    EXPECT_LE(BruteWorstViolation(g, sol.x), kFeasibilityEps);
    double dot = 0.0;
    for (int e = 0; e < g.num_edges(); ++e) dot += sol.x(e) * g.edge(e).w;
    EXPECT_NEAR(sol.objective, dot, 1e-9);
  }
}

TEST(CheckFeasibility, TrivialCases) {
  const StochasticGraph g = Graph(1, 1, {{0, 0, 1, 0.3}});
  for (auto mode : {FeasibilityMode::kExhaustive, FeasibilityMode::kPrefix}) {
    EXPECT_TRUE(CheckFeasibility(g, Vec({0.0}), mode).feasible);
    const FeasibilityReport tight = CheckFeasibility(g, Vec({0.3}), mode);
    EXPECT_TRUE(tight.feasible);
    EXPECT_LE(tight.worst_violation, 1e-12);
  }
}

TEST(CheckFeasibility, PrefixMatchesExhaustiveAndBruteForce) {
  GeneratorParams params;
  params.na = 3;
  params.nb = 3;
  params.density = 0.9;
  for (int t = 0; t < 200; ++t) {
    const StochasticGraph g = GenerateInstance("uniform", params, 100 + t);
    CounterRng rng = DeriveStream(5, t, Stream::kVerify);
    Eigen::VectorXd x(g.num_edges());
    for (int e = 0; e < g.num_edges(); ++e) {
      x(e) = rng.Uniform() * g.edge(e).p * 0.9;
    }
    const auto ex = CheckFeasibility(g, x, FeasibilityMode::kExhaustive);
    const auto pre = CheckFeasibility(g, x, FeasibilityMode::kPrefix);
    EXPECT_NEAR(ex.worst_violation, pre.worst_violation, 1e-9);
    EXPECT_NEAR(ex.worst_violation, BruteWorstViolation(g, x), 1e-12);
    EXPECT_EQ(ex.feasible, pre.feasible);
  }
}

TEST(Solution, RoundTrip) {
  FractionalSolution sol;
  sol.x = Vec({0.25, 0.125});
  sol.objective = 0.375;
  const FractionalSolution back = LoadSolution(SaveSolution(sol), 2);
  EXPECT_EQ(back.x, sol.x);
  EXPECT_EQ(back.objective, sol.objective);
  EXPECT_THROW(LoadSolution(SaveSolution(sol), 3), std::exception);
  EXPECT_THROW(LoadSolution("[1,2", 2), std::exception);
}

}  // namespace
}  // namespace qcmatch
