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

#include "qcmatch/engine.h"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "qcmatch/lpmatch.h"
#include "qcmatch/rng.h"
#include "qcmatch/transform.h"
#include "test_util.h"

namespace qcmatch {
namespace {

using testing::Graph;
using testing::Vec;

struct Mean {
  double mean;
  double se;
};

Mean Simulate(const StochasticGraph& g, const Eigen::VectorXd& x,
              Algorithm alg, int trials, uint64_t seed,
              const TransformParams& params = {}) {
  const Simulator sim(g, x, alg, params);
  RunResult out;
  double sum = 0.0, sum_sq = 0.0;
  for (int t = 0; t < trials; ++t) {
    RealizationState state(g.num_edges(),
                           DeriveStream(seed, t, Stream::kRealization));
    CounterRng rng = DeriveStream(seed, t, Stream::kAlgorithm);
    sim.Run(state, rng, out, false);
    sum += out.weight;
    sum_sq += out.weight * out.weight;
  }
  const double mean = sum / trials;
  const double var = std::max(0.0, sum_sq / trials - mean * mean);
  return {mean, std::sqrt(var / trials)};
}

TEST(Algorithm, NamesRoundTrip) {
  for (Algorithm a : {Algorithm::kGreedy, Algorithm::kSimple, Algorithm::kAlg1,
                      Algorithm::kApx}) {
    EXPECT_EQ(ParseAlgorithm(ToString(a)), a);
  }
  EXPECT_THROW(ParseAlgorithm("best"), std::invalid_argument);
  EXPECT_EQ(ToString(EdgeStatus::kQueriedMatched), "queried-realized-matched");
  EXPECT_EQ(ToString(Branch::kTwoRound), "two-round");
}

TEST(Greedy, SingleCertainEdge) {
  const StochasticGraph g = Graph(1, 1, {{0, 0, 3, 1}});
  RealizationState state(1, CounterRng(1));
  CounterRng rng(2);
  const RunResult r = GreedyMatching(g, state, rng);
  EXPECT_EQ(r.matching, std::vector<int>{0});
  EXPECT_EQ(r.weight, 3.0);
  EXPECT_EQ(r.edge_log[0], EdgeStatus::kQueriedMatched);
}

TEST(Greedy, HeavierEdgeBlocksLighter) {
  const StochasticGraph g = Graph(2, 1, {{0, 0, 1, 1}, {1, 0, 2, 1}});
  RealizationState state(2, CounterRng(1));
  CounterRng rng(2);
  const RunResult r = GreedyMatching(g, state, rng);
  EXPECT_EQ(r.matching, std::vector<int>{1});
  EXPECT_EQ(r.weight, 2.0);
  EXPECT_EQ(r.edge_log[0], EdgeStatus::kUnexamined);
  EXPECT_FALSE(CheckQueryCommit(g, r).has_value());
}

TEST(Greedy, PathExpectation) {
  // a0-b0-a1 with p = 0.5 each. Enumerating the four realizations: edge 0
  // alone, edge 1 alone or both give weight 1, none gives 0.
  const StochasticGraph g = Graph(2, 1, {{0, 0, 1, 0.5}, {1, 0, 1, 0.5}});
  double exact = 0.0;
  for (int mask = 0; mask < 4; ++mask) exact += 0.25 * (mask != 0);
  EXPECT_DOUBLE_EQ(exact, 0.75);
  const Mean m = Simulate(g, Eigen::VectorXd(), Algorithm::kGreedy, 200'000, 4);
  EXPECT_NEAR(m.mean, exact, 4 * m.se);
}

TEST(Simple, CertainStarMatchesWithThreeQuarters) {
  const StochasticGraph g = Graph(2, 1, {{0, 0, 1, 1}, {1, 0, 1, 1}});
  // Each A vertex proposes with probability 0.5 independently.
  const double exact = 1.0 - 0.5 * 0.5;
  const Mean m = Simulate(g, Vec({0.5, 0.5}), Algorithm::kSimple, 200'000, 5);
  EXPECT_NEAR(m.mean, exact, 4 * m.se);
}

TEST(Simple, EmptyAndCertainEdges) {
  const StochasticGraph empty(2, 2, {});
  RealizationState s0(0, CounterRng(1));
  CounterRng rng(1);
  EXPECT_TRUE(SimpleMatching(empty, Eigen::VectorXd(), s0, rng).matching.empty());
  const StochasticGraph one = Graph(1, 1, {{0, 0, 1, 1}});
  for (int t = 0; t < 100; ++t) {
    RealizationState s(1, CounterRng(t));
    CounterRng r(t + 1000);
    EXPECT_EQ(SimpleMatching(one, Vec({1.0}), s, r).weight, 1.0);
  }
}

TEST(Alg1, SingleEdgeMatchesAtOneMinusInvE) {
  const StochasticGraph g = Graph(1, 1, {{0, 0, 1, 1}});
  const Mean m = Simulate(g, Vec({1.0}), Algorithm::kAlg1, 400'000, 6);
  EXPECT_NEAR(m.mean, 1.0 - std::exp(-1.0), 4 * m.se);
}

TEST(Alg1, DummyPaddingBlocksWithGapProbability) {
  // One real edge with x = 0.4; the dummy fills the remaining 0.6 and
  // proposes with probability g(0.6, 1). Independent proposals, random order.
  const StochasticGraph g = Graph(1, 1, {{0, 0, 1, 1}});
  const double ge = G(0.4, 1.0);
  const double gd = G(0.6, 1.0);
  const double exact = ge * (1.0 - gd) + ge * gd * 0.5;
  const Mean m = Simulate(g, Vec({0.4}), Algorithm::kAlg1, 400'000, 7);
  EXPECT_NEAR(m.mean, exact, 4 * m.se);
}

TEST(Apx, BranchSelection) {
  const StochasticGraph one = Graph(1, 1, {{0, 0, 1, 1}});
  const Simulator two(one, Vec({1.0}), Algorithm::kApx, {});
  EXPECT_EQ(two.branch(), Branch::kTwoRound);
  EXPECT_NEAR(two.light_mass(), 1.0, 1e-15);

  const StochasticGraph heavy =
      Graph(3, 3, {{0, 0, 1, 0.1}, {1, 1, 1, 0.1}, {2, 2, 1, 0.1}});
  const Simulator prune(heavy, Vec({0.1, 0.1, 0.1}), Algorithm::kApx, {});
  EXPECT_EQ(prune.branch(), Branch::kPrune);
  EXPECT_EQ(prune.light_mass(), 0.0);
  EXPECT_NEAR(prune.round_sigma(), Rho(kDefaultTau), 1e-15);
  TransformParams no_lambda;
  no_lambda.lambda = 0.0;
  const Simulator forced(heavy, Vec({0.1, 0.1, 0.1}), Algorithm::kApx,
                         no_lambda);
  EXPECT_EQ(forced.branch(), Branch::kTwoRound);
}

TEST(Apx, RejectsInvalidParams) {
  const StochasticGraph g = Graph(1, 1, {{0, 0, 1, 1}});
  TransformParams p;
  p.lambda = 1.5;
  EXPECT_THROW(Simulator(g, Vec({1.0}), Algorithm::kApx, p),
               std::invalid_argument);
}

class QueryCommitSweep : public ::testing::TestWithParam<Algorithm> {};

TEST_P(QueryCommitSweep, RunsRespectQueryCommit) {
  GeneratorParams params;
  params.na = 4;
  params.nb = 4;
  params.density = 0.6;
  params.w_max = 4.0;
  for (int s = 0; s < 15; ++s) {
    const StochasticGraph g = GenerateInstance(
        s % 3 == 2 ? "small-x-high-ratio" : "uniform", params, s);
    const FractionalSolution sol = SolveLpMatch(g);
    const Simulator sim(g, sol.x, GetParam(), {});
    RunResult r;
    for (int t = 0; t < 200; ++t) {
      RealizationState state(g.num_edges(),
                             DeriveStream(s, t, Stream::kRealization));
      CounterRng rng = DeriveStream(s, t, Stream::kAlgorithm);
      sim.Run(state, rng, r, true);
      const auto problem = CheckQueryCommit(g, r);
      ASSERT_FALSE(problem.has_value()) << *problem;
      std::set<int> a_used, b_used;
      double w = 0.0;
      for (int e : r.matching) {
        EXPECT_TRUE(a_used.insert(g.edge(e).a).second);
        EXPECT_TRUE(b_used.insert(g.edge(e).b).second);
        EXPECT_EQ(r.edge_log[e], EdgeStatus::kQueriedMatched);
        EXPECT_EQ(state.Peek(e), Realization::kRealized);
        w += g.edge(e).w;
      }
      EXPECT_DOUBLE_EQ(r.weight, w);
      for (int e : AvailableEdges(g, r)) {
        EXPECT_FALSE(r.Examined(e));
        EXPECT_FALSE(r.a_matched[g.edge(e).a]);
        EXPECT_FALSE(r.b_matched[g.edge(e).b]);
      }
    }
  }
}

INSTANTIATE_TEST_SUITE_P(All, QueryCommitSweep,
                         ::testing::Values(Algorithm::kGreedy,
                                           Algorithm::kSimple,
                                           Algorithm::kAlg1, Algorithm::kApx),
                         [](const auto& info) {
                           return std::string(ToString(info.param));
                         });

TEST(CheckQueryCommit, DetectsTampering) {
  const StochasticGraph g = Graph(2, 1, {{0, 0, 1, 1}, {1, 0, 2, 1}});
  RealizationState state(2, CounterRng(1));
  CounterRng rng(2);
  RunResult r = GreedyMatching(g, state, rng);
  ASSERT_FALSE(CheckQueryCommit(g, r).has_value());
  RunResult both = r;
  both.matching = {0, 1};
  EXPECT_TRUE(CheckQueryCommit(g, both).has_value());
  RunResult query_late = r;
  query_late.query_order.push_back({0, 0, 0, Action::kQuery, true, 1});
  query_late.edge_log[0] = EdgeStatus::kQueriedMatched;
  query_late.rounds[0] = 1;
  EXPECT_TRUE(CheckQueryCommit(g, query_late).has_value());
  RunResult weight = r;
  weight.weight = 5.0;
  EXPECT_TRUE(CheckQueryCommit(g, weight).has_value());
}

TEST(AvailableEdges, NothingExaminedMeansEverything) {
  const StochasticGraph g = Graph(2, 2, {{0, 0, 1, 1}, {1, 1, 1, 1}, {0, 1, 1, 1}});
  RunResult r;
  r.edge_log.assign(3, EdgeStatus::kUnexamined);
  r.a_matched.assign(2, false);
  r.b_matched.assign(2, false);
  EXPECT_EQ(AvailableEdges(g, r), (std::vector<int>{0, 1, 2}));
  r.edge_log[0] = EdgeStatus::kQueriedMatched;
  r.a_matched[0] = r.b_matched[0] = true;
  EXPECT_EQ(AvailableEdges(g, r), std::vector<int>{1});
}

TEST(Simulator, SameSeedSameRun) {
  GeneratorParams params;
  params.na = 5;
  params.nb = 5;
  const StochasticGraph g = GenerateInstance("uniform", params, 3);
  const FractionalSolution sol = SolveLpMatch(g);
  const Simulator sim(g, sol.x, Algorithm::kApx, {});
  RunResult a, b;
  for (int t = 0; t < 50; ++t) {
    RealizationState s1(g.num_edges(), DeriveStream(1, t, Stream::kRealization));
    RealizationState s2(g.num_edges(), DeriveStream(1, t, Stream::kRealization));
    CounterRng r1 = DeriveStream(1, t, Stream::kAlgorithm);
    CounterRng r2 = DeriveStream(1, t, Stream::kAlgorithm);
    sim.Run(s1, r1, a);
    sim.Run(s2, r2, b);
    EXPECT_EQ(a.matching, b.matching);
    EXPECT_EQ(a.edge_log, b.edge_log);
    EXPECT_EQ(a.query_order.size(), b.query_order.size());
  }
}

}  // namespace
}  // namespace qcmatch
