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

// Ground truth for tiny instances: the offline optimum, exact event
// probabilities of one proposal round, and seeded Monte Carlo estimates.
//
// The exact enumeration uses the structure of a proposal round. Each A
// vertex's behaviour (which edges it examines, which edge it proposes on) is
// independent of everything else, so its local outcomes are enumerated
// separately. Given all proposals, a B vertex accepts the earliest proposer
// in the uniformly random A order. For disjoint proposer sets the earliest
// members are independent and uniform, so the round is resolved by picking
// one uniform winner per B vertex instead of enumerating orders.

#ifndef QCMATCH_ORACLE_H_
#define QCMATCH_ORACLE_H_

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qcmatch/engine.h"
#include "qcmatch/instance.h"

namespace qcmatch {

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MatchingResult {
  std::vector<int> edges;  // ascending ids
  double weight = 0.0;
};

// Exact maximum-weight matching over the listed edges of `graph`, by dynamic
// programming over subsets of the smaller side (at most 20 vertices touched).
MatchingResult MaxWeightMatching(const StochasticGraph& graph,
                                 const std::vector<int>& edges);

// E[max-weight matching of the realized subgraph]. Enumerates all 2^|E|
// realizations; throws OracleError when |E| > max_edges.
double ExpectedOptExact(const StochasticGraph& graph, int max_edges = 20);

// One joint outcome of a proposal round on the dummy-augmented instance.
// Vertex and edge ids past the original ranges are dummies.
class ExactWorld {
 public:
  ExactWorld(const StochasticGraph& augmented, int original_edges,
             const std::vector<int>& proposal,
             const std::vector<char>& examined,
             const std::vector<int>& winner)
      : graph_(augmented),
        original_edges_(original_edges),
        proposal_(proposal),
        examined_(examined),
        winner_(winner) {}

  bool Examined(int e) const { return examined_[e] != 0; }
  // v proposed on an edge to u.
  bool Proposes(int v, int u) const {
    return proposal_[v] >= 0 && graph_.edge(proposal_[v]).b == u;
  }
  bool Proposed(int v) const { return proposal_[v] >= 0; }
  // v proposed to u but another proposer reached u first.
  bool LateProposal(int v, int u) const {
    return Proposes(v, u) && winner_[u] != v;
  }
  bool BUnmatched(int u) const { return winner_[u] < 0; }
  bool AUnmatched(int v) const {
    return proposal_[v] < 0 || winner_[graph_.edge(proposal_[v]).b] != v;
  }
  bool Matched(int e) const {
    const Edge& edge = graph_.edge(e);
    return proposal_[edge.a] == e && winner_[edge.b] == edge.a;
  }
  // Unexamined with both endpoints unmatched.
  bool Available(int e) const {
    const Edge& edge = graph_.edge(e);
    return !Examined(e) && AUnmatched(edge.a) && BUnmatched(edge.b);
  }
  const StochasticGraph& graph() const { return graph_; }
  int original_edges() const { return original_edges_; }

 private:
  const StochasticGraph& graph_;
  int original_edges_;
  const std::vector<int>& proposal_;
  const std::vector<char>& examined_;
  const std::vector<int>& winner_;
};

using WorldPredicate = std::function<bool(const ExactWorld&)>;

struct EventQuery {
  std::string name;
  WorldPredicate target;
  WorldPredicate condition;  // empty means unconditional
};

struct EventValue {
  std::string name;
  double joint_mass = 0.0;
  double condition_mass = 0.0;
  // Conditional probability; nullopt when condition_mass < 1e-12.
  std::optional<double> value;
};

struct ExactEventReport {
  // Per original edge.
  Eigen::VectorXd matched;
  Eigen::VectorXd examined;
  Eigen::VectorXd available;
  Eigen::VectorXd proposed;
  // Per original vertex; B includes blocking by dummies.
  Eigen::VectorXd a_unmatched;
  Eigen::VectorXd b_unmatched;
  double expected_weight = 0.0;
  double total_mass = 0.0;
  std::vector<EventValue> events;
  int64_t nodes = 0;
};

inline constexpr double kUndefinedConditionMass = 1e-12;

struct ExactOptions {
  // kAlg1 pads with dummies and thins with g(., sigma); kSimple does
  // neither.
  Algorithm algorithm = Algorithm::kAlg1;
  double sigma = 1.0;
  int64_t node_budget = 100'000'000;
};

// Throws OracleError when the enumeration exceeds the node budget.
ExactEventReport ExactEventProbabilities(const StochasticGraph& graph,
                                         const Eigen::VectorXd& x,
                                         const ExactOptions& options,
                                         const std::vector<EventQuery>& queries);

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int64_t trials = 0;
  uint64_t seed = 0;
  // Per edge: fraction of trials with the edge in the matching.
  std::vector<double> edge_frequency;
  Branch branch = Branch::kNone;
};

// Trial t uses streams derived from (seed, t), so the result does not depend
// on the thread count. Per-trial weights are combined by pairwise summation
// in trial order.
MonteCarloEstimate RunMonteCarlo(const StochasticGraph& graph,
                                 const Eigen::VectorXd& x,
                                 const AlgorithmConfig& config, int64_t trials,
                                 int threads = 1);

// Pairwise (cascade) summation in index order.
double PairwiseSum(const double* values, size_t n);

}  // namespace qcmatch

#endif  // QCMATCH_ORACLE_H_
