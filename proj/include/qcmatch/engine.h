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

// Query-commit rounding algorithms. Examining an edge flips its (memoized)
// coin. When both endpoints are free the examination is a query and a
// realized edge is committed; otherwise it is a coin flip with no effect on
// the matching.
//
// Dummy padding edges are handled implicitly: the dummy A vertex attached to
// B vertex u proposes to u with probability g(gap_u, sigma), which is the
// marginal its one-edge distribution produces. Dummy proposals block u but
// never appear in the matching.

#ifndef QCMATCH_ENGINE_H_
#define QCMATCH_ENGINE_H_

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qcmatch/instance.h"
#include "qcmatch/permdist.h"
#include "qcmatch/rng.h"
#include "qcmatch/transform.h"

namespace qcmatch {

enum class Algorithm { kGreedy, kSimple, kAlg1, kApx };

std::string_view ToString(Algorithm algorithm);
// Throws std::invalid_argument on unknown names.
Algorithm ParseAlgorithm(std::string_view name);

enum class EdgeStatus : int8_t {
  kUnexamined,
  kQueriedMatched,
  kQueriedNotRealized,
  kCoinflipRealized,
  kCoinflipNotRealized,
};

std::string_view ToString(EdgeStatus status);

enum class Action : int8_t { kQuery, kCoinflip };

struct ExamineEvent {
  int edge = -1;  // -1 for a dummy edge
  int a = -1;     // -1 for a dummy A vertex
  int b = 0;
  Action action = Action::kQuery;
  bool realized = false;
  int8_t round = 1;
};

enum class Branch { kNone, kTwoRound, kPrune };

std::string_view ToString(Branch branch);

struct RunResult {
  std::vector<int> matching;  // ascending ids, dummy edges excluded
  double weight = 0.0;
  std::vector<EdgeStatus> edge_log;  // original edges only
  std::vector<ExamineEvent> query_order;
  std::vector<int8_t> rounds;  // round that examined the edge, 0 if none
  std::vector<bool> a_matched;
  std::vector<bool> b_matched;  // includes blocking by dummy edges
  Branch branch = Branch::kNone;

  bool Examined(int e) const { return edge_log[e] != EdgeStatus::kUnexamined; }
};

struct AlgorithmConfig {
  Algorithm algorithm = Algorithm::kApx;
  TransformParams params;
  uint64_t seed = 0;
};

// Precomputes everything that does not depend on randomness (distributions,
// transformed values, the APX branch) so repeated trials are cheap. Run() is
// safe to call concurrently with distinct state, rng and result objects.
class Simulator {
 public:
  Simulator(const StochasticGraph& graph, const Eigen::VectorXd& x,
            Algorithm algorithm, const TransformParams& params);
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  // With record_events false, query_order is left empty.
  void Run(RealizationState& state, CounterRng& rng, RunResult& out,
           bool record_events = true) const;

  Algorithm algorithm() const { return algorithm_; }
  Branch branch() const { return branch_; }
  // Light-edge LP mass and total LP mass (apx only).
  double light_mass() const { return light_mass_; }
  double lp_mass() const { return lp_mass_; }
  // Sigma used by the single-round algorithms (alg1, apx prune branch).
  double round_sigma() const;

 private:
  struct Plan;
  struct Scratch;

  void Reset(RunResult& out, bool record_events) const;
  void RunGreedy(RealizationState& state, RunResult& out,
                 bool record_events) const;
  void RunRound(const Plan& plan, const std::vector<uint64_t>& masks,
                const std::vector<double>& dummy_prop, int8_t round,
                RealizationState& state, CounterRng& rng, RunResult& out,
                Scratch& scratch, bool record_events) const;
  std::unique_ptr<Plan> MakePlan(const Eigen::VectorXd& x, double sigma,
                                 bool thin) const;

  const StochasticGraph& graph_;
  Eigen::VectorXd x_;
  Algorithm algorithm_;
  TransformParams params_;
  Branch branch_ = Branch::kNone;
  double light_mass_ = 0.0;
  double lp_mass_ = 0.0;
  std::unique_ptr<Plan> plan_;
};

RunResult GreedyMatching(const StochasticGraph& graph,
                         RealizationState& state, CounterRng& rng);
RunResult SimpleMatching(const StochasticGraph& graph, const Eigen::VectorXd& x,
                         RealizationState& state, CounterRng& rng);
RunResult Alg1(const StochasticGraph& graph, const Eigen::VectorXd& x,
               double sigma, RealizationState& state, CounterRng& rng);
RunResult ApxMatching(const StochasticGraph& graph, const Eigen::VectorXd& x,
                      const TransformParams& params, RealizationState& state,
                      CounterRng& rng);

// Unexamined original edges whose endpoints are both unmatched.
std::vector<int> AvailableEdges(const StochasticGraph& graph,
                                const RunResult& run);

// Replays query_order and checks the query-commit rules. Returns a
// description of the first inconsistency, or nullopt.
std::optional<std::string> CheckQueryCommit(const StochasticGraph& graph,
                                            const RunResult& run);

}  // namespace qcmatch

#endif  // QCMATCH_ENGINE_H_
