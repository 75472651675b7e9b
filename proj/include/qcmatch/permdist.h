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

// Distributions over ordered edge subsets of one A vertex such that, when
// the edges are examined in order and the walk stops at the first realized
// one, edge e is that edge with probability exactly x_e.

#ifndef QCMATCH_PERMDIST_H_
#define QCMATCH_PERMDIST_H_

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "qcmatch/instance.h"
#include "qcmatch/rng.h"

namespace qcmatch {

inline constexpr int kDefaultDegreeCap = 7;

class PermDistError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PermDistribution {
  int vertex = 0;
  // Edges with x_e > 0, ascending id; targets is aligned with it.
  std::vector<int> edges;
  Eigen::VectorXd targets;
  std::vector<std::vector<int>> perms;
  std::vector<double> probs;
  // Running sums of probs for sampling.
  std::vector<double> cumulative;

  // Index into perms.
  int SampleIndex(CounterRng& rng) const;
  const std::vector<int>& Sample(CounterRng& rng) const {
    return perms[SampleIndex(rng)];
  }
};

// Solves a feasibility LP over every ordering of every subset of the support
// of x at v. `x` is indexed by edge id. Throws PermDistError when the support
// exceeds `degree_cap` or the marginals are unreachable (x violates a vertex
// constraint at v).
PermDistribution BuildProportionalDistribution(
    const StochasticGraph& graph, int v, const Eigen::VectorXd& x,
    int degree_cap = kDefaultDegreeCap);

// Probability that each edge of dist.edges is the first realized one.
Eigen::VectorXd FirstRealizedMarginals(const PermDistribution& dist,
                                       const StochasticGraph& graph);

// Samples a base permutation and thins it: with r = x_tilde / x, each edge
// ends the walk with probability p (1 - r), is kept with probability r, and
// is skipped otherwise. Examining the result in order and stopping at the
// first realized edge stops at e with probability x_tilde_e. Vectors are
// indexed by edge id.
std::vector<int> DrawModifiedPerm(const PermDistribution& dist,
                                  const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& x_tilde,
                                  const StochasticGraph& graph,
                                  CounterRng& rng);

// Allocation-free variant writing into `out`.
void DrawModifiedPermInto(const PermDistribution& dist,
                          const Eigen::VectorXd& x,
                          const Eigen::VectorXd& x_tilde,
                          const StochasticGraph& graph, CounterRng& rng,
                          std::vector<int>& out);

// Distributions keyed by (A vertex, support subset) for a fixed x.
// Thread-safe.
class DistributionCache {
 public:
  DistributionCache(const StochasticGraph& graph, const Eigen::VectorXd& x,
                    int degree_cap = kDefaultDegreeCap);

  // `support_mask` selects positions within graph.EdgesOfA(v); only edges
  // with x_e > 0 should be set.
  std::shared_ptr<const PermDistribution> Get(int v, uint64_t support_mask);

  // The mask of all edges at v with x_e > 0.
  uint64_t FullSupport(int v) const { return full_support_[v]; }

 private:
  const StochasticGraph& graph_;
  Eigen::VectorXd x_;
  int degree_cap_;
  std::vector<uint64_t> full_support_;
  std::mutex mu_;
  std::vector<std::unordered_map<uint64_t,
                                 std::shared_ptr<const PermDistribution>>>
      entries_;
};

}  // namespace qcmatch

#endif  // QCMATCH_PERMDIST_H_
