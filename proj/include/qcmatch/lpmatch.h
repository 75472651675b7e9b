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

// The matching relaxation with one constraint per vertex u and edge subset
// F of E_u:
//
//   sum_{e in F} x_e <= 1 - prod_{e in F} (1 - p_e),   x >= 0,
//
// maximized against the edge weights. Solved by cutting planes. For a fixed
// vertex the most violated F is a prefix of E_u sorted by x_e / p_e
// descending: at a maximizer every member has x_e / p_e >= prod over the
// rest of (1 - p) >= x_f / p_f for every non-member f. So separation only
// scans deg(u) prefixes.

#ifndef QCMATCH_LPMATCH_H_
#define QCMATCH_LPMATCH_H_

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qcmatch/instance.h"

namespace qcmatch {

inline constexpr double kFeasibilityEps = 1e-9;

class LpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VertexConstraint {
  VertexRef vertex;
  std::vector<int> edges;  // ascending edge ids
};

struct FractionalSolution {
  Eigen::VectorXd x;
  double objective = 0.0;
  std::vector<VertexConstraint> generated_constraints;
  int rounds = 0;
};

struct ViolatedSet {
  VertexRef vertex;
  std::vector<int> edges;  // in ratio order
  double violation = 0.0;
};

enum class FeasibilityMode { kExhaustive, kPrefix };

struct FeasibilityReport {
  bool feasible = true;
  // max(0, max_F sum_F x - rhs(F)); the empty set contributes 0.
  double worst_violation = 0.0;
  VertexRef witness_vertex;
  std::vector<int> witness_set;
  FeasibilityMode mode = FeasibilityMode::kExhaustive;
};

// 1 - prod_{e in F}(1 - p_e). Throws LpError if F does not share an endpoint.
double ConstraintRhs(const StochasticGraph& graph, std::span<const int> edges);

// Every violated (vertex, ratio-sorted prefix); ties broken by edge id.
std::vector<ViolatedSet> Separate(const StochasticGraph& graph,
                                  const Eigen::VectorXd& x,
                                  double eps = kFeasibilityEps);

FractionalSolution SolveLpMatch(const StochasticGraph& graph);

// Exhaustive mode enumerates all 2^deg subsets and refuses degree > 20.
FeasibilityReport CheckFeasibility(const StochasticGraph& graph,
                                   const Eigen::VectorXd& x,
                                   FeasibilityMode mode,
                                   double eps = kFeasibilityEps);

// {"objective": float, "x": [float, ...]} indexed by edge id.
std::string SaveSolution(const FractionalSolution& solution);
FractionalSolution LoadSolution(std::string_view text, int num_edges);
FractionalSolution LoadSolutionFile(const std::string& path, int num_edges);

std::string_view ToString(FeasibilityMode mode);

}  // namespace qcmatch

#endif  // QCMATCH_LPMATCH_H_
