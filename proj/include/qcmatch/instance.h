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

// Stochastic bipartite instances: edges carry a weight and an independent
// existence probability. Edge ids are positions in the edge list and index
// every per-edge vector in the library.

#ifndef QCMATCH_INSTANCE_H_
#define QCMATCH_INSTANCE_H_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qcmatch/rng.h"

namespace qcmatch {

class InstanceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Edge {
  int id = 0;
  int a = 0;
  int b = 0;
  double w = 0.0;
  double p = 1.0;
  bool is_dummy = false;
};

enum class Side { kA, kB };

struct VertexRef {
  Side side = Side::kA;
  int index = 0;

  friend bool operator==(const VertexRef&, const VertexRef&) = default;
  friend auto operator<=>(const VertexRef&, const VertexRef&) = default;
};

std::string ToString(VertexRef v);

// Immutable after construction; safe to share across concurrent trials.
class StochasticGraph {
 public:
  StochasticGraph() = default;

  // Validates every invariant and throws InstanceError naming the offending
  // edge. Edge ids are reassigned from list order.
  StochasticGraph(int a_count, int b_count, std::vector<Edge> edges);

  int a_count() const { return a_count_; }
  int b_count() const { return b_count_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int id) const { return edges_[id]; }

  // Incident edge ids in ascending id order.
  std::span<const int> EdgesOfA(int v) const { return a_adj_[v]; }
  std::span<const int> EdgesOfB(int u) const { return b_adj_[u]; }
  std::span<const int> EdgesOf(VertexRef v) const {
    return v.side == Side::kA ? EdgesOfA(v.index) : EdgesOfB(v.index);
  }

  int MaxDegree() const;
  int NumOriginalEdges() const;

 private:
  int a_count_ = 0;
  int b_count_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> a_adj_;
  std::vector<std::vector<int>> b_adj_;
};

// JSON: {"a_count": int, "b_count": int, "edges": [{"a","b","w","p"}, ...]}.
StochasticGraph LoadInstance(std::string_view text);
StochasticGraph LoadInstanceFile(const std::string& path);
std::string SaveInstance(const StochasticGraph& graph);

struct GeneratorParams {
  int na = 4;
  int nb = 4;
  double density = 0.5;
  double w_min = 1.0;
  double w_max = 1.0;
  double p_min = 0.1;
  double p_max = 1.0;
};

// Models: "uniform", "complete", "star", "small-x-high-ratio". Output depends
// only on (model, params, seed).
StochasticGraph GenerateInstance(std::string_view model,
                                 const GeneratorParams& params, uint64_t seed);

enum class Realization : int8_t { kUnsampled = 0, kRealized = 1, kAbsent = 2 };

// Lazily sampled, memoized edge coins for one experiment. Single owner.
class RealizationState {
 public:
  RealizationState(int num_edges, CounterRng rng)
      : coins_(num_edges, Realization::kUnsampled), rng_(rng) {}

  // First call flips a p_e coin and memoizes it; dummy edges are always
  // realized and never consume randomness.
  bool Sample(const StochasticGraph& graph, int e);

  Realization Peek(int e) const { return coins_[e]; }
  int size() const { return static_cast<int>(coins_.size()); }

 private:
  std::vector<Realization> coins_;
  CounterRng rng_;
};

}  // namespace qcmatch

#endif  // QCMATCH_INSTANCE_H_
