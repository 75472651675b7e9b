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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "qcmatch/simplex.h"

namespace qcmatch {

using nlohmann::json;

namespace {

// 1 - prod(1 - p) through log1p/expm1 so tiny probabilities keep precision.
class ExistenceProduct {
 public:
  void Add(double p) {
    if (p >= 1.0) {
      certain_ = true;
    } else {
      log_miss_ += std::log1p(-p);
    }
  }
  double Rhs() const { return certain_ ? 1.0 : -std::expm1(log_miss_); }

 private:
  double log_miss_ = 0.0;
  bool certain_ = false;
};

std::vector<VertexRef> AllVertices(const StochasticGraph& graph) {
  std::vector<VertexRef> out;
  for (int v = 0; v < graph.a_count(); ++v) out.push_back({Side::kA, v});
  for (int u = 0; u < graph.b_count(); ++u) out.push_back({Side::kB, u});
  return out;
}

std::vector<int> RatioOrder(const StochasticGraph& graph,
                            std::span<const int> edges,
                            const Eigen::VectorXd& x) {
  std::vector<int> order(edges.begin(), edges.end());
  std::stable_sort(order.begin(), order.end(), [&](int lhs, int rhs) {
    const double rl = x(lhs) / graph.edge(lhs).p;
    const double rr = x(rhs) / graph.edge(rhs).p;
    if (rl != rr) return rl > rr;
    return lhs < rhs;
  });
  return order;
}

// Best prefix at one vertex, including the empty prefix (value 0).
ViolatedSet BestPrefix(const StochasticGraph& graph, VertexRef vertex,
                       const Eigen::VectorXd& x) {
  const std::vector<int> order = RatioOrder(graph, graph.EdgesOf(vertex), x);
  ViolatedSet best{vertex, {}, 0.0};
  ExistenceProduct prod;
  double sum = 0.0;
  for (size_t k = 0; k < order.size(); ++k) {
    sum += x(order[k]);
    prod.Add(graph.edge(order[k]).p);
    const double violation = sum - prod.Rhs();
    if (violation > best.violation) {
      best.violation = violation;
      best.edges.assign(order.begin(), order.begin() + k + 1);
    }
  }
  return best;
}

ViolatedSet BestSubset(const StochasticGraph& graph, VertexRef vertex,
                       const Eigen::VectorXd& x) {
  const std::span<const int> edges = graph.EdgesOf(vertex);
  const size_t deg = edges.size();
  if (deg > 20) {
    throw LpError("exhaustive feasibility check limited to degree 20, " +
                  ToString(vertex) + " has degree " + std::to_string(deg));
  }
  const size_t count = size_t{1} << deg;
  std::vector<double> sum(count, 0.0);
  std::vector<double> log_miss(count, 0.0);
  std::vector<bool> certain(count, false);
  ViolatedSet best{vertex, {}, 0.0};
  size_t best_mask = 0;
  for (size_t mask = 1; mask < count; ++mask) {
    const int bit = std::countr_zero(mask);
    const size_t rest = mask & (mask - 1);
    const Edge& e = graph.edge(edges[bit]);
    sum[mask] = sum[rest] + x(e.id);
    certain[mask] = certain[rest] || e.p >= 1.0;
    log_miss[mask] = certain[mask] ? 0.0 : log_miss[rest] + std::log1p(-e.p);
    const double rhs = certain[mask] ? 1.0 : -std::expm1(log_miss[mask]);
    const double violation = sum[mask] - rhs;
    if (violation > best.violation) {
      best.violation = violation;
      best_mask = mask;
    }
  }
  for (size_t i = 0; i < deg; ++i) {
    if (best_mask >> i & 1) best.edges.push_back(edges[i]);
  }
  return best;
}

VertexConstraint Canonical(VertexRef vertex, std::vector<int> edges) {
  std::sort(edges.begin(), edges.end());
  return {vertex, std::move(edges)};
}

using ConstraintKey = std::pair<VertexRef, std::vector<int>>;

}  // namespace

std::string_view ToString(FeasibilityMode mode) {
  return mode == FeasibilityMode::kExhaustive ? "exhaustive" : "prefix";
}

double ConstraintRhs(const StochasticGraph& graph, std::span<const int> edges) {
  if (edges.empty()) return 0.0;
  const Edge& first = graph.edge(edges[0]);
  const bool share_a = std::all_of(edges.begin(), edges.end(), [&](int e) {
    return graph.edge(e).a == first.a;
  });
  const bool share_b = std::all_of(edges.begin(), edges.end(), [&](int e) {
    return graph.edge(e).b == first.b;
  });
  if (!share_a && !share_b) {
    throw LpError("constraint edges do not share a vertex");
  }
  ExistenceProduct prod;
  for (int e : edges) prod.Add(graph.edge(e).p);
  return prod.Rhs();
}

std::vector<ViolatedSet> Separate(const StochasticGraph& graph,
                                  const Eigen::VectorXd& x, double eps) {
  std::vector<ViolatedSet> out;
  for (VertexRef vertex : AllVertices(graph)) {
    const std::vector<int> order = RatioOrder(graph, graph.EdgesOf(vertex), x);
    ExistenceProduct prod;
    double sum = 0.0;
    for (size_t k = 0; k < order.size(); ++k) {
      sum += x(order[k]);
      prod.Add(graph.edge(order[k]).p);
      const double violation = sum - prod.Rhs();
      if (violation > eps) {
        out.push_back({vertex,
                       std::vector<int>(order.begin(), order.begin() + k + 1),
                       violation});
      }
    }
  }
  return out;
}

FeasibilityReport CheckFeasibility(const StochasticGraph& graph,
                                   const Eigen::VectorXd& x,
                                   FeasibilityMode mode, double eps) {
  if (x.size() != graph.num_edges()) {
    throw LpError("solution length does not match the edge count");
  }
  FeasibilityReport report;
  report.mode = mode;
  for (VertexRef vertex : AllVertices(graph)) {
    const ViolatedSet best = mode == FeasibilityMode::kExhaustive
                                 ? BestSubset(graph, vertex, x)
                                 : BestPrefix(graph, vertex, x);
    if (best.violation > report.worst_violation) {
      report.worst_violation = best.violation;
      report.witness_vertex = vertex;
      report.witness_set = best.edges;
    }
  }
  for (int e = 0; e < graph.num_edges(); ++e) {
    if (x(e) < -eps) {
      report.worst_violation = std::max(report.worst_violation, -x(e));
    }
  }
  report.feasible = report.worst_violation <= eps;
  return report;
}

FractionalSolution SolveLpMatch(const StochasticGraph& graph) {
  const int n = graph.num_edges();
  FractionalSolution solution;
  solution.x = Eigen::VectorXd::Zero(n);
  if (n == 0) return solution;

  std::set<ConstraintKey> present;
  auto add = [&](VertexRef vertex, std::vector<int> edges) {
    VertexConstraint c = Canonical(vertex, std::move(edges));
    // A singleton {e} is the same inequality at either endpoint.
    if (c.edges.size() == 1) c.vertex = {Side::kA, graph.edge(c.edges[0]).a};
    if (!present.emplace(c.vertex, c.edges).second) return false;
    solution.generated_constraints.push_back(std::move(c));
    return true;
  };
  for (int e = 0; e < n; ++e) add({Side::kA, graph.edge(e).a}, {e});
  for (VertexRef vertex : AllVertices(graph)) {
    const auto edges = graph.EdgesOf(vertex);
    if (edges.size() > 1) add(vertex, {edges.begin(), edges.end()});
  }

  while (true) {
    ++solution.rounds;
    const auto& cons = solution.generated_constraints;
    LinearProgram<double> lp(n);
    for (int e = 0; e < n; ++e) lp.objective(e) = graph.edge(e).w;
    lp.le_matrix = Eigen::MatrixXd::Zero(cons.size(), n);
    lp.le_rhs.resize(cons.size());
    for (size_t i = 0; i < cons.size(); ++i) {
      for (int e : cons[i].edges) lp.le_matrix(i, e) = 1.0;
      lp.le_rhs(i) = ConstraintRhs(graph, cons[i].edges);
    }
    const LpSolution<double> lp_solution = SolveLinearProgram(lp);
    if (lp_solution.status != LpStatus::kOptimal) {
      throw LpError("restricted LP did not reach optimality");
    }
    solution.x = lp_solution.x;
    solution.objective = lp_solution.objective;

    const std::vector<ViolatedSet> violated = Separate(graph, solution.x);
    if (violated.empty()) break;
    bool added = false;
    for (const ViolatedSet& v : violated) {
      if (add(v.vertex, v.edges)) {
        added = true;
      }
    }
    if (!added) {
      throw LpError("separation returned only constraints already present");
    }
  }
  return solution;
}

std::string SaveSolution(const FractionalSolution& solution) {
  json doc;
  doc["objective"] = solution.objective;
  doc["x"] = std::vector<double>(solution.x.data(),
                                 solution.x.data() + solution.x.size());
  return doc.dump(2) + "\n";
}

FractionalSolution LoadSolution(std::string_view text, int num_edges) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& err) {
    throw LpError(std::string("malformed solution JSON: ") + err.what());
  }
  if (!doc.is_object() || !doc.contains("x") || !doc["x"].is_array()) {
    throw LpError("solution must be an object with an \"x\" array");
  }
  std::vector<double> values;
  try {
    values = doc["x"].get<std::vector<double>>();
  } catch (const json::exception&) {
    throw LpError("solution \"x\" must contain numbers");
  }
  if (static_cast<int>(values.size()) != num_edges) {
    throw LpError("solution has " + std::to_string(values.size()) +
                  " entries but the instance has " +
                  std::to_string(num_edges) + " edges");
  }
  FractionalSolution solution;
  solution.x = Eigen::Map<const Eigen::VectorXd>(values.data(), num_edges);
  solution.objective = doc.value("objective", 0.0);
  return solution;
}

FractionalSolution LoadSolutionFile(const std::string& path, int num_edges) {
  std::ifstream in(path);
  if (!in) throw LpError("cannot open solution file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return LoadSolution(buffer.str(), num_edges);
}

}  // namespace qcmatch
