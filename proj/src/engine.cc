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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qcmatch {

std::string_view ToString(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kGreedy:
      return "greedy";
    case Algorithm::kSimple:
      return "simple";
    case Algorithm::kAlg1:
      return "alg1";
    case Algorithm::kApx:
      return "apx";
  }
  return "unknown";
}

Algorithm ParseAlgorithm(std::string_view name) {
  if (name == "greedy") return Algorithm::kGreedy;
  if (name == "simple") return Algorithm::kSimple;
  if (name == "alg1") return Algorithm::kAlg1;
  if (name == "apx") return Algorithm::kApx;
  throw std::invalid_argument("unknown algorithm \"" + std::string(name) +
                              "\"; expected greedy, simple, alg1 or apx");
}

std::string_view ToString(EdgeStatus status) {
  switch (status) {
    case EdgeStatus::kUnexamined:
      return "unexamined";
    case EdgeStatus::kQueriedMatched:
      return "queried-realized-matched";
    case EdgeStatus::kQueriedNotRealized:
      return "queried-not-realized";
    case EdgeStatus::kCoinflipRealized:
      return "coinflip-realized";
    case EdgeStatus::kCoinflipNotRealized:
      return "coinflip-not-realized";
  }
  return "unknown";
}

std::string_view ToString(Branch branch) {
  switch (branch) {
    case Branch::kNone:
      return "none";
    case Branch::kTwoRound:
      return "two-round";
    case Branch::kPrune:
      return "prune";
  }
  return "unknown";
}

struct Simulator::Plan {
  double sigma = 1.0;
  bool thin = true;
  Eigen::VectorXd x;   // zero outside the edges this plan may examine
  Eigen::VectorXd xt;  // g(x, sigma), or x itself without thinning
  std::unique_ptr<DistributionCache> cache;
  std::vector<uint64_t> full_masks;
  std::vector<std::shared_ptr<const PermDistribution>> full;
  std::vector<double> dummy_prop;  // per B vertex, 0 when no dummy
  std::vector<int> greedy_order;
};

struct Simulator::Scratch {
  std::vector<int> items;
  std::vector<int> perm;
  std::vector<uint64_t> masks;
  std::vector<double> degree;
  std::vector<double> dummy;
};

namespace {

Eigen::VectorXd CheckedX(const StochasticGraph& graph, const Eigen::VectorXd& x,
                         Algorithm algorithm) {
  if (algorithm == Algorithm::kGreedy && x.size() == 0) {
    return Eigen::VectorXd::Zero(graph.num_edges());
  }
  if (x.size() != graph.num_edges()) {
    throw std::invalid_argument("x has " + std::to_string(x.size()) +
                                " entries but the instance has " +
                                std::to_string(graph.num_edges()) + " edges");
  }
  for (int e = 0; e < graph.num_edges(); ++e) {
    if (!(x(e) >= -kDegreeEps) || !std::isfinite(x(e))) {
      throw std::invalid_argument("x is negative on edge " + std::to_string(e));
    }
  }
  return x.cwiseMax(0.0);
}

}  // namespace

Simulator::Simulator(const StochasticGraph& graph, const Eigen::VectorXd& x,
                     Algorithm algorithm, const TransformParams& params)
    : graph_(graph),
      x_(CheckedX(graph, x, algorithm)),
      algorithm_(algorithm),
      params_(params) {
  params_.Validate();
  switch (algorithm_) {
    case Algorithm::kGreedy: {
      plan_ = std::make_unique<Plan>();
      auto& order = plan_->greedy_order;
      order.resize(graph_.num_edges());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](int l, int r) {
        return graph_.edge(l).w > graph_.edge(r).w;
      });
      break;
    }
    case Algorithm::kSimple:
      plan_ = MakePlan(x_, 1.0, false);
      break;
    case Algorithm::kAlg1:
      plan_ = MakePlan(x_, params_.sigma, true);
      break;
    case Algorithm::kApx: {
      const Eigen::VectorXd xt = G(x_, 1.0);
      Eigen::VectorXd heavy = x_;
      for (int e = 0; e < graph_.num_edges(); ++e) {
        const double mass = x_(e) * graph_.edge(e).w;
        lp_mass_ += mass;
        if (xt(e) / graph_.edge(e).p <= params_.tau) {
          light_mass_ += mass;
          heavy(e) = 0.0;
        }
      }
      if (light_mass_ >= params_.lambda * lp_mass_) {
        branch_ = Branch::kTwoRound;
        plan_ = MakePlan(x_, 1.0, true);
      } else {
        branch_ = Branch::kPrune;
        const double rho = Rho(params_.tau);
        const Eigen::VectorXd deg = BDegrees(graph_, heavy);
        for (int u = 0; u < graph_.b_count(); ++u) {
          if (deg(u) > rho + kDegreeEps) {
            throw std::runtime_error(
                "heavy fractional degree " + std::to_string(deg(u)) +
                " at b" + std::to_string(u) + " exceeds rho(tau)=" +
                std::to_string(rho) + "; x is not LP-feasible");
          }
        }
        plan_ = MakePlan(heavy, rho, true);
      }
      break;
    }
  }
}

Simulator::~Simulator() = default;

double Simulator::round_sigma() const { return plan_ ? plan_->sigma : 1.0; }

std::unique_ptr<Simulator::Plan> Simulator::MakePlan(const Eigen::VectorXd& x,
                                                     double sigma,
                                                     bool thin) const {
  auto plan = std::make_unique<Plan>();
  plan->sigma = sigma;
  plan->thin = thin;
  plan->x = x;
  plan->xt = thin ? G(x, sigma) : x;
  plan->cache = std::make_unique<DistributionCache>(graph_, x);
  plan->full_masks.resize(graph_.a_count());
  plan->full.resize(graph_.a_count());
  for (int v = 0; v < graph_.a_count(); ++v) {
    plan->full_masks[v] = plan->cache->FullSupport(v);
    if (plan->full_masks[v] != 0) {
      plan->full[v] = plan->cache->Get(v, plan->full_masks[v]);
    }
  }
  plan->dummy_prop.assign(graph_.b_count(), 0.0);
  if (thin) {
    const AugmentedInstance aug = AddDummyEdges(graph_, x, sigma);
    std::vector<bool> has_support(graph_.b_count(), false);
    for (const Edge& e : graph_.edges()) {
      if (x(e.id) > 0.0) has_support[e.b] = true;
    }
    // A dummy at a B vertex nobody else can reach only blocks that vertex,
    // so it is dropped; the relative order of the other vertices is still
    // uniform.
    for (int id = aug.original_edges; id < aug.graph.num_edges(); ++id) {
      const int u = aug.graph.edge(id).b;
      if (has_support[u]) plan->dummy_prop[u] = G(aug.x(id), sigma);
    }
  }
  return plan;
}

void Simulator::Reset(RunResult& out, bool record_events) const {
  out.matching.clear();
  out.weight = 0.0;
  out.edge_log.assign(graph_.num_edges(), EdgeStatus::kUnexamined);
  out.rounds.assign(graph_.num_edges(), 0);
  out.a_matched.assign(graph_.a_count(), false);
  out.b_matched.assign(graph_.b_count(), false);
  out.query_order.clear();
  if (record_events) out.query_order.reserve(graph_.num_edges() + 8);
  out.branch = branch_;
}

void Simulator::RunGreedy(RealizationState& state, RunResult& out,
                          bool record_events) const {
  for (int e : plan_->greedy_order) {
    const Edge& edge = graph_.edge(e);
    if (out.a_matched[edge.a] || out.b_matched[edge.b]) continue;
    const bool realized = state.Sample(graph_, e);
    out.rounds[e] = 1;
    if (realized) {
      out.edge_log[e] = EdgeStatus::kQueriedMatched;
      out.a_matched[edge.a] = true;
      out.b_matched[edge.b] = true;
      out.matching.push_back(e);
    } else {
      out.edge_log[e] = EdgeStatus::kQueriedNotRealized;
    }
    if (record_events) {
      out.query_order.push_back(
          {e, edge.a, edge.b, Action::kQuery, realized, 1});
    }
  }
}

void Simulator::RunRound(const Plan& plan, const std::vector<uint64_t>& masks,
                         const std::vector<double>& dummy_prop, int8_t round,
                         RealizationState& state, CounterRng& rng,
                         RunResult& out, Scratch& scratch,
                         bool record_events) const {
  const int a_count = graph_.a_count();
  auto& items = scratch.items;
  items.clear();
  for (int v = 0; v < a_count; ++v) {
    if (masks[v] != 0) items.push_back(v);
  }
  for (int u = 0; u < graph_.b_count(); ++u) {
    if (dummy_prop[u] > 0.0) items.push_back(a_count + u);
  }
  std::shuffle(items.begin(), items.end(), rng);

  for (int item : items) {
    if (item >= a_count) {
      const int u = item - a_count;
      if (rng.Uniform() >= dummy_prop[u]) continue;
      const bool free = !out.b_matched[u];
      out.b_matched[u] = true;
      if (record_events) {
        out.query_order.push_back({-1, -1, u,
                                   free ? Action::kQuery : Action::kCoinflip,
                                   true, round});
      }
      continue;
    }
    const int v = item;
    std::shared_ptr<const PermDistribution> held;
    const PermDistribution* dist = plan.full[v].get();
    if (masks[v] != plan.full_masks[v]) {
      held = plan.cache->Get(v, masks[v]);
      dist = held.get();
    }
    const std::vector<int>* sequence = &scratch.perm;
    if (plan.thin) {
      DrawModifiedPermInto(*dist, plan.x, plan.xt, graph_, rng, scratch.perm);
    } else {
      sequence = &dist->Sample(rng);
    }
    for (int e : *sequence) {
      const int u = graph_.edge(e).b;
      const bool realized = state.Sample(graph_, e);
      const bool free = !out.a_matched[v] && !out.b_matched[u];
      out.rounds[e] = round;
      if (free) {
        out.edge_log[e] = realized ? EdgeStatus::kQueriedMatched
                                   : EdgeStatus::kQueriedNotRealized;
      } else {
        out.edge_log[e] = realized ? EdgeStatus::kCoinflipRealized
                                   : EdgeStatus::kCoinflipNotRealized;
      }
      if (record_events) {
        out.query_order.push_back({e, v, u,
                                   free ? Action::kQuery : Action::kCoinflip,
                                   realized, round});
      }
      if (realized) {
        if (free) {
          out.a_matched[v] = true;
          out.b_matched[u] = true;
          out.matching.push_back(e);
        }
        break;
      }
    }
  }
}

void Simulator::Run(RealizationState& state, CounterRng& rng, RunResult& out,
                    bool record_events) const {
  thread_local Scratch scratch;
  Reset(out, record_events);
  const Plan& plan = *plan_;
  switch (algorithm_) {
    case Algorithm::kGreedy:
      RunGreedy(state, out, record_events);
      break;
    case Algorithm::kSimple:
    case Algorithm::kAlg1:
      RunRound(plan, plan.full_masks, plan.dummy_prop, 1, state, rng, out,
               scratch, record_events);
      break;
    case Algorithm::kApx: {
      RunRound(plan, plan.full_masks, plan.dummy_prop, 1, state, rng, out,
               scratch, record_events);
      if (branch_ != Branch::kTwoRound) break;
      // Round 2 runs on x restricted to the available edges, with its own
      // dummy padding up to sigma = 1.
      auto& masks = scratch.masks;
      auto& degree = scratch.degree;
      auto& dummy = scratch.dummy;
      masks.assign(graph_.a_count(), 0);
      degree.assign(graph_.b_count(), 0.0);
      dummy.assign(graph_.b_count(), 0.0);
      bool any = false;
      for (int v = 0; v < graph_.a_count(); ++v) {
        if (out.a_matched[v]) continue;
        const auto edges = graph_.EdgesOfA(v);
        for (size_t i = 0; i < edges.size(); ++i) {
          const int e = edges[i];
          if (!(plan.full_masks[v] >> i & 1)) continue;
          if (out.edge_log[e] != EdgeStatus::kUnexamined) continue;
          const int u = graph_.edge(e).b;
          if (out.b_matched[u]) continue;
          masks[v] |= uint64_t{1} << i;
          degree[u] += plan.x(e);
          any = true;
        }
      }
      if (!any) break;
      for (int u = 0; u < graph_.b_count(); ++u) {
        const double gap = 1.0 - degree[u];
        if (degree[u] > 0.0 && gap > kLimitWindow) {
          dummy[u] = GUnchecked(std::min(gap, 1.0), 1.0);
        }
      }
      RunRound(plan, masks, dummy, 2, state, rng, out, scratch,
               record_events);
      break;
    }
  }
  std::sort(out.matching.begin(), out.matching.end());
  for (int e : out.matching) out.weight += graph_.edge(e).w;
}

namespace {

RunResult RunOnce(const StochasticGraph& graph, const Eigen::VectorXd& x,
                  Algorithm algorithm, const TransformParams& params,
                  RealizationState& state, CounterRng& rng) {
  Simulator sim(graph, x, algorithm, params);
  RunResult out;
  sim.Run(state, rng, out, true);
  return out;
}

}  // namespace

RunResult GreedyMatching(const StochasticGraph& graph,
                         RealizationState& state, CounterRng& rng) {
  return RunOnce(graph, Eigen::VectorXd(), Algorithm::kGreedy,
                 TransformParams(), state, rng);
}

RunResult SimpleMatching(const StochasticGraph& graph, const Eigen::VectorXd& x,
                         RealizationState& state, CounterRng& rng) {
  return RunOnce(graph, x, Algorithm::kSimple, TransformParams(), state, rng);
}

RunResult Alg1(const StochasticGraph& graph, const Eigen::VectorXd& x,
               double sigma, RealizationState& state, CounterRng& rng) {
  TransformParams params;
  params.sigma = sigma;
  return RunOnce(graph, x, Algorithm::kAlg1, params, state, rng);
}

RunResult ApxMatching(const StochasticGraph& graph, const Eigen::VectorXd& x,
                      const TransformParams& params, RealizationState& state,
                      CounterRng& rng) {
  return RunOnce(graph, x, Algorithm::kApx, params, state, rng);
}

std::vector<int> AvailableEdges(const StochasticGraph& graph,
                                const RunResult& run) {
  std::vector<int> out;
  for (const Edge& e : graph.edges()) {
    if (e.is_dummy || run.Examined(e.id)) continue;
    if (run.a_matched[e.a] || run.b_matched[e.b]) continue;
    out.push_back(e.id);
  }
  return out;
}

std::optional<std::string> CheckQueryCommit(const StochasticGraph& graph,
                                            const RunResult& run) {
  std::vector<bool> a_m(graph.a_count(), false);
  std::vector<bool> b_m(graph.b_count(), false);
  std::vector<bool> seen(graph.num_edges(), false);
  std::vector<int> committed;
  for (size_t i = 0; i < run.query_order.size(); ++i) {
    const ExamineEvent& ev = run.query_order[i];
    const std::string where = "event " + std::to_string(i) + ": ";
    if (ev.b < 0 || ev.b >= graph.b_count()) return where + "bad B vertex";
    if (ev.edge >= 0) {
      if (ev.edge >= graph.num_edges()) return where + "bad edge id";
      const Edge& e = graph.edge(ev.edge);
      if (e.a != ev.a || e.b != ev.b) return where + "endpoints disagree";
      if (seen[ev.edge]) return where + "edge examined twice";
      seen[ev.edge] = true;
      EdgeStatus expected;
      if (ev.action == Action::kQuery) {
        expected = ev.realized ? EdgeStatus::kQueriedMatched
                               : EdgeStatus::kQueriedNotRealized;
      } else {
        expected = ev.realized ? EdgeStatus::kCoinflipRealized
                               : EdgeStatus::kCoinflipNotRealized;
      }
      if (run.edge_log[ev.edge] != expected) {
        return where + "edge log disagrees with the event";
      }
      if (run.rounds[ev.edge] != ev.round) return where + "round mismatch";
    }
    const bool free = (ev.a < 0 || !a_m[ev.a]) && !b_m[ev.b];
    if (ev.action == Action::kQuery && !free) {
      return where + "queried an edge with a matched endpoint";
    }
    if (ev.action == Action::kCoinflip && free) {
      return where + "coin flip on an edge with both endpoints free";
    }
    if (ev.action == Action::kQuery && ev.realized) {
      if (ev.a >= 0) a_m[ev.a] = true;
      b_m[ev.b] = true;
      if (ev.edge >= 0) committed.push_back(ev.edge);
    }
  }
  for (int e = 0; e < graph.num_edges(); ++e) {
    if (!seen[e] && run.edge_log[e] != EdgeStatus::kUnexamined) {
      return "edge " + std::to_string(e) + " has a status but no event";
    }
  }
  std::sort(committed.begin(), committed.end());
  if (committed != run.matching) {
    return std::string("matching differs from the committed queries");
  }
  double weight = 0.0;
  for (int e : committed) weight += graph.edge(e).w;
  if (std::abs(weight - run.weight) > 1e-9) {
    return std::string("weight differs from the matching");
  }
  if (a_m != run.a_matched || b_m != run.b_matched) {
    return std::string("final matched flags differ from the replay");
  }
  return std::nullopt;
}

}  // namespace qcmatch
