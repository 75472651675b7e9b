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

#include "qcmatch/oracle.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <thread>
#include <utility>

#include "qcmatch/permdist.h"
#include "qcmatch/transform.h"

namespace qcmatch {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Edges regrouped as rows (the side with more vertices) and columns (the
// side encoded in the bitmask).
struct Bipartition {
  struct Arc {
    int id;
    int col;
    double w;
    double p;
  };
  std::vector<std::vector<Arc>> rows;
  int cols = 0;
};

Bipartition Regroup(const StochasticGraph& graph,
                    const std::vector<int>& edges) {
  std::map<int, int> a_index;
  std::map<int, int> b_index;
  for (int e : edges) {
    a_index.emplace(graph.edge(e).a, 0);
    b_index.emplace(graph.edge(e).b, 0);
  }
  const bool b_is_col = b_index.size() <= a_index.size();
  auto& col_index = b_is_col ? b_index : a_index;
  auto& row_index = b_is_col ? a_index : b_index;
  if (col_index.size() > 20) {
    throw OracleError("max-weight matching limited to 20 vertices per side");
  }
  int next = 0;
  for (auto& [key, value] : col_index) value = next++;
  next = 0;
  for (auto& [key, value] : row_index) value = next++;
  Bipartition out;
  out.cols = static_cast<int>(col_index.size());
  out.rows.resize(row_index.size());
  for (int e : edges) {
    const Edge& edge = graph.edge(e);
    const int row = row_index[b_is_col ? edge.a : edge.b];
    const int col = col_index[b_is_col ? edge.b : edge.a];
    out.rows[row].push_back({e, col, edge.w, edge.p});
  }
  return out;
}

// next[mask] = best weight using rows so far with matched columns in mask.
void Extend(const std::vector<double>& prev,
            const std::vector<Bipartition::Arc>& arcs, uint32_t arc_mask,
            std::vector<double>& next) {
  next = prev;
  const size_t count = prev.size();
  for (size_t k = 0; k < arcs.size(); ++k) {
    if (!(arc_mask >> k & 1)) continue;
    const uint32_t bit = uint32_t{1} << arcs[k].col;
    for (size_t mask = 0; mask < count; ++mask) {
      if (mask & bit || prev[mask] == kNegInf) continue;
      next[mask | bit] = std::max(next[mask | bit], prev[mask] + arcs[k].w);
    }
  }
}

double LayerMax(const std::vector<double>& layer) {
  return *std::max_element(layer.begin(), layer.end());
}

std::vector<double> StartLayer(int cols) {
  std::vector<double> layer(size_t{1} << cols, kNegInf);
  layer[0] = 0.0;
  return layer;
}

class OptEnumerator {
 public:
  explicit OptEnumerator(Bipartition parts) : parts_(std::move(parts)) {
    layers_.assign(parts_.rows.size() + 1, {});
    layers_[0] = StartLayer(parts_.cols);
  }

  double Run() {
    if (parts_.rows.empty()) return 0.0;
    return Recurse(0, 1.0);
  }

 private:
  double Recurse(size_t row, double prob) {
    const auto& arcs = parts_.rows[row];
    const std::vector<double>& prev = layers_[row];
    const uint32_t subsets = uint32_t{1} << arcs.size();
    double total = 0.0;
    const bool last = row + 1 == parts_.rows.size();
    std::vector<double> best_with;
    double base = 0.0;
    if (last) {
      base = LayerMax(prev);
      best_with.resize(arcs.size(), kNegInf);
      for (size_t k = 0; k < arcs.size(); ++k) {
        const uint32_t bit = uint32_t{1} << arcs[k].col;
        for (size_t mask = 0; mask < prev.size(); ++mask) {
          if (!(mask & bit) && prev[mask] != kNegInf) {
            best_with[k] = std::max(best_with[k], prev[mask] + arcs[k].w);
          }
        }
      }
    }
    for (uint32_t s = 0; s < subsets; ++s) {
      double q = prob;
      for (size_t k = 0; k < arcs.size(); ++k) {
        q *= (s >> k & 1) ? arcs[k].p : 1.0 - arcs[k].p;
      }
      if (q == 0.0) continue;
      if (last) {
        double value = base;
        for (size_t k = 0; k < arcs.size(); ++k) {
          if (s >> k & 1) value = std::max(value, best_with[k]);
        }
        total += q * value;
      } else {
        Extend(prev, arcs, s, layers_[row + 1]);
        total += Recurse(row + 1, q);
      }
    }
    return total;
  }

  Bipartition parts_;
  std::vector<std::vector<double>> layers_;
};

}  // namespace

MatchingResult MaxWeightMatching(const StochasticGraph& graph,
                                 const std::vector<int>& edges) {
  MatchingResult result;
  if (edges.empty()) return result;
  const Bipartition parts = Regroup(graph, edges);
  std::vector<std::vector<double>> layers(parts.rows.size() + 1);
  layers[0] = StartLayer(parts.cols);
  for (size_t r = 0; r < parts.rows.size(); ++r) {
    const uint32_t all = (uint32_t{1} << parts.rows[r].size()) - 1;
    Extend(layers[r], parts.rows[r], all, layers[r + 1]);
  }
  const auto& final_layer = layers.back();
  size_t mask = std::max_element(final_layer.begin(), final_layer.end()) -
                final_layer.begin();
  result.weight = final_layer[mask];
  for (size_t r = parts.rows.size(); r-- > 0;) {
    if (layers[r][mask] == layers[r + 1][mask]) continue;
    for (const auto& arc : parts.rows[r]) {
      const size_t bit = size_t{1} << arc.col;
      if (!(mask & bit)) continue;
      if (layers[r][mask ^ bit] + arc.w == layers[r + 1][mask]) {
        result.edges.push_back(arc.id);
        mask ^= bit;
        break;
      }
    }
  }
  std::sort(result.edges.begin(), result.edges.end());
  return result;
}

double ExpectedOptExact(const StochasticGraph& graph, int max_edges) {
  if (graph.num_edges() > max_edges) {
    throw OracleError("exact expected optimum limited to " +
                      std::to_string(max_edges) + " edges, instance has " +
                      std::to_string(graph.num_edges()));
  }
  std::vector<int> edges(graph.num_edges());
  for (int e = 0; e < graph.num_edges(); ++e) edges[e] = e;
  if (edges.empty()) return 0.0;
  return OptEnumerator(Regroup(graph, edges)).Run();
}

namespace {

struct LocalOutcome {
  double prob = 0.0;
  int proposal = -1;
  uint64_t examined = 0;  // positions within EdgesOfA(v)
};

class EventEnumerator {
 public:
  EventEnumerator(const StochasticGraph& graph, const Eigen::VectorXd& x,
                  const ExactOptions& options,
                  const std::vector<EventQuery>& queries)
      : original_(graph), options_(options), queries_(queries) {
    if (options.algorithm == Algorithm::kAlg1) {
      AugmentedInstance aug = AddDummyEdges(graph, x, options.sigma);
      aug_ = std::move(aug.graph);
      x_ = std::move(aug.x);
      xt_ = G(x_, options.sigma);
    } else if (options.algorithm == Algorithm::kSimple) {
      aug_ = graph;
      x_ = x;
      xt_ = x;
    } else {
      throw OracleError("exact enumeration supports simple and alg1 only");
    }
    for (int v = 0; v < aug_.a_count(); ++v) locals_.push_back(Local(v));
    proposal_.assign(aug_.a_count(), -1);
    chosen_mask_.assign(aug_.a_count(), 0);
    examined_.assign(aug_.num_edges(), 0);
    winner_.assign(aug_.b_count(), -1);
    proposers_.assign(aug_.b_count(), {});

    report_.matched = Eigen::VectorXd::Zero(graph.num_edges());
    report_.examined = Eigen::VectorXd::Zero(graph.num_edges());
    report_.available = Eigen::VectorXd::Zero(graph.num_edges());
    report_.proposed = Eigen::VectorXd::Zero(graph.num_edges());
    report_.a_unmatched = Eigen::VectorXd::Zero(graph.a_count());
    report_.b_unmatched = Eigen::VectorXd::Zero(graph.b_count());
    for (const EventQuery& q : queries) report_.events.push_back({q.name, 0.0, 0.0, std::nullopt});
  }

  ExactEventReport Run() {
    ChooseLocal(0, 1.0);
    for (EventValue& ev : report_.events) {
      if (ev.condition_mass >= kUndefinedConditionMass) {
        ev.value = ev.joint_mass / ev.condition_mass;
      }
    }
    return std::move(report_);
  }

 private:
  // Interleaves the thinning walk with examination: an appended edge is
  // examined as soon as it is appended, and a realized one ends the walk.
  std::vector<LocalOutcome> Local(int v) {
    const PermDistribution dist = BuildProportionalDistribution(aug_, v, x_);
    const auto edges = aug_.EdgesOfA(v);
    std::map<std::pair<uint64_t, int>, double> merged;
    auto position = [&](int e) {
      return std::find(edges.begin(), edges.end(), e) - edges.begin();
    };
    for (size_t j = 0; j < dist.perms.size(); ++j) {
      const std::vector<int>& perm = dist.perms[j];
      struct Frame {
        size_t pos;
        double prob;
        uint64_t mask;
      };
      std::vector<Frame> stack = {{0, dist.probs[j], 0}};
      while (!stack.empty()) {
        const Frame f = stack.back();
        stack.pop_back();
        Count();
        if (f.prob == 0.0) continue;
        if (f.pos == perm.size()) {
          merged[{f.mask, -1}] += f.prob;
          continue;
        }
        const int e = perm[f.pos];
        const double p = aug_.edge(e).p;
        const double keep = std::min(1.0, xt_(e) / x_(e));
        const uint64_t bit = uint64_t{1} << position(e);
        const double stop = f.prob * p * (1.0 - keep);
        if (stop > 0.0) merged[{f.mask, -1}] += stop;
        const double hit = f.prob * keep * p;
        if (hit > 0.0) merged[{f.mask | bit, e}] += hit;
        stack.push_back({f.pos + 1, f.prob * keep * (1.0 - p), f.mask | bit});
        stack.push_back({f.pos + 1, f.prob * (1.0 - p) * (1.0 - keep), f.mask});
      }
    }
    std::vector<LocalOutcome> out;
    for (const auto& [key, prob] : merged) {
      if (prob > 0.0) out.push_back({prob, key.second, key.first});
    }
    return out;
  }

  void Count() {
    if (++report_.nodes > options_.node_budget) {
      throw OracleError("exact enumeration exceeded the node budget of " +
                        std::to_string(options_.node_budget));
    }
  }

  void ChooseLocal(int v, double mass) {
    Count();
    if (v == aug_.a_count()) {
      std::fill(examined_.begin(), examined_.end(), 0);
      for (auto& list : proposers_) list.clear();
      for (int a = 0; a < aug_.a_count(); ++a) {
        const auto edges = aug_.EdgesOfA(a);
        for (size_t i = 0; i < edges.size(); ++i) {
          if (chosen_mask_[a] >> i & 1) examined_[edges[i]] = 1;
        }
        if (proposal_[a] >= 0) {
          proposers_[aug_.edge(proposal_[a]).b].push_back(a);
        }
      }
      ChooseWinner(0, mass);
      return;
    }
    for (const LocalOutcome& o : locals_[v]) {
      proposal_[v] = o.proposal;
      chosen_mask_[v] = o.examined;
      ChooseLocal(v + 1, mass * o.prob);
    }
  }

  void ChooseWinner(int u, double mass) {
    Count();
    if (u == aug_.b_count()) {
      Record(mass);
      return;
    }
    const auto& list = proposers_[u];
    if (list.empty()) {
      winner_[u] = -1;
      ChooseWinner(u + 1, mass);
      return;
    }
    const double share = mass / static_cast<double>(list.size());
    for (int a : list) {
      winner_[u] = a;
      ChooseWinner(u + 1, share);
    }
  }

  void Record(double mass) {
    const ExactWorld world(aug_, original_.num_edges(), proposal_, examined_,
                           winner_);
    report_.total_mass += mass;
    for (int e = 0; e < original_.num_edges(); ++e) {
      if (world.Matched(e)) {
        report_.matched(e) += mass;
        report_.expected_weight += mass * original_.edge(e).w;
      }
      if (world.Examined(e)) report_.examined(e) += mass;
      if (world.Available(e)) report_.available(e) += mass;
      if (proposal_[original_.edge(e).a] == e) report_.proposed(e) += mass;
    }
    for (int v = 0; v < original_.a_count(); ++v) {
      if (world.AUnmatched(v)) report_.a_unmatched(v) += mass;
    }
    for (int u = 0; u < original_.b_count(); ++u) {
      if (world.BUnmatched(u)) report_.b_unmatched(u) += mass;
    }
    for (size_t i = 0; i < queries_.size(); ++i) {
      const EventQuery& q = queries_[i];
      if (q.condition && !q.condition(world)) continue;
      report_.events[i].condition_mass += mass;
      if (q.target(world)) report_.events[i].joint_mass += mass;
    }
  }

  const StochasticGraph& original_;
  ExactOptions options_;
  const std::vector<EventQuery>& queries_;
  StochasticGraph aug_;
  Eigen::VectorXd x_;
  Eigen::VectorXd xt_;
  std::vector<std::vector<LocalOutcome>> locals_;
  std::vector<int> proposal_;
  std::vector<uint64_t> chosen_mask_;
  std::vector<char> examined_;
  std::vector<int> winner_;
  std::vector<std::vector<int>> proposers_;
  ExactEventReport report_;
};

}  // namespace

ExactEventReport ExactEventProbabilities(
    const StochasticGraph& graph, const Eigen::VectorXd& x,
    const ExactOptions& options, const std::vector<EventQuery>& queries) {
  if (x.size() != graph.num_edges()) {
    throw OracleError("x length does not match the edge count");
  }
  return EventEnumerator(graph, x.cwiseMax(0.0), options, queries).Run();
}

double PairwiseSum(const double* values, size_t n) {
  if (n <= 64) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += values[i];
    return s;
  }
  const size_t half = n / 2;
  return PairwiseSum(values, half) + PairwiseSum(values + half, n - half);
}

MonteCarloEstimate RunMonteCarlo(const StochasticGraph& graph,
                                 const Eigen::VectorXd& x,
                                 const AlgorithmConfig& config, int64_t trials,
                                 int threads) {
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  threads = std::max(1, threads);
  const Simulator sim(graph, x, config.algorithm, config.params);
  std::vector<double> weights(trials);
  std::vector<std::vector<int64_t>> counts(
      threads, std::vector<int64_t>(graph.num_edges(), 0));

  auto work = [&](int worker, int64_t begin, int64_t end) {
    RunResult result;
    auto& local = counts[worker];
    for (int64_t t = begin; t < end; ++t) {
      RealizationState state(
          graph.num_edges(),
          DeriveStream(config.seed, static_cast<uint64_t>(t),
                       Stream::kRealization));
      CounterRng rng = DeriveStream(config.seed, static_cast<uint64_t>(t),
                                    Stream::kAlgorithm);
      sim.Run(state, rng, result, false);
      weights[t] = result.weight;
      for (int e : result.matching) ++local[e];
    }
  };
  if (threads == 1) {
    work(0, 0, trials);
  } else {
    std::vector<std::thread> pool;
    const int64_t chunk = (trials + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      const int64_t begin = std::min<int64_t>(trials, w * chunk);
      const int64_t end = std::min<int64_t>(trials, begin + chunk);
      pool.emplace_back(work, w, begin, end);
    }
    for (auto& t : pool) t.join();
  }

  MonteCarloEstimate est;
  est.trials = trials;
  est.seed = config.seed;
  est.branch = sim.branch();
  est.mean = PairwiseSum(weights.data(), weights.size()) /
             static_cast<double>(trials);
  if (trials > 1) {
    for (double& w : weights) w = (w - est.mean) * (w - est.mean);
    const double var = PairwiseSum(weights.data(), weights.size()) /
                       static_cast<double>(trials - 1);
    est.std_error = std::sqrt(var / static_cast<double>(trials));
  }
  est.edge_frequency.assign(graph.num_edges(), 0.0);
  for (int e = 0; e < graph.num_edges(); ++e) {
    int64_t total = 0;
    for (const auto& c : counts) total += c[e];
    est.edge_frequency[e] =
        static_cast<double>(total) / static_cast<double>(trials);
  }
  return est;
}

}  // namespace qcmatch
