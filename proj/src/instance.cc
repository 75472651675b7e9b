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

#include "qcmatch/instance.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "json.hpp"

namespace qcmatch {

using nlohmann::json;

std::string ToString(VertexRef v) {
  return (v.side == Side::kA ? "a" : "b") + std::to_string(v.index);
}

StochasticGraph::StochasticGraph(int a_count, int b_count,
                                 std::vector<Edge> edges)
    : a_count_(a_count), b_count_(b_count), edges_(std::move(edges)) {
  if (a_count_ < 0 || b_count_ < 0) {
    throw InstanceError("vertex counts must be nonnegative");
  }
  a_adj_.assign(a_count_, {});
  b_adj_.assign(b_count_, {});
  std::set<std::pair<int, int>> seen;
  for (int i = 0; i < num_edges(); ++i) {
    Edge& e = edges_[i];
    e.id = i;
    const std::string where = "edge " + std::to_string(i) + ": ";
    if (e.a < 0 || e.a >= a_count_) {
      throw InstanceError(where + "A index out of range");
    }
    if (e.b < 0 || e.b >= b_count_) {
      throw InstanceError(where + "B index out of range");
    }
    if (!(e.p > 0.0 && e.p <= 1.0)) {
      throw InstanceError(where + "probability must lie in (0,1]");
    }
    if (!(e.w >= 0.0) || !std::isfinite(e.w)) {
      throw InstanceError(where + "weight must be nonnegative");
    }
    if (e.is_dummy && (e.w != 0.0 || e.p != 1.0)) {
      throw InstanceError(where + "dummy edges need w=0 and p=1");
    }
    if (!seen.emplace(e.a, e.b).second) {
      throw InstanceError(where + "duplicate (a,b) pair (" +
                          std::to_string(e.a) + "," + std::to_string(e.b) +
                          ")");
    }
    a_adj_[e.a].push_back(i);
    b_adj_[e.b].push_back(i);
  }
}

int StochasticGraph::MaxDegree() const {
  size_t best = 0;
  for (const auto& adj : a_adj_) best = std::max(best, adj.size());
  for (const auto& adj : b_adj_) best = std::max(best, adj.size());
  return static_cast<int>(best);
}

int StochasticGraph::NumOriginalEdges() const {
  return static_cast<int>(std::count_if(
      edges_.begin(), edges_.end(), [](const Edge& e) { return !e.is_dummy; }));
}

namespace {

template <typename T>
T Field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw InstanceError(where + "missing field \"" + key + "\"");
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw InstanceError(where + "field \"" + key + "\" has the wrong type");
  }
}

}  // namespace

StochasticGraph LoadInstance(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& err) {
    throw InstanceError(std::string("malformed instance JSON: ") + err.what());
  }
  if (!doc.is_object()) throw InstanceError("instance must be a JSON object");
  const int a_count = Field<int>(doc, "a_count", "");
  const int b_count = Field<int>(doc, "b_count", "");
  auto edges_it = doc.find("edges");
  if (edges_it == doc.end() || !edges_it->is_array()) {
    throw InstanceError("missing \"edges\" array");
  }
  std::vector<Edge> edges;
  edges.reserve(edges_it->size());
  for (size_t i = 0; i < edges_it->size(); ++i) {
    const json& item = (*edges_it)[i];
    const std::string where = "edge " + std::to_string(i) + ": ";
    if (!item.is_object()) throw InstanceError(where + "expected an object");
    Edge e;
    e.a = Field<int>(item, "a", where);
    e.b = Field<int>(item, "b", where);
    e.w = Field<double>(item, "w", where);
    e.p = Field<double>(item, "p", where);
    edges.push_back(e);
  }
  return StochasticGraph(a_count, b_count, std::move(edges));
}

StochasticGraph LoadInstanceFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InstanceError("cannot open instance file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return LoadInstance(buffer.str());
}

std::string SaveInstance(const StochasticGraph& graph) {
  json doc;
  doc["a_count"] = graph.a_count();
  doc["b_count"] = graph.b_count();
  json edges = json::array();
  for (const Edge& e : graph.edges()) {
    if (e.is_dummy) continue;
    edges.push_back({{"a", e.a}, {"b", e.b}, {"w", e.w}, {"p", e.p}});
  }
  doc["edges"] = std::move(edges);
  return doc.dump(2) + "\n";
}

namespace {

// Four decimals keep instance files readable; falls back to the raw draw
// when rounding would leave the range.
double RoundWithin(double v, double lo, double hi) {
  const double r = std::round(v * 1e4) / 1e4;
  return (r >= lo && r <= hi && r > 0.0) ? r : v;
}

void CheckParams(const GeneratorParams& params) {
  if (params.na < 1 || params.nb < 1) {
    throw InstanceError("sizes must be at least 1");
  }
  if (!(params.density >= 0.0 && params.density <= 1.0)) {
    throw InstanceError("density must lie in [0,1]");
  }
  if (!(params.w_min >= 0.0 && params.w_max >= params.w_min)) {
    throw InstanceError("weight range must satisfy 0 <= w_min <= w_max");
  }
  if (!(params.p_min > 0.0 && params.p_max <= 1.0 &&
        params.p_max >= params.p_min)) {
    throw InstanceError("probability range must satisfy 0 < p_min <= p_max <= 1");
  }
}

}  // namespace

StochasticGraph GenerateInstance(std::string_view model,
                                 const GeneratorParams& params,
                                 uint64_t seed) {
  CheckParams(params);
  CounterRng rng = DeriveStream(seed, 0, Stream::kGenerator);
  double p_lo = params.p_min;
  double p_hi = params.p_max;
  double density = params.density;
  int nb = params.nb;
  if (model == "complete") {
    density = 1.0;
  } else if (model == "star") {
    density = 1.0;
    nb = 1;
  } else if (model == "small-x-high-ratio") {
    // Small probabilities keep LP values near p, which pushes g(x)/p above
    // every heavy-edge threshold in [3/4, 1).
    p_lo = 0.02;
    p_hi = 0.15;
  } else if (model != "uniform") {
    throw InstanceError("unknown generator model \"" + std::string(model) +
                        "\"");
  }

  std::vector<Edge> edges;
  for (int a = 0; a < params.na; ++a) {
    for (int b = 0; b < nb; ++b) {
      // Always draw three values so the stream layout is model-independent.
      const double keep = rng.Uniform();
      const double wu = rng.Uniform();
      const double pu = rng.Uniform();
      if (density < 1.0 && keep >= density) continue;
      Edge e;
      e.a = a;
      e.b = b;
      e.w = RoundWithin(params.w_min + (params.w_max - params.w_min) * wu,
                        params.w_min, params.w_max);
      e.p = RoundWithin(p_lo + (p_hi - p_lo) * pu, p_lo, p_hi);
      edges.push_back(e);
    }
  }
  return StochasticGraph(params.na, nb, std::move(edges));
}

bool RealizationState::Sample(const StochasticGraph& graph, int e) {
  const Edge& edge = graph.edge(e);
  if (edge.is_dummy) return true;
  Realization& coin = coins_[e];
  if (coin == Realization::kUnsampled) {
    const bool realized = edge.p >= 1.0 || rng_.Uniform() < edge.p;
    coin = realized ? Realization::kRealized : Realization::kAbsent;
  }
  return coin == Realization::kRealized;
}

}  // namespace qcmatch
