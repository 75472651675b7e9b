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

#include "qcmatch/transform.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace qcmatch {

namespace {

constexpr double kOneMinusInvE = 0.63212055882855767;

void CheckSigma(double sigma) {
  if (!(sigma > 0.0 && sigma <= 1.0)) {
    throw std::invalid_argument("sigma must lie in (0,1]");
  }
}

double ClampToRange(double x, double sigma) {
  if (!(x >= -kDegreeEps && x <= sigma + kDegreeEps)) {
    throw std::invalid_argument("g requires 0 <= x <= sigma, got x=" +
                                std::to_string(x) +
                                " sigma=" + std::to_string(sigma));
  }
  return std::clamp(x, 0.0, sigma);
}

template <typename F>
double Bisect(F&& positive_side_is_low, double lo, double hi) {
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (positive_side_is_low(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

void TransformParams::Validate() const {
  CheckSigma(sigma);
  if (!(tau >= 0.75 && tau < 1.0)) {
    throw std::invalid_argument("tau must lie in [0.75,1)");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("lambda must lie in [0,1]");
  }
}

double G(double x, double sigma) {
  CheckSigma(sigma);
  return GUnchecked(ClampToRange(x, sigma), sigma);
}

double GRatio(double x, double sigma) {
  CheckSigma(sigma);
  return GRatioUnchecked(ClampToRange(x, sigma), sigma);
}

Eigen::VectorXd G(const Eigen::VectorXd& x, double sigma) {
  return x.unaryExpr([sigma](double v) { return G(v, sigma); });
}

Eigen::VectorXd BDegrees(const StochasticGraph& graph,
                         const Eigen::VectorXd& x) {
  Eigen::VectorXd deg = Eigen::VectorXd::Zero(graph.b_count());
  for (const Edge& e : graph.edges()) deg(e.b) += x(e.id);
  return deg;
}

AugmentedInstance AddDummyEdges(const StochasticGraph& graph,
                                const Eigen::VectorXd& x, double sigma) {
  CheckSigma(sigma);
  if (x.size() != graph.num_edges()) {
    throw std::invalid_argument("x length does not match the edge count");
  }
  const Eigen::VectorXd deg = BDegrees(graph, x);
  std::vector<Edge> edges = graph.edges();
  std::vector<double> values(x.data(), x.data() + x.size());
  int a_count = graph.a_count();
  for (int u = 0; u < graph.b_count(); ++u) {
    if (deg(u) > sigma + kDegreeEps) {
      throw std::invalid_argument(
          "B vertex " + std::to_string(u) + " has fractional degree " +
          std::to_string(deg(u)) + " above sigma=" + std::to_string(sigma));
    }
    const double gap = sigma - deg(u);
    if (gap <= kLimitWindow) continue;
    Edge dummy;
    dummy.a = a_count++;
    dummy.b = u;
    dummy.w = 0.0;
    dummy.p = 1.0;
    dummy.is_dummy = true;
    edges.push_back(dummy);
    values.push_back(gap);
  }
  AugmentedInstance out;
  out.original_edges = graph.num_edges();
  out.original_a_count = graph.a_count();
  out.graph = StochasticGraph(a_count, graph.b_count(), std::move(edges));
  out.x = Eigen::Map<const Eigen::VectorXd>(values.data(), values.size());
  return out;
}

double SigmaScale(const StochasticGraph& graph, const Eigen::VectorXd& x,
                  double sigma) {
  const Eigen::VectorXd deg = BDegrees(graph, x);
  const double max_deg = deg.size() > 0 ? deg.maxCoeff() : 0.0;
  return max_deg > sigma ? sigma / max_deg : 1.0;
}

double Phi(double tau) {
  if (!(tau >= kOneMinusInvE - 1e-15 && tau < 1.0)) {
    throw std::invalid_argument("phi requires tau in [1-1/e, 1)");
  }
  if (GRatioUnchecked(1.0, 1.0) >= tau) return 1.0;
  // The ratio falls from 1 at x = 0 to 1 - 1/e at x = 1.
  return Bisect([tau](double x) { return GRatioUnchecked(x, 1.0) > tau; },
                0.0, 1.0);
}

double RhoGap(double x, double tau, double phi) {
  return x - 1.0 + std::pow(1.0 - phi / tau, x / phi);
}

double Rho(double tau) {
  if (!(tau >= 0.75 && tau < 1.0)) {
    throw std::invalid_argument("tau must lie in [0.75,1)");
  }
  const double phi = Phi(tau);
  // h is convex with h(0) = 0 and h(1) > 0, so scan down from 1 for the
  // first point where h dips below zero.
  constexpr double kStep = 1e-3;
  double hi = 1.0;
  double lo = hi - kStep;
  while (RhoGap(lo, tau, phi) >= 0.0) {
    hi = lo;
    lo -= kStep;
    if (lo <= 0.0) {
      throw std::domain_error("rho: no positive root for tau=" +
                              std::to_string(tau));
    }
  }
  return Bisect([&](double x) { return RhoGap(x, tau, phi) < 0.0; }, lo, hi);
}

RatioBranches FinalRatioBranches(double tau, double lambda) {
  const double rho = Rho(tau);
  RatioBranches out;
  out.two_round = kOneMinusInvE + std::pow(kOneMinusInvE, 3) / 4.0 * lambda *
                                      (1.0 - tau);
  out.prune = -std::expm1(-rho) / rho * (1.0 - lambda);
  return out;
}

double FinalRatio(double tau, double lambda) {
  return FinalRatioBranches(tau, lambda).ratio();
}

}  // namespace qcmatch
