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

// The shrinking transform
//
//   g(x, s) = (e^s - 1)(s - x) x / (s (e^s - e^x)),   g(s, s) = 1 - e^{-s},
//
// dummy-edge padding, and the heavy-edge thresholds phi(tau) and rho(tau).

#ifndef QCMATCH_TRANSFORM_H_
#define QCMATCH_TRANSFORM_H_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qcmatch/instance.h"

namespace qcmatch {

inline constexpr double kDefaultTau = 0.8723;
inline constexpr double kDefaultLambda = 0.1837;
inline constexpr double kDegreeEps = 1e-9;
inline constexpr double kLimitWindow = 1e-12;

struct TransformParams {
  double sigma = 1.0;
  double tau = kDefaultTau;
  double lambda = kDefaultLambda;

  // Throws std::invalid_argument naming the first bad field.
  void Validate() const;
};

// e^s - e^x is written as e^x expm1(s - x) so the factor (s - x) cancels
// cleanly as x approaches s.
template <typename Scalar>
Scalar GRatioUnchecked(Scalar x, Scalar sigma) {
  using std::exp;
  using std::expm1;
  using std::abs;
  const Scalar d = sigma - x;
  if (abs(d) < Scalar(kLimitWindow)) {
    return -expm1(-sigma) / sigma;
  }
  return expm1(sigma) * d / (sigma * exp(x) * expm1(d));
}

template <typename Scalar>
Scalar GUnchecked(Scalar x, Scalar sigma) {
  using std::abs;
  using std::expm1;
  if (abs(sigma - x) < Scalar(kLimitWindow)) return -expm1(-sigma);
  return GRatioUnchecked(x, sigma) * x;
}

// Requires 0 <= x <= sigma (up to kDegreeEps, clamped) and sigma in (0, 1].
double G(double x, double sigma);
// g(x, sigma) / x, extended by its limit 1 at x = 0.
double GRatio(double x, double sigma);
Eigen::VectorXd G(const Eigen::VectorXd& x, double sigma);

struct AugmentedInstance {
  StochasticGraph graph;
  Eigen::VectorXd x;
  int original_edges = 0;
  int original_a_count = 0;
};

// Pads every B vertex with fractional degree below sigma by one dummy edge
// (w = 0, p = 1) to a fresh A vertex. Original edge ids are kept. Throws
// std::invalid_argument if a B vertex exceeds sigma by more than kDegreeEps.
AugmentedInstance AddDummyEdges(const StochasticGraph& graph,
                                const Eigen::VectorXd& x, double sigma);

// Fractional degree of every B vertex.
Eigen::VectorXd BDegrees(const StochasticGraph& graph, const Eigen::VectorXd& x);

// Largest factor in (0, 1] that brings every B degree of x down to sigma.
double SigmaScale(const StochasticGraph& graph, const Eigen::VectorXd& x,
                  double sigma);

// Least x in (0, 1] with g(x, 1) / x <= tau. tau in [1 - 1/e, 1).
double Phi(double tau);

// h(x) = x - 1 + (1 - phi/tau)^(x/phi).
double RhoGap(double x, double tau, double phi);

// Largest root of h in (0, 1]. tau in [3/4, 1).
double Rho(double tau);

struct RatioBranches {
  double two_round = 0.0;
  double prune = 0.0;
  double ratio() const { return std::min(two_round, prune); }
};

RatioBranches FinalRatioBranches(double tau, double lambda);
double FinalRatio(double tau, double lambda);

}  // namespace qcmatch

#endif  // QCMATCH_TRANSFORM_H_
