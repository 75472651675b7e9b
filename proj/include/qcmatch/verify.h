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

// Numeric certification of the analytic inequalities and constants behind
// the rounding algorithms: dense grids for one- and two-variable claims,
// seeded random draws for vector inequalities, and exact event
// probabilities for the per-edge and per-vertex bounds.

#ifndef QCMATCH_VERIFY_H_
#define QCMATCH_VERIFY_H_

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qcmatch/instance.h"
#include "qcmatch/oracle.h"

namespace qcmatch {

struct CheckRecord {
  std::string name;
  std::string domain;
  bool pass = true;
  // Amount by which the checked inequality fails at its worst point;
  // negative or zero when it holds.
  double worst_violation = 0.0;
  std::string location;
  double value = 0.0;  // a representative computed value, when useful
  // Informational records never affect the overall verdict.
  bool gating = true;
};

struct VerificationReport {
  std::vector<CheckRecord> records;

  bool pass() const;
  void Append(const VerificationReport& other);
  // Sorted by record name, stable.
  std::string ToJson() const;
};

// Formulas under test; swapped out by mutation tests.
struct FormulaSet {
  std::function<double(double, double)> g;      // g(x, sigma)
  std::function<double(double, double)> split;  // split expression
  std::function<double(double)> phi;
  std::function<double(double)> rho;
};

FormulaSet DefaultFormulas();

// -8(s - x/2)/(e^s - e^{x/2}) + (e^s - 1)(s - x/2)^2 x/(s (e^s - e^{x/2})^2)
//   + 8(s - x)/(e^s - e^x), continuous at x = s.
double SplitExpression(double x, double sigma);

inline constexpr double kDefaultGridStep = 1e-3;
inline constexpr uint64_t kDefaultVerifySeed = 20260101;

VerificationReport VerifyGClaims(double step,
                                 const FormulaSet& f = DefaultFormulas());
VerificationReport VerifySplitInequality(
    double step, const FormulaSet& f = DefaultFormulas());
VerificationReport VerifyFact1(double step, int trials, uint64_t seed);
VerificationReport VerifyMinProd(int trials, uint64_t seed);
VerificationReport VerifyConstants(const FormulaSet& f = DefaultFormulas(),
                                   double sweep_step = 1e-3);

struct LimitOptions {
  std::vector<int> exact_ks = {1, 2, 3, 4, 5};
  int monte_carlo_k = 50;
  int64_t trials = 1'000'000;
  uint64_t seed = kDefaultVerifySeed;
  int threads = 1;
};

// Star at one B vertex: a distinguished edge with x = 0.5 and k rivals
// sharing the remaining 0.5, all with p = 1, sigma = 1.
VerificationReport VerifyLimitConvergence(const LimitOptions& options = {});

// Probability that the distinguished edge of the k-rival star is matched,
// from the single-vertex recursion rather than enumeration.
double StarMatchProbability(int k, double x_e, double sigma);

// Names accepted by CheckLemmas and the oracle CLI.
const std::vector<std::string>& LemmaNames();

struct LemmaCheck {
  VerificationReport report;
  ExactEventReport events;
  int conditionals_evaluated = 0;
  int conditionals_skipped = 0;
};

// Exact per-instance checks of the bounds for one round of the thinned
// proposal algorithm. `which` holds names from LemmaNames(); empty means all.
LemmaCheck CheckLemmas(const StochasticGraph& graph, const Eigen::VectorXd& x,
                       double sigma, const std::vector<std::string>& which = {},
                       double tolerance = 1e-9);

struct SuiteOptions {
  double grid_step = kDefaultGridStep;
  uint64_t seed = kDefaultVerifySeed;
  int random_trials = 100'000;
  LimitOptions limit;
};

// suite: g | split | fact1 | minprod | constants | limit | all.
VerificationReport RunSuite(const std::string& suite,
                            const SuiteOptions& options = {});

}  // namespace qcmatch

#endif  // QCMATCH_VERIFY_H_
