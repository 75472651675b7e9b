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

#ifndef QCMATCH_RNG_H_
#define QCMATCH_RNG_H_

#include <cstdint>
#include <limits>
#include <random>

namespace qcmatch {

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr uint64_t Mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based generator: the n-th output is Mix64(key + n * gamma). Cheap to
// construct, so every trial can own an independent stream derived from
// (master seed, trial index) without depending on scheduling order.
// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = uint64_t;

  explicit CounterRng(uint64_t key = 0) : state_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    state_ += kGamma;
    return Mix64(state_);
  }

  // Uniform in [0, 1).
  double Uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(*this);
  }

 private:
  static constexpr uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  uint64_t state_;
};

// Stream identifiers used when splitting a trial seed.
enum class Stream : uint64_t {
  kRealization = 1,
  kAlgorithm = 2,
  kGenerator = 3,
  kVerify = 4,
};

inline CounterRng DeriveStream(uint64_t master_seed, uint64_t index,
                               Stream stream) {
  uint64_t key = Mix64(master_seed ^ 0x2545f4914f6cdd1dULL);
  key = Mix64(key + index * 0xd1b54a32d192ed03ULL);
  key = Mix64(key ^ (static_cast<uint64_t>(stream) * 0x8cb92ba72f3d8dd7ULL));
  return CounterRng(key);
}

}  // namespace qcmatch

#endif  // QCMATCH_RNG_H_
