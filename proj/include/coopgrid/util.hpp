// Copyright 2026 The coopgrid Authors.
//
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

#pragma once

#include <cstdint>
#include <cstdlib>
#include <string>

// Shared plumbing: thread capping for the OpenMP kernels and deterministic
// seeding/hashing for the Monte Carlo harness.

namespace coopgrid {

// Number of threads parallel kernels may use: the OpenMP default, capped by
// the COOPGRID_THREADS environment variable when it is set to a positive
// integer.  Returns 1 when OpenMP is unavailable.
int thread_cap();

// SplitMix64 step; the standard way to derive independent sub-seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Deterministic sub-seed for one Monte Carlo unit of work, so results do
// not depend on scheduling order.
inline std::uint64_t sub_seed(std::uint64_t master, std::uint64_t stream,
                              std::uint64_t index) {
  return splitmix64(splitmix64(master ^ (0x632be59bd9b4e019ull * (stream + 1))) +
                    index);
}

// Map a 64-bit word to [0, 1) with 53-bit resolution (bit-stable across
// platforms, unlike std::uniform_real_distribution).
inline double uniform01(std::uint64_t word) {
  return static_cast<double>(word >> 11) * 0x1.0p-53;
}

// Counter-mode SplitMix64 stream.  Cheap, seedable from sub_seed, and
// bit-stable across platforms and thread counts.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : base_(seed) {}

  std::uint64_t word() {
    return splitmix64(base_ + (counter_++) * 0x9e3779b97f4a7c15ull);
  }
  double uniform() { return uniform01(word()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n); n must be positive and small enough that
  // the floor bias is irrelevant (sampling indices, not cryptography).
  int below(int n) {
    const int k = static_cast<int>(uniform() * static_cast<double>(n));
    return k >= n ? n - 1 : k;
  }

 private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

// FNV-1a over a byte string; used for config digests in reports.
inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace coopgrid
