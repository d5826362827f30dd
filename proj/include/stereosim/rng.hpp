/*
 * Copyright 2026 The stereosim Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef STEREOSIM_RNG_HPP
#define STEREOSIM_RNG_HPP

#include <cstdint>
#include <random>

namespace stereosim {

// SplitMix64 step. Used to derive independent stream seeds from the master
// seed and to build pure stateless draws for scripted policies.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream ids for the per-concern generators. Adding message traffic must
// never perturb outcome draws, so each concern owns a stream.
enum : std::uint64_t {
  kAssignmentStream = 1,
  kOutcomeStream = 2,
  kSupervisorStream = 3,
  kPolicyStreamBase = 0x100,  // + agent index
};

inline std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t stream_id) {
  return splitmix64(master ^ splitmix64(stream_id));
}

// Deterministic generator with fully specified draw functions. mt19937_64 is
// specified by the standard; the bounded draws below avoid the
// implementation-defined std::uniform_*_distribution algorithms so identical
// seeds reproduce identical runs on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0,1), 53-bit resolution.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [0,n). Multiply-shift; bias is < n / 2^64.
  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  bool bernoulli(double p) { return next_unit() < p; }

 private:
  std::mt19937_64 gen_;
};

// Stateless draws for scripted policies: pure functions of the inputs, so a
// policy's behaviour is a function of (policy seed, observation) only.
inline std::uint64_t stateless_u64(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                   std::uint64_t c = 0) {
  return splitmix64(splitmix64(splitmix64(seed ^ splitmix64(a)) ^ splitmix64(b)) ^
                    splitmix64(c));
}

inline double stateless_unit(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                             std::uint64_t c = 0) {
  return static_cast<double>(stateless_u64(seed, a, b, c) >> 11) * 0x1.0p-53;
}

inline std::size_t stateless_index(std::size_t n, std::uint64_t seed, std::uint64_t a,
                                   std::uint64_t b = 0, std::uint64_t c = 0) {
  return static_cast<std::size_t>(
      (static_cast<unsigned __int128>(stateless_u64(seed, a, b, c)) * n) >> 64);
}

}  // namespace stereosim

#endif  // STEREOSIM_RNG_HPP
