// SPDX-License-Identifier: Apache-2.0
//
// satrm: RSMA rate-matching precoder design and link simulation for
// multibeam LEO satellite downlinks
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef SATRM_RNG_HPP
#define SATRM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace satrm {

/// Deterministic random stream. All distributions are generated from raw
/// mt19937_64 output with fixed arithmetic, so sequences are identical on
/// every platform (std::normal_distribution et al. are implementation
/// defined and must not be used anywhere in the library).
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; the second deviate of each pair is
    /// cached, so one call consumes either two uniforms or none.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // 1-u keeps the argument of log strictly positive
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925287 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// splitmix64 finalizer; decorrelates sequential seeds.
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream_id) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream_id + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Independent substream for (seed, purpose, index); rain, phase,
    /// user layout and Monte-Carlo draws each get their own.
    static RandomStream from(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index = 0) {
        return RandomStream(mix(mix(seed, purpose), index));
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Stream purposes; fixed tags keep every consumer on its own substream.
namespace stream_purpose {
inline constexpr std::uint64_t kRain = 0x7261696eULL;        // "rain"
inline constexpr std::uint64_t kPhase = 0x70686173ULL;       // "phas"
inline constexpr std::uint64_t kUserLayout = 0x75736572ULL;  // "user"
inline constexpr std::uint64_t kMonteCarlo = 0x6d6f6e74ULL;  // "mont"
inline constexpr std::uint64_t kTrial = 0x7472696cULL;       // "tril"
} // namespace stream_purpose

} // namespace satrm

#endif
