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

#ifndef SATRM_OPTIONS_HPP
#define SATRM_OPTIONS_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "satrm/conic.hpp"

namespace satrm {

enum class Scheme { rm_rsma, rm_sdma, mmse_rsma, rm_4color, rm_rsma_noinfo };
enum class ObjectiveNorm { l1, l2 };

const char* to_string(Scheme scheme);
const char* to_string(ObjectiveNorm norm);
Scheme scheme_from_string(const std::string& name);
ObjectiveNorm objective_norm_from_string(const std::string& name);

/// Knobs of the successive-convex-approximation rate-matching solver.
struct RmOptions {
    double eta = 0.91;                 // rate-gap weight in (0, 1]
    ObjectiveNorm objective_norm = ObjectiveNorm::l2;
    int max_iter = 20;                 // SCA iteration cap N
    double tol = 1e-4;                 // stopping epsilon on |D_n - D_{n-1}|
    Scheme scheme = Scheme::rm_rsma;
    /// When false the precoder is designed as if both phase-error standard
    /// deviations were zero (robustness ablation); evaluation still uses
    /// the true perturbation model.
    bool use_perturbation_stats = true;
    /// Scales the MMSE regularizer K sigma^2 / P_t of the benchmark.
    double mmse_reg_scale = 1.0;
    /// Sub-band color per beam for the four-color benchmark; empty means
    /// beam index modulo 4.
    std::vector<int> beam_colors;
    conic::SolveOptions solver{1e-7, 1e-9, 1e-11, 200};

    void validate() const {
        if (!(eta > 0.0 && eta <= 1.0))
            throw std::invalid_argument("options: eta must lie in (0, 1]");
        if (max_iter < 1)
            throw std::invalid_argument("options: max_iter must be at least 1");
        if (tol <= 0.0)
            throw std::invalid_argument("options: tol must be positive");
    }
};

} // namespace satrm

#endif
