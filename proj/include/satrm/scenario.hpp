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

#ifndef SATRM_SCENARIO_HPP
#define SATRM_SCENARIO_HPP

#include <Eigen/Dense>
#include <cstdint>

#include "satrm/channel.hpp"
#include "satrm/options.hpp"
#include "satrm/perturbation.hpp"

namespace satrm {

/// Full experiment description: footprint, link physics, perturbation
/// model, per-user traffic demands (bps/Hz), optimizer knobs, trial count
/// and master seed.
struct Scenario {
    Geometry geometry;
    LinkPhysics physics;
    PerturbationModel perturbation;
    Eigen::VectorXd r_target;
    RmOptions opts;
    int trials = 20;
    std::uint64_t seed = 1;

    int num_feeds() const { return geometry.num_feeds(); }
    int num_users() const { return geometry.num_users(); }

    void validate() const {
        geometry.validate();
        physics.validate();
        perturbation.validate();
        opts.validate();
        if (r_target.size() != geometry.num_users())
            throw std::invalid_argument("scenario: r_target length must equal user count");
        if (r_target.minCoeff() < 0.0)
            throw std::invalid_argument("scenario: r_target must be non-negative");
        if (trials < 1)
            throw std::invalid_argument("scenario: trials must be at least 1");
    }
};

/// Four spot beams on a 2x2 grid with 20 km spacing, five users with beam 4
/// hosting two of them, users placed uniformly inside their beam from the
/// scenario seed. Demands default to [2, 2, 3, 3.5, 4] bps/Hz.
Scenario default_scenario(std::uint64_t seed = 1);

/// Draws user positions uniformly inside their assigned beams (the layout
/// substream of `seed`); used whenever a scenario does not pin coordinates.
std::vector<Eigen::Vector2d> draw_user_positions(const Geometry& geometry, std::uint64_t seed);

inline ChannelSet synthesize_channel(const Scenario& scenario, std::uint64_t seed) {
    return synthesize_channel(scenario.geometry, scenario.physics, seed);
}

} // namespace satrm

#endif
