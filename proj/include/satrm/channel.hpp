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

#ifndef SATRM_CHANNEL_HPP
#define SATRM_CHANNEL_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "satrm/rng.hpp"

namespace satrm {

/// Multibeam footprint: feed/beam layout on a flat ground plane with the
/// satellite at altitude above the centroid of the beam grid. Positions in
/// meters, one spot beam per antenna feed.
struct Geometry {
    double sat_altitude_m = 600e3;
    std::vector<Eigen::Vector2d> beam_centers; // one per feed
    double beam_radius_m = 10e3;
    std::vector<Eigen::Vector2d> user_positions;
    std::vector<int> user_beam_assignment; // beam index per user

    int num_feeds() const { return static_cast<int>(beam_centers.size()); }
    int num_users() const { return static_cast<int>(user_positions.size()); }

    /// Throws std::invalid_argument when a dimension or range invariant fails.
    void validate() const;
};

/// Link budget constants. Gains and powers are linear; angles in radians.
/// The channel magnitude already folds sqrt(kappa*T_sys*B) into its
/// denominator, so noise_variance stays at 1 and is not scaled again.
struct LinkPhysics {
    double carrier_freq_hz = 20e9;
    double bandwidth_hz = 400e6;
    double theta_3db_rad = 1.7647 * 0.017453292519943295; // 1.7647 deg
    double g_max_linear = 7079.457843841379;              // 38.5 dBi
    double g_rx_linear = 9332.543007969915;               // 39.7 dBi
    double t_sys_kelvin = 150.0;
    double boltzmann = 1.380649e-23;
    double rain_mu_db = -2.6;
    double rain_sigma_db = 1.63;
    double per_feed_power_w = 0.1419; // 21.52 dBm
    double noise_variance = 1.0;

    double wavelength_m() const { return 299792458.0 / carrier_freq_hz; }
    double total_power_w(int num_feeds) const { return per_feed_power_w * num_feeds; }

    void validate() const;
};

/// Satellite-side partial CSI plus the draws that produced it. Columns of
/// h_hat are users; rows are feeds. rng_seed is kept so that later
/// perturbation draws for the same realization can derive substreams.
struct ChannelSet {
    Eigen::MatrixXcd h_hat;          // N_t x K
    std::uint64_t rng_seed = 0;
    Eigen::MatrixXd rain_draws;      // linear chi per (feed, user)
    Eigen::MatrixXd nominal_phases;  // phi in [0, 2*pi)

    int num_feeds() const { return static_cast<int>(h_hat.rows()); }
    int num_users() const { return static_cast<int>(h_hat.cols()); }

    /// FNV-1a over the raw h_hat bytes; used to verify paired-seed trials.
    std::uint64_t content_hash() const;
};

/// Tapered-aperture beam gain G_max * [J1(mu)/(2 mu) + 36 J3(mu)/mu^3]^2
/// with mu = 2.07123 sin(theta)/sin(theta_3db). The removable singularity
/// at theta = 0 evaluates to G_max.
double beam_gain(double theta_rad, double theta_3db_rad, double g_max_linear);

/// Angle at the satellite between the boresight ray to the beam center of
/// `feed_index` and the ray to user `user_index`.
double boresight_angle(int feed_index, int user_index, const Geometry& geometry);

/// Slant range from the satellite to user `user_index`.
double slant_range_m(int user_index, const Geometry& geometry);

/// Log-normal rain attenuation: chi_dB ~ N(mu_db, sigma_db^2), returned in
/// linear scale (strictly positive).
double sample_rain_attenuation(double mu_db, double sigma_db, RandomStream& rng);

/// Draws the satellite-known partial CSI matrix. Rain and phase use
/// separate substreams of `seed`, so magnitudes are unaffected by the
/// phase draws.
ChannelSet synthesize_channel(const Geometry& geometry, const LinkPhysics& physics,
                              std::uint64_t seed);

/// As above with explicit rain/phase substream seeds (test hook).
ChannelSet synthesize_channel_with_streams(const Geometry& geometry, const LinkPhysics& physics,
                                           std::uint64_t rain_seed, std::uint64_t phase_seed);

/// Entrywise h .* exp(j theta) with theta ~ N(0, delta^2 I). Preserves the
/// magnitude of every entry exactly.
Eigen::VectorXcd apply_phase_perturbation(const Eigen::VectorXcd& h_col, double delta_rad,
                                          RandomStream& rng);

} // namespace satrm

#endif
