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

#include "satrm/channel.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace satrm {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
} // namespace

void Geometry::validate() const {
    if (sat_altitude_m <= 0.0)
        throw std::invalid_argument("geometry: sat_altitude_m must be positive");
    if (beam_radius_m <= 0.0)
        throw std::invalid_argument("geometry: beam_radius_m must be positive");
    if (beam_centers.empty())
        throw std::invalid_argument("geometry: at least one beam center required");
    if (user_positions.empty())
        throw std::invalid_argument("geometry: at least one user required");
    if (user_beam_assignment.size() != user_positions.size())
        throw std::invalid_argument("geometry: user_beam_assignment length must equal user count");
    for (int beam : user_beam_assignment) {
        if (beam < 0 || beam >= num_feeds())
            throw std::invalid_argument("geometry: user_beam_assignment entry " +
                                        std::to_string(beam) + " out of range");
    }
}

void LinkPhysics::validate() const {
    if (carrier_freq_hz <= 0.0 || bandwidth_hz <= 0.0)
        throw std::invalid_argument("physics: carrier_freq_hz and bandwidth_hz must be positive");
    if (theta_3db_rad <= 0.0 || theta_3db_rad >= kPi / 2.0)
        throw std::invalid_argument("physics: theta_3db_rad must lie in (0, pi/2)");
    if (g_max_linear <= 0.0 || g_rx_linear <= 0.0)
        throw std::invalid_argument("physics: antenna gains must be positive");
    if (t_sys_kelvin <= 0.0 || boltzmann <= 0.0)
        throw std::invalid_argument("physics: t_sys_kelvin and boltzmann must be positive");
    if (rain_sigma_db < 0.0)
        throw std::invalid_argument("physics: rain_sigma_db must be non-negative");
    if (per_feed_power_w <= 0.0)
        throw std::invalid_argument("physics: per_feed_power_w must be positive");
    if (noise_variance <= 0.0)
        throw std::invalid_argument("physics: noise_variance must be positive");
}

std::uint64_t ChannelSet::content_hash() const {
    const auto* bytes = reinterpret_cast<const unsigned char*>(h_hat.data());
    const std::size_t n = sizeof(std::complex<double>) * static_cast<std::size_t>(h_hat.size());
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
        hash ^= bytes[i];
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

double beam_gain(double theta_rad, double theta_3db_rad, double g_max_linear) {
    if (theta_rad < 0.0)
        throw std::domain_error("beam_gain: negative boresight angle");
    if (theta_3db_rad <= 0.0)
        throw std::domain_error("beam_gain: theta_3db must be positive");

    const double mu = 2.07123 * std::sin(theta_rad) / std::sin(theta_3db_rad);
    // Small-argument limit: J1(mu)/(2mu) -> 1/4, 36 J3(mu)/mu^3 -> 3/4,
    // so the bracket tends to 1 with O(mu^2) error.
    if (mu < 1e-6)
        return g_max_linear;
    const double bracket =
        std::cyl_bessel_j(1, mu) / (2.0 * mu) + 36.0 * std::cyl_bessel_j(3, mu) / (mu * mu * mu);
    return g_max_linear * bracket * bracket;
}

namespace {

Eigen::Vector3d satellite_position(const Geometry& g) {
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (const auto& c : g.beam_centers)
        centroid += c;
    centroid /= static_cast<double>(g.beam_centers.size());
    return {centroid.x(), centroid.y(), g.sat_altitude_m};
}

void check_indices(int feed_index, int user_index, const Geometry& g) {
    if (feed_index < 0 || feed_index >= g.num_feeds())
        throw std::out_of_range("boresight_angle: feed index out of range");
    if (user_index < 0 || user_index >= g.num_users())
        throw std::out_of_range("boresight_angle: user index out of range");
}

} // namespace

double boresight_angle(int feed_index, int user_index, const Geometry& geometry) {
    check_indices(feed_index, user_index, geometry);
    const Eigen::Vector3d sat = satellite_position(geometry);
    const Eigen::Vector2d& bc = geometry.beam_centers[static_cast<std::size_t>(feed_index)];
    const Eigen::Vector2d& up = geometry.user_positions[static_cast<std::size_t>(user_index)];
    const Eigen::Vector3d to_center = Eigen::Vector3d(bc.x(), bc.y(), 0.0) - sat;
    const Eigen::Vector3d to_user = Eigen::Vector3d(up.x(), up.y(), 0.0) - sat;
    // atan2 form stays accurate for the sub-degree angles of a 20 km grid
    return std::atan2(to_center.cross(to_user).norm(), to_center.dot(to_user));
}

double slant_range_m(int user_index, const Geometry& geometry) {
    if (user_index < 0 || user_index >= geometry.num_users())
        throw std::out_of_range("slant_range_m: user index out of range");
    const Eigen::Vector3d sat = satellite_position(geometry);
    const Eigen::Vector2d& up = geometry.user_positions[static_cast<std::size_t>(user_index)];
    return (Eigen::Vector3d(up.x(), up.y(), 0.0) - sat).norm();
}

double sample_rain_attenuation(double mu_db, double sigma_db, RandomStream& rng) {
    if (sigma_db < 0.0)
        throw std::invalid_argument("sample_rain_attenuation: sigma_db must be non-negative");
    const double chi_db = rng.normal(mu_db, sigma_db);
    return std::pow(10.0, chi_db / 10.0);
}

ChannelSet synthesize_channel_with_streams(const Geometry& geometry, const LinkPhysics& physics,
                                           std::uint64_t rain_seed, std::uint64_t phase_seed) {
    geometry.validate();
    physics.validate();

    const int nt = geometry.num_feeds();
    const int k = geometry.num_users();

    RandomStream rain_rng{rain_seed};
    RandomStream phase_rng{phase_seed};

    ChannelSet out;
    out.h_hat.resize(nt, k);
    out.rain_draws.resize(nt, k);
    out.nominal_phases.resize(nt, k);

    const double lambda = physics.wavelength_m();
    const double noise_root =
        std::sqrt(physics.boltzmann * physics.t_sys_kelvin * physics.bandwidth_hz);

    for (int user = 0; user < k; ++user) {
        const double d = slant_range_m(user, geometry);
        const double path = 4.0 * kPi * (d / lambda) * noise_root;
        for (int feed = 0; feed < nt; ++feed) {
            const double theta = boresight_angle(feed, user, geometry);
            const double gain = beam_gain(theta, physics.theta_3db_rad, physics.g_max_linear);
            const double chi =
                sample_rain_attenuation(physics.rain_mu_db, physics.rain_sigma_db, rain_rng);
            const double phi = phase_rng.uniform(0.0, kTwoPi);
            const double magnitude =
                std::sqrt(gain * physics.g_rx_linear) / path / std::sqrt(chi);
            out.rain_draws(feed, user) = chi;
            out.nominal_phases(feed, user) = phi;
            out.h_hat(feed, user) = std::polar(magnitude, -phi);
        }
    }
    return out;
}

ChannelSet synthesize_channel(const Geometry& geometry, const LinkPhysics& physics,
                              std::uint64_t seed) {
    ChannelSet out = synthesize_channel_with_streams(
        geometry, physics, RandomStream::mix(seed, stream_purpose::kRain),
        RandomStream::mix(seed, stream_purpose::kPhase));
    out.rng_seed = seed;
    return out;
}

Eigen::VectorXcd apply_phase_perturbation(const Eigen::VectorXcd& h_col, double delta_rad,
                                          RandomStream& rng) {
    if (delta_rad < 0.0)
        throw std::invalid_argument("apply_phase_perturbation: delta must be non-negative");
    Eigen::VectorXcd out(h_col.size());
    for (Eigen::Index i = 0; i < h_col.size(); ++i)
        out(i) = h_col(i) * std::polar(1.0, rng.normal(0.0, delta_rad));
    return out;
}

} // namespace satrm
