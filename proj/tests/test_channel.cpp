#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "satrm/channel.hpp"
#include "satrm/scenario.hpp"

using namespace satrm;

namespace {

// Independent truncated power-series Bessel evaluation (oracle for the
// closed-form beam gain path, which uses std::cyl_bessel_j).
double bessel_series(int n, double x) {
    double sum = 0.0;
    double fact_m = 1.0;
    for (int m = 0; m < 40; ++m) {
        double fact_mn = 1.0;
        for (int i = 2; i <= m + n; ++i)
            fact_mn *= i;
        sum += ((m % 2 == 0) ? 1.0 : -1.0) / (fact_m * fact_mn) * std::pow(0.5 * x, 2 * m + n);
        fact_m *= (m + 1);
    }
    return sum;
}

Geometry grid_geometry() {
    Geometry g;
    g.beam_centers = {{-10e3, -10e3}, {10e3, -10e3}, {-10e3, 10e3}, {10e3, 10e3}};
    g.user_positions = {{-10e3, -10e3}, {10e3, -10e3}, {-9e3, 9.5e3}, {10.5e3, 9e3},
                        {12e3, 11e3}};
    g.user_beam_assignment = {0, 1, 2, 3, 3};
    return g;
}

constexpr double kDeg = 0.017453292519943295;

} // namespace

TEST_CASE("beam gain at boresight is the maximum gain") {
    CHECK(beam_gain(0.0, 1.7647 * kDeg, 123.456) == doctest::Approx(123.456).epsilon(1e-12));
}

TEST_CASE("beam gain at the 3 dB angle halves the gain (Bessel series oracle)") {
    const double theta3 = 1.7647 * kDeg;
    const double mu = 2.07123; // sin(theta)/sin(theta_3db) = 1 at the 3 dB angle
    const double bracket = bessel_series(1, mu) / (2.0 * mu) + 36.0 * bessel_series(3, mu) / (mu * mu * mu);
    const double oracle = bracket * bracket; // = 0.500000408... by the series
    CHECK(oracle == doctest::Approx(0.5).epsilon(0.01));
    CHECK(beam_gain(theta3, theta3, 1.0) == doctest::Approx(oracle).epsilon(1e-9));
    // Table-1 scaling: 38.5 dBi peak
    const double g_max = std::pow(10.0, 3.85);
    CHECK(beam_gain(theta3, theta3, g_max) == doctest::Approx(0.5 * g_max).epsilon(0.01));
}

TEST_CASE("beam gain is continuous at zero and non-negative over the quadrant") {
    const double theta3 = 1.7647 * kDeg;
    CHECK(beam_gain(1e-9, theta3, 2.0) == doctest::Approx(2.0).epsilon(1e-6));
    for (int i = 0; i <= 200; ++i) {
        const double theta = i * (0.5 * 3.14159265358979323846 / 200.0) * 0.999;
        CHECK(beam_gain(theta, theta3, 2.0) >= 0.0);
    }
}

TEST_CASE("beam gain rejects negative angles") {
    CHECK_THROWS_AS(beam_gain(-0.1, 0.03, 1.0), std::domain_error);
}

TEST_CASE("boresight angle is zero at the beam center and matches atan(d/h)") {
    Geometry g = grid_geometry();
    CHECK(boresight_angle(0, 0, g) == doctest::Approx(0.0).epsilon(1e-15));

    // single-beam nadir geometry: offset d on the ground, satellite at h
    Geometry nadir;
    nadir.beam_centers = {{0.0, 0.0}};
    nadir.user_positions = {{5e3, 0.0}};
    nadir.user_beam_assignment = {0};
    nadir.sat_altitude_m = 600e3;
    CHECK(boresight_angle(0, 0, nadir) ==
          doctest::Approx(std::atan(5e3 / 600e3)).epsilon(1e-6));
}

TEST_CASE("boresight angle is symmetric on the 2x2 grid") {
    Geometry g = grid_geometry();
    // user 0 sits at center of beam 0, user 1 at center of beam 1
    CHECK(boresight_angle(1, 0, g) == doctest::Approx(boresight_angle(0, 1, g)).epsilon(1e-12));
}

TEST_CASE("rain attenuation degenerate and fixed-mean cases") {
    RandomStream rng(5);
    CHECK(sample_rain_attenuation(0.0, 0.0, rng) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(sample_rain_attenuation(-2.6, 0.0, rng) ==
          doctest::Approx(0.5495408738576245).epsilon(1e-12));
}

TEST_CASE("rain attenuation dB statistics converge to (mu, sigma)") {
    RandomStream rng(77);
    const int n = 1000000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double chi_db = 10.0 * std::log10(sample_rain_attenuation(-2.6, 1.63, rng));
        sum += chi_db;
        sum2 += chi_db * chi_db;
    }
    const double mean = sum / n;
    const double stddev = std::sqrt(sum2 / n - mean * mean);
    CHECK(mean == doctest::Approx(-2.6).epsilon(0.01 / 2.6));
    CHECK(stddev == doctest::Approx(1.63).epsilon(0.01));
}

TEST_CASE("channel entry magnitude matches the scalar link-budget oracle") {
    // user at the center of beam 0, rain disabled
    Geometry g = grid_geometry();
    g.beam_centers = {{0.0, 0.0}};
    g.user_positions = {{0.0, 0.0}};
    g.user_beam_assignment = {0};
    LinkPhysics phy;
    phy.rain_mu_db = 0.0;
    phy.rain_sigma_db = 0.0;
    const ChannelSet cs = synthesize_channel(g, phy, 11);

    const double lambda = 299792458.0 / 20e9;
    const double mag = std::sqrt(std::pow(10.0, 3.85) * std::pow(10.0, 3.97)) /
                       (4.0 * 3.14159265358979323846 * (600e3 / lambda) *
                        std::sqrt(1.380649e-23 * 150.0 * 400e6));
    CHECK(std::abs(cs.h_hat(0, 0)) == doctest::Approx(mag).epsilon(1e-12));
    // e^{-j phi} convention: rotating back by the stored nominal phase
    // recovers a real positive entry
    const std::complex<double> rotated =
        cs.h_hat(0, 0) * std::polar(1.0, cs.nominal_phases(0, 0));
    CHECK(rotated.real() == doctest::Approx(mag).epsilon(1e-12));
    CHECK(rotated.imag() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("channel magnitudes do not depend on the phase stream") {
    Geometry g = grid_geometry();
    LinkPhysics phy;
    const ChannelSet a = synthesize_channel_with_streams(g, phy, 100, 200);
    const ChannelSet b = synthesize_channel_with_streams(g, phy, 100, 201);
    // magnitudes agree to rounding of the polar construction
    CHECK((a.h_hat.cwiseAbs() - b.h_hat.cwiseAbs()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((a.h_hat - b.h_hat).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("channel synthesis is deterministic for a fixed seed") {
    Geometry g = grid_geometry();
    LinkPhysics phy;
    const ChannelSet a = synthesize_channel(g, phy, 42);
    const ChannelSet b = synthesize_channel(g, phy, 42);
    CHECK((a.h_hat - b.h_hat).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.content_hash() == b.content_hash());
    const ChannelSet c = synthesize_channel(g, phy, 43);
    CHECK(a.content_hash() != c.content_hash());
}

TEST_CASE("phase perturbation preserves magnitudes and is identity at delta=0") {
    RandomStream rng(9);
    Eigen::VectorXcd h(3);
    h << std::complex<double>(1.0, 2.0), std::complex<double>(-0.5, 0.25),
        std::complex<double>(0.0, -3.0);
    const Eigen::VectorXcd same = apply_phase_perturbation(h, 0.0, rng);
    CHECK((same - h).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::VectorXcd rot = apply_phase_perturbation(h, 0.5, rng);
    for (int i = 0; i < 3; ++i)
        CHECK(std::abs(rot(i)) == doctest::Approx(std::abs(h(i))).epsilon(1e-15));
}

TEST_CASE("mean of exp(j theta) over 1e6 draws matches exp(-delta^2/2)") {
    RandomStream rng(123);
    const double delta = 5.0 * kDeg;
    std::complex<double> acc{0.0, 0.0};
    const int n = 1000000;
    Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(1);
    for (int i = 0; i < n; ++i)
        acc += apply_phase_perturbation(ones, delta, rng)(0);
    CHECK(std::abs(acc.real() / n - 0.9961995224174713) < 5e-4);
    CHECK(std::abs(acc.imag() / n) < 5e-4);
}

TEST_CASE("geometry validation names bad assignments") {
    Geometry g = grid_geometry();
    g.user_beam_assignment[2] = 9;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g = grid_geometry();
    g.user_beam_assignment.pop_back();
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    LinkPhysics bad;
    bad.theta_3db_rad = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
