#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "satrm/rates.hpp"

using namespace satrm;

namespace {

constexpr double kDeg = 0.017453292519943295;

Eigen::MatrixXcd random_channel(int nt, int k, RandomStream& rng, double scale = 1.0) {
    Eigen::MatrixXcd h(nt, k);
    for (int c = 0; c < k; ++c)
        for (int r = 0; r < nt; ++r)
            h(r, c) = scale * std::complex<double>(rng.normal(), rng.normal()) / std::sqrt(2.0);
    return h;
}

Precoder random_precoder(int nt, int k, RandomStream& rng, double scale = 0.3) {
    Precoder p;
    p.p = random_channel(nt, k + 1, rng, scale);
    p.c = Eigen::VectorXd::Zero(k);
    return p;
}

// Independent assembly of the closed forms straight from the expectation
// masks; shares no code with the library path.
struct DirectRates {
    Eigen::VectorXd common, priv;
};

DirectRates direct_rates(const Eigen::MatrixXcd& h, const Precoder& pre, double dfb, double dce,
                         double sigma2) {
    const int nt = static_cast<int>(h.rows());
    const int k = static_cast<int>(h.cols());
    Eigen::MatrixXcd mask_fb(nt, nt), mask_ce(nt, nt);
    for (int r = 0; r < nt; ++r)
        for (int c = 0; c < nt; ++c) {
            mask_fb(r, c) = r == c ? 1.0 : std::exp(-dfb * dfb);
            const double half = std::exp(-dce * dce / 2.0);
            mask_ce(r, c) = r == c ? 2.0 - 2.0 * half : (1.0 - half) * (1.0 - half);
        }
    DirectRates out;
    out.common.resize(k);
    out.priv.resize(k);
    for (int u = 0; u < k; ++u) {
        const Eigen::MatrixXcd outer = h.col(u) * h.col(u).adjoint();
        const Eigen::MatrixXcd qfb = outer.cwiseProduct(mask_fb);
        const Eigen::MatrixXcd qboth = qfb.cwiseProduct(mask_ce);
        auto qf = [&](const Eigen::VectorXcd& v, const Eigen::MatrixXcd& q) {
            return std::real(std::complex<double>(v.adjoint() * q * v));
        };
        double l_c = 0.0, l_p = 0.0;
        for (int j = 0; j < k + 1; ++j) {
            l_c += qf(pre.p.col(j), qboth);
            l_p += qf(pre.p.col(j), qboth);
        }
        for (int j = 1; j < k + 1; ++j) {
            l_c += qf(pre.p.col(j), qfb);
            if (j != u + 1)
                l_p += qf(pre.p.col(j), qfb);
        }
        out.common(u) = std::log2(1.0 + qf(pre.p.col(0), qfb) / (l_c + sigma2));
        out.priv(u) = std::log2(1.0 + qf(pre.p.col(u + 1), qfb) / (l_p + sigma2));
    }
    return out;
}

} // namespace

TEST_CASE("zero common precoder gives zero common rates") {
    RandomStream rng(3);
    const Eigen::MatrixXcd h = random_channel(4, 3, rng);
    const PerturbationStats st = build_stats(h, {5.0 * kDeg, 2.0 * kDeg});
    Precoder pre = random_precoder(4, 3, rng);
    pre.p.col(0).setZero();
    const Eigen::VectorXd rc = common_rate(pre, st, 1.0);
    CHECK(rc.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scalar single-user reduction: R_c = log2(2) = 1") {
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Ones(1, 1);
    const PerturbationStats st = build_stats(h, {0.0, 0.0});
    Precoder pre;
    pre.p = Eigen::MatrixXcd::Zero(1, 2);
    pre.p(0, 0) = 1.0; // p_c = 1, p_1 = 0
    pre.c = Eigen::VectorXd::Zero(1);
    const Eigen::VectorXd rc = common_rate(pre, st, 1.0);
    CHECK(rc(0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(private_rate(pre, st, 1.0)(0) == 0.0);
}

TEST_CASE("closed forms match an independent direct assembly within 1e-12") {
    RandomStream rng(41);
    const double dfb = 5.0 * kDeg, dce = 2.0 * kDeg;
    for (int rep = 0; rep < 5; ++rep) {
        const Eigen::MatrixXcd h = random_channel(4, 2, rng, 2.0);
        const PerturbationStats st = build_stats(h, {dfb, dce});
        const Precoder pre = random_precoder(4, 2, rng);
        const DirectRates oracle = direct_rates(h, pre, dfb, dce, 1.0);
        const Eigen::VectorXd rc = common_rate(pre, st, 1.0);
        const Eigen::VectorXd rp = private_rate(pre, st, 1.0);
        for (int u = 0; u < 2; ++u) {
            CHECK(rc(u) == doctest::Approx(oracle.common(u)).epsilon(1e-12));
            CHECK(rp(u) == doctest::Approx(oracle.priv(u)).epsilon(1e-12));
        }
    }
}

TEST_CASE("perfect-CSI reduction matches the direct SINR formulas") {
    RandomStream rng(43);
    const Eigen::MatrixXcd h = random_channel(4, 3, rng, 2.0);
    const PerturbationStats st = build_stats(h, {0.0, 0.0});
    const Precoder pre = random_precoder(4, 3, rng);
    const Eigen::VectorXd rc = common_rate(pre, st, 1.0);
    const Eigen::VectorXd rp = private_rate(pre, st, 1.0);
    for (int u = 0; u < 3; ++u) {
        double denom_c = 1.0, denom_p = 1.0;
        for (int j = 1; j < 4; ++j) {
            const double w = std::norm(std::complex<double>(h.col(u).dot(pre.p.col(j))));
            denom_c += w;
            if (j != u + 1)
                denom_p += w;
        }
        const double rc_direct =
            std::log2(1.0 + std::norm(std::complex<double>(h.col(u).dot(pre.p.col(0)))) / denom_c);
        const double rp_direct = std::log2(
            1.0 + std::norm(std::complex<double>(h.col(u).dot(pre.p.col(u + 1)))) / denom_p);
        CHECK(rc(u) == doctest::Approx(rc_direct).epsilon(1e-9));
        CHECK(rp(u) == doctest::Approx(rp_direct).epsilon(1e-9));
    }
}

TEST_CASE("perfect CSIR drops the q_both terms from the private leakage") {
    RandomStream rng(44);
    const Eigen::MatrixXcd h = random_channel(4, 3, rng);
    const PerturbationStats st = build_stats(h, {5.0 * kDeg, 0.0});
    const Precoder pre = random_precoder(4, 3, rng);
    const Eigen::VectorXd leak = private_leakage(pre, st);
    for (int u = 0; u < 3; ++u) {
        double expected = 0.0;
        for (int j = 1; j < 4; ++j) {
            if (j == u + 1)
                continue;
            expected += std::real(
                std::complex<double>(pre.p.col(j).adjoint() * st.q_fb[u] * pre.p.col(j)));
        }
        CHECK(leak(u) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("common leakage exceeds private leakage by the own-stream power") {
    RandomStream rng(45);
    const Eigen::MatrixXcd h = random_channel(4, 4, rng, 2.0);
    const PerturbationStats st = build_stats(h, {5.0 * kDeg, 2.0 * kDeg});
    const Precoder pre = random_precoder(4, 4, rng);
    const Eigen::VectorXd lc = common_leakage(pre, st);
    const Eigen::VectorXd lp = private_leakage(pre, st);
    for (int u = 0; u < 4; ++u) {
        const double own = std::real(
            std::complex<double>(pre.p.col(u + 1).adjoint() * st.q_fb[u] * pre.p.col(u + 1)));
        CHECK(own >= 0.0);
        CHECK(lc(u) - lp(u) == doctest::Approx(own).epsilon(1e-12));
    }
}

TEST_CASE("rates stay finite while scaling the common stream") {
    RandomStream rng(46);
    const Eigen::MatrixXcd h = random_channel(4, 3, rng);
    const PerturbationStats st = build_stats(h, {5.0 * kDeg, 2.0 * kDeg});
    Precoder pre = random_precoder(4, 3, rng);
    const Eigen::VectorXcd pc = pre.p.col(0);
    double prev = -1.0;
    for (int i = 0; i <= 100; ++i) {
        const double t = 0.1 * i;
        pre.p.col(0) = t * pc;
        const Eigen::VectorXd rc = common_rate(pre, st, 1.0);
        CHECK(rc.allFinite());
        CHECK(rc.minCoeff() >= 0.0);
        CHECK(rc(0) >= prev); // numerator grows faster than the leakage
        prev = rc(0);
    }
}

TEST_CASE("total rates combine splits and flag undecodable common sums") {
    RandomStream rng(47);
    const Eigen::MatrixXcd h = random_channel(4, 3, rng, 2.0);
    const PerturbationStats st = build_stats(h, {5.0 * kDeg, 2.0 * kDeg});
    Precoder pre = random_precoder(4, 3, rng);

    pre.c = Eigen::VectorXd::Zero(3);
    RateReport rep = total_rates(pre, st, 1.0);
    CHECK((rep.r_total - rep.r_private).cwiseAbs().maxCoeff() == 0.0);
    CHECK(rep.common_sum_ok);

    pre.c = Eigen::VectorXd::Constant(3, rep.r_common.minCoeff() + 1.0);
    rep = total_rates(pre, st, 1.0);
    CHECK_FALSE(rep.common_sum_ok);
    CHECK((rep.r_total - (rep.r_private + pre.c)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("instantaneous sampler equals the closed form under perfect CSI") {
    RandomStream rng(48);
    const Eigen::MatrixXcd h = random_channel(4, 3, rng, 2.0);
    const PerturbationStats st = build_stats(h, {0.0, 0.0});
    const Precoder pre = random_precoder(4, 3, rng);
    RandomStream mc(99);
    const InstantaneousRates inst = instantaneous_rate_sample(h, pre, {0.0, 0.0}, 1.0, mc, 3);
    const Eigen::VectorXd rc = common_rate(pre, st, 1.0);
    const Eigen::VectorXd rp = private_rate(pre, st, 1.0);
    CHECK((inst.common - rc).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((inst.priv - rp).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("instantaneous sampler is reproducible for a fixed seed") {
    RandomStream rng(49);
    const Eigen::MatrixXcd h = random_channel(4, 3, rng);
    const Precoder pre = random_precoder(4, 3, rng);
    RandomStream mc1(7), mc2(7);
    const InstantaneousRates a =
        instantaneous_rate_sample(h, pre, {0.05, 0.02}, 1.0, mc1, 1);
    const InstantaneousRates b =
        instantaneous_rate_sample(h, pre, {0.05, 0.02}, 1.0, mc2, 1);
    CHECK((a.common - b.common).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.priv - b.priv).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("closed forms track the Monte Carlo oracle at (5, 2) degrees") {
    RandomStream rng(50);
    const Eigen::MatrixXcd h = random_channel(4, 5, rng, 3.0);
    const PerturbationStats st = build_stats(h, {5.0 * kDeg, 2.0 * kDeg});
    const Precoder pre = random_precoder(4, 5, rng, 0.5);
    RandomStream mc(11);
    const InstantaneousRates inst =
        instantaneous_rate_sample(h, pre, {5.0 * kDeg, 2.0 * kDeg}, 1.0, mc, 10000);
    const Eigen::VectorXd rc = common_rate(pre, st, 1.0);
    const Eigen::VectorXd rp = private_rate(pre, st, 1.0);
    for (int u = 0; u < 5; ++u) {
        CHECK(std::abs(rc(u) - inst.common(u)) <= 0.15 * std::max(inst.common(u), 0.01));
        CHECK(std::abs(rp(u) - inst.priv(u)) <= 0.15 * std::max(inst.priv(u), 0.01));
    }
}

TEST_CASE("rate evaluation validates sigma and shapes") {
    RandomStream rng(51);
    const Eigen::MatrixXcd h = random_channel(4, 2, rng);
    const PerturbationStats st = build_stats(h, {0.0, 0.0});
    const Precoder pre = random_precoder(4, 2, rng);
    CHECK_THROWS_AS(common_rate(pre, st, 0.0), std::domain_error);
    Precoder bad = pre;
    bad.c = Eigen::VectorXd::Zero(5);
    CHECK_THROWS_AS(total_rates(bad, st, 1.0), std::invalid_argument);
}
