#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "satrm/harness.hpp"
#include "satrm/optimizer.hpp"

using namespace satrm;

namespace {

constexpr double kDeg = 0.017453292519943295;

struct Instance {
    Scenario scenario;
    ChannelSet channels;
    PerturbationStats stats;
};

Instance default_instance(std::uint64_t seed = 1, std::uint64_t channel_seed = 77) {
    Instance inst;
    inst.scenario = default_scenario(seed);
    inst.channels = synthesize_channel(inst.scenario, channel_seed);
    inst.stats = build_stats(inst.channels.h_hat, inst.scenario.perturbation);
    return inst;
}

Eigen::MatrixXcd random_channel(int nt, int k, RandomStream& rng, double scale = 1.0) {
    Eigen::MatrixXcd h(nt, k);
    for (int c = 0; c < k; ++c)
        for (int r = 0; r < nt; ++r)
            h(r, c) = scale * std::complex<double>(rng.normal(), rng.normal()) / std::sqrt(2.0);
    return h;
}

} // namespace

TEST_CASE("initial state puts every feed row at half the cap with tangent SINRs") {
    Instance inst = default_instance();
    const ScaState state = initialize_state(inst.channels, inst.stats, inst.scenario);

    const double half_cap = 0.5 * inst.scenario.physics.per_feed_power_w;
    const Eigen::VectorXd rows = state.p_n.rowwise().squaredNorm();
    for (int feed = 0; feed < 4; ++feed)
        CHECK(rows(feed) == doctest::Approx(half_cap).epsilon(1e-12));

    // a0 equals the SINR argument of the closed-form common rate: 2^R - 1
    Precoder pre{state.p_n, Eigen::VectorXd::Zero(5)};
    const Eigen::VectorXd rc = common_rate(pre, inst.stats, 1.0);
    const Eigen::VectorXd rp = private_rate(pre, inst.stats, 1.0);
    for (int u = 0; u < 5; ++u) {
        CHECK(state.a_n(u) ==
              doctest::Approx(std::pow(2.0, rc(u)) - 1.0).epsilon(1e-12));
        CHECK(state.b_n(u) ==
              doctest::Approx(std::pow(2.0, rp(u)) - 1.0).epsilon(1e-12));
        CHECK(state.alpha_n(u) == doctest::Approx(rp(u)).epsilon(1e-12));
    }
    CHECK(state.c_n.cwiseAbs().maxCoeff() == 0.0);

    const ScaState again = initialize_state(inst.channels, inst.stats, inst.scenario);
    CHECK((again.p_n - state.p_n).cwiseAbs().maxCoeff() == 0.0);
    CHECK(again.d_n == state.d_n);
}

TEST_CASE("initialization rejects a zero channel column") {
    Instance inst = default_instance();
    inst.channels.h_hat.col(2).setZero();
    CHECK_THROWS_AS(initialize_state(inst.channels, inst.stats, inst.scenario),
                    std::invalid_argument);
}

TEST_CASE("SINR surrogate: tangency, zero matrix, global under-estimation") {
    RandomStream rng(61);
    const Eigen::MatrixXcd h = random_channel(4, 1, rng, 2.0);
    const Eigen::MatrixXcd q = h * h.adjoint();
    const Eigen::VectorXcd p0 = random_channel(4, 1, rng).col(0);
    const double a0 = 0.8;

    const SinrSurrogate sur = linearize_common(p0, a0, q);
    const double f0 = std::real(std::complex<double>(p0.adjoint() * q * p0)) / a0;
    CHECK(sur.value_at(p0, a0) == doctest::Approx(f0).epsilon(1e-12));

    const SinrSurrogate zero = linearize_common(p0, a0, Eigen::MatrixXcd::Zero(4, 4));
    CHECK(zero.value_at(p0, a0) == 0.0);
    CHECK(zero.value_at(2.0 * p0, 3.0) == 0.0);

    int below = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        const Eigen::VectorXcd p = random_channel(4, 1, rng, 1.5).col(0);
        const double a = 1e-3 + 4.0 * rng.uniform();
        const double f = std::real(std::complex<double>(p.adjoint() * q * p)) / a;
        if (sur.value_at(p, a) <= f + 1e-9 * (1.0 + std::abs(f)))
            ++below;
    }
    CHECK(below == 1000);

    CHECK_THROWS_AS(linearize_common(p0, 1e-12, q), std::invalid_argument);
    CHECK_THROWS_AS(linearize_private(p0, 0.0, q), std::invalid_argument);
}

TEST_CASE("log surrogate coefficients and tangency of the bound") {
    const LogSurrogate at_one = soc_log_surrogate(1.0);
    CHECK(at_one.v == doctest::Approx(1.1931471805599454).epsilon(1e-15));
    CHECK(at_one.u == doctest::Approx(0.5).epsilon(1e-15));

    // v - u/x_n = ln(1 + x_n) exactly (the bound is tight at the point)
    for (double x : {0.1, 1.0, 7.5}) {
        const LogSurrogate ls = soc_log_surrogate(x);
        CHECK(ls.v - ls.u / x == doctest::Approx(std::log1p(x)).epsilon(1e-14));
    }

    const LogSurrogate tiny = soc_log_surrogate(kLinearizationFloor);
    CHECK(tiny.v < 3e-10);
    CHECK(tiny.u < 1e-19);
    CHECK_THROWS_AS(soc_log_surrogate(0.0), std::invalid_argument);
}

TEST_CASE("subproblem variable and constraint counts for the toy size") {
    // K=1, N_t=1: 2(K+1)N_t = 4 precoder reals + c, alpha, a, b
    Scenario sc = default_scenario(1);
    sc.geometry.beam_centers = {{0.0, 0.0}};
    sc.geometry.user_positions = {{0.0, 0.0}};
    sc.geometry.user_beam_assignment = {0};
    sc.r_target = Eigen::VectorXd::Constant(1, 1.0);
    const ChannelSet ch = synthesize_channel(sc, 5);
    const PerturbationStats st = build_stats(ch.h_hat, sc.perturbation);
    const ScaState state = initialize_state(ch, st, sc);
    const Subproblem sub = build_subproblem(state, st, sc, sc.opts);

    CHECK(sub.program.num_variables() == 2 * 2 * 1 + 4 * 1);
    CHECK(static_cast<int>(sub.program.linear_constraints().size()) == 4);  // nonneg
    CHECK(static_cast<int>(sub.program.quad_constraints().size()) == 1 + 2); // feed + (28)/(29)
    CHECK(static_cast<int>(sub.program.soc_constraints().size()) == 2);      // (30)/(31)
}

TEST_CASE("eta = 1 removes the power term from the objective exactly") {
    Instance inst = default_instance();
    inst.scenario.opts.eta = 1.0;
    const ScaState state = initialize_state(inst.channels, inst.stats, inst.scenario);
    const Subproblem sub =
        build_subproblem(state, inst.stats, inst.scenario, inst.scenario.opts);
    const int pc = sub.program.block_offset("pc");
    const Eigen::MatrixXd& q = sub.program.objective_quadratic();
    CHECK(q.block(pc, pc, 8, 8).cwiseAbs().maxCoeff() == 0.0);
    const int p1 = sub.program.block_offset("p1");
    CHECK(q.block(p1, p1, 8, 8).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("each iterate stays feasible for the next subproblem") {
    Instance inst = default_instance();
    const Scenario& sc = inst.scenario;
    ScaState state = initialize_state(inst.channels, inst.stats, sc);
    for (int n = 1; n <= 3; ++n) {
        Subproblem sub = build_subproblem(state, inst.stats, sc, sc.opts);
        // the previous iterate must satisfy the freshly linearized program
        const Eigen::VectorXd prev = iterate_vector(sub, state, sc.r_target);
        CHECK(sub.program.max_violation(prev) <= 1e-7);

        const conic::Solution sol = conic::solve(sub.program, sc.opts.solver);
        REQUIRE(sol.status == conic::SolveStatus::optimal);
        const IterateUpdate up = extract_iterate(sub, sol.x);
        state.p_n = up.p;
        state.a_n = up.a;
        state.b_n = up.b;
        state.c_n = up.c;
        state.alpha_n = up.alpha;
        state.d_n = rm_objective(sc.r_target, up.c, up.alpha, up.p, sc.opts);
        state.iter = n;
    }
}

TEST_CASE("run_sca: monotone trace, iteration cap, feasible output") {
    Instance inst = default_instance(1, 12345);
    const RmSolution sol = run_sca(inst.channels, inst.stats, inst.scenario, inst.scenario.opts);
    CHECK((sol.status == RmStatus::converged || sol.status == RmStatus::iteration_cap));
    CHECK(sol.iterations <= 20);
    for (std::size_t i = 1; i < sol.objective_trace.size(); ++i)
        CHECK(sol.objective_trace[i] <= sol.objective_trace[i - 1] + 1e-7);

    // per-feed rows within the cap, common sum decodable, surrogate safety
    CHECK(sol.precoder.max_feed_power() <= inst.scenario.physics.per_feed_power_w + 1e-6);
    CHECK(sol.rates.r_common.minCoeff() + 1e-6 >= sol.precoder.c.sum());
    CHECK((sol.rates.r_private + Eigen::VectorXd::Constant(5, 1e-6) - sol.alpha_p)
              .minCoeff() >= 0.0);
    CHECK(sol.power_used_w <= 4.0 * inst.scenario.physics.per_feed_power_w + 1e-6);
}

TEST_CASE("zero demands drive the transmit power to zero") {
    Instance inst = default_instance(1, 99);
    inst.scenario.r_target.setZero();
    inst.scenario.opts.tol = 1e-7;
    const RmSolution sol = run_sca(inst.channels, inst.stats, inst.scenario, inst.scenario.opts);
    CHECK(sol.power_used_w < 1e-4);
}

TEST_CASE("RM-SDMA removes the common stream exactly") {
    Instance inst = default_instance(1, 31);
    const RmSolution sol =
        solve_rm_sdma(inst.channels, inst.stats, inst.scenario, inst.scenario.opts);
    CHECK(sol.precoder.c.cwiseAbs().maxCoeff() == 0.0);
    CHECK(sol.precoder.p.col(0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(sol.rates.r_common.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("underloaded SDMA with perfect CSI closes the rate gap") {
    Scenario sc = default_scenario(2);
    sc.geometry.user_positions = {{-10e3, -10e3}, {10e3, -10e3}, {-10e3, 10e3}};
    sc.geometry.user_beam_assignment = {0, 1, 2};
    sc.perturbation = PerturbationModel{0.0, 0.0};
    sc.r_target = Eigen::VectorXd::Constant(3, 1.5);
    const ChannelSet ch = synthesize_channel(sc, 8);
    const PerturbationStats st = build_stats(ch.h_hat, sc.perturbation);
    const RmSolution sol = solve_rm_sdma(ch, st, sc, sc.opts);
    for (int u = 0; u < 3; ++u)
        CHECK(sol.rates.r_total(u) >= 1.5 - 0.05);
}

TEST_CASE("MMSE directions: matched filter, normalization, decoupled limit") {
    RandomStream rng(62);
    const Eigen::MatrixXcd h1 = random_channel(4, 1, rng);
    const auto w1 = mmse_directions(h1, 1.0, 1.0);
    const Eigen::VectorXcd expect = h1.col(0) / h1.col(0).norm();
    // parallel up to a phase (real positive here since the Gram is Hermitian)
    const double align1 = std::abs(std::complex<double>(w1[0].dot(expect)));
    CHECK(align1 == doctest::Approx(1.0).epsilon(1e-9));

    Eigen::MatrixXcd ortho = Eigen::MatrixXcd::Zero(4, 3);
    ortho(0, 0) = 2.0;
    ortho(1, 1) = std::complex<double>(0.0, 1.5);
    ortho(2, 2) = -1.0;
    const auto w = mmse_directions(ortho, 1e9, 1.0);
    for (int u = 0; u < 3; ++u) {
        CHECK(w[u].norm() == doctest::Approx(1.0).epsilon(1e-12));
        const double align =
            std::abs(std::complex<double>(w[u].dot(ortho.col(u) / ortho.col(u).norm())));
        CHECK(align == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("MMSE-RSMA keeps the private columns on the frozen directions") {
    Instance inst = default_instance(1, 63);
    const RmSolution sol =
        solve_mmse_rsma(inst.channels, inst.stats, inst.scenario, inst.scenario.opts);
    const auto dirs = mmse_directions(inst.channels.h_hat,
                                      4.0 * inst.scenario.physics.per_feed_power_w, 1.0);
    for (int u = 0; u < 5; ++u) {
        const Eigen::VectorXcd col = sol.precoder.p.col(u + 1);
        if (col.norm() < 1e-12)
            continue;
        const double align =
            std::abs(std::complex<double>(dirs[u].dot(col))) / col.norm();
        CHECK(align == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("four-color single-user groups see no inter-color interference") {
    Scenario sc = default_scenario(3);
    sc.geometry.user_positions = sc.geometry.beam_centers; // one user per beam center
    sc.geometry.user_beam_assignment = {0, 1, 2, 3};
    sc.r_target = Eigen::VectorXd::Constant(4, 50.0); // force full power
    sc.perturbation = PerturbationModel{0.0, 0.0};
    const ChannelSet ch = synthesize_channel(sc, 17);
    const PerturbationStats st = build_stats(ch.h_hat, sc.perturbation);
    const RmSolution sol = solve_rm_4color(ch, st, sc, sc.opts);

    const double cap = sc.physics.per_feed_power_w;
    for (int u = 0; u < 4; ++u) {
        // quarter band, quarter noise: rate = (1/4) log2(1 + 4 SNR)
        const double snr = std::norm(ch.h_hat(u, u)) * cap; // sigma2 = 1
        const double expected = 0.25 * std::log2(1.0 + 4.0 * snr);
        CHECK(sol.rates.r_total(u) == doctest::Approx(expected).epsilon(1e-3));
        // the user's precoder touches only its own feed
        for (int feed = 0; feed < 4; ++feed)
            if (feed != u)
                CHECK(std::abs(sol.precoder.p(feed, u + 1)) == 0.0);
    }
    CHECK(sol.groups.size() == 4);
}

TEST_CASE("RSMA attains an objective no worse than SDMA on the same channel") {
    Instance inst = default_instance(1, 12345);
    const RmSolution rsma =
        run_sca(inst.channels, inst.stats, inst.scenario, inst.scenario.opts);
    const RmSolution sdma =
        solve_rm_sdma(inst.channels, inst.stats, inst.scenario, inst.scenario.opts);
    CHECK(rsma.objective_trace.back() <= sdma.objective_trace.back() + 1e-6);
}
