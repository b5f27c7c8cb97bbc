#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "ssdm/channel.hpp"
#include "ssdm/errors.hpp"
#include "ssdm/gaussian.hpp"
#include "ssdm/random.hpp"
#include "ssdm/state_evolution.hpp"

using namespace ssdm;

namespace {

const StateEvolution& binary_se() {
    static const StateEvolution se(binary_target(0.25), 4);
    return se;
}

// I(E) by a plain midpoint rule over a wide, fine grid.
double fisher_by_midpoint(double E, const TargetDistribution& t) {
    const double s = std::sqrt(E), sd = std::sqrt(1.0 - E);
    const int n = 200000;
    const double lo = -10.0 * sd, width = 20.0 * sd / n;
    long double total = 0;
    for (int i = 0; i < n; ++i) {
        const double p = lo + (i + 0.5) * width;
        double acc = 0;
        for (std::size_t k = 0; k < t.size(); ++k) {
            const double mass = gauss::interval_mass((t.lower(k) - p) / s, (t.upper(k) - p) / s);
            if (mass > 0) acc += mass * std::pow(g_out(p, k, E, t), 2);
        }
        total += acc * gauss::pdf(p / sd) / sd * width;
    }
    return static_cast<double>(total);
}

// Sectionwise MMSE by direct simulation with its own noise stream.
double mmse_by_simulation(double tau, std::size_t B, std::size_t n, std::uint64_t seed, double* stderr_out) {
    Rng rng(seed);
    std::vector<double> r(B), w(B);
    long double sum = 0, sum2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < B; ++j) r[j] = (j == 0 ? 1.0 : 0.0) + std::sqrt(tau) * rng.normal();
        double top = -1e300;
        for (std::size_t j = 0; j < B; ++j) top = std::max(top, (2 * r[j] - 1) / (2 * tau));
        double total = 0;
        for (std::size_t j = 0; j < B; ++j) total += (w[j] = std::exp((2 * r[j] - 1) / (2 * tau) - top));
        double err = 0;
        for (std::size_t j = 0; j < B; ++j) err += std::pow(w[j] / total - (j == 0 ? 1.0 : 0.0), 2);
        sum += err;
        sum2 += static_cast<long double>(err) * err;
    }
    const double mean = static_cast<double>(sum / n);
    *stderr_out = std::sqrt((static_cast<double>(sum2 / n) - mean * mean) / static_cast<double>(n));
    return mean;
}

} // namespace

TEST_CASE("configuration validation") {
    SeConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.mc_samples = 0;
    CHECK_THROWS_AS(cfg.validate(), MalformedInput);
    cfg = {};
    cfg.success_threshold = 0.0;
    CHECK_THROWS_AS(cfg.validate(), MalformedInput);
    CHECK_THROWS_AS(binary_se().step(1.5, 0.5), MalformedInput);
    CHECK_THROWS_AS(binary_se().step(0.5, 0.0), MalformedInput);
}

TEST_CASE("perfect recovery is a fixed point") {
    for (double rate : {0.2, 0.7, 1.5}) CHECK(binary_se().step(0.0, rate) == 0.0);
    CHECK(binary_se().effective_noise(0.0, 0.5) == 0.0);
    CHECK(binary_se().section_mmse(0.0) == 0.0);
    CHECK(binary_se().section_error_probability(0.0) == 0.0);
}

TEST_CASE("Fisher information against a midpoint rule") {
    const TargetDistribution four = build_target({0, 1, 2, 3}, {0.1, 0.4, 0.3, 0.2});
    const StateEvolution se4(four, 4);
    for (double E : {0.9, 0.3, 0.01, 1e-4}) {
        CHECK(binary_se().fisher_information(E) ==
              doctest::Approx(fisher_by_midpoint(E, binary_target(0.25))).epsilon(1e-6));
        CHECK(se4.fisher_information(E) == doctest::Approx(fisher_by_midpoint(E, four)).epsilon(1e-6));
    }
    // At E = 1 the estimate is deterministic: 2 phi(c)^2 / (P0 P1) for a binary target.
    const double c = binary_target(0.25).thresholds()[1];
    CHECK(binary_se().fisher_information(1.0) ==
          doctest::Approx(std::pow(gauss::pdf(c), 2) / (0.75 * 0.25)).epsilon(1e-12));
    CHECK(binary_se().effective_noise(0.5, 0.6) ==
          doctest::Approx(0.6 / (2.0 * binary_se().fisher_information(0.5))).epsilon(1e-14));
}

TEST_CASE("section MMSE against direct simulation") {
    for (std::size_t B : {2, 4, 8}) {
        const StateEvolution se(binary_target(0.25), B);
        for (double tau : {0.05, 0.2, 1.0}) {
            double se_err = 0;
            const double ref = mmse_by_simulation(tau, B, 200000, 31 + B, &se_err);
            const double mc_err = B == 2 ? 0.0 : se_err * std::sqrt(200000.0 / 50000.0);
            CHECK(std::abs(se.section_mmse(tau) - ref) < 4.0 * std::hypot(se_err, mc_err) + 1e-12);
        }
        CHECK(se.section_mmse(1e6) == doctest::Approx(1.0 - 1.0 / B).epsilon(1e-3));
    }
}

TEST_CASE("predicted section error probability") {
    const StateEvolution& se = binary_se();
    CHECK(se.section_error_probability(1e8) == doctest::Approx(0.75).epsilon(1e-3));
    CHECK(se.section_error_probability(1e-3) < 1e-100);
    // B = 2: the argmax misses iff xi_1 - xi_0 > 1 / sqrt(tau).
    const StateEvolution se2(binary_target(0.25), 2);
    for (double tau : {0.1, 0.5, 2.0}) {
        CHECK(se2.section_error_probability(tau) ==
              doctest::Approx(gauss::q(1.0 / std::sqrt(2.0 * tau))).epsilon(1e-10));
    }
}

TEST_CASE("step is monotone in E") {
    for (double rate : {0.4, 0.7, 1.2}) {
        double previous = 0.0;
        for (int i = 1; i <= 40; ++i) {
            const double next = binary_se().step(i / 40.0, rate);
            CHECK(next >= previous);
            CHECK(next <= 1.0);
            previous = next;
        }
    }
}

TEST_CASE("trajectories") {
    const SeState low = binary_se().trajectory(0.35);
    CHECK(low.mse.front() == 1.0);
    CHECK(low.success);
    CHECK(low.converged);
    CHECK(low.fixed_point < 1e-6);
    CHECK(low.mse.size() == low.iterations() + 1);
    CHECK(low.predicted_ser.size() == low.iterations());

    const SeState mid = binary_se().trajectory(0.7);
    CHECK_FALSE(mid.success);
    CHECK(mid.fixed_point > 0.3);

    const SeState high = binary_se().trajectory(0.81);
    CHECK_FALSE(high.success);
    CHECK(high.fixed_point > 0.3);

    const SeState above = binary_se().trajectory(1.5);
    CHECK(above.fixed_point > 0.5);

    for (const SeState* st : {&low, &mid, &high, &above}) {
        for (std::size_t t = 1; t < st->mse.size(); ++t) {
            CHECK(st->mse[t] <= st->mse[t - 1]);
            CHECK(st->mse[t] >= 0.0);
        }
    }
}

TEST_CASE("threshold search") {
    const TargetDistribution four = build_target({0, 1, 2, 3}, {0.1, 0.4, 0.3, 0.2});
    const double r2 = find_r_gamp(2, four, SeConfig{}, 0.5, 1.8);
    CHECK(std::abs(r2 - 1.025) <= 0.01);
    CHECK(r2 < entropy(four));
    const double rb = binary_se().find_threshold(0.3, 0.8113);
    CHECK(rb < entropy(binary_target(0.25)));
    CHECK(binary_se().trajectory(rb - 0.002).success);
    CHECK_FALSE(binary_se().trajectory(rb + 0.002).success);

    CHECK_THROWS_WITH_AS(binary_se().find_threshold(0.6, 0.8), doctest::Contains("widen"), MalformedInput);
    CHECK_THROWS_WITH_AS(binary_se().find_threshold(0.1, 0.2), doctest::Contains("widen"), MalformedInput);
}

TEST_CASE("Monte Carlo draws make every evaluation repeatable") {
    const StateEvolution a(binary_target(0.25), 8), b(binary_target(0.25), 8);
    CHECK(a.step(0.4, 0.5) == b.step(0.4, 0.5));
    CHECK(se_step(0.4, 0.5, 8, binary_target(0.25)) == a.step(0.4, 0.5));
}

TEST_CASE("CSV tables") {
    std::ostringstream thr;
    write_threshold_csv(thr, {{4, "binary-0.25", 0.484, 1e-10, 50000}});
    CHECK(thr.str() == "B,target,r_gamp,fp_tol,mc_samples\n4,binary-0.25,0.484,1e-10,50000\n");
    std::ostringstream traj;
    write_trajectory_csv(traj, binary_se().trajectory(0.35));
    CHECK(traj.str().rfind("iteration,mse,tau,predicted_ser\n", 0) == 0);
}
