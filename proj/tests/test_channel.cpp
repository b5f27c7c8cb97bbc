#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "ssdm/channel.hpp"
#include "ssdm/errors.hpp"
#include "ssdm/gaussian.hpp"
#include "ssdm/random.hpp"

using namespace ssdm;

namespace {

const TargetDistribution& four_ary() {
    static const TargetDistribution t = build_target({0, 1, 2, 3}, {0.1, 0.4, 0.3, 0.2});
    return t;
}

} // namespace

TEST_CASE("output moments at the symmetric binary point") {
    const TargetDistribution t = binary_target(0.5);
    const double two_phi0 = 2.0 * gauss::kInvSqrt2Pi;
    CHECK(g_out(0.0, 1, 1.0, t) == doctest::Approx(two_phi0).epsilon(1e-14));
    CHECK(g_out(0.0, 1, 1.0, t) == doctest::Approx(0.7979).epsilon(1e-4));
    CHECK(g_out(0.0, 0, 1.0, t) == doctest::Approx(-two_phi0).epsilon(1e-14));
    CHECK(f_out(0.0, 1, 1.0, t) == doctest::Approx(two_phi0 * two_phi0).epsilon(1e-14));
    CHECK(f_out(0.0, 1, 1.0, t) == doctest::Approx(0.6366).epsilon(1e-4));
    CHECK(log_likelihood(0.0, 1, 1.0, t) == doctest::Approx(std::log(0.5)).epsilon(1e-15));
}

TEST_CASE("output moments match finite differences of the log-likelihood") {
    Rng rng(17);
    const TargetDistribution binary = binary_target(0.25);
    for (const TargetDistribution* t : {&four_ary(), &binary}) {
        for (int i = 0; i < 2000; ++i) {
            const double p = -5.0 + 10.0 * rng.uniform();
            const double eta = 0.01 * std::pow(200.0, rng.uniform());
            const std::size_t k = rng.below(t->size());
            const auto fd = oracle::finite_differences(p, k, eta, *t);
            const OutputMoments m = output_moments(p, k, eta, *t);
            INFO("p = " << p << ", eta = " << eta << ", symbol = " << k);
            CHECK(std::fabs(m.g - fd.g) <= 1e-5L * std::fabs(fd.g) + fd.g_noise);
            CHECK(std::fabs(m.f - fd.f) <= 1e-4L * std::fabs(fd.f) + fd.f_noise);
            CHECK(m.g == g_out(p, k, eta, *t));
            CHECK(m.f == f_out(p, k, eta, *t));
            CHECK(static_cast<double>(oracle::log_mass(p, k, eta, *t)) ==
                  doctest::Approx(log_likelihood(p, k, eta, *t)).epsilon(1e-12).scale(1e-15));
        }
    }
}

TEST_CASE("f_out is positive wherever the value is representable") {
    for (const TargetDistribution& t : {four_ary(), binary_target(0.25), binary_target(0.5)}) {
        for (int ip = 0; ip <= 100; ++ip) {
            for (int ie = 0; ie <= 40; ++ie) {
                const double p = -5.0 + 0.1 * ip;
                const double eta = 0.01 * std::pow(200.0, ie / 40.0);
                for (std::size_t k = 0; k < t.size(); ++k) {
                    const double f = f_out(p, k, eta, t);
                    CHECK(std::isfinite(g_out(p, k, eta, t)));
                    REQUIRE(f >= 0.0);
                    if (oracle::closed_form_f(p, k, eta, t) > 1e-290L) CHECK(f > 0.0);
                }
            }
        }
    }
}

TEST_CASE("output moments stay finite in the deep tails") {
    const TargetDistribution& t = four_ary();
    for (double eta : {1e-12, 1e-8, 1e-6, 1e-3, 1.0, 10.0}) {
        for (double p : {-40.0, -12.0, -3.0, -1.0, 0.0, 0.2, 1.0, 3.0, 12.0, 40.0}) {
            for (std::size_t k = 0; k < t.size(); ++k) {
                const OutputMoments m = output_moments(p, k, eta, t);
                CHECK(std::isfinite(m.g));
                CHECK(std::isfinite(m.f));
                CHECK(m.f >= 0.0);
                CHECK(std::isfinite(log_likelihood(p, k, eta, t)));
            }
        }
    }
    // Far below a lower threshold the pull points up with slope 1/eta.
    const double c = t.lower(3);
    CHECK(g_out(c - 20.0, 3, 0.01, t) == doctest::Approx(20.0 / 0.01).epsilon(0.01));
    CHECK(f_out(c - 20.0, 3, 0.01, t) == doctest::Approx(1.0 / 0.01).epsilon(0.01));
}

TEST_CASE("output moment validation") {
    CHECK_THROWS_AS(g_out(0.0, 4, 1.0, four_ary()), MalformedInput);
    CHECK_THROWS_AS(f_out(0.0, 0, 0.0, four_ary()), MalformedInput);
    CHECK_THROWS_AS(f_out(0.0, 0, -1.0, four_ary()), MalformedInput);
}

TEST_CASE("g_in examples") {
    std::vector<double> out(2);
    g_in(std::vector<double>{1.0, 0.0}, std::vector<double>{1.0, 1.0}, out);
    CHECK(out[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-15));
    CHECK(out[1] == doctest::Approx(1.0 / (1.0 + std::exp(1.0))).epsilon(1e-14));
    CHECK(out[0] == doctest::Approx(0.7311).epsilon(1e-4));

    std::vector<double> uniform(8);
    g_in(std::vector<double>(8, 0.3), std::vector<double>(8, 0.7), uniform);
    for (double v : uniform) CHECK(v == doctest::Approx(0.125).epsilon(1e-15));

    std::vector<double> sharp(4);
    g_in(std::vector<double>{0.1, 0.9, 0.2, 0.0}, std::vector<double>(4, 1e-9), sharp);
    CHECK(sharp == std::vector<double>{0.0, 1.0, 0.0, 0.0});

    std::vector<double> extreme(4);
    g_in(std::vector<double>{1e5, -1e5, 0.0, 3.0}, std::vector<double>{1e-300, 1e300, 1.0, 1e-3}, extreme);
    for (double v : extreme) CHECK(std::isfinite(v));
    CHECK(extreme[0] == 1.0);

    CHECK_THROWS_AS(g_in(std::vector<double>(3), std::vector<double>(4, 1.0), out), DimensionMismatch);
}

TEST_CASE("g_in equals the enumerated posterior mean") {
    Rng rng(23);
    for (std::size_t B : {2, 4, 8, 16}) {
        for (int rep = 0; rep < 500; ++rep) {
            std::vector<double> r(B), tau(B), out(B);
            const std::size_t truth = rng.below(B);
            const double scale = std::pow(10.0, -2.0 + 3.0 * rng.uniform());
            for (std::size_t j = 0; j < B; ++j) {
                tau[j] = scale * (0.5 + rng.uniform());
                r[j] = (j == truth ? 1.0 : 0.0) + std::sqrt(tau[j]) * rng.normal();
            }
            g_in(r, tau, out);
            const auto ref = oracle::posterior_mean(r, tau);
            double total = 0;
            for (std::size_t j = 0; j < B; ++j) {
                CHECK(std::fabs(out[j] - ref[j]) <= 1e-8 * ref[j] + 1e-300);
                CHECK(out[j] >= 0.0);
                CHECK(out[j] <= 1.0);
                total += out[j];
            }
            CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}
