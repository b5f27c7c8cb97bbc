#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ssdm/errors.hpp"
#include "ssdm/gaussian.hpp"
#include "ssdm/matcher.hpp"
#include "ssdm/operators.hpp"
#include "ssdm/random.hpp"

using namespace ssdm;

namespace {

// Upper Gaussian tail in long double, independent of the library's routines.
long double q_ref(long double x) { return 0.5L * std::erfc(x / std::sqrt(2.0L)); }

std::vector<double> gaussians(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> z(n);
    for (double& v : z) v = rng.normal();
    return z;
}

} // namespace

TEST_CASE("thresholds of the reference targets") {
    CHECK(std::abs(binary_target(0.5).thresholds()[1]) < 1e-15);

    const TargetDistribution pam = build_target({-3, -1, 1, 3}, {0.1, 0.4, 0.4, 0.1});
    CHECK(std::abs(pam.thresholds()[2]) < 1e-12);
    CHECK(pam.thresholds()[1] == doctest::Approx(-pam.thresholds()[3]).epsilon(1e-12));

    const TargetDistribution b = binary_target(0.25);
    CHECK(b.pmf()[0] == 0.75);
    CHECK(b.thresholds()[1] == doctest::Approx(0.6744897501960817).epsilon(1e-12));
    CHECK(std::isinf(b.thresholds()[0]));
    CHECK(std::isinf(b.thresholds()[2]));
}

TEST_CASE("thresholds carve out the target masses") {
    const std::vector<std::vector<double>> pmfs = {
        {0.1, 0.4, 0.3, 0.2}, {0.75, 0.25}, {1e-9, 0.5, 0.5 - 1e-9}, {0.01, 0.02, 0.03, 0.04, 0.9}};
    for (const auto& pmf : pmfs) {
        std::vector<double> alphabet(pmf.size());
        std::iota(alphabet.begin(), alphabet.end(), 0.0);
        const TargetDistribution t = build_target(alphabet, pmf);
        const auto c = t.thresholds();
        // Relative error of the cumulative mass on its smaller side.
        long double head = 0.0L;
        for (std::size_t k = 0; k + 1 < pmf.size(); ++k) {
            CHECK(c[k] < c[k + 1]);
            head += pmf[k];
            const long double tail = 1.0L - head;
            const long double err = head < tail ? std::fabs(q_ref(-c[k + 1]) - head) / head
                                                : std::fabs(q_ref(c[k + 1]) - tail) / tail;
            CHECK(static_cast<double>(err) < 1e-12);
        }
        for (std::size_t k = 0; k < pmf.size(); ++k) {
            const long double lo = std::isinf(c[k]) ? 1.0L : q_ref(c[k]);
            const long double hi = std::isinf(c[k + 1]) ? 0.0L : q_ref(c[k + 1]);
            CHECK(std::abs(static_cast<double>(lo - hi) - pmf[k]) < 1e-10);
        }
    }
}

TEST_CASE("target validation") {
    CHECK_THROWS_AS(build_target({0, 1}, {0.5, 0.6}), MalformedInput);
    CHECK_THROWS_AS(build_target({0, 1}, {1.0, 0.0}), MalformedInput);
    CHECK_THROWS_AS(build_target({0, 1}, {1.2, -0.2}), MalformedInput);
    CHECK_THROWS_AS(build_target({1, 0}, {0.5, 0.5}), MalformedInput);
    CHECK_THROWS_AS(build_target({0, 0}, {0.5, 0.5}), MalformedInput);
    CHECK_THROWS_AS(build_target({0, 1, 2}, {0.5, 0.5}), MalformedInput);
    CHECK_THROWS_AS(binary_target(0.0), MalformedInput);
    CHECK_THROWS_AS(binary_target(1.0), MalformedInput);
}

TEST_CASE("target text format") {
    const TargetDistribution t = parse_target("# 4-ary\n0 0.1\n1 0.4  # inner\n\n2 0.3\n3 0.2\n");
    CHECK(t.size() == 4);
    CHECK(t.pmf()[1] == 0.4);
    CHECK_THROWS_AS(parse_target("0 0.5\n1\n"), MalformedInput);
    CHECK_THROWS_AS(parse_target("0 0.5\n1 0.5 7\n"), MalformedInput);
    CHECK_THROWS_AS(parse_target(""), MalformedInput);
}

TEST_CASE("quantize uses right-closed intervals") {
    const TargetDistribution t = build_target({0, 1, 2, 3}, {0.1, 0.4, 0.3, 0.2});
    const auto c = t.thresholds();
    const std::vector<double> z = {c[1], std::nextafter(c[1], 1.0), c[2], c[3], -1e300, 1e300};
    const TargetSequence y = quantize(z, t);
    CHECK(y.symbols == std::vector<std::uint16_t>{0, 1, 1, 2, 0, 3});

    const TargetSequence sign = quantize(std::vector<double>{-1.0, 1.0}, binary_target(0.5));
    CHECK(sign.symbols == std::vector<std::uint16_t>{0, 1});
    CHECK(symbol_values(y, t) == std::vector<double>{0, 1, 1, 2, 0, 3});
}

TEST_CASE("quantize is monotone") {
    const TargetDistribution t = build_target({0, 1, 2, 3}, {0.1, 0.4, 0.3, 0.2});
    std::vector<double> z = gaussians(20000, 8);
    std::sort(z.begin(), z.end());
    const TargetSequence y = quantize(z, t);
    CHECK(std::is_sorted(y.symbols.begin(), y.symbols.end()));
}

TEST_CASE("Gaussian input reproduces the target pmf") {
    const TargetDistribution t = build_target({0, 1, 2, 3}, {0.1, 0.4, 0.3, 0.2});
    const auto pmf = empirical_pmf(quantize(gaussians(100000, 1), t), 4);
    CHECK(total_variation(pmf, t.pmf()) < 0.01);
}

TEST_CASE("exact measure within four standard errors at one million draws") {
    const TargetDistribution t = build_target({0, 1, 2, 3}, {0.1, 0.4, 0.3, 0.2});
    const std::size_t n = 1000000;
    const auto pmf = empirical_pmf(quantize(gaussians(n, 2), t), 4);
    for (std::size_t k = 0; k < 4; ++k) {
        const double P = t.pmf()[k];
        CHECK(std::abs(pmf[k] - P) < 4.0 * std::sqrt(P * (1 - P) / static_cast<double>(n)));
    }
}

TEST_CASE("entropy") {
    CHECK(std::round(entropy(binary_target(0.25)) * 1e4) / 1e4 == 0.8113);
    CHECK(std::round(entropy(std::vector<double>{0.1, 0.4, 0.3, 0.2}) * 1e4) / 1e4 == 1.8464);
    CHECK(entropy(binary_target(0.5)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(entropy(std::vector<double>{0.2, 0.1, 0.4, 0.3}) ==
          doctest::Approx(entropy(std::vector<double>{0.1, 0.4, 0.3, 0.2})).epsilon(1e-15));
    CHECK(entropy(std::vector<double>{0.25, 0.25, 0.25, 0.25}) > entropy(std::vector<double>{0.1, 0.4, 0.3, 0.2}));
}

TEST_CASE("KL divergence") {
    const std::vector<double> P = {0.1, 0.4, 0.3, 0.2};
    CHECK(kl_divergence(P, P) == 0.0);
    CHECK(kl_divergence(std::vector<double>{1, 0}, std::vector<double>{0.5, 0.5}) == doctest::Approx(1.0));
    CHECK(std::isinf(kl_divergence(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 0.0})));

    Rng rng(4);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> q = P;
        double total = 0;
        for (double& v : q) total += (v *= 0.5 + rng.uniform());
        for (double& v : q) v /= total;
        long double oracle = 0;
        for (std::size_t k = 0; k < 4; ++k) oracle += q[k] * std::log2(static_cast<long double>(q[k]) / P[k]);
        CHECK(std::abs(kl_divergence(q, P) - static_cast<double>(oracle)) < 1e-12);
    }
    CHECK_THROWS_AS(kl_divergence(std::vector<double>{1.0}, P), DimensionMismatch);
}

TEST_CASE("match pipeline") {
    const TargetDistribution t = build_target({0, 1, 2, 3}, {0.1, 0.4, 0.3, 0.2});
    const SectionLayout layout{4, 256};
    Rng rng(9);
    const SourceMessage u = random_message(layout, rng);
    const auto op = make_gaussian(700, layout.dimension(), layout.num_sections, 17);
    const MatchResult a = match(u, *op, t);
    const MatchResult b = match(u, *op, t);
    CHECK(a.y.symbols == b.y.symbols);
    CHECK(a.y.size() == 700);
    CHECK(a.s == pm_encode(u));
    CHECK(quantize(forward(*op, a.s.to_dense()), t).symbols == a.y.symbols);
    CHECK(code_rate(layout, 700) == doctest::Approx(512.0 / 700.0));

    const auto narrow = make_gaussian(700, 512, 128, 17);
    CHECK_THROWS_AS(match(u, *narrow, t), DimensionMismatch);
}

TEST_CASE("matched output over many messages follows the target") {
    const TargetDistribution t = build_target({0, 1, 2, 3}, {0.1, 0.4, 0.3, 0.2});
    const SectionLayout layout{4, 2500};
    const std::size_t M = 10000;
    std::vector<double> counts(4, 0.0);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(derive_seed(seed, 1));
        const auto op = make_gaussian(M, layout.dimension(), layout.num_sections, derive_seed(seed, 2));
        const auto pmf = empirical_pmf(match(random_message(layout, rng), *op, t).y, 4);
        for (std::size_t k = 0; k < 4; ++k) counts[k] += pmf[k] / 100.0;
        if (seed < 5) CHECK(total_variation(pmf, t.pmf()) < 0.02);
    }
    CHECK(total_variation(counts, t.pmf()) < 0.02);
}

TEST_CASE("Gaussian helpers") {
    for (double x : {-30.0, -5.0, -1.0, 0.0, 0.5, 2.0, 8.0, 9.0, 20.0, 37.0}) {
        const long double ref = q_ref(x);
        CHECK(gauss::q(x) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-13));
        CHECK(gauss::cdf(x) == doctest::Approx(static_cast<double>(q_ref(-x))).epsilon(1e-13));
        if (x >= 0) {
            const long double phi = std::exp(-0.5L * x * x) / std::sqrt(2.0L * 3.14159265358979323846L);
            const long double mills = ref / phi;
            CHECK(gauss::mills_ratio(x) == doctest::Approx(static_cast<double>(mills)).epsilon(1e-12));
            CHECK(gauss::inverse_mills_excess(x) ==
                  doctest::Approx(static_cast<double>(1.0L / mills - x)).epsilon(1e-9));
        }
    }
    CHECK(gauss::mills_ratio(1e6) == doctest::Approx(1e-6).epsilon(1e-9));
    for (double p : {1e-300, 1e-20, 1e-5, 0.1, 0.25, 0.5, 0.9, 1 - 1e-12}) {
        CHECK(static_cast<double>(q_ref(gauss::q_inverse(p))) == doctest::Approx(p).epsilon(1e-12));
        CHECK(gauss::cdf_inverse(p) == doctest::Approx(-gauss::q_inverse(p)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(gauss::q_inverse(0.0), MalformedInput);
    CHECK_THROWS_AS(gauss::q_inverse(1.0), MalformedInput);
    CHECK(gauss::interval_mass(30.0, 31.0) ==
          doctest::Approx(static_cast<double>(q_ref(30.0L) - q_ref(31.0L))).epsilon(1e-12));
    CHECK(gauss::interval_mass(-31.0, -30.0) == gauss::interval_mass(30.0, 31.0));
    CHECK(gauss::interval_mass(-1.0, 1.0) == doctest::Approx(0.6826894921370859).epsilon(1e-14));
}
