#include <doctest.h>

#include <cmath>
#include <vector>

#include "parawave/rng.hpp"
#include "parawave/stats.hpp"

using namespace parawave;

TEST_SUITE("stats") {

TEST_CASE("mean, variance and standard error") {
    const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
    CHECK(stats::mean(x) == 2.5);
    CHECK(stats::variance(x) == doctest::Approx(5.0 / 3.0));
    CHECK(stats::standard_error(x) == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
    CHECK(stats::variance(std::vector<double>{1.0}) == 0.0);
}

TEST_CASE("jackknife of the mean equals the classical standard error") {
    std::vector<double> x(64);
    Philox4x32 g(1, 1);
    for (auto& v : x) v = standard_normal(g);
    const auto j = stats::jackknife(x, [](std::span<const double> s) { return stats::mean(s); }, 64);
    CHECK(j.value == doctest::Approx(stats::mean(x)).epsilon(1e-12));
    CHECK(j.stderr_ == doctest::Approx(stats::standard_error(x)).epsilon(1e-10));
}

TEST_CASE("bootstrap is seeded and brackets the estimate") {
    std::vector<double> x(200);
    Philox4x32 g(2, 2);
    for (auto& v : x) v = standard_normal(g);
    auto stat = [](std::span<const double> s) { return stats::variance(s); };
    const auto a = stats::bootstrap(x, stat, 500, 9, 1);
    const auto b = stats::bootstrap(x, stat, 500, 9, 1);
    CHECK(a.sd == b.sd);
    CHECK(a.ci_lo == b.ci_lo);
    CHECK(a.ci_lo < a.estimate);
    CHECK(a.estimate < a.ci_hi);
    // Normal data: sd of the sample variance is about sqrt(2/(n-1)).
    CHECK(a.sd == doctest::Approx(std::sqrt(2.0 / 199.0)).epsilon(0.3));
}

TEST_CASE("chi-square p-values") {
    const std::vector<double> e(10, 100.0);
    CHECK(stats::chi_square_pvalue(e, e) == doctest::Approx(1.0));
    std::vector<double> o(e);
    o[0] = 200.0;
    o[1] = 0.0;
    CHECK(stats::chi_square_pvalue(o, e) < 1e-10);
    // chi2 = 18 with 9 dof -> p = 0.0352
    std::vector<double> o2(e);
    o2[0] = 130.0;
    o2[1] = 70.0;
    CHECK(stats::chi_square_pvalue(o2, e) == doctest::Approx(0.0352).epsilon(0.01));
}

TEST_CASE("Kolmogorov distribution and KS tests") {
    CHECK(stats::kolmogorov_q(1.36) == doctest::Approx(0.0494).epsilon(0.01));
    CHECK(stats::kolmogorov_q(0.0) == doctest::Approx(1.0));
    std::vector<double> u(2000);
    Philox4x32 g(3, 3);
    for (auto& v : u) v = uniform01(g);
    CHECK(stats::ks_pvalue(u, [](double x) { return std::clamp(x, 0.0, 1.0); }) > 0.01);
    CHECK(stats::ks_pvalue(u, [](double x) { return std::clamp(x * x, 0.0, 1.0); }) < 1e-6);
    std::vector<double> w(1500);
    for (auto& v : w) v = uniform01(g);
    CHECK(stats::ks_two_sample_pvalue(u, w) > 0.01);
}

}
