#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "parawave/errors.hpp"
#include "parawave/kinetic.hpp"
#include "parawave/quadrature.hpp"
#include "parawave/stats.hpp"

using namespace parawave;

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

TEST_SUITE("kinetic") {

TEST_CASE("null kernel is exact free flight") {
    auto e = make_ensemble(2, KernelKind::Null, 1.5, 4);
    const std::array<double, 2> x0{0.1, -0.2};
    const std::array<double, 2> p0{0.6, 0.3};
    add_gaussian(e, 500, x0, p0, 0.5, 0.2, 2.0);
    const auto before = e;
    const auto s = SpectralDensity::smooth_bump(1.0, 1.0, 1.0, 2);
    const auto after = evolve(e, s, 2.0);
    CHECK(after.z == 2.0);
    for (std::size_t i = 0; i < e.particles.size(); ++i) {
        const auto& a = before.particles[i];
        const auto& b = after.particles[i];
        for (std::size_t k = 0; k < 2; ++k) {
            CHECK(b.p[k] == a.p[k]);
            CHECK(b.x[k] == doctest::Approx(a.x[k] + a.p[k] / 1.5 * 2.0).epsilon(1e-14));
        }
        CHECK(b.jumps == 0);
    }
    CHECK(after.total_weight() == doctest::Approx(2.0).epsilon(1e-13));
    CHECK_THROWS_AS(evolve(after, s, 1.0), ArgumentError);
}

TEST_CASE("elastic kernel keeps |p| and rejects low dimensions") {
    CHECK_THROWS_AS(make_ensemble(1, KernelKind::Elastic26, 1.0, 1), ConfigurationError);
    CHECK_THROWS_AS(make_ensemble(2, KernelKind::Elastic26, 1.0, 1), ConfigurationError);
    CHECK_NOTHROW(make_ensemble(2, KernelKind::Elastic26, 1.0, 1, {true, {}}));
    auto e = make_ensemble(3, KernelKind::Elastic26, 2.0, 5);
    const std::array<double, 3> x0{0.0, 0.0, 0.0};
    const std::array<double, 3> p0{0.3, 0.4, 0.5};
    const std::array<double, 3> pz{0.0, 0.0, 0.0};
    add_particles(e, 2000, x0, p0, 1.0);
    add_particles(e, 10, x0, pz, 1.0);
    const auto s = SpectralDensity::smooth_bump(1.0, 1.0, 1.0, 3);
    const auto out = evolve(e, s, 1.0);
    const double r0 = std::sqrt(0.5);
    std::size_t jumped = 0;
    for (std::size_t i = 0; i < 2000; ++i) {
        const auto& q = out.particles[i];
        CHECK(std::sqrt(q.p[0] * q.p[0] + q.p[1] * q.p[1] + q.p[2] * q.p[2]) == doctest::Approx(r0).epsilon(1e-12));
        if (q.jumps > 0) ++jumped;
    }
    CHECK(jumped > 100);
    CHECK(out.frozen_count() == 10);
}

TEST_CASE("jump counts are Poisson with mean k^2 Sigma z") {
    const double k = 1.0;
    const auto s = SpectralDensity::smooth_bump(0.5, 1.0, 1.0, 1);
    const std::array<double, 1> p0{0.2};
    const double sigma = total_cross_section(s, p0, KernelKind::Rad2, k);
    const double z = 3.0 / (k * k * sigma);
    auto e = make_ensemble(1, KernelKind::Rad2, k, 21);
    const std::array<double, 1> x0{0.0};
    add_particles(e, 100000, x0, p0, 1.0);
    const auto out = evolve(e, s, z);
    const double lambda = k * k * sigma * z;
    std::vector<double> obs(16, 0.0);
    std::vector<double> expct(16, 0.0);
    for (const auto& q : out.particles) obs[std::min<std::size_t>(q.jumps, 15)] += 1.0;
    double pmf = std::exp(-lambda);
    double acc = 0.0;
    for (std::size_t j = 0; j < 15; ++j) {
        expct[j] = pmf * 1e5;
        acc += pmf;
        pmf *= lambda / static_cast<double>(j + 1);
    }
    expct[15] = (1.0 - acc) * 1e5;
    CHECK(stats::chi_square_pvalue(obs, expct) > 0.01);
}

TEST_CASE("Rad2 jumps from rest are isotropic for an isotropic spectrum") {
    const auto s = SpectralDensity::smooth_bump(1.0, 1.0, 1.0, 2);
    Philox4x32 rng(8, 0);
    const std::array<double, 2> p0{0.0, 0.0};
    std::vector<double> angle;
    for (int i = 0; i < 20000; ++i) {
        const auto q = sample_jump(p0, KernelKind::Rad2, s, 1.0, rng);
        angle.push_back(std::atan2(q[1], q[0]));
    }
    CHECK(stats::ks_pvalue(angle, [](double t) { return (t + kPi) / (2.0 * kPi); }) > 0.01);
}

TEST_CASE("Rad jump histogram follows the kernel density") {
    const auto s = SpectralDensity::smooth_bump(1.0, 1.0, 1.0, 1);
    const double k = 0.8;
    const std::array<double, 1> p0{0.4};
    Philox4x32 rng(12, 3);
    const int bins = 64;
    const double lo = p0[0] - s.support_k();
    const double h = 2.0 * s.support_k() / bins;
    std::vector<double> obs(bins, 0.0);
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const auto q = sample_jump(p0, KernelKind::Rad, s, k, rng);
        const int b = static_cast<int>(std::floor((q[0] - lo) / h));
        REQUIRE(b >= 0);
        REQUIRE(b < bins);
        obs[static_cast<std::size_t>(b)] += 1.0;
    }
    auto dens = [&](double q) {
        const std::array<double, 1> qq{q};
        return kernel_density(s, KernelKind::Rad, p0, qq, k);
    };
    std::vector<double> mass(bins);
    double total = 0.0;
    for (int b = 0; b < bins; ++b) {
        mass[static_cast<std::size_t>(b)] = integrate_1d(dens, lo + b * h, lo + (b + 1) * h, {1e-12, 20, 0});
        total += mass[static_cast<std::size_t>(b)];
    }
    for (auto& m : mass) m *= n / total;
    CHECK(stats::chi_square_pvalue(obs, mass) > 0.01);
}

TEST_CASE("observable estimator") {
    auto e = make_ensemble(1, KernelKind::Null, 1.0, 3);
    const double s_w = 0.25;
    const double sx = 0.5;
    const double sp = s_w / (2.0 * sx);
    const std::array<double, 1> x0{0.1};
    const std::array<double, 1> p0{0.2};
    const double mass = std::sqrt(2.0 * kPi) * sx;  // ||Psi||^2 of a unit-peak beam
    add_gaussian(e, 100000, x0, p0, sx, sp, mass);
    const auto c = estimate_observable(e, TestFunction::constant(1, 1.0));
    CHECK(c.mean == doctest::Approx(mass).epsilon(1e-12));
    CHECK(c.stderr_ < 1e-12);
    // <W0, theta> for a Gaussian window in closed form.
    const double wx = 0.7;
    const double wp = 0.1;
    const auto th = TestFunction::gauss(1, {0.0, 0.0}, {0.15, 0.0}, wx, wp);
    const double want = mass * wx / std::sqrt(sx * sx + wx * wx) * std::exp(-0.01 / (2.0 * (sx * sx + wx * wx))) * wp /
                        std::sqrt(sp * sp + wp * wp) * std::exp(-0.0025 / (2.0 * (sp * sp + wp * wp)));
    const auto est = estimate_observable(e, th);
    CHECK(est.stderr_ > 0.0);
    CHECK(std::abs(est.mean - want) < 4.0 * est.stderr_);
}

TEST_CASE("Rad2 relaxes to a flat momentum law on the torus") {
    const auto s = SpectralDensity::smooth_bump(1.0, 1.0, 1.0, 1);
    EnsembleOptions opts;
    opts.torus = {8.0, 4.0};
    auto e = make_ensemble(1, KernelKind::Rad2, 1.0, 17, opts);
    const std::array<double, 1> x0{0.0};
    const std::array<double, 1> p0{0.0};
    add_particles(e, 20000, x0, p0, 1.0);
    const std::array<double, 1> any{0.0};
    const double rate = total_cross_section(s, any, KernelKind::Rad2, 1.0);
    const auto out = evolve(e, s, 60.0 / rate);
    std::vector<double> obs(20, 0.0);
    for (const auto& q : out.particles) {
        REQUIRE(q.p[0] >= -2.0);
        REQUIRE(q.p[0] < 2.0);
        REQUIRE(std::abs(q.x[0]) <= 4.0);
        obs[static_cast<std::size_t>((q.p[0] + 2.0) / 0.2)] += 1.0;
    }
    const std::vector<double> flat(20, 1000.0);
    CHECK(stats::chi_square_pvalue(obs, flat) > 0.01);
}

TEST_CASE("results do not depend on the worker count") {
    const auto s = SpectralDensity::smooth_bump(1.0, 1.0, 1.0, 2);
    auto e = make_ensemble(2, KernelKind::Rad, 1.0, 6);
    const std::array<double, 2> x0{0.0, 0.0};
    const std::array<double, 2> p0{0.3, 0.1};
    add_gaussian(e, 3000, x0, p0, 0.3, 0.2, 1.0);
    const auto a = evolve(e, s, 0.5, 1);
    const auto b = evolve(e, s, 0.5, 3);
    for (std::size_t i = 0; i < a.particles.size(); ++i) {
        CHECK(a.particles[i].x == b.particles[i].x);
        CHECK(a.particles[i].p == b.particles[i].p);
    }
}

}
