#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "parawave/diffusion.hpp"
#include "parawave/errors.hpp"
#include "parawave/kinetic.hpp"
#include "parawave/stats.hpp"

using namespace parawave;

namespace {

Mat3 product(const Mat3& l) {
    Mat3 out;
    out.dim = l.dim;
    for (int i = 0; i < l.dim; ++i)
        for (int j = 0; j < l.dim; ++j) {
            double s = 0.0;
            for (int c = 0; c < l.dim; ++c) s += l(i, c) * l(j, c);
            out(i, j) = s;
        }
    return out;
}

double normal_cdf(double x, double sd) { return 0.5 * std::erfc(-x / (sd * std::numbers::sqrt2)); }

}  // namespace

TEST_SUITE("diffusion") {

TEST_CASE("PSD Cholesky factor") {
    Mat3 id;
    id.dim = 3;
    for (int i = 0; i < 3; ++i) id(i, i) = 1.0;
    const auto li = cholesky_psd(id);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(li(i, j) == (i == j ? 1.0 : 0.0));
    Mat3 zero;
    zero.dim = 2;
    CHECK(cholesky_psd(zero).max_abs() == 0.0);

    std::mt19937_64 gen(5);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; ++trial) {
        Mat3 a;
        a.dim = 3;
        for (auto& v : a.m) v = nd(gen);
        Mat3 m;
        m.dim = 3;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int c = 0; c < 3; ++c) m(i, j) += a(c, i) * a(c, j);
        const auto back = product(cholesky_psd(m));
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) CHECK(std::abs(back(i, j) - m(i, j)) < 1e-12 * m.max_abs());
    }
    // Rank one: v v^T.
    Mat3 r1;
    r1.dim = 3;
    const std::array<double, 3> v{1.0, -2.0, 0.5};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r1(i, j) = v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)];
    const auto b1 = product(cholesky_psd(r1));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(b1(i, j) == doctest::Approx(r1(i, j)).epsilon(1e-12));
    Mat3 asym = id;
    asym(0, 1) = 0.5;
    CHECK_THROWS_AS(cholesky_psd(asym), ArgumentError);
}

TEST_CASE("null tensor is free streaming") {
    auto e = make_ensemble(2, KernelKind::Null, 1.0, 2);
    const std::array<double, 2> x0{0.0, 0.0};
    const std::array<double, 2> p0{0.5, -0.25};
    add_particles(e, 100, x0, p0, 1.0);
    LangevinConfig cfg;
    cfg.tensor = TensorKind::Null;
    cfg.carrier_k = 2.0;
    const auto out = evolve_diffusive(e, SpectralDensity::smooth_bump(1.0, 1.0, 1.0, 2), cfg, 3.0);
    for (const auto& q : out.particles) {
        CHECK(q.p[0] == 0.5);
        CHECK(q.x[0] == doctest::Approx(0.75));
        CHECK(q.x[1] == doctest::Approx(-0.375));
    }
}

TEST_CASE("constant tensor: momentum variance grows as 2 k^2 D z") {
    const auto s = SpectralDensity::smooth_bump(1.0, 1.0, 1.0, 2);
    LangevinConfig cfg;
    cfg.tensor = TensorKind::D20;
    cfg.carrier_k = 1.2;
    cfg.dz = 0.05;
    const std::array<double, 2> p0{0.0, 0.0};
    const Mat3 D = diffusion_tensor(s, TensorKind::D20, p0, cfg.carrier_k);
    auto e = make_ensemble(2, KernelKind::Null, cfg.carrier_k, 31);
    add_particles(e, 100000, p0, p0, 1.0);
    const double z = 1.5;
    const auto out = evolve_diffusive(e, s, cfg, z);
    for (std::size_t a = 0; a < 2; ++a) {
        std::vector<double> p;
        std::vector<double> p2;
        for (const auto& q : out.particles) {
            p.push_back(q.p[a]);
            p2.push_back(q.p[a] * q.p[a]);
        }
        const double want = 2.0 * cfg.carrier_k * cfg.carrier_k * D(static_cast<int>(a), static_cast<int>(a)) * z;
        // Mean is zero by construction; the variance estimator is the mean of p^2.
        const double m2 = stats::mean(p2);
        const double se = stats::standard_error(p2);
        INFO("axis " << a << " var " << m2 << " want " << want << " se " << se);
        CHECK(std::abs(m2 - want) < 3.0 * se);
        CHECK(std::abs(stats::mean(p)) < 3.0 * stats::standard_error(p));
    }
}

TEST_CASE("D22 at rest reproduces D20") {
    const auto s = SpectralDensity::smooth_bump(1.0, 1.0, 1.0, 1);
    const double k = 1.0;
    const std::array<double, 1> p0{0.0};
    LangevinConfig c22;
    c22.tensor = TensorKind::D22;
    c22.carrier_k = k;
    c22.dz = 0.01;
    const TensorField f22(s, c22, 2.0);
    const double d20 = diffusion_tensor(s, TensorKind::D20, p0, k)(0, 0);
    CHECK(f22.at(p0)(0, 0) == doctest::Approx(d20).epsilon(1e-8));
    CHECK(std::abs(f22.divergence(p0)[0]) < 1e-8);

    auto e = make_ensemble(1, KernelKind::Null, k, 44);
    add_particles(e, 20000, p0, p0, 1.0);
    const auto out = evolve_diffusive(e, f22, c22, c22.dz);
    std::vector<double> p;
    for (const auto& q : out.particles) p.push_back(q.p[0]);
    const double sd = std::sqrt(2.0 * k * k * d20 * c22.dz);
    CHECK(stats::ks_pvalue(p, [sd](double x) { return normal_cdf(x, sd); }) > 0.01);
}

TEST_CASE("tensor D21 freezes slow particles") {
    const auto s = SpectralDensity::smooth_bump(1.0, 1.0, 1.0, 3);
    LangevinConfig cfg;
    cfg.tensor = TensorKind::D21;
    cfg.dz = 0.05;
    cfg.p_min = 0.05;
    auto e = make_ensemble(3, KernelKind::Null, 1.0, 9);
    const std::array<double, 3> x0{0.0, 0.0, 0.0};
    const std::array<double, 3> slow{0.01, 0.0, 0.0};
    const std::array<double, 3> fast{0.0, 0.0, 1.5};
    add_particles(e, 7, x0, slow, 1.0);
    add_particles(e, 50, x0, fast, 1.0);
    const auto out = evolve_diffusive(e, s, cfg, 0.1);
    CHECK(out.frozen_count() == 7);
    for (std::size_t i = 0; i < 7; ++i) CHECK(out.particles[i].x == e.particles[i].x);
    LangevinConfig low = cfg;
    CHECK_THROWS_AS(TensorField(SpectralDensity::smooth_bump(1.0, 1.0, 1.0, 2), low), ConfigurationError);
    low.allow_low_dim = true;
    CHECK_NOTHROW(TensorField(SpectralDensity::smooth_bump(1.0, 1.0, 1.0, 2), low));
}


TEST_CASE("tensor D21: one-step |p| increments are second order, transverse ones first order") {
    const auto s = SpectralDensity::smooth_bump(1.0, 1.0, 1.0, 3);
    LangevinConfig cfg;
    cfg.tensor = TensorKind::D21;
    const std::array<double, 3> x0{0.0, 0.0, 0.0};
    const std::array<double, 3> p0{0.0, 0.0, 0.8};
    const TensorField field(s, cfg);
    const double b = field.at(p0)(0, 0);
    REQUIRE(b > 0.0);
    CHECK(std::abs(field.at(p0)(2, 2)) < 1e-10 * b);
    struct Moments {
        double radial_mean, radial_var, transverse_var;
    };
    auto moments = [&](double dz) {
        cfg.dz = dz;
        auto e = make_ensemble(3, KernelKind::Null, 1.0, 21);
        add_particles(e, 100000, x0, p0, 1.0);
        const auto out = evolve_diffusive(e, s, cfg, dz);
        std::vector<double> radial;
        std::vector<double> transverse;
        for (const auto& q : out.particles) {
            radial.push_back(std::hypot(q.p[0], q.p[1], q.p[2]) - 0.8);
            transverse.push_back(q.p[0]);
        }
        return Moments{stats::mean(radial), stats::variance(radial), stats::variance(transverse)};
    };
    const auto a = moments(0.02);
    const auto c = moments(0.01);
    // Transverse variance is 2 k^2 B dz; the radial drift -2 k^2 B dz / |p|
    // cancels the curvature of the sphere to first order.
    CHECK(a.transverse_var == doctest::Approx(2.0 * b * 0.02).epsilon(0.02));
    CHECK(c.transverse_var == doctest::Approx(2.0 * b * 0.01).epsilon(0.02));
    CHECK(std::abs(a.radial_mean) < 0.05 * 2.0 * b * 0.02 / 0.8);
    CHECK(a.radial_var / a.transverse_var < 0.05);
    CHECK(c.radial_var / c.transverse_var == doctest::Approx(0.5 * a.radial_var / a.transverse_var).epsilon(0.1));
}
}
