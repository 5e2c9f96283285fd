#include <doctest.h>

#include <cmath>

#include "parawave/errors.hpp"
#include "parawave/regime.hpp"

using namespace parawave;

TEST_SUITE("regime") {

TEST_CASE("theorem pairings") {
    CHECK(regime_table(TheoremFamily::T1, 0.1, 1.0, 1.0, 1.0).pairing.kernel == KernelKind::Rad);
    CHECK(regime_table(TheoremFamily::T1, 0.1, 0.5, 1.0, 1.0).pairing.kernel == KernelKind::Rad2);
    CHECK(regime_table(TheoremFamily::T1, 0.1, 1.5, 1.0, 1.0).pairing.kernel == KernelKind::Null);
    const auto t2 = regime_table(TheoremFamily::T2, 0.1, 0.5, 1.0, 1.0);
    CHECK_FALSE(t2.pairing.kinetic);
    CHECK(t2.pairing.tensor == TensorKind::D20);
    CHECK(regime_table(TheoremFamily::T2, 0.1, 1.5, 1.0, 1.0).pairing.tensor == TensorKind::Null);
    const auto t4 = regime_table(TheoremFamily::T4, 0.1, 0.5, 0.5, 1.0);
    CHECK(t4.theorem == Theorem::T4iii);
    CHECK(t4.pairing.tensor == TensorKind::D22);
    CHECK(regime_table(TheoremFamily::T4, 0.1, 0.4, 0.6, 1.0).pairing.tensor == TensorKind::D20Prime);
    CHECK(regime_table(TheoremFamily::T4, 0.1, 0.6, 0.5, 1.0).pairing.tensor == TensorKind::D21);
    CHECK(regime_table(TheoremFamily::T3, 0.1, 0.5, 0.5, 1.0).pairing.kernel == KernelKind::T3iii);
    CHECK(regime_table(TheoremFamily::T3, 0.1, 0.4, 0.6, 1.0).pairing.kernel == KernelKind::T3i);
    CHECK(regime_table(TheoremFamily::T3, 0.1, 0.6, 0.5, 1.0).pairing.kernel == KernelKind::Elastic26);
}

TEST_CASE("T1 coefficients: L = eps^-2, sigma = eps") {
    const double eps = 0.2;
    const double k = 1.7;
    const auto r = regime_table(TheoremFamily::T1, eps, 1.0, 1.0, k);
    CHECK(r.length == doctest::Approx(1.0 / (eps * eps)));
    CHECK(r.sigma == doctest::Approx(eps));
    CHECK(r.c_disp == doctest::Approx(eps * eps / k));
    CHECK(r.c_pot == doctest::Approx(k / eps));
    CHECK(r.z_power == 2.0);
    CHECK(r.x_power == doctest::Approx(2.0));
    CHECK(r.c_disp / r.s_w == doctest::Approx(1.0 / k));
}

TEST_CASE("the kinetic carrier is c_disp / s_w in every family") {
    for (auto f : {TheoremFamily::T1, TheoremFamily::T2}) {
        const auto r = regime_table(f, 0.3, 0.5, 1.0, 2.5);
        CHECK(r.c_disp / r.s_w == doctest::Approx(1.0 / 2.5));
    }
}

TEST_CASE("hypotheses are enforced unless overridden") {
    CHECK_THROWS_AS(regime_table(TheoremFamily::T3, 0.1, 0.9, 0.5, 1.0), ValidationError);
    CHECK_THROWS_AS(regime_table(TheoremFamily::T4, 0.1, 0.9, 0.5, 1.0), ValidationError);
    CHECK_THROWS_AS(regime_table(TheoremFamily::T4, 0.1, 1.2, 0.5, 1.0), ValidationError);
    const auto r = regime_table(TheoremFamily::T3, 0.1, 0.9, 0.5, 1.0, {true});
    CHECK(r.out_of_range);
    CHECK_NOTHROW(regime_table(TheoremFamily::T3, 0.1, 0.6, 0.5, 1.0));
    CHECK_THROWS_AS(regime_table(TheoremFamily::T1, 0.0, 1.0, 1.0, 1.0), ValidationError);
    CHECK_THROWS_AS(regime_table(TheoremFamily::T1, 0.1, 1.0, 1.0, -1.0), ValidationError);
}

TEST_CASE("names and super-parabolic scaling") {
    CHECK(theorem_family_from_string("T2") == TheoremFamily::T2);
    CHECK(theorem_family_from_string("T4ii") == TheoremFamily::T4);
    CHECK_THROWS_AS(theorem_family_from_string("T9"), ArgumentError);
    const auto sp = super_parabolic(0.1, 1.5);
    CHECK(sp.eps_tilde == doctest::Approx(std::pow(0.1, 0.5)));
    CHECK(sp.L_z == doctest::Approx(std::pow(0.1, -3.0)));
    CHECK_THROWS_AS(super_parabolic(0.1, 2.0), ValidationError);
}

}
