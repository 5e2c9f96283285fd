#include "parawave/regime.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "parawave/errors.hpp"

namespace parawave {

std::string to_string(Theorem t) {
    switch (t) {
        case Theorem::T1: return "T1";
        case Theorem::T2: return "T2";
        case Theorem::T3i: return "T3i";
        case Theorem::T3ii: return "T3ii";
        case Theorem::T3iii: return "T3iii";
        case Theorem::T4i: return "T4i";
        case Theorem::T4ii: return "T4ii";
        case Theorem::T4iii: return "T4iii";
    }
    return "?";
}

std::string to_string(TheoremFamily f) {
    switch (f) {
        case TheoremFamily::T1: return "T1";
        case TheoremFamily::T2: return "T2";
        case TheoremFamily::T3: return "T3";
        case TheoremFamily::T4: return "T4";
    }
    return "?";
}

TheoremFamily theorem_family_from_string(const std::string& name) {
    if (name == "T1") return TheoremFamily::T1;
    if (name == "T2") return TheoremFamily::T2;
    if (name.rfind("T3", 0) == 0) return TheoremFamily::T3;
    if (name.rfind("T4", 0) == 0) return TheoremFamily::T4;
    throw ArgumentError("unknown theorem '" + name + "'");
}

std::string ScalingRegime::label() const {
    std::ostringstream os;
    os.precision(12);
    os << to_string(theorem) << "(eps=" << eps << ",alpha=" << alpha << ",beta=" << beta << ",k=" << carrier_k
       << ")";
    return os.str();
}

namespace {

constexpr double kTieTol = 1e-12;

bool near(double a, double b) { return std::abs(a - b) <= kTieTol * (1.0 + std::abs(a) + std::abs(b)); }

/// Exponents (of eps) in k_eff = k eps^ek, sigma = eps^es, and the medium
/// argument powers, from the scaling definitions.
struct Scaling {
    double ek = 0.0;
    double es = 1.0;
    double zp = 2.0;
    double xp = 2.0;
    double sw = 2.0;  ///< Wigner offset exponent
};

/// Exponents of eps in c_disp (times k) and c_pot (divided by k) as
/// printed in the rescaled wave equations.
struct Displayed {
    double disp = 2.0;
    double pot = -1.0;
};

}  // namespace

ScalingRegime regime_table(TheoremFamily family, double eps, double alpha, double beta, double carrier_k,
                           const RegimeOptions& opts) {
    if (!(eps > 0.0 && eps <= 1.0)) throw ValidationError("eps must lie in (0, 1]");
    if (!(carrier_k > 0.0)) throw ValidationError("carrier wavenumber must be > 0");
    if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ValidationError("alpha and beta must be >= 0");

    ScalingRegime r;
    r.eps = eps;
    r.alpha = alpha;
    r.beta = beta;
    r.carrier_k = carrier_k;

    bool in_range = true;
    std::string why;
    const auto reject = [&](const std::string& msg) {
        in_range = false;
        if (why.empty()) why = msg;
    };

    Scaling sc;
    Displayed disp;
    const double a = alpha;
    const double b = beta;
    switch (family) {
        case TheoremFamily::T1:
            r.theorem = Theorem::T1;
            if (!(a > 0.0)) reject("T1 requires alpha > 0");
            sc = {2.0 - 2.0 * a, 2.0 * a - 1.0, 2.0, 2.0 * a, 2.0 * a};
            disp = {2.0 * a, -1.0};
            if (near(a, 1.0)) r.pairing = {true, KernelKind::Rad, TensorKind::Null};
            else if (a < 1.0) r.pairing = {true, KernelKind::Rad2, TensorKind::Null};
            else r.pairing = {true, KernelKind::Null, TensorKind::Null};
            break;
        case TheoremFamily::T2:
            r.theorem = Theorem::T2;
            if (!(a > 0.0)) reject("T2 requires alpha > 0");
            sc = {0.0, 2.0 * a - 1.0, 2.0, 2.0 * a, 2.0};
            disp = {2.0, 2.0 * a - 3.0};
            if (near(a, 1.0)) r.pairing = {true, KernelKind::Rad, TensorKind::Null};
            else if (a < 1.0) r.pairing = {false, KernelKind::Null, TensorKind::D20};
            else r.pairing = {false, KernelKind::Null, TensorKind::Null};
            break;
        case TheoremFamily::T3:
            if (!(a > 0.0) || !(b > 0.0)) reject("T3 requires alpha, beta > 0");
            if (near(a, b)) {
                r.theorem = Theorem::T3iii;
                sc = {2.0 - 2.0 * a, a, 2.0 * b, 2.0 * a, 2.0 * a};
                disp = {2.0 * a, -a};
                r.pairing = {true, KernelKind::T3iii, TensorKind::Null};
            } else if (a < b) {
                r.theorem = Theorem::T3i;
                sc = {2.0 - 2.0 * a, 2.0 * a - b, 2.0 * b, 2.0 * a, 2.0 * a};
                disp = {2.0 * a, -b};
                r.pairing = {true, KernelKind::T3i, TensorKind::Null};
            } else {
                r.theorem = Theorem::T3ii;
                sc = {2.0 - 2.0 * a, a, 2.0 * b, 2.0 * a, 2.0 * a};
                disp = {2.0 * a, -a};
                r.pairing = {true, KernelKind::Elastic26, TensorKind::Null};
                const double ratio = a / b;
                if (!(ratio > 1.0 && ratio < 4.0 / 3.0)) reject("T3ii requires 1 < alpha/beta < 4/3");
            }
            break;
        case TheoremFamily::T4:
            if (!(a > 0.0 && a < 1.0) || !(b > 0.0 && b < 1.0)) reject("T4 requires alpha, beta in (0, 1)");
            if (near(a, b)) {
                r.theorem = Theorem::T4iii;
                sc = {0.0, a, 2.0 * b, 2.0 * a, 2.0};
                disp = {2.0, a - 2.0};
                r.pairing = {false, KernelKind::Null, TensorKind::D22};
            } else if (b > a) {
                r.theorem = Theorem::T4i;
                sc = {0.0, 2.0 * a - b, 2.0 * b, 2.0 * a, 2.0};
                disp = {2.0, 2.0 * a - b - 2.0};
                r.pairing = {false, KernelKind::Null, TensorKind::D20Prime};
            } else {
                r.theorem = Theorem::T4ii;
                sc = {0.0, a, 2.0 * b, 2.0 * a, 2.0};
                disp = {2.0, a - 2.0};
                r.pairing = {false, KernelKind::Null, TensorKind::D21};
                const double ratio = a / b;
                if (!(ratio > 1.0 && ratio < 4.0 / 3.0)) reject("T4ii requires 1 < alpha/beta < 4/3");
            }
            break;
    }
    if (!in_range && !opts.allow_out_of_range)
        throw ValidationError(why + " (alpha=" + std::to_string(alpha) + ", beta=" + std::to_string(beta) +
                              "); pass the out-of-range override to run anyway");
    r.out_of_range = !in_range;

    // First-principles route: L_z = L_x = eps^-2 with the carrier replaced by k_eff.
    r.length = std::pow(eps, -2.0);
    r.k_eff = carrier_k * std::pow(eps, sc.ek);
    r.sigma = std::pow(eps, sc.es);
    r.c_disp = r.length / (r.k_eff * r.length * r.length);
    r.c_pot = r.sigma * r.k_eff * r.length;
    r.z_power = sc.zp;
    r.x_power = sc.xp;
    r.s_w = std::pow(eps, sc.sw);
    r.moyal_shift = std::pow(eps, sc.sw - sc.xp);
    r.moyal_coupling = r.c_pot * r.moyal_shift;

    // Cross-check against the displayed equation prefactors.
    const double want_disp = std::pow(eps, disp.disp) / carrier_k;
    const double want_pot = carrier_k * std::pow(eps, disp.pot);
    const double d_exp = 2.0 - sc.ek;
    const double p_exp = sc.es + sc.ek - 2.0;
    if (!near(d_exp, disp.disp) || !near(p_exp, disp.pot) ||
        std::abs(r.c_disp - want_disp) > 1e-9 * want_disp || std::abs(r.c_pot - want_pot) > 1e-9 * want_pot)
        throw std::logic_error("regime table inconsistency for " + r.label());
    return r;
}

SuperParabolic super_parabolic(double eps, double gamma) {
    if (!(eps > 0.0 && eps <= 1.0)) throw ValidationError("eps must lie in (0, 1]");
    if (!(gamma > 0.0 && gamma < 2.0)) throw ValidationError("super-parabolic scaling needs 0 < gamma < 2");
    SuperParabolic s;
    s.gamma = gamma;
    s.eps_tilde = std::pow(eps, 2.0 - gamma);
    s.L_x = std::pow(eps, -2.0);
    s.L_z = std::pow(eps, -2.0 * gamma);
    return s;
}

}  // namespace parawave
