#pragma once

#include <string>

#include "parawave/spectra.hpp"

namespace parawave {

/// Theorem family chosen by the user; the case follows from (alpha, beta).
enum class TheoremFamily { T1, T2, T3, T4 };

/// Fully resolved theorem case.
enum class Theorem { T1, T2, T3i, T3ii, T3iii, T4i, T4ii, T4iii };

std::string to_string(Theorem t);
std::string to_string(TheoremFamily f);
/// Accepts "T1".."T4" and the case names "T3i", "T4ii", ...
TheoremFamily theorem_family_from_string(const std::string& name);

/// The limiting equation a regime is compared against.
struct ReferencePairing {
    bool kinetic = true;                 ///< transport equation (else advection-diffusion)
    KernelKind kernel = KernelKind::Null;
    TensorKind tensor = TensorKind::Null;
};

/// Nondimensional coefficients of
///   i dPsi/dz + (c_disp/2) Lap Psi + c_pot V(z / eps^z_power, x / eps^x_power) Psi = 0
/// and of the scaled Wigner transform with offset s_w * y.
struct ScalingRegime {
    Theorem theorem = Theorem::T1;
    double eps = 1.0;
    double alpha = 1.0;
    double beta = 1.0;
    double carrier_k = 1.0;

    double k_eff = 1.0;   ///< carrier after the anisotropic-probing replacement
    double sigma = 1.0;   ///< fluctuation strength
    double length = 1.0;  ///< L_z = L_x = eps^-2
    double c_disp = 1.0;
    double c_pot = 1.0;
    double s_w = 1.0;
    double z_power = 2.0;
    double x_power = 2.0;
    /// Momentum-shift factor of the Wigner-Moyal operator: s_w / eps^x_power.
    double moyal_shift = 1.0;
    /// Overall coupling of the Moyal term: c_pot * moyal_shift.
    double moyal_coupling = 1.0;

    ReferencePairing pairing;
    bool out_of_range = false;  ///< built under the override flag

    std::string label() const;
};

struct RegimeOptions {
    bool allow_out_of_range = false;
};

/// Builds and cross-checks the regime coefficients. Throws ValidationError
/// when parameters fall outside the theorem's hypotheses (unless overridden).
ScalingRegime regime_table(TheoremFamily family, double eps, double alpha, double beta, double carrier_k,
                           const RegimeOptions& opts = {});

/// Super-parabolic reparametrization L_z ~ L_x^gamma = eps^{-2 gamma}:
/// the Wigner scale becomes eps_tilde^2 with eps_tilde = eps^{2 - gamma}.
struct SuperParabolic {
    double gamma = 1.0;
    double eps_tilde = 1.0;
    double L_z = 1.0;
    double L_x = 1.0;
};
SuperParabolic super_parabolic(double eps, double gamma);

}  // namespace parawave
