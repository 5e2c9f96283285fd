#pragma once

#include <memory>
#include <span>

#include "parawave/kinetic.hpp"
#include "parawave/spectra.hpp"

namespace parawave {

/// Settings of the Langevin integrator.
struct LangevinConfig {
    TensorKind tensor = TensorKind::D20;
    double dz = 1e-2;
    double p_min = 0.0;    ///< kind 21 floor; 0 means 1e-3 k0
    double carrier_k = 1.0;
    double h_d = 0.0;      ///< divergence step; 0 means 1e-4 k0
    /// Permit D21 in d = 2 (its law is only claimed for d >= 3).
    bool allow_low_dim = false;
    QuadratureConfig quad{1e-10, 16, 0};
};

/// Lower-triangular L with L L^T = M after clipping negative pivots
/// (eigenvalues down to -1e-12 are treated as 0). Asymmetric input throws.
Mat3 cholesky_psd(const Mat3& m);

/// D(p) and its divergence div_i = sum_j dD_ij/dp_j. Constant kinds are
/// evaluated once; for D21 and D22 with an isotropic spectrum the tensor is
/// A(|p|) p^p^T + B(|p|)(I - p^p^T) and the radial profiles are tabulated
/// on first use (general spectra fall back to direct quadrature).
class TensorField {
public:
    TensorField(const SpectralDensity& s, const LangevinConfig& cfg, double r_max = 0.0);

    Mat3 at(std::span<const double> p) const;
    /// Central differences of `at` with step h_D.
    Vec3 divergence(std::span<const double> p) const;
    bool constant() const;
    double support_k() const;

    struct Impl;

private:
    std::shared_ptr<const Impl> impl_;
};

/// Euler-Maruyama for the Ito process with generator k^2 div_p(D grad_p):
///   x <- x + (p/k) dz,  p <- p + k^2 div D dz + sqrt(2 k^2 dz) chol(D) xi.
/// Kind 21 particles with |p| < p_min are frozen and counted.
ParticleEnsemble evolve_diffusive(ParticleEnsemble e, const SpectralDensity& s, const LangevinConfig& cfg,
                                  double z_final, int workers = 1);

/// Same, reusing a prepared tensor field.
ParticleEnsemble evolve_diffusive(ParticleEnsemble e, const TensorField& field, const LangevinConfig& cfg,
                                  double z_final, int workers = 1);

}  // namespace parawave
