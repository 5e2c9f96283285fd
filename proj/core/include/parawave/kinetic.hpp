#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "parawave/rng.hpp"
#include "parawave/spectra.hpp"
#include "parawave/stats.hpp"
#include "parawave/wigner.hpp"

namespace parawave {

using Vec3 = std::array<double, 3>;

/// One phase-space particle. Each owns a Philox stream derived from
/// (seed, ensemble stream, index), so results do not depend on sharding.
struct Particle {
    Vec3 x{};
    Vec3 p{};
    double weight = 0.0;  ///< signed when sampled from a signed Wigner function
    std::uint32_t jumps = 0;
    bool frozen = false;
    Philox4x32 rng{0, 0};
};

/// Optional periodic boxes [-L/2, L/2)^d in x and/or p (0 disables).
struct Torus {
    double x_period = 0.0;
    double p_period = 0.0;
};

struct EnsembleOptions {
    /// Permit Elastic26 in d = 2 (its energy-shell law is only claimed for d >= 3).
    bool allow_low_dim_elastic = false;
    Torus torus;
};

/// Particles evolved by the transport equation
///   dW/dz + (p/k).grad_x W = k^2 L W.
struct ParticleEnsemble {
    int dim = 1;
    double z = 0.0;
    KernelKind kernel = KernelKind::Null;
    double carrier_k = 1.0;
    std::uint64_t seed = 0;
    std::vector<Particle> particles;
    EnsembleOptions options;

    double total_weight() const;
    std::size_t frozen_count() const;
};

/// Empty ensemble after checking the kernel against the dimension.
ParticleEnsemble make_ensemble(int dim, KernelKind kernel, double carrier_k, std::uint64_t seed,
                               const EnsembleOptions& opts = {});

/// Appends n particles at (x, p) with the given weight each.
void add_particles(ParticleEnsemble& e, std::size_t n, std::span<const double> x, std::span<const double> p,
                   double weight);

/// n particles from the product Gaussian density with per-axis sds and total
/// mass `mass` (equal weights). This is the Wigner function of a Gaussian
/// beam when sigma_p = s_w / (2 sigma_x).
void add_gaussian(ParticleEnsemble& e, std::size_t n, std::span<const double> x0, std::span<const double> p0,
                  double sigma_x, double sigma_p, double mass);

/// n particles importance-sampled from |W| (cell chosen by inverse CDF,
/// uniform inside the cell) carrying signed weights sign(W) * int|W| / n.
void add_from_wigner(ParticleEnsemble& e, std::size_t n, const WignerField& W);

/// Draws q from the normalized kernel density sigma(p, .) by rejection.
/// Volume kernels propose q - p uniformly in the support box with envelope
/// max Phi; Elastic26 proposes uniformly on the reachable cap of |q| = |p|.
Vec3 sample_jump(std::span<const double> p, KernelKind kernel, const SpectralDensity& s, double carrier_k,
                 Philox4x32& rng);

/// Jump-rate bound used for thinning: k^2 2 pi max(Phi) |box| for volume
/// kernels, and the per-|p| cap bound for Elastic26.
double thinning_rate(const SpectralDensity& s, KernelKind kernel, std::span<const double> p, double carrier_k);

/// Free flights x += (p/k) tau between jumps of exact rate k^2 Sigma(p),
/// realized by thinning. Particles with degenerate momentum (|p| = 0 under
/// Elastic26) are frozen and counted. Returns a new ensemble at z_final.
ParticleEnsemble evolve(ParticleEnsemble e, const SpectralDensity& s, double z_final, int workers = 1);

struct ObservableEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
};

using PhaseFn = std::function<double(std::span<const double> x, std::span<const double> p)>;

/// sum_i w_i theta(x_i, p_i) with a 64-block jackknife error.
ObservableEstimate estimate_observable(const ParticleEnsemble& e, const PhaseFn& theta);
ObservableEstimate estimate_observable(const ParticleEnsemble& e, const TestFunction& th);

}  // namespace parawave
