#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "parawave/regime.hpp"
#include "parawave/spectra.hpp"

namespace parawave {

/// Periodic (z, x[, y]) lattice in medium coordinates.
struct MediumGridSpec {
    int dim = 1;                    ///< transverse dimension, 1 or 2
    int nz = 0;
    double dz = 0.0;
    std::array<int, 2> nx{0, 1};    ///< transverse points per axis (nx[1] = 1 when dim = 1)
    double dx = 0.0;

    std::size_t transverse_size() const { return static_cast<std::size_t>(nx[0]) * static_cast<std::size_t>(nx[1]); }
    std::size_t size() const { return static_cast<std::size_t>(nz) * transverse_size(); }
    double z_extent() const { return (nz - 1) * dz; }
    bool operator==(const MediumGridSpec&) const = default;
};

/// Checks the spacing and box-size bounds against the spectrum support;
/// throws ConfigurationError naming the violated bound.
void validate_medium_grid(const SpectralDensity& s, const MediumGridSpec& grid);

/// Medium lattice that node-aligns with a solver grid of `nx` points of
/// spacing `dx_solver` and covers ranges [0, z_final] after scaling.
/// `z_resolution` is the target dz_med in units of 1/w0.
MediumGridSpec plan_medium_grid(const ScalingRegime& regime, const SpectralDensity& s, int dim, int nx,
                                double dx_solver, double z_final, double z_resolution = 0.25);

/// One seeded sample of the Gaussian field V on a periodic lattice.
/// Values are row-major (z slowest, then x, then y).
struct MediumRealization {
    MediumGridSpec grid;
    std::vector<double> values;
    std::uint64_t seed = 0;
    std::uint64_t realization = 0;
    std::string spectrum_id;

    double at(int iz, int ix, int iy = 0) const {
        return values[(static_cast<std::size_t>(iz) * static_cast<std::size_t>(grid.nx[0]) + static_cast<std::size_t>(ix)) *
                          static_cast<std::size_t>(grid.nx[1]) +
                      static_cast<std::size_t>(iy)];
    }
};

/// Spectral synthesis: white noise -> FFT -> multiply by sqrt(Phi dw dk / N)
/// -> inverse FFT. Covariance convention:
///   E[V(z,x) V(z',x')] = int int e^{i w (z-z') + i k.(x-x')} Phi(w,k) dw dk
/// up to the lattice sum. The stream is derived from (seed, realization).
MediumRealization synthesize(const SpectralDensity& s, const MediumGridSpec& grid, std::uint64_t seed,
                             std::uint64_t realization = 0);

/// Exact covariance of the synthesized lattice field at a lag.
double lattice_covariance(const SpectralDensity& s, const MediumGridSpec& grid, double lag_z,
                          std::span<const double> lag_x);

/// int cos(k.lag_x) Phi_check(lag_z, k) dk by quadrature (continuum covariance).
double covariance_model(const SpectralDensity& s, double lag_z, std::span<const double> lag_x,
                        const QuadratureConfig& cfg = {});

struct CovarianceEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
};

/// Ensemble-and-space average of V(z,x) V(z+lag_z, x+lag_x) (periodic lags,
/// which must be multiples of the grid spacings). The zero mean is known,
/// so the estimator is unbiased; stderr from the spread across realizations.
CovarianceEstimate empirical_covariance(std::span<const MediumRealization> ens, double lag_z,
                                        std::span<const double> lag_x);

/// Maps solver coordinates (z, x) to V(z / eps^z_power + z_origin, x / eps^x_power).
/// Backed by a realization (cubic Lagrange in x, periodic; linear in z) or
/// by an analytic callable of medium coordinates. Cheap to copy.
class FieldSliceView {
public:
    using Analytic = std::function<double(double z_med, std::span<const double> x_med)>;

    FieldSliceView(std::shared_ptr<const MediumRealization> medium, double z_scale, double x_scale);
    FieldSliceView(std::shared_ptr<const MediumRealization> medium, const ScalingRegime& regime);
    FieldSliceView(Analytic fn, int dim, double z_scale, double x_scale);

    /// V at medium coordinates.
    double at_medium(double z_med, std::span<const double> x_med) const;
    /// V at solver coordinates.
    double operator()(double z, std::span<const double> x) const;
    /// Medium z coordinate of solver range z.
    double medium_z(double z) const { return to_med_z(z); }

    /// V on a solver transverse grid (row-major, n[0] x n[1] points starting at x0
    /// with spacing dx) at range z. Node-aligned grids skip interpolation.
    void sample_grid(double z, std::span<const int> n, std::span<const double> x0, double dx,
                     std::span<double> out) const;

    /// View of the same medium traversed backwards from range z_top.
    FieldSliceView reversed(double z_top) const;

    int dim() const { return dim_; }
    double z_scale() const { return z_scale_; }
    double x_scale() const { return x_scale_; }
    /// Largest solver range covered (infinite for analytic views).
    double z_max() const;
    const MediumRealization* medium() const { return medium_.get(); }

private:
    double to_med_z(double z) const { return z_sign_ * z / z_scale_ + z_origin_; }
    double interp_x(int iz, std::span<const double> x_med) const;
    void check_z(double z_med) const;

    std::shared_ptr<const MediumRealization> medium_;
    Analytic fn_;
    int dim_ = 1;
    double z_scale_ = 1.0;
    double x_scale_ = 1.0;
    double z_origin_ = 0.0;
    double z_sign_ = 1.0;
};

/// Regime finite difference of V at solver range z and medium-coordinate
/// point x_tilde: [V(x~ + f y/2) - V(x~ - f y/2)] / f with f = regime.moyal_shift.
double delta_v(const FieldSliceView& view, double z, std::span<const double> x_tilde, std::span<const double> y,
               const ScalingRegime& regime);

/// Flat dump: magic "PWMED001", u32 dim, nz, nx, ny, f64 dz, dx, u64 seed,
/// realization, then little-endian f64 values.
void write_medium(const std::filesystem::path& path, const MediumRealization& m);
MediumRealization read_medium(const std::filesystem::path& path);

}  // namespace parawave
