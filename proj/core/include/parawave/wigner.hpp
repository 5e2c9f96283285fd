#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "parawave/fft.hpp"
#include "parawave/medium.hpp"
#include "parawave/psolver.hpp"

namespace parawave {

/// Scaled Wigner distribution on (x-grid) x (p-grid).
///
/// Discrete convention: for each x_j the correlation
/// c_m = Psi(x_j + m dx) conj(Psi(x_j - m dx)) sits at offsets y_m = 2 m dx / s_w
/// (zero when either point leaves the box, so the periodic wrap adds no ghost
/// copy at x + L/2),
/// and W(x_j, p_n) = (2 pi)^-d dy^d sum_m e^{-i p_n y_m} c_m with
/// p_n = n s_w pi / L, n = -N/2 .. N/2 - 1. The x-marginal sum_n W dp = |Psi(x_j)|^2
/// holds exactly. Only |p| < s_w pi / (2 dx) is free of aliasing.
/// Layout: x index slowest, p index fastest, p ascending.
struct WignerField {
    TransverseGrid grid;
    double scale = 1.0;
    std::vector<double> w;

    std::size_t np() const { return grid.size(); }
    double dp() const { return scale * std::numbers::pi / grid.length(); }
    /// Momentum of ascending index m along one axis.
    double p(int m) const { return (m - grid.n[0] / 2) * dp(); }
    double p_axis(int axis, int m) const { return (m - grid.n[static_cast<std::size_t>(axis)] / 2) * dp(); }
    /// Phase-space cell dx^d dp^d.
    double cell() const;
    double at(std::size_t x_flat, std::size_t p_flat) const { return w[x_flat * np() + p_flat]; }
    /// sum W dx dp.
    double total() const;
    /// Separable cubic Lagrange interpolation at an off-grid phase-space point.
    double interpolate(std::span<const double> x, std::span<const double> p) const;
};

/// Smooth test function theta(x, p).
struct TestFunction {
    enum class Family { GaussWindow, CosineBump, Constant, Custom };
    using Fn = std::function<double(std::span<const double> x, std::span<const double> p)>;

    Family family = Family::GaussWindow;
    int dim = 1;
    std::array<double, 2> x0{0.0, 0.0};
    std::array<double, 2> p0{0.0, 0.0};
    double wx = 1.0;  ///< Gaussian sd / cosine half-width in x
    double wp = 1.0;  ///< Gaussian sd / cosine half-width in p
    double amplitude = 1.0;
    Fn fn;
    std::string name;

    /// exp(-|x-x0|^2/(2 wx^2) - |p-p0|^2/(2 wp^2)), treated as zero beyond 8 sd.
    static TestFunction gauss(int dim, std::array<double, 2> x0, std::array<double, 2> p0, double wx, double wp,
                              double amplitude = 1.0);
    /// prod cos^2(pi u / (2 w)) on |u| < w.
    static TestFunction cosine_bump(int dim, std::array<double, 2> x0, std::array<double, 2> p0, double wx,
                                    double wp, double amplitude = 1.0);
    static TestFunction constant(int dim, double value);
    /// Arbitrary callable supported in the box |x - x0| <= wx, |p - p0| <= wp (per axis).
    static TestFunction custom(int dim, Fn fn, std::array<double, 2> x0, std::array<double, 2> p0, double wx,
                               double wp, std::string name);

    double operator()(std::span<const double> x, std::span<const double> p) const;
    /// Half-width of the effective support (infinite for Constant).
    double x_radius() const;
    double p_radius() const;
    std::string id() const;
};

/// Full transform of a pure state at the regime's Wigner scale.
WignerField wigner_transform(const WaveField& w);
/// Same, at an explicit scale.
WignerField wigner_transform(const WaveField& w, double scale);

/// One row W(x_j, .) at a time, for observables on grids too large to hold
/// the full array. Not thread-safe; use one per worker.
class WignerRows {
public:
    WignerRows(const TransverseGrid& grid, double scale);
    /// Fills `out` (size N^d, ascending p) with W(x_flat, .).
    void row(std::span<const cplx> psi, std::size_t x_flat, std::span<double> out);
    double dp() const { return scale_ * std::numbers::pi / grid_.length(); }

private:
    TransverseGrid grid_;
    double scale_;
    FftPlan plan_;
    std::vector<cplx> buf_;
};

/// Throws ConfigurationError when theta's support leaves the phase-space grid.
void check_support(const TransverseGrid& grid, double scale, const TestFunction& th);

/// sum W theta dx dp.
double weak_observable(const WignerField& W, const TestFunction& th);

/// <W[Psi], theta_i> for several test functions without storing W; rows
/// outside every theta's x-support are skipped.
std::vector<double> weak_observables(const WaveField& w, std::span<const TestFunction> ths);

/// Discrete row mass audit: max_j |sum_n W(x_j, p_n) dp - |Psi(x_j)|^2| relative to max |Psi|^2,
/// over the rows visited by `weak_observables`-style streaming (all rows here).
double marginal_defect(const WaveField& w);

/// L W for the Wigner-Moyal operator at range z: inverse transform in p,
/// multiply by -i delta_v(x~, y) with x~ = x / eps^x_power, transform back.
/// The Nyquist offset is dropped so the result stays real.
std::vector<double> moyal_apply(const WignerField& W, const FieldSliceView& med, double z,
                                const ScalingRegime& regime);

/// Mixed-state Wigner at the mirror: sum_j weight_j chi_A(x_j) W[conj(psi_j)].
/// Columns are fields emitted by point sources at positions x_j (at most 64).
WignerField mirror_wigner(std::span<const WaveField> columns, std::span<const std::array<double, 2>> positions,
                          std::span<const double> weights, const Aperture& a);

/// Regularized point source centered at c: s_w^{d/2} times a unit-mass
/// Gaussian of the given sd, so that the aperture integral of its Wigner
/// transforms approaches chi_A / (2 pi)^d as the width shrinks.
WaveField point_source_column(const TransverseGrid& grid, const ScalingRegime& regime, std::array<double, 2> c,
                              double width);

/// f64 dump plus `<path>.json` sidecar (grid, scale, p-grid).
void write_wigner(const std::filesystem::path& path, const WignerField& W);

}  // namespace parawave
