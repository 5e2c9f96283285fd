#pragma once

#include <array>
#include <complex>
#include <filesystem>
#include <span>
#include <vector>

#include "parawave/fft.hpp"
#include "parawave/medium.hpp"
#include "parawave/regime.hpp"

namespace parawave {

/// Periodic transverse lattice x_j = x0 + j dx (per axis), d = 1 or 2.
struct TransverseGrid {
    int dim = 1;
    std::array<int, 2> n{0, 1};
    double dx = 0.0;
    std::array<double, 2> x0{0.0, 0.0};

    std::size_t size() const { return static_cast<std::size_t>(n[0]) * static_cast<std::size_t>(n[1]); }
    double length() const { return n[0] * dx; }
    double x(int axis, int i) const { return x0[static_cast<std::size_t>(axis)] + i * dx; }
    /// Volume element dx^d.
    double cell() const { return dim == 2 ? dx * dx : dx; }
    bool operator==(const TransverseGrid&) const = default;
};

/// Box [-L/2, L/2)^d with n points per axis.
TransverseGrid centered_grid(int dim, int n, double length);

/// Envelope Psi on the transverse grid at range z.
struct WaveField {
    TransverseGrid grid;
    std::vector<cplx> psi;
    double z = 0.0;
    ScalingRegime regime;

    /// Discrete squared L2 norm sum |Psi|^2 dx^d.
    double norm2() const;
};

/// Smooth aperture chi_A in [0, 1]: product over axes of
/// (tanh((x - c + a)/e) - tanh((x - c - a)/e)) / 2; e = 0 gives a sharp slab.
struct Aperture {
    enum class Kind { Full, Zero, Slab };
    Kind kind = Kind::Full;
    std::array<double, 2> center{0.0, 0.0};
    double half_width = 0.0;
    double edge = 0.0;

    static Aperture full() { return {}; }
    static Aperture zero() { return {Kind::Zero, {0.0, 0.0}, 0.0, 0.0}; }
    static Aperture slab(std::array<double, 2> center, double half_width, double edge) {
        return {Kind::Slab, center, half_width, edge};
    }
    double operator()(std::span<const double> x) const;
};

/// Absorbing layer exp(-strength * dz * ramp^2) over the outer `fraction` of
/// the box on each side; off by default because it breaks unitarity.
struct SpongeConfig {
    bool enabled = false;
    double fraction = 0.1;
    double strength = 10.0;
};

/// Strang-split stepper for
///   i dPsi/dz + (c_disp/2) Lap Psi + c_pot V Psi = 0.
/// Holds FFT plans and scratch; confine one instance to one thread.
class Propagator {
public:
    /// `p_max > 0` enables the resolution check dx <= pi s_w / p_max.
    Propagator(const TransverseGrid& grid, const ScalingRegime& regime, double p_max = 0.0, SpongeConfig sponge = {});

    /// Half potential phase, full dispersion, half potential phase; V is
    /// sampled once at the step midpoint.
    void step(WaveField& w, const FieldSliceView& med, double dz);

    /// Steps to each checkpoint in turn (equal sub-steps <= dz per segment)
    /// and returns deep copies at the initial range and every checkpoint.
    std::vector<WaveField> propagate(WaveField w, const FieldSliceView& med, std::span<const double> checkpoints,
                                     double dz);

    const TransverseGrid& grid() const { return grid_; }

private:
    void apply_dispersion(std::span<cplx> psi, double dz);

    TransverseGrid grid_;
    ScalingRegime regime_;
    SpongeConfig sponge_;
    FftPlan forward_;
    FftPlan backward_;
    std::vector<double> k2_;
    std::vector<double> v_;
    std::vector<cplx> phase_;
    double cached_dz_ = -1.0;
    std::vector<double> sponge_profile_;
};

/// One step with a temporary propagator.
WaveField step(WaveField w, const FieldSliceView& med, double dz);

/// Propagate to z_final; the trajectory holds the initial field and the
/// requested checkpoints (z_final always included).
std::vector<WaveField> propagate(WaveField w, const FieldSliceView& med, double z_final, double dz,
                                 std::span<const double> checkpoints = {});

/// Psi -> chi_A conj(Psi).
WaveField conjugate_and_aperture(WaveField w, const Aperture& a);

/// Gaussian beam with |Psi|^2 ~ exp(-|x - c|^2 / (2 width^2)) and Wigner
/// momentum p0 (carrier exp(i p0.x / s_w)).
WaveField gaussian_beam(const TransverseGrid& grid, const ScalingRegime& regime, std::array<double, 2> center,
                        double width, std::array<double, 2> p0 = {0.0, 0.0}, double amplitude = 1.0);

/// Smooth flat-top segment (aperture profile) carrying a plane wave.
WaveField plane_wave_segment(const TransverseGrid& grid, const ScalingRegime& regime, std::array<double, 2> center,
                             double half_width, double edge, std::array<double, 2> p0 = {0.0, 0.0});

/// Narrow Gaussian approximating a point source (unit peak).
WaveField point_source(const TransverseGrid& grid, const ScalingRegime& regime, std::array<double, 2> center,
                       double width);

/// Fraction of ||Psi||^2 within `fraction` of the box edge on any axis.
double edge_energy_fraction(const WaveField& w, double fraction = 0.25);

/// complex128 dump (interleaved re, im; little-endian) plus `<path>.json`
/// sidecar with grid, z and regime.
void write_field(const std::filesystem::path& path, const WaveField& w);
WaveField read_field(const std::filesystem::path& path);

}  // namespace parawave
