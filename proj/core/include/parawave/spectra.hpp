#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "parawave/quadrature.hpp"

namespace parawave {

/// Maximum transverse dimension handled by the spectral/kinetic layers.
inline constexpr int kMaxDim = 3;

enum class SpectrumFamily { SmoothBump, ProductBump, Tabulated, Custom };

/// Scattering operator of the limiting transport equation.
enum class KernelKind {
    Rad2,       ///< sigma(p, q) = Phi(0, q - p)
    Rad,        ///< sigma(p, q) = Phi((|q|^2 - |p|^2) / 2k, q - p)
    T3i,        ///< same density as Rad2, anisotropic regime with alpha < beta
    Elastic26,  ///< energy-shell kernel, |q| = |p|
    T3iii,      ///< same density as Rad, anisotropic regime with alpha = beta
    Null,       ///< no scattering
};

/// Diffusion tensor of the limiting advection-diffusion equation.
enum class TensorKind {
    D20,       ///< pi int Phi(0,q) q (x) q dq
    D20Prime,  ///< same formula, anisotropic regime with beta > alpha
    D21,       ///< pi k/|p| int Phi0(p_perp) p_perp (x) p_perp over the plane normal to p
    D22,       ///< pi int Phi(p.q/k, q) q (x) q dq
    Null,      ///< D = 0
};

std::string to_string(SpectrumFamily family);
std::string to_string(KernelKind kind);
std::string to_string(TensorKind kind);
KernelKind kernel_from_string(const std::string& name);
TensorKind tensor_from_string(const std::string& name);

/// d x d matrix (d <= 3) stored row-major in a fixed 3x3 buffer.
struct Mat3 {
    int dim = 0;
    std::array<double, 9> m{};

    double operator()(int i, int j) const { return m[static_cast<std::size_t>(i * 3 + j)]; }
    double& operator()(int i, int j) { return m[static_cast<std::size_t>(i * 3 + j)]; }
    double trace() const;
    double max_abs() const;
};

/// The smooth compactly supported bump exp(1 - 1/(1 - t^2)) on |t| < 1.
double bump_profile(double t);

/// Regular (possibly non-uniform) tensor grid of Phi samples in
/// (w, k_1, ..., k_d); values are row-major with w slowest.
struct SpectrumTable {
    int dim = 1;
    std::vector<double> w_nodes;
    std::array<std::vector<double>, kMaxDim> k_nodes;
    std::vector<double> values;
};

/// Space-time power spectrum Phi(w, k) of the random medium.
///
/// Every evaluation canonicalizes (w, k) to (|w|, +-k) so that
/// Phi(w,q) = Phi(-w,q) = Phi(w,-q) = Phi(-w,-q) holds bit-exactly for any
/// family, including user tables. Support: |w| < w0 and |k| < k0 (Euclidean
/// for SmoothBump, max-norm for ProductBump and tables).
///
/// Value type; copies share the immutable model.
class SpectralDensity {
public:
    using Fn = std::function<double(double w, std::span<const double> k)>;

    /// A b(w/w0) b(|k|/k0).
    static SpectralDensity smooth_bump(double amplitude, double w0, double k0, int dim);
    /// A b(w/w0) prod_i b(k_i/k0).
    static SpectralDensity product_bump(double amplitude, double w0, double k0, int dim);
    static SpectralDensity zero(int dim, double w0 = 1.0, double k0 = 1.0);
    /// Arbitrary model (evaluated on canonical arguments, truncated to the
    /// support box). `envelope` bounds Phi from above; 0 requests a grid scan.
    static SpectralDensity custom(Fn fn, double w0, double k0, int dim, std::string id, double envelope = 0.0);
    /// Multilinear interpolation of a table; zero outside the table.
    static SpectralDensity tabulated(SpectrumTable table);
    /// CSV with mandatory header and columns w, k_1..k_d, phi.
    static SpectralDensity load_csv(const std::filesystem::path& path);

    SpectrumFamily family() const;
    double amplitude() const;
    double support_w() const;
    /// Half-width of the (max-norm) support box in k.
    double support_k() const;
    int dim() const;
    std::string id() const;

    double operator()(double w, std::span<const double> k) const;

    /// Phi0(k) = int Phi(w,k) dw via the fastest exact route for the family
    /// (separable closed form / exact table sums / adaptive quadrature).
    double partial(std::span<const double> k) const;
    /// Upper bounds of Phi and Phi0 over their supports.
    double max_value() const;
    double max_partial() const;
    /// True when Phi(w, k) = A g(w) h(k); the kernel samplers exploit it.
    bool separable() const;

    /// Shared model; implementation detail exposed for the .cpp only.
    struct Model;

private:
    explicit SpectralDensity(std::shared_ptr<const Model> model);
    std::shared_ptr<const Model> model_;
};

/// Phi(w, k); throws ArgumentError when k.size() != dim.
double eval_phi(const SpectralDensity& s, double w, std::span<const double> k);

/// int Phi(w,k) dw by adaptive quadrature over [-w0, w0].
double partial_spectrum(const SpectralDensity& s, std::span<const double> k, const QuadratureConfig& cfg = {});

/// Phi_check(t, k) = int e^{itw} Phi(w,k) dw (real and even in t).
double covariance_transform(const SpectralDensity& s, double t, std::span<const double> k,
                            const QuadratureConfig& cfg = {});

/// Volume kernel density sigma(p, q) of Rad2/T3i/Rad/T3iii (zero for Null).
/// Elastic26 has no volume density; see elastic_shell_density.
double kernel_density(const SpectralDensity& s, KernelKind kind, std::span<const double> p,
                      std::span<const double> q, double carrier_k);

/// Surface density on |q| = |p| of the elastic kernel, (k/|p|) Phi0(q - p).
double elastic_shell_density(const SpectralDensity& s, std::span<const double> p, std::span<const double> q,
                             double carrier_k);

/// Sigma(p) = 2 pi int sigma(p, q) dq (surface integral for Elastic26).
double total_cross_section(const SpectralDensity& s, std::span<const double> p, KernelKind kind, double carrier_k,
                           const QuadratureConfig& cfg = {});

/// Diffusion tensor D (or D(p)) evaluated by quadrature.
Mat3 diffusion_tensor(const SpectralDensity& s, TensorKind kind, std::span<const double> p, double carrier_k,
                      const QuadratureConfig& cfg = {});

/// Integrable-decay proxy for the medium's longitudinal correlation:
/// sum over t in [0, t_max] (step dt) of max over a k-grid of |Phi_check(t,k)|.
struct DecayProxy {
    double total = 0.0;
    double tail_fraction = 0.0;  ///< share of `total` from t > tail_start
};
DecayProxy correlation_decay_proxy(const SpectralDensity& s, double t_max, double dt, double tail_start,
                                   int k_samples = 9);

}  // namespace parawave
