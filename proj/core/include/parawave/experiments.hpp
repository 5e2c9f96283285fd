#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "parawave/diffusion.hpp"
#include "parawave/kinetic.hpp"
#include "parawave/psolver.hpp"
#include "parawave/regime.hpp"
#include "parawave/spectra.hpp"
#include "parawave/stats.hpp"
#include "parawave/wigner.hpp"

namespace parawave {

/// Gaussian beam Psi_0 = a exp(-|x - c|^2 / (4 width^2) + i p0.x / s_w),
/// normalized to unit mass. Its Wigner function is the product Gaussian
/// with sds (width, s_w / (2 width)).
struct InitialBeam {
    std::array<double, 2> center{0.0, 0.0};
    double width = 0.5;
    std::array<double, 2> p0{0.0, 0.0};
};

struct StudyGrid {
    double box = 16.0;          ///< transverse period
    int n = 0;                  ///< points per axis; 0 picks the smallest 2-3-5 size resolving p_max
    double p_max = 4.0;         ///< unaliased Wigner momentum required
    double dz_fraction = 0.125; ///< solver step as a fraction of eps^z_power
    double z_resolution = 0.25; ///< medium z spacing in units of 1/w0
};

struct ReferenceSettings {
    std::size_t min_particles = 20000;
    std::size_t max_particles = 4'000'000;
    double stderr_ratio = 1.0 / 3.0;   ///< target reference stderr / wave stderr
    double langevin_dz = 0.0;          ///< 0 picks z_final / 400
};

struct TimeReversalSettings {
    double half_width = 1.0;     ///< mirror aperture half-width
    double edge = 0.0;           ///< tanh edge of the aperture
    double source_width = 0.0;   ///< 0 picks 2 dx
    double free_space_eps = 0.2; ///< eps of the deterministic diffraction check
};

/// One study configuration (JSON round-trippable).
struct StudySpec {
    std::string name = "study";
    std::string kind = "convergence";  ///< "convergence" | "time-reversal"
    TheoremFamily family = TheoremFamily::T1;
    double alpha = 1.0;
    double beta = 1.0;
    double carrier_k = 1.0;
    std::vector<double> eps{0.4, 0.28, 0.2, 0.14, 0.1};
    int dim = 1;
    nlohmann::json spectrum;          ///< spectrum block as written in the config
    std::filesystem::path base_dir;   ///< resolves relative spectrum files
    bool zero_medium = false;         ///< V = 0 (deterministic control)
    InitialBeam initial;
    std::vector<TestFunction> tests;
    int realizations = 64;
    std::vector<double> z{1.0};
    std::uint64_t seed = 1;
    StudyGrid grid;
    ReferenceSettings reference;
    TimeReversalSettings mirror;
    int bootstrap_resamples = 1000;
    bool allow_out_of_range = false;
};

/// {"family": "smooth_bump" | "product_bump" | "zero", "amplitude", "w0", "k0"}
/// or {"file": "table.csv"} (relative to base_dir).
SpectralDensity spectrum_from_json(const nlohmann::json& j, int dim, const std::filesystem::path& base_dir = {});
StudySpec study_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const StudySpec& spec);

/// Ladder strictly decreasing, M >= 8, z checkpoints increasing and positive,
/// at least one test function (convergence studies).
void validate_study(const StudySpec& spec);

/// Regime for one rung, honouring the out-of-range override.
ScalingRegime study_regime(const StudySpec& spec, double eps);

/// Transverse grid for one rung whose Wigner p-grid covers |p| < p_max.
TransverseGrid study_grid(const StudySpec& spec, const ScalingRegime& regime);

/// Smallest even n >= lo of the form 2^a 3^b 5^c.
int smooth_size(int lo);

/// Exact Wigner function at z = 0 of the initial beam as a particle law.
void seed_initial_particles(ParticleEnsemble& e, const StudySpec& spec, const ScalingRegime& regime,
                            std::size_t n);

/// Free-streaming (Null kernel) observable of the Gaussian initial Wigner
/// function against a Gaussian test function, in closed form.
double free_streaming_observable(const StudySpec& spec, const ScalingRegime& regime, const TestFunction& th,
                                 double z);

struct ObservableRow {
    double eps = 0.0;
    double z = 0.0;
    int theta = 0;
    std::string theta_id;
    double mean = 0.0;
    double variance = 0.0;
    double stderr_ = 0.0;
    stats::BootstrapResult variance_boot;
    double reference = 0.0;
    double reference_stderr = 0.0;
    std::size_t reference_particles = 0;
    double norm_drift = 0.0;  ///< max over realizations
    double mass_drift = 0.0;  ///< max over realizations
    bool valid = true;
};

struct StudyResult {
    StudySpec spec;
    std::vector<ObservableRow> rows;
    std::string kernel;
    std::string tensor;
    std::size_t frozen_particles = 0;
    double frozen_fraction = 0.0;
    nlohmann::json metadata;  ///< runtimes and worker count; manifest only
};

using Progress = std::function<void(const std::string&)>;

/// eps-ladder of wave ensembles against the paired kinetic/diffusion reference.
StudyResult run_convergence_study(const StudySpec& spec, int workers = 1, const Progress& progress = {});

struct RefocusReport {
    double eps = 0.0;
    bool random_medium = true;
    std::vector<double> x;
    std::vector<double> mean_profile;  ///< ensemble mean of |Psi^B| at the source plane
    std::vector<double> peaks;         ///< per-realization max |Psi^B|
    double peak_position = 0.0;
    double fwhm = 0.0;
    double peak_mean = 0.0;
    double peak_stderr = 0.0;
    double relative_stderr = 0.0;      ///< peak_stderr / peak_mean
    stats::BootstrapResult relative_boot;
    double reversibility_error = 0.0;  ///< full-aperture deterministic check (random_medium = false)
};

struct TimeReversalResult {
    StudySpec spec;
    std::vector<RefocusReport> reports;  ///< one per eps, then the free-space run
    double diffraction_fwhm = 0.0;       ///< Fraunhofer oracle of the free-space run
    nlohmann::json metadata;
};

/// Source -> mirror -> conjugate and aperture -> back-propagate, per realization.
TimeReversalResult run_time_reversal(const StudySpec& spec, int workers = 1, const Progress& progress = {});

/// Full width at half maximum of a sampled profile (linear interpolation).
double full_width_half_max(const std::vector<double>& x, const std::vector<double>& y);

/// Finite-eps surrogates of convergence in probability along the ladder.
struct TrendCheck {
    bool pass = false;
    std::string detail;
};
/// |mean - ref| nonincreasing within 2 combined sigma and the last gap < 3 sigma.
TrendCheck gap_trend(const std::vector<ObservableRow>& ladder);
/// Variance nonincreasing within 2 bootstrap sigma and last < first.
TrendCheck variance_trend(const std::vector<ObservableRow>& ladder);
/// Groups rows by (z, theta) in eps order and applies both checks to each group.
TrendCheck study_gap_trend(const StudyResult& r);
TrendCheck study_variance_trend(const StudyResult& r);

/// results.csv and reference.csv in `dir`; no timestamps.
void write_study_csv(const StudyResult& r, const std::filesystem::path& dir);
void write_refocus_csv(const TimeReversalResult& r, const std::filesystem::path& dir);

}  // namespace parawave
