#include "parawave/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>

#include "parawave/errors.hpp"
#include "parawave/io.hpp"
#include "parawave/medium.hpp"
#include "parawave/parallel.hpp"

namespace parawave {

namespace {

constexpr double kPi = std::numbers::pi;
/// sin(u)/u = 1/2.
constexpr double kSincHalf = 1.895494267033981;

using nlohmann::json;

std::array<double, 2> arr2(const json& j, const char* key, std::array<double, 2> def = {0.0, 0.0}) {
    if (!j.contains(key)) return def;
    const auto& v = j.at(key);
    if (v.is_number()) return {v.get<double>(), 0.0};
    std::array<double, 2> out{0.0, 0.0};
    for (std::size_t i = 0; i < v.size() && i < 2; ++i) out[i] = v[i].get<double>();
    return out;
}

json arr_json(const std::array<double, 2>& a, int dim) {
    json out = json::array();
    for (int i = 0; i < dim; ++i) out.push_back(a[static_cast<std::size_t>(i)]);
    return out;
}

TestFunction test_from_json(const json& j, int dim) {
    const std::string fam = j.value("family", "gauss");
    const auto x0 = arr2(j, "x0");
    const auto p0 = arr2(j, "p0");
    const double wx = j.value("wx", 1.0);
    const double wp = j.value("wp", 1.0);
    const double a = j.value("amplitude", 1.0);
    if (fam == "gauss") return TestFunction::gauss(dim, x0, p0, wx, wp, a);
    if (fam == "cosine_bump") return TestFunction::cosine_bump(dim, x0, p0, wx, wp, a);
    if (fam == "constant") return TestFunction::constant(dim, a);
    throw ConfigurationError("unknown test-function family: " + fam);
}

json test_to_json(const TestFunction& t) {
    json j;
    switch (t.family) {
        case TestFunction::Family::GaussWindow: j["family"] = "gauss"; break;
        case TestFunction::Family::CosineBump: j["family"] = "cosine_bump"; break;
        case TestFunction::Family::Constant: j["family"] = "constant"; break;
        case TestFunction::Family::Custom: throw ConfigurationError("custom test functions cannot be serialized");
    }
    if (t.family != TestFunction::Family::Constant) {
        j["x0"] = arr_json(t.x0, t.dim);
        j["p0"] = arr_json(t.p0, t.dim);
        j["wx"] = t.wx;
        j["wp"] = t.wp;
    }
    j["amplitude"] = t.amplitude;
    return j;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Unit-mass beam of the study.
WaveField initial_field(const StudySpec& spec, const TransverseGrid& grid, const ScalingRegime& regime) {
    const double w = spec.initial.width;
    const double amp = std::pow(2.0 * kPi * w * w, -spec.dim / 4.0);
    return gaussian_beam(grid, regime, spec.initial.center, w, spec.initial.p0, amp);
}

FieldSliceView zero_view(int dim, const ScalingRegime& regime) {
    return FieldSliceView([](double, std::span<const double>) { return 0.0; }, dim, std::pow(regime.eps, regime.z_power),
                          std::pow(regime.eps, regime.x_power));
}

FieldSliceView medium_view(const StudySpec& spec, const SpectralDensity& s, const ScalingRegime& regime,
                           const TransverseGrid& grid, double z_final, std::uint64_t seed, std::uint64_t realization) {
    if (spec.zero_medium || s.amplitude() == 0.0) return zero_view(spec.dim, regime);
    const auto mgrid = plan_medium_grid(regime, s, spec.dim, grid.n[0], grid.dx, z_final, spec.grid.z_resolution);
    auto med = std::make_shared<const MediumRealization>(synthesize(s, mgrid, seed, realization));
    return FieldSliceView(med, regime);
}

std::uint64_t rung_seed(const StudySpec& spec, std::size_t rung) {
    return stream_id({spec.seed, static_cast<std::uint64_t>(rung)});
}

double gauss2_density(double dx, double dp, double sxx, double sxp, double spp) {
    const double det = sxx * spp - sxp * sxp;
    const double q = (spp * dx * dx - 2.0 * sxp * dx * dp + sxx * dp * dp) / det;
    return std::exp(-0.5 * q) / (2.0 * kPi * std::sqrt(det));
}

}  // namespace

SpectralDensity spectrum_from_json(const json& j, int dim, const std::filesystem::path& base_dir) {
    if (j.is_null()) throw ConfigurationError("study has no spectrum block");
    if (j.contains("file")) {
        std::filesystem::path p = j.at("file").get<std::string>();
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        if (!std::filesystem::exists(p)) throw ConfigurationError("cannot open spectrum file: " + p.string());
        auto s = SpectralDensity::load_csv(p);
        if (s.dim() != dim) throw ConfigurationError("spectrum file dimension does not match the study: " + p.string());
        return s;
    }
    const std::string fam = j.value("family", "smooth_bump");
    const double a = j.value("amplitude", 1.0);
    const double w0 = j.value("w0", 1.0);
    const double k0 = j.value("k0", 1.0);
    if (fam == "smooth_bump") return SpectralDensity::smooth_bump(a, w0, k0, dim);
    if (fam == "product_bump") return SpectralDensity::product_bump(a, w0, k0, dim);
    if (fam == "zero") return SpectralDensity::zero(dim, w0, k0);
    throw ConfigurationError("unknown spectrum family: " + fam);
}

StudySpec study_from_json(const json& j, const std::filesystem::path& base_dir) {
    StudySpec s;
    try {
        s.name = j.value("name", s.name);
        s.kind = j.value("kind", s.kind);
        s.family = theorem_family_from_string(j.value("theorem", std::string("T1")));
        s.alpha = j.value("alpha", s.alpha);
        s.beta = j.value("beta", s.beta);
        s.carrier_k = j.value("carrier_k", s.carrier_k);
        if (j.contains("eps")) s.eps = j.at("eps").get<std::vector<double>>();
        s.dim = j.value("dim", s.dim);
        s.spectrum = j.value("spectrum", json());
        s.base_dir = base_dir;
        s.zero_medium = j.value("zero_medium", false);
        if (j.contains("initial")) {
            const auto& ic = j.at("initial");
            s.initial.center = arr2(ic, "center");
            s.initial.width = ic.value("width", s.initial.width);
            s.initial.p0 = arr2(ic, "p0");
        }
        if (j.contains("tests"))
            for (const auto& t : j.at("tests")) s.tests.push_back(test_from_json(t, s.dim));
        s.realizations = j.value("realizations", s.realizations);
        if (j.contains("z")) s.z = j.at("z").get<std::vector<double>>();
        s.seed = j.value("seed", s.seed);
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            s.grid.box = g.value("box", s.grid.box);
            s.grid.n = g.value("n", s.grid.n);
            s.grid.p_max = g.value("p_max", s.grid.p_max);
            s.grid.dz_fraction = g.value("dz_fraction", s.grid.dz_fraction);
            s.grid.z_resolution = g.value("z_resolution", s.grid.z_resolution);
        }
        if (j.contains("reference")) {
            const auto& r = j.at("reference");
            s.reference.min_particles = r.value("min_particles", s.reference.min_particles);
            s.reference.max_particles = r.value("max_particles", s.reference.max_particles);
            s.reference.stderr_ratio = r.value("stderr_ratio", s.reference.stderr_ratio);
            s.reference.langevin_dz = r.value("langevin_dz", s.reference.langevin_dz);
        }
        if (j.contains("mirror")) {
            const auto& m = j.at("mirror");
            s.mirror.half_width = m.value("half_width", s.mirror.half_width);
            s.mirror.edge = m.value("edge", s.mirror.edge);
            s.mirror.source_width = m.value("source_width", s.mirror.source_width);
            s.mirror.free_space_eps = m.value("free_space_eps", s.mirror.free_space_eps);
        }
        s.bootstrap_resamples = j.value("bootstrap_resamples", s.bootstrap_resamples);
        s.allow_out_of_range = j.value("allow_out_of_range", s.allow_out_of_range);
    } catch (const json::exception& e) {
        throw ConfigurationError(std::string("malformed study config: ") + e.what());
    }
    return s;
}

json to_json(const StudySpec& s) {
    json j;
    j["name"] = s.name;
    j["kind"] = s.kind;
    j["theorem"] = to_string(s.family);
    j["alpha"] = s.alpha;
    j["beta"] = s.beta;
    j["carrier_k"] = s.carrier_k;
    j["eps"] = s.eps;
    j["dim"] = s.dim;
    json spec = s.spectrum;
    if (spec.is_object() && spec.contains("file") && !s.base_dir.empty()) {
        std::filesystem::path p = spec["file"].get<std::string>();
        if (p.is_relative()) spec["file"] = std::filesystem::absolute(s.base_dir / p).lexically_normal().string();
    }
    j["spectrum"] = spec;
    j["zero_medium"] = s.zero_medium;
    j["initial"] = {{"center", arr_json(s.initial.center, s.dim)},
                    {"width", s.initial.width},
                    {"p0", arr_json(s.initial.p0, s.dim)}};
    j["tests"] = json::array();
    for (const auto& t : s.tests) j["tests"].push_back(test_to_json(t));
    j["realizations"] = s.realizations;
    j["z"] = s.z;
    j["seed"] = s.seed;
    j["grid"] = {{"box", s.grid.box},
                 {"n", s.grid.n},
                 {"p_max", s.grid.p_max},
                 {"dz_fraction", s.grid.dz_fraction},
                 {"z_resolution", s.grid.z_resolution}};
    j["reference"] = {{"min_particles", s.reference.min_particles},
                      {"max_particles", s.reference.max_particles},
                      {"stderr_ratio", s.reference.stderr_ratio},
                      {"langevin_dz", s.reference.langevin_dz}};
    j["mirror"] = {{"half_width", s.mirror.half_width},
                   {"edge", s.mirror.edge},
                   {"source_width", s.mirror.source_width},
                   {"free_space_eps", s.mirror.free_space_eps}};
    j["bootstrap_resamples"] = s.bootstrap_resamples;
    j["allow_out_of_range"] = s.allow_out_of_range;
    return j;
}

void validate_study(const StudySpec& s) {
    if (s.dim < 1 || s.dim > 2) throw ValidationError("wave studies support d = 1 or 2");
    if (s.eps.empty()) throw ValidationError("eps ladder is empty");
    for (std::size_t i = 0; i < s.eps.size(); ++i) {
        if (!(s.eps[i] > 0.0 && s.eps[i] < 1.0)) throw ValidationError("eps values must lie in (0, 1)");
        if (i > 0 && !(s.eps[i] < s.eps[i - 1])) throw ValidationError("eps ladder must be strictly decreasing");
    }
    if (s.realizations < 8) throw ValidationError("ensemble size M must be at least 8");
    if (s.z.empty()) throw ValidationError("no z checkpoints");
    for (std::size_t i = 0; i < s.z.size(); ++i)
        if (!(s.z[i] > 0.0) || (i > 0 && !(s.z[i] > s.z[i - 1])))
            throw ValidationError("z checkpoints must be positive and increasing");
    if (s.kind == "convergence" && s.tests.empty()) throw ValidationError("convergence study needs test functions");
    if (s.kind != "convergence" && s.kind != "time-reversal") throw ValidationError("unknown study kind: " + s.kind);
    if (!(s.initial.width > 0.0)) throw ValidationError("initial beam width must be positive");
    if (s.bootstrap_resamples < 10) throw ValidationError("too few bootstrap resamples");
}

ScalingRegime study_regime(const StudySpec& spec, double eps) {
    RegimeOptions opts;
    opts.allow_out_of_range = spec.allow_out_of_range;
    return regime_table(spec.family, eps, spec.alpha, spec.beta, spec.carrier_k, opts);
}

int smooth_size(int lo) {
    for (int n = std::max(lo, 2);; ++n) {
        if (n % 2 != 0) continue;
        int m = n;
        for (int f : {2, 3, 5})
            while (m % f == 0) m /= f;
        if (m == 1) return n;
    }
}

TransverseGrid study_grid(const StudySpec& spec, const ScalingRegime& regime) {
    const double box = spec.grid.box;
    if (spec.grid.n > 0) return centered_grid(spec.dim, spec.grid.n, box);
    // The Wigner p-grid spans |p| < pi s_w / (2 dx).
    double dx = kPi * regime.s_w / (2.0 * spec.grid.p_max);
    if (!spec.zero_medium) {
        const auto s = spectrum_from_json(spec.spectrum, spec.dim, spec.base_dir);
        // Medium lattice bound dx_med <= pi / (2 k0) with dx_med = dx / eps^x_power.
        dx = std::min(dx, 0.999 * kPi / (2.0 * s.support_k()) * std::pow(regime.eps, regime.x_power));
    }
    return centered_grid(spec.dim, smooth_size(static_cast<int>(std::ceil(box / dx))), box);
}

void seed_initial_particles(ParticleEnsemble& e, const StudySpec& spec, const ScalingRegime& regime,
                            std::size_t n) {
    const double sx = spec.initial.width;
    const double sp = regime.s_w / (2.0 * sx);
    const auto d = static_cast<std::size_t>(spec.dim);
    add_gaussian(e, n, std::span<const double>(spec.initial.center.data(), d),
                 std::span<const double>(spec.initial.p0.data(), d), sx, sp, 1.0);
}

double free_streaming_observable(const StudySpec& spec, const ScalingRegime& regime, const TestFunction& th,
                                 double z) {
    if (th.family == TestFunction::Family::Constant) return th.amplitude;
    if (th.family != TestFunction::Family::GaussWindow)
        throw ArgumentError("closed-form free streaming needs a Gaussian test function");
    const double sx = spec.initial.width;
    const double sp = regime.s_w / (2.0 * sx);
    const double k = regime.carrier_k;
    double out = th.amplitude;
    for (int a = 0; a < spec.dim; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        const double mx = spec.initial.center[ua] + spec.initial.p0[ua] * z / k;
        const double mp = spec.initial.p0[ua];
        const double sxx = sx * sx + sp * sp * z * z / (k * k) + th.wx * th.wx;
        const double sxp = sp * sp * z / k;
        const double spp = sp * sp + th.wp * th.wp;
        out *= 2.0 * kPi * th.wx * th.wp * gauss2_density(mx - th.x0[ua], mp - th.p0[ua], sxx, sxp, spp);
    }
    return out;
}

namespace {

struct Reference {
    std::vector<std::vector<ObservableEstimate>> est;  // [z][theta]
    std::size_t particles = 0;
    std::size_t frozen = 0;
};

Reference run_reference(const StudySpec& spec, const SpectralDensity& s, const ScalingRegime& regime,
                        std::size_t rung, std::size_t n, int workers) {
    Reference ref;
    ref.particles = n;
    const auto& pair = regime.pairing;
    const std::uint64_t seed = stream_id({spec.seed, static_cast<std::uint64_t>(StreamPurpose::Initial), rung});
    ParticleEnsemble e;
    if (pair.kinetic) {
        EnsembleOptions opts;
        opts.allow_low_dim_elastic = spec.allow_out_of_range;
        e = make_ensemble(spec.dim, pair.kernel, regime.carrier_k, seed, opts);
    } else {
        e = make_ensemble(spec.dim, KernelKind::Null, regime.carrier_k, seed);
    }
    seed_initial_particles(e, spec, regime, n);
    LangevinConfig lc;
    lc.tensor = pair.tensor;
    lc.carrier_k = regime.carrier_k;
    lc.dz = spec.reference.langevin_dz > 0.0 ? spec.reference.langevin_dz : spec.z.back() / 400.0;
    lc.allow_low_dim = spec.allow_out_of_range;
    std::unique_ptr<TensorField> field;
    if (!pair.kinetic) {
        double pmax = 0.0;
        for (const auto& q : e.particles)
            for (int a = 0; a < spec.dim; ++a) pmax = std::max(pmax, std::abs(q.p[static_cast<std::size_t>(a)]));
        field = std::make_unique<TensorField>(s, lc, 1.5 * pmax * std::sqrt(spec.dim) + 8.0 * s.support_k());
    }
    for (double z : spec.z) {
        e = pair.kinetic ? evolve(std::move(e), s, z, workers) : evolve_diffusive(std::move(e), *field, lc, z, workers);
        std::vector<ObservableEstimate> row;
        for (const auto& th : spec.tests) row.push_back(estimate_observable(e, th));
        ref.est.push_back(std::move(row));
    }
    ref.frozen = e.frozen_count();
    return ref;
}

bool closed_form_reference(const StudySpec& spec, const SpectralDensity& s, const ScalingRegime& regime) {
    const auto& pair = regime.pairing;
    // V = 0 scatters nothing whatever the pairing says.
    const bool free = spec.zero_medium || s.amplitude() == 0.0 || (pair.kinetic && pair.kernel == KernelKind::Null) ||
                      (!pair.kinetic && pair.tensor == TensorKind::Null);
    if (!free) return false;
    return std::all_of(spec.tests.begin(), spec.tests.end(), [](const TestFunction& t) {
        return t.family == TestFunction::Family::GaussWindow || t.family == TestFunction::Family::Constant;
    });
}

}  // namespace

StudyResult run_convergence_study(const StudySpec& spec, int workers, const Progress& progress) {
    validate_study(spec);
    if (spec.kind != "convergence") throw ValidationError("not a convergence study: " + spec.kind);
    const auto t_start = std::chrono::steady_clock::now();
    const SpectralDensity s = spectrum_from_json(spec.spectrum, spec.dim, spec.base_dir);
    StudyResult out;
    out.spec = spec;
    out.metadata["workers"] = workers;
    out.metadata["rungs"] = json::array();
    const std::size_t nt = spec.tests.size();
    const std::size_t nz = spec.z.size();
    const auto M = static_cast<std::size_t>(spec.realizations);
    std::size_t total_particles = 0;

    for (std::size_t rung = 0; rung < spec.eps.size(); ++rung) {
        const auto t_rung = std::chrono::steady_clock::now();
        const double eps = spec.eps[rung];
        const ScalingRegime regime = study_regime(spec, eps);
        out.kernel = regime.pairing.kinetic ? to_string(regime.pairing.kernel) : "";
        out.tensor = regime.pairing.kinetic ? "" : to_string(regime.pairing.tensor);
        const TransverseGrid grid = study_grid(spec, regime);
        const double dz = spec.grid.dz_fraction * std::pow(eps, regime.z_power);
        for (const auto& th : spec.tests) check_support(grid, regime.s_w, th);
        if (progress) {
            std::ostringstream msg;
            msg << "eps=" << eps << " " << regime.label() << " N=" << grid.n[0] << " dz=" << dz;
            progress(msg.str());
        }

        // obs[r][z][theta]; drift[r][z] = {norm, mass}.
        std::vector<double> obs(M * nz * nt, 0.0);
        std::vector<double> norm_drift(M * nz, 0.0);
        std::vector<double> mass_drift(M * nz, 0.0);
        std::vector<TestFunction> ths = spec.tests;
        ths.push_back(TestFunction::constant(spec.dim, 1.0));
        const std::uint64_t mseed = rung_seed(spec, rung);
        parallel_for(M, workers, [&](std::size_t b, std::size_t e) {
            for (std::size_t r = b; r < e; ++r) {
                const FieldSliceView view = medium_view(spec, s, regime, grid, spec.z.back(), mseed, r);
                Propagator prop(grid, regime, spec.grid.p_max);
                const WaveField psi0 = initial_field(spec, grid, regime);
                const double n0 = psi0.norm2();
                const auto traj = prop.propagate(psi0, view, spec.z, dz);
                for (std::size_t zi = 0; zi < nz; ++zi) {
                    const auto& w = traj[zi + 1];
                    const auto vals = weak_observables(w, ths);
                    for (std::size_t t = 0; t < nt; ++t) obs[(r * nz + zi) * nt + t] = vals[t];
                    const double n2 = w.norm2();
                    norm_drift[r * nz + zi] = std::abs(n2 - n0) / n0;
                    mass_drift[r * nz + zi] = std::abs(vals[nt] - n2) / n2;
                }
            }
        });

        // Wave statistics.
        std::vector<ObservableRow> rows;
        for (std::size_t zi = 0; zi < nz; ++zi)
            for (std::size_t t = 0; t < nt; ++t) {
                std::vector<double> x(M);
                for (std::size_t r = 0; r < M; ++r) x[r] = obs[(r * nz + zi) * nt + t];
                ObservableRow row;
                row.eps = eps;
                row.z = spec.z[zi];
                row.theta = static_cast<int>(t);
                row.theta_id = spec.tests[t].id();
                row.mean = stats::mean(x);
                row.variance = stats::variance(x);
                row.stderr_ = stats::standard_error(x);
                row.variance_boot = stats::bootstrap(
                    x, [](std::span<const double> v) { return stats::variance(v); }, spec.bootstrap_resamples, spec.seed,
                    stream_id({static_cast<std::uint64_t>(StreamPurpose::Bootstrap), rung, zi, t}));
                for (std::size_t r = 0; r < M; ++r) {
                    row.norm_drift = std::max(row.norm_drift, norm_drift[r * nz + zi]);
                    row.mass_drift = std::max(row.mass_drift, mass_drift[r * nz + zi]);
                }
                row.valid = row.norm_drift <= 1e-9 && row.mass_drift <= 1e-8;
                rows.push_back(row);
            }

        // Reference: closed form for free streaming, else Monte Carlo sized
        // so its stderr is at most stderr_ratio of the wave stderr.
        std::size_t used = 0;
        if (closed_form_reference(spec, s, regime)) {
            for (auto& row : rows) {
                row.reference = free_streaming_observable(spec, regime, spec.tests[static_cast<std::size_t>(row.theta)], row.z);
                row.reference_stderr = 1e-15 * std::max(1.0, std::abs(row.reference));
            }
        } else {
            std::size_t n = spec.reference.min_particles;
            Reference ref = run_reference(spec, s, regime, rung, n, workers);
            double need = 1.0;
            for (std::size_t zi = 0; zi < nz; ++zi)
                for (std::size_t t = 0; t < nt; ++t) {
                    const double target = spec.reference.stderr_ratio * rows[zi * nt + t].stderr_;
                    const double have = ref.est[zi][t].stderr_;
                    if (target > 0.0 && have > target) need = std::max(need, (have / target) * (have / target));
                }
            if (need > 1.0) {
                const double want = std::ceil(need * 1.05 * static_cast<double>(n));
                n = want >= static_cast<double>(spec.reference.max_particles) ? spec.reference.max_particles
                                                                             : static_cast<std::size_t>(want);
                ref = run_reference(spec, s, regime, rung, n, workers);
            }
            for (std::size_t zi = 0; zi < nz; ++zi)
                for (std::size_t t = 0; t < nt; ++t) {
                    auto& row = rows[zi * nt + t];
                    row.reference = ref.est[zi][t].mean;
                    row.reference_stderr = ref.est[zi][t].stderr_;
                }
            out.frozen_particles += ref.frozen;
            used = n;
        }
        total_particles += used;
        for (auto& row : rows) {
            row.reference_particles = used;
            out.rows.push_back(row);
        }
        out.metadata["rungs"].push_back(
            {{"eps", eps}, {"n", grid.n[0]}, {"dz", dz}, {"reference_particles", used}, {"seconds", seconds_since(t_rung)}});
        if (progress) {
            std::ostringstream msg;
            msg << "  done eps=" << eps << " in " << seconds_since(t_rung) << " s, reference particles " << used;
            progress(msg.str());
        }
    }
    out.frozen_fraction =
        total_particles > 0 ? static_cast<double>(out.frozen_particles) / static_cast<double>(total_particles) : 0.0;
    out.metadata["seconds"] = seconds_since(t_start);
    return out;
}

double full_width_half_max(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3) throw ArgumentError("FWHM needs matching profiles of length >= 3");
    const auto it = std::max_element(y.begin(), y.end());
    const auto im = static_cast<std::size_t>(it - y.begin());
    const double half = *it / 2.0;
    std::size_t l = im;
    while (l > 0 && y[l - 1] > half) --l;
    std::size_t r = im;
    while (r + 1 < y.size() && y[r + 1] > half) ++r;
    if (l == 0 || r + 1 == y.size()) throw ConfigurationError("profile does not fall to half maximum inside the box");
    const double xl = x[l - 1] + (half - y[l - 1]) / (y[l] - y[l - 1]) * (x[l] - x[l - 1]);
    const double xr = x[r] + (half - y[r]) / (y[r + 1] - y[r]) * (x[r + 1] - x[r]);
    return xr - xl;
}

namespace {

struct Refocus {
    std::vector<double> profile;  // |Psi^B| along axis 0 (through the source for d = 2)
    double peak = 0.0;
    double reversibility = 0.0;
};

Refocus refocus_once(const StudySpec& spec, const ScalingRegime& regime, const TransverseGrid& grid,
                     const FieldSliceView& view, const Aperture& ap, double source_width) {
    const double Z = spec.z.back();
    const double dz = spec.grid.dz_fraction * std::pow(regime.eps, regime.z_power);
    Propagator prop(grid, regime);
    WaveField src = gaussian_beam(grid, regime, spec.initial.center, source_width);
    const auto fwd = prop.propagate(src, view, std::span<const double>(&Z, 1), dz);
    WaveField back = conjugate_and_aperture(fwd.back(), ap);
    back.z = 0.0;
    const FieldSliceView rev = view.reversed(Z);
    const auto bwd = prop.propagate(back, rev, std::span<const double>(&Z, 1), dz);
    const auto& psi = bwd.back().psi;
    Refocus out;
    const auto n0 = static_cast<std::size_t>(grid.n[0]);
    const auto n1 = static_cast<std::size_t>(grid.n[1]);
    out.profile.resize(n0);
    const std::size_t jc = n1 / 2;  // y = 0 row for d = 2
    for (std::size_t i = 0; i < n0; ++i) out.profile[i] = std::abs(psi[i * n1 + (grid.dim == 2 ? jc : 0)]);
    out.peak = *std::max_element(out.profile.begin(), out.profile.end());
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
        const double d = std::abs(psi[i]) - std::abs(src.psi[i]);
        num += d * d;
        den += std::norm(src.psi[i]);
    }
    out.reversibility = std::sqrt(num / den);
    return out;
}

RefocusReport summarize(double eps, bool random, const TransverseGrid& grid, std::vector<Refocus>& runs,
                        const StudySpec& spec, std::uint64_t stream) {
    RefocusReport rep;
    rep.eps = eps;
    rep.random_medium = random;
    const auto n0 = static_cast<std::size_t>(grid.n[0]);
    rep.x.resize(n0);
    for (std::size_t i = 0; i < n0; ++i) rep.x[i] = grid.x(0, static_cast<int>(i));
    rep.mean_profile.assign(n0, 0.0);
    for (const auto& r : runs) {
        for (std::size_t i = 0; i < n0; ++i) rep.mean_profile[i] += r.profile[i] / static_cast<double>(runs.size());
        rep.peaks.push_back(r.peak);
        if (!random) rep.reversibility_error = std::max(rep.reversibility_error, r.reversibility);
    }
    const auto im = static_cast<std::size_t>(std::max_element(rep.mean_profile.begin(), rep.mean_profile.end()) -
                                             rep.mean_profile.begin());
    rep.peak_position = rep.x[im];
    rep.fwhm = full_width_half_max(rep.x, rep.mean_profile);
    rep.peak_mean = stats::mean(rep.peaks);
    rep.peak_stderr = stats::standard_error(rep.peaks);
    rep.relative_stderr = rep.peak_mean > 0.0 ? rep.peak_stderr / rep.peak_mean : 0.0;
    if (rep.peaks.size() >= 2) {
        rep.relative_boot = stats::bootstrap(
            rep.peaks,
            [](std::span<const double> v) {
                const double m = stats::mean(v);
                return m > 0.0 ? stats::standard_error(v) / m : 0.0;
            },
            spec.bootstrap_resamples, spec.seed, stream);
    }
    return rep;
}

}  // namespace

TimeReversalResult run_time_reversal(const StudySpec& spec, int workers, const Progress& progress) {
    validate_study(spec);
    if (spec.kind != "time-reversal") throw ValidationError("not a time-reversal study: " + spec.kind);
    if (spec.family != TheoremFamily::T1) throw ValidationError("time-reversal studies run in the T1 regime");
    const auto t_start = std::chrono::steady_clock::now();
    const SpectralDensity s = spectrum_from_json(spec.spectrum, spec.dim, spec.base_dir);
    TimeReversalResult out;
    out.spec = spec;
    out.metadata["workers"] = workers;
    const Aperture ap = Aperture::slab(spec.initial.center, spec.mirror.half_width, spec.mirror.edge);
    const auto M = static_cast<std::size_t>(spec.realizations);
    const double Z = spec.z.back();

    for (std::size_t rung = 0; rung < spec.eps.size(); ++rung) {
        const double eps = spec.eps[rung];
        const ScalingRegime regime = study_regime(spec, eps);
        const TransverseGrid grid = study_grid(spec, regime);
        const double ws = spec.mirror.source_width > 0.0 ? spec.mirror.source_width : 2.0 * grid.dx;
        if (progress) {
            std::ostringstream msg;
            msg << "time reversal eps=" << eps << " N=" << grid.n[0];
            progress(msg.str());
        }
        std::vector<Refocus> runs(M);
        const std::uint64_t mseed = rung_seed(spec, rung);
        parallel_for(M, workers, [&](std::size_t b, std::size_t e) {
            for (std::size_t r = b; r < e; ++r) {
                const FieldSliceView view = medium_view(spec, s, regime, grid, Z, mseed, r);
                runs[r] = refocus_once(spec, regime, grid, view, ap, ws);
            }
        });
        out.reports.push_back(summarize(eps, !spec.zero_medium, grid, runs, spec,
                                        stream_id({static_cast<std::uint64_t>(StreamPurpose::Bootstrap), rung})));
    }

    // Deterministic controls: free space with the finite aperture, and the
    // full-aperture reversibility check.
    {
        const double eps = spec.mirror.free_space_eps;
        const ScalingRegime regime = study_regime(spec, eps);
        const TransverseGrid grid = study_grid(spec, regime);
        const double ws = spec.mirror.source_width > 0.0 ? spec.mirror.source_width : 2.0 * grid.dx;
        const FieldSliceView view = zero_view(spec.dim, regime);
        std::vector<Refocus> runs{refocus_once(spec, regime, grid, view, ap, ws)};
        auto rep = summarize(eps, false, grid, runs, spec, 0);
        rep.reversibility_error = refocus_once(spec, regime, grid, view, Aperture::full(), ws).reversibility;
        out.reports.push_back(rep);
        out.diffraction_fwhm = 2.0 * kSincHalf * regime.c_disp * Z / spec.mirror.half_width;
    }
    out.metadata["seconds"] = seconds_since(t_start);
    return out;
}

TrendCheck gap_trend(const std::vector<ObservableRow>& ladder) {
    TrendCheck tc;
    tc.pass = !ladder.empty();
    std::ostringstream msg;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        const auto& r = ladder[i];
        const double gap = std::abs(r.mean - r.reference);
        const double sig = std::hypot(r.stderr_, r.reference_stderr);
        msg << "eps=" << r.eps << " gap=" << gap << " sigma=" << sig << "; ";
        if (i > 0) {
            const auto& q = ladder[i - 1];
            const double gprev = std::abs(q.mean - q.reference);
            const double sprev = std::hypot(q.stderr_, q.reference_stderr);
            if (gap > gprev + 2.0 * std::hypot(sig, sprev)) tc.pass = false;
        }
        if (!r.valid) tc.pass = false;
    }
    if (!ladder.empty()) {
        const auto& last = ladder.back();
        if (!(std::abs(last.mean - last.reference) < 3.0 * std::hypot(last.stderr_, last.reference_stderr)))
            tc.pass = false;
    }
    tc.detail = msg.str();
    return tc;
}

TrendCheck variance_trend(const std::vector<ObservableRow>& ladder) {
    TrendCheck tc;
    tc.pass = ladder.size() >= 2;
    std::ostringstream msg;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        const auto& r = ladder[i];
        msg << "eps=" << r.eps << " var=" << r.variance << " sd=" << r.variance_boot.sd << "; ";
        if (i > 0) {
            const auto& q = ladder[i - 1];
            if (r.variance > q.variance + 2.0 * std::hypot(r.variance_boot.sd, q.variance_boot.sd)) tc.pass = false;
        }
    }
    if (ladder.size() >= 2 && !(ladder.back().variance < ladder.front().variance)) tc.pass = false;
    tc.detail = msg.str();
    return tc;
}

namespace {

std::map<std::pair<double, int>, std::vector<ObservableRow>> group_rows(const StudyResult& r) {
    std::map<std::pair<double, int>, std::vector<ObservableRow>> g;
    for (const auto& row : r.rows) g[{row.z, row.theta}].push_back(row);
    for (auto& [key, v] : g)
        std::stable_sort(v.begin(), v.end(), [](const ObservableRow& a, const ObservableRow& b) { return a.eps > b.eps; });
    return g;
}

TrendCheck combine(const StudyResult& r, TrendCheck (*check)(const std::vector<ObservableRow>&)) {
    TrendCheck all;
    all.pass = !r.rows.empty();
    std::ostringstream msg;
    for (const auto& [key, ladder] : group_rows(r)) {
        const auto tc = check(ladder);
        all.pass = all.pass && tc.pass;
        msg << "[z=" << key.first << " theta=" << key.second << (tc.pass ? " ok" : " FAIL") << "] " << tc.detail << "\n";
    }
    all.detail = msg.str();
    return all;
}

}  // namespace

TrendCheck study_gap_trend(const StudyResult& r) { return combine(r, &gap_trend); }
TrendCheck study_variance_trend(const StudyResult& r) { return combine(r, &variance_trend); }

void write_study_csv(const StudyResult& r, const std::filesystem::path& dir) {
    io::ensure_dir(dir);
    io::CsvWriter w(dir / "results.csv",
                    {"eps", "z", "theta", "theta_id", "mean", "variance", "stderr", "variance_boot_sd",
                     "variance_ci_lo", "variance_ci_hi", "reference", "reference_stderr", "reference_particles",
                     "kernel", "tensor", "seed", "norm_drift", "mass_drift", "valid"});
    for (const auto& row : r.rows)
        w.row({io::fmt(row.eps), io::fmt(row.z), std::to_string(row.theta), row.theta_id, io::fmt(row.mean),
               io::fmt(row.variance), io::fmt(row.stderr_), io::fmt(row.variance_boot.sd),
               io::fmt(row.variance_boot.ci_lo), io::fmt(row.variance_boot.ci_hi), io::fmt(row.reference),
               io::fmt(row.reference_stderr), std::to_string(row.reference_particles), r.kernel, r.tensor,
               std::to_string(r.spec.seed), io::fmt(row.norm_drift), io::fmt(row.mass_drift), row.valid ? "1" : "0"});
    // Reference observable stream: (z, mean, stderr, kernel, seed[, tensor]) plus the rung and test index.
    std::vector<std::string> header{"z", "mean", "stderr", "kernel", "seed"};
    if (!r.tensor.empty()) header.emplace_back("tensor");
    header.emplace_back("eps");
    header.emplace_back("theta");
    io::CsvWriter ref(dir / "reference.csv", header);
    for (const auto& row : r.rows) {
        std::vector<std::string> cells{io::fmt(row.z), io::fmt(row.reference), io::fmt(row.reference_stderr),
                                       r.kernel.empty() ? "none" : r.kernel, std::to_string(r.spec.seed)};
        if (!r.tensor.empty()) cells.push_back(r.tensor);
        cells.push_back(io::fmt(row.eps));
        cells.push_back(std::to_string(row.theta));
        ref.row(cells);
    }
}

void write_refocus_csv(const TimeReversalResult& r, const std::filesystem::path& dir) {
    io::ensure_dir(dir);
    io::CsvWriter sum(dir / "refocus_summary.csv",
                      {"eps", "random_medium", "realizations", "peak_position", "fwhm", "peak_mean", "peak_stderr",
                       "relative_stderr", "relative_boot_sd", "reversibility_error", "diffraction_fwhm"});
    for (const auto& rep : r.reports)
        sum.row({io::fmt(rep.eps), rep.random_medium ? "1" : "0", std::to_string(rep.peaks.size()),
                 io::fmt(rep.peak_position), io::fmt(rep.fwhm), io::fmt(rep.peak_mean), io::fmt(rep.peak_stderr),
                 io::fmt(rep.relative_stderr), io::fmt(rep.relative_boot.sd), io::fmt(rep.reversibility_error),
                 rep.random_medium ? "" : io::fmt(r.diffraction_fwhm)});
}

}  // namespace parawave
