#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "cli.hpp"
#include "parawave/diffusion.hpp"
#include "parawave/errors.hpp"
#include "parawave/experiments.hpp"
#include "parawave/io.hpp"
#include "parawave/kinetic.hpp"
#include "parawave/medium.hpp"
#include "parawave/parallel.hpp"
#include "parawave/rng.hpp"
#include "parawave/stats.hpp"

namespace parawave::cli {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kBlock = 4096;  // draws per rng stream, so results ignore the worker count

std::string num(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

/// `draws` jumps from p, each block of kBlock on its own stream.
std::vector<Vec3> draw_jumps(const SpectralDensity& s, KernelKind kind, const Vec3& p, double k, std::size_t draws,
                             std::uint64_t seed, std::uint64_t tag, int workers) {
    std::vector<Vec3> out(draws);
    const std::size_t blocks = (draws + kBlock - 1) / kBlock;
    const std::span<const double> ps(p.data(), static_cast<std::size_t>(s.dim()));
    parallel_for(blocks, workers, [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b) {
            Philox4x32 rng(seed, stream_id({static_cast<std::uint64_t>(StreamPurpose::Test), tag, b}));
            for (std::size_t i = b * kBlock; i < std::min(draws, (b + 1) * kBlock); ++i)
                out[i] = sample_jump(ps, kind, s, k, rng);
        }
    });
    return out;
}

/// Chi-square of the jump u = q - p on an nb^d grid over the support box
/// against bin integrals of the kernel density.
CheckRow volume_kernel_row(const std::string& name, const SpectralDensity& s, KernelKind kind, const Vec3& p,
                           double k, std::size_t draws, std::uint64_t seed, int workers) {
    const int d = s.dim();
    const int nb = d == 1 ? 40 : 12;
    const double K = s.support_k();
    const double h = 2.0 * K / nb;
    const auto q = draw_jumps(s, kind, p, k, draws, seed, static_cast<std::uint64_t>(kind), workers);
    const std::size_t bins = static_cast<std::size_t>(d == 1 ? nb : nb * nb);
    std::vector<double> observed(bins, 0.0);
    std::vector<double> expected(bins, 0.0);
    for (const auto& v : q) {
        std::size_t idx = 0;
        for (int a = 0; a < d; ++a) {
            const auto ua = static_cast<std::size_t>(a);
            const int i = std::clamp(static_cast<int>(std::floor((v[ua] - p[ua] + K) / h)), 0, nb - 1);
            idx = idx * static_cast<std::size_t>(nb) + static_cast<std::size_t>(i);
        }
        observed[idx] += 1.0;
    }
    const QuadratureConfig quad{1e-10, 16, 4};
    const std::span<const double> ps(p.data(), static_cast<std::size_t>(d));
    double total = 0.0;
    for (std::size_t idx = 0; idx < bins; ++idx) {
        std::array<double, 2> lo{};
        std::array<double, 2> hi{};
        std::size_t rest = idx;
        for (int a = d - 1; a >= 0; --a) {
            const auto ua = static_cast<std::size_t>(a);
            const auto i = static_cast<double>(rest % static_cast<std::size_t>(nb));
            rest /= static_cast<std::size_t>(nb);
            lo[ua] = -K + i * h;
            hi[ua] = lo[ua] + h;
        }
        expected[idx] = integrate_box(
            [&](std::span<const double> u) {
                std::array<double, 2> qq{};
                for (int a = 0; a < d; ++a) qq[static_cast<std::size_t>(a)] = p[static_cast<std::size_t>(a)] + u[static_cast<std::size_t>(a)];
                return kernel_density(s, kind, ps, std::span<const double>(qq.data(), static_cast<std::size_t>(d)), k);
            },
            std::span<const double>(lo.data(), static_cast<std::size_t>(d)),
            std::span<const double>(hi.data(), static_cast<std::size_t>(d)), quad);
        total += expected[idx];
    }
    for (auto& e : expected) e *= static_cast<double>(draws) / total;
    const double pv = stats::chi_square_pvalue(observed, expected);
    return {name, pv > 0.01, "p=" + num(pv) + " draws=" + std::to_string(draws)};
}

Vec3 normalized(Vec3 v) {
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    for (auto& c : v) c /= n;
    return v;
}

Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

/// Elastic kernel in d = 3: |q| = |p|, cosine histogram against the
/// sphere-weighted density Phi0(|q - p|) dmu, uniform azimuth.
std::vector<CheckRow> elastic_rows(std::size_t draws, std::uint64_t seed, int workers) {
    const auto s = SpectralDensity::smooth_bump(1.0, 1.0, 1.0, 3);
    const double k = 2.0;
    const double r = 0.8;
    const Vec3 phat = normalized({1.0, 2.0, 2.0});
    const Vec3 p{r * phat[0], r * phat[1], r * phat[2]};
    const auto q = draw_jumps(s, KernelKind::Elastic26, p, k, draws, seed, 26, workers);
    Vec3 e1 = normalized(cross(phat, {1.0, 0.0, 0.0}));
    Vec3 e2 = cross(phat, e1);
    double worst = 0.0;
    // Reachable cosines: |q - p| = r sqrt(2 - 2 mu) < k0 = 1.
    const double mu_lo = std::max(-1.0, 1.0 - 0.5 / (r * r));
    const int nb = 30;
    const int na = 24;
    std::vector<double> obs_mu(nb, 0.0);
    std::vector<double> obs_phi(na, 0.0);
    for (const auto& v : q) {
        const double n = std::sqrt(dot(v, v));
        worst = std::max(worst, std::abs(n - r) / r);
        const double mu = dot(v, phat) / n;
        const int i = std::clamp(static_cast<int>((mu - mu_lo) / (1.0 - mu_lo) * nb), 0, nb - 1);
        obs_mu[static_cast<std::size_t>(i)] += 1.0;
        const double phi = std::atan2(dot(v, e2), dot(v, e1)) + kPi;
        obs_phi[static_cast<std::size_t>(std::clamp(static_cast<int>(phi / (2.0 * kPi) * na), 0, na - 1))] += 1.0;
    }
    std::vector<double> exp_mu(nb, 0.0);
    double total = 0.0;
    const double h = (1.0 - mu_lo) / nb;
    for (int i = 0; i < nb; ++i) {
        exp_mu[static_cast<std::size_t>(i)] = integrate_1d(
            [&](double mu) {
                const double kk = r * std::sqrt(std::max(0.0, 2.0 - 2.0 * mu));
                const std::array<double, 3> kv{kk, 0.0, 0.0};
                return s.partial(kv);
            },
            mu_lo + i * h, mu_lo + (i + 1) * h, {1e-10, 16, 4});
        total += exp_mu[static_cast<std::size_t>(i)];
    }
    for (auto& e : exp_mu) e *= static_cast<double>(draws) / total;
    const std::vector<double> exp_phi(na, static_cast<double>(draws) / na);
    const double p_mu = stats::chi_square_pvalue(obs_mu, exp_mu);
    const double p_phi = stats::chi_square_pvalue(obs_phi, exp_phi);
    return {{"elastic-norm", worst <= 1e-12, "max | |q| - |p| | / |p| = " + num(worst)},
            {"elastic-direction-chi2", p_mu > 0.01, "p=" + num(p_mu)},
            {"elastic-azimuth-chi2", p_phi > 0.01, "p=" + num(p_phi)}};
}

double rel_diff(const Mat3& a, const Mat3& b) {
    double m = 0.0;
    for (int i = 0; i < a.dim; ++i)
        for (int j = 0; j < a.dim; ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
    return m / b.max_abs();
}

/// Midpoint sum of pi int Phi(w(q), q) q q^T dq over the k-box, with w(q) = p.q/k.
Mat3 riemann_volume_tensor(const SpectralDensity& s, std::span<const double> p, double k, bool shifted, int n) {
    const int d = s.dim();
    const double K = s.support_k();
    const double h = 2.0 * K / n;
    Mat3 out;
    out.dim = d;
    std::array<double, 2> q{};
    const int ny = d == 2 ? n : 1;
    for (int i = 0; i < n; ++i) {
        q[0] = -K + (i + 0.5) * h;
        for (int j = 0; j < ny; ++j) {
            if (d == 2) q[1] = -K + (j + 0.5) * h;
            double w = 0.0;
            if (shifted)
                for (int a = 0; a < d; ++a) w += p[static_cast<std::size_t>(a)] * q[static_cast<std::size_t>(a)] / k;
            const double f = s(w, std::span<const double>(q.data(), static_cast<std::size_t>(d)));
            if (f == 0.0) continue;
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) out(a, b) += f * q[static_cast<std::size_t>(a)] * q[static_cast<std::size_t>(b)];
        }
    }
    const double cell = d == 2 ? h * h : h;
    for (auto& v : out.m) v *= kPi * cell;
    return out;
}

std::vector<CheckRow> tensor_rows() {
    std::vector<CheckRow> rows;
    const double k = 1.5;
    {
        const auto s = SpectralDensity::smooth_bump(0.7, 1.3, 0.9, 2);
        const std::array<double, 2> p{0.4, -0.7};
        const auto d20 = diffusion_tensor(s, TensorKind::D20, p, k);
        const auto o20 = riemann_volume_tensor(s, p, k, false, 1200);
        const double e20 = rel_diff(d20, o20);
        rows.push_back({"tensor-d20", e20 <= 1e-6, "relative error " + num(e20)});
        const auto d22 = diffusion_tensor(s, TensorKind::D22, p, k);
        const auto o22 = riemann_volume_tensor(s, p, k, true, 1200);
        const double e22 = rel_diff(d22, o22);
        rows.push_back({"tensor-d22", e22 <= 1e-6, "relative error " + num(e22)});
    }
    {
        // Separable spectrum: Phi0(k) = A c b(|k|/k0) with c = w0 int b.
        const double A = 0.9;
        const double w0 = 1.1;
        const double k0 = 1.0;
        const auto s = SpectralDensity::smooth_bump(A, w0, k0, 3);
        const Vec3 p{0.3, 0.4, 1.2};
        const auto d21 = diffusion_tensor(s, TensorKind::D21, p, k);
        const int nw = 20000;
        double c = 0.0;
        for (int i = 0; i < nw; ++i) c += bump_profile(-1.0 + (i + 0.5) * 2.0 / nw) * 2.0 / nw;
        c *= w0;
        const Vec3 ph = normalized(p);
        const Vec3 e1 = normalized(cross(ph, {1.0, 0.0, 0.0}));
        const Vec3 e2 = cross(ph, e1);
        const int n = 1200;
        const double h = 2.0 * k0 / n;
        Mat3 o;
        o.dim = 3;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double a = -k0 + (i + 0.5) * h;
                const double b = -k0 + (j + 0.5) * h;
                const double f = A * c * bump_profile(std::sqrt(a * a + b * b) / k0);
                if (f == 0.0) continue;
                const Vec3 v{a * e1[0] + b * e2[0], a * e1[1] + b * e2[1], a * e1[2] + b * e2[2]};
                for (int x = 0; x < 3; ++x)
                    for (int y = 0; y < 3; ++y) o(x, y) += f * v[static_cast<std::size_t>(x)] * v[static_cast<std::size_t>(y)];
            }
        const double pref = kPi * k / std::sqrt(dot(p, p)) * h * h;
        for (auto& v : o.m) v *= pref;
        const double e21 = rel_diff(d21, o);
        rows.push_back({"tensor-d21", e21 <= 1e-6, "relative error " + num(e21)});
    }
    return rows;
}

/// Constant D: Var(p_z) - Var(p_0) = 2 k^2 D z, 3 sigma from the sample
/// variance's own error.
CheckRow langevin_row(std::size_t n, std::uint64_t seed, int workers) {
    const auto s = SpectralDensity::smooth_bump(1.0, 1.0, 1.0, 1);
    LangevinConfig cfg;
    cfg.tensor = TensorKind::D20;
    cfg.carrier_k = 1.3;
    cfg.dz = 0.05;
    const double z = 2.0;
    auto e = make_ensemble(1, KernelKind::Null, cfg.carrier_k, seed);
    const std::array<double, 1> zero{0.0};
    add_particles(e, n, zero, zero, 1.0 / static_cast<double>(n));
    e = evolve_diffusive(std::move(e), s, cfg, z, workers);
    std::vector<double> p(e.particles.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = e.particles[i].p[0];
    const double var = stats::variance(p);
    double m4 = 0.0;
    const double mu = stats::mean(p);
    for (double v : p) m4 += std::pow(v - mu, 4);
    m4 /= static_cast<double>(p.size());
    const double se = std::sqrt(std::max(0.0, m4 - var * var) / static_cast<double>(p.size()));
    const double D = diffusion_tensor(s, TensorKind::D20, zero, cfg.carrier_k)(0, 0);
    const double target = 2.0 * cfg.carrier_k * cfg.carrier_k * D * z;
    const double zscore = (var - target) / se;
    return {"langevin-variance", std::abs(zscore) < 3.0,
            "var " + num(var) + " target " + num(target) + " z=" + num(zscore)};
}

/// Mean jump count over [0, z] equals k^2 Sigma z (Poisson counts).
CheckRow jump_rate_row(std::size_t n, std::uint64_t seed, int workers) {
    const auto s = SpectralDensity::smooth_bump(0.5, 1.0, 1.0, 1);
    const double k = 1.0;
    const double z = 1.0;
    const std::array<double, 1> p{0.3};
    const std::array<double, 1> x{0.0};
    auto e = make_ensemble(1, KernelKind::Rad2, k, seed);
    add_particles(e, n, x, p, 1.0);
    // Rad2 rates depend on p only through a shift, so the rate is constant.
    const double sigma = total_cross_section(s, p, KernelKind::Rad2, k);
    e = evolve(std::move(e), s, z, workers);
    double mean = 0.0;
    for (const auto& q : e.particles) mean += q.jumps;
    mean /= static_cast<double>(n);
    const double lambda = k * k * sigma * z;
    const double zscore = (mean - lambda) / std::sqrt(lambda / static_cast<double>(n));
    return {"jump-rate", std::abs(zscore) < 3.0, "mean " + num(mean) + " target " + num(lambda) + " z=" + num(zscore)};
}

}  // namespace

std::vector<CheckRow> kernel_checks(std::uint64_t seed, std::size_t draws, int workers) {
    if (draws < 1000) throw ArgumentError("kernel-check needs at least 1000 draws");
    std::vector<CheckRow> rows;
    const Vec3 p2{0.3, -0.2, 0.0};
    const Vec3 p1{0.4, 0.0, 0.0};
    const auto s2 = SpectralDensity::smooth_bump(1.0, 1.0, 1.0, 2);
    const auto s1 = SpectralDensity::product_bump(1.0, 0.8, 1.2, 1);
    rows.push_back(volume_kernel_row("kernel-rad2-chi2", s2, KernelKind::Rad2, p2, 1.0, draws, seed, workers));
    rows.push_back(volume_kernel_row("kernel-rad-chi2", s2, KernelKind::Rad, p2, 1.0, draws, seed, workers));
    rows.push_back(volume_kernel_row("kernel-t3i-chi2", s1, KernelKind::T3i, p1, 1.0, draws, seed, workers));
    rows.push_back(volume_kernel_row("kernel-t3iii-chi2", s1, KernelKind::T3iii, p1, 1.0, draws, seed, workers));
    for (auto& r : elastic_rows(draws, seed, workers)) rows.push_back(std::move(r));
    for (auto& r : tensor_rows()) rows.push_back(std::move(r));
    rows.push_back(langevin_row(std::max<std::size_t>(draws / 10, 1000), seed, workers));
    rows.push_back(jump_rate_row(std::max<std::size_t>(draws / 10, 1000), seed, workers));
    return rows;
}

std::vector<CheckRow> synth_checks(const nlohmann::json& cfg, std::uint64_t seed, int workers,
                                   const std::filesystem::path& out_dir) {
    const int dim = cfg.value("dim", 1);
    const nlohmann::json spec_j =
        cfg.contains("spectrum") ? cfg["spectrum"]
                                 : nlohmann::json{{"family", "smooth_bump"}, {"amplitude", 1.0}, {"w0", 1.0}, {"k0", 1.0}};
    const auto s = spectrum_from_json(spec_j, dim);
    MediumGridSpec g;
    g.dim = dim;
    const auto gj = cfg.value("grid", nlohmann::json::object());
    g.nz = gj.value("nz", 128);
    g.dz = gj.value("dz", 0.5);
    g.nx = {gj.value("nx", 128), dim == 2 ? gj.value("nx", 128) : 1};
    g.dx = gj.value("dx", 0.5);
    validate_medium_grid(s, g);
    const int m = cfg.value("realizations", 2000);
    if (m < 2) throw ValidationError("synth-check needs at least two realizations");
    std::vector<std::array<double, 3>> lags{{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}};
    if (cfg.contains("lags")) {
        lags.clear();
        for (const auto& l : cfg["lags"]) lags.push_back({l.at(0).get<double>(), l.at(1).get<double>(), l.size() > 2 ? l.at(2).get<double>() : 0.0});
    }
    auto index = [](double lag, double h, int n) {
        const double r = lag / h;
        const long i = std::lround(r);
        if (std::abs(r - static_cast<double>(i)) > 1e-9) throw ValidationError("lag " + num(lag) + " is not a multiple of the grid spacing");
        return static_cast<int>(((i % n) + n) % n);
    };
    struct Lag {
        int mz, mx, my;
    };
    std::vector<Lag> li;
    for (const auto& l : lags) li.push_back({index(l[0], g.dz, g.nz), index(l[1], g.dx, g.nx[0]), dim == 2 ? index(l[2], g.dx, g.nx[1]) : 0});
    // per[lag][r]: lattice average of V(z,x) V(z+lz, x+lx) in realization r.
    std::vector<std::vector<double>> per(lags.size(), std::vector<double>(static_cast<std::size_t>(m)));
    parallel_for(static_cast<std::size_t>(m), workers, [&](std::size_t b, std::size_t e) {
        for (std::size_t r = b; r < e; ++r) {
            const auto med = synthesize(s, g, seed, r);
            for (std::size_t l = 0; l < li.size(); ++l) {
                double sum = 0.0;
                for (int iz = 0; iz < g.nz; ++iz)
                    for (int ix = 0; ix < g.nx[0]; ++ix)
                        for (int iy = 0; iy < g.nx[1]; ++iy)
                            sum += med.at(iz, ix, iy) *
                                   med.at((iz + li[l].mz) % g.nz, (ix + li[l].mx) % g.nx[0], (iy + li[l].my) % g.nx[1]);
                per[l][r] = sum / static_cast<double>(g.size());
            }
        }
    });
    io::CsvWriter csv(out_dir / "synth_check.csv",
                      {"lag_z", "lag_x", "lag_y", "empirical", "stderr", "model", "lattice", "z_score"});
    std::vector<CheckRow> rows;
    for (std::size_t l = 0; l < lags.size(); ++l) {
        const double mean = stats::mean(per[l]);
        const double se = stats::standard_error(per[l]);
        const std::array<double, 2> lx{lags[l][1], lags[l][2]};
        const auto lxs = std::span<const double>(lx.data(), static_cast<std::size_t>(dim));
        const double model = covariance_model(s, lags[l][0], lxs);
        const double lattice = lattice_covariance(s, g, lags[l][0], lxs);
        const double zs = (mean - model) / se;
        csv.row({io::fmt(lags[l][0]), io::fmt(lags[l][1]), io::fmt(lags[l][2]), io::fmt(mean), io::fmt(se),
                 io::fmt(model), io::fmt(lattice), io::fmt(zs)});
        std::string name = "covariance(" + num(lags[l][0]) + "," + num(lags[l][1]) + (dim == 2 ? "," + num(lags[l][2]) : "") + ")";
        rows.push_back({name, std::abs(zs) < 3.0,
                        "empirical " + num(mean) + " +- " + num(se) + " model " + num(model) + " z=" + num(zs)});
    }
    return rows;
}

}  // namespace parawave::cli
