#include "parawave/kinetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "parawave/errors.hpp"
#include "parawave/parallel.hpp"

namespace parawave {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxRejections = 10'000'000;

double norm3(const Vec3& v, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
    return std::sqrt(s);
}

Vec3 to_vec3(std::span<const double> v) {
    Vec3 out{};
    for (std::size_t i = 0; i < v.size() && i < 3; ++i) out[i] = v[i];
    return out;
}

void wrap_axis(double& v, double period) {
    if (period <= 0.0) return;
    v -= period * std::floor(v / period + 0.5);
}

double exp_variate(Philox4x32& rng, double rate) { return -std::log1p(-uniform01(rng)) / rate; }

/// Radius beyond which Phi0 vanishes.
double partial_radius(const SpectralDensity& s) {
    if (s.family() == SpectrumFamily::SmoothBump) return s.support_k();
    return s.support_k() * std::sqrt(static_cast<double>(s.dim()));
}

double cap_half_angle(const SpectralDensity& s, double r) {
    return 2.0 * std::asin(std::min(1.0, partial_radius(s) / (2.0 * r)));
}

/// Area (arc length in d = 2) of the part of |q| = r reachable from p.
double cap_area(const SpectralDensity& s, double r, int d) {
    const double t = cap_half_angle(s, r);
    if (d == 2) return 2.0 * t * r;
    return 2.0 * kPi * r * r * (1.0 - std::cos(t));
}

/// Uniform point on the reachable cap around p.
Vec3 propose_on_cap(const SpectralDensity& s, const Vec3& p, int d, Philox4x32& rng) {
    const double r = norm3(p, d);
    const double tmax = cap_half_angle(s, r);
    Vec3 q{};
    if (d == 2) {
        const double phi = std::atan2(p[1], p[0]) + (2.0 * uniform01(rng) - 1.0) * tmax;
        q = {r * std::cos(phi), r * std::sin(phi), 0.0};
    } else {
        const Vec3 n{p[0] / r, p[1] / r, p[2] / r};
        int axis = 0;
        for (int i = 1; i < 3; ++i)
            if (std::abs(n[static_cast<std::size_t>(i)]) < std::abs(n[static_cast<std::size_t>(axis)])) axis = i;
        Vec3 a{};
        a[static_cast<std::size_t>(axis)] = 1.0;
        const double proj = a[0] * n[0] + a[1] * n[1] + a[2] * n[2];
        for (std::size_t i = 0; i < 3; ++i) a[i] -= proj * n[i];
        const double an = norm3(a, 3);
        for (auto& v : a) v /= an;
        const Vec3 b{n[1] * a[2] - n[2] * a[1], n[2] * a[0] - n[0] * a[2], n[0] * a[1] - n[1] * a[0]};
        const double c = 1.0 - uniform01(rng) * (1.0 - std::cos(tmax));
        const double sn = std::sqrt(std::max(0.0, 1.0 - c * c));
        const double phi = 2.0 * kPi * uniform01(rng);
        for (std::size_t i = 0; i < 3; ++i) q[i] = r * (c * n[i] + sn * (std::cos(phi) * a[i] + std::sin(phi) * b[i]));
    }
    // Pin |q| to |p| against rounding in the rotation.
    const double scale = r / norm3(q, d);
    for (int i = 0; i < d; ++i) q[static_cast<std::size_t>(i)] *= scale;
    return q;
}

/// One thinning proposal; returns true and overwrites q on acceptance.
bool propose_jump(const SpectralDensity& s, KernelKind kernel, const Vec3& p, int d, double k, Philox4x32& rng,
                  Vec3& q) {
    const auto ud = static_cast<std::size_t>(d);
    if (kernel == KernelKind::Elastic26) {
        q = propose_on_cap(s, p, d, rng);
        Vec3 u{};
        for (std::size_t i = 0; i < ud; ++i) u[i] = q[i] - p[i];
        const double env = s.max_partial();
        return uniform01(rng) * env < s.partial(std::span<const double>(u.data(), ud));
    }
    const double K = s.support_k();
    for (std::size_t i = 0; i < ud; ++i) q[i] = p[i] + K * (2.0 * uniform01(rng) - 1.0);
    const double sig = kernel_density(s, kernel, std::span<const double>(p.data(), ud),
                                      std::span<const double>(q.data(), ud), k);
    return uniform01(rng) * s.max_value() < sig;
}

}  // namespace

double ParticleEnsemble::total_weight() const {
    double t = 0.0;
    for (const auto& q : particles) t += q.weight;
    return t;
}

std::size_t ParticleEnsemble::frozen_count() const {
    return static_cast<std::size_t>(std::count_if(particles.begin(), particles.end(), [](const Particle& q) {
        return q.frozen;
    }));
}

ParticleEnsemble make_ensemble(int dim, KernelKind kernel, double carrier_k, std::uint64_t seed,
                               const EnsembleOptions& opts) {
    if (dim < 1 || dim > kMaxDim) throw ArgumentError("particle dimension must be 1, 2 or 3");
    if (!(carrier_k > 0.0)) throw ArgumentError("carrier wavenumber must be positive");
    if (kernel == KernelKind::Elastic26) {
        if (dim < 2) throw ConfigurationError("the elastic kernel is degenerate in d = 1");
        if (dim < 3 && !opts.allow_low_dim_elastic)
            throw ConfigurationError("the elastic kernel is only supported for d >= 3 (override to allow d = 2)");
    }
    ParticleEnsemble e;
    e.dim = dim;
    e.kernel = kernel;
    e.carrier_k = carrier_k;
    e.seed = seed;
    e.options = opts;
    return e;
}

void add_particles(ParticleEnsemble& e, std::size_t n, std::span<const double> x, std::span<const double> p,
                   double weight) {
    if (static_cast<int>(x.size()) != e.dim || static_cast<int>(p.size()) != e.dim)
        throw ArgumentError("particle coordinates do not match the ensemble dimension");
    const std::size_t base = e.particles.size();
    e.particles.reserve(base + n);
    for (std::size_t i = 0; i < n; ++i) {
        Particle q;
        q.x = to_vec3(x);
        q.p = to_vec3(p);
        q.weight = weight;
        q.rng = Philox4x32(e.seed, stream_id({static_cast<std::uint64_t>(StreamPurpose::Particle), base + i}));
        e.particles.push_back(q);
    }
}

void add_gaussian(ParticleEnsemble& e, std::size_t n, std::span<const double> x0, std::span<const double> p0,
                  double sigma_x, double sigma_p, double mass) {
    if (n == 0) return;
    if (!(sigma_x >= 0.0) || !(sigma_p >= 0.0)) throw ArgumentError("Gaussian spreads must be nonnegative");
    const std::size_t base = e.particles.size();
    add_particles(e, n, x0, p0, mass / static_cast<double>(n));
    for (std::size_t i = base; i < e.particles.size(); ++i) {
        auto& q = e.particles[i];
        for (int a = 0; a < e.dim; ++a) {
            const auto ua = static_cast<std::size_t>(a);
            q.x[ua] += sigma_x * standard_normal(q.rng);
            q.p[ua] += sigma_p * standard_normal(q.rng);
        }
    }
}

void add_from_wigner(ParticleEnsemble& e, std::size_t n, const WignerField& W) {
    if (W.grid.dim != e.dim) throw ArgumentError("Wigner field dimension does not match the ensemble");
    if (n == 0) return;
    std::vector<double> cdf(W.w.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < W.w.size(); ++i) {
        acc += std::abs(W.w[i]);
        cdf[i] = acc;
    }
    if (!(acc > 0.0)) throw ArgumentError("cannot sample from an identically zero Wigner function");
    const double mass = acc * W.cell();
    const std::size_t base = e.particles.size();
    const std::array<double, 2> zero{};
    add_particles(e, n, std::span<const double>(zero.data(), static_cast<std::size_t>(e.dim)),
                  std::span<const double>(zero.data(), static_cast<std::size_t>(e.dim)), 0.0);
    const std::size_t np = W.np();
    const auto n1 = static_cast<std::size_t>(W.grid.n[1]);
    const double dp = W.dp();
    for (std::size_t i = base; i < e.particles.size(); ++i) {
        auto& q = e.particles[i];
        const double u = uniform01(q.rng) * acc;
        const auto cell = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        const std::size_t c = std::min(cell, cdf.size() - 1);
        const std::size_t xf = c / np;
        const std::size_t pf = c % np;
        const std::array<std::size_t, 2> xi{e.dim == 2 ? xf / n1 : xf, e.dim == 2 ? xf % n1 : 0};
        const std::array<std::size_t, 2> pi{e.dim == 2 ? pf / n1 : pf, e.dim == 2 ? pf % n1 : 0};
        for (int a = 0; a < e.dim; ++a) {
            const auto ua = static_cast<std::size_t>(a);
            q.x[ua] = W.grid.x(a, static_cast<int>(xi[ua])) + (uniform01(q.rng) - 0.5) * W.grid.dx;
            q.p[ua] = W.p_axis(a, static_cast<int>(pi[ua])) + (uniform01(q.rng) - 0.5) * dp;
        }
        q.weight = (W.w[c] < 0.0 ? -mass : mass) / static_cast<double>(n);
    }
}

double thinning_rate(const SpectralDensity& s, KernelKind kernel, std::span<const double> p, double carrier_k) {
    const int d = s.dim();
    const double k2 = carrier_k * carrier_k;
    switch (kernel) {
        case KernelKind::Null: return 0.0;
        case KernelKind::Elastic26: {
            const double r = norm3(to_vec3(p), d);
            if (r == 0.0) throw DegenerateMomentumError("elastic kernel at |p| = 0");
            return k2 * 2.0 * kPi * (carrier_k / r) * s.max_partial() * cap_area(s, r, d);
        }
        default: return k2 * 2.0 * kPi * s.max_value() * std::pow(2.0 * s.support_k(), d);
    }
}

Vec3 sample_jump(std::span<const double> p, KernelKind kernel, const SpectralDensity& s, double carrier_k,
                 Philox4x32& rng) {
    const int d = s.dim();
    if (static_cast<int>(p.size()) != d) throw ArgumentError("momentum dimension does not match the spectrum");
    if (kernel == KernelKind::Null) throw ArgumentError("the null kernel has no jumps");
    const Vec3 pv = to_vec3(p);
    if (kernel == KernelKind::Elastic26) {
        if (d < 2) throw ArgumentError("the elastic kernel requires d >= 2");
        if (norm3(pv, d) == 0.0) throw DegenerateMomentumError("elastic kernel at |p| = 0");
        if (!(s.max_partial() > 0.0)) throw ConfigurationError("partial-spectrum envelope is zero");
    } else if (!(s.max_value() > 0.0)) {
        throw ConfigurationError("spectral envelope is zero; no jump density to sample");
    }
    Vec3 q{};
    for (int it = 0; it < kMaxRejections; ++it)
        if (propose_jump(s, kernel, pv, d, carrier_k, rng, q)) return q;
    throw ConfigurationError("kernel rejection sampler exhausted; the envelope does not match the density");
}

ParticleEnsemble evolve(ParticleEnsemble e, const SpectralDensity& s, double z_final, int workers) {
    if (z_final < e.z) throw ArgumentError("evolve needs z_final >= z");
    if (s.dim() != e.dim) throw ArgumentError("spectrum dimension does not match the ensemble");
    const double span = z_final - e.z;
    const int d = e.dim;
    const double k = e.carrier_k;
    const Torus torus = e.options.torus;
    const KernelKind kernel = e.kernel;
    const bool scatter = kernel != KernelKind::Null && s.amplitude() != 0.0;
    const double volume_rate = scatter && kernel != KernelKind::Elastic26
                                   ? thinning_rate(s, kernel, std::span<const double>(Vec3{}.data(), static_cast<std::size_t>(d)), k)
                                   : 0.0;

    auto fly = [&](Particle& q, double tau) {
        for (int a = 0; a < d; ++a) {
            const auto ua = static_cast<std::size_t>(a);
            q.x[ua] += q.p[ua] / k * tau;
            wrap_axis(q.x[ua], torus.x_period);
        }
    };

    parallel_for(e.particles.size(), workers, [&](std::size_t b, std::size_t end) {
        Vec3 q{};
        for (std::size_t i = b; i < end; ++i) {
            auto& pt = e.particles[i];
            if (pt.frozen || !scatter || span == 0.0) {
                if (!pt.frozen) fly(pt, span);
                continue;
            }
            double rate = volume_rate;
            if (kernel == KernelKind::Elastic26) {
                if (norm3(pt.p, d) == 0.0) {
                    pt.frozen = true;
                    continue;
                }
                rate = thinning_rate(s, kernel, std::span<const double>(pt.p.data(), static_cast<std::size_t>(d)), k);
            }
            double remaining = span;
            while (true) {
                const double tau = exp_variate(pt.rng, rate);
                if (tau >= remaining) {
                    fly(pt, remaining);
                    break;
                }
                fly(pt, tau);
                remaining -= tau;
                if (propose_jump(s, kernel, pt.p, d, k, pt.rng, q)) {
                    pt.p = q;
                    for (int a = 0; a < d; ++a) wrap_axis(pt.p[static_cast<std::size_t>(a)], torus.p_period);
                    ++pt.jumps;
                }
            }
        }
    });
    e.z = z_final;
    return e;
}

ObservableEstimate estimate_observable(const ParticleEnsemble& e, const PhaseFn& theta) {
    if (e.particles.empty()) throw ArgumentError("cannot estimate an observable on an empty ensemble");
    const std::size_t n = e.particles.size();
    const auto ud = static_cast<std::size_t>(e.dim);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& q = e.particles[i];
        y[i] = static_cast<double>(n) * q.weight *
               theta(std::span<const double>(q.x.data(), ud), std::span<const double>(q.p.data(), ud));
    }
    const int blocks = static_cast<int>(std::min<std::size_t>(64, n));
    if (blocks < 2) return {y[0], 0.0};
    const auto est = stats::jackknife(y, [](std::span<const double> v) { return stats::mean(v); }, blocks);
    return {est.value, est.stderr_};
}

ObservableEstimate estimate_observable(const ParticleEnsemble& e, const TestFunction& th) {
    if (th.dim != e.dim) throw ArgumentError("test function dimension does not match the ensemble");
    return estimate_observable(e, [&th](std::span<const double> x, std::span<const double> p) { return th(x, p); });
}

}  // namespace parawave
