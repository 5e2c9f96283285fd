#include "parawave/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "parawave/errors.hpp"
#include "parawave/parallel.hpp"

namespace parawave {

namespace {

constexpr int kRadialNodes = 160;

double norm_d(std::span<const double> p) {
    double s = 0.0;
    for (double v : p) s += v * v;
    return std::sqrt(s);
}

double lagrange_cubic(const std::vector<double>& f, double h, double r) {
    const auto n = static_cast<long long>(f.size());
    const double u = r / h;
    long long i = static_cast<long long>(std::floor(u)) - 1;
    i = std::clamp<long long>(i, 0, n - 4);
    const double t = u - static_cast<double>(i);
    double out = 0.0;
    for (int a = 0; a < 4; ++a) {
        double w = 1.0;
        for (int b = 0; b < 4; ++b)
            if (b != a) w *= (t - b) / static_cast<double>(a - b);
        out += w * f[static_cast<std::size_t>(i + a)];
    }
    return out;
}

}  // namespace

struct TensorField::Impl {
    Impl(const SpectralDensity& spectrum, const LangevinConfig& config) : s(spectrum), cfg(config) {}

    SpectralDensity s;
    LangevinConfig cfg;
    int dim = 1;
    bool is_constant = false;
    bool radial = false;
    Mat3 fixed{};
    // Radial profiles on r_j = j h, j = 0..n-1: D = A p^p^T + B (I - p^p^T).
    double h = 0.0;
    double r_max = 0.0;
    std::vector<double> a;
    std::vector<double> b;
    // D21 on an isotropic spectrum: B(r) = b21 / r, A = 0.
    double b21 = 0.0;

    Mat3 direct(std::span<const double> p) const {
        return diffusion_tensor(s, cfg.tensor, p, cfg.carrier_k, cfg.quad);
    }

    Mat3 from_profiles(std::span<const double> p, double A, double B) const {
        Mat3 m;
        m.dim = dim;
        const double r = norm_d(p);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) {
                const double pp = r > 0.0 ? p[static_cast<std::size_t>(i)] * p[static_cast<std::size_t>(j)] / (r * r)
                                          : (i == 0 && j == 0 ? 1.0 : 0.0);
                const double id = i == j ? 1.0 : 0.0;
                m(i, j) = r > 0.0 ? A * pp + B * (id - pp) : (i == j ? A : 0.0);
            }
        return m;
    }
};

TensorField::TensorField(const SpectralDensity& s, const LangevinConfig& cfg, double r_max) {
    auto impl = std::make_shared<Impl>(s, cfg);
    impl->dim = s.dim();
    const int d = impl->dim;
    const double k0 = s.support_k();
    if (!(cfg.carrier_k > 0.0)) throw ArgumentError("carrier wavenumber must be positive");
    if (cfg.tensor == TensorKind::D21) {
        if (d < 2) throw ConfigurationError("tensor D21 is degenerate in d = 1");
        if (d < 3 && !cfg.allow_low_dim)
            throw ConfigurationError("tensor D21 is only supported for d >= 3 (override to allow d = 2)");
    }
    switch (cfg.tensor) {
        case TensorKind::Null:
            impl->is_constant = true;
            impl->fixed.dim = d;
            break;
        case TensorKind::D20:
        case TensorKind::D20Prime: {
            impl->is_constant = true;
            const std::array<double, 3> zero{};
            impl->fixed = diffusion_tensor(s, cfg.tensor, std::span<const double>(zero.data(), static_cast<std::size_t>(d)),
                                           cfg.carrier_k, cfg.quad);
            break;
        }
        case TensorKind::D21:
            if (s.family() == SpectrumFamily::SmoothBump) {
                impl->radial = true;
                std::array<double, 3> e1{1.0, 0.0, 0.0};
                const Mat3 m = impl->direct(std::span<const double>(e1.data(), static_cast<std::size_t>(d)));
                impl->b21 = m(1, 1);
            }
            break;
        case TensorKind::D22:
            if (s.family() == SpectrumFamily::SmoothBump) {
                impl->radial = true;
                impl->r_max = r_max > 0.0 ? r_max : 8.0 * k0;
                impl->h = impl->r_max / (kRadialNodes - 4);
                impl->a.resize(kRadialNodes);
                impl->b.resize(kRadialNodes);
                for (int j = 0; j < kRadialNodes; ++j) {
                    std::array<double, 3> p{j * impl->h, 0.0, 0.0};
                    const Mat3 m = impl->direct(std::span<const double>(p.data(), static_cast<std::size_t>(d)));
                    impl->a[static_cast<std::size_t>(j)] = m(0, 0);
                    impl->b[static_cast<std::size_t>(j)] = d > 1 ? m(1, 1) : 0.0;
                }
            }
            break;
    }
    impl_ = std::move(impl);
}

bool TensorField::constant() const { return impl_->is_constant; }

double TensorField::support_k() const { return impl_->s.support_k(); }

Mat3 TensorField::at(std::span<const double> p) const {
    const auto& m = *impl_;
    if (static_cast<int>(p.size()) != m.dim) throw ArgumentError("momentum dimension does not match the tensor");
    if (m.is_constant) return m.fixed;
    const double r = norm_d(p);
    if (m.radial && m.cfg.tensor == TensorKind::D21) {
        if (r == 0.0) throw DegenerateMomentumError("tensor D21 at p = 0");
        return m.from_profiles(p, 0.0, m.b21 / r);
    }
    if (m.radial && r <= m.r_max) return m.from_profiles(p, lagrange_cubic(m.a, m.h, r), lagrange_cubic(m.b, m.h, r));
    return m.direct(p);
}

Vec3 TensorField::divergence(std::span<const double> p) const {
    const auto& m = *impl_;
    Vec3 div{};
    if (m.is_constant) return div;
    const double h = m.cfg.h_d > 0.0 ? m.cfg.h_d : 1e-4 * m.s.support_k();
    std::array<double, 3> q{};
    std::copy(p.begin(), p.end(), q.begin());
    const auto span = std::span<const double>(q.data(), p.size());
    for (int j = 0; j < m.dim; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        const double keep = q[uj];
        q[uj] = keep + h;
        const Mat3 hi = at(span);
        q[uj] = keep - h;
        const Mat3 lo = at(span);
        q[uj] = keep;
        for (int i = 0; i < m.dim; ++i) div[static_cast<std::size_t>(i)] += (hi(i, j) - lo(i, j)) / (2.0 * h);
    }
    return div;
}

Mat3 cholesky_psd(const Mat3& m) {
    const int d = m.dim;
    const double scale = std::max(1.0, m.max_abs());
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < i; ++j)
            if (std::abs(m(i, j) - m(j, i)) > 1e-12 * scale) throw ArgumentError("cholesky_psd needs a symmetric matrix");
    Mat3 l;
    l.dim = d;
    const double tiny = 1e-12 * scale;
    for (int j = 0; j < d; ++j) {
        double s = m(j, j);
        for (int k = 0; k < j; ++k) s -= l(j, k) * l(j, k);
        if (s <= tiny) continue;  // clipped pivot: column stays zero
        const double piv = std::sqrt(s);
        l(j, j) = piv;
        for (int i = j + 1; i < d; ++i) {
            double t = m(i, j);
            for (int k = 0; k < j; ++k) t -= l(i, k) * l(j, k);
            l(i, j) = t / piv;
        }
    }
    return l;
}

ParticleEnsemble evolve_diffusive(ParticleEnsemble e, const SpectralDensity& s, const LangevinConfig& cfg,
                                  double z_final, int workers) {
    double pmax = 0.0;
    for (const auto& q : e.particles)
        pmax = std::max(pmax, norm_d(std::span<const double>(q.p.data(), static_cast<std::size_t>(e.dim))));
    const TensorField field(s, cfg, 1.5 * pmax + 8.0 * s.support_k());
    return evolve_diffusive(std::move(e), field, cfg, z_final, workers);
}

ParticleEnsemble evolve_diffusive(ParticleEnsemble e, const TensorField& field, const LangevinConfig& cfg,
                                  double z_final, int workers) {
    if (z_final < e.z) throw ArgumentError("evolve_diffusive needs z_final >= z");
    if (!(cfg.dz > 0.0)) throw ArgumentError("Langevin step must be positive");
    const double span = z_final - e.z;
    const int d = e.dim;
    const auto ud = static_cast<std::size_t>(d);
    const double k = cfg.carrier_k;
    const double k2 = k * k;
    const auto steps = static_cast<long long>(std::ceil(span / cfg.dz - 1e-9));
    const double h = steps > 0 ? span / static_cast<double>(steps) : 0.0;
    const bool null = cfg.tensor == TensorKind::Null;
    const bool d21 = cfg.tensor == TensorKind::D21;
    const double floor_p = cfg.p_min > 0.0 ? cfg.p_min : 1e-3 * field.support_k();
    const Torus torus = e.options.torus;
    Mat3 fixed_chol{};
    if (field.constant()) {
        const std::array<double, 3> zero{};
        fixed_chol = cholesky_psd(field.at(std::span<const double>(zero.data(), ud)));
    }
    const double noise = std::sqrt(2.0 * k2 * h);

    auto wrap = [](double& v, double period) {
        if (period > 0.0) v -= period * std::floor(v / period + 0.5);
    };

    parallel_for(e.particles.size(), workers, [&](std::size_t b, std::size_t end) {
        for (std::size_t i = b; i < end; ++i) {
            auto& q = e.particles[i];
            if (q.frozen) continue;
            if (null || span == 0.0) {
                for (std::size_t a = 0; a < ud; ++a) {
                    q.x[a] += q.p[a] / k * span;
                    wrap(q.x[a], torus.x_period);
                }
                continue;
            }
            for (long long st = 0; st < steps; ++st) {
                const auto ps = std::span<const double>(q.p.data(), ud);
                if (d21 && norm_d(ps) < floor_p) {
                    q.frozen = true;
                    break;
                }
                Mat3 l = fixed_chol;
                Vec3 div{};
                if (!field.constant()) {
                    l = cholesky_psd(field.at(ps));
                    div = field.divergence(ps);
                }
                std::array<double, 3> xi{};
                for (std::size_t a = 0; a < ud; ++a) xi[a] = standard_normal(q.rng);
                for (std::size_t a = 0; a < ud; ++a) {
                    q.x[a] += q.p[a] / k * h;
                    wrap(q.x[a], torus.x_period);
                }
                for (int a = 0; a < d; ++a) {
                    double kick = 0.0;
                    for (int c = 0; c <= a; ++c) kick += l(a, c) * xi[static_cast<std::size_t>(c)];
                    auto& pa = q.p[static_cast<std::size_t>(a)];
                    pa += k2 * div[static_cast<std::size_t>(a)] * h + noise * kick;
                    wrap(pa, torus.p_period);
                }
            }
        }
    });
    e.z = z_final;
    return e;
}

}  // namespace parawave
