#include "parawave/psolver.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>

#include "parawave/errors.hpp"

namespace parawave {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<int> shape_of(const TransverseGrid& g) {
    if (g.dim == 1) return {g.n[0]};
    return {g.n[0], g.n[1]};
}

void check_grid(const TransverseGrid& g) {
    if (g.dim != 1 && g.dim != 2) throw ArgumentError("wave solver supports d = 1 or 2");
    if (g.n[0] < 2 || (g.dim == 2 && g.n[1] < 2) || (g.dim == 1 && g.n[1] != 1))
        throw ArgumentError("transverse grid needs at least two points per axis");
    if (!(g.dx > 0.0)) throw ArgumentError("transverse spacing must be positive");
}

template <typename F>
void for_each_point(const TransverseGrid& g, F&& f) {
    std::array<double, 2> x{};
    std::size_t idx = 0;
    for (int i = 0; i < g.n[0]; ++i) {
        x[0] = g.x(0, i);
        for (int j = 0; j < g.n[1]; ++j, ++idx) {
            if (g.dim == 2) x[1] = g.x(1, j);
            f(idx, std::span<const double>(x.data(), static_cast<std::size_t>(g.dim)));
        }
    }
}

}  // namespace

TransverseGrid centered_grid(int dim, int n, double length) {
    TransverseGrid g;
    g.dim = dim;
    g.n = {n, dim == 2 ? n : 1};
    g.dx = length / n;
    g.x0 = {-length / 2.0, dim == 2 ? -length / 2.0 : 0.0};
    check_grid(g);
    return g;
}

double WaveField::norm2() const {
    double s = 0.0;
    for (const auto& v : psi) s += std::norm(v);
    return s * grid.cell();
}

double Aperture::operator()(std::span<const double> x) const {
    switch (kind) {
        case Kind::Full: return 1.0;
        case Kind::Zero: return 0.0;
        case Kind::Slab: {
            double v = 1.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double u = x[i] - center[i];
                if (edge > 0.0) {
                    v *= 0.5 * (std::tanh((u + half_width) / edge) - std::tanh((u - half_width) / edge));
                } else {
                    const double a = std::abs(u);
                    v *= a < half_width ? 1.0 : (a == half_width ? 0.5 : 0.0);
                }
            }
            return std::clamp(v, 0.0, 1.0);
        }
    }
    return 0.0;
}

Propagator::Propagator(const TransverseGrid& grid, const ScalingRegime& regime, double p_max, SpongeConfig sponge)
    : grid_(grid),
      regime_(regime),
      sponge_(sponge),
      forward_((check_grid(grid), shape_of(grid)), FftDirection::Forward),
      backward_(shape_of(grid), FftDirection::Backward) {
    if (p_max > 0.0 && grid.dx > kPi * regime.s_w / p_max * (1.0 + 1e-12))
        throw ConfigurationError("transverse grid under-resolved: dx exceeds pi s_w / p_max");
    k2_.resize(grid.size());
    std::size_t idx = 0;
    const double dk0 = 2.0 * kPi / (grid.n[0] * grid.dx);
    const double dk1 = grid.dim == 2 ? 2.0 * kPi / (grid.n[1] * grid.dx) : 0.0;
    for (int i = 0; i < grid.n[0]; ++i) {
        const double a = dk0 * fft_index(i, grid.n[0]);
        for (int j = 0; j < grid.n[1]; ++j, ++idx) {
            const double b = grid.dim == 2 ? dk1 * fft_index(j, grid.n[1]) : 0.0;
            k2_[idx] = a * a + b * b;
        }
    }
    v_.resize(grid.size());
    phase_.resize(grid.size());
    if (sponge_.enabled) {
        sponge_profile_.assign(grid.size(), 0.0);
        const double L = grid.length();
        const double band = sponge_.fraction * L;
        for_each_point(grid, [&](std::size_t k, std::span<const double> x) {
            double ramp = 0.0;
            for (std::size_t a = 0; a < x.size(); ++a) {
                const double from_edge = std::min(x[a] - grid.x0[a], grid.x0[a] + L - x[a]);
                if (from_edge < band) ramp = std::max(ramp, 1.0 - from_edge / band);
            }
            sponge_profile_[k] = ramp * ramp;
        });
    }
}

void Propagator::apply_dispersion(std::span<cplx> psi, double dz) {
    if (dz != cached_dz_) {
        for (std::size_t i = 0; i < k2_.size(); ++i)
            phase_[i] = std::polar(1.0 / static_cast<double>(k2_.size()), -regime_.c_disp * dz * k2_[i] / 2.0);
        cached_dz_ = dz;
    }
    forward_.execute(psi);
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= phase_[i];
    backward_.execute(psi);
}

void Propagator::step(WaveField& w, const FieldSliceView& med, double dz) {
    if (!(dz > 0.0)) throw ArgumentError("step size must be positive");
    if (!(w.grid == grid_)) throw ArgumentError("wave field grid does not match the propagator");
    const std::array<int, 2> n = grid_.n;
    med.sample_grid(w.z + dz / 2.0, std::span<const int>(n.data(), static_cast<std::size_t>(grid_.dim)),
                    std::span<const double>(grid_.x0.data(), static_cast<std::size_t>(grid_.dim)), grid_.dx, v_);
    const double half = regime_.c_pot * dz / 2.0;
    std::vector<cplx>& psi = w.psi;
    // exp(i half V) computed once and applied twice.
    thread_local std::vector<cplx> pot;
    pot.resize(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) {
        pot[i] = std::polar(1.0, half * v_[i]);
        psi[i] *= pot[i];
    }
    apply_dispersion(psi, dz);
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= pot[i];
    if (sponge_.enabled)
        for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= std::exp(-sponge_.strength * dz * sponge_profile_[i]);
    w.z += dz;
}

std::vector<WaveField> Propagator::propagate(WaveField w, const FieldSliceView& med,
                                             std::span<const double> checkpoints, double dz) {
    if (!(dz > 0.0)) throw ArgumentError("step size must be positive");
    std::vector<WaveField> out;
    out.push_back(w);
    double prev = w.z;
    for (double target : checkpoints) {
        if (target < prev - 1e-12) throw ArgumentError("checkpoints must be nondecreasing and >= the current range");
        const double len = target - prev;
        if (len > 1e-12 * (1.0 + std::abs(target))) {
            const auto steps = static_cast<long long>(std::ceil(len / dz - 1e-9));
            const double h = len / static_cast<double>(steps);
            for (long long s = 0; s < steps; ++s) {
                w.z = prev + static_cast<double>(s) * h;
                step(w, med, h);
            }
        }
        w.z = target;
        prev = target;
        out.push_back(w);
    }
    return out;
}

WaveField step(WaveField w, const FieldSliceView& med, double dz) {
    Propagator p(w.grid, w.regime);
    p.step(w, med, dz);
    return w;
}

std::vector<WaveField> propagate(WaveField w, const FieldSliceView& med, double z_final, double dz,
                                 std::span<const double> checkpoints) {
    if (z_final < w.z) throw ArgumentError("z_final precedes the current range");
    if (z_final == w.z) return {w};
    std::vector<double> cps;
    for (double c : checkpoints)
        if (c > w.z && c < z_final) cps.push_back(c);
    std::sort(cps.begin(), cps.end());
    cps.push_back(z_final);
    Propagator p(w.grid, w.regime);
    return p.propagate(std::move(w), med, cps, dz);
}

WaveField conjugate_and_aperture(WaveField w, const Aperture& a) {
    for_each_point(w.grid, [&](std::size_t k, std::span<const double> x) { w.psi[k] = a(x) * std::conj(w.psi[k]); });
    return w;
}

WaveField gaussian_beam(const TransverseGrid& grid, const ScalingRegime& regime, std::array<double, 2> center,
                        double width, std::array<double, 2> p0, double amplitude) {
    check_grid(grid);
    if (!(width > 0.0)) throw ArgumentError("beam width must be positive");
    WaveField w{grid, std::vector<cplx>(grid.size()), 0.0, regime};
    for_each_point(grid, [&](std::size_t k, std::span<const double> x) {
        double r2 = 0.0;
        double ph = 0.0;
        for (std::size_t a = 0; a < x.size(); ++a) {
            r2 += (x[a] - center[a]) * (x[a] - center[a]);
            ph += p0[a] * x[a] / regime.s_w;
        }
        w.psi[k] = std::polar(amplitude * std::exp(-r2 / (4.0 * width * width)), ph);
    });
    return w;
}

WaveField plane_wave_segment(const TransverseGrid& grid, const ScalingRegime& regime, std::array<double, 2> center,
                             double half_width, double edge, std::array<double, 2> p0) {
    check_grid(grid);
    const Aperture env = Aperture::slab(center, half_width, edge);
    WaveField w{grid, std::vector<cplx>(grid.size()), 0.0, regime};
    for_each_point(grid, [&](std::size_t k, std::span<const double> x) {
        double ph = 0.0;
        for (std::size_t a = 0; a < x.size(); ++a) ph += p0[a] * x[a] / regime.s_w;
        w.psi[k] = std::polar(env(x), ph);
    });
    return w;
}

WaveField point_source(const TransverseGrid& grid, const ScalingRegime& regime, std::array<double, 2> center,
                       double width) {
    return gaussian_beam(grid, regime, center, width);
}

double edge_energy_fraction(const WaveField& w, double fraction) {
    const double L = w.grid.length();
    double edge = 0.0;
    double total = 0.0;
    for_each_point(w.grid, [&](std::size_t k, std::span<const double> x) {
        const double e = std::norm(w.psi[k]);
        total += e;
        for (std::size_t a = 0; a < x.size(); ++a) {
            const double from_edge = std::min(x[a] - w.grid.x0[a], w.grid.x0[a] + L - x[a]);
            if (from_edge < fraction * L) {
                edge += e;
                break;
            }
        }
    });
    return total > 0.0 ? edge / total : 0.0;
}

namespace {

nlohmann::json regime_json(const ScalingRegime& r) {
    return {{"theorem", to_string(r.theorem)}, {"eps", r.eps},       {"alpha", r.alpha},
            {"beta", r.beta},                  {"carrier_k", r.carrier_k}, {"out_of_range", r.out_of_range}};
}

}  // namespace

void write_field(const std::filesystem::path& path, const WaveField& w) {
    static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write field dump: " + path.string());
        out.write(reinterpret_cast<const char*>(w.psi.data()),
                  static_cast<std::streamsize>(w.psi.size() * sizeof(cplx)));
        if (!out) throw IoError("short write on field dump: " + path.string());
    }
    nlohmann::json side = {{"format", "complex128-le"},
                           {"dim", w.grid.dim},
                           {"n", {w.grid.n[0], w.grid.n[1]}},
                           {"dx", w.grid.dx},
                           {"x0", {w.grid.x0[0], w.grid.x0[1]}},
                           {"z", w.z},
                           {"regime", regime_json(w.regime)}};
    const auto sidecar = path.string() + ".json";
    std::ofstream js(sidecar);
    if (!js) throw IoError("cannot write sidecar: " + sidecar);
    js << side.dump(2) << '\n';
}

WaveField read_field(const std::filesystem::path& path) {
    const auto sidecar = path.string() + ".json";
    std::ifstream js(sidecar);
    if (!js) throw IoError("cannot read sidecar: " + sidecar);
    const auto side = nlohmann::json::parse(js);
    WaveField w;
    w.grid.dim = side.at("dim").get<int>();
    w.grid.n = {side.at("n")[0].get<int>(), side.at("n")[1].get<int>()};
    w.grid.dx = side.at("dx").get<double>();
    w.grid.x0 = {side.at("x0")[0].get<double>(), side.at("x0")[1].get<double>()};
    w.z = side.at("z").get<double>();
    const auto& r = side.at("regime");
    w.regime = regime_table(theorem_family_from_string(r.at("theorem").get<std::string>()), r.at("eps").get<double>(),
                            r.at("alpha").get<double>(), r.at("beta").get<double>(), r.at("carrier_k").get<double>(),
                            RegimeOptions{true});
    w.psi.resize(w.grid.size());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read field dump: " + path.string());
    in.read(reinterpret_cast<char*>(w.psi.data()), static_cast<std::streamsize>(w.psi.size() * sizeof(cplx)));
    if (!in) throw IoError("truncated field dump: " + path.string());
    return w;
}

}  // namespace parawave
