#include "parawave/medium.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>

#include "parawave/errors.hpp"
#include "parawave/fft.hpp"
#include "parawave/rng.hpp"

namespace parawave {

namespace {

constexpr double kPi = std::numbers::pi;

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

/// Smallest 2^a 3^b 5^c >= n.
int smooth_size(int n) {
    for (int m = std::max(n, 2);; ++m) {
        int r = m;
        for (int p : {2, 3, 5})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

int lag_index(double lag, double h, int n, const char* axis) {
    const double u = lag / h;
    const double r = std::round(u);
    if (std::abs(u - r) > 1e-9 * (1.0 + std::abs(u)))
        throw ArgumentError(std::string("lag along ") + axis + " is not a multiple of the grid spacing");
    auto i = static_cast<long long>(r) % n;
    if (i < 0) i += n;
    return static_cast<int>(i);
}

/// Cubic Lagrange weights on nodes -1, 0, 1, 2 at fractional offset t.
std::array<double, 4> lagrange4(double t) {
    return {-t * (t - 1.0) * (t - 2.0) / 6.0, (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
            -(t + 1.0) * t * (t - 2.0) / 2.0, (t + 1.0) * t * (t - 1.0) / 6.0};
}

/// Splits u into an integer node and a fraction, snapping near-integers so
/// node evaluations are exact.
void split(double u, long long& i, double& t) {
    const double r = std::round(u);
    if (std::abs(u - r) <= 1e-10 * (1.0 + std::abs(u))) {
        i = static_cast<long long>(r);
        t = 0.0;
        return;
    }
    const double f = std::floor(u);
    i = static_cast<long long>(f);
    t = u - f;
}

int wrap(long long i, int n) {
    auto r = i % n;
    if (r < 0) r += n;
    return static_cast<int>(r);
}

}  // namespace

void validate_medium_grid(const SpectralDensity& s, const MediumGridSpec& g) {
    if (g.dim != 1 && g.dim != 2) throw ConfigurationError("medium transverse dimension must be 1 or 2");
    if (g.dim != s.dim()) throw ConfigurationError("medium dimension does not match the spectrum dimension");
    if (g.nz < 2 || g.nx[0] < 2 || (g.dim == 2 && g.nx[1] < 2) || (g.dim == 1 && g.nx[1] != 1))
        throw ConfigurationError("medium grid needs at least two points per axis");
    if (!(g.dz > 0.0) || !(g.dx > 0.0)) throw ConfigurationError("medium grid spacings must be positive");
    const double w0 = s.support_w();
    const double k0 = s.support_k();
    if (g.dz > kPi / (2.0 * w0) * (1.0 + 1e-12))
        throw ConfigurationError("medium grid under-resolved: dz_med = " + num(g.dz) + " exceeds pi/(2 w0) = " +
                                 num(kPi / (2.0 * w0)));
    if (g.dx > kPi / (2.0 * k0) * (1.0 + 1e-12))
        throw ConfigurationError("medium grid under-resolved: dx_med = " + num(g.dx) + " exceeds pi/(2 k0) = " +
                                 num(kPi / (2.0 * k0)));
    if (g.nz * g.dz < 8.0 / w0 * (1.0 - 1e-12))
        throw ConfigurationError("medium box too short: nz*dz_med = " + num(g.nz * g.dz) + " is below 8/w0 = " +
                                 num(8.0 / w0));
    for (int a = 0; a < g.dim; ++a)
        if (g.nx[static_cast<std::size_t>(a)] * g.dx < 8.0 / k0 * (1.0 - 1e-12))
            throw ConfigurationError("medium box too narrow: nx*dx_med = " +
                                     num(g.nx[static_cast<std::size_t>(a)] * g.dx) + " is below 8/k0 = " +
                                     num(8.0 / k0));
}

MediumGridSpec plan_medium_grid(const ScalingRegime& regime, const SpectralDensity& s, int dim, int nx,
                                double dx_solver, double z_final, double z_resolution) {
    MediumGridSpec g;
    g.dim = dim;
    g.nx = {nx, dim == 2 ? nx : 1};
    g.dx = dx_solver / std::pow(regime.eps, regime.x_power);
    const double w0 = s.support_w();
    g.dz = std::min(z_resolution / w0, kPi / (2.0 * w0));
    const double extent = z_final / std::pow(regime.eps, regime.z_power);
    int nz = static_cast<int>(std::ceil(extent / g.dz)) + 2;
    nz = std::max(nz, static_cast<int>(std::ceil(8.0 / (w0 * g.dz))) + 1);
    g.nz = smooth_size(nz);
    return g;
}

MediumRealization synthesize(const SpectralDensity& s, const MediumGridSpec& grid, std::uint64_t seed,
                             std::uint64_t realization) {
    validate_medium_grid(s, grid);
    MediumRealization m;
    m.grid = grid;
    m.seed = seed;
    m.realization = realization;
    m.spectrum_id = s.id();
    m.values.assign(grid.size(), 0.0);
    if (s.amplitude() == 0.0) return m;

    std::vector<int> shape{grid.nz, grid.nx[0]};
    if (grid.dim == 2) shape.push_back(grid.nx[1]);
    Philox4x32 rng(seed, stream_id({static_cast<std::uint64_t>(StreamPurpose::Medium), realization}));
    for (auto& v : m.values) v = standard_normal(rng);

    const RealFftPlan plan(shape);
    std::vector<cplx> spec(plan.complex_size());
    plan.forward(m.values, spec);

    const double dw = 2.0 * kPi / (grid.nz * grid.dz);
    const double dk0 = 2.0 * kPi / (grid.nx[0] * grid.dx);
    const double dk1 = grid.dim == 2 ? 2.0 * kPi / (grid.nx[1] * grid.dx) : 1.0;
    const double n_total = static_cast<double>(grid.size());
    const double cell = dw * dk0 * dk1 / n_total;
    const int last = shape.back();
    const int half = last / 2 + 1;
    const double w0 = s.support_w();
    std::size_t idx = 0;
    std::array<double, 2> k{};
    for (int iz = 0; iz < grid.nz; ++iz) {
        const double w = dw * fft_index(iz, grid.nz);
        const bool row_zero = std::abs(w) >= w0;
        if (grid.dim == 1) {
            for (int j = 0; j < half; ++j, ++idx) {
                k[0] = dk0 * j;
                const double phi = row_zero ? 0.0 : s(w, std::span<const double>(k.data(), 1));
                spec[idx] *= std::sqrt(phi * cell);
            }
        } else {
            for (int i = 0; i < grid.nx[0]; ++i) {
                k[0] = dk0 * fft_index(i, grid.nx[0]);
                for (int j = 0; j < half; ++j, ++idx) {
                    k[1] = dk1 * j;
                    const double phi = row_zero ? 0.0 : s(w, std::span<const double>(k.data(), 2));
                    spec[idx] *= std::sqrt(phi * cell);
                }
            }
        }
    }
    plan.backward(spec, m.values);
    return m;
}

double lattice_covariance(const SpectralDensity& s, const MediumGridSpec& grid, double lag_z,
                          std::span<const double> lag_x) {
    if (static_cast<int>(lag_x.size()) != grid.dim) throw ArgumentError("lag dimension mismatch");
    const double dw = 2.0 * kPi / (grid.nz * grid.dz);
    const double dk0 = 2.0 * kPi / (grid.nx[0] * grid.dx);
    const double dk1 = grid.dim == 2 ? 2.0 * kPi / (grid.nx[1] * grid.dx) : 1.0;
    double sum = 0.0;
    std::array<double, 2> k{};
    for (int iz = 0; iz < grid.nz; ++iz) {
        const double w = dw * fft_index(iz, grid.nz);
        if (std::abs(w) >= s.support_w()) continue;
        for (int i = 0; i < grid.nx[0]; ++i) {
            k[0] = dk0 * fft_index(i, grid.nx[0]);
            for (int j = 0; j < grid.nx[1]; ++j) {
                k[1] = grid.dim == 2 ? dk1 * fft_index(j, grid.nx[1]) : 0.0;
                const auto ks = std::span<const double>(k.data(), static_cast<std::size_t>(grid.dim));
                const double phi = s(w, ks);
                if (phi == 0.0) continue;
                double phase = w * lag_z + k[0] * lag_x[0];
                if (grid.dim == 2) phase += k[1] * lag_x[1];
                sum += phi * std::cos(phase);
            }
        }
    }
    return sum * dw * dk0 * dk1;
}

double covariance_model(const SpectralDensity& s, double lag_z, std::span<const double> lag_x,
                        const QuadratureConfig& cfg) {
    if (static_cast<int>(lag_x.size()) != s.dim()) throw ArgumentError("lag dimension mismatch");
    const double K = s.support_k();
    const std::array<double, 3> lo{-K, -K, -K};
    const std::array<double, 3> hi{K, K, K};
    const auto n = lag_x.size();
    return integrate_box(
        [&](std::span<const double> k) {
            double ph = 0.0;
            for (std::size_t i = 0; i < n; ++i) ph += k[i] * lag_x[i];
            const double c = std::cos(ph);
            if (c == 0.0) return 0.0;
            return c * covariance_transform(s, lag_z, k, cfg);
        },
        std::span<const double>(lo.data(), n), std::span<const double>(hi.data(), n), cfg);
}

CovarianceEstimate empirical_covariance(std::span<const MediumRealization> ens, double lag_z,
                                        std::span<const double> lag_x) {
    if (ens.size() < 2) throw ArgumentError("empirical covariance needs at least two realizations");
    const MediumGridSpec& g = ens[0].grid;
    for (const auto& m : ens)
        if (!(m.grid == g)) throw ArgumentError("realizations live on different grids");
    if (static_cast<int>(lag_x.size()) != g.dim) throw ArgumentError("lag dimension mismatch");
    const int mz = lag_index(lag_z, g.dz, g.nz, "z");
    const int mx = lag_index(lag_x[0], g.dx, g.nx[0], "x");
    const int my = g.dim == 2 ? lag_index(lag_x[1], g.dx, g.nx[1], "y") : 0;
    std::vector<double> per(ens.size());
    for (std::size_t r = 0; r < ens.size(); ++r) {
        const auto& m = ens[r];
        double sum = 0.0;
        for (int iz = 0; iz < g.nz; ++iz) {
            const int jz = (iz + mz) % g.nz;
            for (int ix = 0; ix < g.nx[0]; ++ix) {
                const int jx = (ix + mx) % g.nx[0];
                for (int iy = 0; iy < g.nx[1]; ++iy) sum += m.at(iz, ix, iy) * m.at(jz, jx, (iy + my) % g.nx[1]);
            }
        }
        per[r] = sum / static_cast<double>(g.size());
    }
    double mean = 0.0;
    for (double v : per) mean += v;
    mean /= static_cast<double>(per.size());
    double var = 0.0;
    for (double v : per) var += (v - mean) * (v - mean);
    var /= static_cast<double>(per.size() - 1);
    return {mean, std::sqrt(var / static_cast<double>(per.size()))};
}

FieldSliceView::FieldSliceView(std::shared_ptr<const MediumRealization> medium, double z_scale, double x_scale)
    : medium_(std::move(medium)), z_scale_(z_scale), x_scale_(x_scale) {
    if (!medium_) throw ArgumentError("null medium");
    if (!(z_scale > 0.0) || !(x_scale > 0.0)) throw ArgumentError("view scales must be positive");
    dim_ = medium_->grid.dim;
}

FieldSliceView::FieldSliceView(std::shared_ptr<const MediumRealization> medium, const ScalingRegime& regime)
    : FieldSliceView(std::move(medium), std::pow(regime.eps, regime.z_power), std::pow(regime.eps, regime.x_power)) {}

FieldSliceView::FieldSliceView(Analytic fn, int dim, double z_scale, double x_scale)
    : fn_(std::move(fn)), dim_(dim), z_scale_(z_scale), x_scale_(x_scale) {
    if (!fn_) throw ArgumentError("null analytic medium");
    if (!(z_scale > 0.0) || !(x_scale > 0.0)) throw ArgumentError("view scales must be positive");
}

void FieldSliceView::check_z(double z_med) const {
    const double ext = medium_->grid.z_extent();
    const double tol = 1e-9 * (1.0 + ext);
    if (!(z_med >= -tol && z_med <= ext + tol))
        throw RangeError("medium slab exhausted: z_med = " + num(z_med) + " outside [0, " + num(ext) + "]");
}

double FieldSliceView::interp_x(int iz, std::span<const double> x_med) const {
    const auto& g = medium_->grid;
    long long i0 = 0;
    double t0 = 0.0;
    split(x_med[0] / g.dx, i0, t0);
    if (g.dim == 1) {
        if (t0 == 0.0) return medium_->at(iz, wrap(i0, g.nx[0]));
        const auto w = lagrange4(t0);
        double v = 0.0;
        for (int a = 0; a < 4; ++a) v += w[static_cast<std::size_t>(a)] * medium_->at(iz, wrap(i0 - 1 + a, g.nx[0]));
        return v;
    }
    long long i1 = 0;
    double t1 = 0.0;
    split(x_med[1] / g.dx, i1, t1);
    const std::array<double, 4> unit{0.0, 1.0, 0.0, 0.0};
    const auto wa = t0 == 0.0 ? unit : lagrange4(t0);
    const auto wb = t1 == 0.0 ? unit : lagrange4(t1);
    double v = 0.0;
    for (int a = 0; a < 4; ++a) {
        if (wa[static_cast<std::size_t>(a)] == 0.0) continue;
        const int ia = wrap(i0 - 1 + a, g.nx[0]);
        for (int b = 0; b < 4; ++b) {
            if (wb[static_cast<std::size_t>(b)] == 0.0) continue;
            v += wa[static_cast<std::size_t>(a)] * wb[static_cast<std::size_t>(b)] *
                 medium_->at(iz, ia, wrap(i1 - 1 + b, g.nx[1]));
        }
    }
    return v;
}

double FieldSliceView::at_medium(double z_med, std::span<const double> x_med) const {
    if (static_cast<int>(x_med.size()) != dim_) throw ArgumentError("medium point dimension mismatch");
    if (fn_) return fn_(z_med, x_med);
    check_z(z_med);
    const auto& g = medium_->grid;
    long long iz = 0;
    double t = 0.0;
    split(z_med / g.dz, iz, t);
    iz = std::clamp<long long>(iz, 0, g.nz - 1);
    if (t == 0.0) return interp_x(static_cast<int>(iz), x_med);
    if (iz >= g.nz - 1) {
        iz = g.nz - 2;
        t = 1.0;
    }
    return (1.0 - t) * interp_x(static_cast<int>(iz), x_med) + t * interp_x(static_cast<int>(iz) + 1, x_med);
}

double FieldSliceView::operator()(double z, std::span<const double> x) const {
    std::array<double, 2> xm{};
    for (std::size_t i = 0; i < x.size() && i < 2; ++i) xm[i] = x[i] / x_scale_;
    return at_medium(to_med_z(z), std::span<const double>(xm.data(), x.size()));
}

void FieldSliceView::sample_grid(double z, std::span<const int> n, std::span<const double> x0, double dx,
                                 std::span<double> out) const {
    if (static_cast<int>(n.size()) != dim_ || static_cast<int>(x0.size()) != dim_)
        throw ArgumentError("sample_grid dimension mismatch");
    std::size_t total = 1;
    for (int v : n) total *= static_cast<std::size_t>(v);
    if (out.size() != total) throw ArgumentError("sample_grid output size mismatch");
    const double z_med = to_med_z(z);
    if (medium_) {
        const auto& g = medium_->grid;
        const double h = dx / x_scale_;
        bool aligned = std::abs(h - g.dx) <= 1e-9 * g.dx;
        std::array<int, 2> off{};
        for (int a = 0; a < dim_ && aligned; ++a) {
            const double u = x0[static_cast<std::size_t>(a)] / x_scale_ / g.dx;
            long long i = 0;
            double t = 0.0;
            split(u, i, t);
            aligned = t == 0.0;
            off[static_cast<std::size_t>(a)] = wrap(i, g.nx[static_cast<std::size_t>(a)]);
        }
        if (aligned) {
            check_z(z_med);
            long long iz = 0;
            double t = 0.0;
            split(z_med / g.dz, iz, t);
            iz = std::clamp<long long>(iz, 0, g.nz - 1);
            if (t != 0.0 && iz >= g.nz - 1) {
                iz = g.nz - 2;
                t = 1.0;
            }
            const int za = static_cast<int>(iz);
            const int zb = t == 0.0 ? za : za + 1;
            const int n1 = dim_ == 2 ? n[1] : 1;
            std::size_t idx = 0;
            for (int i = 0; i < n[0]; ++i) {
                const int mi = (off[0] + i) % g.nx[0];
                for (int j = 0; j < n1; ++j, ++idx) {
                    const int mj = dim_ == 2 ? (off[1] + j) % g.nx[1] : 0;
                    const double a = medium_->at(za, mi, mj);
                    out[idx] = t == 0.0 ? a : (1.0 - t) * a + t * medium_->at(zb, mi, mj);
                }
            }
            return;
        }
    }
    std::array<double, 2> xm{};
    const auto xs = std::span<const double>(xm.data(), static_cast<std::size_t>(dim_));
    const int n1 = dim_ == 2 ? n[1] : 1;
    std::size_t idx = 0;
    for (int i = 0; i < n[0]; ++i) {
        xm[0] = (x0[0] + i * dx) / x_scale_;
        for (int j = 0; j < n1; ++j, ++idx) {
            if (dim_ == 2) xm[1] = (x0[1] + j * dx) / x_scale_;
            out[idx] = at_medium(z_med, xs);
        }
    }
}

FieldSliceView FieldSliceView::reversed(double z_top) const {
    FieldSliceView r = *this;
    r.z_origin_ = to_med_z(z_top);
    r.z_sign_ = -z_sign_;
    return r;
}

double FieldSliceView::z_max() const {
    if (fn_) return std::numeric_limits<double>::infinity();
    const double ext = medium_->grid.z_extent();
    return z_sign_ > 0.0 ? (ext - z_origin_) * z_scale_ : z_origin_ * z_scale_;
}

double delta_v(const FieldSliceView& view, double z, std::span<const double> x_tilde, std::span<const double> y,
               const ScalingRegime& regime) {
    const auto d = static_cast<std::size_t>(view.dim());
    if (x_tilde.size() != d || y.size() != d) throw ArgumentError("delta_v dimension mismatch");
    const double f = regime.moyal_shift;
    std::array<double, 2> plus{};
    std::array<double, 2> minus{};
    for (std::size_t i = 0; i < d; ++i) {
        const double h = f * y[i] / 2.0;
        plus[i] = x_tilde[i] + h;
        minus[i] = x_tilde[i] - h;
    }
    const double zm = view.medium_z(z);
    return (view.at_medium(zm, std::span<const double>(plus.data(), d)) -
            view.at_medium(zm, std::span<const double>(minus.data(), d))) /
           f;
}

namespace {

constexpr char kMagic[8] = {'P', 'W', 'M', 'E', 'D', '0', '0', '1'};

template <typename T>
void put(std::ofstream& out, T v) {
    static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

}  // namespace

void write_medium(const std::filesystem::path& path, const MediumRealization& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write medium dump: " + path.string());
    out.write(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.grid.dim));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.grid.nz));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.grid.nx[0]));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.grid.nx[1]));
    put<double>(out, m.grid.dz);
    put<double>(out, m.grid.dx);
    put<std::uint64_t>(out, m.seed);
    put<std::uint64_t>(out, m.realization);
    out.write(reinterpret_cast<const char*>(m.values.data()),
              static_cast<std::streamsize>(m.values.size() * sizeof(double)));
    if (!out) throw IoError("short write on medium dump: " + path.string());
}

MediumRealization read_medium(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read medium dump: " + path.string());
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw IoError("not a medium dump: " + path.string());
    MediumRealization m;
    m.grid.dim = static_cast<int>(get<std::uint32_t>(in));
    m.grid.nz = static_cast<int>(get<std::uint32_t>(in));
    m.grid.nx[0] = static_cast<int>(get<std::uint32_t>(in));
    m.grid.nx[1] = static_cast<int>(get<std::uint32_t>(in));
    m.grid.dz = get<double>(in);
    m.grid.dx = get<double>(in);
    m.seed = get<std::uint64_t>(in);
    m.realization = get<std::uint64_t>(in);
    m.values.resize(m.grid.size());
    in.read(reinterpret_cast<char*>(m.values.data()), static_cast<std::streamsize>(m.values.size() * sizeof(double)));
    if (!in) throw IoError("truncated medium dump: " + path.string());
    return m;
}

}  // namespace parawave
