#include "parawave/wigner.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>

#include "parawave/errors.hpp"

namespace parawave {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<int> shape_of(const TransverseGrid& g) {
    if (g.dim == 1) return {g.n[0]};
    return {g.n[0], g.n[1]};
}

int wrap(long long i, int n) {
    auto r = i % n;
    if (r < 0) r += n;
    return static_cast<int>(r);
}

/// Ascending-p index of FFT slot k along an axis of n points.
int ascending(int k, int n) { return fft_index(k, n) + n / 2; }

std::array<double, 4> lagrange4(double t) {
    return {-t * (t - 1.0) * (t - 2.0) / 6.0, (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
            -(t + 1.0) * t * (t - 2.0) / 2.0, (t + 1.0) * t * (t - 1.0) / 6.0};
}

}  // namespace

double WignerField::cell() const {
    const double c = grid.dx * dp();
    return grid.dim == 2 ? c * c : c;
}

double WignerField::total() const {
    double s = 0.0;
    for (double v : w) s += v;
    return s * cell();
}

double WignerField::interpolate(std::span<const double> x, std::span<const double> p) const {
    const int d = grid.dim;
    if (static_cast<int>(x.size()) != d || static_cast<int>(p.size()) != d)
        throw ArgumentError("interpolation point dimension mismatch");
    // Axes 0..d-1 are x (periodic), d..2d-1 are p (zero outside the grid).
    std::array<std::array<int, 4>, 4> idx{};
    std::array<std::array<double, 4>, 4> wt{};
    const double h = dp();
    for (int a = 0; a < d; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        const int n = grid.n[ua];
        const double u = (x[ua] - grid.x0[ua]) / grid.dx;
        const double f = std::floor(u);
        wt[ua] = lagrange4(u - f);
        for (int s = 0; s < 4; ++s) idx[ua][static_cast<std::size_t>(s)] = wrap(static_cast<long long>(f) - 1 + s, n);
        const double v = p[ua] / h + n / 2;
        const double g = std::floor(v);
        wt[ua + static_cast<std::size_t>(d)] = lagrange4(v - g);
        for (int s = 0; s < 4; ++s) {
            const long long m = static_cast<long long>(g) - 1 + s;
            idx[ua + static_cast<std::size_t>(d)][static_cast<std::size_t>(s)] =
                (m < 0 || m >= n) ? -1 : static_cast<int>(m);
        }
    }
    const int axes = 2 * d;
    int combos = 1;
    for (int a = 0; a < axes; ++a) combos *= 4;
    double sum = 0.0;
    for (int c = 0; c < combos; ++c) {
        int r = c;
        double weight = 1.0;
        std::array<int, 4> pick{};
        bool skip = false;
        for (int a = 0; a < axes; ++a) {
            const int s = r % 4;
            r /= 4;
            pick[static_cast<std::size_t>(a)] = idx[static_cast<std::size_t>(a)][static_cast<std::size_t>(s)];
            weight *= wt[static_cast<std::size_t>(a)][static_cast<std::size_t>(s)];
            if (pick[static_cast<std::size_t>(a)] < 0) skip = true;
        }
        if (skip || weight == 0.0) continue;
        std::size_t xf = static_cast<std::size_t>(pick[0]);
        std::size_t pf = static_cast<std::size_t>(pick[static_cast<std::size_t>(d)]);
        if (d == 2) {
            xf = xf * static_cast<std::size_t>(grid.n[1]) + static_cast<std::size_t>(pick[1]);
            pf = pf * static_cast<std::size_t>(grid.n[1]) + static_cast<std::size_t>(pick[3]);
        }
        sum += weight * at(xf, pf);
    }
    return sum;
}

TestFunction TestFunction::gauss(int dim, std::array<double, 2> x0, std::array<double, 2> p0, double wx, double wp,
                                 double amplitude) {
    if (!(wx > 0.0) || !(wp > 0.0)) throw ArgumentError("test-function widths must be positive");
    TestFunction t;
    t.family = Family::GaussWindow;
    t.dim = dim;
    t.x0 = x0;
    t.p0 = p0;
    t.wx = wx;
    t.wp = wp;
    t.amplitude = amplitude;
    return t;
}

TestFunction TestFunction::cosine_bump(int dim, std::array<double, 2> x0, std::array<double, 2> p0, double wx,
                                       double wp, double amplitude) {
    auto t = gauss(dim, x0, p0, wx, wp, amplitude);
    t.family = Family::CosineBump;
    return t;
}

TestFunction TestFunction::constant(int dim, double value) {
    TestFunction t;
    t.family = Family::Constant;
    t.dim = dim;
    t.amplitude = value;
    return t;
}

TestFunction TestFunction::custom(int dim, Fn fn, std::array<double, 2> x0, std::array<double, 2> p0, double wx,
                                  double wp, std::string name) {
    if (!fn) throw ArgumentError("custom test function needs a callable");
    auto t = gauss(dim, x0, p0, wx, wp);
    t.family = Family::Custom;
    t.fn = std::move(fn);
    t.name = std::move(name);
    return t;
}

double TestFunction::operator()(std::span<const double> x, std::span<const double> p) const {
    switch (family) {
        case Family::Constant: return amplitude;
        case Family::GaussWindow: {
            double e = 0.0;
            for (int a = 0; a < dim; ++a) {
                const auto ua = static_cast<std::size_t>(a);
                const double u = (x[ua] - x0[ua]) / wx;
                const double v = (p[ua] - p0[ua]) / wp;
                if (std::abs(u) > 8.0 || std::abs(v) > 8.0) return 0.0;
                e += u * u + v * v;
            }
            return amplitude * std::exp(-0.5 * e);
        }
        case Family::CosineBump: {
            double v = amplitude;
            for (int a = 0; a < dim; ++a) {
                const auto ua = static_cast<std::size_t>(a);
                const double u = (x[ua] - x0[ua]) / wx;
                const double q = (p[ua] - p0[ua]) / wp;
                if (std::abs(u) >= 1.0 || std::abs(q) >= 1.0) return 0.0;
                const double cu = std::cos(kPi * u / 2.0);
                const double cq = std::cos(kPi * q / 2.0);
                v *= cu * cu * cq * cq;
            }
            return v;
        }
        case Family::Custom: {
            for (int a = 0; a < dim; ++a) {
                const auto ua = static_cast<std::size_t>(a);
                if (std::abs(x[ua] - x0[ua]) > wx || std::abs(p[ua] - p0[ua]) > wp) return 0.0;
            }
            return fn(x, p);
        }
    }
    return 0.0;
}

double TestFunction::x_radius() const {
    switch (family) {
        case Family::Constant: return std::numeric_limits<double>::infinity();
        case Family::GaussWindow: return 8.0 * wx;
        default: return wx;
    }
}

double TestFunction::p_radius() const {
    switch (family) {
        case Family::Constant: return std::numeric_limits<double>::infinity();
        case Family::GaussWindow: return 8.0 * wp;
        default: return wp;
    }
}

std::string TestFunction::id() const {
    if (!name.empty()) return name;
    char buf[160];
    switch (family) {
        case Family::Constant: std::snprintf(buf, sizeof buf, "const(%g)", amplitude); break;
        case Family::GaussWindow:
            std::snprintf(buf, sizeof buf, "gauss(x0=%g p0=%g wx=%g wp=%g)", x0[0], p0[0], wx, wp);
            break;
        case Family::CosineBump:
            std::snprintf(buf, sizeof buf, "cosbump(x0=%g p0=%g wx=%g wp=%g)", x0[0], p0[0], wx, wp);
            break;
        case Family::Custom: std::snprintf(buf, sizeof buf, "custom"); break;
    }
    return buf;
}

WignerRows::WignerRows(const TransverseGrid& grid, double scale)
    : grid_(grid), scale_(scale), plan_(shape_of(grid), FftDirection::Forward), buf_(grid.size()) {
    if (!(scale > 0.0)) throw ArgumentError("Wigner scale must be positive");
}

void WignerRows::row(std::span<const cplx> psi, std::size_t x_flat, std::span<double> out) {
    const int n0 = grid_.n[0];
    const int n1 = grid_.n[1];
    if (psi.size() != grid_.size() || out.size() != grid_.size()) throw ArgumentError("Wigner row size mismatch");
    const int j0 = static_cast<int>(x_flat / static_cast<std::size_t>(n1));
    const int j1 = static_cast<int>(x_flat % static_cast<std::size_t>(n1));
    std::size_t idx = 0;
    for (int m0 = 0; m0 < n0; ++m0) {
        const int o0 = fft_index(m0, n0);
        const int a0 = j0 + o0;
        const int b0 = j0 - o0;
        const bool in0 = a0 >= 0 && a0 < n0 && b0 >= 0 && b0 < n0;
        for (int m1 = 0; m1 < n1; ++m1, ++idx) {
            const int o1 = grid_.dim == 2 ? fft_index(m1, n1) : 0;
            const int a1 = j1 + o1;
            const int b1 = j1 - o1;
            if (!in0 || a1 < 0 || a1 >= n1 || b1 < 0 || b1 >= n1) {
                buf_[idx] = 0.0;
                continue;
            }
            buf_[idx] = psi[static_cast<std::size_t>(a0) * static_cast<std::size_t>(n1) + static_cast<std::size_t>(a1)] *
                        std::conj(psi[static_cast<std::size_t>(b0) * static_cast<std::size_t>(n1) + static_cast<std::size_t>(b1)]);
        }
    }
    plan_.execute(buf_);
    const double dy = 2.0 * grid_.dx / scale_;
    const double norm = grid_.dim == 2 ? dy * dy / (4.0 * kPi * kPi) : dy / (2.0 * kPi);
    idx = 0;
    for (int k0 = 0; k0 < n0; ++k0) {
        const auto r0 = static_cast<std::size_t>(ascending(k0, n0));
        for (int k1 = 0; k1 < n1; ++k1, ++idx) {
            const auto r1 = grid_.dim == 2 ? static_cast<std::size_t>(ascending(k1, n1)) : 0;
            out[r0 * static_cast<std::size_t>(n1) + r1] = buf_[idx].real() * norm;
        }
    }
}

WignerField wigner_transform(const WaveField& w, double scale) {
    WignerField W;
    W.grid = w.grid;
    W.scale = scale;
    const std::size_t n = w.grid.size();
    W.w.assign(n * n, 0.0);
    WignerRows rows(w.grid, scale);
    for (std::size_t j = 0; j < n; ++j) rows.row(w.psi, j, std::span<double>(W.w.data() + j * n, n));
    return W;
}

WignerField wigner_transform(const WaveField& w) { return wigner_transform(w, w.regime.s_w); }

void check_support(const TransverseGrid& grid, double scale, const TestFunction& th) {
    if (th.family == TestFunction::Family::Constant) return;
    if (th.dim != grid.dim) throw ConfigurationError("test function dimension does not match the grid");
    const double pmax = grid.n[0] / 2 * scale * kPi / grid.length();
    for (int a = 0; a < grid.dim; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        const double lo = grid.x0[ua];
        const double hi = grid.x0[ua] + grid.length();
        if (th.x0[ua] - th.x_radius() < lo || th.x0[ua] + th.x_radius() > hi)
            throw ConfigurationError("test function " + th.id() + " x-support escapes the transverse grid");
        if (std::abs(th.p0[ua]) + th.p_radius() > pmax)
            throw ConfigurationError("test function " + th.id() + " p-support escapes the momentum grid");
    }
}

double weak_observable(const WignerField& W, const TestFunction& th) {
    check_support(W.grid, W.scale, th);
    const auto& g = W.grid;
    const std::size_t n = g.size();
    std::array<double, 2> x{};
    std::array<double, 2> p{};
    const auto d = static_cast<std::size_t>(g.dim);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        x[0] = g.x(0, static_cast<int>(j / static_cast<std::size_t>(g.n[1])));
        if (d == 2) x[1] = g.x(1, static_cast<int>(j % static_cast<std::size_t>(g.n[1])));
        for (std::size_t m = 0; m < n; ++m) {
            p[0] = W.p_axis(0, static_cast<int>(m / static_cast<std::size_t>(g.n[1])));
            if (d == 2) p[1] = W.p_axis(1, static_cast<int>(m % static_cast<std::size_t>(g.n[1])));
            const double t = th(std::span<const double>(x.data(), d), std::span<const double>(p.data(), d));
            if (t != 0.0) sum += t * W.w[j * n + m];
        }
    }
    return sum * W.cell();
}

std::vector<double> weak_observables(const WaveField& w, std::span<const TestFunction> ths) {
    const auto& g = w.grid;
    const double s = w.regime.s_w;
    for (const auto& th : ths) check_support(g, s, th);
    const std::size_t n = g.size();
    const auto d = static_cast<std::size_t>(g.dim);
    WignerRows rows(g, s);
    const double dp = rows.dp();
    const double cell = d == 2 ? g.dx * g.dx * dp * dp : g.dx * dp;
    std::vector<double> out(ths.size(), 0.0);
    std::vector<double> row(n);
    std::array<double, 2> x{};
    std::array<double, 2> p{};
    for (std::size_t j = 0; j < n; ++j) {
        x[0] = g.x(0, static_cast<int>(j / static_cast<std::size_t>(g.n[1])));
        if (d == 2) x[1] = g.x(1, static_cast<int>(j % static_cast<std::size_t>(g.n[1])));
        bool needed = false;
        for (const auto& th : ths) {
            bool inside = true;
            for (std::size_t a = 0; a < d; ++a)
                if (std::abs(x[a] - th.x0[a]) > th.x_radius()) inside = false;
            needed = needed || inside || th.family == TestFunction::Family::Constant;
        }
        if (!needed) continue;
        rows.row(w.psi, j, row);
        for (std::size_t t = 0; t < ths.size(); ++t) {
            const auto& th = ths[t];
            double acc = 0.0;
            for (std::size_t m = 0; m < n; ++m) {
                p[0] = (static_cast<int>(m / static_cast<std::size_t>(g.n[1])) - g.n[0] / 2) * dp;
                if (d == 2) p[1] = (static_cast<int>(m % static_cast<std::size_t>(g.n[1])) - g.n[1] / 2) * dp;
                if (th.family != TestFunction::Family::Constant && std::abs(p[0] - th.p0[0]) > th.p_radius()) continue;
                const double v = th(std::span<const double>(x.data(), d), std::span<const double>(p.data(), d));
                if (v != 0.0) acc += v * row[m];
            }
            out[t] += acc * cell;
        }
    }
    return out;
}

double marginal_defect(const WaveField& w) {
    const auto& g = w.grid;
    const std::size_t n = g.size();
    WignerRows rows(g, w.regime.s_w);
    const double dp = rows.dp();
    const double dpd = g.dim == 2 ? dp * dp : dp;
    std::vector<double> row(n);
    double peak = 0.0;
    for (const auto& v : w.psi) peak = std::max(peak, std::norm(v));
    if (peak == 0.0) return 0.0;
    double worst = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (std::norm(w.psi[j]) < 1e-6 * peak) continue;
        rows.row(w.psi, j, row);
        double s = 0.0;
        for (double v : row) s += v;
        worst = std::max(worst, std::abs(s * dpd - std::norm(w.psi[j])));
    }
    return worst / peak;
}

std::vector<double> moyal_apply(const WignerField& W, const FieldSliceView& med, double z,
                                const ScalingRegime& regime) {
    const auto& g = W.grid;
    const std::size_t n = g.size();
    const int n0 = g.n[0];
    const int n1 = g.n[1];
    const auto d = static_cast<std::size_t>(g.dim);
    if (med.dim() != g.dim) throw ArgumentError("medium and Wigner grid dimensions differ");
    const auto shape = shape_of(g);
    FftPlan inverse(shape, FftDirection::Backward);
    FftPlan forward(shape, FftDirection::Forward);
    std::vector<cplx> buf(n);
    std::vector<double> out(n * n, 0.0);
    const double dp = W.dp();
    const double dy = 2.0 * g.dx / W.scale;
    const double to_y = d == 2 ? dp * dp : dp;
    const double back = d == 2 ? dy * dy / (4.0 * kPi * kPi) : dy / (2.0 * kPi);

    // delta_v is a function of (x_j, y_m) only; tabulate per row.
    std::vector<double> dv(n);
    std::array<double, 2> xt{};
    std::array<double, 2> y{};
    for (std::size_t j = 0; j < n; ++j) {
        xt[0] = g.x(0, static_cast<int>(j / static_cast<std::size_t>(n1))) / med.x_scale();
        if (d == 2) xt[1] = g.x(1, static_cast<int>(j % static_cast<std::size_t>(n1))) / med.x_scale();
        std::size_t idx = 0;
        for (int m0 = 0; m0 < n0; ++m0) {
            const int o0 = fft_index(m0, n0);
            for (int m1 = 0; m1 < n1; ++m1, ++idx) {
                const int o1 = d == 2 ? fft_index(m1, n1) : 0;
                const bool nyquist = (2 * o0 == -n0) || (d == 2 && 2 * o1 == -n1);
                if (nyquist) {
                    dv[idx] = 0.0;
                    continue;
                }
                y[0] = o0 * dy;
                y[1] = o1 * dy;
                dv[idx] = delta_v(med, z, std::span<const double>(xt.data(), d), std::span<const double>(y.data(), d),
                                  regime);
            }
        }
        // FFT order in p.
        idx = 0;
        for (int k0 = 0; k0 < n0; ++k0) {
            const auto r0 = static_cast<std::size_t>(ascending(k0, n0));
            for (int k1 = 0; k1 < n1; ++k1, ++idx) {
                const auto r1 = d == 2 ? static_cast<std::size_t>(ascending(k1, n1)) : 0;
                buf[idx] = W.w[j * n + r0 * static_cast<std::size_t>(n1) + r1];
            }
        }
        inverse.execute(buf);
        for (std::size_t m = 0; m < n; ++m) buf[m] *= cplx(0.0, -dv[m] * to_y);
        forward.execute(buf);
        idx = 0;
        for (int k0 = 0; k0 < n0; ++k0) {
            const auto r0 = static_cast<std::size_t>(ascending(k0, n0));
            for (int k1 = 0; k1 < n1; ++k1, ++idx) {
                const auto r1 = d == 2 ? static_cast<std::size_t>(ascending(k1, n1)) : 0;
                out[j * n + r0 * static_cast<std::size_t>(n1) + r1] = buf[idx].real() * back;
            }
        }
    }
    return out;
}

WignerField mirror_wigner(std::span<const WaveField> columns, std::span<const std::array<double, 2>> positions,
                          std::span<const double> weights, const Aperture& a) {
    if (columns.empty()) throw ArgumentError("mirror Wigner needs at least one column");
    if (columns.size() > 64) throw ArgumentError("mirror Wigner supports at most 64 columns");
    if (positions.size() != columns.size() || weights.size() != columns.size())
        throw ArgumentError("columns, positions and weights differ in length");
    const auto& g = columns[0].grid;
    WignerField out;
    out.grid = g;
    out.scale = columns[0].regime.s_w;
    out.w.assign(g.size() * g.size(), 0.0);
    const auto d = static_cast<std::size_t>(g.dim);
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (!(columns[c].grid == g)) throw ArgumentError("mirror columns live on different grids");
        const double coef = weights[c] * a(std::span<const double>(positions[c].data(), d));
        if (coef == 0.0) continue;
        WaveField conj = columns[c];
        for (auto& v : conj.psi) v = std::conj(v);
        const WignerField W = wigner_transform(conj, out.scale);
        for (std::size_t i = 0; i < out.w.size(); ++i) out.w[i] += coef * W.w[i];
    }
    return out;
}

WaveField point_source_column(const TransverseGrid& grid, const ScalingRegime& regime, std::array<double, 2> c,
                              double width) {
    const double dim = grid.dim;
    const double amp = std::pow(regime.s_w, dim / 2.0) / std::pow(2.0 * kPi * width * width, dim / 2.0);
    // Psi itself is the Gaussian of sd `width`, so |Psi|^2 has sd width / sqrt(2).
    return gaussian_beam(grid, regime, c, width / std::sqrt(2.0), {0.0, 0.0}, amp);
}

void write_wigner(const std::filesystem::path& path, const WignerField& W) {
    static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write Wigner dump: " + path.string());
        out.write(reinterpret_cast<const char*>(W.w.data()), static_cast<std::streamsize>(W.w.size() * sizeof(double)));
        if (!out) throw IoError("short write on Wigner dump: " + path.string());
    }
    const nlohmann::json side = {{"format", "f64-le"},
                                 {"layout", "x-major, p ascending"},
                                 {"dim", W.grid.dim},
                                 {"n", {W.grid.n[0], W.grid.n[1]}},
                                 {"dx", W.grid.dx},
                                 {"x0", {W.grid.x0[0], W.grid.x0[1]}},
                                 {"scale", W.scale},
                                 {"dp", W.dp()},
                                 {"p_min", W.p_axis(0, 0)}};
    const auto sidecar = path.string() + ".json";
    std::ofstream js(sidecar);
    if (!js) throw IoError("cannot write sidecar: " + sidecar);
    js << side.dump(2) << '\n';
}

}  // namespace parawave
