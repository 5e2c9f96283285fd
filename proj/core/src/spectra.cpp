#include "parawave/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "parawave/errors.hpp"

namespace parawave {

namespace {

constexpr double kPi = std::numbers::pi;

using Vec = std::array<double, kMaxDim>;

Vec to_vec(std::span<const double> k) {
    Vec v{};
    std::copy(k.begin(), k.end(), v.begin());
    return v;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Flip k so that its first nonzero component is positive.
void canonicalize(Vec& k, int dim) {
    for (int i = 0; i < dim; ++i) {
        if (k[static_cast<std::size_t>(i)] == 0.0) continue;
        if (k[static_cast<std::size_t>(i)] < 0.0)
            for (int j = 0; j < dim; ++j) k[static_cast<std::size_t>(j)] = -k[static_cast<std::size_t>(j)];
        return;
    }
}

double bump_integral() {
    static const double value = integrate_1d(bump_profile, -1.0, 1.0, QuadratureConfig{1e-15, 20, 0});
    return value;
}

void check_dim(const SpectralDensity& s, std::size_t n) {
    if (static_cast<int>(n) != s.dim())
        throw ArgumentError("wavevector has length " + std::to_string(n) + ", spectrum dimension is " +
                            std::to_string(s.dim()));
}

/// Index of the interval [nodes[i], nodes[i+1]] containing x, or -1.
int locate(const std::vector<double>& nodes, double x, double& frac) {
    if (nodes.size() == 1) {
        frac = 0.0;
        return x == nodes[0] ? 0 : -1;
    }
    if (x < nodes.front() || x > nodes.back()) return -1;
    auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
    auto i = static_cast<int>(it - nodes.begin()) - 1;
    i = std::clamp(i, 0, static_cast<int>(nodes.size()) - 2);
    const double a = nodes[static_cast<std::size_t>(i)];
    const double b = nodes[static_cast<std::size_t>(i) + 1];
    frac = (x - a) / (b - a);
    return i;
}

}  // namespace

double bump_profile(double t) {
    const double a = std::abs(t);
    if (a >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - a * a));
}

double Mat3::trace() const {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += (*this)(i, i);
    return s;
}

double Mat3::max_abs() const {
    double s = 0.0;
    for (double v : m) s = std::max(s, std::abs(v));
    return s;
}

std::string to_string(SpectrumFamily family) {
    switch (family) {
        case SpectrumFamily::SmoothBump: return "smooth_bump";
        case SpectrumFamily::ProductBump: return "product_bump";
        case SpectrumFamily::Tabulated: return "tabulated";
        case SpectrumFamily::Custom: return "custom";
    }
    return "?";
}

std::string to_string(KernelKind kind) {
    switch (kind) {
        case KernelKind::Rad2: return "rad2";
        case KernelKind::Rad: return "rad";
        case KernelKind::T3i: return "t3i";
        case KernelKind::Elastic26: return "elastic";
        case KernelKind::T3iii: return "t3iii";
        case KernelKind::Null: return "null";
    }
    return "?";
}

std::string to_string(TensorKind kind) {
    switch (kind) {
        case TensorKind::D20: return "d20";
        case TensorKind::D20Prime: return "d20prime";
        case TensorKind::D21: return "d21";
        case TensorKind::D22: return "d22";
        case TensorKind::Null: return "null";
    }
    return "?";
}

KernelKind kernel_from_string(const std::string& name) {
    for (auto k : {KernelKind::Rad2, KernelKind::Rad, KernelKind::T3i, KernelKind::Elastic26, KernelKind::T3iii,
                   KernelKind::Null})
        if (to_string(k) == name) return k;
    throw ArgumentError("unknown kernel kind '" + name + "'");
}

TensorKind tensor_from_string(const std::string& name) {
    for (auto k : {TensorKind::D20, TensorKind::D20Prime, TensorKind::D21, TensorKind::D22, TensorKind::Null})
        if (to_string(k) == name) return k;
    throw ArgumentError("unknown tensor kind '" + name + "'");
}

struct SpectralDensity::Model {
    SpectrumFamily family = SpectrumFamily::SmoothBump;
    double amplitude = 1.0;
    double w0 = 1.0;
    double k0 = 1.0;
    int dim = 1;
    std::string id;
    Fn fn;
    SpectrumTable table;
    double envelope = 0.0;
    double partial_envelope = 0.0;

    double eval_canonical(double w, const Vec& k) const {
        switch (family) {
            case SpectrumFamily::SmoothBump: {
                if (w >= w0) return 0.0;
                double r2 = 0.0;
                for (int i = 0; i < dim; ++i) r2 += k[static_cast<std::size_t>(i)] * k[static_cast<std::size_t>(i)];
                const double r = std::sqrt(r2);
                if (r >= k0) return 0.0;
                return amplitude * bump_profile(w / w0) * bump_profile(r / k0);
            }
            case SpectrumFamily::ProductBump: {
                double v = amplitude * bump_profile(w / w0);
                for (int i = 0; i < dim; ++i) v *= bump_profile(k[static_cast<std::size_t>(i)] / k0);
                return v;
            }
            case SpectrumFamily::Custom: {
                if (w >= w0) return 0.0;
                for (int i = 0; i < dim; ++i)
                    if (std::abs(k[static_cast<std::size_t>(i)]) >= k0) return 0.0;
                return std::max(0.0, fn(w, std::span<const double>(k.data(), static_cast<std::size_t>(dim))));
            }
            case SpectrumFamily::Tabulated: return eval_table(w, k);
        }
        return 0.0;
    }

    double eval_table(double w, const Vec& k) const {
        std::array<int, kMaxDim + 1> idx{};
        std::array<double, kMaxDim + 1> frac{};
        idx[0] = locate(table.w_nodes, w, frac[0]);
        if (idx[0] < 0) return 0.0;
        for (int i = 0; i < dim; ++i) {
            idx[static_cast<std::size_t>(i) + 1] =
                locate(table.k_nodes[static_cast<std::size_t>(i)], k[static_cast<std::size_t>(i)],
                       frac[static_cast<std::size_t>(i) + 1]);
            if (idx[static_cast<std::size_t>(i) + 1] < 0) return 0.0;
        }
        std::array<std::size_t, kMaxDim + 1> sizes{};
        sizes[0] = table.w_nodes.size();
        for (int i = 0; i < dim; ++i)
            sizes[static_cast<std::size_t>(i) + 1] = table.k_nodes[static_cast<std::size_t>(i)].size();
        const int axes = dim + 1;
        double v = 0.0;
        for (int corner = 0; corner < (1 << axes); ++corner) {
            double weight = 1.0;
            std::size_t flat = 0;
            for (int a = 0; a < axes; ++a) {
                const auto ua = static_cast<std::size_t>(a);
                const bool up = ((corner >> a) & 1) != 0;
                if (up && sizes[ua] == 1) {
                    weight = 0.0;
                    break;
                }
                weight *= up ? frac[ua] : 1.0 - frac[ua];
                flat = flat * sizes[ua] + static_cast<std::size_t>(idx[ua] + (up ? 1 : 0));
            }
            if (weight != 0.0) v += weight * table.values[flat];
        }
        return std::max(0.0, v);
    }

    /// int over w of the table interpolant at canonical k (piecewise linear in w).
    double table_partial(const Vec& k) const {
        const auto& wn = table.w_nodes;
        double sum = 0.0;
        double prev = eval_table(wn[0], k);
        for (std::size_t i = 1; i < wn.size(); ++i) {
            const double cur = eval_table(wn[i], k);
            sum += 0.5 * (prev + cur) * (wn[i] - wn[i - 1]);
            prev = cur;
        }
        return 2.0 * sum;  // table holds w >= 0 only; Phi is even in w
    }
};

SpectralDensity::SpectralDensity(std::shared_ptr<const Model> model) : model_(std::move(model)) {}

namespace {

void check_common(double amplitude, double w0, double k0, int dim) {
    if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) throw ArgumentError("spectrum amplitude must be >= 0");
    if (!(w0 > 0.0) || !(k0 > 0.0)) throw ArgumentError("spectrum support cutoffs must be > 0");
    if (dim < 1 || dim > kMaxDim) throw ArgumentError("spectrum dimension must be 1..3");
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

}  // namespace

SpectralDensity SpectralDensity::smooth_bump(double amplitude, double w0, double k0, int dim) {
    check_common(amplitude, w0, k0, dim);
    auto m = std::make_shared<Model>();
    m->family = SpectrumFamily::SmoothBump;
    m->amplitude = amplitude;
    m->w0 = w0;
    m->k0 = k0;
    m->dim = dim;
    m->id = "smooth_bump(A=" + fmt(amplitude) + ",w0=" + fmt(w0) + ",k0=" + fmt(k0) + ",d=" + std::to_string(dim) + ")";
    m->envelope = amplitude;
    m->partial_envelope = amplitude * w0 * bump_integral();
    return SpectralDensity(m);
}

SpectralDensity SpectralDensity::product_bump(double amplitude, double w0, double k0, int dim) {
    check_common(amplitude, w0, k0, dim);
    auto m = std::make_shared<Model>();
    m->family = SpectrumFamily::ProductBump;
    m->amplitude = amplitude;
    m->w0 = w0;
    m->k0 = k0;
    m->dim = dim;
    m->id = "product_bump(A=" + fmt(amplitude) + ",w0=" + fmt(w0) + ",k0=" + fmt(k0) + ",d=" + std::to_string(dim) + ")";
    m->envelope = amplitude;
    m->partial_envelope = amplitude * w0 * bump_integral();
    return SpectralDensity(m);
}

SpectralDensity SpectralDensity::zero(int dim, double w0, double k0) {
    auto s = smooth_bump(0.0, w0, k0, dim);
    auto m = std::make_shared<Model>(*s.model_);
    m->id = "zero(d=" + std::to_string(dim) + ")";
    return SpectralDensity(m);
}

SpectralDensity SpectralDensity::custom(Fn fn, double w0, double k0, int dim, std::string id, double envelope) {
    check_common(1.0, w0, k0, dim);
    if (!fn) throw ArgumentError("custom spectrum needs a callable");
    auto m = std::make_shared<Model>();
    m->family = SpectrumFamily::Custom;
    m->w0 = w0;
    m->k0 = k0;
    m->dim = dim;
    m->fn = std::move(fn);
    m->id = "custom(" + id + ")";
    m->amplitude = 1.0;

    // Envelopes by grid scan with a safety margin when not supplied.
    const int n = dim == 3 ? 17 : 33;
    double phi_max = 0.0;
    double part_max = 0.0;
    Vec k{};
    std::array<int, kMaxDim> c{};
    int total = 1;
    for (int i = 0; i < dim; ++i) total *= n;
    SpectralDensity probe(m);
    for (int flat = 0; flat < total; ++flat) {
        int r = flat;
        for (int i = dim - 1; i >= 0; --i) {
            c[static_cast<std::size_t>(i)] = r % n;
            r /= n;
            k[static_cast<std::size_t>(i)] = -k0 + 2.0 * k0 * c[static_cast<std::size_t>(i)] / (n - 1);
        }
        for (int j = 0; j < n; ++j) {
            const double w = w0 * j / (n - 1);
            phi_max = std::max(phi_max, m->eval_canonical(w, k));
        }
        part_max = std::max(part_max, partial_spectrum(probe, std::span<const double>(k.data(), dim),
                                                       QuadratureConfig{1e-8, 12, 0}));
    }
    m->envelope = envelope > 0.0 ? envelope : 1.25 * phi_max;
    m->partial_envelope = envelope > 0.0 ? envelope * 2.0 * w0 : 1.25 * part_max;
    return SpectralDensity(m);
}

SpectralDensity SpectralDensity::tabulated(SpectrumTable t) {
    if (t.dim < 1 || t.dim > kMaxDim) throw ConfigurationError("spectrum table dimension must be 1..3");
    std::array<std::size_t, kMaxDim + 1> sizes{};
    sizes[0] = t.w_nodes.size();
    std::size_t total = sizes[0];
    const auto check_nodes = [](const std::vector<double>& v, const char* axis) {
        if (v.empty()) throw ConfigurationError(std::string("spectrum table has no nodes on axis ") + axis);
        for (std::size_t i = 1; i < v.size(); ++i)
            if (!(v[i] > v[i - 1]))
                throw ConfigurationError(std::string("spectrum table nodes not strictly increasing on axis ") + axis);
    };
    check_nodes(t.w_nodes, "w");
    for (int i = 0; i < t.dim; ++i) {
        check_nodes(t.k_nodes[static_cast<std::size_t>(i)], "k");
        sizes[static_cast<std::size_t>(i) + 1] = t.k_nodes[static_cast<std::size_t>(i)].size();
        total *= sizes[static_cast<std::size_t>(i) + 1];
    }
    if (t.values.size() != total) throw ConfigurationError("spectrum table value count does not match its grid");
    for (double v : t.values)
        if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigurationError("spectrum table has a negative or non-finite value");

    std::size_t k_block = total / sizes[0];
    // Symmetrize in k when every k axis has mirror-symmetric nodes.
    bool k_sym = true;
    for (int i = 0; i < t.dim; ++i) {
        const auto& n = t.k_nodes[static_cast<std::size_t>(i)];
        for (std::size_t j = 0; j < n.size(); ++j)
            if (std::abs(n[j] + n[n.size() - 1 - j]) > 1e-12 * (1.0 + std::abs(n[j]))) k_sym = false;
    }
    if (k_sym) {
        std::vector<double> sym(t.values.size());
        for (std::size_t iw = 0; iw < sizes[0]; ++iw)
            for (std::size_t j = 0; j < k_block; ++j) {
                // Mirror multi-index: reverse each k coordinate.
                std::size_t r = j;
                std::size_t mirror = 0;
                std::size_t stride = 1;
                for (int a = t.dim; a >= 1; --a) {
                    const std::size_t n = sizes[static_cast<std::size_t>(a)];
                    const std::size_t c = r % n;
                    r /= n;
                    mirror += (n - 1 - c) * stride;
                    stride *= n;
                }
                sym[iw * k_block + j] = 0.5 * (t.values[iw * k_block + j] + t.values[iw * k_block + mirror]);
            }
        t.values = std::move(sym);
    }
    // Fold w onto w >= 0 (averaging mirrored rows when present).
    if (t.w_nodes.front() < 0.0) {
        std::vector<double> wn;
        std::vector<double> vals;
        for (std::size_t iw = 0; iw < sizes[0]; ++iw) {
            const double w = t.w_nodes[iw];
            if (w < 0.0) continue;
            std::size_t mirror = sizes[0];
            for (std::size_t jw = 0; jw < sizes[0]; ++jw)
                if (std::abs(t.w_nodes[jw] + w) <= 1e-12 * (1.0 + w)) mirror = jw;
            wn.push_back(w);
            for (std::size_t j = 0; j < k_block; ++j) {
                double v = t.values[iw * k_block + j];
                if (mirror < sizes[0]) v = 0.5 * (v + t.values[mirror * k_block + j]);
                vals.push_back(v);
            }
        }
        if (wn.empty()) throw ConfigurationError("spectrum table has no w >= 0 rows");
        t.w_nodes = std::move(wn);
        t.values = std::move(vals);
    }

    auto m = std::make_shared<Model>();
    m->family = SpectrumFamily::Tabulated;
    m->dim = t.dim;
    m->w0 = t.w_nodes.back();
    double kmax = 0.0;
    for (int i = 0; i < t.dim; ++i)
        for (double v : t.k_nodes[static_cast<std::size_t>(i)]) kmax = std::max(kmax, std::abs(v));
    m->k0 = kmax;
    m->amplitude = t.values.empty() ? 0.0 : *std::max_element(t.values.begin(), t.values.end());
    m->envelope = m->amplitude;
    m->table = std::move(t);
    // The interpolant is multilinear in k, so its w-integral peaks at a node.
    double part_max = 0.0;
    const auto& tb = m->table;
    std::size_t nk = 1;
    for (int i = 0; i < tb.dim; ++i) nk *= tb.k_nodes[static_cast<std::size_t>(i)].size();
    for (std::size_t j = 0; j < nk; ++j) {
        Vec k{};
        std::size_t r = j;
        for (int a = tb.dim - 1; a >= 0; --a) {
            const auto& n = tb.k_nodes[static_cast<std::size_t>(a)];
            k[static_cast<std::size_t>(a)] = n[r % n.size()];
            r /= n.size();
        }
        part_max = std::max(part_max, m->table_partial(k));
    }
    m->partial_envelope = part_max;
    m->id = "tabulated(d=" + std::to_string(tb.dim) + ",nodes=" + std::to_string(tb.values.size()) + ")";
    return SpectralDensity(m);
}

SpectralDensity SpectralDensity::load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open spectrum file: " + path.string());
    std::string line;
    std::vector<std::vector<double>> rows;
    bool header_seen = false;
    std::size_t ncols = 0;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!header_seen) {
            bool numeric = true;
            try {
                std::size_t used = 0;
                (void)std::stod(cells.at(0), &used);
            } catch (const std::exception&) {
                numeric = false;
            }
            if (numeric) throw ConfigurationError("spectrum file " + path.string() + " lacks a header row");
            header_seen = true;
            ncols = cells.size();
            if (ncols < 3 || ncols > 2 + kMaxDim)
                throw ConfigurationError("spectrum file " + path.string() + " must have columns w, k_1..k_d, phi");
            continue;
        }
        if (cells.size() != ncols)
            throw ConfigurationError("spectrum file " + path.string() + ": wrong column count on line " +
                                     std::to_string(line_no));
        std::vector<double> row;
        for (const auto& c : cells) {
            try {
                row.push_back(std::stod(c));
            } catch (const std::exception&) {
                throw ConfigurationError("spectrum file " + path.string() + ": bad number on line " +
                                         std::to_string(line_no));
            }
        }
        rows.push_back(std::move(row));
    }
    if (!header_seen || rows.empty()) throw ConfigurationError("spectrum file " + path.string() + " has no data");

    SpectrumTable t;
    t.dim = static_cast<int>(ncols) - 2;
    std::vector<std::vector<double>> nodes(ncols - 1);
    for (std::size_t a = 0; a + 1 < ncols; ++a) {
        for (const auto& r : rows) nodes[a].push_back(r[a]);
        std::sort(nodes[a].begin(), nodes[a].end());
        nodes[a].erase(std::unique(nodes[a].begin(), nodes[a].end()), nodes[a].end());
    }
    std::size_t total = 1;
    for (const auto& n : nodes) total *= n.size();
    if (total != rows.size())
        throw ConfigurationError("spectrum file " + path.string() + " is not a complete tensor grid");
    t.values.assign(total, std::numeric_limits<double>::quiet_NaN());
    for (const auto& r : rows) {
        std::size_t flat = 0;
        for (std::size_t a = 0; a + 1 < ncols; ++a) {
            const auto pos = static_cast<std::size_t>(std::lower_bound(nodes[a].begin(), nodes[a].end(), r[a]) -
                                                      nodes[a].begin());
            flat = flat * nodes[a].size() + pos;
        }
        t.values[flat] = r[ncols - 1];
    }
    for (double v : t.values)
        if (std::isnan(v)) throw ConfigurationError("spectrum file " + path.string() + " has duplicate grid points");
    t.w_nodes = nodes[0];
    for (int i = 0; i < t.dim; ++i) t.k_nodes[static_cast<std::size_t>(i)] = nodes[static_cast<std::size_t>(i) + 1];
    return tabulated(std::move(t));
}

SpectrumFamily SpectralDensity::family() const { return model_->family; }
double SpectralDensity::amplitude() const { return model_->amplitude; }
double SpectralDensity::support_w() const { return model_->w0; }
double SpectralDensity::support_k() const { return model_->k0; }
int SpectralDensity::dim() const { return model_->dim; }
std::string SpectralDensity::id() const { return model_->id; }
double SpectralDensity::max_value() const { return model_->envelope; }
double SpectralDensity::max_partial() const { return model_->partial_envelope; }

bool SpectralDensity::separable() const {
    return model_->family == SpectrumFamily::SmoothBump || model_->family == SpectrumFamily::ProductBump;
}

double SpectralDensity::operator()(double w, std::span<const double> k) const {
    Vec kc = to_vec(k);
    canonicalize(kc, model_->dim);
    return model_->eval_canonical(std::abs(w), kc);
}

double SpectralDensity::partial(std::span<const double> k) const {
    const Model& m = *model_;
    Vec kc = to_vec(k);
    canonicalize(kc, m.dim);
    switch (m.family) {
        case SpectrumFamily::SmoothBump:
        case SpectrumFamily::ProductBump:
            if (m.amplitude == 0.0) return 0.0;
            return m.eval_canonical(0.0, kc) * m.w0 * bump_integral();
        case SpectrumFamily::Tabulated: return m.table_partial(kc);
        case SpectrumFamily::Custom:
            return 2.0 * integrate_1d([&](double w) { return m.eval_canonical(w, kc); }, 0.0, m.w0,
                                      QuadratureConfig{1e-12, 18, 0});
    }
    return 0.0;
}

double eval_phi(const SpectralDensity& s, double w, std::span<const double> k) {
    check_dim(s, k.size());
    return s(w, k);
}

double partial_spectrum(const SpectralDensity& s, std::span<const double> k, const QuadratureConfig& cfg) {
    check_dim(s, k.size());
    const Vec kv = to_vec(k);
    const auto ks = std::span<const double>(kv.data(), k.size());
    const double w0 = s.support_w();
    return integrate_1d([&](double w) { return s(w, ks); }, -w0, w0, cfg);
}

double covariance_transform(const SpectralDensity& s, double t, std::span<const double> k,
                            const QuadratureConfig& cfg) {
    check_dim(s, k.size());
    const Vec kv = to_vec(k);
    const auto ks = std::span<const double>(kv.data(), k.size());
    const double at = std::abs(t);
    // The sine part vanishes by evenness of Phi in w.
    return 2.0 * integrate_1d([&](double w) { return std::cos(at * w) * s(w, ks); }, 0.0, s.support_w(), cfg);
}

double kernel_density(const SpectralDensity& s, KernelKind kind, std::span<const double> p,
                      std::span<const double> q, double carrier_k) {
    check_dim(s, p.size());
    check_dim(s, q.size());
    Vec u{};
    for (std::size_t i = 0; i < p.size(); ++i) u[i] = q[i] - p[i];
    const auto us = std::span<const double>(u.data(), p.size());
    switch (kind) {
        case KernelKind::Rad2:
        case KernelKind::T3i: return s(0.0, us);
        case KernelKind::Rad:
        case KernelKind::T3iii: return s((dot(q, q) - dot(p, p)) / (2.0 * carrier_k), us);
        case KernelKind::Null: return 0.0;
        case KernelKind::Elastic26:
            throw ArgumentError("the elastic kernel is a surface measure; use elastic_shell_density");
    }
    return 0.0;
}

double elastic_shell_density(const SpectralDensity& s, std::span<const double> p, std::span<const double> q,
                             double carrier_k) {
    check_dim(s, p.size());
    check_dim(s, q.size());
    const double r = norm(p);
    if (r == 0.0) throw DegenerateMomentumError("elastic kernel at |p| = 0");
    Vec u{};
    for (std::size_t i = 0; i < p.size(); ++i) u[i] = q[i] - p[i];
    return carrier_k / r * s.partial(std::span<const double>(u.data(), p.size()));
}

namespace {

/// Radius beyond which Phi0(k) vanishes.
double support_radius(const SpectralDensity& s) {
    if (s.family() == SpectrumFamily::SmoothBump) return s.support_k();
    return s.support_k() * std::sqrt(static_cast<double>(s.dim()));
}

/// Orthonormal basis of the hyperplane orthogonal to unit vector n (d = 2, 3).
std::array<Vec, 2> perp_basis(const Vec& n, int dim) {
    std::array<Vec, 2> e{};
    if (dim == 2) {
        e[0] = {-n[1], n[0], 0.0};
        return e;
    }
    // Pick the axis least aligned with n, Gram-Schmidt it, then cross.
    int axis = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(n[static_cast<std::size_t>(i)]) < std::abs(n[static_cast<std::size_t>(axis)])) axis = i;
    Vec a{};
    a[static_cast<std::size_t>(axis)] = 1.0;
    const double proj = a[0] * n[0] + a[1] * n[1] + a[2] * n[2];
    for (int i = 0; i < 3; ++i) a[static_cast<std::size_t>(i)] -= proj * n[static_cast<std::size_t>(i)];
    const double an = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
    for (auto& v : a) v /= an;
    e[0] = a;
    e[1] = {n[1] * a[2] - n[2] * a[1], n[2] * a[0] - n[0] * a[2], n[0] * a[1] - n[1] * a[0]};
    return e;
}

}  // namespace

double total_cross_section(const SpectralDensity& s, std::span<const double> p, KernelKind kind, double carrier_k,
                           const QuadratureConfig& cfg) {
    check_dim(s, p.size());
    const int d = s.dim();
    const double K = s.support_k();
    const Vec lo_v{-K, -K, -K};
    const Vec hi_v{K, K, K};
    const auto lo = std::span<const double>(lo_v.data(), p.size());
    const auto hi = std::span<const double>(hi_v.data(), p.size());
    if (s.amplitude() == 0.0 && kind != KernelKind::Elastic26) return 0.0;
    switch (kind) {
        case KernelKind::Null: return 0.0;
        case KernelKind::Rad2:
        case KernelKind::T3i:
            return 2.0 * kPi * integrate_box([&](std::span<const double> u) { return s(0.0, u); }, lo, hi, cfg);
        case KernelKind::Rad:
        case KernelKind::T3iii: {
            const Vec pv = to_vec(p);
            const auto ps = std::span<const double>(pv.data(), p.size());
            return 2.0 * kPi *
                   integrate_box(
                       [&](std::span<const double> u) {
                           return s((dot(u, u) + 2.0 * dot(u, ps)) / (2.0 * carrier_k), u);
                       },
                       lo, hi, cfg);
        }
        case KernelKind::Elastic26: {
            if (d < 2) throw ArgumentError("the elastic kernel requires d >= 2");
            const double r = norm(p);
            if (r == 0.0) throw DegenerateMomentumError("elastic cross-section at |p| = 0");
            if (s.amplitude() == 0.0) return 0.0;
            const double R = support_radius(s);
            Vec n{};
            for (int i = 0; i < d; ++i) n[static_cast<std::size_t>(i)] = p[static_cast<std::size_t>(i)] / r;
            Vec u{};
            const auto us = std::span<const double>(u.data(), static_cast<std::size_t>(d));
            double surface = 0.0;
            if (d == 2) {
                const double tmax = 2.0 * std::asin(std::min(1.0, R / (2.0 * r)));
                const double phi0 = std::atan2(n[1], n[0]);
                surface = integrate_1d(
                    [&](double th) {
                        u[0] = r * std::cos(phi0 + th) - p[0];
                        u[1] = r * std::sin(phi0 + th) - p[1];
                        return s.partial(us) * r;
                    },
                    -tmax, tmax, cfg);
            } else {
                const auto e = perp_basis(n, 3);
                const double mu_min = std::max(-1.0, 1.0 - R * R / (2.0 * r * r));
                surface = integrate_1d(
                    [&](double mu) {
                        const double st = std::sqrt(std::max(0.0, 1.0 - mu * mu));
                        return integrate_1d(
                                   [&](double ph) {
                                       const double c = std::cos(ph);
                                       const double sn = std::sin(ph);
                                       for (std::size_t i = 0; i < 3; ++i)
                                           u[i] = r * (mu * n[i] + st * (c * e[0][i] + sn * e[1][i])) - p[i];
                                       return s.partial(us);
                                   },
                                   0.0, 2.0 * kPi, cfg) *
                               r * r;
                    },
                    mu_min, 1.0, cfg);
            }
            return 2.0 * kPi * carrier_k / r * surface;
        }
    }
    return 0.0;
}

Mat3 diffusion_tensor(const SpectralDensity& s, TensorKind kind, std::span<const double> p, double carrier_k,
                      const QuadratureConfig& cfg) {
    check_dim(s, p.size());
    const int d = s.dim();
    Mat3 out;
    out.dim = d;
    if (kind == TensorKind::Null) return out;
    if (kind == TensorKind::D21) {
        if (d < 2) throw ArgumentError("tensor D21 requires d >= 2");
        const double r = norm(p);
        if (r == 0.0) throw DegenerateMomentumError("tensor D21 at |p| = 0");
        if (s.amplitude() == 0.0) return out;
        Vec n{};
        for (int i = 0; i < d; ++i) n[static_cast<std::size_t>(i)] = p[static_cast<std::size_t>(i)] / r;
        const auto e = perp_basis(n, d);
        const double R = support_radius(s);
        const double pref = kPi * carrier_k / r;
        Vec u{};
        const auto us = std::span<const double>(u.data(), static_cast<std::size_t>(d));
        const int m = d - 1;
        std::array<double, 4> mom{};  // moments over the plane, m x m
        for (int a = 0; a < m; ++a)
            for (int b = a; b < m; ++b) {
                const Vec lo_v{-R, -R, 0.0};
                const Vec hi_v{R, R, 0.0};
                const double val = integrate_box(
                    [&](std::span<const double> t) {
                        for (int i = 0; i < d; ++i) {
                            double v = 0.0;
                            for (int c = 0; c < m; ++c)
                                v += t[static_cast<std::size_t>(c)] * e[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)];
                            u[static_cast<std::size_t>(i)] = v;
                        }
                        return s.partial(us) * t[static_cast<std::size_t>(a)] * t[static_cast<std::size_t>(b)];
                    },
                    std::span<const double>(lo_v.data(), static_cast<std::size_t>(m)),
                    std::span<const double>(hi_v.data(), static_cast<std::size_t>(m)), cfg);
                mom[static_cast<std::size_t>(a * 2 + b)] = val;
                mom[static_cast<std::size_t>(b * 2 + a)] = val;
            }
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                double v = 0.0;
                for (int a = 0; a < m; ++a)
                    for (int b = 0; b < m; ++b)
                        v += mom[static_cast<std::size_t>(a * 2 + b)] * e[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] *
                             e[static_cast<std::size_t>(b)][static_cast<std::size_t>(j)];
                out(i, j) = pref * v;
            }
        return out;
    }
    if (s.amplitude() == 0.0) return out;
    const double K = s.support_k();
    const Vec lo_v{-K, -K, -K};
    const Vec hi_v{K, K, K};
    const auto lo = std::span<const double>(lo_v.data(), p.size());
    const auto hi = std::span<const double>(hi_v.data(), p.size());
    const Vec pv = to_vec(p);
    const auto ps = std::span<const double>(pv.data(), p.size());
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            const auto ui = static_cast<std::size_t>(i);
            const auto uj = static_cast<std::size_t>(j);
            double v = 0.0;
            if (kind == TensorKind::D22) {
                v = integrate_box([&](std::span<const double> q) { return s(dot(ps, q) / carrier_k, q) * q[ui] * q[uj]; },
                                  lo, hi, cfg);
            } else {
                v = integrate_box([&](std::span<const double> q) { return s(0.0, q) * q[ui] * q[uj]; }, lo, hi, cfg);
            }
            out(i, j) = kPi * v;
            out(j, i) = kPi * v;
        }
    return out;
}

DecayProxy correlation_decay_proxy(const SpectralDensity& s, double t_max, double dt, double tail_start,
                                   int k_samples) {
    if (!(dt > 0.0) || !(t_max > 0.0) || k_samples < 1) throw ArgumentError("decay proxy: bad lag grid");
    const int d = s.dim();
    const double K = s.support_k();
    int total_k = 1;
    for (int i = 0; i < d; ++i) total_k *= k_samples;
    DecayProxy out;
    double tail = 0.0;
    const QuadratureConfig cfg{1e-10, 16, 0};
    const auto steps = static_cast<int>(std::floor(t_max / dt + 1e-9));
    for (int it = 0; it <= steps; ++it) {
        const double t = it * dt;
        double best = 0.0;
        Vec k{};
        for (int flat = 0; flat < total_k; ++flat) {
            int r = flat;
            for (int i = d - 1; i >= 0; --i) {
                const int c = r % k_samples;
                r /= k_samples;
                k[static_cast<std::size_t>(i)] =
                    k_samples == 1 ? 0.0 : -K + 2.0 * K * (c + 0.5) / k_samples;
            }
            best = std::max(best, std::abs(covariance_transform(
                                      s, t, std::span<const double>(k.data(), static_cast<std::size_t>(d)), cfg)));
        }
        out.total += best * dt;
        if (t > tail_start) tail += best * dt;
    }
    out.tail_fraction = out.total > 0.0 ? tail / out.total : 0.0;
    return out;
}

}  // namespace parawave
