#include "parawave/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <array>
#include <cmath>
#include <vector>

#include "parawave/errors.hpp"

namespace parawave {

namespace {

constexpr double kMachineEps = 2.220446049250313e-16;

/// Fixed composite 10-point Gauss-Legendre.
double fixed_panels(const ScalarFn& f, double a, double b, int panels) {
    const double h = (b - a) / panels;
    double sum = 0.0;
    for (int i = 0; i < panels; ++i) {
        const double lo = a + i * h;
        sum += boost::math::quadrature::gauss<double, 10>::integrate(f, lo, lo + h);
    }
    return sum;
}

/// Bisection on GK15 against an absolute tolerance that is split between
/// the halves. A subinterval also stops once its error is at rounding level
/// of its own L1 norm.
double adaptive(const ScalarFn& f, double a, double b, double tol, unsigned depth) {
    double err = 0.0;
    double l1 = 0.0;
    const double est = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 0, 0.0, &err, &l1);
    if (err <= tol || err <= 50.0 * kMachineEps * l1 || depth == 0) return est;
    const double m = 0.5 * (a + b);
    return adaptive(f, a, m, 0.5 * tol, depth - 1) + adaptive(f, m, b, 0.5 * tol, depth - 1);
}

double relative_fallback(const ScalarFn& f, double a, double b, const QuadratureConfig& cfg) {
    double error = 0.0;
    double l1 = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, cfg.max_depth, cfg.rel_tol, &error,
                                                                          &l1);
}

constexpr int kCoarsePanels = 8;

}  // namespace

double integrate_1d(const ScalarFn& f, double a, double b, const QuadratureConfig& cfg) {
    if (!(b > a)) return 0.0;
    if (cfg.panels > 0) return fixed_panels(f, a, b, cfg.panels);
    // The tolerance is relative to the L1 norm over the whole interval, so
    // parts where |f| is negligible are not refined to their own scale.
    const double l1 = fixed_panels([&](double t) { return std::abs(f(t)); }, a, b, 2 * kCoarsePanels);
    if (!(l1 > 0.0)) return relative_fallback(f, a, b, cfg);
    return adaptive(f, a, b, cfg.rel_tol * l1, cfg.max_depth);
}

namespace {

double coarse_l1(const FieldFn& f, std::span<const double> lo, std::span<const double> hi, std::array<double, 3>& point,
                 std::size_t axis) {
    const std::size_t rank = lo.size();
    return fixed_panels(
        [&](double t) {
            point[axis] = t;
            if (axis + 1 == rank) return std::abs(f(std::span<const double>(point.data(), rank)));
            return coarse_l1(f, lo, hi, point, axis + 1);
        },
        lo[axis], hi[axis], kCoarsePanels);
}

/// Half of `tol` goes to this axis; each inner integral gets the other half
/// spread over the axis length.
double nested(const FieldFn& f, std::span<const double> lo, std::span<const double> hi, const QuadratureConfig& cfg,
              std::array<double, 3>& point, std::size_t axis, double tol) {
    const std::size_t rank = lo.size();
    const double len = hi[axis] - lo[axis];
    if (!(len > 0.0)) return 0.0;
    const double inner_tol = 0.5 * tol / len;
    const ScalarFn g = [&](double t) {
        point[axis] = t;
        if (axis + 1 == rank) return f(std::span<const double>(point.data(), rank));
        return nested(f, lo, hi, cfg, point, axis + 1, inner_tol);
    };
    if (cfg.panels > 0) return fixed_panels(g, lo[axis], hi[axis], cfg.panels);
    return adaptive(g, lo[axis], hi[axis], axis + 1 == rank ? tol : 0.5 * tol, cfg.max_depth);
}

}  // namespace

double integrate_box(const FieldFn& f, std::span<const double> lo, std::span<const double> hi,
                     const QuadratureConfig& cfg) {
    if (lo.size() != hi.size() || lo.empty() || lo.size() > 3)
        throw ArgumentError("integrate_box: rank must be 1..3 with matching bounds");
    std::array<double, 3> point{};
    double tol = 0.0;
    if (cfg.panels == 0) {
        const double l1 = coarse_l1(f, lo, hi, point, 0);
        if (!(l1 > 0.0)) return 0.0;
        tol = cfg.rel_tol * l1;
    }
    return nested(f, lo, hi, cfg, point, 0, tol);
}

}  // namespace parawave
