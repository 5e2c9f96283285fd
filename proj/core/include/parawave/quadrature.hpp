#pragma once

#include <functional>
#include <span>

namespace parawave {

/// Tolerance knobs for every spectral integral.
///
/// `panels == 0` selects adaptive Gauss-Kronrod (15-point) bisection with
/// relative tolerance `rel_tol` measured against the L1 norm of the
/// integrand. `panels > 0` selects a fixed composite 10-point Gauss-Legendre
/// rule with that many uniform panels per axis; used for convergence-order
/// studies and cheap table builds.
struct QuadratureConfig {
    double rel_tol = 1e-11;
    unsigned max_depth = 18;
    int panels = 0;
};

using ScalarFn = std::function<double(double)>;
using FieldFn = std::function<double(std::span<const double>)>;

double integrate_1d(const ScalarFn& f, double a, double b, const QuadratureConfig& cfg = {});

/// Tensor-product integral over the box [lo, hi] (rank 1..3) by nesting the
/// 1-D rule; the innermost axis is the last coordinate.
double integrate_box(const FieldFn& f, std::span<const double> lo, std::span<const double> hi,
                     const QuadratureConfig& cfg = {});

}  // namespace parawave
