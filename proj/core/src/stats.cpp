#include "parawave/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "parawave/errors.hpp"
#include "parawave/rng.hpp"

namespace parawave::stats {

double mean(std::span<const double> x) {
    if (x.empty()) return 0.0;
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

double standard_error(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    return std::sqrt(variance(x) / static_cast<double>(x.size()));
}

Estimate jackknife(std::span<const double> x, const std::function<double(std::span<const double>)>& statistic,
                   int blocks) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(std::max(blocks, 2)), n);
    Estimate out;
    out.value = statistic(x);
    if (b < 2) return out;
    std::vector<double> partial(b);
    std::vector<double> scratch;
    scratch.reserve(n);
    for (std::size_t k = 0; k < b; ++k) {
        const std::size_t lo = k * n / b;
        const std::size_t hi = (k + 1) * n / b;
        scratch.clear();
        scratch.insert(scratch.end(), x.begin(), x.begin() + static_cast<std::ptrdiff_t>(lo));
        scratch.insert(scratch.end(), x.begin() + static_cast<std::ptrdiff_t>(hi), x.end());
        partial[k] = statistic(scratch);
    }
    const double pm = mean(partial);
    double s = 0.0;
    for (double v : partial) s += (v - pm) * (v - pm);
    out.stderr_ = std::sqrt(static_cast<double>(b - 1) / static_cast<double>(b) * s);
    return out;
}

BootstrapResult bootstrap(std::span<const double> x, const std::function<double(std::span<const double>)>& statistic,
                          int resamples, std::uint64_t seed, std::uint64_t stream) {
    BootstrapResult out;
    out.estimate = statistic(x);
    if (x.size() < 2 || resamples < 2) return out;
    Philox4x32 rng(seed, stream);
    std::vector<double> values(static_cast<std::size_t>(resamples));
    std::vector<double> sample(x.size());
    for (auto& v : values) {
        for (auto& s : sample) {
            const auto idx = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(x.size()));
            s = x[std::min(idx, x.size() - 1)];
        }
        v = statistic(sample);
    }
    out.sd = std::sqrt(variance(values));
    std::sort(values.begin(), values.end());
    const auto at = [&](double q) {
        const double pos = q * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, values.size() - 1);
        return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
    };
    out.ci_lo = at(0.025);
    out.ci_hi = at(0.975);
    return out;
}

double chi_square_pvalue(std::span<const double> observed, std::span<const double> expected, double min_expected) {
    if (observed.size() != expected.size() || observed.empty())
        throw ArgumentError("chi-square: observed/expected size mismatch");
    std::vector<double> obs;
    std::vector<double> exp;
    double o_acc = 0.0;
    double e_acc = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        o_acc += observed[i];
        e_acc += expected[i];
        if (e_acc >= min_expected) {
            obs.push_back(o_acc);
            exp.push_back(e_acc);
            o_acc = e_acc = 0.0;
        }
    }
    if (!exp.empty()) {
        obs.back() += o_acc;
        exp.back() += e_acc;
    }
    if (exp.size() < 2) throw ArgumentError("chi-square: fewer than two usable bins");
    double stat = 0.0;
    for (std::size_t i = 0; i < exp.size(); ++i) stat += (obs[i] - exp[i]) * (obs[i] - exp[i]) / exp[i];
    const boost::math::chi_squared dist(static_cast<double>(exp.size() - 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

double kolmogorov_q(double lambda) {
    if (lambda < 1e-3) return 1.0;
    double sum = 0.0;
    for (int j = 1; j <= 200; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += (j % 2 == 1 ? 1.0 : -1.0) * term;
        if (term < 1e-18) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_pvalue(std::vector<double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) throw ArgumentError("KS test on an empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    const double sqn = std::sqrt(n);
    return kolmogorov_q((sqn + 0.12 + 0.11 / sqn) * d);
}

double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw ArgumentError("KS test on an empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = std::sqrt(na * nb / (na + nb));
    return kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
}

}  // namespace parawave::stats
