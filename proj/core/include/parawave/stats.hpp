#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace parawave::stats {

double mean(std::span<const double> x);
/// Unbiased sample variance; 0 for fewer than two samples.
double variance(std::span<const double> x);
/// Standard error of the mean.
double standard_error(std::span<const double> x);

struct Estimate {
    double value = 0.0;
    double stderr_ = 0.0;
};

/// Delete-one-block jackknife of a statistic over contiguous blocks.
Estimate jackknife(std::span<const double> x, const std::function<double(std::span<const double>)>& statistic,
                   int blocks = 64);

struct BootstrapResult {
    double estimate = 0.0;
    double sd = 0.0;
    double ci_lo = 0.0;   ///< 2.5% percentile
    double ci_hi = 0.0;   ///< 97.5% percentile
};

/// Nonparametric bootstrap of a statistic with a seeded counter-based stream.
BootstrapResult bootstrap(std::span<const double> x, const std::function<double(std::span<const double>)>& statistic,
                          int resamples, std::uint64_t seed, std::uint64_t stream);

/// Pearson chi-square goodness of fit; expected counts below `min_expected`
/// are pooled into the neighbouring bin. Returns the upper-tail p-value.
double chi_square_pvalue(std::span<const double> observed, std::span<const double> expected,
                         double min_expected = 5.0);

/// One-sample Kolmogorov-Smirnov test against a continuous CDF; asymptotic
/// p-value with the Stephens small-sample correction.
double ks_pvalue(std::vector<double> sample, const std::function<double(double)>& cdf);

/// Two-sample Kolmogorov-Smirnov test.
double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b);

/// Kolmogorov distribution upper tail Q(lambda) = 2 sum (-1)^{j-1} e^{-2 j^2 lambda^2}.
double kolmogorov_q(double lambda);

}  // namespace parawave::stats
