#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace parawave {

using cplx = std::complex<double>;

enum class FftDirection { Forward, Backward };

/// In-place complex FFT of a fixed rank-1..3 shape (row-major, last index
/// fastest). Unnormalized: Forward computes sum a_m e^{-2 pi i n m / N},
/// Backward the conjugate-sign sum.
///
/// Plans are created with FFTW_ESTIMATE so results do not depend on planner
/// timing. Plan creation is serialized internally; executing distinct plans
/// concurrently is safe. A plan object must not be shared between threads.
class FftPlan {
public:
    FftPlan(std::span<const int> shape, FftDirection direction);
    ~FftPlan();
    FftPlan(FftPlan&&) noexcept;
    FftPlan& operator=(FftPlan&&) noexcept;
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    void execute(std::span<cplx> data) const;
    std::size_t size() const noexcept { return size_; }

private:
    void* plan_ = nullptr;
    std::size_t size_ = 0;
};

/// Real-to-half-complex and half-complex-to-real transforms of a real array
/// of the given shape; the complex side has shape[..., n_last/2 + 1].
class RealFftPlan {
public:
    explicit RealFftPlan(std::span<const int> shape);
    ~RealFftPlan();
    RealFftPlan(const RealFftPlan&) = delete;
    RealFftPlan& operator=(const RealFftPlan&) = delete;

    std::size_t real_size() const noexcept { return real_size_; }
    std::size_t complex_size() const noexcept { return complex_size_; }

    void forward(std::span<double> in, std::span<cplx> out) const;
    /// Destroys the contents of `in`.
    void backward(std::span<cplx> in, std::span<double> out) const;

private:
    void* forward_ = nullptr;
    void* backward_ = nullptr;
    std::size_t real_size_ = 0;
    std::size_t complex_size_ = 0;
};

/// Signed FFT frequency index of slot `i` in an n-point transform.
inline int fft_index(int i, int n) noexcept { return i < (n + 1) / 2 ? i : i - n; }

}  // namespace parawave
