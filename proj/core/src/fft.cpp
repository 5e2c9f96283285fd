#include "parawave/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <numeric>

#include "parawave/errors.hpp"

namespace parawave {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

std::size_t product(std::span<const int> shape) {
    if (shape.empty() || shape.size() > 3) throw ArgumentError("FFT rank must be 1, 2 or 3");
    std::size_t n = 1;
    for (int s : shape) {
        if (s <= 0) throw ArgumentError("FFT extents must be positive");
        n *= static_cast<std::size_t>(s);
    }
    return n;
}

}  // namespace

FftPlan::FftPlan(std::span<const int> shape, FftDirection direction) : size_(product(shape)) {
    std::vector<fftw_complex> scratch(size_);
    const int sign = direction == FftDirection::Forward ? FFTW_FORWARD : FFTW_BACKWARD;
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft(static_cast<int>(shape.size()), shape.data(), scratch.data(), scratch.data(),
                          sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan_ == nullptr) throw Error("FFTW failed to create a plan");
}

FftPlan::~FftPlan() {
    if (plan_ != nullptr) {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(static_cast<fftw_plan>(plan_));
    }
}

FftPlan::FftPlan(FftPlan&& other) noexcept : plan_(other.plan_), size_(other.size_) {
    other.plan_ = nullptr;
}

FftPlan& FftPlan::operator=(FftPlan&& other) noexcept {
    std::swap(plan_, other.plan_);
    std::swap(size_, other.size_);
    return *this;
}

void FftPlan::execute(std::span<cplx> data) const {
    if (data.size() != size_) throw ArgumentError("FFT buffer size does not match the plan");
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(static_cast<fftw_plan>(plan_), ptr, ptr);
}

RealFftPlan::RealFftPlan(std::span<const int> shape) : real_size_(product(shape)) {
    complex_size_ = real_size_ / static_cast<std::size_t>(shape.back()) *
                    static_cast<std::size_t>(shape.back() / 2 + 1);
    std::vector<double> real_scratch(real_size_);
    std::vector<fftw_complex> complex_scratch(complex_size_);
    const int rank = static_cast<int>(shape.size());
    std::lock_guard lock(planner_mutex());
    forward_ = fftw_plan_dft_r2c(rank, shape.data(), real_scratch.data(), complex_scratch.data(),
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
    backward_ = fftw_plan_dft_c2r(rank, shape.data(), complex_scratch.data(), real_scratch.data(),
                                  FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (forward_ == nullptr || backward_ == nullptr) throw Error("FFTW failed to create a real plan");
}

RealFftPlan::~RealFftPlan() {
    std::lock_guard lock(planner_mutex());
    if (forward_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(forward_));
    if (backward_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(backward_));
}

void RealFftPlan::forward(std::span<double> in, std::span<cplx> out) const {
    if (in.size() != real_size_ || out.size() != complex_size_)
        throw ArgumentError("real FFT buffer sizes do not match the plan");
    fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_), in.data(),
                         reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFftPlan::backward(std::span<cplx> in, std::span<double> out) const {
    if (out.size() != real_size_ || in.size() != complex_size_)
        throw ArgumentError("real FFT buffer sizes do not match the plan");
    fftw_execute_dft_c2r(static_cast<fftw_plan>(backward_), reinterpret_cast<fftw_complex*>(in.data()),
                         out.data());
}

}  // namespace parawave
