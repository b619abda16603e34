#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

namespace muskat::fft {

namespace detail {

// FFTW planning is not thread-safe, execution with new-array functions is.
// Plans are created once per (size, direction) under a lock and reused.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(std::size_t n, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_pair(n, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<std::complex<double>> in(n), out(n);
    fftw_plan plan = fftw_plan_dft_1d(
        static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()),
        reinterpret_cast<fftw_complex*>(out.data()), sign,
        FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

inline std::vector<std::complex<double>> execute(
    std::span<const std::complex<double>> in, int sign) {
  std::vector<std::complex<double>> src(in.begin(), in.end());
  std::vector<std::complex<double>> out(in.size());
  fftw_plan plan = PlanCache::instance().get(in.size(), sign);
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(src.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

}  // namespace detail

/// Unnormalized forward transform: X_k = sum_j x_j exp(-2 pi i jk/n).
inline std::vector<std::complex<double>> forward(
    std::span<const std::complex<double>> in) {
  return detail::execute(in, FFTW_FORWARD);
}

/// Unnormalized inverse transform: x_j = sum_k X_k exp(+2 pi i jk/n).
inline std::vector<std::complex<double>> backward(
    std::span<const std::complex<double>> in) {
  return detail::execute(in, FFTW_BACKWARD);
}

}  // namespace muskat::fft
