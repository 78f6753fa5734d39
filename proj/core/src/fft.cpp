#include "dronerad/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>
#include <utility>
#include <vector>

#include "dronerad/errors.hpp"

namespace dronerad {
namespace {

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) {
      fftw_destroy_plan(plan);
    }
  }

  fftw_plan get(std::size_t n, int sign, bool aligned) {
    std::lock_guard lock(mu_);
    const Key key{n, sign, aligned};
    if (auto it = plans_.find(key); it != plans_.end()) {
      return it->second;
    }
    // Planning needs scratch arrays; FFTW_ESTIMATE leaves them untouched. fftw_malloc gives the
    // SIMD alignment that aligned plans assume of every later input.
    auto* a = fftw_alloc_complex(n);
    auto* b = fftw_alloc_complex(n);
    const unsigned flags = FFTW_ESTIMATE | (aligned ? 0U : FFTW_UNALIGNED);
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), a, b, sign, flags);
    fftw_free(a);
    fftw_free(b);
    if (plan == nullptr) {
      throw Error("FFTW failed to create a plan of size " + std::to_string(n));
    }
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mu_;
  using Key = std::tuple<std::size_t, int, bool>;
  std::map<Key, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

void execute(std::span<const cdouble> in, std::span<cdouble> out, int sign) {
  if (in.size() != out.size()) {
    throw ConfigError("FFT input and output sizes differ");
  }
  if (in.empty()) {
    return;
  }
  // FFTW never writes to the input of an out-of-place complex transform.
  auto* src = reinterpret_cast<fftw_complex*>(const_cast<cdouble*>(in.data()));
  auto* dst = reinterpret_cast<fftw_complex*>(out.data());
  const bool aligned = fftw_alignment_of(reinterpret_cast<double*>(src)) == 0 &&
                       fftw_alignment_of(reinterpret_cast<double*>(dst)) == 0;
  fftw_execute_dft(cache().get(in.size(), sign, aligned), src, dst);
}

}  // namespace

void fft_forward(std::span<const cdouble> in, std::span<cdouble> out) { execute(in, out, FFTW_FORWARD); }

void fft_inverse(std::span<const cdouble> in, std::span<cdouble> out) { execute(in, out, FFTW_BACKWARD); }

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

}  // namespace dronerad
