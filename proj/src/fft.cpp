#include "fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace wavesal::detail {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class Plan {
 public:
  template <typename Make>
  explicit Plan(Make make) {
    std::lock_guard lock(planner_mutex());
    plan_ = make();
    if (plan_ == nullptr) throw std::runtime_error("FFTW planning failed");
  }
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;

  void execute() const { fftw_execute(plan_); }

 private:
  fftw_plan plan_ = nullptr;
};

fftw_complex* as_fftw(ComplexVector& data) {
  return reinterpret_cast<fftw_complex*>(data.data());
}

}  // namespace

void fft_1d(ComplexVector& data, bool inverse) {
  if (data.empty()) return;
  const int n = static_cast<int>(data.size());
  const int sign = inverse ? FFTW_BACKWARD : FFTW_FORWARD;
  Plan plan([&] {
    return fftw_plan_dft_1d(n, as_fftw(data), as_fftw(data), sign,
                            FFTW_ESTIMATE);
  });
  plan.execute();
}

void fft_2d(ComplexVector& data, std::size_t nx, std::size_t ny) {
  if (data.size() != nx * ny) throw std::invalid_argument("fft_2d size mismatch");
  if (data.empty()) return;
  // FFTW is row-major with the last dimension fastest.
  Plan plan([&] {
    return fftw_plan_dft_2d(static_cast<int>(ny), static_cast<int>(nx),
                            as_fftw(data), as_fftw(data), FFTW_FORWARD,
                            FFTW_ESTIMATE);
  });
  plan.execute();
}

}  // namespace wavesal::detail
