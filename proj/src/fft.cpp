#include "fringebos/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

namespace fringebos::fft {
namespace {

// The FFTW planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

int sign_of(Direction dir) { return dir == Direction::Forward ? FFTW_FORWARD : FFTW_BACKWARD; }

}  // namespace

Plan2d::Plan2d(std::size_t width, std::size_t height, Direction dir)
    : width_(width), height_(height) {
  std::lock_guard lock(planner_mutex());
  buf_ = fftw_malloc(sizeof(fftw_complex) * width * height);
  auto* b = static_cast<fftw_complex*>(buf_);
  plan_ = fftw_plan_dft_2d(static_cast<int>(height), static_cast<int>(width), b, b, sign_of(dir),
                           FFTW_ESTIMATE);
}

Plan2d::~Plan2d() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  fftw_free(buf_);
}

std::span<Complex> Plan2d::buffer() noexcept {
  return {reinterpret_cast<Complex*>(buf_), width_ * height_};
}

void Plan2d::execute() { fftw_execute(static_cast<fftw_plan>(plan_)); }

PlanRows::PlanRows(std::size_t width, std::size_t height, Direction dir)
    : width_(width), height_(height) {
  std::lock_guard lock(planner_mutex());
  buf_ = fftw_malloc(sizeof(fftw_complex) * width * height);
  auto* b = static_cast<fftw_complex*>(buf_);
  const int n = static_cast<int>(width);
  plan_ = fftw_plan_many_dft(1, &n, static_cast<int>(height), b, nullptr, 1, n, b, nullptr, 1, n,
                             sign_of(dir), FFTW_ESTIMATE);
}

PlanRows::~PlanRows() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  fftw_free(buf_);
}

std::span<Complex> PlanRows::buffer() noexcept {
  return {reinterpret_cast<Complex*>(buf_), width_ * height_};
}

void PlanRows::execute() { fftw_execute(static_cast<fftw_plan>(plan_)); }

ComplexField transform2d(const ComplexField& in, Direction dir) {
  Plan2d plan(in.width(), in.height(), dir);
  std::copy(in.data().begin(), in.data().end(), plan.buffer().begin());
  plan.execute();
  return ComplexField(in.width(), in.height(),
                      std::vector<Complex>(plan.buffer().begin(), plan.buffer().end()));
}

ComplexField inverse2d(const ComplexField& spectrum) {
  auto out = transform2d(spectrum, Direction::Inverse);
  const double scale = 1.0 / static_cast<double>(out.size());
  for (auto& v : out.data()) v *= scale;
  return out;
}

ComplexField transform_rows(const ComplexField& in, Direction dir) {
  PlanRows plan(in.width(), in.height(), dir);
  std::copy(in.data().begin(), in.data().end(), plan.buffer().begin());
  plan.execute();
  return ComplexField(in.width(), in.height(),
                      std::vector<Complex>(plan.buffer().begin(), plan.buffer().end()));
}

}  // namespace fringebos::fft
