#include "kernels_impl.hpp"

namespace pistol::kernels::detail {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv(const double* w, const double* bias, const double* x, double* out, std::size_t rows,
          std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) out[r] = bias[r] + dot(w + r * cols, x, cols);
}

void gemv_t(const double* w, const double* coef, double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (coef[r] != 0.0) axpy(coef[r], w + r * cols, y, cols);
  }
}

void ger(const double* coef, const double* x, double* g, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (coef[r] != 0.0) axpy(coef[r], x, g + r * cols, cols);
  }
}

}  // namespace

const KernelTable kScalarTable{"scalar", &dot, &axpy, &gemv, &gemv_t, &ger};

}  // namespace pistol::kernels::detail
