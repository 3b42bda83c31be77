#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace pistol::kernels {

// Dense double-precision kernels behind the toy model's inner loops. Each has
// a scalar reference and an AVX2/FMA variant; the variant is chosen once at
// startup from CPUID unless PISTOL_KERNELS=scalar forces the reference.
// Matrices are row-major with `cols` contiguous doubles per row.

struct KernelTable {
  std::string_view name;

  /// sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);

  /// y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  /// out[r] = bias[r] + dot(W[r], x) for r < rows
  void (*gemv)(const double* w, const double* bias, const double* x, double* out,
               std::size_t rows, std::size_t cols);

  /// y[c] += sum_r coef[r] * W[r][c]
  void (*gemv_t)(const double* w, const double* coef, double* y, std::size_t rows,
                 std::size_t cols);

  /// G[r][c] += coef[r] * x[c]
  void (*ger)(const double* coef, const double* x, double* g, std::size_t rows,
              std::size_t cols);
};

const KernelTable& scalar();
/// Null when the binary was built without AVX2 support.
const KernelTable* avx2();
bool avx2_supported() noexcept;

/// The table in use by the library.
const KernelTable& active();

/// Override the dispatch choice (tests); returns the previous table.
const KernelTable& set_active(const KernelTable& table);

}  // namespace pistol::kernels
