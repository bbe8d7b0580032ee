#include "vafusion/numerics/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#ifdef VAF_HAVE_OPENMP
#include <omp.h>
#endif

namespace vaf::kernels {

namespace {

// Below this many multiply-adds a fork/join costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 15;

inline bool valid(const std::uint8_t* mask, std::size_t i) { return mask == nullptr || mask[i] != 0; }

// Shared by the serial and parallel softmax so both produce identical rows.
inline bool softmax_row(std::size_t cols, const double* in, const std::uint8_t* mask, double* out) {
  double mx = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t j = 0; j < cols; ++j) {
    if (valid(mask, j)) {
      mx = std::max(mx, in[j]);
      any = true;
    }
  }
  if (!any) {
    std::fill(out, out + cols, 0.0);
    return false;
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < cols; ++j) {
    if (valid(mask, j)) {
      out[j] = std::exp(in[j] - mx);
      sum += out[j];
    } else {
      out[j] = 0.0;
    }
  }
  const double inv = 1.0 / sum;
  for (std::size_t j = 0; j < cols; ++j) out[j] *= inv;
  return true;
}

inline void layer_norm_row(std::size_t cols, const double* x, const double* gamma, const double* beta, double eps,
                           double* xhat, double* inv_std, double* y) {
  double mean = 0.0;
  for (std::size_t j = 0; j < cols; ++j) mean += x[j];
  mean /= static_cast<double>(cols);
  double var = 0.0;
  for (std::size_t j = 0; j < cols; ++j) {
    const double d = x[j] - mean;
    var += d * d;
  }
  var /= static_cast<double>(cols);
  const double is = 1.0 / std::sqrt(var + eps);
  *inv_std = is;
  for (std::size_t j = 0; j < cols; ++j) {
    xhat[j] = (x[j] - mean) * is;
    y[j] = gamma[j] * xhat[j] + beta[j];
  }
}

}  // namespace

int max_threads() {
#ifdef VAF_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef VAF_HAVE_OPENMP
  omp_set_num_threads(std::max(1, n));
#else
  (void)n;
#endif
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate) {
  const bool par = m * n * k >= kParallelWork && m > 1;
  (void)par;
#pragma omp parallel for schedule(static) if (par)
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    if (!accumulate) std::fill(ci, ci + n, 0.0);
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  const bool par = m * n * k >= kParallelWork && m > 1;
  (void)par;
#pragma omp parallel for schedule(static) if (par)
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double api = a[p * m + i];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  // Transposing B first turns the inner loop into a contiguous axpy.
  std::vector<double> bt(k * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
  const bool par = m * n * k >= kParallelWork && m > 1;
  (void)par;
#pragma omp parallel for schedule(static) if (par)
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = bt.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

std::size_t masked_softmax_rows(std::size_t rows, std::size_t cols, const double* in, const std::uint8_t* mask,
                                double* out) {
  std::size_t first_empty = rows;
  const bool par = rows * cols >= kParallelWork;
  (void)par;
#pragma omp parallel for schedule(static) if (par) reduction(min : first_empty)
  for (std::size_t r = 0; r < rows; ++r) {
    if (!softmax_row(cols, in + r * cols, mask ? mask + r * cols : nullptr, out + r * cols)) {
      first_empty = std::min(first_empty, r);
    }
  }
  return first_empty;
}

void layer_norm_rows(std::size_t rows, std::size_t cols, const double* x, const double* gamma, const double* beta,
                     double eps, double* xhat, double* inv_std, double* y) {
  const bool par = rows * cols >= kParallelWork;
  (void)par;
#pragma omp parallel for schedule(static) if (par)
  for (std::size_t r = 0; r < rows; ++r) {
    layer_norm_row(cols, x + r * cols, gamma, beta, eps, xhat + r * cols, inv_std + r, y + r * cols);
  }
}

namespace serial {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      c[i * n + j] = accumulate ? c[i * n + j] + s : s;
    }
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[p * m + i] * b[p * n + j];
      c[i * n + j] += s;
    }
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[j * k + p];
      c[i * n + j] += s;
    }
  }
}

std::size_t masked_softmax_rows(std::size_t rows, std::size_t cols, const double* in, const std::uint8_t* mask,
                                double* out) {
  std::size_t first_empty = rows;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!softmax_row(cols, in + r * cols, mask ? mask + r * cols : nullptr, out + r * cols) && first_empty == rows) {
      first_empty = r;
    }
  }
  return first_empty;
}

void layer_norm_rows(std::size_t rows, std::size_t cols, const double* x, const double* gamma, const double* beta,
                     double eps, double* xhat, double* inv_std, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    layer_norm_row(cols, x + r * cols, gamma, beta, eps, xhat + r * cols, inv_std + r, y + r * cols);
  }
}

}  // namespace serial

}  // namespace vaf::kernels
