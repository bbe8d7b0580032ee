#pragma once

// Dense kernels used by the autodiff ops. Each kernel has a plain serial
// reference in `serial::` and a row-parallel OpenMP variant at namespace
// scope. The parallel variants split work over output rows only, so every
// output element is reduced in the same order regardless of thread count.

#include <cstddef>
#include <cstdint>
#include <span>

namespace vaf::kernels {

/// Number of threads the parallel kernels will use (1 without OpenMP).
int max_threads();
void set_threads(int n);

// C[m x n] (+)= A[m x k] * B[k x n]
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate);
// C[m x n] += A[k x m]^T * B[k x n]
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
// C[m x n] += A[m x k] * B[n x k]^T
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);

/// Row-wise softmax over the valid entries of each row. Masked entries get
/// exactly 0. Returns the index of the first row with no valid entry, or
/// `rows` when every row has one; such rows are written as all zeros.
std::size_t masked_softmax_rows(std::size_t rows, std::size_t cols, const double* in, const std::uint8_t* mask,
                                double* out);

/// Row-wise layer normalization statistics and output (population variance).
void layer_norm_rows(std::size_t rows, std::size_t cols, const double* x, const double* gamma, const double* beta,
                     double eps, double* xhat, double* inv_std, double* y);

namespace serial {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
std::size_t masked_softmax_rows(std::size_t rows, std::size_t cols, const double* in, const std::uint8_t* mask,
                                double* out);
void layer_norm_rows(std::size_t rows, std::size_t cols, const double* x, const double* gamma, const double* beta,
                     double eps, double* xhat, double* inv_std, double* y);

}  // namespace serial

}  // namespace vaf::kernels
