#pragma once

// Fortran-BLAS-shaped entry points over the view API. Only the subset listed
// per routine is implemented; any other flag raises UnsupportedVariant.
// Increments must be positive.

#include <cstddef>

namespace ftblas::blas {

void dscal(std::size_t n, double alpha, double* x, std::ptrdiff_t incx);
void daxpy(std::size_t n, double alpha, const double* x, std::ptrdiff_t incx, double* y,
           std::ptrdiff_t incy);
double ddot(std::size_t n, const double* x, std::ptrdiff_t incx, const double* y, std::ptrdiff_t incy);
double dnrm2(std::size_t n, const double* x, std::ptrdiff_t incx);

/// trans = 'N'
void dgemv(char trans, std::size_t m, std::size_t n, double alpha, const double* a, std::size_t lda,
           const double* x, std::ptrdiff_t incx, double beta, double* y, std::ptrdiff_t incy);
/// uplo = 'L', trans = 'N', diag = 'N'
void dtrsv(char uplo, char trans, char diag, std::size_t n, const double* a, std::size_t lda, double* x,
           std::ptrdiff_t incx);
/// transa = transb = 'N'
void dgemm(char transa, char transb, std::size_t m, std::size_t n, std::size_t k, double alpha,
           const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta, double* c,
           std::size_t ldc);
/// side = 'L', uplo = 'L', transa = 'N', diag = 'N'; A is m x m, B is m x n.
void dtrsm(char side, char uplo, char transa, char diag, std::size_t m, std::size_t n, double alpha,
           const double* a, std::size_t lda, double* b, std::size_t ldb);

}  // namespace ftblas::blas
