#include "ftblas/blas.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "ftblas/level1.hpp"
#include "ftblas/level2.hpp"
#include "ftblas/level3.hpp"

namespace ftblas::blas {
namespace {

void expect(char flag, char want, const char* routine, const char* name) {
  if (std::toupper(static_cast<unsigned char>(flag)) != want)
    throw UnsupportedVariant(std::string(routine) + ": " + name + "='" + flag + "' is not supported");
}

std::size_t step(std::ptrdiff_t inc, const char* routine) {
  if (inc <= 0) throw UnsupportedVariant(std::string(routine) + ": increments must be positive");
  return static_cast<std::size_t>(inc);
}

template <class T>
BasicVectorView<T> vec(T* p, std::size_t n, std::ptrdiff_t inc, const char* routine) {
  return {unchecked, p, n, step(inc, routine)};
}

template <class T>
BasicMatrixView<T> mat(T* p, std::size_t m, std::size_t n, std::size_t ld, const char* routine) {
  if (ld < std::max<std::size_t>(m, 1))
    throw DimensionError(std::string(routine) + ": leading dimension " + std::to_string(ld) +
                         " < " + std::to_string(m));
  return {unchecked, p, m, n, ld};
}

}  // namespace

void dscal(std::size_t n, double alpha, double* x, std::ptrdiff_t incx) {
  scal(alpha, vec(x, n, incx, "dscal"));
}

void daxpy(std::size_t n, double alpha, const double* x, std::ptrdiff_t incx, double* y,
           std::ptrdiff_t incy) {
  axpy(alpha, vec(x, n, incx, "daxpy"), vec(y, n, incy, "daxpy"));
}

double ddot(std::size_t n, const double* x, std::ptrdiff_t incx, const double* y, std::ptrdiff_t incy) {
  return dot(vec(x, n, incx, "ddot"), vec(y, n, incy, "ddot"));
}

double dnrm2(std::size_t n, const double* x, std::ptrdiff_t incx) {
  return nrm2(vec(x, n, incx, "dnrm2"));
}

void dgemv(char trans, std::size_t m, std::size_t n, double alpha, const double* a, std::size_t lda,
           const double* x, std::ptrdiff_t incx, double beta, double* y, std::ptrdiff_t incy) {
  expect(trans, 'N', "dgemv", "trans");
  gemv(alpha, mat(a, m, n, lda, "dgemv"), vec(x, n, incx, "dgemv"), beta, vec(y, m, incy, "dgemv"));
}

void dtrsv(char uplo, char trans, char diag, std::size_t n, const double* a, std::size_t lda, double* x,
           std::ptrdiff_t incx) {
  expect(uplo, 'L', "dtrsv", "uplo");
  expect(trans, 'N', "dtrsv", "trans");
  expect(diag, 'N', "dtrsv", "diag");
  trsv(mat(a, n, n, lda, "dtrsv"), vec(x, n, incx, "dtrsv"));
}

void dgemm(char transa, char transb, std::size_t m, std::size_t n, std::size_t k, double alpha,
           const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta, double* c,
           std::size_t ldc) {
  expect(transa, 'N', "dgemm", "transa");
  expect(transb, 'N', "dgemm", "transb");
  gemm(alpha, mat(a, m, k, lda, "dgemm"), mat(b, k, n, ldb, "dgemm"), beta, mat(c, m, n, ldc, "dgemm"));
}

void dtrsm(char side, char uplo, char transa, char diag, std::size_t m, std::size_t n, double alpha,
           const double* a, std::size_t lda, double* b, std::size_t ldb) {
  expect(side, 'L', "dtrsm", "side");
  expect(uplo, 'L', "dtrsm", "uplo");
  expect(transa, 'N', "dtrsm", "transa");
  expect(diag, 'N', "dtrsm", "diag");
  trsm(alpha, mat(a, m, m, lda, "dtrsm"), mat(b, m, n, ldb, "dtrsm"));
}

}  // namespace ftblas::blas
