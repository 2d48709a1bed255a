#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace ftblas {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Operand shapes, strides or storage sizes are inconsistent.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A triangular operand has an exactly zero diagonal entry.
class SingularMatrixError : public std::domain_error {
 public:
  explicit SingularMatrixError(std::size_t pivot)
      : std::domain_error("zero pivot at diagonal index " + std::to_string(pivot)),
        pivot_(pivot) {}
  [[nodiscard]] std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

/// A BLAS flag combination outside the implemented subset (e.g. trans='T').
class UnsupportedVariant : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid tuning or tolerance parameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct unchecked_t {
  explicit unchecked_t() = default;
};
inline constexpr unchecked_t unchecked{};

// ---------------------------------------------------------------------------
// Views
// ---------------------------------------------------------------------------

/// Strided, non-owning view of n reals: element i lives at data()[i * stride].
template <class T>
class BasicVectorView {
 public:
  using element_type = T;

  constexpr BasicVectorView() noexcept = default;

  /// Checked constructor: `storage` must cover (n-1)*stride+1 elements.
  BasicVectorView(std::span<T> storage, std::size_t n, std::size_t stride = 1)
      : data_(storage.data()), size_(n), stride_(stride) {
    if (stride == 0) throw DimensionError("vector stride must be >= 1");
    if (n > 0 && storage.size() < (n - 1) * stride + 1)
      throw DimensionError("vector storage too small for length " + std::to_string(n) +
                           " and stride " + std::to_string(stride));
  }

  /// View over a whole contiguous span.
  explicit BasicVectorView(std::span<T> storage) noexcept
      : data_(storage.data()), size_(storage.size()), stride_(1) {}

  constexpr BasicVectorView(unchecked_t, T* data, std::size_t n, std::size_t stride) noexcept
      : data_(data), size_(n), stride_(stride) {}

  template <class U>
    requires std::is_same_v<const U, T> && (!std::is_same_v<U, T>)
  constexpr BasicVectorView(const BasicVectorView<U>& other) noexcept  // NOLINT
      : data_(other.data()), size_(other.size()), stride_(other.stride()) {}

  [[nodiscard]] constexpr T* data() const noexcept { return data_; }
  [[nodiscard]] constexpr std::size_t size() const noexcept { return size_; }
  [[nodiscard]] constexpr std::size_t stride() const noexcept { return stride_; }
  [[nodiscard]] constexpr bool contiguous() const noexcept { return stride_ == 1; }

  constexpr T& operator[](std::size_t i) const noexcept { return data_[i * stride_]; }

  [[nodiscard]] constexpr BasicVectorView subview(std::size_t offset, std::size_t len) const noexcept {
    return {unchecked, data_ + offset * stride_, len, stride_};
  }

 private:
  T* data_ = nullptr;
  std::size_t size_ = 0;
  std::size_t stride_ = 1;
};

using VectorView = BasicVectorView<double>;
using ConstVectorView = BasicVectorView<const double>;

/// Column-major, non-owning m x n view with leading dimension ld:
/// element (i, j) is data()[i + j * ld].
template <class T>
class BasicMatrixView {
 public:
  using element_type = T;

  constexpr BasicMatrixView() noexcept = default;

  /// Checked constructor: ld >= max(m, 1) and storage covers (n-1)*ld+m elements.
  BasicMatrixView(std::span<T> storage, std::size_t m, std::size_t n, std::size_t ld)
      : data_(storage.data()), rows_(m), cols_(n), ld_(ld) {
    if (ld < m || ld == 0)
      throw DimensionError("leading dimension " + std::to_string(ld) + " < rows " +
                           std::to_string(m));
    if (m > 0 && n > 0 && storage.size() < (n - 1) * ld + m)
      throw DimensionError("matrix storage holds " + std::to_string(storage.size()) +
                           " elements, need " + std::to_string((n - 1) * ld + m));
  }

  constexpr BasicMatrixView(unchecked_t, T* data, std::size_t m, std::size_t n, std::size_t ld) noexcept
      : data_(data), rows_(m), cols_(n), ld_(ld) {}

  template <class U>
    requires std::is_same_v<const U, T> && (!std::is_same_v<U, T>)
  constexpr BasicMatrixView(const BasicMatrixView<U>& other) noexcept  // NOLINT
      : data_(other.data()), rows_(other.rows()), cols_(other.cols()), ld_(other.ld()) {}

  [[nodiscard]] constexpr T* data() const noexcept { return data_; }
  [[nodiscard]] constexpr std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] constexpr std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] constexpr std::size_t ld() const noexcept { return ld_; }
  [[nodiscard]] constexpr bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

  constexpr T& operator()(std::size_t i, std::size_t j) const noexcept { return data_[i + j * ld_]; }

  [[nodiscard]] constexpr BasicMatrixView block(std::size_t i0, std::size_t j0, std::size_t m,
                                                std::size_t n) const noexcept {
    return {unchecked, data_ + i0 + j0 * ld_, m, n, ld_};
  }
  [[nodiscard]] constexpr BasicVectorView<T> col(std::size_t j) const noexcept {
    return {unchecked, data_ + j * ld_, rows_, 1};
  }
  [[nodiscard]] constexpr BasicVectorView<T> row(std::size_t i) const noexcept {
    return {unchecked, data_ + i, cols_, ld_};
  }

 private:
  T* data_ = nullptr;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t ld_ = 1;
};

using MatrixView = BasicMatrixView<double>;
using ConstMatrixView = BasicMatrixView<const double>;

MatrixView make_matrix_view(std::span<double> storage, std::size_t m, std::size_t n, std::size_t ld);
ConstMatrixView make_matrix_view(std::span<const double> storage, std::size_t m, std::size_t n,
                                 std::size_t ld);
VectorView make_vector_view(std::span<double> storage, std::size_t n, std::size_t stride = 1);
ConstVectorView make_vector_view(std::span<const double> storage, std::size_t n,
                                 std::size_t stride = 1);

/// Owning column-major matrix (ld == rows), mostly for tests and the bench.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t m, std::size_t n, double fill = 0.0) : rows_(m), cols_(n), data_(m * n, fill) {}

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] std::size_t ld() const noexcept { return rows_ == 0 ? 1 : rows_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i + j * rows_]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i + j * rows_]; }

  [[nodiscard]] MatrixView view() noexcept { return {unchecked, data_.data(), rows_, cols_, ld()}; }
  [[nodiscard]] ConstMatrixView view() const noexcept {
    return {unchecked, data_.data(), rows_, cols_, ld()};
  }
  [[nodiscard]] std::span<double> storage() noexcept { return data_; }
  [[nodiscard]] std::span<const double> storage() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Cache (MC, NC, KC) and register (MR, NR) blocking for the level-3 kernels.
struct BlockingParams {
  std::size_t mc = 256;
  std::size_t nc = 4096;
  std::size_t kc = 256;
  std::size_t mr = 8;
  std::size_t nr = 4;

  /// Throws ConfigError unless every edge is >= 1, MC % MR == 0, NC % NR == 0
  /// and MR * NR <= 64.
  void validate() const;
};

/// Round-off threshold policy for checksum comparisons.
///
/// A disagreement d against a maintained checksum value s that accumulated
/// k_eff products is an error iff
///   |d| > max(abs_floor, rel_factor * u * k_eff * max(|s|, 1)),
/// u being the unit roundoff of double (2^-53).
struct ToleranceConfig {
  double rel_factor = 64.0;
  double abs_floor = 0.0;

  void validate() const;
  [[nodiscard]] double threshold(double s, double k_eff) const noexcept;
  [[nodiscard]] bool exceeds(double d, double s, double k_eff) const noexcept;
};

inline constexpr double unit_roundoff = std::numeric_limits<double>::epsilon() / 2;

// ---------------------------------------------------------------------------
// Fault-tolerance reporting
// ---------------------------------------------------------------------------

enum class FtResolution : std::uint8_t { corrected, unrecoverable };

struct FtEvent {
  std::size_t iteration = 0;  ///< routine-local verification interval (ABFT step or DMR block)
  std::ptrdiff_t row = -1;
  std::ptrdiff_t col = -1;    ///< -1 for vector routines
  double magnitude = 0.0;
  FtResolution resolution = FtResolution::corrected;

  friend bool operator==(const FtEvent&, const FtEvent&) = default;
};

struct FtReport {
  std::size_t detected = 0;
  std::size_t corrected = 0;
  std::size_t unrecoverable = 0;
  std::vector<FtEvent> events;

  [[nodiscard]] bool clean() const noexcept { return detected == 0; }
  [[nodiscard]] bool ok() const noexcept { return unrecoverable == 0; }
  void merge(const FtReport& other);
};

template <class T>
struct FtResult {
  T value{};
  FtReport report;
};

}  // namespace ftblas
