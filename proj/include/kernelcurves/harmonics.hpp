#pragma once

#include <cstdint>
#include <stdexcept>
#include <type_traits>
#include <utility>

#include "kernelcurves/types.hpp"

namespace kernelcurves {

// Ambient dimension d of R^d; inputs live on the unit sphere S^{d-1}.
struct SphereDim {
  int d;
  explicit SphereDim(int dim) : d(dim) {
    if (d < 3) throw std::invalid_argument("SphereDim: d must be >= 3");
  }
};

// Number of spherical harmonics of degree k on S^{d-1}. Exact integer result;
// throws std::overflow_error when the value does not fit in 64 bits.
std::uint64_t degeneracy(SphereDim dim, int k);

// Same quantity converted to double after exact integer evaluation. Usable far
// beyond the 64-bit range (k in the hundreds).
double degeneracy_real(SphereDim dim, int k);

// Exact binomial coefficient rounded once to double.
double binomial_real(int n, int r);

// Total mass of the projected sphere measure, \int_{-1}^{1} (1-z^2)^{(d-3)/2} dz
// = Beta(1/2, (d-1)/2), and its reciprocal (the ratio of sphere surface areas
// that normalizes single-variable integrals against the full sphere average).
double weight_mass(SphereDim dim);
double measure_ratio(SphereDim dim);

namespace detail {
// Recurrence coefficients for the normalized Gegenbauer polynomials
// Q_{k+1}(z) = (c1 * z * Q_k(z) - c2 * Q_{k-1}(z)) / c3 with Q_k(1) = 1.
inline void gegenbauer_coeffs(int d, int k, double& c1, double& c2, double& c3) {
  const double alpha = 0.5 * (d - 2);
  c1 = 2.0 * (k + alpha);
  c2 = static_cast<double>(k);
  c3 = k + 2.0 * alpha;  // = k + d - 2
}
}  // namespace detail

// Normalized Gegenbauer (ultraspherical) polynomial Q_k with parameter
// (d-2)/2, scaled so Q_k(1) = 1. The normalization is folded into the
// three-term recurrence, which makes Q_k(1) == 1 hold exactly in floating
// point. Works for any real scalar type.
template <class S>
S gegenbauer(SphereDim dim, int k, S z) {
  if (k < 0) throw std::invalid_argument("gegenbauer: k must be >= 0");
  if (z > S(1) || z < S(-1)) throw std::domain_error("gegenbauer: |z| must be <= 1");
  if (k == 0) return S(1);
  S prev = S(1);
  S cur = z;
  for (int j = 1; j < k; ++j) {
    double c1, c2, c3;
    detail::gegenbauer_coeffs(dim.d, j, c1, c2, c3);
    S next = (S(c1) * z * cur - S(c2) * prev) / S(c3);
    prev = cur;
    cur = next;
  }
  return cur;
}

namespace detail {
template <class T, class = void>
struct scalar_of {
  using type = typename T::Scalar;
};
template <class T>
struct scalar_of<T, std::enable_if_t<std::is_arithmetic_v<T>>> {
  using type = T;
};
}  // namespace detail

// Walks Q_0, Q_1, ... over a fixed set of evaluation points held in an Eigen
// array (or a plain scalar). Two-buffer in-place stepping; value() is Q at the
// current degree.
template <class T>
class GegenbauerRecurrence {
 public:
  using S = typename detail::scalar_of<T>::type;

  GegenbauerRecurrence(SphereDim dim, T z)
      : d_(dim.d), z_(std::move(z)), prev_(ones_like(z_)), cur_(z_), k_(0) {}

  int degree() const { return k_; }
  const T& value() const { return k_ == 0 ? prev_ : cur_; }

  void advance() {
    if (k_ == 0) {  // Q_0 -> Q_1; buffers already hold (Q_0, Q_1)
      k_ = 1;
      return;
    }
    double c1, c2, c3;
    detail::gegenbauer_coeffs(d_, k_, c1, c2, c3);
    prev_ = (S(c1) * (z_ * cur_) - S(c2) * prev_) / S(c3);
    std::swap(prev_, cur_);
    ++k_;
  }

 private:
  static T ones_like(const T& ref) {
    if constexpr (std::is_arithmetic_v<T>) {
      (void)ref;
      return T(1);
    } else {
      return T::Ones(ref.rows(), ref.cols());
    }
  }

  int d_;
  T z_;
  T prev_, cur_;
  int k_;
};

// Gauss-Gegenbauer rule for \int_{-1}^{1} f(z) (1-z^2)^{(d-3)/2} dz.
// Nodes ascending, symmetric about 0; weights positive and symmetric.
struct QuadratureRule {
  int d = 0;
  int order = 0;
  QuadVector nodes;
  QuadVector weights;

  Vector nodes_d() const { return nodes.cast<double>(); }
  Vector weights_d() const { return weights.cast<double>(); }
};

// Golub-Welsch construction (symmetric tridiagonal Jacobi matrix; weights via
// the Christoffel sum of the orthonormal recurrence).
QuadratureRule gauss_gegenbauer(SphereDim dim, int order);

}  // namespace kernelcurves
