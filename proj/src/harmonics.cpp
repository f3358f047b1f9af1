#include "kernelcurves/harmonics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <vector>

namespace kernelcurves {

namespace {

// Minimal unsigned big integer (base 2^32 limbs). Only what exact binomial
// evaluation needs: multiply / exact-divide by small factors.
class BigUInt {
 public:
  explicit BigUInt(std::uint64_t v) {
    limbs_.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    if (v >> 32) limbs_.push_back(static_cast<std::uint32_t>(v >> 32));
  }

  void mul(std::uint32_t m) {
    std::uint64_t carry = 0;
    for (auto& limb : limbs_) {
      std::uint64_t cur = static_cast<std::uint64_t>(limb) * m + carry;
      limb = static_cast<std::uint32_t>(cur & 0xffffffffu);
      carry = cur >> 32;
    }
    if (carry) limbs_.push_back(static_cast<std::uint32_t>(carry));
  }

  // Division known to be exact (remainder would indicate a logic error).
  void div_exact(std::uint32_t m) {
    std::uint64_t rem = 0;
    for (auto it = limbs_.rbegin(); it != limbs_.rend(); ++it) {
      std::uint64_t cur = (rem << 32) | *it;
      *it = static_cast<std::uint32_t>(cur / m);
      rem = cur % m;
    }
    if (rem != 0) throw std::logic_error("BigUInt::div_exact: nonzero remainder");
    while (limbs_.size() > 1 && limbs_.back() == 0) limbs_.pop_back();
  }

  void add(const BigUInt& other) {
    limbs_.resize(std::max(limbs_.size(), other.limbs_.size()), 0);
    std::uint64_t carry = 0;
    for (std::size_t i = 0; i < limbs_.size(); ++i) {
      std::uint64_t cur = static_cast<std::uint64_t>(limbs_[i]) + carry +
                          (i < other.limbs_.size() ? other.limbs_[i] : 0u);
      limbs_[i] = static_cast<std::uint32_t>(cur & 0xffffffffu);
      carry = cur >> 32;
    }
    if (carry) limbs_.push_back(static_cast<std::uint32_t>(carry));
  }

  // this -= other; requires this >= other.
  void sub(const BigUInt& other) {
    std::int64_t borrow = 0;
    for (std::size_t i = 0; i < limbs_.size(); ++i) {
      std::int64_t cur = static_cast<std::int64_t>(limbs_[i]) - borrow -
                         (i < other.limbs_.size() ? static_cast<std::int64_t>(other.limbs_[i]) : 0);
      if (cur < 0) {
        cur += (std::int64_t(1) << 32);
        borrow = 1;
      } else {
        borrow = 0;
      }
      limbs_[i] = static_cast<std::uint32_t>(cur);
    }
    if (borrow != 0) throw std::logic_error("BigUInt::sub: negative result");
    while (limbs_.size() > 1 && limbs_.back() == 0) limbs_.pop_back();
  }

  bool fits_u64() const { return limbs_.size() <= 2; }

  std::uint64_t to_u64() const {
    std::uint64_t v = limbs_[0];
    if (limbs_.size() > 1) v |= static_cast<std::uint64_t>(limbs_[1]) << 32;
    return v;
  }

  double to_double() const {
    double v = 0.0;
    for (auto it = limbs_.rbegin(); it != limbs_.rend(); ++it) v = v * 4294967296.0 + *it;
    if (!std::isfinite(v)) throw std::overflow_error("BigUInt: value exceeds double range");
    return v;
  }

 private:
  std::vector<std::uint32_t> limbs_;
};

// C(n, r) exactly; the running product stays integral when the factors are
// applied in order.
BigUInt big_binomial(long n, long r) {
  if (r < 0 || r > n) return BigUInt(0);
  if (r > n - r) r = n - r;
  BigUInt b(1);
  for (long i = 1; i <= r; ++i) {
    b.mul(static_cast<std::uint32_t>(n - r + i));
    b.div_exact(static_cast<std::uint32_t>(i));
  }
  return b;
}

// N(d, k) = C(d+k-1, k) - C(d+k-3, k-2): harmonic polynomials of degree k as
// homogeneous ones modulo the Laplacian image.
BigUInt big_degeneracy(int d, int k) {
  if (k < 0) throw std::invalid_argument("degeneracy: k must be >= 0");
  if (k == 0) return BigUInt(1);
  BigUInt n = big_binomial(static_cast<long>(d) + k - 1, k);
  if (k >= 2) n.sub(big_binomial(static_cast<long>(d) + k - 3, k - 2));
  return n;
}

}  // namespace

std::uint64_t degeneracy(SphereDim dim, int k) {
  BigUInt n = big_degeneracy(dim.d, k);
  if (!n.fits_u64()) throw std::overflow_error("degeneracy: value exceeds 64-bit range");
  return n.to_u64();
}

double degeneracy_real(SphereDim dim, int k) { return big_degeneracy(dim.d, k).to_double(); }

double binomial_real(int n, int r) {
  if (n < 0) throw std::invalid_argument("binomial_real: n must be >= 0");
  return big_binomial(n, r).to_double();
}

double weight_mass(SphereDim dim) {
  const long double half_dm1 = 0.5L * (dim.d - 1);
  const long double half_d = 0.5L * dim.d;
  const long double mass = std::sqrt(std::numbers::pi_v<long double>) *
                           std::exp(std::lgamma(half_dm1) - std::lgamma(half_d));
  return static_cast<double>(mass);
}

double measure_ratio(SphereDim dim) {
  const long double half_dm1 = 0.5L * (dim.d - 1);
  const long double half_d = 0.5L * dim.d;
  const long double mass = std::sqrt(std::numbers::pi_v<long double>) *
                           std::exp(std::lgamma(half_dm1) - std::lgamma(half_d));
  return static_cast<double>(1.0L / mass);
}

QuadratureRule gauss_gegenbauer(SphereDim dim, int order) {
  if (order < 1) throw std::invalid_argument("gauss_gegenbauer: order must be >= 1");
  const int r = order;
  const Quad mu = 0.5L * (dim.d - 3);  // weight (1-z^2)^mu

  // Jacobi matrix of the monic recurrence: zero diagonal (even weight),
  // off-diagonal sqrt(beta_n), beta_n = n(n+2mu) / (4(n+mu)^2 - 1).
  QuadVector beta(r);  // beta[0] = total mass, beta[n>=1] as above
  beta[0] = std::sqrt(std::numbers::pi_v<Quad>) *
            std::exp(std::lgamma(mu + 1.0L) - std::lgamma(mu + 1.5L));
  for (int n = 1; n < r; ++n) {
    const Quad qn = static_cast<Quad>(n);
    beta[n] = qn * (qn + 2.0L * mu) / (4.0L * (qn + mu) * (qn + mu) - 1.0L);
  }

  QuadVector diag = QuadVector::Zero(r);
  QuadVector sub(r > 1 ? r - 1 : 0);
  for (int n = 1; n < r; ++n) sub[n - 1] = std::sqrt(beta[n]);

  Eigen::SelfAdjointEigenSolver<MatrixX<Quad>> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("gauss_gegenbauer: eigenvalue iteration failed");

  QuadratureRule rule;
  rule.d = dim.d;
  rule.order = r;
  rule.nodes = solver.eigenvalues();  // ascending

  // Symmetrize the +/- node pairs exactly.
  for (int i = 0; i < r / 2; ++i) {
    const Quad x = 0.5L * (rule.nodes[i] - rule.nodes[r - 1 - i]);
    rule.nodes[i] = x;
    rule.nodes[r - 1 - i] = -x;
  }
  if (r % 2 == 1) rule.nodes[r / 2] = 0.0L;

  // Weights from the Christoffel sum over the orthonormal polynomials:
  // w_i = 1 / sum_j p_j(x_i)^2 with p_0 = 1/sqrt(beta_0),
  // sqrt(beta_{j+1}) p_{j+1}(x) = x p_j(x) - sqrt(beta_j) p_{j-1}(x).
  rule.weights.resize(r);
  const Quad p0 = 1.0L / std::sqrt(beta[0]);
  for (int i = 0; i < r; ++i) {
    const Quad x = rule.nodes[i];
    Quad pm1 = 0.0L;
    Quad p = p0;
    Quad s = p * p;
    for (int j = 1; j < r; ++j) {
      const Quad pn = (x * p - std::sqrt(beta[j - 1]) * pm1) / std::sqrt(beta[j]);
      pm1 = p;
      p = pn;
      s += p * p;
    }
    rule.weights[i] = 1.0L / s;
  }

  // Construction-time sanity: mass, positivity, strict ordering.
  const Quad wsum = rule.weights.sum();
  if (std::abs(static_cast<double>(wsum / beta[0]) - 1.0) > 1e-10)
    throw std::runtime_error("gauss_gegenbauer: weight mass check failed");
  for (int i = 0; i < r; ++i) {
    if (!(rule.weights[i] > 0.0L))
      throw std::runtime_error("gauss_gegenbauer: nonpositive weight");
    if (i > 0 && !(rule.nodes[i] > rule.nodes[i - 1]))
      throw std::runtime_error("gauss_gegenbauer: nodes not strictly increasing");
    if (!(rule.nodes[i] > -1.0L && rule.nodes[i] < 1.0L))
      throw std::runtime_error("gauss_gegenbauer: node outside (-1, 1)");
  }
  return rule;
}

}  // namespace kernelcurves
