#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kernelcurves/harmonics.hpp"
#include "kernelcurves/types.hpp"

namespace kernelcurves {

// Rotation-invariant kernel on the sphere, evaluated on the cosine z = x.x'.
struct DotKernel {
  std::string label;
  std::function<double(double)> kappa;

  double operator()(double z) const { return kappa(z); }
};

// One post-activation covariance step of the ReLU arc-cosine map,
// g(z) = sqrt(1-z^2)/pi + z (1 - acos(z)/pi), normalized so g(1) = 1.
double relu_covariance_step(double z);

// Derivative-layer factor 1 - acos(z)/pi.
double relu_derivative_factor(double z);

// Tangent-kernel recursion for a depth-`depth` fully connected ReLU network
// on the sphere. depth = 1 is the linear kernel z; each extra layer adds one
// covariance step. kappa(1) = depth.
double ntk_kappa(int depth, double z);
DotKernel ntk_kernel(int depth);

// RBF kernel restricted to the sphere: exp((z-1)/lengthscale^2).
DotKernel gaussian_sphere_kernel(double lengthscale);

enum class Measure { Sphere, Gaussian, Discrete };

// One degree level: eigenvalue lambda with `count` coinciding modes
// (count = N(d,k) on the sphere, C(d+k-1,k) under the Gaussian measure,
// 1 for discrete spectra).
struct SpectrumLevel {
  int k = 0;
  double lambda = 0.0;
  double count = 1.0;
};

struct Spectrum {
  int d = 0;
  Measure measure = Measure::Sphere;
  std::string label;
  int quad_order = 0;       // 0 when no quadrature was involved
  double tail_mass = 0.0;   // kappa(1) - sum_k lambda_k * count_k
  std::vector<SpectrumLevel> levels;

  int kmax() const { return levels.empty() ? -1 : levels.back().k; }
  double trace() const;
  double max_lambda() const;
};

// Projects kappa onto the degree levels with the quadrature rule:
// lambda_k = measure_ratio(d) * sum_i w_i kappa(z_i) Q_k(z_i).
// Requires rule.d == dim.d and rule.order >= max(1000, 4*kmax).
Spectrum spectrum_from_kernel(const DotKernel& kernel, SphereDim dim, int kmax,
                              const QuadratureRule& rule);

// Convenience: NTK spectrum with a fresh rule (order 0 picks the default).
Spectrum ntk_spectrum(int depth, SphereDim dim, int kmax = 60, int order = 0);

// Closed-form spectrum of exp(-|x-x'|^2 / (2 lengthscale^2)) for
// x ~ N(0, input_scale^2 I_d). Levels carry count C(d+k-1, k); the level
// masses sum to 1.
Spectrum gaussian_spectrum(int d, double lengthscale, double input_scale, int kmax);

// Projection coefficients a_k of an arbitrary scalar function on [-1,1];
// f(z) ~= sum_k a_k N(d,k) Q_k(z).
Vector expand_scalar_function(const std::function<double(double)>& f, SphereDim dim,
                              int kmax, const QuadratureRule& rule);

// CSV (k,lambda,degeneracy) plus a JSON sidecar at sidecar_path(path).
void save_spectrum(const Spectrum& s, const std::string& path);
Spectrum load_spectrum(const std::string& path);

}  // namespace kernelcurves
