#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "kernelcurves/harmonics.hpp"
#include "kernelcurves/kernels.hpp"
#include "kernelcurves/types.hpp"

namespace kernelcurves {

// n points drawn uniformly on S^{d-1}, one per row (standard Gaussian draws
// normalized to unit length; a zero-norm draw is resampled). The seeded
// overload is a convenience around the engine one.
Matrix sample_sphere(SphereDim dim, Index n, std::mt19937_64& engine);
Matrix sample_sphere(SphereDim dim, Index n, std::uint64_t seed);

// Pairwise cosines A B^T with every entry clamped to [-1, 1]. An entry more
// than 1e-12 outside that interval means the rows were not unit-norm and is
// an error. When both arguments are the same object the result is made
// exactly symmetric with a unit diagonal.
Matrix cosine_matrix(const Matrix& A, const Matrix& B);

// Kernel gram kappa(a_i . b_j) over all row pairs, via cosine_matrix.
Matrix gram(const DotKernel& kernel, const Matrix& A, const Matrix& B);

// Solves (K + ridge I) alpha = y by Cholesky, refining until the residual is
// at or under 1e-8 |y|. No jitter is ever added on the caller's behalf: a
// ridgeless system that fails to factor (or to reach the residual target)
// throws with the smallest gram eigenvalue and a suggested jitter instead.
Vector krr_fit(const Matrix& K, const Vector& y, double ridge);

// f(x) = sum_i alpha_i kappa(x . x_i) at each test row.
Vector predict(const DotKernel& kernel, const Vector& alpha, const Matrix& x_train,
               const Matrix& x_test);

enum class TeacherKind { KernelCombination, PureMode };

// Target function built from random centers: either a +-1 combination of
// kernel sections f*(x) = sum_i s_i kappa(x . c_i), or of single-degree
// Gegenbauer sections f*(x) = sum_i s_i Q_k(x . c_i).
struct Teacher {
  TeacherKind kind = TeacherKind::KernelCombination;
  Matrix centers;  // p' x d, rows unit-norm
  Vector signs;    // entries exactly +-1
  int degree = 0;  // PureMode only
};

Teacher random_teacher(TeacherKind kind, SphereDim dim, Index p_prime, std::mt19937_64& engine,
                       int degree = 0);
Teacher random_teacher(TeacherKind kind, SphereDim dim, Index p_prime, std::uint64_t seed,
                       int degree = 0);

Vector teacher_eval(const Teacher& teacher, const DotKernel& kernel, const Matrix& x);

// Frequency split of |f - f*|^2 under the uniform sphere measure. Levels with
// k <= kmax are reported individually; spectrum levels above kmax are summed
// into `tail`. Power beyond the spectrum's own truncation is invisible here.
struct ModeDecomposition {
  std::vector<int> degrees;
  Vector level_errors;
  double tail = 0.0;

  double total() const { return level_errors.sum() + tail; }
};

// Both functions must be expansions in the kernel itself: the student is
// sum alpha_i kappa(x . X_i), the teacher sum abar_i kappa(x . Xbar_i). Each
// level then contributes lambda_k^2 N(d,k) (a Qk(XX)a - 2 a Qk(XXb)ab
// + ab Qk(XbXb) ab) with Q_k applied entrywise to the cosine matrices. An
// empty student (zero-row X) gives the p = 0 error of the teacher alone.
// kmax < 0 means the spectrum's own kmax. Slightly negative values (squared
// norms eroded by cancellation) are clamped to zero, with a warning beyond
// -1e-10.
ModeDecomposition empirical_mode_errors(const Spectrum& spectrum, const Matrix& X,
                                        const Vector& alpha, const Matrix& Xbar,
                                        const Vector& alpha_bar, int kmax = -1);

// Teacher-aware wrapper. Kernel-combination teachers forward to the overload
// above; a pure-mode teacher of degree K is its own degree-K expansion, so
// only the K-th level swaps in the cross and self terms without the kernel's
// eigenvalue weights (2 lambda_K a Q_K ab and ab Q_K ab / N(d,K)).
ModeDecomposition empirical_mode_errors(const Spectrum& spectrum, const Matrix& X,
                                        const Vector& alpha, const Teacher& teacher,
                                        int kmax = -1);

enum class ExperimentKernel { Ntk, GaussianSphere };

struct ExperimentConfig {
  ExperimentKernel kernel = ExperimentKernel::Ntk;
  int depth = 3;             // Ntk
  double lengthscale = 1.0;  // GaussianSphere
  int d = 15;
  double ridge = 0.0;
  TeacherKind teacher = TeacherKind::KernelCombination;
  Index p_prime = 300;
  int teacher_degree = 0;
  bool fixed_teacher = false;  // default: teacher redrawn every trial
  std::vector<Index> p_list;
  int trials = 1;
  int spectrum_kmax = 60;
  int kmax = -1;  // decomposition cut; -1 = spectrum_kmax
  std::uint64_t seed = 0;

  DotKernel make_kernel() const;
  Spectrum make_spectrum() const;
};

ExperimentConfig experiment_config_from_json(const std::string& text);
std::string experiment_config_to_json(const ExperimentConfig& config);

// Per-trial decomposed errors plus their mean and unbiased (n-1) standard
// deviation over the trials that survived fitting. Each per-trial matrix is
// n_p x (levels + 2) with columns [E_k..., tail, total]; rows of failed fits
// hold NaN and are excluded from the aggregates (std needs two survivors).
struct ExperimentResult {
  std::vector<Index> p_list;
  std::vector<int> degrees;
  std::vector<Matrix> per_trial;
  Matrix mean_levels, std_levels;
  Vector mean_tail, std_tail, mean_total, std_total;
  Eigen::VectorXi failed;
  int trials = 0;
  std::uint64_t seed = 0;
  std::string config_json;
};

// Trial i draws everything from a generator seeded with seed + i: the teacher
// first (discarded when fixed_teacher — the fixed one comes from the master
// seed), then one training sample per p in order. Fit failures mark that
// (trial, p) cell failed and the run continues. Trials are strided across
// `threads` workers; the result is identical for any thread count.
ExperimentResult run_experiment(const ExperimentConfig& config, int threads = 1);

// CSV `p,mean_total,std_total,mean_k0,std_k0,...,mean_tail,std_tail,
// failed_trials` plus the resolved config as a JSON sidecar.
void save_experiment(const ExperimentResult& result, const std::string& path);

// Companion presentation with every error column divided by its own value at
// the first p, the usual way these curves are plotted.
void save_experiment_normalized(const ExperimentResult& result, const std::string& path);

}  // namespace kernelcurves
