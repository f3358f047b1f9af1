#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kernelcurves/kernels.hpp"
#include "kernelcurves/theory.hpp"
#include "kernelcurves/types.hpp"

namespace kernelcurves {

// A finite point set carrying equal measure 1/p~ per row, with per-class
// targets (one-hot labels or regression values).
struct DiscreteDataset {
  Matrix points;   // p~ x d
  Matrix targets;  // p~ x C
  std::string source;
  bool normalized = false;
};

// CSV with header columns x0..x{d-1},y0..y{C-1}. Exact duplicate rows are an
// error (they make the ridgeless gram singular) unless allow_duplicates;
// normalize rescales rows to the unit sphere; subset >= 0 keeps that many
// rows chosen by a seeded shuffle.
DiscreteDataset load_dataset_csv(const std::string& path, bool normalize, Index subset = -1,
                                 std::uint64_t seed = 0, bool allow_duplicates = false);

// IDX pair (big-endian magic 0x00000803 for images, 0x00000801 for labels);
// pixels scaled to [0,1], labels one-hot encoded over 10 classes.
DiscreteDataset load_dataset_idx(const std::string& images_path, const std::string& labels_path,
                                 bool normalize, Index subset = -1, std::uint64_t seed = 0,
                                 bool allow_duplicates = false);

// Kernel eigensystem under the discrete uniform measure: K = U S U^T gives
// eigenvalues Lambda = S / p~ (descending, ties kept in factorization order,
// slight negatives clamped to zero) and eigenfunction values Phi = sqrt(p~)
// U^T with rows indexed by mode, orthonormal as (1/p~) Phi Phi^T = I. The
// targets are projected once on construction.
struct DiscreteEigensystem {
  Vector lambda;      // p~ entries, descending
  Matrix phi;         // p~ x p~, row rho = eigenfunction rho at every point
  Matrix wbar;        // p~ x C, rows of zero modes are zero
  Vector residual;    // per class: target power stranded in the null space
  Index zero_modes = 0;

  Index size() const { return lambda.size(); }
  Index classes() const { return wbar.cols(); }
};

// Dense symmetric eigendecomposition of the gram over the whole dataset;
// refuses more than max_points rows (the gram is materialized in full).
DiscreteEigensystem discrete_spectrum(const DotKernel& kernel, const DiscreteDataset& data,
                                      Index max_points = 20000);

// wbar = (1/p~) Lambda^{-1/2} Phi Y restricted to nonzero modes, so that
// y_c(x_i) = sum_rho sqrt(lambda_rho) wbar_{rho c} phi_rho(x_i) for targets
// inside the representable span.
Matrix project_targets(const DiscreteEigensystem& eig, const Matrix& y);

// Theory learning curves for the dataset: each nonzero mode becomes a
// degeneracy-1 level with fixed-target power wbar^2, classes are summed, and
// the null-space residual rides along as a constant floor on every total.
struct DatasetCurve {
  TheoryCurve curve;                   // total includes floor()
  std::vector<TheoryCurve> per_class;  // each total includes its class floor
  Vector class_floor;
  Index zero_modes = 0;

  double floor() const { return class_floor.sum(); }
};

DatasetCurve dataset_learning_curve(const DiscreteEigensystem& eig,
                                    const std::vector<double>& p_list, double ridge);

// Rank-octave compression of per-mode error columns: bin b sums modes of rank
// [2^b - 1, 2^(b+1) - 1). Row sums are preserved exactly up to reordering.
Matrix bin_mode_errors(const TheoryCurve& curve);

// Theory-module CSV plus one <stem>_class{c}.csv per class; the sidecar
// records source, sizes, ridge, floors, and zero-mode count.
void save_dataset_curve(const DatasetCurve& dc, const std::string& path,
                        const std::string& source);

}  // namespace kernelcurves
