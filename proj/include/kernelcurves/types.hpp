#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace kernelcurves {

template <class S> using MatrixX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S> using VectorX = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S> using ArrayXX = Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S> using ArrayX  = Eigen::Array<S, Eigen::Dynamic, 1>;

using Scalar = double;
using Matrix = MatrixX<Scalar>;
using Vector = VectorX<Scalar>;
using Index  = Eigen::Index;

// Quadrature rules are built and evaluated at extended precision; everything
// downstream consumes plain doubles.
using Quad       = long double;
using QuadVector = VectorX<Quad>;

}  // namespace kernelcurves
