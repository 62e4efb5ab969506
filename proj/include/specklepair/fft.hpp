#pragma once

#include <complex>

#include <Eigen/Dense>

namespace specklepair {

// Row-major arrays: row index = y, column index = x.
using ComplexImage = Eigen::Array<std::complex<double>, Eigen::Dynamic,
                                  Eigen::Dynamic, Eigen::RowMajor>;
using RealImage = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic,
                               Eigen::RowMajor>;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

// Centered unitary 2-D DFT on an even-sized grid: both input and output are
// indexed so that the zero coordinate sits at index N/2. sign = -1 uses the
// kernel exp(-i*2*pi*nu*x) (position -> frequency), sign = +1 its conjugate.
// Unitary normalization (1/sqrt(Nx*Ny)); physical pitch factors are applied
// by the caller. Grid sizes must be even.
ComplexImage centered_dft(const ComplexImage& in, int sign);

// Same transform for a 1-D vector (even length).
ComplexVector centered_dft_1d(const ComplexVector& in, int sign);

// Plain unnormalized DFT with the origin at index 0 (convolution work).
ComplexImage raw_dft(const ComplexImage& in, int sign);

// Drops all cached FFTW plans (mainly for leak checkers).
void clear_plan_cache();

} // namespace specklepair
