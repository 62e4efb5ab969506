#pragma once

#include <cstdint>

#include "specklepair/medium.hpp"

namespace specklepair {

// Per-axis double-Gaussian pair state. In the momentum representation the
// amplitude is exp(-nu_sum^2 / (4 u^2) - nu_diff^2 / (4 v^2)) with
// nu_sum = nu_s + nu_i and nu_diff = nu_s - nu_i, so u is the standard
// deviation of the sum-coordinate distribution and v that of the
// difference coordinate (both 1/mm). v > u gives momentum anticorrelation.
struct AxisParams {
    double u = 0.0;
    double v = 0.0;

    static AxisParams from_widths(double u, double v);
    // v chosen so the Schmidt number equals k.
    static AxisParams from_sum_and_k(double u, double k);
    // From the 1/e field radii of the position marginal (mm) and the
    // momentum marginal (1/mm).
    static AxisParams from_position_and_marginal(double sigma_position_mm,
                                                 double sigma_marginal_per_mm);
    static AxisParams from_sum_and_marginal(double u,
                                            double sigma_marginal_per_mm);

    // 1/e field radius of the single-photon momentum marginal, sqrt(u^2+v^2).
    double marginal_width() const;
    // 1/e field radius of the single-photon position marginal.
    double position_width() const;
    // Schmidt number (u^2 + v^2) / (2 u v).
    double schmidt_k() const;
    // Geometric ratio of successive Schmidt probabilities, (K-1)/(K+1).
    double mode_ratio() const;
};

// Closed-form Schmidt number from the two marginal widths:
// K = pi * sigma_position * sigma_marginal.
double schmidt_number(double sigma_position_mm, double sigma_marginal_per_mm);

// Separable product state over the two transverse axes.
struct DoubleGaussianState {
    AxisParams x;
    AxisParams y;

    double schmidt_k() const { return x.schmidt_k() * y.schmidt_k(); }
};

// Position-space pair amplitude of one axis sampled on the grid, scaled by
// the pitch so the matrix acts as a discrete l2 kernel.
Eigen::MatrixXd axis_kernel(const AxisParams& params, int n, double pitch_mm);

struct AxisSchmidt {
    AxisParams params;
    int n = 0;
    double pitch_mm = 0.0;
    RealVector lambdas;     // kept mode probabilities, descending
    Eigen::MatrixXd modes;  // n x kept, l2-orthonormal columns
    double captured = 0.0;  // sum of kept lambdas; full spectrum sums to 1
    double k_svd = 0.0;     // 1 / sum(lambda^2) over the full spectrum
};

// Eigendecomposition of the axis kernel: Schmidt probabilities are the
// normalized squared eigenvalues; kept modes are the top n_modes columns
// with a deterministic sign convention.
AxisSchmidt schmidt_decompose_axis(const AxisParams& params, int n,
                                   double pitch_mm, int n_modes);

// Discrete two-axis model with the tables the detector and the analytic
// correlation map share. Axis order: x varies along columns, y along rows.
// The idler arm (inverting relay + 2f lens) turns position modes into the
// camera-plane spectra vt; w columns are the conditional signal position
// fields for each idler camera pixel; signal_joint is the per-axis joint
// camera pmf when the signal arm is empty.
struct BiphotonModel {
    DoubleGaussianState state;
    int n = 0;
    double pitch_mm = 0.0;
    AxisSchmidt ax; // x axis
    AxisSchmidt ay; // y axis
    ComplexMatrix vt_x, vt_y;           // n x kept idler mode spectra
    ComplexMatrix w_x, w_y;             // n x n conditional position fields
    RealImage signal_joint_x, signal_joint_y; // n x n, (signal px, idler px)
    RealVector idler_marginal_x, idler_marginal_y; // per-axis, sums = captured

    double captured() const { return ax.captured * ay.captured; }
    int n_modes() const { return static_cast<int>(ax.lambdas.size()); }
};

// Build the discrete model. Refuses when the kept modes capture less than
// min_capture of the state unless force is set.
BiphotonModel build_biphoton_model(const DoubleGaussianState& state, int n,
                                   double pitch_mm, int n_modes,
                                   bool force = false,
                                   double min_capture = 0.99);

// Conditional signal position field given an idler camera pixel
// (jx, jy): outer product of the per-axis conditional columns.
ComplexImage conditional_position_field(const BiphotonModel& model, int jx,
                                        int jy);

// Idler camera pmf on the full grid (outer product of the axis marginals).
RealImage idler_camera_pmf(const BiphotonModel& model);

// Exact sum-coordinate coincidence distribution of the modeled state with
// the signal arm transmittance t (empty = transparent). Momentum sums are
// taken on the camera torus (modulo the grid); the map is returned in the
// (2n-1)^2 frame of the frame-stack correlator with one entry per residue
// class at the representatives |q| in [-n/2, n/2 - 1], zeros elsewhere,
// center index n, sample spacing the camera frequency pitch. The entries
// sum to the captured probability for any phase-only medium.
RealImage analytic_sum_map(const BiphotonModel& model, const ComplexImage& t);

} // namespace specklepair
