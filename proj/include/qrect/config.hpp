#pragma once

// Numerical tolerances and default parameters, collected in one place.

namespace qrect::config {

// core geometry
inline constexpr double symmetry_tol = 1e-10;
inline constexpr double idempotence_tol = 1e-8;
inline constexpr double frame_tol = 1e-10;

// eigensolver
inline constexpr double jacobi_tol = 1e-12;
inline constexpr int jacobi_max_sweeps = 100;
inline constexpr double eigen_symmetry_tol = 1e-8;

// analysis
inline constexpr double tangent_radius_factor = 2.0;  // h = factor * mean NN spacing
inline constexpr double gap_tol = 1e-6;
inline constexpr double flip_tol = 0.0;
inline constexpr double flatness_rotation_angle = 0.3;
inline constexpr int flatness_rotations = 24;
inline constexpr int flatness_grid_half = 10;  // plane grid has 2*half+1 nodes per axis

// plane fitting
inline constexpr double t1_eigengap = 0.1;
inline constexpr double c0 = 1.0 / 50.0;
inline constexpr double span_residual_tol = 1e-8;

// ccbp
inline constexpr int ccbp_depth = 6;
inline constexpr double ccbp_region_factor = 10.0;  // working radius in units of r_0
inline constexpr double ccbp_fit_factor = 120.0;
inline constexpr double ccbp_spacing_factor = 3.0;  // r_k >= factor * mean NN spacing

// parameterization
inline constexpr double bump_inner = 8.0;
inline constexpr double bump_outer = 10.0;

// poincare
inline constexpr double graph_radius_factor = 1.5;
inline constexpr double poincare_p = 2.0;
inline constexpr int hinge_count = 5;
inline constexpr double zero_lhs_tol = 1e-14;

}  // namespace qrect::config
