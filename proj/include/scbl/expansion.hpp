#pragma once

#include <string>
#include <utility>
#include <vector>

#include "scbl/cache.hpp"
#include "scbl/geometry.hpp"
#include "scbl/model.hpp"
#include "scbl/spectral.hpp"
#include "scbl/test_function.hpp"

namespace scbl {

/// Everything that defines tr phi(H_p) apart from p and the grid.
struct Problem {
    Geometry geom;
    FieldData field;
    PotentialData potential;
    TestFunction phi;
};

struct LabOptions {
    double grid_factor = 48.0;  // resolved_grid factor
    bool two_grids = true;      // also evaluate on the refined grid
    TraceMethod method = TraceMethod::dense;
    KpmOptions kpm;
    EngineOptions engine;
    CacheContext cache;
};

/// Rule grid n for p and the refined grid (next multiple of 8 >= 1.5 n).
std::vector<int> lab_grid(const Problem& problem, int p, const LabOptions& opt);
std::vector<int> refined_grid(const std::vector<int>& grid);

struct SweepRow {
    int p = 0;
    double value = 0.0;  // p^{-d/2} tr phi(H_p) on the rule grid
    double stderr_ = 0.0;
    std::vector<int> grid;
    double check_value = 0.0;  // same on the refined grid (two_grids only)
    std::vector<int> check_grid;

    /// |value - check_value| / |check_value|; 0 without a refined grid.
    double grid_gap() const;
};

/// One row per p. Cached per (p, grid); rows already stored are replayed.
std::vector<SweepRow> trace_sweep(const Problem& problem, const std::vector<int>& p_list, const LabOptions& opt);

struct ExpansionFit {
    std::vector<int> p;
    std::vector<double> observed;
    int order = 0;                 // j
    RealVector coefficients;       // c_0 .. c_j
    RealVector standard_errors;    // zero when the fit is exactly determined
    double residual = 0.0;         // 2-norm of the weighted misfit
    double condition = 0.0;        // of the column-scaled design matrix
};

/// Least squares on the basis p^{-r/2}, r = 0..j, solved by QR after
/// scaling columns to unit norm.
ExpansionFit fit_half_power_expansion(const std::vector<int>& p, const std::vector<double>& values, int order,
                                      const std::vector<double>& weights = {});

struct LeadingIntegral {
    double value = 0.0;         // on the refined mesh
    double coarse_value = 0.0;  // on the configured mesh
    std::vector<int> mesh;      // configured points per axis (1 on axes the data ignore)
};

/// Integral of tr f_0(x) over the torus by the periodic trapezoidal rule.
/// The mesh is doubled once; disagreement above 1e-4 relative is an error.
LeadingIntegral leading_integral(const Geometry& geom, const FieldData& field, const PotentialData& potential,
                                 const TestFunction& phi, int points_per_axis = 16, const F0Options& f0 = {});

/// f_0 at one point of the torus.
ModelPointData model_point(const FieldData& field, const PotentialData& potential, std::span<const double> x0);

struct DiagonalPoint {
    std::vector<double> x0;
    ComplexMatrix scaled_kernel;  // p^{-d/2} K(x0, x0)
    ComplexMatrix f0;
    double rel_error = 0.0;       // max entry error / max |f0|
    ComplexMatrix check_kernel;   // refined grid
    double grid_gap = 0.0;
};

std::vector<DiagonalPoint> diagonal_compare(const Problem& problem, int p, const std::vector<std::vector<double>>& x0_list,
                                            const LabOptions& opt);

struct KernelPair {
    RealVector z;
    RealVector z_prime;
    ComplexMatrix lhs;  // gauge aligned p^{-d/2} K(x0 + Z, x0 + Z')
    ComplexMatrix rhs;  // F_0(sqrt(p) Z, sqrt(p) Z')
    double error = 0.0;       // max entry |lhs - rhs|
    double abs_error = 0.0;   // gauge-free: max entry ||lhs| - |rhs||
    double statistic = 0.0;   // error * (1 + sqrt(p) |Z - Z'|)^N * sqrt(p)
    ComplexMatrix check_lhs;  // refined grid
    double grid_gap = 0.0;
};

struct KernelComparison {
    int p = 0;
    std::vector<double> x0;
    int envelope = 0;  // N
    std::vector<KernelPair> pairs;
    double max_statistic = 0.0;
    double swap_defect = 0.0;  // max over pairs of the Hermitian swap defect of lhs and rhs
};

/// Lattice kernel near x0 against the model kernel at the rescaled points.
/// x0 + Z must be a lattice site inside the fundamental domain.
KernelComparison rescaled_kernel_compare(const Problem& problem, int p, const std::vector<double>& x0,
                                         const std::vector<std::pair<RealVector, RealVector>>& pairs, int envelope,
                                         const LabOptions& opt, const ModelKernelOptions& model = {});

struct DecayReport {
    std::vector<int> p;
    std::vector<double> abs_kernel;
    std::vector<double> check_abs_kernel;
    std::vector<std::vector<int>> grids;
    double distance = 0.0;  // periodic distance of the two points
    double slope = 0.0;     // least-squares log-log slope of abs_kernel
    double check_slope = 0.0;
    double threshold = -3.0;
    bool rapid = false;     // slope <= threshold
};

DecayReport offdiag_decay_check(const Problem& problem, const std::vector<int>& p_list, const std::vector<double>& x,
                                const std::vector<double>& x_prime, double epsilon, const LabOptions& opt,
                                double threshold = -3.0);

/// Shortest distance between two points on the torus.
double torus_distance(const Geometry& geom, std::span<const double> x, std::span<const double> y);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace scbl
