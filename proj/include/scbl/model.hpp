#pragma once

#include <vector>

#include "scbl/common.hpp"
#include "scbl/test_function.hpp"

namespace scbl {

/// Local magnetic data at a base point.
struct ModelPointData {
    int dim = 0;
    RealMatrix skew;                   // M = B_{x0}
    RealVector frequencies;            // a_1 >= ... >= a_n > 0
    RealMatrix frame;                  // orthonormal; F^T M F = diag([[0,a_j],[-a_j,0]]) then zeros
    double rank_tolerance = 0.0;
    RealVector potential_values;       // V_mu, ascending, distinct
    std::vector<ComplexMatrix> projections;  // pi_mu, one per V_mu
    int rank_e = 1;

    int half_rank() const { return static_cast<int>(frequencies.size()); }
    int kernel_dim() const { return dim - 2 * half_rank(); }
    double frequency_product() const;
};

/// Eigen-structure of the antisymmetric matrix M: a_j from the spectrum of
/// the Hermitian matrix iM, a symplectic frame, and the rank. A negative
/// tolerance selects 1e-8 * max(1, ||M||).
ModelPointData b_eigenstructure(const RealMatrix& skew, double rank_tolerance = -1.0);

/// Adds V(x0): distinct eigenvalues (merged within 1e-9) and orthogonal
/// spectral projections.
void attach_potential(ModelPointData& data, const ComplexMatrix& v0);

struct LevelLadder {
    struct Member {
        std::vector<int> k;
        int mu = 0;
    };
    struct Level {
        double value = 0.0;
        int multiplicity = 0;
        std::vector<Member> members;
    };
    std::vector<Level> levels;  // ascending
    double cutoff = 0.0;
    double tail_bound = 0.0;
    bool empty = false;  // cutoff below the lowest level
};

/// All Lambda_{k,mu} = sum_j (2 k_j + 1) a_j + V_mu <= cutoff, coincident
/// values (within 1e-9) merged.
LevelLadder lambda_levels(const ModelPointData& data, double cutoff);

/// Smallest cutoff whose omitted tail is certified below `tail` (sum over
/// omitted levels of prod a_j * sup |phi| beyond the level).
double ladder_cutoff(const ModelPointData& data, const TestFunction& phi, double tail = 1e-10);

struct F0Options {
    double cutoff = -1.0;   // <= 0: automatic
    double rel_tol = 1e-10;
};

/// Leading coefficient f_0(x0) as an r_E x r_E Hermitian matrix.
ComplexMatrix f0_point(const ModelPointData& data, const TestFunction& phi, const F0Options& opt = {});

/// K_{phi(H^{(x0)})}(0, 0) from the spectral-projector form of the model
/// kernel, evaluated independently of f0_point (different summation order
/// and a different quadrature for the free directions).
ComplexMatrix model_kernel_diag_analytic(const ModelPointData& data, const TestFunction& phi,
                                         const F0Options& opt = {});

struct ModelKernelOptions {
    double spacing = 0.2;         // target lattice spacing
    double box_halfwidth = 0.0;   // <= 0: automatic, at least 8, 6 / sqrt(min a) and 2 max|Z| + 2
    bool richardson = true;       // combine spacings h and h/2
    double series_tolerance = 1e-13;
    int workers = 1;
};

/// F_0(Z, Z') from the Dirichlet-box model operator. The kernel is reduced
/// to F_0(Z - Z', 0) by magnetic translation, rotated into the symplectic
/// frame and split into at most two factors of dimension <= 2, each
/// expanded in Chebyshev moments; phi(x + y) is expanded on the product
/// window.
ComplexMatrix model_kernel_numeric(const ModelPointData& data, const TestFunction& phi, const RealVector& z,
                                   const RealVector& z_prime, const ModelKernelOptions& opt = {});

/// Phase relating F_0(Z, Z') to F_0(Z - Z', 0) in the symmetric gauge.
Complex magnetic_translation_phase(const RealMatrix& skew, const RealVector& z, const RealVector& z_prime);

}  // namespace scbl
