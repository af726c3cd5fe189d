#pragma once

#include <array>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "scbl/common.hpp"

namespace scbl {

/// Flat torus R^d / (L_1 Z x ... x L_d Z).
struct Geometry {
    int dim = 0;
    std::vector<double> lengths;
    double volume = 0.0;

    double min_length() const;
};

Geometry make_flat_torus(int dim, std::vector<double> side_lengths);

/// Unordered coordinate 2-plane (i < j), zero based.
using Plane = std::pair<int, int>;

/// One Fourier term of a periodic coefficient. It contributes
/// c * exp(i kappa.x) + conj(c) * exp(-i kappa.x) with kappa_l = 2 pi k_l / L_l,
/// so every mode is real on its own.
struct FourierMode {
    std::vector<int> k;
    Complex amplitude;
};

/// Magnetic field requested by the user before validation.
struct FieldSpec {
    struct Constant {
        int i = 0;
        int j = 1;
        double value = 0.0;
    };
    struct Perturbation {
        int i = 0;
        int j = 1;
        FourierMode mode;
    };
    std::vector<Constant> constants;
    std::vector<Perturbation> perturbations;
};

enum class FieldMode { constant, smooth_periodic };

/// Validated real closed 2-form B = sum_{i<j} B_ij(x) dx_i ^ dx_j on a torus.
class FieldData {
public:
    FieldMode mode() const { return mode_; }
    int dim() const { return dim_; }

    /// Constant (zero-mode) part as an antisymmetric matrix.
    const RealMatrix& constant_part() const { return constant_; }

    /// B_ij(x), antisymmetric in (i, j).
    double coefficient(int i, int j, std::span<const double> x) const;

    /// Flux integer c_ij for i < j: the integral of B_ij over the (i, j)
    /// coordinate 2-torus equals 2 pi c_ij.
    int flux_integer(int i, int j) const;
    const std::map<Plane, int>& flux_integers() const { return flux_; }

    /// max_x |B_ij(x)| over pairs, bounded by |constant| + sum of mode moduli.
    double max_abs() const;

    bool has_perturbation() const { return !potential_modes_.empty(); }

    /// Axes whose coordinate never appears in the perturbation (every mode has
    /// k_l = 0).
    bool perturbation_independent_of(int axis) const;

    /// Line integral of the periodic (perturbation) part of the vector
    /// potential from x to x + h e_axis. The constant part is handled by the
    /// gauge conventions of the operator assembly.
    double perturbation_link_integral(std::span<const double> x, int axis, double h) const;

    /// Periodic part of the vector potential at x (component `axis`).
    double perturbation_potential(std::span<const double> x, int axis) const;

    const Geometry& geometry() const { return geom_; }

private:
    friend FieldData make_field(const Geometry& geom, const FieldSpec& spec);

    struct PotentialMode {
        std::vector<double> kappa;
        std::vector<Complex> a;  // A_l += a_l exp(i kappa.x) + c.c.
    };
    struct CoefficientMode {
        int i, j;
        std::vector<double> kappa;
        Complex c;
    };

    Geometry geom_;
    int dim_ = 0;
    FieldMode mode_ = FieldMode::constant;
    RealMatrix constant_;
    std::vector<CoefficientMode> modes_;
    std::vector<PotentialMode> potential_modes_;
    std::map<Plane, int> flux_;
};

/// Validates antisymmetry, closedness and flux quantization (trapezoidal
/// quadrature on a 256 x 256 grid per plane, integrality to 1e-9 relative).
FieldData make_field(const Geometry& geom, const FieldSpec& spec);

/// d x d antisymmetric matrix of B at x0 (antisymmetrized on output).
RealMatrix skew_matrix_at(const FieldData& field, std::span<const double> x0);

/// Volume density in normal coordinates. Identically one on flat tori; fails
/// when |Z| reaches half the shortest side (outside the injectivity radius).
double volume_density_kappa(const Geometry& geom, std::span<const double> x0,
                            std::span<const double> z);

/// Hermitian endomorphism field V(x) of rank r_E.
struct PotentialSpec {
    struct Mode {
        int row = 0;
        int col = 0;
        FourierMode mode;
    };
    int rank = 1;
    ComplexMatrix constant;  // rank x rank; empty means zero
    std::vector<Mode> modes;
};

class PotentialData {
public:
    int rank() const { return rank_; }
    ComplexMatrix at(std::span<const double> x) const;
    bool is_zero() const { return zero_; }
    bool independent_of(int axis) const;
    /// Upper bound of the operator norm of V(x) over the torus.
    double max_norm() const;

private:
    friend PotentialData make_potential(const Geometry& geom, const PotentialSpec& spec);
    friend PotentialData zero_potential(int rank);
    struct Mode {
        int row, col;
        std::vector<double> kappa;
        std::vector<int> k;
        Complex c;
    };
    int rank_ = 1;
    ComplexMatrix constant_;
    std::vector<Mode> modes_;
    bool zero_ = true;
};

PotentialData make_potential(const Geometry& geom, const PotentialSpec& spec);
PotentialData zero_potential(int rank = 1);

}  // namespace scbl
