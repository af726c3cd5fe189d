#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "scbl/common.hpp"
#include "scbl/geometry.hpp"

namespace scbl {

/// Sparse Hermitian lattice operator. Sites are ordered row-major over the
/// grid (last axis fastest); the bundle component is the fastest index of
/// all, so matrix index = site * rank + component.
struct DiscreteOperator {
    SparseMatrix matrix;
    std::vector<int> grid;         // points per axis
    std::vector<double> spacing;   // h_i
    std::vector<double> origin;    // coordinates of site 0
    std::vector<bool> periodic;    // per axis
    int rank = 1;
    int p = 0;                     // tensor power; 0 marks a model operator
    bool model = false;

    int dim() const { return static_cast<int>(grid.size()); }
    std::ptrdiff_t sites() const;
    std::ptrdiff_t size() const { return matrix.rows(); }
    double cell_volume() const;

    std::vector<int> site_coords(std::ptrdiff_t site) const;
    std::ptrdiff_t site_index(std::span<const int> coords) const;
    std::vector<double> site_position(std::ptrdiff_t site) const;

    /// Site at the given position, or -1 when it is not a lattice point
    /// (tolerance 1e-9 of a spacing).
    std::ptrdiff_t locate(std::span<const double> x) const;

    /// Gershgorin enclosure of the spectrum.
    std::pair<double, double> gershgorin() const;
    double max_hermitian_defect() const;
};

/// Points per axis that resolve the magnetic length:
/// n_i >= factor * sqrt(p * max(max|B|, 2 pi)) * L_i / (2 pi), rounded up to
/// a multiple of 8, and at least 32.
std::vector<int> resolved_grid(const Geometry& geom, const FieldData& field, int p, double factor);

/// Smallest admissible n_i (the `factor = 8` bound, without rounding).
std::vector<double> minimum_grid(const Geometry& geom, const FieldData& field, int p);

/// (1/p) * gauge-covariant (2d+1)-point Laplacian with Peierls phases
/// exp(-i p * int_edge A) in the Landau gauge A_j = sum_{i<j} B_ij x_i, plus
/// V(x). Boundary hops carry the magnetic translation phase exp(i p theta).
DiscreteOperator assemble_hp(const Geometry& geom, const FieldData& field, const PotentialData& potential, int p,
                             const std::vector<int>& grid);

/// Model operator on the box [-W, W]^d with Dirichlet walls: nodes at
/// -W + i h, i = 1..n-1, h = 2W/n; vector potential A_j(w) = -1/2 sum_k M_jk w_k.
DiscreteOperator assemble_model_operator(const RealMatrix& skew, const ComplexMatrix& v0, double box_halfwidth,
                                         const std::vector<int>& grid);
/// Same with one half-width per axis (anisotropic spacing 2 W_i / n_i).
DiscreteOperator assemble_model_operator(const RealMatrix& skew, const ComplexMatrix& v0,
                                         const std::vector<double>& box_halfwidths, const std::vector<int>& grid);

/// Conjugation by the diagonal unitary exp(i p chi(x)).
DiscreteOperator gauge_transform(const DiscreteOperator& op, const std::function<double(std::span<const double>)>& chi);

/// Text triplet dump: a header line then "row col re im" per stored entry.
void write_triplets(const DiscreteOperator& op, std::ostream& out);

}  // namespace scbl
