#pragma once

#include <vector>

#include "scbl/common.hpp"

namespace scbl {

/// Eigenvalues (ascending) of a dense Hermitian matrix; only the lower
/// triangle is referenced.
RealVector hermitian_eigenvalues(ComplexMatrix a);

/// Eigenvalues (ascending) and orthonormal eigenvectors in columns.
void hermitian_eigensystem(ComplexMatrix a, RealVector& values, ComplexMatrix& vectors);

/// Eigenvalues of a Hermitian band matrix given as (row, col, value)
/// entries with |row - col| <= bandwidth; only entries with row <= col are
/// read.
struct Entry {
    std::ptrdiff_t row;
    std::ptrdiff_t col;
    Complex value;
};
RealVector banded_eigenvalues(std::ptrdiff_t n, std::ptrdiff_t bandwidth, const std::vector<Entry>& entries);

/// Reverse Cuthill-McKee permutation of a symmetric sparsity pattern.
/// `order[k]` is the old index placed at position k.
std::vector<std::ptrdiff_t> reverse_cuthill_mckee(std::ptrdiff_t n, const std::vector<Entry>& entries);

/// Eigenvalues of a Hermitian matrix given by entries: dense LAPACK for
/// small or wide problems, RCM plus band LAPACK when the reordered
/// bandwidth is at most n/8.
RealVector sparse_block_eigenvalues(std::ptrdiff_t n, const std::vector<Entry>& entries);

}  // namespace scbl
