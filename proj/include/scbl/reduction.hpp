#pragma once

#include <vector>

#include "scbl/linalg.hpp"
#include "scbl/operator.hpp"

namespace scbl {

/// Exact block decomposition of a lattice operator by the discrete
/// translations it commutes with up to characters. Along every axis l in
/// `axes` each entry satisfies
///     H[(u, a), (v, a + delta)] = g(u, v, delta) * prod_l w_l^(s_l a_l),
/// w_l = exp(2 pi i / n_l). A discrete Fourier transform in those axes then
/// maps H to a matrix whose connected components are the blocks below.
struct BlockDecomposition {
    std::vector<int> axes;
    struct Block {
        std::ptrdiff_t size = 0;
        std::vector<Entry> entries;  // empty for duplicates
        int reference = -1;          // index of an equal block, or -1
        double shift = 0.0;          // eigenvalues = reference + shift
    };
    std::vector<Block> blocks;
    std::ptrdiff_t total_size = 0;
    std::ptrdiff_t largest_block() const;
    std::size_t distinct_blocks() const;
};

/// Searches the periodic axes for the largest admissible set and returns the
/// decomposition. An operator with no admissible axis comes back as one block.
BlockDecomposition decompose_translations(const DiscreteOperator& op);

/// All eigenvalues, ascending, by solving each distinct block once.
RealVector block_eigenvalues(const BlockDecomposition& dec, int workers);

}  // namespace scbl
