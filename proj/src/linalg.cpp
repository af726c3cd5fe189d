#include "scbl/linalg.hpp"

#include <algorithm>
#include <complex>
#include <deque>
#include <numeric>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace scbl {

RealVector hermitian_eigenvalues(ComplexMatrix a) {
    const lapack_int n = static_cast<lapack_int>(a.rows());
    RealVector w(n);
    if (n == 0) return w;
    const lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'L', n, a.data(), n, w.data());
    if (info != 0) throw NumericalError("spectral_engine", "dense_spectrum", "zheevd failed to converge");
    return w;
}

void hermitian_eigensystem(ComplexMatrix a, RealVector& values, ComplexMatrix& vectors) {
    const lapack_int n = static_cast<lapack_int>(a.rows());
    values.resize(n);
    vectors.resize(n, n);
    if (n == 0) return;
    // zheevr rather than zheevd: the divide-and-conquer vectors from the
    // system LAPACK are wrong above a few hundred rows
    lapack_int found = 0;
    std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
    const lapack_int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', 'A', 'L', n, a.data(), n, 0.0, 0.0, 0, 0, 0.0,
                                           &found, values.data(), vectors.data(), n, support.data());
    if (info != 0 || found != n) throw NumericalError("spectral_engine", "dense_spectrum", "zheevr failed to converge");
}

RealVector banded_eigenvalues(std::ptrdiff_t n, std::ptrdiff_t bandwidth, const std::vector<Entry>& entries) {
    const lapack_int ldab = static_cast<lapack_int>(bandwidth + 1);
    std::vector<Complex> ab(static_cast<std::size_t>(ldab) * n, Complex(0.0, 0.0));
    for (const auto& e : entries) {
        if (e.row > e.col) continue;
        ab[static_cast<std::size_t>(bandwidth + e.row - e.col + e.col * ldab)] += e.value;
    }
    RealVector w(n);
    Complex dummy;
    const lapack_int info = LAPACKE_zhbevd(LAPACK_COL_MAJOR, 'N', 'U', static_cast<lapack_int>(n),
                                           static_cast<lapack_int>(bandwidth), ab.data(), ldab, w.data(), &dummy, 1);
    if (info != 0) throw NumericalError("spectral_engine", "dense_spectrum", "zhbevd failed to converge");
    return w;
}

std::vector<std::ptrdiff_t> reverse_cuthill_mckee(std::ptrdiff_t n, const std::vector<Entry>& entries) {
    std::vector<std::ptrdiff_t> start(n + 1, 0);
    for (const auto& e : entries)
        if (e.row != e.col) ++start[e.row + 1];
    std::partial_sum(start.begin(), start.end(), start.begin());
    std::vector<std::ptrdiff_t> adj(start[n]);
    std::vector<std::ptrdiff_t> fill(start.begin(), start.end() - 1);
    for (const auto& e : entries)
        if (e.row != e.col) adj[fill[e.row]++] = e.col;
    auto degree = [&](std::ptrdiff_t v) { return start[v + 1] - start[v]; };

    std::vector<std::ptrdiff_t> order;
    order.reserve(n);
    std::vector<char> seen(n, 0);
    std::vector<std::ptrdiff_t> nbrs;
    for (std::ptrdiff_t root0 = 0; root0 < n; ++root0) {
        if (seen[root0]) continue;
        // pseudo-peripheral start: walk to the last node of a BFS twice
        std::ptrdiff_t root = root0;
        std::vector<char> m;
        for (int sweep = 0; sweep < 2; ++sweep) {
            std::deque<std::ptrdiff_t> q{root};
            m.assign(n, 0);
            m[root] = 1;
            std::ptrdiff_t last = root;
            while (!q.empty()) {
                const auto v = q.front();
                q.pop_front();
                last = v;
                for (auto k = start[v]; k < start[v + 1]; ++k)
                    if (!m[adj[k]] && !seen[adj[k]]) {
                        m[adj[k]] = 1;
                        q.push_back(adj[k]);
                    }
            }
            root = last;
        }
        std::deque<std::ptrdiff_t> q{root};
        seen[root] = 1;
        while (!q.empty()) {
            const auto v = q.front();
            q.pop_front();
            order.push_back(v);
            nbrs.clear();
            for (auto k = start[v]; k < start[v + 1]; ++k)
                if (!seen[adj[k]]) {
                    seen[adj[k]] = 1;
                    nbrs.push_back(adj[k]);
                }
            std::sort(nbrs.begin(), nbrs.end(), [&](auto a, auto b) {
                return degree(a) != degree(b) ? degree(a) < degree(b) : a < b;
            });
            for (auto u : nbrs) q.push_back(u);
        }
    }
    std::reverse(order.begin(), order.end());
    return order;
}

RealVector sparse_block_eigenvalues(std::ptrdiff_t n, const std::vector<Entry>& entries) {
    if (n <= 96) {
        ComplexMatrix a = ComplexMatrix::Zero(n, n);
        for (const auto& e : entries) a(e.row, e.col) += e.value;
        return hermitian_eigenvalues(std::move(a));
    }
    const auto order = reverse_cuthill_mckee(n, entries);
    std::vector<std::ptrdiff_t> pos(n);
    for (std::ptrdiff_t k = 0; k < n; ++k) pos[order[k]] = k;
    std::vector<Entry> permuted;
    permuted.reserve(entries.size());
    std::ptrdiff_t bandwidth = 0;
    for (const auto& e : entries) {
        const Entry pe{pos[e.row], pos[e.col], e.value};
        bandwidth = std::max(bandwidth, std::abs(pe.row - pe.col));
        permuted.push_back(pe);
    }
    if (bandwidth <= n / 8) return banded_eigenvalues(n, std::max<std::ptrdiff_t>(bandwidth, 1), permuted);
    ComplexMatrix a = ComplexMatrix::Zero(n, n);
    for (const auto& e : entries) a(e.row, e.col) += e.value;
    return hermitian_eigenvalues(std::move(a));
}

}  // namespace scbl
