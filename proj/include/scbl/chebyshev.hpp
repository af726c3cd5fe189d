#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "scbl/common.hpp"

namespace scbl {

/// Affine map of [lower, upper] onto [-1, 1].
struct SpectralWindow {
    double lower = -1.0;
    double upper = 1.0;
    double center() const { return 0.5 * (upper + lower); }
    double half_width() const { return 0.5 * (upper - lower); }
};

/// Chebyshev coefficients c_0..c_{order-1} of f on the window, from
/// Chebyshev-Gauss nodes (f ~ sum c_k T_k, c_0 carries weight 1).
std::vector<double> chebyshev_coefficients(const std::function<double(double)>& f, const SpectralWindow& w,
                                           int order);

/// Doubles the order from `start` until the trailing eighth of the series is
/// below `rel_tol` times the largest coefficient (or `max_order` is hit).
std::vector<double> adaptive_chebyshev(const std::function<double(double)>& f, const SpectralWindow& w,
                                       double rel_tol, int start = 64, int max_order = 1 << 16);

/// Jackson damping factors g_0..g_{order-1}.
std::vector<double> jackson_kernel(int order);

/// sum_k c_k T_k(H~) v with H~ = (H - center) / half_width.
ComplexVector chebyshev_apply(const SparseMatrix& h, const SpectralWindow& w, const std::vector<double>& coeffs,
                              const ComplexVector& v);

/// Moments mu_k = <u, T_k(H~) v> for k < order.
std::vector<Complex> chebyshev_moments(const SparseMatrix& h, const SpectralWindow& w, int order,
                                       const ComplexVector& u, const ComplexVector& v);

/// Extremal eigenvalue enclosure from `steps` Lanczos iterations: Ritz
/// extremes widened by their residual norms, padded by `pad` of the width on
/// each side, and intersected with the Gershgorin interval.
SpectralWindow lanczos_window(const SparseMatrix& h, int steps, double pad, std::uint64_t seed);

/// Counter-based +-1 generator keyed by (seed, stream, index).
double rademacher(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

/// Gershgorin interval of a sparse Hermitian matrix.
SpectralWindow gershgorin_window(const SparseMatrix& h);

}  // namespace scbl
