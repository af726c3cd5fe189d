#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scbl/chebyshev.hpp"
#include "scbl/operator.hpp"
#include "scbl/reduction.hpp"
#include "scbl/test_function.hpp"

namespace scbl {

struct EngineOptions {
    std::ptrdiff_t dense_cap = 20000;  // largest dense block
    int workers = 1;
    // operators up to this size use eigenvectors for kernel columns
    std::ptrdiff_t eig_column_limit = 2500;
    double series_tolerance = 1e-13;
};

struct SpectrumResult {
    RealVector values;      // ascending
    ComplexMatrix vectors;  // columns; empty unless requested
    RealVector residuals;   // ||H v - lambda v|| per pair, when vectors exist
    std::vector<int> reduced_axes;
    std::ptrdiff_t largest_block = 0;
    bool has_vectors() const { return vectors.size() > 0; }
};

/// All eigenvalues. Translation-covariant operators are split into exact
/// blocks first; the size cap applies to the largest block. With
/// `vectors` the full matrix is diagonalized and the cap applies to it.
SpectrumResult dense_spectrum(const DiscreteOperator& op, bool vectors, const EngineOptions& opt = {});
SpectrumResult dense_spectrum(const ComplexMatrix& h, bool vectors);

/// phi(H) through an eigendecomposition.
class MatrixFunction {
public:
    MatrixFunction(ComplexMatrix vectors, RealVector phi_values)
        : vectors_(std::move(vectors)), weights_(std::move(phi_values)) {}
    Complex entry(Eigen::Index i, Eigen::Index j) const;
    ComplexVector column(Eigen::Index j) const;
    ComplexMatrix dense() const;
    double trace() const { return weights_.sum(); }
    Eigen::Index size() const { return vectors_.rows(); }

private:
    ComplexMatrix vectors_;
    RealVector weights_;
};

MatrixFunction apply_phi_eig(const ComplexMatrix& h, const TestFunction& phi);
MatrixFunction apply_phi_eig(const DiscreteOperator& op, const TestFunction& phi, const EngineOptions& opt = {});

enum class TraceMethod { dense, kpm };
enum class Damping { jackson, none };

struct TraceEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    TraceMethod method = TraceMethod::dense;
    int chebyshev_order = 0;
    int probe_count = 0;
};

struct KpmOptions {
    int order = 128;
    int probes = 32;
    std::uint64_t seed = 20240601;
    Damping damping = Damping::jackson;
    int lanczos_steps = 20;
    double pad = 0.05;
};

TraceEstimate trace_phi(const DiscreteOperator& op, const TestFunction& phi, TraceMethod method,
                        const KpmOptions& kpm = {}, const EngineOptions& opt = {});

/// Sum of phi over a precomputed spectrum.
double trace_of(const RealVector& eigenvalues, const TestFunction& phi);

/// Column phi(H) delta_{site, component} divided by the cell volume, so the
/// entries approximate the continuum kernel K(x, x_site).
ComplexVector kernel_column(const DiscreteOperator& op, const TestFunction& phi, std::ptrdiff_t site,
                            int component = 0, const EngineOptions& opt = {});

/// Several columns in one pass, addressed by matrix index
/// (site * rank + component); shares the eigendecomposition or the series.
std::vector<ComplexVector> kernel_columns(const DiscreteOperator& op, const TestFunction& phi,
                                          const std::vector<std::ptrdiff_t>& indices, const EngineOptions& opt = {});

const char* method_name(TraceMethod m);

}  // namespace scbl
