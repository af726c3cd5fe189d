#include "scbl/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scbl/linalg.hpp"

namespace scbl {

namespace {

ComplexMatrix to_dense(const SparseMatrix& m) {
    ComplexMatrix d = ComplexMatrix::Zero(m.rows(), m.cols());
    for (Eigen::Index r = 0; r < m.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(m, r); it; ++it) d(r, it.col()) += it.value();
    return d;
}

void check_cap(std::ptrdiff_t n, const EngineOptions& opt) {
    if (n > opt.dense_cap)
        throw NumericalError("spectral_engine", "dense_spectrum",
                             "matrix size " + std::to_string(n) + " exceeds dense cap " + std::to_string(opt.dense_cap));
}

}  // namespace

const char* method_name(TraceMethod m) { return m == TraceMethod::dense ? "dense" : "kpm"; }

SpectrumResult dense_spectrum(const ComplexMatrix& h, bool vectors) {
    SpectrumResult res;
    res.largest_block = h.rows();
    if (vectors) {
        hermitian_eigensystem(h, res.values, res.vectors);
        res.residuals.resize(res.values.size());
        for (Eigen::Index k = 0; k < res.values.size(); ++k)
            res.residuals(k) = (h * res.vectors.col(k) - res.values(k) * res.vectors.col(k)).norm();
    } else {
        res.values = hermitian_eigenvalues(h);
    }
    return res;
}

SpectrumResult dense_spectrum(const DiscreteOperator& op, bool vectors, const EngineOptions& opt) {
    if (vectors) {
        check_cap(op.size(), opt);
        return dense_spectrum(to_dense(op.matrix), true);
    }
    const BlockDecomposition dec = decompose_translations(op);
    check_cap(dec.largest_block(), opt);
    SpectrumResult res;
    res.values = block_eigenvalues(dec, opt.workers);
    res.reduced_axes = dec.axes;
    res.largest_block = dec.largest_block();
    return res;
}

Complex MatrixFunction::entry(Eigen::Index i, Eigen::Index j) const {
    Complex s = 0.0;
    for (Eigen::Index k = 0; k < weights_.size(); ++k) s += weights_(k) * vectors_(i, k) * std::conj(vectors_(j, k));
    return s;
}

ComplexVector MatrixFunction::column(Eigen::Index j) const {
    const ComplexVector w = weights_.cast<Complex>().cwiseProduct(vectors_.row(j).adjoint());
    return vectors_ * w;
}

ComplexMatrix MatrixFunction::dense() const {
    return vectors_ * weights_.cast<Complex>().asDiagonal() * vectors_.adjoint();
}

MatrixFunction apply_phi_eig(const ComplexMatrix& h, const TestFunction& phi) {
    if (h.rows() != h.cols()) throw DomainError("spectral_engine", "apply_phi_eig", "matrix must be square");
    RealVector values;
    ComplexMatrix vectors;
    hermitian_eigensystem(h, values, vectors);
    RealVector w(values.size());
    for (Eigen::Index k = 0; k < values.size(); ++k) w(k) = phi(values(k));
    return MatrixFunction(std::move(vectors), std::move(w));
}

MatrixFunction apply_phi_eig(const DiscreteOperator& op, const TestFunction& phi, const EngineOptions& opt) {
    check_cap(op.size(), opt);
    return apply_phi_eig(to_dense(op.matrix), phi);
}

double trace_of(const RealVector& eigenvalues, const TestFunction& phi) {
    // fixed summation order
    double s = 0.0;
    for (Eigen::Index k = 0; k < eigenvalues.size(); ++k) s += phi(eigenvalues(k));
    return s;
}

TraceEstimate trace_phi(const DiscreteOperator& op, const TestFunction& phi, TraceMethod method,
                        const KpmOptions& kpm, const EngineOptions& opt) {
    TraceEstimate est;
    est.method = method;
    if (method == TraceMethod::dense) {
        if (phi.is_zero()) return est;
        const auto spec = dense_spectrum(op, false, opt);
        est.value = trace_of(spec.values, phi);
        return est;
    }
    if (kpm.order < 16) throw DomainError("spectral_engine", "trace_phi", "kpm_order must be at least 16");
    if (kpm.probes < 1) throw DomainError("spectral_engine", "trace_phi", "probes must be at least 1");
    est.chebyshev_order = kpm.order;
    est.probe_count = kpm.probes;
    if (phi.is_zero()) return est;

    const SpectralWindow win = lanczos_window(op.matrix, kpm.lanczos_steps, kpm.pad, kpm.seed);
    auto coeffs = chebyshev_coefficients([&](double x) { return phi(x); }, win, kpm.order);
    if (kpm.damping == Damping::jackson) {
        const auto g = jackson_kernel(kpm.order);
        for (int k = 0; k < kpm.order; ++k) coeffs[k] *= g[k];
    }
    const Eigen::Index n = op.size();
    std::vector<double> samples(kpm.probes);
    parallel_for(static_cast<std::size_t>(kpm.probes), opt.workers, [&](std::size_t probe) {
        ComplexVector r(n);
        for (Eigen::Index i = 0; i < n; ++i) r(i) = rademacher(kpm.seed, probe + 1, static_cast<std::uint64_t>(i));
        const auto mu = chebyshev_moments(op.matrix, win, kpm.order, r, r);
        double t = 0.0;
        for (int k = 0; k < kpm.order; ++k) t += coeffs[k] * mu[k].real();
        samples[probe] = t;
    });
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / kpm.probes;
    double var = 0.0;
    for (double s : samples) var += (s - mean) * (s - mean);
    est.value = mean;
    est.stderr_ = kpm.probes > 1 ? std::sqrt(var / (kpm.probes - 1) / kpm.probes) : 0.0;
    return est;
}

std::vector<ComplexVector> kernel_columns(const DiscreteOperator& op, const TestFunction& phi,
                                          const std::vector<std::ptrdiff_t>& sites, const EngineOptions& opt) {
    const Eigen::Index n = op.size();
    for (auto s : sites)
        if (s < 0 || s >= n) throw DomainError("spectral_engine", "kernel_column", "site index out of range");
    const double inv_cell = 1.0 / op.cell_volume();
    std::vector<ComplexVector> out(sites.size());
    if (phi.is_zero()) {
        for (auto& v : out) v = ComplexVector::Zero(n);
        return out;
    }
    if (n <= opt.eig_column_limit) {
        const auto f = apply_phi_eig(op, phi, opt);
        for (std::size_t k = 0; k < sites.size(); ++k) out[k] = f.column(sites[k]) * inv_cell;
        return out;
    }
    const SpectralWindow win = gershgorin_window(op.matrix);
    const auto coeffs = adaptive_chebyshev([&](double x) { return phi(x); }, win, opt.series_tolerance);
    parallel_for(sites.size(), opt.workers, [&](std::size_t k) {
        ComplexVector e = ComplexVector::Zero(n);
        e(sites[k]) = 1.0;
        out[k] = chebyshev_apply(op.matrix, win, coeffs, e) * inv_cell;
    });
    return out;
}

ComplexVector kernel_column(const DiscreteOperator& op, const TestFunction& phi, std::ptrdiff_t site, int component,
                            const EngineOptions& opt) {
    if (site < 0 || site >= op.sites() || component < 0 || component >= op.rank)
        throw DomainError("spectral_engine", "kernel_column", "site index out of range");
    return kernel_columns(op, phi, {site * op.rank + component}, opt).front();
}

}  // namespace scbl
