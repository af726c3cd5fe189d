#include "scbl/almost_analytic.hpp"

#include <algorithm>
#include <cmath>

#include "scbl/spectral.hpp"

namespace scbl {

namespace {

double bump_factor(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }
double bump_factor_derivative(double x) { return x > 0.0 ? std::exp(-1.0 / x) / (x * x) : 0.0; }

// 0 for x <= 0, 1 for x >= 1
double smooth_step(double x) {
    const double a = bump_factor(x), b = bump_factor(1.0 - x);
    return a / (a + b);
}

double smooth_step_derivative(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    const double a = bump_factor(x), b = bump_factor(1.0 - x);
    const double da = bump_factor_derivative(x), db = -bump_factor_derivative(1.0 - x);
    return (da * b - a * db) / ((a + b) * (a + b));
}

}  // namespace

double hs_cutoff(double t) { return smooth_step(2.0 - std::abs(t)); }

double hs_cutoff_derivative(double t) {
    const double s = t >= 0.0 ? 1.0 : -1.0;
    return -s * smooth_step_derivative(2.0 - std::abs(t));
}

AlmostAnalytic::AlmostAnalytic(TestFunction phi, int order) : phi_(std::move(phi)), order_(order) {
    if (order < 2) throw DomainError("functional_calculus", "almost_analytic_extension", "order must be at least 2");
    if (phi_.max_derivative() < order + 1)
        throw DomainError("functional_calculus", "almost_analytic_extension",
                          "test function lacks derivatives up to order + 1");
}

AlmostAnalytic almost_analytic_extension(const TestFunction& phi, int order) { return AlmostAnalytic(phi, order); }

Complex AlmostAnalytic::value(double mu, double nu) const {
    const double bracket = std::sqrt(1.0 + mu * mu);
    const double chi = hs_cutoff(nu / bracket);
    if (chi == 0.0) return 0.0;
    Complex sum = 0.0, power = 1.0;
    double fact = 1.0;
    for (int k = 0; k <= order_; ++k) {
        if (k > 0) {
            power *= Complex(0.0, nu);
            fact *= k;
        }
        sum += phi_.derivative(mu, k) * power / fact;
    }
    return chi * sum;
}

std::vector<double> AlmostAnalytic::jet(double mu) const {
    std::vector<double> d(order_ + 2);
    for (int k = 0; k <= order_ + 1; ++k) d[k] = phi_.derivative(mu, k);
    return d;
}

Complex AlmostAnalytic::dbar(double mu, double nu) const { return dbar(jet(mu), mu, nu); }

Complex AlmostAnalytic::dbar(const std::vector<double>& jet, double mu, double nu) const {
    const double bracket = std::sqrt(1.0 + mu * mu);
    const double t = nu / bracket;
    const double chi = hs_cutoff(t);
    const double dchi = hs_cutoff_derivative(t);
    if (chi == 0.0 && dchi == 0.0) return 0.0;
    Complex sum = 0.0, power = 1.0;
    double fact = 1.0;
    for (int k = 0; k <= order_; ++k) {
        if (k > 0) {
            power *= Complex(0.0, nu);
            fact *= k;
        }
        sum += jet[k] * power / fact;
    }
    // the Taylor sum telescopes: dbar S = phi^(l+1)(mu) (i nu)^l / (2 l!)
    const Complex dbar_sum = 0.5 * jet[order_ + 1] * power / fact;
    const Complex dbar_chi = 0.5 * dchi * Complex(-nu * mu / (bracket * bracket * bracket), 1.0 / bracket);
    return chi * dbar_sum + sum * dbar_chi;
}

std::pair<double, double> AlmostAnalytic::support() const {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& t : phi_.terms()) {
        if (t.weight == 0.0) continue;
        switch (t.family) {
            case Family::gaussian:
            case Family::gaussian_poly: {
                const int power = t.degree + order_ + 1;
                double u = std::sqrt(static_cast<double>(power)) + 1.0;
                while (std::pow(u, power) * std::exp(-0.5 * u * u) > 1e-17) u += 0.25;
                lo = std::min(lo, t.center - u * t.width);
                hi = std::max(hi, t.center + u * t.width);
                break;
            }
            case Family::bump:
                lo = std::min(lo, t.lower);
                hi = std::max(hi, t.upper);
                break;
            case Family::exponential:
                throw DomainError("functional_calculus", "apply_phi_hs",
                                  "the resolvent quadrature needs a decaying test function");
        }
    }
    if (lo > hi) return {0.0, 0.0};
    return {lo, hi};
}

ComplexMatrix apply_phi_hs(const ComplexMatrix& h, const AlmostAnalytic& ext, const HsQuadrature& quad, int workers) {
    const Eigen::Index n = h.rows();
    if (h.cols() != n) throw DomainError("functional_calculus", "apply_phi_hs", "matrix must be square");
    if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, h.cwiseAbs().maxCoeff()))
        throw DomainError("functional_calculus", "apply_phi_hs", "matrix is not Hermitian");
    if (quad.mu_nodes < 1 || quad.nu_nodes < 1 || !(quad.nu_min > 0.0))
        throw DomainError("functional_calculus", "apply_phi_hs", "invalid quadrature mesh");
    if (n == 0 || ext.base().is_zero()) return ComplexMatrix::Zero(n, n);

    // H = Q T Q^*, T real symmetric tridiagonal
    const ComplexMatrix herm = 0.5 * (h + h.adjoint());
    Eigen::Tridiagonalization<ComplexMatrix> tri(herm);
    const RealVector diag = tri.diagonal();
    const RealVector off = tri.subDiagonal();
    const ComplexMatrix q = tri.matrixQ();

    // midpoint mesh in (mu, t) with nu = t <mu>; the cutoff depends on t only
    const auto [mu_lo, mu_hi] = ext.support();
    const double dmu = (mu_hi - mu_lo) / quad.mu_nodes;

    // one accumulator per mu row, summed in row order afterwards
    std::vector<ComplexMatrix> rows(quad.mu_nodes);
    parallel_for(static_cast<std::size_t>(quad.mu_nodes), workers, [&](std::size_t i) {
        ComplexMatrix acc = ComplexMatrix::Zero(n, n);
        std::vector<Complex> fwd(n), bwd(n), a(n);
        const double mu = mu_lo + (i + 0.5) * dmu;
        const double bracket = std::sqrt(1.0 + mu * mu);
        const double t_min = quad.nu_min / bracket;
        const double dt = (2.0 - t_min) / quad.nu_nodes;
        const auto jet = ext.jet(mu);
        for (int j = 0; j < quad.nu_nodes; ++j) {
            const double nu = (t_min + (j + 0.5) * dt) * bracket;
            const Complex w = -ext.dbar(jet, mu, nu) * (dmu * dt * bracket / kPi);
            if (w == Complex(0.0, 0.0)) continue;
            const Complex z(mu, nu);
            for (Eigen::Index k = 0; k < n; ++k) a[k] = z - diag(k);
            // pivots of (z - T) from both ends; Im of each pivot is >= nu
            fwd[0] = a[0];
            for (Eigen::Index k = 1; k < n; ++k) fwd[k] = a[k] - off(k - 1) * off(k - 1) / fwd[k - 1];
            bwd[n - 1] = a[n - 1];
            for (Eigen::Index k = n - 2; k >= 0; --k) bwd[k] = a[k] - off(k) * off(k) / bwd[k + 1];
            for (Eigen::Index c = 0; c < n; ++c) {
                Complex g = 1.0 / (fwd[c] + bwd[c] - a[c]);
                acc(c, c) += w * g;
                // (z - T)^{-1} is complex symmetric; walk up the column
                for (Eigen::Index r = c - 1; r >= 0; --r) {
                    g *= off(r) / fwd[r];
                    const Complex v = w * g;
                    acc(r, c) += v;
                    acc(c, r) += v;
                }
            }
        }
        rows[i] = std::move(acc);
    });
    ComplexMatrix acc = ComplexMatrix::Zero(n, n);
    for (const auto& r : rows) acc += r;
    const ComplexMatrix sym = acc + acc.adjoint();
    return q * sym * q.adjoint();
}

ComplexMatrix apply_phi_hs(const DiscreteOperator& op, const AlmostAnalytic& ext, const HsQuadrature& quad,
                           int workers, std::ptrdiff_t dense_cap) {
    if (op.size() > dense_cap)
        throw NumericalError("functional_calculus", "apply_phi_hs", "operator exceeds the dense cap");
    ComplexMatrix d = ComplexMatrix::Zero(op.size(), op.size());
    for (Eigen::Index r = 0; r < op.matrix.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(op.matrix, r); it; ++it) d(r, it.col()) += it.value();
    return apply_phi_hs(d, ext, quad, workers);
}

}  // namespace scbl
