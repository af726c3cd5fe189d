#pragma once

#include "scbl/operator.hpp"
#include "scbl/test_function.hpp"

namespace scbl {

/// Taylor-type almost-analytic extension
///     phi~(mu + i nu) = chi(nu / <mu>) * sum_{k<=order} phi^(k)(mu) (i nu)^k / k!
/// with <mu> = sqrt(1 + mu^2) and chi a smooth cutoff, 1 on [-1, 1] and 0
/// outside [-2, 2].
class AlmostAnalytic {
public:
    AlmostAnalytic(TestFunction phi, int order);

    Complex value(double mu, double nu) const;
    /// d-bar = (d/dmu + i d/dnu) / 2
    Complex dbar(double mu, double nu) const;
    /// Same, given jet(mu) = phi^(0..order+1)(mu) computed once per mu.
    std::vector<double> jet(double mu) const;
    Complex dbar(const std::vector<double>& jet, double mu, double nu) const;

    int order() const { return order_; }
    const TestFunction& base() const { return phi_; }

    /// Real interval outside which phi and its first order+1 derivatives
    /// are below 1e-17 relative (so the extension vanishes there).
    std::pair<double, double> support() const;

private:
    TestFunction phi_;
    int order_;
};

AlmostAnalytic almost_analytic_extension(const TestFunction& phi, int order);

/// Smooth cutoff used by the extension and its derivative.
double hs_cutoff(double t);
double hs_cutoff_derivative(double t);

struct HsQuadrature {
    int mu_nodes = 400;
    int nu_nodes = 400;
    double nu_min = 1e-3;
};

/// -(1/pi) * sum over midpoint cells of dbar phi~(z) (z - H)^{-1} * area.
/// The mesh is a tensor product in (mu, t) with nu = t <mu>, t running from
/// nu_min / <mu> to 2, so each row resolves the cutoff band equally well.
/// Only nu > 0 is evaluated; the mirror cell contributes the adjoint.
ComplexMatrix apply_phi_hs(const ComplexMatrix& h, const AlmostAnalytic& ext, const HsQuadrature& quad = {},
                           int workers = 1);
ComplexMatrix apply_phi_hs(const DiscreteOperator& op, const AlmostAnalytic& ext, const HsQuadrature& quad = {},
                           int workers = 1, std::ptrdiff_t dense_cap = 20000);

}  // namespace scbl
