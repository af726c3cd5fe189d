#include <cmath>
#include <random>

#include "doctest.h"
#include "scbl/almost_analytic.hpp"
#include "scbl/linalg.hpp"
#include "scbl/spectral.hpp"
#include "scbl/test_function.hpp"

using namespace scbl;

namespace {

ComplexMatrix random_hermitian(int n, std::uint64_t seed, double lo, double hi) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> g;
    ComplexMatrix a(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) a(i, j) = Complex(g(gen), g(gen));
    ComplexMatrix h = 0.5 * (a + a.adjoint());
    const RealVector ev = hermitian_eigenvalues(h);
    h = (h - ev(0) * ComplexMatrix::Identity(n, n)) * ((hi - lo) / (ev(n - 1) - ev(0)));
    h += lo * ComplexMatrix::Identity(n, n);
    return 0.5 * (h + h.adjoint());
}

double rel_frobenius(const ComplexMatrix& a, const ComplexMatrix& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("test function values") {
    CHECK(gaussian(0.0, 1.0)(0.0) == 1.0);
    CHECK(gaussian(1.0, 2.0)(3.0) == doctest::Approx(std::exp(-0.5)));
    const auto b = bump(1.0, 2.0);
    CHECK(b(0.0) == 0.0);
    CHECK(b(3.0) == 0.0);
    CHECK(b(1.5) > 0.0);
    CHECK(b(1.5) == 1.0);
    CHECK(b(1.0) == 0.0);
    CHECK(exponential(2.0)(1.0) == doctest::Approx(std::exp(-2.0)));
    CHECK(zero_function().is_zero());
    CHECK_FALSE(gaussian(0, 1).is_zero());
    CHECK(gaussian(0, 1).is_schwartz());
    CHECK(bump(0, 1).is_schwartz());
    CHECK_FALSE(exponential(1.0).is_schwartz());
    CHECK(bump(0, 1, 3).max_derivative() == 3);
}

TEST_CASE("invalid parameters") {
    CHECK_THROWS_AS(gaussian(0.0, 0.0), DomainError);
    CHECK_THROWS_AS(bump(2.0, 1.0), DomainError);
    CHECK_THROWS_AS(bump(0.0, 1.0, 0), DomainError);
    TermSpec t;
    t.family = Family::gaussian_poly;
    t.degree = 40;
    CHECK_THROWS_AS(make_test_function(t), DomainError);
    CHECK_THROWS_AS(gaussian(0, 1).derivative(0.0, -1), DomainError);
}

TEST_CASE("derivatives match finite differences") {
    TermSpec poly;
    poly.family = Family::gaussian_poly;
    poly.degree = 3;
    poly.center = 0.5;
    poly.width = 1.5;
    const std::vector<TestFunction> fs{gaussian(0.0, 1.0), make_test_function(poly), bump(-1.0, 3.0, 6),
                                       exponential(0.7)};
    for (const auto& f : fs) {
        for (int order = 1; order <= 3; ++order) {
            const double h = 1e-3;
            double worst = 0.0, scale = 0.0;
            for (int k = 0; k < 100; ++k) {
                const double x = -3.0 + 6.0 * (k + 0.5) / 100;
                const double fd = (-f.derivative(x + 2 * h, order - 1) + 8 * f.derivative(x + h, order - 1) -
                                   8 * f.derivative(x - h, order - 1) + f.derivative(x - 2 * h, order - 1)) /
                                  (12 * h);
                worst = std::max(worst, std::abs(fd - f.derivative(x, order)));
                scale = std::max(scale, std::abs(f.derivative(x, order)));
            }
            CHECK(worst <= 1e-6 * scale);
        }
    }
}

TEST_CASE("gaussian families decay faster than powers") {
    TermSpec poly;
    poly.family = Family::gaussian_poly;
    poly.degree = 4;
    const auto f = make_test_function(poly);
    for (double x = -60.0; x <= 60.0; x += 0.25) {
        CHECK(std::abs(gaussian(0, 1)(x)) * std::pow(1 + std::abs(x), 8) <= 1e4);
        CHECK(std::abs(f(x)) * std::pow(1 + std::abs(x), 8) <= 1e6);
    }
    const auto b = bump(1.0, 2.0);
    for (double x = -5.0; x <= 5.0; x += 0.01)
        if (x < 1.0 || x > 2.0) CHECK(b(x) == 0.0);
    CHECK(gaussian(0, 1).tail_sup(1.0) == doctest::Approx(std::exp(-0.5)));
}

TEST_CASE("almost analytic extension on the real axis") {
    const auto phi = gaussian(0.5, 1.2);
    const auto ext = almost_analytic_extension(phi, 4);
    for (double mu = -4.0; mu <= 4.0; mu += 0.37) CHECK(std::abs(ext.value(mu, 0.0) - phi(mu)) <= 1e-12);
    CHECK_THROWS_AS(almost_analytic_extension(phi, 1), DomainError);
    const auto none = almost_analytic_extension(zero_function(), 4);
    CHECK(std::abs(none.value(0.3, 0.2)) == 0.0);
    CHECK(std::abs(none.dbar(0.3, 0.2)) == 0.0);
    CHECK(hs_cutoff(0.5) == 1.0);
    CHECK(hs_cutoff(2.5) == 0.0);
}

TEST_CASE("d-bar vanishes to the order of the extension") {
    const auto phi = gaussian(0.0, 1.0);
    for (int order : {2, 4, 6}) {
        const auto ext = almost_analytic_extension(phi, order);
        auto peak = [&](double nu) {
            double m = 0.0;
            for (double mu = -6.0; mu <= 6.0; mu += 0.01) m = std::max(m, std::abs(ext.dbar(mu, nu)));
            return m;
        };
        const double slope = std::log(peak(1e-1) / peak(1e-3)) / std::log(1e2);
        CHECK(slope >= order - 0.1);
    }
}

TEST_CASE("resolvent formula on scalar and diagonal matrices") {
    const auto phi = gaussian(0.0, 1.0);
    const auto ext = almost_analytic_extension(phi, 6);
    const ComplexMatrix zero = ComplexMatrix::Zero(1, 1);
    CHECK(std::abs(apply_phi_hs(zero, ext)(0, 0) - 1.0) <= 1e-6);

    ComplexMatrix d = ComplexMatrix::Zero(2, 2);
    d.diagonal() << 1.0, 2.0;
    const ComplexMatrix f = apply_phi_hs(d, ext);
    CHECK(std::abs(f(0, 0) - phi(1.0)) <= 1e-6);
    CHECK(std::abs(f(1, 1) - phi(2.0)) <= 1e-6);
    CHECK(std::abs(f(0, 1)) <= 1e-6);

    ComplexMatrix bad(2, 2);
    bad << 0, 1, 0, 0;
    CHECK_THROWS_AS(apply_phi_hs(bad, ext), DomainError);
}

TEST_CASE("resolvent formula against the eigendecomposition") {
    const auto phi = gaussian(2.0, 1.0);
    const auto h = random_hermitian(8, 42, 0.0, 4.0);
    const ComplexMatrix exact = apply_phi_eig(h, phi).dense();
    std::vector<double> errs;
    for (int order : {2, 4, 6}) {
        const ComplexMatrix approx = apply_phi_hs(h, almost_analytic_extension(phi, order));
        CHECK((approx - approx.adjoint()).cwiseAbs().maxCoeff() <= 1e-8);
        errs.push_back(rel_frobenius(approx, exact));
    }
    CHECK(errs[2] <= 1e-6);
    CHECK((errs[1] < errs[0] || errs[1] <= 1e-10));
    CHECK((errs[2] < errs[1] || errs[2] <= 1e-10));

    const auto big = random_hermitian(64, 7, -1.0, 5.0);
    const ComplexMatrix approx = apply_phi_hs(big, almost_analytic_extension(phi, 6));
    CHECK(rel_frobenius(approx, apply_phi_eig(big, phi).dense()) <= 1e-6);
}
