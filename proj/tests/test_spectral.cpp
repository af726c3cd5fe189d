#include <cmath>
#include <random>

#include "doctest.h"
#include "scbl/chebyshev.hpp"
#include "scbl/linalg.hpp"
#include "scbl/operator.hpp"
#include "scbl/reduction.hpp"
#include "scbl/spectral.hpp"

using namespace scbl;

namespace {

DiscreteOperator landau(int p, double b = kTwoPi, double v_amp = 0.0) {
    const auto g = make_flat_torus(2, {1, 1});
    FieldSpec f;
    f.constants.push_back({0, 1, b});
    const auto field = make_field(g, f);
    PotentialSpec v;
    if (v_amp != 0.0) v.modes.push_back({0, 0, {{1, 0}, Complex(v_amp, 0)}});
    return assemble_hp(g, field, make_potential(g, v), p, resolved_grid(g, field, p, 48.0));
}

// exact lowest-level sum for exp(-lambda)
double landau_sum(double b) { return std::exp(-b) / (1.0 - std::exp(-2.0 * b)); }

}  // namespace

TEST_CASE("dense spectra of small matrices") {
    ComplexMatrix d = ComplexMatrix::Zero(3, 3);
    d.diagonal() << 3.0, 1.0, 2.0;
    const auto a = dense_spectrum(d, false);
    CHECK(a.values(0) == doctest::Approx(1.0));
    CHECK(a.values(1) == doctest::Approx(2.0));
    CHECK(a.values(2) == doctest::Approx(3.0));

    ComplexMatrix x(2, 2);
    x << 0, 1, 1, 0;
    const auto b = dense_spectrum(x, true);
    CHECK(b.values(0) == doctest::Approx(-1.0));
    CHECK(b.values(1) == doctest::Approx(1.0));
    CHECK(b.residuals.maxCoeff() <= 1e-14);
}

TEST_CASE("eigenvectors stay orthonormal for large matrices") {
    std::mt19937_64 gen(11);
    std::normal_distribution<double> g;
    const int n = 420;
    ComplexMatrix a(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) a(i, j) = Complex(g(gen), g(gen));
    a = (0.5 * (a + a.adjoint())).eval();
    RealVector w;
    ComplexMatrix v;
    hermitian_eigensystem(a, w, v);
    CHECK((v.adjoint() * v - ComplexMatrix::Identity(n, n)).norm() <= 1e-10);
    CHECK((a * v - v * w.cast<Complex>().asDiagonal()).norm() <= 1e-9 * a.norm());
    CHECK((w - hermitian_eigenvalues(a)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("phi of a diagonal matrix") {
    ComplexMatrix d = ComplexMatrix::Zero(2, 2);
    d.diagonal() << 1.0, 2.0;
    const auto f = apply_phi_eig(d, exponential(1.0)).dense();
    CHECK(std::abs(f(0, 0) - std::exp(-1.0)) <= 1e-14);
    CHECK(std::abs(f(1, 1) - std::exp(-2.0)) <= 1e-14);
    CHECK(std::abs(f(0, 1)) <= 1e-14);
    CHECK(apply_phi_eig(d, zero_function()).dense().norm() == 0.0);
}

TEST_CASE("trace of phi") {
    RealVector one(1);
    one << 2.0;
    CHECK(trace_of(one, exponential(1.0)) == doctest::Approx(0.1353352832366127).epsilon(1e-14));

    const auto op = landau(16);
    const auto zero = trace_phi(op, zero_function(), TraceMethod::dense);
    CHECK(zero.value == 0.0);
    CHECK(zero.stderr_ == 0.0);

    const auto dense = trace_phi(op, exponential(1.0), TraceMethod::dense);
    CHECK(dense.stderr_ == 0.0);
    CHECK(dense.value == doctest::Approx(16 * landau_sum(kTwoPi)).epsilon(0.02));
}

TEST_CASE("trace is linear in phi") {
    const auto op = landau(8, kTwoPi, 0.2);
    const auto f = gaussian(6.0, 2.0), g = exponential(0.5);
    const double a = 0.7, b = -1.3;
    const double lhs = trace_phi(op, f.scaled(a) + g.scaled(b), TraceMethod::dense).value;
    const double rhs = a * trace_phi(op, f, TraceMethod::dense).value + b * trace_phi(op, g, TraceMethod::dense).value;
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(rhs)));
}

TEST_CASE("block reduction matches the full spectrum") {
    const auto g = make_flat_torus(2, {1, 1});
    FieldSpec f;
    f.constants.push_back({0, 1, kTwoPi});
    const auto field = make_field(g, f);
    PotentialSpec v;
    v.modes.push_back({0, 0, {{1, 0}, Complex(0.3, 0)}});
    const auto op = assemble_hp(g, field, make_potential(g, v), 2, {16, 24});
    const auto dec = decompose_translations(op);
    CHECK(dec.largest_block() < op.size());
    const RealVector reduced = block_eigenvalues(dec, 1);
    const RealVector full = hermitian_eigenvalues(ComplexMatrix(op.matrix));
    REQUIRE(reduced.size() == full.size());
    CHECK((reduced - full).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("kpm converges to the dense trace") {
    const auto op = landau(16);
    const auto phi = exponential(1.0);
    const double exact = trace_phi(op, phi, TraceMethod::dense).value;
    std::vector<double> errors;
    for (int order : {64, 128, 256}) {
        KpmOptions k;
        k.order = order;
        k.probes = 32;
        const auto est = trace_phi(op, phi, TraceMethod::kpm, k);
        CHECK(est.stderr_ > 0.0);
        CHECK(est.chebyshev_order == order);
        errors.push_back(std::abs(est.value - exact));
    }
    // the damping bias falls like order^-2; allow some probe noise
    CHECK(errors[1] <= errors[0] / 3);
    CHECK(errors[2] <= errors[1] / 3);

    // a function resolved on the spectral window leaves only probe noise
    const auto wide = gaussian(60.0, 40.0);
    const double wide_exact = trace_phi(op, wide, TraceMethod::dense).value;
    KpmOptions resolved;
    resolved.order = 256;
    const auto est = trace_phi(op, wide, TraceMethod::kpm, resolved);
    CHECK(std::abs(est.value - wide_exact) <= 3 * est.stderr_);

    KpmOptions k;
    const auto a = trace_phi(op, phi, TraceMethod::kpm, k), b = trace_phi(op, phi, TraceMethod::kpm, k);
    CHECK(a.value == b.value);
    k.order = 8;
    CHECK_THROWS_AS(trace_phi(op, phi, TraceMethod::kpm, k), DomainError);
}

TEST_CASE("rademacher probes are deterministic signs") {
    for (std::uint64_t i = 0; i < 100; ++i) {
        const double r = rademacher(5, 2, i);
        CHECK(std::abs(r) == 1.0);
        CHECK(r == rademacher(5, 2, i));
    }
    double sum = 0.0;
    for (std::uint64_t i = 0; i < 4000; ++i) sum += rademacher(1, 1, i);
    CHECK(std::abs(sum) < 300.0);
}

TEST_CASE("chebyshev series reproduce a smooth function") {
    const SpectralWindow w{0.0, 10.0};
    const auto c = adaptive_chebyshev([](double x) { return std::exp(-x); }, w, 1e-14);
    double s = 0.0;
    const double t = (3.0 - w.center()) / w.half_width();
    for (std::size_t k = 0; k < c.size(); ++k) s += c[k] * std::cos(k * std::acos(t));
    CHECK(s == doctest::Approx(std::exp(-3.0)).epsilon(1e-12));
    const auto g = jackson_kernel(32);
    CHECK(g[0] == doctest::Approx(1.0));
    for (std::size_t k = 1; k < g.size(); ++k) CHECK(g[k] <= g[k - 1] + 1e-15);
}

TEST_CASE("free heat kernel diagonal") {
    const auto op = landau(16, 0.0);
    const auto col = kernel_column(op, exponential(1.0), 0);
    // periodic images at unit distance contribute e^{-p/4} each
    double images = 0.0;
    for (int n = -4; n <= 4; ++n) images += std::exp(-16.0 * n * n / 4);
    CHECK(col(0).real() == doctest::Approx(16 / (4 * kPi) * images * images).epsilon(0.005));
    CHECK(kernel_column(op, zero_function(), 0).norm() == 0.0);
}

TEST_CASE("kernel columns are Hermitian and positive on the diagonal") {
    const auto op = landau(8, kTwoPi, 0.2);
    std::mt19937_64 gen(5);
    std::uniform_int_distribution<std::ptrdiff_t> pick(0, op.size() - 1);
    std::vector<std::ptrdiff_t> sites;
    for (int k = 0; k < 20; ++k) sites.push_back(pick(gen));
    const auto cols = kernel_columns(op, exponential(1.0), sites);
    for (int k = 0; k < 10; ++k) {
        const auto a = sites[2 * k], b = sites[2 * k + 1];
        CHECK(std::abs(cols[2 * k + 1](a) - std::conj(cols[2 * k](b))) <= 1e-10);
    }
    for (std::size_t k = 0; k < sites.size(); ++k) CHECK(cols[k](sites[k]).real() >= -1e-10);
}

TEST_CASE("eigenvector and series kernels agree") {
    RealMatrix m(2, 2);
    m << 0, 1, -1, 0;
    const auto op = assemble_model_operator(m, ComplexMatrix::Zero(1, 1), 6.0, {32, 32});
    const auto site = op.locate(std::vector<double>{0.0, 0.0});
    EngineOptions eig, series;
    eig.eig_column_limit = op.size();
    series.eig_column_limit = 0;
    const auto phi = bump(0.0, 2.0);
    const auto a = kernel_column(op, phi, site, 0, eig), b = kernel_column(op, phi, site, 0, series);
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(a(site).real() == doctest::Approx(1.0 / kTwoPi).epsilon(1e-3));
}
