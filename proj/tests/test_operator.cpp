#include <cmath>
#include <sstream>

#include "doctest.h"
#include "scbl/linalg.hpp"
#include "scbl/operator.hpp"
#include "scbl/spectral.hpp"

using namespace scbl;

namespace {

struct Torus {
    Geometry geom;
    FieldData field;
    PotentialData potential;
};

Torus torus(double b12, double v_amp = 0.0) {
    Torus t;
    t.geom = make_flat_torus(2, {1, 1});
    FieldSpec f;
    f.constants.push_back({0, 1, b12});
    t.field = make_field(t.geom, f);
    PotentialSpec v;
    if (v_amp != 0.0) v.modes.push_back({0, 0, {{1, 0}, Complex(v_amp, 0)}});
    t.potential = make_potential(t.geom, v);
    return t;
}

RealVector eigenvalues(const DiscreteOperator& op) { return hermitian_eigenvalues(ComplexMatrix(op.matrix)); }

}  // namespace

TEST_CASE("free Laplacian annihilates constants") {
    const auto t = torus(0.0);
    const auto op = assemble_hp(t.geom, t.field, t.potential, 4, {16, 16});
    CHECK(op.size() == 256);
    CHECK(op.max_hermitian_defect() <= 1e-12);
    const ComplexVector one = ComplexVector::Ones(op.size());
    CHECK((op.matrix * one).norm() <= 1e-10);
    CHECK(eigenvalues(op)(0) >= -1e-10);
    for (Eigen::Index r = 0; r < op.matrix.outerSize(); ++r) CHECK(op.matrix.outerIndexPtr()[r + 1] - op.matrix.outerIndexPtr()[r] <= 5);
}

TEST_CASE("lowest Landau level of the lattice operator") {
    const auto t = torus(kTwoPi);
    const auto op = assemble_hp(t.geom, t.field, t.potential, 16, {64, 64});
    CHECK(op.max_hermitian_defect() <= 1e-12);
    const auto spec = dense_spectrum(op, false);
    CHECK(spec.values(0) >= kTwoPi * 0.97);
    CHECK(spec.values(0) <= kTwoPi * 1.01);
}

TEST_CASE("plaquette holonomy equals the enclosed flux") {
    const double b = kTwoPi;
    const int p = 3, n = 16;
    const auto t = torus(b);
    const auto op = assemble_hp(t.geom, t.field, t.potential, p, {n, n});
    const double h = 1.0 / n;
    // interior and boundary-straddling cells
    for (auto [i, j] : std::vector<std::pair<int, int>>{{3, 5}, {n - 1, 2}, {4, n - 1}, {n - 1, n - 1}}) {
        auto at = [&](int a, int c) {
            const int idx[2] = {((a % n) + n) % n, ((c % n) + n) % n};
            return op.site_index(idx);
        };
        const auto s00 = at(i, j), s10 = at(i + 1, j), s11 = at(i + 1, j + 1), s01 = at(i, j + 1);
        const Complex loop = op.matrix.coeff(s00, s10) * op.matrix.coeff(s10, s11) * op.matrix.coeff(s11, s01) *
                             op.matrix.coeff(s01, s00);
        const double scale = std::pow(1.0 / (p * h * h), 4);
        const Complex expect = std::exp(Complex(0, -p * b * h * h));
        CHECK(std::abs(loop / scale - expect) <= 1e-12);
    }
}

TEST_CASE("under-resolved grid is refused") {
    const auto t = torus(kTwoPi);
    CHECK_THROWS_WITH_AS(assemble_hp(t.geom, t.field, t.potential, 64, {8, 8}), doctest::Contains("under-resolved"),
                         DomainError);
    CHECK_THROWS_AS(assemble_hp(t.geom, t.field, t.potential, 0, {16, 16}), DomainError);
    const auto g = resolved_grid(t.geom, t.field, 16, 48.0);
    CHECK(g[0] % 8 == 0);
    CHECK(g[0] >= 32);
    CHECK(g[0] >= minimum_grid(t.geom, t.field, 16)[0]);
}

TEST_CASE("lowest level converges at second order") {
    const auto t = torus(kTwoPi);
    std::vector<double> lowest;
    for (int n : {16, 32, 64}) lowest.push_back(dense_spectrum(assemble_hp(t.geom, t.field, t.potential, 1, {n, n}), false).values(0));
    const double order = std::log2((lowest[1] - lowest[0]) / (lowest[2] - lowest[1]));
    CHECK(order >= 1.9);
    CHECK(std::abs(lowest[2] - kTwoPi) < std::abs(lowest[0] - kTwoPi));
}

TEST_CASE("gauge transform preserves the spectrum") {
    const auto t = torus(kTwoPi, 0.2);
    const auto op = assemble_hp(t.geom, t.field, t.potential, 8, {24, 24});
    const auto same = gauge_transform(op, [](std::span<const double>) { return 0.0; });
    CHECK((same.matrix - op.matrix).norm() == 0.0);

    const auto moved = gauge_transform(op, [](std::span<const double> x) { return 0.3 * std::sin(kTwoPi * x[0]); });
    CHECK(moved.max_hermitian_defect() <= 1e-12);
    CHECK((moved.matrix - op.matrix).norm() > 1e-3);
    CHECK((eigenvalues(moved) - eigenvalues(op)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("model operator on the plane") {
    RealMatrix m(2, 2);
    m << 0, 1, -1, 0;
    const auto op = assemble_model_operator(m, ComplexMatrix::Zero(1, 1), 6.0, {48, 48});
    CHECK(op.model);
    CHECK(op.size() == 47 * 47);
    CHECK(op.max_hermitian_defect() <= 1e-12);
    const auto ev = eigenvalues(op);
    // the lowest level of the plane is infinitely degenerate
    for (int k = 0; k < 5; ++k) CHECK(ev(k) == doctest::Approx(1.0).epsilon(1e-2));

    const auto site = op.locate(std::vector<double>{0.0, 0.0});
    CHECK(site >= 0);
    CHECK(op.site_position(site)[0] == doctest::Approx(0.0));

    RealMatrix bad(2, 2);
    bad << 0, 1, 0.5, 0;
    CHECK_THROWS_AS(assemble_model_operator(bad, ComplexMatrix::Zero(1, 1), 6.0, {16, 16}), DomainError);
    CHECK_THROWS_WITH_AS(assemble_model_operator(m, ComplexMatrix::Zero(1, 1), 2.0, {16, 16}),
                         doctest::Contains("box too small"), DomainError);
}

TEST_CASE("zero field model is a shifted Dirichlet Laplacian") {
    const RealMatrix m = RealMatrix::Zero(1, 1);
    ComplexMatrix v0(1, 1);
    v0(0, 0) = 2.0;
    const int n = 20;
    const double w = 3.0, h = 2 * w / n;
    const auto op = assemble_model_operator(m, v0, w, {n});
    const auto ev = eigenvalues(op);
    REQUIRE(ev.size() == n - 1);
    for (int k = 1; k < n; ++k) {
        const double s = std::sin(k * kPi / (2.0 * n));
        CHECK(ev(k - 1) == doctest::Approx(2.0 + 4.0 / (h * h) * s * s).epsilon(1e-12));
    }
}

TEST_CASE("triplet dump") {
    const auto t = torus(kTwoPi);
    const auto op = assemble_hp(t.geom, t.field, t.potential, 1, {8, 8});
    std::ostringstream out;
    write_triplets(op, out);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    CHECK(header.find("64") != std::string::npos);
    std::size_t lines = 0;
    for (std::string line; std::getline(in, line);) ++lines;
    CHECK(lines == static_cast<std::size_t>(op.matrix.nonZeros()));
}
