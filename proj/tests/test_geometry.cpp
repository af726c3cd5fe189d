#include <cmath>
#include <random>

#include "doctest.h"
#include "scbl/geometry.hpp"

using namespace scbl;

namespace {

FieldData constant_field(const Geometry& g, double b12) {
    FieldSpec spec;
    spec.constants.push_back({0, 1, b12});
    return make_field(g, spec);
}

// 2 pi (1 + cos 2 pi x1 cos 2 pi x2), written as two Fourier modes
FieldSpec wavy_spec() {
    FieldSpec spec;
    spec.constants.push_back({0, 1, kTwoPi});
    spec.perturbations.push_back({0, 1, {{1, 1}, Complex(kPi / 2, 0)}});
    spec.perturbations.push_back({0, 1, {{1, -1}, Complex(kPi / 2, 0)}});
    return spec;
}

}  // namespace

TEST_CASE("flat torus volume and dimension range") {
    const auto t2 = make_flat_torus(2, {1, 1});
    CHECK(t2.dim == 2);
    CHECK(t2.volume == doctest::Approx(1.0));
    const auto t3 = make_flat_torus(3, {1, 1, 2});
    CHECK(t3.volume == doctest::Approx(2.0));
    CHECK(t3.min_length() == doctest::Approx(1.0));
    CHECK_THROWS_WITH_AS(make_flat_torus(5, {1, 1, 1, 1, 1}), doctest::Contains("unsupported dimension"), DomainError);
    CHECK_THROWS_AS(make_flat_torus(1, {1}), DomainError);
    CHECK_THROWS_AS(make_flat_torus(2, {1, -1}), DomainError);
    CHECK_THROWS_AS(make_flat_torus(2, {1}), DomainError);
}

TEST_CASE("flux integers of constant fields") {
    const auto g = make_flat_torus(2, {1, 1});
    CHECK(constant_field(g, kTwoPi * 3).flux_integer(0, 1) == 3);
    CHECK(constant_field(g, -kTwoPi).flux_integer(0, 1) == -1);
    CHECK(constant_field(g, 0.0).flux_integer(0, 1) == 0);
    CHECK_THROWS_WITH_AS(constant_field(g, 5.0), doctest::Contains("not integral"), DomainError);

    // flux is B * area, so a longer torus needs a weaker field
    const auto wide = make_flat_torus(2, {1, 2});
    CHECK(constant_field(wide, kPi).flux_integer(0, 1) == 1);
}

TEST_CASE("zero-mean perturbation keeps the flux") {
    const auto g = make_flat_torus(2, {1, 1});
    const auto f = make_field(g, wavy_spec());
    CHECK(f.flux_integer(0, 1) == 1);
    CHECK(f.mode() == FieldMode::smooth_periodic);
    CHECK(f.has_perturbation());
    CHECK_FALSE(f.perturbation_independent_of(0));

    // same perturbation on a three-flux background
    auto spec = wavy_spec();
    spec.constants[0].value = 3 * kTwoPi;
    CHECK(make_field(g, spec).flux_integer(0, 1) == 3);
}

TEST_CASE("skew matrix at a point") {
    const auto g = make_flat_torus(2, {1, 1});
    const std::vector<double> x0{0.3, 0.7};
    const RealMatrix m = skew_matrix_at(constant_field(g, kTwoPi), x0);
    CHECK(m(0, 1) == doctest::Approx(kTwoPi));
    CHECK(m(1, 0) == doctest::Approx(-kTwoPi));
    CHECK(m(0, 0) == 0.0);
    CHECK(skew_matrix_at(constant_field(g, 0.0), x0).norm() == 0.0);

    const auto wavy = make_field(g, wavy_spec());
    const std::vector<double> origin{0.0, 0.0};
    CHECK(skew_matrix_at(wavy, origin)(0, 1) == doctest::Approx(2 * kTwoPi).epsilon(1e-12));
    CHECK(wavy.coefficient(1, 0, origin) == doctest::Approx(-2 * kTwoPi).epsilon(1e-12));

    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        const std::vector<double> x{u(gen), u(gen)};
        const RealMatrix s = skew_matrix_at(wavy, x);
        CHECK((s + s.transpose()).norm() == 0.0);
        const double expect = kTwoPi * (1 + std::cos(kTwoPi * x[0]) * std::cos(kTwoPi * x[1]));
        CHECK(s(0, 1) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("three-torus field planes") {
    const auto g = make_flat_torus(3, {1, 1, 2});
    FieldSpec spec;
    spec.constants.push_back({0, 1, kTwoPi});
    spec.constants.push_back({1, 2, kPi});
    const auto f = make_field(g, spec);
    CHECK(f.flux_integer(0, 1) == 1);
    CHECK(f.flux_integer(1, 2) == 1);
    CHECK(f.flux_integer(0, 2) == 0);
    const RealMatrix m = skew_matrix_at(f, std::vector<double>{0.1, 0.2, 0.3});
    CHECK(m(2, 1) == doctest::Approx(-kPi));
}

TEST_CASE("volume density is one on flat tori") {
    const auto t2 = make_flat_torus(2, {1, 1});
    const auto t3 = make_flat_torus(3, {1, 1, 2});
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (int k = 0; k < 20; ++k) {
        const std::vector<double> x{u(gen), u(gen), u(gen)}, z{u(gen), u(gen), u(gen)};
        CHECK(volume_density_kappa(t2, std::span(x).first(2), std::span(z).first(2)) == 1.0);
        CHECK(volume_density_kappa(t3, x, z) == 1.0);
    }
    const std::vector<double> x0{0.0, 0.0}, far{0.9, 0.0};
    CHECK_THROWS_AS(volume_density_kappa(t2, x0, far), DomainError);
}

TEST_CASE("potential validation and evaluation") {
    const auto g = make_flat_torus(2, {1, 1});
    PotentialSpec spec;
    spec.rank = 1;
    spec.modes.push_back({0, 0, {{1, 0}, Complex(0.25, 0)}});
    const auto v = make_potential(g, spec);
    const std::vector<double> x{0.0, 0.4}, half{0.5, 0.1};
    CHECK(v.at(x)(0, 0).real() == doctest::Approx(0.5));
    CHECK(v.at(half)(0, 0).real() == doctest::Approx(-0.5));
    CHECK(v.independent_of(1));
    CHECK_FALSE(v.independent_of(0));
    CHECK(v.max_norm() >= 0.5);

    PotentialSpec bad;
    bad.rank = 2;
    bad.constant = ComplexMatrix::Zero(2, 2);
    bad.constant(0, 1) = 1.0;
    CHECK_THROWS_WITH_AS(make_potential(g, bad), doctest::Contains("Hermitian"), DomainError);

    PotentialSpec matrix;
    matrix.rank = 2;
    matrix.constant = ComplexMatrix::Zero(2, 2);
    matrix.constant(0, 1) = Complex(0, 1);
    matrix.constant(1, 0) = Complex(0, -1);
    const auto m = make_potential(g, matrix).at(x);
    CHECK((m - m.adjoint()).norm() == 0.0);
    CHECK(zero_potential(3).is_zero());
    CHECK(zero_potential(3).at(x).rows() == 3);
}
