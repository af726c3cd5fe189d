#include <cmath>
#include <filesystem>
#include <unistd.h>

#include "doctest.h"
#include "scbl/config.hpp"
#include "scbl/expansion.hpp"
#include "scbl/io.hpp"

using namespace scbl;

namespace {

const char* kFree = R"({"geometry": {"d": 2, "lengths": [1, 1]}, "phi": {"family": "exponential", "rate": 1}})";
const char* kLandau =
    R"({"geometry": {"d": 2, "lengths": [1, 1]}, "field": {"B.12": 6.283185307179586},
        "phi": {"family": "exponential", "rate": 1}})";

std::vector<double> sample(const std::vector<int>& p, double c0, double c1, double c2) {
    std::vector<double> v;
    for (int q : p) v.push_back(c0 + c1 / std::sqrt(double(q)) + c2 / q);
    return v;
}

}  // namespace

TEST_CASE("half-power fit recovers exact coefficients") {
    const std::vector<int> p{8, 12, 16, 24, 32};
    const auto flat = fit_half_power_expansion(p, sample(p, 1, 0, 0), 2);
    CHECK(std::abs(flat.coefficients(0) - 1) <= 1e-10);
    CHECK(std::abs(flat.coefficients(1)) <= 1e-10);
    CHECK(std::abs(flat.coefficients(2)) <= 1e-10);

    const auto full = fit_half_power_expansion(p, sample(p, 2, 3, 1), 2);
    CHECK(std::abs(full.coefficients(0) - 2) <= 1e-8);
    CHECK(std::abs(full.coefficients(1) - 3) <= 1e-8);
    CHECK(std::abs(full.coefficients(2) - 1) <= 1e-8);
    CHECK(full.residual <= 1e-10);

    CHECK_THROWS_AS(fit_half_power_expansion({8, 8, 8}, {1, 1, 1}, 1), NumericalError);
    CHECK_THROWS_AS(fit_half_power_expansion({8, 16}, {1, 1}, 2), DomainError);
}

TEST_CASE("trace sweep of the free torus") {
    const Config cfg = parse_config_text(kFree);
    const auto opt = cfg.lab_options(1);
    CHECK_THROWS_AS(trace_sweep(cfg.problem(), {}, opt), DomainError);
    const auto rows = trace_sweep(cfg.problem(), {32}, opt);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].value == doctest::Approx(1 / (4 * kPi)).epsilon(0.02));
    CHECK(rows[0].check_grid[0] > rows[0].grid[0]);
    CHECK(rows[0].grid_gap() <= 0.01);
}

TEST_CASE("leading integral closed forms") {
    const auto phi = exponential(1.0);
    const auto torus = make_flat_torus(2, {1.0, 1.0});
    FieldSpec landau;
    landau.constants.push_back({0, 1, kTwoPi});
    const auto lead = leading_integral(torus, make_field(torus, landau), zero_potential(), phi);
    CHECK(lead.value == doctest::Approx(kTwoPi / (4 * kPi * std::sinh(kTwoPi))).epsilon(1e-9));

    const auto flat = leading_integral(torus, make_field(torus, FieldSpec{}), zero_potential(), phi);
    CHECK(flat.value == doctest::Approx(1 / (4 * kPi)).epsilon(1e-9));

    const auto nothing = leading_integral(torus, make_field(torus, landau), zero_potential(), zero_function());
    CHECK(nothing.value == 0.0);

    const auto wide = make_flat_torus(2, {2.0, 1.0});
    const auto scaled = leading_integral(wide, make_field(wide, FieldSpec{}), zero_potential(), phi);
    CHECK(scaled.value == doctest::Approx(2 / (4 * kPi)).epsilon(1e-9));
}

TEST_CASE("diagonal kernel against the leading coefficient") {
    const std::vector<std::vector<double>> pts{{0.25, 0.5}};
    {
        const Config cfg = parse_config_text(kFree);
        // images at unit distance add 4 e^{-p/4}, negligible at p = 32
        const auto d = diagonal_compare(cfg.problem(), 32, pts, cfg.lab_options(1));
        CHECK(d[0].rel_error <= 0.02);
    }
    const Config cfg = parse_config_text(kLandau);
    const auto coarse = diagonal_compare(cfg.problem(), 8, pts, cfg.lab_options(1));
    const auto fine = diagonal_compare(cfg.problem(), 32, pts, cfg.lab_options(1));
    CHECK(fine[0].rel_error <= 0.03);
    CHECK(fine[0].rel_error <= coarse[0].rel_error);
}

TEST_CASE("rescaled kernel comparison") {
    const Config cfg = parse_config_text(kLandau);
    const auto opt = cfg.lab_options(1);
    RealVector zero = RealVector::Zero(2), z(2), zp(2);
    z << 0.125, 0.0;
    zp << 0.0, 0.125;
    const std::vector<std::pair<RealVector, RealVector>> pairs{{zero, zero}, {z, zp}};
    const auto c16 = rescaled_kernel_compare(cfg.problem(), 16, {0.5, 0.5}, pairs, 4, opt);
    const auto c32 = rescaled_kernel_compare(cfg.problem(), 32, {0.5, 0.5}, pairs, 4, opt);
    REQUIRE(c16.pairs.size() == 2);
    const auto& diag = c32.pairs[0];
    CHECK(std::abs(diag.rhs(0, 0).imag()) <= 1e-10);
    CHECK(std::abs(diag.lhs(0, 0) - diag.rhs(0, 0)) <= 0.03 * std::abs(diag.rhs(0, 0)));
    for (const auto& pr : c32.pairs) CHECK(pr.error <= 0.03 * std::abs(diag.rhs(0, 0)));
    CHECK(c32.pairs[1].abs_error <= c16.pairs[1].abs_error);
    CHECK(c32.swap_defect <= 1e-8);

    const Config free = parse_config_text(kFree);
    const auto f = rescaled_kernel_compare(free.problem(), 32, {0.5, 0.5}, pairs, 4, free.lab_options(1));
    for (const auto& pr : f.pairs) CHECK(std::abs(pr.lhs(0, 0) - pr.rhs(0, 0)) <= 0.03 * std::abs(pr.rhs(0, 0)));
}

TEST_CASE("off-diagonal decay") {
    const Config cfg = parse_config_text(kLandau);
    const auto opt = cfg.lab_options(1);
    CHECK_THROWS_AS(offdiag_decay_check(cfg.problem(), {8, 16}, {0.25, 0.5}, {0.3, 0.5}, 0.1, opt), DomainError);
    const auto r = offdiag_decay_check(cfg.problem(), {8, 16, 32}, {0.25, 0.5}, {0.75, 0.5}, 0.1, opt);
    CHECK(r.distance == doctest::Approx(0.5));
    CHECK(r.rapid);
    CHECK(r.slope <= -3.0);
}

TEST_CASE("distance and slope helpers") {
    const auto torus = make_flat_torus(2, {1.0, 2.0});
    const std::vector<double> a{0.1, 0.1}, b{0.9, 1.9};
    CHECK(torus_distance(torus, a, b) == doctest::Approx(std::hypot(0.2, 0.2)));
    CHECK(loglog_slope({1, 2, 4, 8}, {1, 0.25, 0.0625, 0.015625}) == doctest::Approx(-2.0));
}

TEST_CASE("cached sweep replays identical values") {
    const auto dir = std::filesystem::temp_directory_path() / ("scbl-test-sweep-" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    ResultCache cache(dir);
    const Config cfg = parse_config_text(kLandau);
    auto opt = cfg.lab_options(1);
    opt.cache.store = &cache;
    opt.cache.inputs = cfg.canonical({"geometry", "field", "potential", "phi", "engine"});
    const auto first = trace_sweep(cfg.problem(), {8}, opt);
    const std::size_t misses = cache.misses();
    const auto second = trace_sweep(cfg.problem(), {8}, opt);
    CHECK(cache.misses() == misses);
    CHECK(cache.hits() > 0);
    CHECK(format_number(first[0].value) == format_number(second[0].value));
    CHECK(format_number(first[0].check_value) == format_number(second[0].check_value));
    std::filesystem::remove_all(dir);
}
