#include "scbl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace scbl {

namespace {

constexpr int kFluxGrid = 256;
constexpr double kFluxTolerance = 1e-9;

std::vector<double> wave_vector(const Geometry& geom, const std::vector<int>& k, const char* op) {
    if (static_cast<int>(k.size()) != geom.dim)
        throw DomainError("geometry_field", op, "Fourier wave vector has wrong length");
    std::vector<double> kappa(k.size());
    for (std::size_t l = 0; l < k.size(); ++l) kappa[l] = kTwoPi * k[l] / geom.lengths[l];
    return kappa;
}

double phase(const std::vector<double>& kappa, std::span<const double> x) {
    double s = 0.0;
    for (std::size_t l = 0; l < kappa.size(); ++l) s += kappa[l] * x[l];
    return s;
}

// Canonical sign: the first non-zero component is positive.
bool canonical(const std::vector<int>& k) {
    for (int v : k) {
        if (v != 0) return v > 0;
    }
    return true;
}

}  // namespace

double Geometry::min_length() const { return *std::min_element(lengths.begin(), lengths.end()); }

Geometry make_flat_torus(int dim, std::vector<double> side_lengths) {
    if (dim < 2 || dim > 4)
        throw DomainError("geometry_field", "make_flat_torus",
                          "unsupported dimension " + std::to_string(dim) + " (expected 2..4)");
    if (static_cast<int>(side_lengths.size()) != dim)
        throw DomainError("geometry_field", "make_flat_torus", "need one side length per dimension");
    double volume = 1.0;
    for (double len : side_lengths) {
        if (!(len > 0.0) || !std::isfinite(len))
            throw DomainError("geometry_field", "make_flat_torus", "side lengths must be positive");
        volume *= len;
    }
    return Geometry{dim, std::move(side_lengths), volume};
}

FieldData make_field(const Geometry& geom, const FieldSpec& spec) {
    const int d = geom.dim;
    FieldData f;
    f.geom_ = geom;
    f.dim_ = d;
    f.constant_ = RealMatrix::Zero(d, d);

    auto check_plane = [&](int i, int j) {
        if (i < 0 || j < 0 || i >= d || j >= d || i == j)
            throw DomainError("geometry_field", "make_field", "invalid coordinate plane");
    };

    RealMatrix seen = RealMatrix::Zero(d, d);
    for (const auto& c : spec.constants) {
        check_plane(c.i, c.j);
        const int i = std::min(c.i, c.j), j = std::max(c.i, c.j);
        const double value = c.i < c.j ? c.value : -c.value;
        if (seen(i, j) != 0.0 && std::abs(f.constant_(i, j) - value) > 1e-12 * std::max(1.0, std::abs(value)))
            throw DomainError("geometry_field", "make_field",
                              "antisymmetry violated: B_ij and B_ji are inconsistent");
        seen(i, j) = 1.0;
        f.constant_(i, j) = value;
        f.constant_(j, i) = -value;
    }

    // Group perturbation terms by canonical wave vector.
    std::map<std::vector<int>, ComplexMatrix> groups;
    for (const auto& pert : spec.perturbations) {
        check_plane(pert.i, pert.j);
        std::vector<int> k = pert.mode.k;
        (void)wave_vector(geom, k, "make_field");
        if (std::all_of(k.begin(), k.end(), [](int v) { return v == 0; }))
            throw DomainError("geometry_field", "make_field",
                              "a perturbation must have zero mean; put constant parts in B.ij");
        Complex c = pert.mode.amplitude;
        int i = pert.i, j = pert.j;
        if (i > j) {
            std::swap(i, j);
            c = -c;
        }
        if (!canonical(k)) {
            for (int& v : k) v = -v;
            c = std::conj(c);
        }
        auto [it, inserted] = groups.try_emplace(k, ComplexMatrix::Zero(d, d));
        it->second(i, j) += c;
        it->second(j, i) -= c;
    }

    for (const auto& [k, cmat] : groups) {
        const auto kappa = wave_vector(geom, k, "make_field");
        // dB = 0 for every triple of axes.
        for (int a = 0; a < d; ++a)
            for (int b = a + 1; b < d; ++b)
                for (int c = b + 1; c < d; ++c) {
                    const Complex cyc = kappa[a] * cmat(b, c) + kappa[b] * cmat(c, a) + kappa[c] * cmat(a, b);
                    if (std::abs(cyc) > 1e-10 * (1.0 + cmat.cwiseAbs().maxCoeff()))
                        throw DomainError("geometry_field", "make_field",
                                          "perturbation is not a closed 2-form");
                }
        for (int a = 0; a < d; ++a)
            for (int b = a + 1; b < d; ++b)
                if (cmat(a, b) != Complex(0.0, 0.0)) f.modes_.push_back({a, b, kappa, cmat(a, b)});

        // Coulomb-gauge vector potential: a_j = -i sum_i kappa_i C_ij / |kappa|^2.
        double k2 = 0.0;
        for (double v : kappa) k2 += v * v;
        FieldData::PotentialMode pm{kappa, std::vector<Complex>(d)};
        for (int jj = 0; jj < d; ++jj) {
            Complex s = 0.0;
            for (int ii = 0; ii < d; ++ii) s += kappa[ii] * cmat(ii, jj);
            pm.a[jj] = Complex(0.0, -1.0) * s / k2;
        }
        f.potential_modes_.push_back(std::move(pm));
    }
    f.mode_ = f.modes_.empty() ? FieldMode::constant : FieldMode::smooth_periodic;

    // Flux quantization on each coordinate 2-torus through the origin.
    std::vector<double> x(d, 0.0);
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            const double hi = geom.lengths[i] / kFluxGrid, hj = geom.lengths[j] / kFluxGrid;
            double flux = 0.0;
            for (int a = 0; a < kFluxGrid; ++a) {
                x[i] = a * hi;
                for (int b = 0; b < kFluxGrid; ++b) {
                    x[j] = b * hj;
                    flux += f.coefficient(i, j, x);
                }
            }
            x[i] = x[j] = 0.0;
            flux *= hi * hj;
            const double quanta = flux / kTwoPi;
            const double nearest = std::round(quanta);
            if (std::abs(quanta - nearest) > kFluxTolerance * std::max(1.0, std::abs(quanta))) {
                char buf[160];
                std::snprintf(buf, sizeof buf, "flux %.6g/2pi not integral in plane (%d,%d)", flux, i + 1,
                              j + 1);
                throw DomainError("geometry_field", "make_field", buf);
            }
            f.flux_[{i, j}] = static_cast<int>(nearest);
        }
    return f;
}

double FieldData::coefficient(int i, int j, std::span<const double> x) const {
    if (i == j) return 0.0;
    double v = constant_(i, j);
    for (const auto& m : modes_) {
        double sign = 0.0;
        if (m.i == i && m.j == j) sign = 1.0;
        else if (m.i == j && m.j == i) sign = -1.0;
        else continue;
        const double th = phase(m.kappa, x);
        v += sign * 2.0 * (m.c * Complex(std::cos(th), std::sin(th))).real();
    }
    return v;
}

int FieldData::flux_integer(int i, int j) const {
    if (i > j) return -flux_integer(j, i);
    auto it = flux_.find({i, j});
    if (it == flux_.end()) throw DomainError("geometry_field", "flux_integer", "invalid plane");
    return it->second;
}

double FieldData::max_abs() const {
    double best = 0.0;
    for (int i = 0; i < dim_; ++i)
        for (int j = i + 1; j < dim_; ++j) {
            double v = std::abs(constant_(i, j));
            for (const auto& m : modes_)
                if (m.i == i && m.j == j) v += 2.0 * std::abs(m.c);
            best = std::max(best, v);
        }
    return best;
}

bool FieldData::perturbation_independent_of(int axis) const {
    return std::all_of(potential_modes_.begin(), potential_modes_.end(),
                       [axis](const PotentialMode& m) { return m.kappa[axis] == 0.0; });
}

double FieldData::perturbation_link_integral(std::span<const double> x, int axis, double h) const {
    double total = 0.0;
    for (const auto& m : potential_modes_) {
        const double th = phase(m.kappa, x);
        const Complex e(std::cos(th), std::sin(th));
        const double ka = m.kappa[axis];
        Complex integral;
        if (ka == 0.0) {
            integral = m.a[axis] * e * h;
        } else {
            const Complex step(std::cos(ka * h) - 1.0, std::sin(ka * h));
            integral = m.a[axis] * e * step / Complex(0.0, ka);
        }
        total += 2.0 * integral.real();
    }
    return total;
}

double FieldData::perturbation_potential(std::span<const double> x, int axis) const {
    double total = 0.0;
    for (const auto& m : potential_modes_) {
        const double th = phase(m.kappa, x);
        total += 2.0 * (m.a[axis] * Complex(std::cos(th), std::sin(th))).real();
    }
    return total;
}

RealMatrix skew_matrix_at(const FieldData& field, std::span<const double> x0) {
    const int d = field.dim();
    if (static_cast<int>(x0.size()) != d)
        throw DomainError("geometry_field", "skew_matrix_at", "point has wrong dimension");
    RealMatrix m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = field.coefficient(i, j, x0);
    return 0.5 * (m - m.transpose());
}

double volume_density_kappa(const Geometry& geom, std::span<const double> x0, std::span<const double> z) {
    if (static_cast<int>(x0.size()) != geom.dim || static_cast<int>(z.size()) != geom.dim)
        throw DomainError("geometry_field", "volume_density_kappa", "point has wrong dimension");
    double r2 = 0.0;
    for (double v : z) r2 += v * v;
    if (std::sqrt(r2) >= 0.5 * geom.min_length())
        throw DomainError("geometry_field", "volume_density_kappa",
                          "tangent vector outside the injectivity radius");
    return 1.0;
}

PotentialData make_potential(const Geometry& geom, const PotentialSpec& spec) {
    if (spec.rank < 1) throw DomainError("geometry_field", "make_potential", "rank must be positive");
    PotentialData v;
    v.rank_ = spec.rank;
    if (spec.constant.size() == 0) {
        v.constant_ = ComplexMatrix::Zero(spec.rank, spec.rank);
    } else {
        if (spec.constant.rows() != spec.rank || spec.constant.cols() != spec.rank)
            throw DomainError("geometry_field", "make_potential", "constant block has wrong shape");
        if ((spec.constant - spec.constant.adjoint()).cwiseAbs().maxCoeff() >
            1e-12 * std::max(1.0, spec.constant.cwiseAbs().maxCoeff()))
            throw DomainError("geometry_field", "make_potential", "potential is not Hermitian");
        v.constant_ = 0.5 * (spec.constant + spec.constant.adjoint());
    }
    for (const auto& m : spec.modes) {
        if (m.row < 0 || m.col < 0 || m.row >= spec.rank || m.col >= spec.rank)
            throw DomainError("geometry_field", "make_potential", "mode entry out of range");
        v.modes_.push_back({m.row, m.col, wave_vector(geom, m.mode.k, "make_potential"), m.mode.k,
                            m.mode.amplitude});
    }
    v.zero_ = v.constant_.cwiseAbs().maxCoeff() == 0.0 &&
              std::all_of(v.modes_.begin(), v.modes_.end(),
                          [](const PotentialData::Mode& m) { return m.c == Complex(0.0, 0.0); });
    return v;
}

PotentialData zero_potential(int rank) {
    PotentialData v;
    v.rank_ = rank;
    v.constant_ = ComplexMatrix::Zero(rank, rank);
    return v;
}

ComplexMatrix PotentialData::at(std::span<const double> x) const {
    ComplexMatrix out = constant_;
    for (const auto& m : modes_) {
        const double th = phase(m.kappa, x);
        const Complex t = m.c * Complex(std::cos(th), std::sin(th));
        out(m.row, m.col) += t;
        out(m.col, m.row) += std::conj(t);
    }
    return out;
}

bool PotentialData::independent_of(int axis) const {
    return std::all_of(modes_.begin(), modes_.end(), [axis](const Mode& m) { return m.k[axis] == 0; });
}

double PotentialData::max_norm() const {
    double n = 0.0;
    if (constant_.size() > 0) {
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(constant_, Eigen::EigenvaluesOnly);
        n = es.eigenvalues().cwiseAbs().maxCoeff();
    }
    for (const auto& m : modes_) n += 2.0 * std::abs(m.c);
    return n;
}

}  // namespace scbl
