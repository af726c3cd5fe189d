#include "scbl/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "scbl/chebyshev.hpp"
#include "scbl/operator.hpp"

namespace scbl {

namespace {

constexpr double kMergeTolerance = 1e-9;

double sphere_area(int m) {
    // surface area of the unit (m-1)-sphere in R^m; omega_0 = 2
    return 2.0 * std::pow(kPi, 0.5 * m) / boost::math::tgamma(0.5 * m);
}

// Points where r^2 + shift crosses a joint of a piecewise test function.
std::vector<double> radial_breakpoints(const TestFunction& phi, double shift) {
    std::vector<double> out;
    for (const auto& t : phi.terms()) {
        if (t.family != Family::bump) continue;
        const double q = 0.25 * (t.upper - t.lower);
        for (double x : {t.lower, t.lower + q, t.upper - q, t.upper})
            if (x > shift) out.push_back(std::sqrt(x - shift));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// omega_{m-1} * int_0^inf phi(r^2 + shift) r^{m-1} dr, adaptive Gauss-Kronrod.
double radial_integral_gk(const TestFunction& phi, double shift, int m, double rel_tol) {
    using boost::math::quadrature::gauss_kronrod;
    auto f = [&](double r) { return phi(r * r + shift) * std::pow(r, m - 1); };
    std::vector<double> cuts{0.0};
    for (double b : radial_breakpoints(phi, shift)) cuts.push_back(b);
    double total = 0.0, err_total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double err = 0.0;
        total += gauss_kronrod<double, 61>::integrate(f, cuts[i], cuts[i + 1], 15, rel_tol, &err);
        err_total += err;
    }
    const bool compact = phi.is_schwartz() && !radial_breakpoints(phi, shift).empty() &&
                         std::all_of(phi.terms().begin(), phi.terms().end(),
                                     [](const TermSpec& t) { return t.family == Family::bump; });
    if (!compact) {
        double err = 0.0;
        total += gauss_kronrod<double, 61>::integrate(f, cuts.back(), std::numeric_limits<double>::infinity(), 15,
                                                      rel_tol, &err);
        err_total += err;
    }
    if (err_total > std::max(10.0 * rel_tol * std::abs(total), 1e-14))
        throw NumericalError("model_operator", "f0_point", "radial quadrature did not converge");
    return sphere_area(m) * total;
}

// Same integral in t = r^2 with double-exponential rules (independent path).
double radial_integral_de(const TestFunction& phi, double shift, int m) {
    auto g = [&](double t) { return phi(t + shift) * std::pow(t, 0.5 * m - 1.0); };
    std::vector<double> cuts{0.0};
    for (double b : radial_breakpoints(phi, shift)) cuts.push_back(b * b);
    double total = 0.0;
    boost::math::quadrature::tanh_sinh<double> ts;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += ts.integrate(g, cuts[i], cuts[i + 1]);
    bool compact = !radial_breakpoints(phi, shift).empty();
    for (const auto& t : phi.terms()) compact = compact && t.family == Family::bump;
    if (!compact) {
        boost::math::quadrature::exp_sinh<double> es;
        const double a = cuts.back();
        total += es.integrate([&](double t) { return g(t + a); }, 0.0, std::numeric_limits<double>::infinity());
    }
    return 0.5 * sphere_area(m) * total;
}

void enumerate(const RealVector& a, int j, double partial, double limit, std::vector<int>& k,
               const std::function<void(double)>& emit) {
    const int n = static_cast<int>(a.size());
    if (j == n) {
        emit(partial);
        return;
    }
    double rest = 0.0;
    for (int i = j + 1; i < n; ++i) rest += a(i);
    for (int kj = 0;; ++kj) {
        const double v = partial + (2.0 * kj + 1.0) * a(j);
        if (v + rest > limit + kMergeTolerance) break;
        k[j] = kj;
        enumerate(a, j + 1, v, limit, k, emit);
    }
    k[j] = 0;
}

}  // namespace

double ModelPointData::frequency_product() const {
    double p = 1.0;
    for (Eigen::Index i = 0; i < frequencies.size(); ++i) p *= frequencies(i);
    return p;
}

ModelPointData b_eigenstructure(const RealMatrix& skew, double rank_tolerance) {
    const int d = static_cast<int>(skew.rows());
    if (d < 1 || skew.cols() != d) throw DomainError("model_operator", "b_eigenstructure", "M must be square");
    const double norm = skew.size() ? skew.operatorNorm() : 0.0;
    if ((skew + skew.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, norm))
        throw DomainError("model_operator", "b_eigenstructure", "M is not antisymmetric");

    ModelPointData data;
    data.dim = d;
    data.skew = 0.5 * (skew - skew.transpose());
    data.rank_tolerance = rank_tolerance < 0.0 ? 1e-8 * std::max(1.0, norm) : rank_tolerance;

    // iM is Hermitian with eigenvalues +-a_j and 0
    const ComplexMatrix im = Complex(0.0, 1.0) * data.skew.cast<Complex>();
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(im);
    std::vector<std::pair<double, int>> positive;
    for (int i = 0; i < d; ++i)
        if (es.eigenvalues()(i) > data.rank_tolerance) positive.push_back({es.eigenvalues()(i), i});
    std::sort(positive.begin(), positive.end(), [](auto x, auto y) { return x.first > y.first; });
    const int n = static_cast<int>(positive.size());
    data.frequencies.resize(n);
    RealMatrix planes(d, 2 * n);
    for (int j = 0; j < n; ++j) {
        data.frequencies(j) = positive[j].first;
        const ComplexVector w = es.eigenvectors().col(positive[j].second);
        // M x = a y, M y = -a x for w = x + i y; e1 = sqrt2 y, e2 = sqrt2 x
        planes.col(2 * j) = std::sqrt(2.0) * w.imag();
        planes.col(2 * j + 1) = std::sqrt(2.0) * w.real();
    }
    data.frame.resize(d, d);
    data.frame.leftCols(2 * n) = planes;
    if (2 * n < d) {
        Eigen::HouseholderQR<RealMatrix> qr(planes.cols() ? planes : RealMatrix::Zero(d, 1));
        const RealMatrix q = qr.householderQ();
        data.frame.rightCols(d - 2 * n) = q.rightCols(d - 2 * n);
    }
    RealMatrix canon = RealMatrix::Zero(d, d);
    for (int j = 0; j < n; ++j) {
        canon(2 * j, 2 * j + 1) = data.frequencies(j);
        canon(2 * j + 1, 2 * j) = -data.frequencies(j);
    }
    const RealMatrix rebuilt = data.frame * canon * data.frame.transpose();
    if ((rebuilt - data.skew).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, norm) ||
        (data.frame.transpose() * data.frame - RealMatrix::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-10)
        throw NumericalError("model_operator", "b_eigenstructure", "symplectic frame reconstruction failed");
    attach_potential(data, ComplexMatrix::Zero(1, 1));
    return data;
}

void attach_potential(ModelPointData& data, const ComplexMatrix& v0) {
    const Eigen::Index r = v0.rows();
    if (r < 1 || v0.cols() != r) throw DomainError("model_operator", "attach_potential", "V0 must be square");
    if ((v0 - v0.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, v0.cwiseAbs().maxCoeff()))
        throw DomainError("model_operator", "attach_potential", "V0 is not Hermitian");
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (v0 + v0.adjoint()));
    data.rank_e = static_cast<int>(r);
    data.projections.clear();
    std::vector<double> values;
    for (Eigen::Index i = 0; i < r; ++i) {
        const double v = es.eigenvalues()(i);
        const ComplexVector u = es.eigenvectors().col(i);
        if (!values.empty() && std::abs(v - values.back()) <= kMergeTolerance) {
            data.projections.back() += u * u.adjoint();
        } else {
            values.push_back(v);
            data.projections.push_back(u * u.adjoint());
        }
    }
    data.potential_values = Eigen::Map<RealVector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

LevelLadder lambda_levels(const ModelPointData& data, double cutoff) {
    if (!std::isfinite(cutoff)) throw DomainError("model_operator", "lambda_levels", "cutoff must be finite");
    struct Raw {
        double value;
        std::vector<int> k;
        int mu;
    };
    std::vector<Raw> raw;
    const int n = data.half_rank();
    std::vector<int> k(n, 0);
    for (int mu = 0; mu < static_cast<int>(data.potential_values.size()); ++mu) {
        const double v = data.potential_values(mu);
        enumerate(data.frequencies, 0, v, cutoff, k, [&](double value) {
            if (value <= cutoff + kMergeTolerance) raw.push_back({value, k, mu});
        });
    }
    std::stable_sort(raw.begin(), raw.end(), [](const Raw& a, const Raw& b) { return a.value < b.value; });
    LevelLadder ladder;
    ladder.cutoff = cutoff;
    for (auto& e : raw) {
        if (ladder.levels.empty() || e.value - ladder.levels.back().value > kMergeTolerance) {
            ladder.levels.push_back({e.value, 0, {}});
        }
        auto& lvl = ladder.levels.back();
        lvl.multiplicity += static_cast<int>(data.projections[e.mu].trace().real() + 0.5);
        lvl.members.push_back({std::move(e.k), e.mu});
    }
    ladder.empty = ladder.levels.empty();
    return ladder;
}

double ladder_cutoff(const ModelPointData& data, const TestFunction& phi, double tail) {
    const double vmax = data.potential_values.maxCoeff();
    const double lowest = data.potential_values.minCoeff() + data.frequencies.sum();
    if (data.half_rank() == 0) return vmax;
    if (!std::isfinite(phi.tail_sup(lowest)))
        throw DomainError("model_operator", "ladder_cutoff", "test function does not decay along the ladder");
    const double scale = data.frequency_product() * data.rank_e;
    const double amax = data.frequencies.maxCoeff();
    // grow a far horizon until everything beyond it is negligible
    double far = lowest + 8.0 * amax;
    for (int iter = 0;; ++iter) {
        const auto ladder = lambda_levels(data, far);
        std::size_t count = 0;
        for (const auto& l : ladder.levels) count += l.members.size();
        // levels in (far, 2 far] number at most (2 far / a_min)^n times count growth; bound crudely
        const double growth = std::pow(2.0 * far / data.frequencies.minCoeff() + 1.0, data.half_rank());
        if (scale * growth * phi.tail_sup(far) < 1e-3 * tail || iter > 60) {
            std::vector<double> contrib;
            std::vector<double> values;
            for (const auto& l : ladder.levels) {
                values.push_back(l.value);
                contrib.push_back(scale * static_cast<double>(l.members.size()) * phi.tail_sup(l.value));
            }
            double beyond = scale * growth * phi.tail_sup(far);
            for (int i = static_cast<int>(values.size()) - 1; i >= 0; --i) {
                if (beyond + contrib[i] >= tail) return values[i];
                beyond += contrib[i];
            }
            return values.empty() ? lowest : values.front();
        }
        far = lowest + 2.0 * (far - lowest);
    }
}

ComplexMatrix f0_point(const ModelPointData& data, const TestFunction& phi, const F0Options& opt) {
    const int r = data.rank_e;
    ComplexMatrix out = ComplexMatrix::Zero(r, r);
    if (phi.is_zero()) return out;
    const double cutoff = opt.cutoff > 0.0 ? opt.cutoff : ladder_cutoff(data, phi);
    const auto ladder = lambda_levels(data, cutoff);
    const int n = data.half_rank();
    const int m = data.kernel_dim();
    const double prod = data.frequency_product();
    if (m == 0) {
        const double coef = prod / std::pow(kTwoPi, n);
        for (const auto& lvl : ladder.levels)
            for (const auto& mem : lvl.members) out += coef * phi(lvl.value) * data.projections[mem.mu];
    } else {
        const double coef = prod / std::pow(kTwoPi, data.dim - n);
        for (const auto& lvl : ladder.levels) {
            const double radial = radial_integral_gk(phi, lvl.value, m, opt.rel_tol);
            for (const auto& mem : lvl.members) out += coef * radial * data.projections[mem.mu];
        }
    }
    return 0.5 * (out + out.adjoint());
}

ComplexMatrix model_kernel_diag_analytic(const ModelPointData& data, const TestFunction& phi, const F0Options& opt) {
    const int r = data.rank_e;
    ComplexMatrix out = ComplexMatrix::Zero(r, r);
    if (phi.is_zero()) return out;
    const double cutoff = opt.cutoff > 0.0 ? opt.cutoff : ladder_cutoff(data, phi);
    const int n = data.half_rank();
    const int m = data.kernel_dim();
    // P_{Lambda_k}(0, 0) = prod a_j / (2 pi)^n per Landau multi-index, times
    // the free-direction Fourier integral (2 pi)^{-m} int phi(|xi|^2 + Lambda) d xi
    const double projector_diag = data.frequency_product() / std::pow(kTwoPi, n);
    for (int mu = 0; mu < static_cast<int>(data.potential_values.size()); ++mu) {
        double total = 0.0;
        std::vector<int> k(n, 0);
        enumerate(data.frequencies, 0, data.potential_values(mu), cutoff, k, [&](double value) {
            if (value > cutoff + kMergeTolerance) return;
            const double free = m == 0 ? phi(value) : radial_integral_de(phi, value, m) / std::pow(kTwoPi, m);
            total += projector_diag * free;
        });
        out += total * data.projections[mu];
    }
    return 0.5 * (out + out.adjoint());
}

Complex magnetic_translation_phase(const RealMatrix& skew, const RealVector& z, const RealVector& z_prime) {
    const double angle = -0.5 * z.dot(skew * z_prime);
    return {std::cos(angle), std::sin(angle)};
}

namespace {

struct Factor {
    std::vector<int> axes;  // frame coordinates
    double frequency = 0.0;  // 0 for a free factor
};

std::vector<Factor> split_factors(const ModelPointData& data) {
    std::vector<Factor> out;
    const int n = data.half_rank();
    for (int j = 0; j < n; ++j) out.push_back({{2 * j, 2 * j + 1}, data.frequencies(j)});
    std::vector<int> free;
    for (int i = 2 * n; i < data.dim; ++i) free.push_back(i);
    if (free.empty()) return out;
    if (out.empty() && free.size() > 2) {
        out.push_back({{free[0], free[1]}, 0.0});
        out.push_back({std::vector<int>(free.begin() + 2, free.end()), 0.0});
    } else {
        out.push_back({free, 0.0});
    }
    if (out.size() > 2) throw NumericalError("model_operator", "model_kernel_numeric", "too many factors");
    return out;
}

struct FactorLattice {
    DiscreteOperator op;
    std::ptrdiff_t source = 0;
    std::ptrdiff_t target = 0;
    SpectralWindow window;
};

FactorLattice build_factor(const Factor& f, const std::vector<double>& displacement, double spacing, double halfwidth) {
    const int k = static_cast<int>(f.axes.size());
    RealMatrix skew = RealMatrix::Zero(k, k);
    if (f.frequency > 0.0) {
        skew(0, 1) = f.frequency;
        skew(1, 0) = -f.frequency;
    }
    std::vector<double> widths(k);
    std::vector<int> intervals(k);
    std::vector<int> src(k), tgt(k);
    for (int i = 0; i < k; ++i) {
        const double dz = displacement[i];
        double h = spacing;
        int steps = 0;
        if (std::abs(dz) > 1e-14) {
            steps = static_cast<int>(std::ceil(std::abs(dz) / spacing - 1e-9));
            h = std::abs(dz) / steps;
            if (dz < 0) steps = -steps;
        }
        const int half = static_cast<int>(std::ceil(halfwidth / h - 1e-9));
        intervals[i] = 2 * half;
        widths[i] = half * h;
        src[i] = half - 1;
        tgt[i] = half - 1 + steps;
        if (tgt[i] < 0 || tgt[i] > 2 * half - 2)
            throw DomainError("model_operator", "model_kernel_numeric", "point outside the model box");
    }
    FactorLattice fl;
    fl.op = assemble_model_operator(skew, ComplexMatrix::Zero(1, 1), widths, intervals);
    fl.source = fl.op.site_index(src);
    fl.target = fl.op.site_index(tgt);
    fl.window = gershgorin_window(fl.op.matrix);
    return fl;
}

// Coefficients c_jk of f(x, y) on a product window, sampled at Chebyshev-Gauss nodes.
RealMatrix chebyshev_2d(const std::function<double(double, double)>& f, const SpectralWindow& wx,
                        const SpectralWindow& wy, int nx, int ny) {
    auto basis = [](const SpectralWindow& w, int order, RealVector& nodes) {
        const int m = 2 * order;
        nodes.resize(m);
        RealMatrix t(order, m);
        for (int j = 0; j < m; ++j) {
            const double theta = kPi * (j + 0.5) / m;
            nodes(j) = w.center() + w.half_width() * std::cos(theta);
            for (int k = 0; k < order; ++k) t(k, j) = (k == 0 ? 1.0 : 2.0) * std::cos(k * theta) / m;
        }
        return t;
    };
    RealVector xs, ys;
    const RealMatrix tx = basis(wx, nx, xs);
    const RealMatrix ty = basis(wy, ny, ys);
    RealMatrix samples(xs.size(), ys.size());
    for (Eigen::Index i = 0; i < xs.size(); ++i)
        for (Eigen::Index j = 0; j < ys.size(); ++j) samples(i, j) = f(xs(i), ys(j));
    return tx * samples * ty.transpose();
}

double tail_ratio_rows(const RealMatrix& c) {
    const Eigen::Index start = c.rows() - c.rows() / 8;
    return c.bottomRows(c.rows() - start).cwiseAbs().maxCoeff();
}

std::vector<Complex> factor_moments_complex(const FactorLattice& fl, int order) {
    const Eigen::Index n = fl.op.size();
    ComplexVector src = ComplexVector::Zero(n), tgt = ComplexVector::Zero(n);
    src(fl.source) = 1.0;
    tgt(fl.target) = 1.0;
    return chebyshev_moments(fl.op.matrix, fl.window, order, tgt, src);
}

// K_{phi(sum of factors)}(target, source) on one lattice resolution.
Complex lattice_kernel(const std::vector<Factor>& factors, const std::vector<std::vector<double>>& disp,
                       const TestFunction& phi, double shift, double spacing, double halfwidth, double tol) {
    std::vector<FactorLattice> lat;
    for (std::size_t f = 0; f < factors.size(); ++f)
        lat.push_back(build_factor(factors[f], disp[f], spacing, halfwidth));
    auto g = [&](double x) { return phi(x + shift); };
    if (lat.size() == 1) {
        const auto coeffs = adaptive_chebyshev(g, lat[0].window, tol);
        const auto mu = factor_moments_complex(lat[0], static_cast<int>(coeffs.size()));
        Complex s = 0.0;
        for (std::size_t k = 0; k < coeffs.size(); ++k) s += coeffs[k] * mu[k];
        return s / lat[0].op.cell_volume();
    }
    auto f2 = [&](double x, double y) { return phi(x + y + shift); };
    int nx = 64, ny = 64;
    RealMatrix c;
    for (;;) {
        c = chebyshev_2d(f2, lat[0].window, lat[1].window, nx, ny);
        const double big = c.cwiseAbs().maxCoeff();
        const bool ok_x = tail_ratio_rows(c) <= tol * big;
        const bool ok_y = tail_ratio_rows(c.transpose()) <= tol * big;
        if (big == 0.0 || (ok_x && ok_y)) break;
        if (!ok_x) nx *= 2;
        if (!ok_y) ny *= 2;
        if (nx > 4096 || ny > 4096)
            throw NumericalError("model_operator", "model_kernel_numeric", "product Chebyshev series did not converge");
    }
    const auto mx = factor_moments_complex(lat[0], nx);
    const auto my = factor_moments_complex(lat[1], ny);
    Complex s = 0.0;
    for (int j = 0; j < nx; ++j) {
        Complex row = 0.0;
        for (int k = 0; k < ny; ++k) row += c(j, k) * my[k];
        s += mx[j] * row;
    }
    return s / (lat[0].op.cell_volume() * lat[1].op.cell_volume());
}

}  // namespace

ComplexMatrix model_kernel_numeric(const ModelPointData& data, const TestFunction& phi, const RealVector& z,
                                   const RealVector& z_prime, const ModelKernelOptions& opt) {
    const int d = data.dim;
    if (z.size() != d || z_prime.size() != d)
        throw DomainError("model_operator", "model_kernel_numeric", "points must have the model dimension");
    if (!(opt.spacing > 0.0)) throw DomainError("model_operator", "model_kernel_numeric", "spacing must be positive");
    const int r = data.rank_e;
    if (phi.is_zero()) return ComplexMatrix::Zero(r, r);

    const RealVector disp = data.frame.transpose() * (z - z_prime);
    const auto factors = split_factors(data);
    std::vector<std::vector<double>> per_factor;
    for (const auto& f : factors) {
        std::vector<double> v;
        for (int a : f.axes) v.push_back(disp(a));
        per_factor.push_back(v);
    }
    double amin = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < data.frequencies.size(); ++j) amin = std::min(amin, data.frequencies(j));
    const double reach = std::max(z.cwiseAbs().maxCoeff(), z_prime.cwiseAbs().maxCoeff());
    double halfwidth = opt.box_halfwidth;
    if (halfwidth <= 0.0) {
        halfwidth = std::max({8.0, 2.0 * disp.cwiseAbs().maxCoeff() + 4.0, 2.0 * reach + 2.0});
        if (std::isfinite(amin)) halfwidth = std::max(halfwidth, 6.0 / std::sqrt(amin));
    }
    if (2.0 * reach > halfwidth + 1e-12 || disp.cwiseAbs().maxCoeff() > 0.5 * halfwidth + 1e-12)
        throw DomainError("model_operator", "model_kernel_numeric", "Z and Z' must lie inside half the box");

    ComplexMatrix out = ComplexMatrix::Zero(r, r);
    const Complex phase = magnetic_translation_phase(data.skew, z, z_prime);
    for (int mu = 0; mu < static_cast<int>(data.potential_values.size()); ++mu) {
        const double shift = data.potential_values(mu);
        Complex k = lattice_kernel(factors, per_factor, phi, shift, opt.spacing, halfwidth, opt.series_tolerance);
        if (opt.richardson) {
            const Complex fine =
                lattice_kernel(factors, per_factor, phi, shift, 0.5 * opt.spacing, halfwidth, opt.series_tolerance);
            k = (4.0 * fine - k) / 3.0;
        }
        out += phase * k * data.projections[mu];
    }
    return out;
}

}  // namespace scbl
