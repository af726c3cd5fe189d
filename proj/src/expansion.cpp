#include "scbl/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "scbl/io.hpp"
#include "scbl/operator.hpp"

namespace scbl {

namespace {

std::string grid_text(const std::vector<int>& g) {
    std::string s;
    for (std::size_t i = 0; i < g.size(); ++i) s += (i ? "x" : "") + std::to_string(g[i]);
    return s;
}

std::string points_text(const std::vector<std::vector<double>>& pts) {
    std::string s;
    for (const auto& x : pts) {
        std::vector<double> v(x.begin(), x.end());
        s += "[" + pack_numbers(v) + "]";
    }
    return s;
}

// Replays a cached vector of numbers or computes and stores it.
std::vector<double> cached(const CacheContext& cache, const std::string& operation, const std::string& detail,
                           const std::function<std::vector<double>()>& compute) {
    if (!cache.active()) return compute();
    const std::string key = ResultCache::make_key(cache.inputs + "\n" + detail, operation);
    if (auto hit = cache.store->load(key)) return unpack_numbers(*hit);
    auto values = compute();
    cache.store->store(key, operation, pack_numbers(values));
    return values;
}

std::string engine_text(const LabOptions& opt) {
    std::string s = method_name(opt.method);
    if (opt.method == TraceMethod::kpm)
        s += " order " + std::to_string(opt.kpm.order) + " probes " + std::to_string(opt.kpm.probes) + " seed " +
             std::to_string(opt.kpm.seed) + (opt.kpm.damping == Damping::jackson ? " jackson" : " none");
    s += " tol " + format_number(opt.engine.series_tolerance) + " eig " + std::to_string(opt.engine.eig_column_limit);
    return s;
}

// Volume-normalized kernel blocks K(x, y) on one grid, one per (x, y) pair.
std::vector<ComplexMatrix> kernel_blocks(const Problem& problem, int p, const std::vector<int>& grid,
                                         const std::vector<std::pair<std::vector<double>, std::vector<double>>>& pairs,
                                         const LabOptions& opt) {
    const int r = problem.potential.rank();
    std::vector<std::vector<double>> pts;
    for (const auto& [x, y] : pairs) {
        pts.push_back(x);
        pts.push_back(y);
    }
    const std::string detail = "p " + std::to_string(p) + " grid " + grid_text(grid) + " " + engine_text(opt) +
                               " pairs " + points_text(pts);
    const auto flat = cached(opt.cache, "kernel_blocks", detail, [&] {
        const auto op = assemble_hp(problem.geom, problem.field, problem.potential, p, grid);
        std::vector<std::ptrdiff_t> targets, sources;
        std::map<std::ptrdiff_t, std::size_t> slot;
        std::vector<std::ptrdiff_t> columns;
        for (const auto& [x, y] : pairs) {
            const auto sx = op.locate(x), sy = op.locate(y);
            if (sx < 0 || sy < 0)
                throw DomainError("expansion_lab", "kernel", "point is not a lattice site of grid " + grid_text(grid));
            targets.push_back(sx);
            sources.push_back(sy);
            if (!slot.count(sy)) {
                slot[sy] = columns.size();
                for (int b = 0; b < r; ++b) columns.push_back(sy * r + b);
            }
        }
        const auto cols = kernel_columns(op, problem.phi, columns, opt.engine);
        std::vector<double> out;
        for (std::size_t k = 0; k < pairs.size(); ++k)
            for (int a = 0; a < r; ++a)
                for (int b = 0; b < r; ++b) {
                    const Complex v = cols[slot[sources[k]] + b](targets[k] * r + a);
                    out.push_back(v.real());
                    out.push_back(v.imag());
                }
        return out;
    });
    std::vector<ComplexMatrix> blocks;
    std::size_t at = 0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        ComplexMatrix m(r, r);
        for (int a = 0; a < r; ++a)
            for (int b = 0; b < r; ++b, at += 2) m(a, b) = Complex(flat[at], flat[at + 1]);
        blocks.push_back(m);
    }
    return blocks;
}

double max_entry(const ComplexMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

double relative_gap(double a, double b) { return b != 0.0 ? std::abs(a - b) / std::abs(b) : std::abs(a - b); }

}  // namespace

std::vector<int> refined_grid(const std::vector<int>& grid) {
    std::vector<int> out;
    for (int n : grid) out.push_back(static_cast<int>(std::ceil(1.5 * n / 8.0 - 1e-12)) * 8);
    return out;
}

std::vector<int> lab_grid(const Problem& problem, int p, const LabOptions& opt) {
    return resolved_grid(problem.geom, problem.field, p, opt.grid_factor);
}

double SweepRow::grid_gap() const { return check_grid.empty() ? 0.0 : relative_gap(value, check_value); }

std::vector<SweepRow> trace_sweep(const Problem& problem, const std::vector<int>& p_list, const LabOptions& opt) {
    if (p_list.empty()) throw DomainError("expansion_lab", "trace_sweep", "empty p list");
    for (std::size_t i = 0; i < p_list.size(); ++i)
        if (p_list[i] < 1 || (i && p_list[i] <= p_list[i - 1]))
            throw DomainError("expansion_lab", "trace_sweep", "p list must be positive and increasing");

    const double half_dim = 0.5 * problem.geom.dim;
    auto one = [&](int p, const std::vector<int>& grid) {
        const std::string detail = "p " + std::to_string(p) + " grid " + grid_text(grid) + " " + engine_text(opt);
        return cached(opt.cache, "trace", detail, [&] {
            const auto op = assemble_hp(problem.geom, problem.field, problem.potential, p, grid);
            const auto t = trace_phi(op, problem.phi, opt.method, opt.kpm, opt.engine);
            return std::vector<double>{t.value, t.stderr_};
        });
    };
    std::vector<SweepRow> rows;
    for (int p : p_list) {
        SweepRow row;
        row.p = p;
        row.grid = lab_grid(problem, p, opt);
        const double scale = std::pow(static_cast<double>(p), -half_dim);
        const auto t = one(p, row.grid);
        row.value = scale * t[0];
        row.stderr_ = scale * t[1];
        if (opt.two_grids) {
            row.check_grid = refined_grid(row.grid);
            row.check_value = scale * one(p, row.check_grid)[0];
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

ExpansionFit fit_half_power_expansion(const std::vector<int>& p, const std::vector<double>& values, int order,
                                      const std::vector<double>& weights) {
    const auto m = static_cast<Eigen::Index>(p.size());
    if (order < 0) throw DomainError("expansion_lab", "fit_half_power_expansion", "order must be non-negative");
    if (static_cast<Eigen::Index>(values.size()) != m)
        throw DomainError("expansion_lab", "fit_half_power_expansion", "p and values differ in length");
    if (m < order + 2)
        throw DomainError("expansion_lab", "fit_half_power_expansion", "need at least j + 2 observations");
    if (!weights.empty() && static_cast<Eigen::Index>(weights.size()) != m)
        throw DomainError("expansion_lab", "fit_half_power_expansion", "weights differ in length");

    const int k = order + 1;
    RealMatrix a(m, k);
    RealVector b(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (p[i] <= 0) throw DomainError("expansion_lab", "fit_half_power_expansion", "p must be positive");
        const double w = weights.empty() ? 1.0 : std::sqrt(weights[i]);
        for (int r = 0; r < k; ++r) a(i, r) = w * std::pow(static_cast<double>(p[i]), -0.5 * r);
        b(i) = w * values[i];
    }
    const RealVector scale = a.colwise().norm().transpose();
    const RealMatrix scaled = a * scale.cwiseInverse().asDiagonal();
    Eigen::JacobiSVD<RealMatrix> svd(scaled);
    const auto sv = svd.singularValues();
    const double cond = sv(k - 1) > 0.0 ? sv(0) / sv(k - 1) : INFINITY;
    if (!(cond <= 1e12))
        throw NumericalError("expansion_lab", "fit_half_power_expansion", "rank-deficient fit matrix");

    Eigen::HouseholderQR<RealMatrix> qr(scaled);
    const RealVector y = qr.solve(b);
    ExpansionFit fit;
    fit.p = p;
    fit.observed = values;
    fit.order = order;
    fit.coefficients = y.cwiseQuotient(scale);
    fit.residual = (a * fit.coefficients - b).norm();
    fit.condition = cond;
    fit.standard_errors = RealVector::Zero(k);
    if (m > k) {
        const double sigma2 = fit.residual * fit.residual / static_cast<double>(m - k);
        const RealMatrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
        const RealMatrix rinv = r.inverse();
        const RealMatrix cov = rinv * rinv.transpose() * sigma2;
        for (int i = 0; i < k; ++i) fit.standard_errors(i) = std::sqrt(std::max(cov(i, i), 0.0)) / scale(i);
    }
    return fit;
}

ModelPointData model_point(const FieldData& field, const PotentialData& potential, std::span<const double> x0) {
    auto data = b_eigenstructure(skew_matrix_at(field, x0));
    attach_potential(data, potential.at(x0));
    return data;
}

LeadingIntegral leading_integral(const Geometry& geom, const FieldData& field, const PotentialData& potential,
                                 const TestFunction& phi, int points_per_axis, const F0Options& f0) {
    if (points_per_axis < 1) throw DomainError("expansion_lab", "leading_integral", "mesh must have points");
    LeadingIntegral out;
    out.mesh.resize(geom.dim);
    for (int i = 0; i < geom.dim; ++i) {
        const bool constant_axis = field.perturbation_independent_of(i) && potential.independent_of(i);
        out.mesh[i] = constant_axis ? 1 : points_per_axis;
    }
    if (phi.is_zero()) return out;

    auto integrate = [&](const std::vector<int>& mesh) {
        std::ptrdiff_t total = 1;
        for (int n : mesh) total *= n;
        std::vector<double> values(total);
        for (std::ptrdiff_t s = 0; s < total; ++s) {
            std::vector<double> x(geom.dim);
            std::ptrdiff_t rest = s;
            for (int i = geom.dim - 1; i >= 0; --i) {
                x[i] = geom.lengths[i] * static_cast<double>(rest % mesh[i]) / mesh[i];
                rest /= mesh[i];
            }
            values[s] = f0_point(model_point(field, potential, x), phi, f0).trace().real();
        }
        double sum = 0.0;
        for (double v : values) sum += v;
        return geom.volume * sum / static_cast<double>(total);
    };
    out.coarse_value = integrate(out.mesh);
    std::vector<int> fine = out.mesh;
    for (int& n : fine)
        if (n > 1) n *= 2;
    out.value = fine == out.mesh ? out.coarse_value : integrate(fine);
    if (relative_gap(out.coarse_value, out.value) > 1e-4)
        throw NumericalError("expansion_lab", "leading_integral", "quadrature mesh too coarse");
    return out;
}

std::vector<DiagonalPoint> diagonal_compare(const Problem& problem, int p, const std::vector<std::vector<double>>& x0_list,
                                            const LabOptions& opt) {
    if (x0_list.empty()) throw DomainError("expansion_lab", "diagonal_compare", "no points");
    const double scale = std::pow(static_cast<double>(p), -0.5 * problem.geom.dim);
    std::vector<std::pair<std::vector<double>, std::vector<double>>> pairs;
    for (const auto& x : x0_list) pairs.push_back({x, x});
    const auto grid = lab_grid(problem, p, opt);
    const auto k = kernel_blocks(problem, p, grid, pairs, opt);
    std::vector<ComplexMatrix> kc;
    if (opt.two_grids) kc = kernel_blocks(problem, p, refined_grid(grid), pairs, opt);

    std::vector<DiagonalPoint> out;
    for (std::size_t i = 0; i < x0_list.size(); ++i) {
        DiagonalPoint d;
        d.x0 = x0_list[i];
        d.scaled_kernel = scale * k[i];
        d.f0 = f0_point(model_point(problem.field, problem.potential, d.x0), problem.phi);
        const double ref = max_entry(d.f0);
        d.rel_error = max_entry(d.scaled_kernel - d.f0) / (ref > 0.0 ? ref : 1.0);
        if (opt.two_grids) {
            d.check_kernel = scale * kc[i];
            d.grid_gap = max_entry(d.scaled_kernel - d.check_kernel) / std::max(max_entry(d.check_kernel), 1e-300);
        }
        out.push_back(std::move(d));
    }
    return out;
}

KernelComparison rescaled_kernel_compare(const Problem& problem, int p, const std::vector<double>& x0,
                                         const std::vector<std::pair<RealVector, RealVector>>& pairs, int envelope,
                                         const LabOptions& opt, const ModelKernelOptions& model) {
    const int d = problem.geom.dim;
    if (static_cast<int>(x0.size()) != d) throw DomainError("expansion_lab", "rescaled_kernel_compare", "x0 has wrong dimension");
    if (pairs.empty()) throw DomainError("expansion_lab", "rescaled_kernel_compare", "no pairs");
    const double sp = std::sqrt(static_cast<double>(p));
    const double scale = std::pow(static_cast<double>(p), -0.5 * d);

    // A(x0 + Z) = A_model(Z) + grad chi(Z) with chi(Z) = A(x0).Z + 1/2 sum_{i<j} B_ij Z_i Z_j
    const RealMatrix b = skew_matrix_at(problem.field, x0);
    RealVector a0 = RealVector::Zero(d);
    const RealMatrix& bc = problem.field.constant_part();
    for (int j = 0; j < d; ++j) {
        for (int i = 0; i < j; ++i) a0(j) += bc(i, j) * x0[i];
        a0(j) += problem.field.perturbation_potential(x0, j);
    }
    auto chi = [&](const RealVector& z) {
        double q = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) q += b(i, j) * z(i) * z(j);
        return a0.dot(z) + 0.5 * q;
    };
    auto point = [&](const RealVector& z) {
        std::vector<double> x(d);
        for (int i = 0; i < d; ++i) {
            x[i] = x0[i] + z(i);
            if (x[i] < -1e-12 || x[i] >= problem.geom.lengths[i] - 1e-12)
                throw DomainError("expansion_lab", "rescaled_kernel_compare",
                                  "x0 + Z leaves the fundamental domain");
        }
        return x;
    };

    // each pair is evaluated in both orders for the swap check
    std::vector<std::pair<std::vector<double>, std::vector<double>>> lattice_pairs;
    for (const auto& [z, zp] : pairs) {
        if (z.size() != d || zp.size() != d)
            throw DomainError("expansion_lab", "rescaled_kernel_compare", "pair has wrong dimension");
        lattice_pairs.push_back({point(z), point(zp)});
        lattice_pairs.push_back({point(zp), point(z)});
    }
    const auto grid = lab_grid(problem, p, opt);
    const auto k = kernel_blocks(problem, p, grid, lattice_pairs, opt);
    std::vector<ComplexMatrix> kc;
    if (opt.two_grids) kc = kernel_blocks(problem, p, refined_grid(grid), lattice_pairs, opt);

    const auto data = model_point(problem.field, problem.potential, x0);
    auto align = [&](const ComplexMatrix& kl, const RealVector& z, const RealVector& zp) -> ComplexMatrix {
        const double angle = p * (chi(zp) - chi(z));
        const double kappa = std::sqrt(volume_density_kappa(problem.geom, x0, std::vector<double>(z.data(), z.data() + d)) *
                                       volume_density_kappa(problem.geom, x0, std::vector<double>(zp.data(), zp.data() + d)));
        return scale * kappa * Complex(std::cos(angle), std::sin(angle)) * kl;
    };
    auto model_kernel = [&](const RealVector& z, const RealVector& zp) {
        try {
            return model_kernel_numeric(data, problem.phi, sp * z, sp * zp, model);
        } catch (const DomainError& e) {
            throw DomainError("expansion_lab", "rescaled_kernel_compare", std::string("pair outside model box: ") + e.what());
        }
    };

    KernelComparison out;
    out.p = p;
    out.x0 = x0;
    out.envelope = envelope;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& [z, zp] = pairs[i];
        KernelPair kp;
        kp.z = z;
        kp.z_prime = zp;
        kp.lhs = align(k[2 * i], z, zp);
        const ComplexMatrix lhs_swap = align(k[2 * i + 1], zp, z);
        kp.rhs = model_kernel(z, zp);
        const ComplexMatrix rhs_swap = model_kernel(zp, z);
        kp.error = max_entry(kp.lhs - kp.rhs);
        kp.abs_error = max_entry(ComplexMatrix((kp.lhs.cwiseAbs() - kp.rhs.cwiseAbs()).cast<Complex>()));
        kp.statistic = kp.error * std::pow(1.0 + sp * (z - zp).norm(), envelope) * sp;
        if (opt.two_grids) {
            kp.check_lhs = align(kc[2 * i], z, zp);
            kp.grid_gap = max_entry(kp.lhs - kp.check_lhs) / std::max(max_entry(kp.check_lhs), 1e-300);
        }
        out.swap_defect = std::max({out.swap_defect, max_entry(kp.lhs - ComplexMatrix(lhs_swap.adjoint())),
                                    max_entry(kp.rhs - ComplexMatrix(rhs_swap.adjoint()))});
        out.max_statistic = std::max(out.max_statistic, kp.statistic);
        out.pairs.push_back(std::move(kp));
    }
    return out;
}

double torus_distance(const Geometry& geom, std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (int i = 0; i < geom.dim; ++i) {
        const double l = geom.lengths[i];
        double t = std::fmod(std::abs(x[i] - y[i]), l);
        t = std::min(t, l - t);
        s += t * t;
    }
    return std::sqrt(s);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = std::min(x.size(), y.size());
    if (n < 2) throw DomainError("expansion_lab", "loglog_slope", "need at least two points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) mx += std::log(x[i]), my += std::log(y[i]);
    mx /= n, my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = std::log(x[i]) - mx;
        sxy += u * (std::log(y[i]) - my);
        sxx += u * u;
    }
    return sxy / sxx;
}

DecayReport offdiag_decay_check(const Problem& problem, const std::vector<int>& p_list, const std::vector<double>& x,
                                const std::vector<double>& x_prime, double epsilon, const LabOptions& opt,
                                double threshold) {
    const int d = problem.geom.dim;
    if (static_cast<int>(x.size()) != d || static_cast<int>(x_prime.size()) != d)
        throw DomainError("expansion_lab", "offdiag_decay_check", "points have wrong dimension");
    if (p_list.size() < 2) throw DomainError("expansion_lab", "offdiag_decay_check", "need at least two p values");
    DecayReport out;
    out.distance = torus_distance(problem.geom, x, x_prime);
    if (!(out.distance > epsilon)) throw DomainError("expansion_lab", "offdiag_decay_check", "points too close");
    out.threshold = threshold;
    const std::vector<std::pair<std::vector<double>, std::vector<double>>> pair{{x, x_prime}};
    std::vector<double> ps;
    for (int p : p_list) {
        const auto grid = lab_grid(problem, p, opt);
        out.p.push_back(p);
        out.grids.push_back(grid);
        out.abs_kernel.push_back(max_entry(kernel_blocks(problem, p, grid, pair, opt)[0]));
        if (opt.two_grids) out.check_abs_kernel.push_back(max_entry(kernel_blocks(problem, p, refined_grid(grid), pair, opt)[0]));
        ps.push_back(p);
    }
    out.slope = loglog_slope(ps, out.abs_kernel);
    if (opt.two_grids) out.check_slope = loglog_slope(ps, out.check_abs_kernel);
    out.rapid = out.slope <= threshold;
    return out;
}

}  // namespace scbl
