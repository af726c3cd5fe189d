#include "scbl/chebyshev.hpp"

#include <algorithm>
#include <cmath>

namespace scbl {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace

std::vector<double> chebyshev_coefficients(const std::function<double(double)>& f, const SpectralWindow& w,
                                           int order) {
    if (order < 1) throw DomainError("spectral_engine", "chebyshev_coefficients", "order must be positive");
    const int m = 2 * order;
    std::vector<double> samples(m);
    for (int j = 0; j < m; ++j) samples[j] = f(w.center() + w.half_width() * std::cos(kPi * (j + 0.5) / m));
    // cos(k theta_j) = cos(pi k (2j+1) / (2m)) from a table over one period
    std::vector<double> table(4 * m);
    for (int i = 0; i < 4 * m; ++i) table[i] = std::cos(kPi * i / (2.0 * m));
    std::vector<double> c(order);
    for (int k = 0; k < order; ++k) {
        double s = 0.0;
        for (int j = 0; j < m; ++j) s += samples[j] * table[(static_cast<long>(k) * (2 * j + 1)) % (4 * m)];
        c[k] = (k == 0 ? 1.0 : 2.0) * s / m;
    }
    return c;
}

std::vector<double> adaptive_chebyshev(const std::function<double(double)>& f, const SpectralWindow& w,
                                       double rel_tol, int start, int max_order) {
    for (int order = std::max(start, 16);; order *= 2) {
        auto c = chebyshev_coefficients(f, w, order);
        double big = 0.0, tail = 0.0;
        for (double v : c) big = std::max(big, std::abs(v));
        for (int k = order - order / 8; k < order; ++k) tail = std::max(tail, std::abs(c[k]));
        if (big == 0.0 || tail <= rel_tol * big) {
            // trim trailing negligible terms
            int keep = order;
            while (keep > 1 && std::abs(c[keep - 1]) <= 0.01 * rel_tol * big) --keep;
            c.resize(keep);
            return c;
        }
        if (order >= max_order)
            throw NumericalError("spectral_engine", "chebyshev_series", "Chebyshev series did not converge");
    }
}

std::vector<double> jackson_kernel(int order) {
    std::vector<double> g(order);
    const double n1 = order + 1.0;
    const double a = kPi / n1;
    for (int k = 0; k < order; ++k)
        g[k] = ((n1 - k) * std::cos(a * k) + std::sin(a * k) / std::tan(a)) / n1;
    return g;
}

ComplexVector chebyshev_apply(const SparseMatrix& h, const SpectralWindow& w, const std::vector<double>& coeffs,
                              const ComplexVector& v) {
    const double c = w.center(), s = 1.0 / w.half_width();
    ComplexVector prev = v;
    ComplexVector out = coeffs[0] * v;
    if (coeffs.size() == 1) return out;
    ComplexVector cur = s * (h * v - c * v);
    out += coeffs[1] * cur;
    ComplexVector next(v.size());
    for (std::size_t k = 2; k < coeffs.size(); ++k) {
        next.noalias() = h * cur;
        next = 2.0 * s * (next - c * cur) - prev;
        out += coeffs[k] * next;
        prev.swap(cur);
        cur.swap(next);
    }
    return out;
}

std::vector<Complex> chebyshev_moments(const SparseMatrix& h, const SpectralWindow& w, int order,
                                       const ComplexVector& u, const ComplexVector& v) {
    std::vector<Complex> mu(order);
    const double c = w.center(), s = 1.0 / w.half_width();
    ComplexVector prev = v;
    mu[0] = u.dot(v);
    if (order == 1) return mu;
    ComplexVector cur = s * (h * v - c * v);
    mu[1] = u.dot(cur);
    ComplexVector next(v.size());
    for (int k = 2; k < order; ++k) {
        next.noalias() = h * cur;
        next = 2.0 * s * (next - c * cur) - prev;
        mu[k] = u.dot(next);
        prev.swap(cur);
        cur.swap(next);
    }
    return mu;
}

double rademacher(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    const std::uint64_t x = splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
    return (x >> 63) ? 1.0 : -1.0;
}

SpectralWindow gershgorin_window(const SparseMatrix& h) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (Eigen::Index r = 0; r < h.outerSize(); ++r) {
        double center = 0.0, radius = 0.0;
        for (SparseMatrix::InnerIterator it(h, r); it; ++it) {
            if (it.col() == r) center = it.value().real();
            else radius += std::abs(it.value());
        }
        lo = std::min(lo, center - radius);
        hi = std::max(hi, center + radius);
    }
    return {lo, hi};
}

SpectralWindow lanczos_window(const SparseMatrix& h, int steps, double pad, std::uint64_t seed) {
    const Eigen::Index n = h.rows();
    const SpectralWindow g = gershgorin_window(h);
    if (n <= 1) {
        const double v = n == 1 ? h.coeff(0, 0).real() : 0.0;
        return {v - 1.0, v + 1.0};
    }
    steps = static_cast<int>(std::min<Eigen::Index>(steps, n));
    ComplexVector q(n);
    for (Eigen::Index i = 0; i < n; ++i) q(i) = rademacher(seed, 0x4c414e43ull, static_cast<std::uint64_t>(i));
    q.normalize();
    std::vector<ComplexVector> basis;
    std::vector<double> alpha, beta;
    ComplexVector prev = ComplexVector::Zero(n);
    double b_prev = 0.0;
    for (int k = 0; k < steps; ++k) {
        basis.push_back(q);
        ComplexVector z = h * q;
        const double a = q.dot(z).real();
        z -= a * q + b_prev * prev;
        // full reorthogonalization keeps the short recurrence honest
        for (const auto& b : basis) z -= b.dot(z) * b;
        alpha.push_back(a);
        const double b = z.norm();
        if (b < 1e-12 * std::max(1.0, std::abs(a))) break;
        beta.push_back(b);
        prev = q;
        q = z / b;
        b_prev = b;
    }
    const int m = static_cast<int>(alpha.size());
    RealMatrix t = RealMatrix::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        t(i, i) = alpha[i];
        if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(t);
    const double b_last = static_cast<int>(beta.size()) >= m ? beta[m - 1] : 0.0;
    const double r_lo = b_last * std::abs(es.eigenvectors()(m - 1, 0));
    const double r_hi = b_last * std::abs(es.eigenvectors()(m - 1, m - 1));
    double lo = es.eigenvalues()(0) - r_lo;
    double hi = es.eigenvalues()(m - 1) + r_hi;
    const double width = std::max(hi - lo, 1e-12 * std::max(1.0, std::abs(hi)));
    lo -= pad * width;
    hi += pad * width;
    lo = std::max(lo, g.lower);
    hi = std::min(hi, g.upper);
    if (!(hi > lo)) {
        lo = g.lower;
        hi = g.upper;
    }
    return {lo, hi};
}

}  // namespace scbl
