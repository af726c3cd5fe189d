#include "scbl/operator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace scbl {

std::ptrdiff_t DiscreteOperator::sites() const {
    std::ptrdiff_t n = 1;
    for (int g : grid) n *= g;
    return n;
}

double DiscreteOperator::cell_volume() const {
    double v = 1.0;
    for (double h : spacing) v *= h;
    return v;
}

std::vector<int> DiscreteOperator::site_coords(std::ptrdiff_t site) const {
    std::vector<int> c(grid.size());
    for (int i = dim() - 1; i >= 0; --i) {
        c[i] = static_cast<int>(site % grid[i]);
        site /= grid[i];
    }
    return c;
}

std::ptrdiff_t DiscreteOperator::site_index(std::span<const int> coords) const {
    std::ptrdiff_t s = 0;
    for (int i = 0; i < dim(); ++i) {
        int c = coords[i];
        if (periodic[i]) c = ((c % grid[i]) + grid[i]) % grid[i];
        if (c < 0 || c >= grid[i]) return -1;
        s = s * grid[i] + c;
    }
    return s;
}

std::vector<double> DiscreteOperator::site_position(std::ptrdiff_t site) const {
    const auto c = site_coords(site);
    std::vector<double> x(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) x[i] = origin[i] + c[i] * spacing[i];
    return x;
}

std::ptrdiff_t DiscreteOperator::locate(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim()) return -1;
    std::vector<int> c(dim());
    for (int i = 0; i < dim(); ++i) {
        const double t = (x[i] - origin[i]) / spacing[i];
        const double r = std::round(t);
        if (std::abs(t - r) > 1e-9) return -1;
        c[i] = static_cast<int>(r);
    }
    return site_index(c);
}

std::pair<double, double> DiscreteOperator::gershgorin() const {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (Eigen::Index r = 0; r < matrix.outerSize(); ++r) {
        double center = 0.0, radius = 0.0;
        for (SparseMatrix::InnerIterator it(matrix, r); it; ++it) {
            if (it.col() == r) center = it.value().real();
            else radius += std::abs(it.value());
        }
        lo = std::min(lo, center - radius);
        hi = std::max(hi, center + radius);
    }
    return {lo, hi};
}

double DiscreteOperator::max_hermitian_defect() const {
    SparseMatrix adj = matrix.adjoint();
    SparseMatrix diff = matrix - adj;
    double m = 0.0;
    for (Eigen::Index k = 0; k < diff.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(diff, k); it; ++it) m = std::max(m, std::abs(it.value()));
    return m;
}

std::vector<double> minimum_grid(const Geometry& geom, const FieldData& field, int p) {
    std::vector<double> out(geom.dim);
    const double b = field.max_abs();
    for (int i = 0; i < geom.dim; ++i) out[i] = 8.0 * std::sqrt(p * b) * geom.lengths[i] / kTwoPi;
    return out;
}

std::vector<int> resolved_grid(const Geometry& geom, const FieldData& field, int p, double factor) {
    std::vector<int> out(geom.dim);
    const double b = std::max(field.max_abs(), kTwoPi);
    for (int i = 0; i < geom.dim; ++i) {
        const double need = factor * std::sqrt(p * b) * geom.lengths[i] / kTwoPi;
        int n = static_cast<int>(std::ceil(need / 8.0 - 1e-12)) * 8;
        out[i] = std::max(n, 32);
    }
    return out;
}

namespace {

// Inserts a row-major operator whose hops are scalar multiples of the
// identity on the bundle and whose on-site block comes from `onsite`.
template <class Hop, class Onsite>
SparseMatrix build(const DiscreteOperator& op, Hop hop, Onsite onsite) {
    const int d = op.dim();
    const int r = op.rank;
    const std::ptrdiff_t n_sites = op.sites();
    SparseMatrix m(n_sites * r, n_sites * r);
    m.reserve(Eigen::VectorXi::Constant(n_sites * r, r + 2 * d));
    std::vector<int> c(d, 0);
    std::vector<int> nb(d);
    for (std::ptrdiff_t s = 0; s < n_sites; ++s) {
        const ComplexMatrix block = onsite(c);
        for (int a = 0; a < r; ++a)
            for (int b = 0; b < r; ++b)
                if (block(a, b) != Complex(0.0, 0.0) || a == b) m.insert(s * r + a, s * r + b) = block(a, b);
        for (int j = 0; j < d; ++j) {
            // forward hop from this site
            if (op.periodic[j] || c[j] + 1 < op.grid[j]) {
                nb = c;
                nb[j] = c[j] + 1;
                const std::ptrdiff_t t = op.site_index(nb);
                const Complex v = hop(c, j);
                for (int a = 0; a < r; ++a) m.coeffRef(s * r + a, t * r + a) += v;
            }
            // backward hop: adjoint of the neighbour's forward hop
            if (op.periodic[j] || c[j] > 0) {
                nb = c;
                nb[j] = c[j] - 1;
                if (nb[j] < 0) nb[j] += op.grid[j];
                const std::ptrdiff_t t = op.site_index(nb);
                const Complex v = std::conj(hop(nb, j));
                for (int a = 0; a < r; ++a) m.coeffRef(s * r + a, t * r + a) += v;
            }
        }
        for (int j = d - 1; j >= 0; --j) {
            if (++c[j] < op.grid[j]) break;
            c[j] = 0;
        }
    }
    m.makeCompressed();
    return m;
}

}  // namespace

DiscreteOperator assemble_hp(const Geometry& geom, const FieldData& field, const PotentialData& potential, int p,
                             const std::vector<int>& grid) {
    const int d = geom.dim;
    if (p < 1) throw DomainError("operator_assembly", "assemble_hp", "tensor power p must be positive");
    if (field.dim() != d) throw DomainError("operator_assembly", "assemble_hp", "field dimension mismatch");
    if (static_cast<int>(grid.size()) != d)
        throw DomainError("operator_assembly", "assemble_hp", "grid needs one entry per axis");
    const auto need = minimum_grid(geom, field, p);
    for (int i = 0; i < d; ++i) {
        if (grid[i] < 3) throw DomainError("operator_assembly", "assemble_hp", "grid needs at least 3 points per axis");
        if (grid[i] < need[i] - 1e-9) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "under-resolved grid: axis %d has %d points, needs at least %d", i + 1,
                          grid[i], static_cast<int>(std::ceil(need[i] - 1e-9)));
            throw DomainError("operator_assembly", "assemble_hp", buf);
        }
    }

    DiscreteOperator op;
    op.grid = grid;
    op.rank = potential.rank();
    op.p = p;
    op.periodic.assign(d, true);
    op.origin.assign(d, 0.0);
    op.spacing.resize(d);
    for (int i = 0; i < d; ++i) op.spacing[i] = geom.lengths[i] / grid[i];

    const RealMatrix& b = field.constant_part();
    const bool perturbed = field.has_perturbation();
    double diag = 0.0;
    for (double h : op.spacing) diag += 2.0 / (p * h * h);

    std::vector<double> x(d);
    auto hop = [&](const std::vector<int>& c, int j) {
        for (int i = 0; i < d; ++i) x[i] = c[i] * op.spacing[i];
        const double h = op.spacing[j];
        double link = 0.0;
        for (int i = 0; i < j; ++i) link += b(i, j) * x[i];
        link *= h;
        if (perturbed) link += field.perturbation_link_integral(x, j, h);
        double angle = -p * link;
        if (c[j] == grid[j] - 1) {
            // psi(x' + L_j e_j) = exp(i p theta_j(x')) psi(x'), theta_j = L_j sum_{k>j} B_jk x_k
            double theta = 0.0;
            for (int k = j + 1; k < d; ++k) theta += b(j, k) * x[k];
            angle += p * geom.lengths[j] * theta;
        }
        return Complex(std::cos(angle), std::sin(angle)) * (-1.0 / (p * h * h));
    };
    std::vector<double> y(d);
    const ComplexMatrix identity = ComplexMatrix::Identity(op.rank, op.rank);
    auto onsite = [&](const std::vector<int>& c) -> ComplexMatrix {
        if (potential.is_zero()) return diag * identity;
        for (int i = 0; i < d; ++i) y[i] = c[i] * op.spacing[i];
        return diag * identity + potential.at(y);
    };
    op.matrix = build(op, hop, onsite);
    return op;
}

DiscreteOperator assemble_model_operator(const RealMatrix& skew, const ComplexMatrix& v0, double box_halfwidth,
                                         const std::vector<int>& grid) {
    return assemble_model_operator(skew, v0, std::vector<double>(grid.size(), box_halfwidth), grid);
}

DiscreteOperator assemble_model_operator(const RealMatrix& skew, const ComplexMatrix& v0,
                                         const std::vector<double>& box_halfwidths, const std::vector<int>& grid) {
    const int d = static_cast<int>(skew.rows());
    if (d < 1 || skew.cols() != d)
        throw DomainError("operator_assembly", "assemble_model_operator", "skew matrix must be square");
    const double scale = std::max(1.0, skew.cwiseAbs().maxCoeff());
    if ((skew + skew.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw DomainError("operator_assembly", "assemble_model_operator", "M is not antisymmetric");
    if (static_cast<int>(grid.size()) != d)
        throw DomainError("operator_assembly", "assemble_model_operator", "grid needs one entry per axis");
    if (v0.rows() < 1 || v0.rows() != v0.cols())
        throw DomainError("operator_assembly", "assemble_model_operator", "V0 must be a square block");
    if (static_cast<int>(box_halfwidths.size()) != d)
        throw DomainError("operator_assembly", "assemble_model_operator", "need one box half-width per axis");
    for (double w : box_halfwidths)
        if (!(w > 0.0))
            throw DomainError("operator_assembly", "assemble_model_operator", "box half-width must be positive");
    const double box_halfwidth = *std::min_element(box_halfwidths.begin(), box_halfwidths.end());

    Eigen::JacobiSVD<RealMatrix> svd(skew);
    const double tol = 1e-8 * std::max(1.0, svd.singularValues().size() ? svd.singularValues()(0) : 0.0);
    double amin = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > tol) amin = std::min(amin, svd.singularValues()(i));
    if (std::isfinite(amin) && box_halfwidth < 6.0 / std::sqrt(amin) - 1e-12) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "box too small: half-width %.6g < 6/sqrt(min a) = %.6g", box_halfwidth,
                      6.0 / std::sqrt(amin));
        throw DomainError("operator_assembly", "assemble_model_operator", buf);
    }

    DiscreteOperator op;
    op.model = true;
    op.p = 1;
    op.rank = static_cast<int>(v0.rows());
    op.periodic.assign(d, false);
    op.grid.resize(d);
    op.spacing.resize(d);
    op.origin.resize(d);
    for (int i = 0; i < d; ++i) {
        if (grid[i] < 4)
            throw DomainError("operator_assembly", "assemble_model_operator", "grid needs at least 4 intervals per axis");
        op.spacing[i] = 2.0 * box_halfwidths[i] / grid[i];
        op.grid[i] = grid[i] - 1;
        op.origin[i] = -box_halfwidths[i] + op.spacing[i];
    }

    double diag = 0.0;
    for (double h : op.spacing) diag += 2.0 / (h * h);
    const ComplexMatrix onsite_block = diag * ComplexMatrix::Identity(op.rank, op.rank) + 0.5 * (v0 + v0.adjoint());
    std::vector<double> w(d);
    auto hop = [&](const std::vector<int>& c, int j) {
        for (int i = 0; i < d; ++i) w[i] = op.origin[i] + c[i] * op.spacing[i];
        double a = 0.0;
        for (int k = 0; k < d; ++k) a -= 0.5 * skew(j, k) * w[k];
        const double h = op.spacing[j];
        const double angle = -h * a;
        return Complex(std::cos(angle), std::sin(angle)) * (-1.0 / (h * h));
    };
    auto onsite = [&](const std::vector<int>&) { return onsite_block; };
    op.matrix = build(op, hop, onsite);
    return op;
}

DiscreteOperator gauge_transform(const DiscreteOperator& op,
                                 const std::function<double(std::span<const double>)>& chi) {
    DiscreteOperator out = op;
    const int r = op.rank;
    const double p = op.p > 0 ? op.p : 1.0;
    std::vector<Complex> phase(op.sites());
    for (std::ptrdiff_t s = 0; s < op.sites(); ++s) {
        const auto x = op.site_position(s);
        const double a = p * chi(x);
        phase[s] = Complex(std::cos(a), std::sin(a));
    }
    for (Eigen::Index row = 0; row < out.matrix.outerSize(); ++row)
        for (SparseMatrix::InnerIterator it(out.matrix, row); it; ++it)
            it.valueRef() = phase[row / r] * it.value() * std::conj(phase[it.col() / r]);
    return out;
}

void write_triplets(const DiscreteOperator& op, std::ostream& out) {
    char buf[128];
    out << "# shape " << op.size() << ' ' << op.size() << " p " << (op.model ? std::string("model") : std::to_string(op.p))
        << " rank " << op.rank << " grid";
    for (int g : op.grid) out << ' ' << g;
    out << " spacing";
    for (double h : op.spacing) {
        std::snprintf(buf, sizeof buf, " %.17g", h);
        out << buf;
    }
    out << '\n';
    for (Eigen::Index row = 0; row < op.matrix.outerSize(); ++row)
        for (SparseMatrix::InnerIterator it(op.matrix, row); it; ++it) {
            std::snprintf(buf, sizeof buf, "%td %td %.17g %.17g\n", static_cast<std::ptrdiff_t>(row),
                          static_cast<std::ptrdiff_t>(it.col()), it.value().real(), it.value().imag());
            out << buf;
        }
}

}  // namespace scbl
