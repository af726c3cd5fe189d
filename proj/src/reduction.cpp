#include "scbl/reduction.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace scbl {

namespace {

constexpr int kMaxAxes = 4;

struct Key {
    std::int64_t row_rest;
    std::int64_t col_rest;
    std::int64_t shift;
    bool operator==(const Key& o) const {
        return row_rest == o.row_rest && col_rest == o.col_rest && shift == o.shift;
    }
    bool operator<(const Key& o) const {
        if (row_rest != o.row_rest) return row_rest < o.row_rest;
        if (col_rest != o.col_rest) return col_rest < o.col_rest;
        return shift < o.shift;
    }
};

struct KeyHash {
    std::size_t operator()(const Key& k) const {
        std::uint64_t h = 1469598103934665603ull;
        for (std::int64_t v : {k.row_rest, k.col_rest, k.shift}) {
            h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        }
        return static_cast<std::size_t>(h);
    }
};

struct KeyData {
    Complex base{0.0, 0.0};
    std::array<Complex, kMaxAxes> step{};
    std::array<int, kMaxAxes> s{};
    unsigned flags = 0;  // bit 0: base seen, bit 1+l: step along l seen
    std::int64_t count = 0;
};

// Splits matrix indices into the part along the chosen axes and the rest.
struct Splitter {
    std::vector<int> dims;  // grid axes then the bundle component
    std::vector<int> axes;
    std::vector<char> in_set;
    std::int64_t orbit = 1;

    Splitter(const DiscreteOperator& op, std::vector<int> chosen) : axes(std::move(chosen)) {
        dims = op.grid;
        dims.push_back(op.rank);
        in_set.assign(dims.size(), 0);
        for (int a : axes) {
            in_set[a] = 1;
            orbit *= dims[a];
        }
    }

    // rest index, and coordinates along `axes`
    std::int64_t split(std::int64_t index, std::array<int, kMaxAxes>& along) const {
        std::array<int, kMaxAxes + 1> coord{};
        for (int i = static_cast<int>(dims.size()) - 1; i >= 0; --i) {
            coord[i] = static_cast<int>(index % dims[i]);
            index /= dims[i];
        }
        std::int64_t rest = 0;
        for (std::size_t i = 0; i < dims.size(); ++i)
            if (!in_set[i]) rest = rest * dims[i] + coord[i];
        for (std::size_t l = 0; l < axes.size(); ++l) along[l] = coord[axes[l]];
        return rest;
    }

    std::int64_t encode(const std::array<int, kMaxAxes>& along) const {
        std::int64_t c = 0;
        for (std::size_t l = 0; l < axes.size(); ++l) c = c * dims[axes[l]] + along[l];
        return c;
    }

    void decode(std::int64_t code, std::array<int, kMaxAxes>& along) const {
        for (int l = static_cast<int>(axes.size()) - 1; l >= 0; --l) {
            along[l] = static_cast<int>(code % dims[axes[l]]);
            code /= dims[axes[l]];
        }
    }

    int n(std::size_t l) const { return dims[axes[l]]; }
};

Complex character(const Splitter& sp, const std::array<int, kMaxAxes>& s, const std::array<int, kMaxAxes>& a) {
    double turns = 0.0;
    for (std::size_t l = 0; l < sp.axes.size(); ++l) {
        const int n = sp.n(l);
        turns += static_cast<double>((static_cast<std::int64_t>(s[l]) * a[l]) % n) / n;
    }
    const double angle = kTwoPi * turns;
    return {std::cos(angle), std::sin(angle)};
}

using KeyMap = std::unordered_map<Key, KeyData, KeyHash>;

double matrix_scale(const SparseMatrix& m) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < m.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(m, k); it; ++it) s = std::max(s, std::abs(it.value()));
    return std::max(s, 1e-300);
}

template <class Visit>
void for_each_entry(const SparseMatrix& m, const Splitter& sp, Visit visit) {
    std::array<int, kMaxAxes> a{}, b{}, delta{};
    for (Eigen::Index row = 0; row < m.outerSize(); ++row) {
        const std::int64_t u = sp.split(row, a);
        for (SparseMatrix::InnerIterator it(m, row); it; ++it) {
            const std::int64_t v = sp.split(it.col(), b);
            for (std::size_t l = 0; l < sp.axes.size(); ++l) delta[l] = ((b[l] - a[l]) % sp.n(l) + sp.n(l)) % sp.n(l);
            if (!visit(Key{u, v, sp.encode(delta)}, a, it.value())) return;
        }
    }
}

// Returns true and fills `keys` when the operator is covariant along sp.axes.
bool covariant(const DiscreteOperator& op, const Splitter& sp, double tol, KeyMap& keys) {
    keys.clear();
    for_each_entry(op.matrix, sp, [&](const Key& k, const std::array<int, kMaxAxes>& a, Complex v) {
        KeyData& kd = keys[k];
        ++kd.count;
        int nonzero = -1, weight = 0;
        for (std::size_t l = 0; l < sp.axes.size(); ++l)
            if (a[l] != 0) {
                nonzero = static_cast<int>(l);
                weight += a[l];
            }
        if (nonzero < 0) {
            kd.base = v;
            kd.flags |= 1u;
        } else if (weight == 1) {
            kd.step[nonzero] = v;
            kd.flags |= 2u << nonzero;
        }
        return true;
    });
    for (auto& [k, kd] : keys) {
        if (kd.count != sp.orbit || !(kd.flags & 1u) || std::abs(kd.base) <= tol) return false;
        for (std::size_t l = 0; l < sp.axes.size(); ++l) {
            const int n = sp.n(l);
            if (!(kd.flags & (2u << l))) return false;
            const Complex ratio = kd.step[l] / kd.base;
            int s = static_cast<int>(std::lround(std::arg(ratio) * n / kTwoPi));
            kd.s[l] = ((s % n) + n) % n;
        }
    }
    bool ok = true;
    for_each_entry(op.matrix, sp, [&](const Key& k, const std::array<int, kMaxAxes>& a, Complex v) {
        const KeyData& kd = keys.at(k);
        if (std::abs(v - kd.base * character(sp, kd.s, a)) > tol) ok = false;
        return ok;
    });
    return ok;
}

struct UnionFind {
    std::vector<std::int64_t> parent;
    explicit UnionFind(std::int64_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::int64_t find(std::int64_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::int64_t a, std::int64_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a < b) std::swap(a, b);
        parent[a] = b;
    }
};

std::size_t block_signature(const BlockDecomposition::Block& b, double scale) {
    std::uint64_t h = static_cast<std::uint64_t>(b.size) * 0x9e3779b97f4a7c15ull;
    auto mix = [&h](std::int64_t v) { h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2); };
    double d0 = 0.0;
    for (const auto& e : b.entries)
        if (e.row == 0 && e.col == 0) d0 = e.value.real();
    for (const auto& e : b.entries) {
        mix(e.row);
        mix(e.col);
        const Complex v = e.row == e.col ? e.value - d0 : e.value;
        mix(std::llround(v.real() / scale * 1e7));
        mix(std::llround(v.imag() / scale * 1e7));
    }
    return static_cast<std::size_t>(h);
}

// Equal off the diagonal, diagonal shifted by a constant.
bool same_up_to_shift(const BlockDecomposition::Block& a, const BlockDecomposition::Block& b, double tol,
                      double& shift) {
    if (a.size != b.size || a.entries.size() != b.entries.size()) return false;
    bool have = false;
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        const Entry& x = a.entries[i];
        const Entry& y = b.entries[i];
        if (x.row != y.row || x.col != y.col) return false;
        if (x.row == x.col) {
            const double s = x.value.real() - y.value.real();
            if (!have) {
                shift = s;
                have = true;
            } else if (std::abs(s - shift) > tol) {
                return false;
            }
            if (std::abs(x.value.imag() - y.value.imag()) > tol) return false;
        } else if (std::abs(x.value - y.value) > tol) {
            return false;
        }
    }
    return have;
}

}  // namespace

std::ptrdiff_t BlockDecomposition::largest_block() const {
    std::ptrdiff_t m = 0;
    for (const auto& b : blocks) m = std::max(m, b.size);
    return m;
}

std::size_t BlockDecomposition::distinct_blocks() const {
    return static_cast<std::size_t>(
        std::count_if(blocks.begin(), blocks.end(), [](const Block& b) { return b.reference < 0; }));
}

BlockDecomposition decompose_translations(const DiscreteOperator& op) {
    const double scale = matrix_scale(op.matrix);
    const double tol = 1e-11 * scale;

    std::vector<int> passing;
    KeyMap keys;
    for (int l = 0; l < op.dim(); ++l)
        if (op.periodic[l] && covariant(op, Splitter(op, {l}), tol, keys)) passing.push_back(l);

    // Largest jointly admissible subset of the individually admissible axes.
    std::vector<int> chosen;
    const int m = static_cast<int>(passing.size());
    std::vector<unsigned> masks;
    for (unsigned mask = 1; mask < (1u << m); ++mask) masks.push_back(mask);
    std::stable_sort(masks.begin(), masks.end(), [](unsigned a, unsigned b) {
        return __builtin_popcount(a) > __builtin_popcount(b);
    });
    for (unsigned mask : masks) {
        std::vector<int> axes;
        for (int i = 0; i < m; ++i)
            if (mask & (1u << i)) axes.push_back(passing[i]);
        if (covariant(op, Splitter(op, axes), tol, keys)) {
            chosen = axes;
            break;
        }
    }
    if (chosen.empty()) keys.clear();

    Splitter sp(op, chosen);
    BlockDecomposition dec;
    dec.axes = chosen;
    dec.total_size = op.size();

    if (chosen.empty()) {
        BlockDecomposition::Block b;
        b.size = op.size();
        for (Eigen::Index row = 0; row < op.matrix.outerSize(); ++row)
            for (SparseMatrix::InnerIterator it(op.matrix, row); it; ++it)
                b.entries.push_back({static_cast<std::ptrdiff_t>(row), static_cast<std::ptrdiff_t>(it.col()), it.value()});
        dec.blocks.push_back(std::move(b));
        return dec;
    }

    // Deterministic key order, grouped by row remainder.
    std::vector<std::pair<Key, KeyData>> sorted(keys.begin(), keys.end());
    keys.clear();
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    const std::int64_t orbit = sp.orbit;
    const std::int64_t rest_count = op.size() / orbit;
    std::vector<std::int64_t> group(rest_count + 1, 0);
    for (const auto& kv : sorted) ++group[kv.first.row_rest + 1];
    std::partial_sum(group.begin(), group.end(), group.begin());

    std::array<int, kMaxAxes> q{}, qs{}, delta{};
    auto shifted = [&](std::int64_t qcode, const KeyData& kd, std::array<int, kMaxAxes>& out) {
        sp.decode(qcode, out);
        for (std::size_t l = 0; l < chosen.size(); ++l) out[l] = (out[l] + kd.s[l]) % sp.n(l);
        return sp.encode(out);
    };

    const std::int64_t nodes = rest_count * orbit;
    UnionFind uf(nodes);
    for (const auto& [k, kd] : sorted)
        for (std::int64_t qc = 0; qc < orbit; ++qc) uf.unite(k.row_rest * orbit + shifted(qc, kd, qs), k.col_rest * orbit + qc);

    // Components, nodes in ascending order within each.
    std::vector<std::int64_t> root_of(nodes), comp_id(nodes, -1), local(nodes);
    std::vector<std::int64_t> comp_start;
    std::int64_t ncomp = 0;
    for (std::int64_t v = 0; v < nodes; ++v) {
        const auto r = uf.find(v);
        if (comp_id[r] < 0) comp_id[r] = ncomp++;
        root_of[v] = comp_id[r];
    }
    comp_start.assign(ncomp + 1, 0);
    for (std::int64_t v = 0; v < nodes; ++v) local[v] = comp_start[root_of[v] + 1]++;
    std::partial_sum(comp_start.begin(), comp_start.end(), comp_start.begin());
    std::vector<std::int64_t> members(nodes);
    {
        std::vector<std::int64_t> fill(comp_start.begin(), comp_start.end() - 1);
        for (std::int64_t v = 0; v < nodes; ++v) members[fill[root_of[v]]++] = v;
    }

    std::unordered_map<std::size_t, std::vector<int>> buckets;
    dec.blocks.resize(ncomp);
    for (std::int64_t c = 0; c < ncomp; ++c) {
        BlockDecomposition::Block& blk = dec.blocks[c];
        blk.size = comp_start[c + 1] - comp_start[c];
        for (std::int64_t i = comp_start[c]; i < comp_start[c + 1]; ++i) {
            const std::int64_t node = members[i];
            const std::int64_t u = node / orbit;
            const std::int64_t qrow = node % orbit;
            for (std::int64_t g = group[u]; g < group[u + 1]; ++g) {
                const auto& [k, kd] = sorted[g];
                // row (u, q + s) <- col (v, q)
                sp.decode(qrow, q);
                for (std::size_t l = 0; l < chosen.size(); ++l) q[l] = ((q[l] - kd.s[l]) % sp.n(l) + sp.n(l)) % sp.n(l);
                sp.decode(k.shift, delta);
                double turns = 0.0;
                for (std::size_t l = 0; l < chosen.size(); ++l)
                    turns += static_cast<double>((static_cast<std::int64_t>(q[l]) * delta[l]) % sp.n(l)) / sp.n(l);
                const Complex val = kd.base * Complex(std::cos(kTwoPi * turns), std::sin(kTwoPi * turns));
                const std::int64_t col_node = k.col_rest * orbit + sp.encode(q);
                blk.entries.push_back({static_cast<std::ptrdiff_t>(local[node]),
                                       static_cast<std::ptrdiff_t>(local[col_node]), val});
            }
        }
        std::sort(blk.entries.begin(), blk.entries.end(),
                  [](const Entry& a, const Entry& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
        std::vector<Entry> merged;
        merged.reserve(blk.entries.size());
        for (const auto& e : blk.entries) {
            if (!merged.empty() && merged.back().row == e.row && merged.back().col == e.col) merged.back().value += e.value;
            else merged.push_back(e);
        }
        blk.entries = std::move(merged);

        if (blk.size <= 2) continue;
        auto& bucket = buckets[block_signature(blk, scale)];
        for (int ref : bucket) {
            double shift = 0.0;
            if (same_up_to_shift(blk, dec.blocks[ref], tol, shift)) {
                blk.reference = ref;
                blk.shift = shift;
                blk.entries.clear();
                blk.entries.shrink_to_fit();
                break;
            }
        }
        if (blk.reference < 0) bucket.push_back(static_cast<int>(c));
    }
    return dec;
}

RealVector block_eigenvalues(const BlockDecomposition& dec, int workers) {
    std::vector<int> distinct;
    for (std::size_t i = 0; i < dec.blocks.size(); ++i)
        if (dec.blocks[i].reference < 0) distinct.push_back(static_cast<int>(i));
    std::vector<RealVector> values(dec.blocks.size());
    parallel_for(distinct.size(), workers, [&](std::size_t k) {
        const auto& b = dec.blocks[distinct[k]];
        values[distinct[k]] = sparse_block_eigenvalues(b.size, b.entries);
    });
    RealVector all(dec.total_size);
    std::ptrdiff_t at = 0;
    for (std::size_t i = 0; i < dec.blocks.size(); ++i) {
        const auto& b = dec.blocks[i];
        if (b.reference < 0) {
            all.segment(at, b.size) = values[i];
        } else {
            all.segment(at, b.size) = values[b.reference].array() + b.shift;
        }
        at += b.size;
    }
    std::sort(all.data(), all.data() + all.size());
    return all;
}

}  // namespace scbl
