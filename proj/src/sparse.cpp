#include "pixinla/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <tuple>

#include "pixinla/errors.hpp"

namespace pixinla {

namespace {

// Upper-triangle CSC view (column k holds rows i <= k), i.e. the row-wise
// view of the lower triangle. The factorization walks this structure.
struct UpperCsc {
    index_t n = 0;
    std::vector<index_t> col_ptr;
    std::vector<index_t> row_idx;
    std::vector<double> values;
};

UpperCsc permuted_upper(const SparseSymMatrix& Q, std::span<const index_t> perm_inv) {
    UpperCsc U;
    U.n = Q.n;
    U.col_ptr.assign(Q.n + 1, 0);
    std::vector<index_t> count(Q.n, 0);
    for (index_t j = 0; j < Q.n; ++j) {
        for (index_t p = Q.col_ptr[j]; p < Q.col_ptr[j + 1]; ++p) {
            const index_t a = perm_inv[Q.row_idx[p]];
            const index_t b = perm_inv[j];
            ++count[std::max(a, b)];
        }
    }
    for (index_t j = 0; j < Q.n; ++j) U.col_ptr[j + 1] = U.col_ptr[j] + count[j];
    U.row_idx.resize(U.col_ptr[Q.n]);
    U.values.resize(U.col_ptr[Q.n]);
    std::vector<index_t> next(U.col_ptr.begin(), U.col_ptr.end() - 1);
    for (index_t j = 0; j < Q.n; ++j) {
        for (index_t p = Q.col_ptr[j]; p < Q.col_ptr[j + 1]; ++p) {
            const index_t a = perm_inv[Q.row_idx[p]];
            const index_t b = perm_inv[j];
            const index_t col = std::max(a, b);
            const index_t row = std::min(a, b);
            const index_t q = next[col]++;
            U.row_idx[q] = row;
            U.values[q] = Q.values[p];
        }
    }
    // sort rows within each column (values follow)
    std::vector<std::pair<index_t, double>> buf;
    for (index_t j = 0; j < Q.n; ++j) {
        buf.clear();
        for (index_t p = U.col_ptr[j]; p < U.col_ptr[j + 1]; ++p)
            buf.emplace_back(U.row_idx[p], U.values[p]);
        std::sort(buf.begin(), buf.end());
        index_t p = U.col_ptr[j];
        for (const auto& [r, v] : buf) {
            U.row_idx[p] = r;
            U.values[p] = v;
            ++p;
        }
    }
    return U;
}

std::vector<index_t> elimination_tree(const UpperCsc& U) {
    std::vector<index_t> parent(U.n, -1);
    std::vector<index_t> ancestor(U.n, -1);
    for (index_t k = 0; k < U.n; ++k) {
        for (index_t p = U.col_ptr[k]; p < U.col_ptr[k + 1]; ++p) {
            index_t i = U.row_idx[p];
            while (i != -1 && i < k) {
                const index_t inext = ancestor[i];
                ancestor[i] = k;  // path compression
                if (inext == -1) parent[i] = k;
                i = inext;
            }
        }
    }
    return parent;
}

// Nonzero pattern of row k of L (excluding the diagonal), returned sorted
// ascending. Ascending order is a valid elimination order because L(k,j) != 0
// with j < i only ever depends on columns left of i.
void ereach(const UpperCsc& U, index_t k, std::span<const index_t> parent,
            std::vector<index_t>& stamp, std::vector<index_t>& out) {
    out.clear();
    stamp[k] = k;
    for (index_t p = U.col_ptr[k]; p < U.col_ptr[k + 1]; ++p) {
        index_t i = U.row_idx[p];
        while (i != -1 && i < k && stamp[i] != k) {
            out.push_back(i);
            stamp[i] = k;
            i = parent[i];
        }
    }
    std::sort(out.begin(), out.end());
}

// Binary search for row i within column j of the factor pattern.
inline index_t find_entry(const CholFactor& f, index_t i, index_t j) {
    const index_t lo = f.col_ptr[j];
    const index_t hi = f.col_ptr[j + 1];
    const auto first = f.row_idx.begin() + lo;
    const auto last = f.row_idx.begin() + hi;
    const auto it = std::lower_bound(first, last, i);
    if (it == last || *it != i) return -1;
    return static_cast<index_t>(lo + (it - first));
}

}  // namespace

SparseSymMatrix SparseSymMatrix::from_triplets(index_t n,
                                               std::span<const index_t> rows,
                                               std::span<const index_t> cols,
                                               std::span<const double> vals) {
    if (n < 1) throw DimensionMismatch("matrix dimension must be >= 1");
    if (rows.size() != cols.size() || rows.size() != vals.size())
        throw DimensionMismatch("triplet arrays differ in length");
    std::vector<std::tuple<index_t, index_t, double>> t;
    t.reserve(rows.size() + n);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        index_t i = rows[k], j = cols[k];
        if (i < 0 || i >= n || j < 0 || j >= n)
            throw DimensionMismatch("triplet index out of range");
        if (i < j) std::swap(i, j);  // mirror into lower triangle
        t.emplace_back(j, i, vals[k]);  // keyed column-major
    }
    for (index_t j = 0; j < n; ++j) t.emplace_back(j, j, 0.0);  // ensure diagonal
    std::sort(t.begin(), t.end(), [](const auto& a, const auto& b) {
        return std::tie(std::get<0>(a), std::get<1>(a)) <
               std::tie(std::get<0>(b), std::get<1>(b));
    });

    SparseSymMatrix Q;
    Q.n = n;
    Q.col_ptr.assign(n + 1, 0);
    for (std::size_t k = 0; k < t.size();) {
        const auto [j, i, v0] = t[k];
        double v = 0.0;
        while (k < t.size() && std::get<0>(t[k]) == j && std::get<1>(t[k]) == i) {
            v += std::get<2>(t[k]);
            ++k;
        }
        Q.row_idx.push_back(i);
        Q.values.push_back(v);
        ++Q.col_ptr[j + 1];
    }
    for (index_t j = 0; j < n; ++j) Q.col_ptr[j + 1] += Q.col_ptr[j];
    Q.validate();
    return Q;
}

void SparseSymMatrix::validate() const {
    if (n < 1) throw DimensionMismatch("matrix dimension must be >= 1");
    if (static_cast<index_t>(col_ptr.size()) != n + 1)
        throw DimensionMismatch("column pointer array has wrong length");
    if (row_idx.size() != values.size())
        throw DimensionMismatch("row/value arrays differ in length");
    for (index_t j = 0; j < n; ++j) {
        if (col_ptr[j] >= col_ptr[j + 1] || row_idx[col_ptr[j]] != j)
            throw DimensionMismatch("missing diagonal entry");
        for (index_t p = col_ptr[j] + 1; p < col_ptr[j + 1]; ++p) {
            if (row_idx[p] <= row_idx[p - 1] || row_idx[p] >= n)
                throw DimensionMismatch("row indices not strictly increasing");
        }
    }
}

double SparseSymMatrix::at(index_t i, index_t j) const {
    if (i < j) std::swap(i, j);
    const auto first = row_idx.begin() + col_ptr[j];
    const auto last = row_idx.begin() + col_ptr[j + 1];
    const auto it = std::lower_bound(first, last, i);
    if (it == last || *it != i) return 0.0;
    return values[col_ptr[j] + (it - first)];
}

SparseSymMatrix SparseSymMatrix::with_diagonal_added(std::span<const double> c) const {
    if (static_cast<index_t>(c.size()) != n)
        throw DimensionMismatch("diagonal update has wrong length");
    SparseSymMatrix out = *this;
    for (index_t j = 0; j < n; ++j) out.values[col_ptr[j]] += c[j];
    return out;
}

std::vector<double> multiply(const SparseSymMatrix& Q, std::span<const double> x) {
    if (static_cast<index_t>(x.size()) != Q.n)
        throw DimensionMismatch("vector length does not match matrix dimension");
    std::vector<double> y(Q.n, 0.0);
    for (index_t j = 0; j < Q.n; ++j) {
        y[j] += Q.values[Q.col_ptr[j]] * x[j];
        for (index_t p = Q.col_ptr[j] + 1; p < Q.col_ptr[j + 1]; ++p) {
            const index_t i = Q.row_idx[p];
            y[i] += Q.values[p] * x[j];
            y[j] += Q.values[p] * x[i];
        }
    }
    return y;
}

double quad_form(const SparseSymMatrix& Q, std::span<const double> x) {
    if (static_cast<index_t>(x.size()) != Q.n)
        throw DimensionMismatch("vector length does not match matrix dimension");
    double acc = 0.0;
    for (index_t j = 0; j < Q.n; ++j) {
        acc += Q.values[Q.col_ptr[j]] * x[j] * x[j];
        for (index_t p = Q.col_ptr[j] + 1; p < Q.col_ptr[j + 1]; ++p)
            acc += 2.0 * Q.values[p] * x[Q.row_idx[p]] * x[j];
    }
    return acc;
}

std::vector<index_t> rcm_ordering(const SparseSymMatrix& Q) {
    const index_t n = Q.n;
    // symmetric adjacency without the diagonal
    std::vector<std::vector<index_t>> adj(n);
    for (index_t j = 0; j < n; ++j) {
        for (index_t p = Q.col_ptr[j] + 1; p < Q.col_ptr[j + 1]; ++p) {
            const index_t i = Q.row_idx[p];
            adj[i].push_back(j);
            adj[j].push_back(i);
        }
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());

    std::vector<char> visited(n, 0);
    std::vector<index_t> order;
    order.reserve(n);

    auto bfs_levels = [&](index_t start, std::vector<index_t>& level_of) {
        std::deque<index_t> q{start};
        std::vector<index_t> comp{start};
        level_of[start] = 0;
        index_t last = start;
        while (!q.empty()) {
            const index_t u = q.front();
            q.pop_front();
            last = u;
            for (index_t v : adj[u]) {
                if (level_of[v] < 0) {
                    level_of[v] = level_of[u] + 1;
                    q.push_back(v);
                    comp.push_back(v);
                }
            }
        }
        return std::make_pair(last, comp);
    };

    for (index_t seed = 0; seed < n; ++seed) {
        if (visited[seed]) continue;
        // pseudo-peripheral start: two BFS sweeps from the component's
        // minimum-degree node
        std::vector<index_t> level(n, -1);
        auto [far_node, comp] = bfs_levels(seed, level);
        index_t start = seed;
        for (index_t v : comp)
            if (adj[v].size() < adj[start].size()) start = v;
        for (index_t v : comp) level[v] = -1;
        std::tie(far_node, comp) = bfs_levels(start, level);
        for (index_t v : comp) level[v] = -1;
        start = far_node;

        // Cuthill-McKee from the chosen start, neighbors by increasing degree
        std::deque<index_t> q{start};
        visited[start] = 1;
        std::vector<index_t> nbrs;
        while (!q.empty()) {
            const index_t u = q.front();
            q.pop_front();
            order.push_back(u);
            nbrs.clear();
            for (index_t v : adj[u])
                if (!visited[v]) nbrs.push_back(v);
            std::sort(nbrs.begin(), nbrs.end(), [&](index_t a, index_t b) {
                if (adj[a].size() != adj[b].size())
                    return adj[a].size() < adj[b].size();
                return a < b;
            });
            for (index_t v : nbrs) {
                visited[v] = 1;
                q.push_back(v);
            }
        }
    }
    std::reverse(order.begin(), order.end());
    return order;
}

CholFactor factorize(const SparseSymMatrix& Q, Ordering ordering, double pivot_floor) {
    Q.validate();
    CholFactor f;
    f.n = Q.n;
    if (ordering == Ordering::band_reducing) {
        f.perm = rcm_ordering(Q);
    } else {
        f.perm.resize(Q.n);
        std::iota(f.perm.begin(), f.perm.end(), index_t{0});
    }
    f.perm_inv.resize(Q.n);
    for (index_t i = 0; i < Q.n; ++i) f.perm_inv[f.perm[i]] = i;

    const UpperCsc U = permuted_upper(Q, f.perm_inv);
    const std::vector<index_t> parent = elimination_tree(U);

    // symbolic pass: column counts of L
    std::vector<index_t> stamp(Q.n, -1);
    std::vector<index_t> pattern;
    pattern.reserve(Q.n);
    std::vector<index_t> counts(Q.n, 1);  // diagonal
    std::vector<std::vector<index_t>> row_patterns(Q.n);
    for (index_t k = 0; k < Q.n; ++k) {
        ereach(U, k, parent, stamp, pattern);
        for (index_t j : pattern) ++counts[j];
        row_patterns[k] = pattern;
    }
    f.col_ptr.assign(Q.n + 1, 0);
    for (index_t j = 0; j < Q.n; ++j) f.col_ptr[j + 1] = f.col_ptr[j] + counts[j];
    f.row_idx.assign(f.col_ptr[Q.n], 0);
    f.values.assign(f.col_ptr[Q.n], 0.0);

    // numeric pass, up-looking: row k of L from a sparse triangular solve
    std::vector<index_t> cursor(f.col_ptr.begin(), f.col_ptr.end() - 1);
    std::vector<double> x(Q.n, 0.0);
    double logdet = 0.0;
    for (index_t k = 0; k < Q.n; ++k) {
        const auto& patt = row_patterns[k];
        for (index_t p = U.col_ptr[k]; p < U.col_ptr[k + 1]; ++p)
            x[U.row_idx[p]] = U.values[p];
        double d = x[k];
        x[k] = 0.0;
        for (index_t i : patt) {
            const double lki = x[i] / f.values[f.col_ptr[i]];
            x[i] = 0.0;
            for (index_t p = f.col_ptr[i] + 1; p < cursor[i]; ++p)
                x[f.row_idx[p]] -= f.values[p] * lki;
            d -= lki * lki;
            f.row_idx[cursor[i]] = k;
            f.values[cursor[i]] = lki;
            ++cursor[i];
        }
        if (!(d > pivot_floor))
            throw NotPositiveDefinite("pivot " + std::to_string(d) + " at column " +
                                      std::to_string(k) + "; matrix is not positive definite");
        f.row_idx[cursor[k]] = k;
        const double lkk = std::sqrt(d);
        f.values[cursor[k]] = lkk;
        ++cursor[k];
        logdet += std::log(lkk);
    }
    f.logdet = 2.0 * logdet;
    return f;
}

std::vector<double> solve(const CholFactor& f, std::span<const double> b) {
    if (static_cast<index_t>(b.size()) != f.n)
        throw DimensionMismatch("right-hand side length does not match factor");
    std::vector<double> x(f.n);
    for (index_t i = 0; i < f.n; ++i) x[i] = b[f.perm[i]];
    // L y = P b
    for (index_t j = 0; j < f.n; ++j) {
        x[j] /= f.values[f.col_ptr[j]];
        for (index_t p = f.col_ptr[j] + 1; p < f.col_ptr[j + 1]; ++p)
            x[f.row_idx[p]] -= f.values[p] * x[j];
    }
    // L' z = y
    for (index_t j = f.n - 1; j >= 0; --j) {
        for (index_t p = f.col_ptr[j] + 1; p < f.col_ptr[j + 1]; ++p)
            x[j] -= f.values[p] * x[f.row_idx[p]];
        x[j] /= f.values[f.col_ptr[j]];
    }
    std::vector<double> out(f.n);
    for (index_t i = 0; i < f.n; ++i) out[f.perm[i]] = x[i];
    return out;
}

double log_det(const CholFactor& f) { return f.logdet; }

namespace {

// Takahashi recursions over the factor pattern, reverse column order.
// Values of Q^{-1} are exact on the fill pattern because elimination fronts
// are cliques.
std::vector<double> takahashi_values(const CholFactor& f) {
    std::vector<double> z(f.values.size(), 0.0);
    auto lookup = [&](index_t a, index_t b) -> double {
        // entry (a, b) of the permuted inverse, either triangle
        if (a < b) std::swap(a, b);
        const index_t p = find_entry(f, a, b);
        return p < 0 ? 0.0 : z[p];
    };
    for (index_t i = f.n - 1; i >= 0; --i) {
        const index_t lo = f.col_ptr[i];
        const index_t hi = f.col_ptr[i + 1];
        const double inv_lii = 1.0 / f.values[lo];
        for (index_t pj = hi - 1; pj >= lo; --pj) {
            const index_t j = f.row_idx[pj];
            double acc = 0.0;
            for (index_t pt = lo + 1; pt < hi; ++pt)
                acc += f.values[pt] * lookup(f.row_idx[pt], j);
            double val = -inv_lii * acc;
            if (j == i) val += inv_lii * inv_lii;
            z[pj] = val;
        }
    }
    return z;
}

}  // namespace

SparseSymMatrix selected_inverse(const CholFactor& f) {
    const std::vector<double> z = takahashi_values(f);
    std::vector<index_t> rows, cols;
    std::vector<double> vals;
    rows.reserve(z.size());
    cols.reserve(z.size());
    vals.reserve(z.size());
    for (index_t j = 0; j < f.n; ++j) {
        for (index_t p = f.col_ptr[j]; p < f.col_ptr[j + 1]; ++p) {
            const index_t oi = f.perm[f.row_idx[p]];
            const index_t oj = f.perm[j];
            rows.push_back(std::max(oi, oj));
            cols.push_back(std::min(oi, oj));
            vals.push_back(z[p]);
        }
    }
    return SparseSymMatrix::from_triplets(f.n, rows, cols, vals);
}

std::vector<double> selected_inverse_diagonal(const CholFactor& f) {
    const std::vector<double> z = takahashi_values(f);
    std::vector<double> diag(f.n);
    for (index_t j = 0; j < f.n; ++j) diag[f.perm[j]] = z[f.col_ptr[j]];
    return diag;
}

}  // namespace pixinla
