#include "pixinla/gmrf.hpp"

#include <cmath>
#include <numbers>

#include "pixinla/errors.hpp"

namespace pixinla {

int GridGraph::degree(index_t l) const {
    const index_t r = l / cols;
    const index_t c = l % cols;
    int deg = 0;
    if (r > 0) ++deg;
    if (r + 1 < rows) ++deg;
    if (c > 0) ++deg;
    if (c + 1 < cols) ++deg;
    return deg;
}

int GridGraph::neighbors(index_t l, std::array<index_t, 4>& out) const {
    const index_t r = l / cols;
    const index_t c = l % cols;
    int k = 0;
    if (r > 0) out[k++] = l - cols;
    if (c > 0) out[k++] = l - 1;
    if (c + 1 < cols) out[k++] = l + 1;
    if (r + 1 < rows) out[k++] = l + cols;
    return k;
}

IcarHyper::IcarHyper(double sigma2_, double d_) : sigma2(sigma2_), d(d_) {
    if (!(sigma2 > 0.0) || !(d > 0.0))
        throw InvalidHyper("proper ICAR requires sigma2 > 0 and d > 0 (got sigma2=" +
                           std::to_string(sigma2_) + ", d=" + std::to_string(d_) + ")");
}

SparseSymMatrix build_icar_precision_raw(const GridGraph& g, double sigma2, double d) {
    if (g.rows < 1 || g.cols < 1) throw DimensionMismatch("grid must be at least 1x1");
    if (!(sigma2 > 0.0) || d < 0.0)
        throw InvalidHyper("requires sigma2 > 0 and d >= 0");
    const index_t n = g.n();
    std::vector<index_t> rows, cols;
    std::vector<double> vals;
    rows.reserve(3 * n);
    cols.reserve(3 * n);
    vals.reserve(3 * n);
    const double inv_s2 = 1.0 / sigma2;
    for (index_t l = 0; l < n; ++l) {
        rows.push_back(l);
        cols.push_back(l);
        vals.push_back((g.degree(l) + d) * inv_s2);
        const index_t r = l / g.cols;
        const index_t c = l % g.cols;
        if (c + 1 < g.cols) {  // right neighbor, lower triangle
            rows.push_back(l + 1);
            cols.push_back(l);
            vals.push_back(-inv_s2);
        }
        if (r + 1 < g.rows) {  // down neighbor
            rows.push_back(l + g.cols);
            cols.push_back(l);
            vals.push_back(-inv_s2);
        }
    }
    return SparseSymMatrix::from_triplets(n, rows, cols, vals);
}

SparseSymMatrix build_icar_precision(const GridGraph& g, const IcarHyper& h) {
    return build_icar_precision_raw(g, h.sigma2, h.d);
}

double grid_logdet(const GridGraph& g, const IcarHyper& h) {
    const auto path_eigs = [](index_t m) {
        std::vector<double> lam(m);
        for (index_t j = 0; j < m; ++j)
            lam[j] = 2.0 - 2.0 * std::cos(static_cast<double>(j) * std::numbers::pi /
                                          static_cast<double>(m));
        return lam;
    };
    const std::vector<double> lr = path_eigs(g.rows);
    const std::vector<double> lc = path_eigs(g.cols);
    double acc = 0.0;
    for (double a : lr)
        for (double b : lc) acc += std::log(h.d + a + b);
    return acc - static_cast<double>(g.n()) * std::log(h.sigma2);
}

namespace {

double icar_multiply_into(std::span<const double> x, const GridGraph& g,
                          const IcarHyper& h, std::span<double> y) {
    const double inv_s2 = 1.0 / h.sigma2;
    double quad = 0.0;
    for (index_t r = 0; r < g.rows; ++r) {
        for (index_t c = 0; c < g.cols; ++c) {
            const index_t l = r * g.cols + c;
            double acc = (g.degree(l) + h.d) * x[l];
            if (r > 0) acc -= x[l - g.cols];
            if (r + 1 < g.rows) acc -= x[l + g.cols];
            if (c > 0) acc -= x[l - 1];
            if (c + 1 < g.cols) acc -= x[l + 1];
            y[l] = acc * inv_s2;
            quad += y[l] * x[l];
        }
    }
    return quad;
}

}  // namespace

std::vector<double> icar_multiply(std::span<const double> x, const GridGraph& g,
                                  const IcarHyper& h) {
    if (static_cast<index_t>(x.size()) != g.n())
        throw DimensionMismatch("field length does not match grid");
    std::vector<double> y(x.size());
    icar_multiply_into(x, g, h, y);
    return y;
}

double icar_quad_form(std::span<const double> x, const GridGraph& g, const IcarHyper& h) {
    if (static_cast<index_t>(x.size()) != g.n())
        throw DimensionMismatch("field length does not match grid");
    std::vector<double> y(x.size());
    return icar_multiply_into(x, g, h, y);
}

double prior_logpdf(std::span<const double> x, const GridGraph& g, const IcarHyper& h) {
    if (static_cast<index_t>(x.size()) != g.n())
        throw DimensionMismatch("field length does not match grid");
    const double n = static_cast<double>(g.n());
    return -0.5 * n * std::log(2.0 * std::numbers::pi) + 0.5 * grid_logdet(g, h) -
           0.5 * icar_quad_form(x, g, h);
}

}  // namespace pixinla
