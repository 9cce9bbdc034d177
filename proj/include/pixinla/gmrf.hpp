#pragma once

#include <array>
#include <span>
#include <vector>

#include "pixinla/sparse.hpp"

namespace pixinla {

/// Pixel lattice with 4-connected neighborhoods and free (non-periodic)
/// boundaries. Pixels are indexed row-major.
struct GridGraph {
    index_t rows = 1;
    index_t cols = 1;

    index_t n() const { return rows * cols; }

    /// Number of lattice neighbors of pixel l (2, 3 or 4; 0 for a 1x1 grid).
    int degree(index_t l) const;

    /// Neighbor indices of pixel l; returns how many were written (<= 4).
    int neighbors(index_t l, std::array<index_t, 4>& out) const;
};

/// Proper-ICAR hyperparameters. d > 0 keeps the joint precision positive
/// definite; d = 0 recovers the improper intrinsic model and is rejected here.
struct IcarHyper {
    double sigma2;
    double d;

    IcarHyper(double sigma2_, double d_);
};

/// Joint precision of the proper ICAR field:
///   Q_ll = (|C_l| + d) / sigma2,  Q_lj = -1 / sigma2 for lattice neighbors j.
/// Row sums equal d / sigma2 and Q is SPD for d > 0.
SparseSymMatrix build_icar_precision(const GridGraph& g, const IcarHyper& h);

/// Same matrix without the d > 0 guard (d >= 0), for boundary experiments on
/// the improper model. sigma2 must still be positive.
SparseSymMatrix build_icar_precision_raw(const GridGraph& g, double sigma2, double d);

/// Closed-form ln det Q from the Kronecker-sum eigenvalues of the lattice
/// Laplacian:
///   ln det Q = -n ln sigma2 + sum_{j,k} ln(d + lam_j + lam_k),
/// lam_j = 2 - 2 cos(j pi / rows) (path-graph eigenvalues), same for columns.
double grid_logdet(const GridGraph& g, const IcarHyper& h);

/// Zero-mean GMRF log-density ln N(x | 0, Q^{-1}) using the closed-form
/// normalizer.
double prior_logpdf(std::span<const double> x, const GridGraph& g, const IcarHyper& h);

/// (Q x) computed from the lattice stencil without materializing Q.
std::vector<double> icar_multiply(std::span<const double> x, const GridGraph& g,
                                  const IcarHyper& h);

/// x' Q x from the stencil.
double icar_quad_form(std::span<const double> x, const GridGraph& g, const IcarHyper& h);

}  // namespace pixinla
