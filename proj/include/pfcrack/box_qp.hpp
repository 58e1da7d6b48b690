// SPDX-License-Identifier: Apache-2.0
#ifndef PFCRACK_BOX_QP_HPP
#define PFCRACK_BOX_QP_HPP

// Projected Newton method (Bertsekas 1982) for
//   min 0.5 x'Hx - f'x  subject to  lower <= x <= upper,
// with H symmetric positive semidefinite and sparse. Indices with lower == upper
// are fixed. Each iteration solves the reduced Newton system on the free set and
// does an Armijo search along the projection arc.

#include "pfcrack/types.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace pfcrack {

struct BoxQpOptions {
    /// Stop when the KKT residual is below rel_tol * max|gradient at x = lower| (non-fixed entries).
    double rel_tol = 1e-8;
    int max_iter = 200;
    /// Width of the epsilon-binding set, in units of x.
    double binding_width = 1e-3;
};

struct BoxQpResult {
    Eigen::VectorXd x;
    int iterations = 0;
    int factorizations = 0;
    double kkt_residual = 0.0;
    double kkt_reference = 0.0;
    bool converged = false;
};

namespace detail {

inline Eigen::VectorXd project(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi)
{
    return x.cwiseMax(lo).cwiseMin(hi);
}

/// Infinity norm of the componentwise KKT violation for gradient g at x.
inline double kkt_residual(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const Eigen::VectorXd& lo,
                           const Eigen::VectorXd& hi)
{
    double r = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (lo[i] == hi[i]) {
            continue;
        }
        double ri;
        if (x[i] <= lo[i]) {
            ri = std::max(0.0, -g[i]);
        } else if (x[i] >= hi[i]) {
            ri = std::max(0.0, g[i]);
        } else {
            ri = std::abs(g[i]);
        }
        r = std::max(r, ri);
    }
    return r;
}

} // namespace detail

inline double box_qp_objective(const Eigen::SparseMatrix<double>& H, const Eigen::VectorXd& f, const Eigen::VectorXd& x)
{
    return 0.5 * x.dot(H * x) - f.dot(x);
}

/// H must store both triangles.
inline BoxQpResult solve_box_qp(const Eigen::SparseMatrix<double>& H, const Eigen::VectorXd& f,
                                const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, const Eigen::VectorXd& x0,
                                const BoxQpOptions& opt = {})
{
    const Eigen::Index n = f.size();
    require(H.rows() == n && H.cols() == n && lower.size() == n && upper.size() == n && x0.size() == n,
            "box QP size mismatch");
    for (Eigen::Index i = 0; i < n; ++i) {
        require(lower[i] <= upper[i], "box QP with lower > upper");
    }

    BoxQpResult res;
    {
        const Eigen::VectorXd g0 = H * lower - f;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (lower[i] != upper[i]) {
                res.kkt_reference = std::max(res.kkt_reference, std::abs(g0[i]));
            }
        }
    }
    const double tol = opt.rel_tol * res.kkt_reference;
    const Eigen::VectorXd diag = H.diagonal();
    double dmax = diag.cwiseAbs().maxCoeff();
    if (!(dmax > 0.0)) {
        dmax = 1.0;
    }

    Eigen::VectorXd x = detail::project(x0, lower, upper);
    Eigen::VectorXd g = H * x - f;
    std::vector<int> free_map(static_cast<std::size_t>(n));

    for (res.iterations = 0; res.iterations < opt.max_iter; ++res.iterations) {
        res.kkt_residual = detail::kkt_residual(x, g, lower, upper);
        if (res.kkt_residual <= tol) {
            res.converged = true;
            break;
        }

        // Diagonally scaled projected step measures distance to stationarity in x units.
        double w = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double s = g[i] / std::max(diag[i], 1e-300 * dmax);
            w = std::max(w, std::abs(x[i] - std::clamp(x[i] - s, lower[i], upper[i])));
        }
        const double eps = std::min(opt.binding_width, w);

        int nf = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool fixed = lower[i] == upper[i];
            const bool at_lo = x[i] <= lower[i] + eps && g[i] > 0.0;
            const bool at_hi = x[i] >= upper[i] - eps && g[i] < 0.0;
            free_map[static_cast<std::size_t>(i)] = (fixed || at_lo || at_hi) ? -1 : nf++;
        }

        Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (free_map[static_cast<std::size_t>(i)] < 0 && lower[i] != upper[i]) {
                d[i] = -g[i] / std::max(diag[i], 1e-300 * dmax);
            }
        }
        if (nf > 0) {
            std::vector<Eigen::Triplet<double>> trip;
            for (int col = 0; col < H.outerSize(); ++col) {
                const int fc = free_map[static_cast<std::size_t>(col)];
                if (fc < 0) {
                    continue;
                }
                for (Eigen::SparseMatrix<double>::InnerIterator it(H, col); it; ++it) {
                    const int fr = free_map[static_cast<std::size_t>(it.row())];
                    if (fr >= fc) {
                        trip.emplace_back(fr, fc, it.value());
                    }
                }
            }
            Eigen::SparseMatrix<double> Hff(nf, nf);
            Hff.setFromTriplets(trip.begin(), trip.end());
            Eigen::VectorXd rhs(nf);
            for (Eigen::Index i = 0; i < n; ++i) {
                const int fi = free_map[static_cast<std::size_t>(i)];
                if (fi >= 0) {
                    rhs[fi] = -g[i];
                }
            }
            Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt(Hff);
            ++res.factorizations;
            bool ok = ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() > 1e-14 * dmax;
            if (!ok) {
                // Semidefinite free block (e.g. pure Laplacian): shift slightly.
                for (Eigen::Index k = 0; k < nf; ++k) {
                    Hff.coeffRef(k, k) += 1e-10 * dmax;
                }
                ldlt.compute(Hff);
                ++res.factorizations;
                if (ldlt.info() != Eigen::Success) {
                    throw SolverError("box QP reduced Newton system could not be factorized");
                }
            }
            const Eigen::VectorXd df = ldlt.solve(rhs);
            for (Eigen::Index i = 0; i < n; ++i) {
                const int fi = free_map[static_cast<std::size_t>(i)];
                if (fi >= 0) {
                    d[i] = df[fi];
                }
            }
        }

        // Armijo search along the projection arc. The decrease is evaluated from the
        // step itself, J(x + s) - J(x) = g's + s'Hs / 2, which keeps it accurate when
        // it is far below the rounding level of J.
        double t = 1.0;
        bool accepted = false;
        Eigen::VectorXd xt, gt;
        for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
            xt = detail::project(x + t * d, lower, upper);
            const Eigen::VectorXd step = xt - x;
            const Eigen::VectorXd Hs = H * step;
            const double dJ = g.dot(step) + 0.5 * step.dot(Hs);
            gt = g + Hs;
            double decrease = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (free_map[static_cast<std::size_t>(i)] >= 0) {
                    decrease -= t * g[i] * d[i];
                } else {
                    decrease += g[i] * (x[i] - xt[i]);
                }
            }
            if (dJ <= -1e-4 * decrease || step.lpNorm<Eigen::Infinity>() == 0.0) {
                accepted = true;
                break;
            }
        }
        if (!accepted || (xt - x).lpNorm<Eigen::Infinity>() == 0.0) {
            // Stalled: no representable progress. Report the final residual.
            if (accepted) {
                x = xt;
                g = H * x - f;
            }
            res.kkt_residual = detail::kkt_residual(x, g, lower, upper);
            res.converged = res.kkt_residual <= tol;
            ++res.iterations;
            break;
        }
        x = std::move(xt);
        // Refresh the gradient from scratch to avoid drift from the incremental update.
        g = H * x - f;
    }
    if (res.iterations == opt.max_iter) {
        res.kkt_residual = detail::kkt_residual(x, g, lower, upper);
        res.converged = res.kkt_residual <= tol;
    }
    res.x = std::move(x);
    return res;
}

} // namespace pfcrack

#endif
