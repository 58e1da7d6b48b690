// SPDX-License-Identifier: Apache-2.0
#ifndef PFCRACK_PHASEFIELD_HPP
#define PFCRACK_PHASEFIELD_HPP

#include "pfcrack/box_qp.hpp"
#include "pfcrack/elasticity.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace pfcrack {

inline constexpr double at1_cw = 8.0 / 3.0;

/// Toughness to give the phase-field model so that its discrete effective
/// toughness G_PF (1 + h / (c_w ell)) equals gc_target.
inline double effective_gc(double gc_target, double h, double ell, double c_w = at1_cw)
{
    require(ell > 0.0 && h >= 0.0, "effective_gc needs ell > 0 and h >= 0");
    return gc_target / (1.0 + h / (c_w * ell));
}

/// Inverse of effective_gc: apparent toughness of a discretized AT1 crack.
inline double apparent_gc(double gc_numeric, double h, double ell, double c_w = at1_cw)
{
    return gc_numeric * (1.0 + h / (c_w * ell));
}

/// 1D AT1 minimizer of the dissipation with alpha(0) = 1.
inline double at1_optimal_profile(double x, double ell)
{
    require(ell > 0.0, "ell must be positive");
    const double r = std::abs(x) / (2.0 * ell);
    return r >= 1.0 ? 0.0 : (1.0 - r) * (1.0 - r);
}

struct PhaseFieldParams {
    double ell = 1.5e-5;
    double gc_numeric = effective_gc(2700.0, 1.5e-5 / 6.0, 1.5e-5);
    double c_w = at1_cw;
    double k_res = 1e-8;

    static double degradation(double alpha) { return (1.0 - alpha) * (1.0 - alpha); }
    static double local_dissipation(double alpha) { return alpha; }

    void validate() const
    {
        require(ell > 0.0, "ell must be positive");
        require(gc_numeric > 0.0, "phase-field toughness must be positive");
        require(c_w > 0.0, "c_w must be positive");
        require(k_res >= 0.0, "k_res must be non-negative");
    }
};

/// Nodal crack phase with its irreversibility floor and alpha = 1 pins.
struct PhaseField {
    Eigen::VectorXd values;
    Eigen::VectorXd lower;
    std::vector<int> pinned;

    static PhaseField zeros(std::size_t n)
    {
        PhaseField a;
        a.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        a.lower = a.values;
        return a;
    }

    /// Upper bound vector: 1 everywhere (pins are also held by lower = 1).
    Eigen::VectorXd upper() const { return Eigen::VectorXd::Ones(values.size()); }

    void check(double slack = 1e-12) const
    {
        require(lower.size() == values.size(), "phase field bound size mismatch");
        for (Eigen::Index i = 0; i < values.size(); ++i) {
            if (!(values[i] >= lower[i] - slack && values[i] <= 1.0 + slack && lower[i] >= -slack)) {
                throw Error("phase field violates 0 <= lower <= alpha <= 1 at node " + std::to_string(i));
            }
        }
        for (int n : pinned) {
            if (values[n] != 1.0 || lower[n] != 1.0) {
                throw Error("pinned node " + std::to_string(n) + " does not hold alpha = 1");
            }
        }
    }
};

inline double dissipation_energy(const FeSpace& space, const PhaseFieldParams& pf, const Eigen::VectorXd& alpha)
{
    const int npc = space.nodes_per_cell();
    double sum = 0.0;
    for (std::size_t e = 0; e < space.num_cells(); ++e) {
        const auto c = space.mesh().cell(e);
        for (int q = 0; q < space.points_per_cell(); ++q) {
            const auto g = space.grad(e, q);
            double gx = 0.0, gy = 0.0;
            for (int a = 0; a < npc; ++a) {
                const double v = alpha[c[static_cast<std::size_t>(a)]];
                gx += g[static_cast<std::size_t>(2 * a)] * v;
                gy += g[static_cast<std::size_t>(2 * a + 1)] * v;
            }
            const double aq = space.interpolate(e, q, alpha);
            sum += space.weight(e, q) * (PhaseFieldParams::local_dissipation(aq) / pf.ell + pf.ell * (gx * gx + gy * gy));
        }
    }
    return pf.gc_numeric / pf.c_w * sum;
}

/// The AT1 phase subproblem at fixed u is the convex box QP
///   min 0.5 a'Ha - f'a,  lower <= a <= 1,
/// with H = 2 M_psi + (2 Gc ell / c_w) K and f = 2 M_psi 1 - Gc / (c_w ell) b,
/// M_psi the psi-weighted mass matrix, K the stiffness of the Laplacian and
/// b_i = int N_i.
class PhaseSolver {
public:
    PhaseSolver(const FeSpace& space, const PhaseFieldParams& pf) : space_(&space), pf_(pf)
    {
        pf.validate();
        const int npc = space.nodes_per_cell();
        const auto n = static_cast<Eigen::Index>(space.num_nodes());
        b_ = Eigen::VectorXd::Zero(n);
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(space.num_cells() * static_cast<std::size_t>(npc * npc));
        for (std::size_t e = 0; e < space.num_cells(); ++e) {
            const auto c = space.mesh().cell(e);
            for (int q = 0; q < space.points_per_cell(); ++q) {
                const double w = space.weight(e, q);
                const auto N = space.shape(q);
                const auto g = space.grad(e, q);
                for (int a = 0; a < npc; ++a) {
                    b_[c[static_cast<std::size_t>(a)]] += w * N[static_cast<std::size_t>(a)];
                    for (int bb = 0; bb < npc; ++bb) {
                        const double k = g[static_cast<std::size_t>(2 * a)] * g[static_cast<std::size_t>(2 * bb)] +
                                         g[static_cast<std::size_t>(2 * a + 1)] * g[static_cast<std::size_t>(2 * bb + 1)];
                        trip.emplace_back(c[static_cast<std::size_t>(a)], c[static_cast<std::size_t>(bb)], w * k);
                    }
                }
            }
        }
        laplacian_.resize(n, n);
        laplacian_.setFromTriplets(trip.begin(), trip.end());
    }

    const PhaseFieldParams& params() const { return pf_; }
    const Eigen::SparseMatrix<double>& laplacian() const { return laplacian_; }
    const Eigen::VectorXd& load_vector() const { return b_; }

    /// Hessian and linear term of the subproblem for undegraded energy densities psi (per quadrature point).
    void quadratic_form(const std::vector<double>& psi, Eigen::SparseMatrix<double>& H, Eigen::VectorXd& f) const
    {
        const FeSpace& s = *space_;
        require(psi.size() == s.num_points(), "energy density size mismatch");
        const int npc = s.nodes_per_cell();
        const auto n = static_cast<Eigen::Index>(s.num_nodes());
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(s.num_cells() * static_cast<std::size_t>(npc * npc * s.points_per_cell()));
        Eigen::VectorXd m1 = Eigen::VectorXd::Zero(n);
        for (std::size_t e = 0; e < s.num_cells(); ++e) {
            const auto c = s.mesh().cell(e);
            for (int q = 0; q < s.points_per_cell(); ++q) {
                const double wp = s.weight(e, q) * psi[s.index(e, q)];
                if (wp == 0.0) {
                    continue;
                }
                const auto N = s.shape(q);
                for (int a = 0; a < npc; ++a) {
                    m1[c[static_cast<std::size_t>(a)]] += 2.0 * wp * N[static_cast<std::size_t>(a)];
                    for (int bb = 0; bb < npc; ++bb) {
                        trip.emplace_back(c[static_cast<std::size_t>(a)], c[static_cast<std::size_t>(bb)],
                                          2.0 * wp * N[static_cast<std::size_t>(a)] * N[static_cast<std::size_t>(bb)]);
                    }
                }
            }
        }
        H.resize(n, n);
        H.setFromTriplets(trip.begin(), trip.end());
        H += (2.0 * pf_.gc_numeric * pf_.ell / pf_.c_w) * laplacian_;
        f = m1 - (pf_.gc_numeric / (pf_.c_w * pf_.ell)) * b_;
    }

    /// Minimizes E(u, .) + D(.) over lower <= alpha <= 1, starting from `start`.
    BoxQpResult solve(const std::vector<double>& psi, const Eigen::VectorXd& lower, const Eigen::VectorXd& start,
                      const BoxQpOptions& opt = {}) const
    {
        Eigen::SparseMatrix<double> H;
        Eigen::VectorXd f;
        quadratic_form(psi, H, f);
        const Eigen::VectorXd upper = Eigen::VectorXd::Ones(lower.size());
        BoxQpResult r = solve_box_qp(H, f, lower, upper, start, opt);
        if (!r.converged) {
            throw SolverError("phase subproblem did not converge: KKT residual " + std::to_string(r.kkt_residual) +
                              " (reference " + std::to_string(r.kkt_reference) + ") after " +
                              std::to_string(r.iterations) + " iterations");
        }
        return r;
    }

private:
    const FeSpace* space_;
    PhaseFieldParams pf_;
    Eigen::SparseMatrix<double> laplacian_;
    Eigen::VectorXd b_;
};

/// One phase solve at fixed displacement; the previous field provides the bound and pins.
inline PhaseField solve_phase_subproblem(const FeSpace& space, const MaterialParams& mat, const PhaseFieldParams& pf,
                                         const Eigen::VectorXd& u, const PhaseField& alpha_prev,
                                         const BoxQpOptions& opt = {})
{
    PhaseSolver solver(space, pf);
    const auto psi = energy_density_at_quadrature(space, mat, u);
    PhaseField out = alpha_prev;
    out.values = solver.solve(psi, alpha_prev.lower, alpha_prev.values, opt).x;
    return out;
}

struct AlternateMinimizationResult {
    DisplacementField u;
    PhaseField alpha;
    int iterations = 0;
    /// Total energy E + D after every half step (elastic solve, then phase solve).
    std::vector<double> energy_history;
};

/// Alternate minimization at fixed boundary data until ||delta alpha||_inf <= tol_alpha.
inline AlternateMinimizationResult alternate_minimize_fixed_load(const FeSpace& space, const MaterialParams& mat,
                                                                 const PhaseFieldParams& pf, const DirichletBc& bc,
                                                                 const PhaseField& alpha_start, double tol_alpha = 1e-4,
                                                                 int max_iter = 1000)
{
    ElasticSolver elastic(space, mat, bc.dofs);
    PhaseSolver phase(space, pf);
    AlternateMinimizationResult res;
    res.alpha = alpha_start;
    res.u.dirichlet = bc;
    for (int k = 1; k <= max_iter; ++k) {
        elastic.factorize(res.alpha.values, pf.k_res);
        res.u.values = elastic.solve(bc.values);
        res.energy_history.push_back(elastic_energy(space, mat, res.alpha.values, res.u.values, pf.k_res) +
                                     dissipation_energy(space, pf, res.alpha.values));
        const auto psi = energy_density_at_quadrature(space, mat, res.u.values);
        const Eigen::VectorXd next = phase.solve(psi, res.alpha.lower, res.alpha.values).x;
        const double change = (next - res.alpha.values).lpNorm<Eigen::Infinity>();
        res.alpha.values = next;
        res.energy_history.push_back(elastic_energy(space, mat, res.alpha.values, res.u.values, pf.k_res) +
                                     dissipation_energy(space, pf, res.alpha.values));
        res.iterations = k;
        if (change <= tol_alpha) {
            return res;
        }
    }
    throw SolverError("alternate minimization exceeded " + std::to_string(max_iter) + " iterations");
}

} // namespace pfcrack

#endif
