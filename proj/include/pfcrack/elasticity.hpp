// SPDX-License-Identifier: Apache-2.0
#ifndef PFCRACK_ELASTICITY_HPP
#define PFCRACK_ELASTICITY_HPP

#include "pfcrack/fe_space.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

namespace pfcrack {

enum class PlaneAssumption { plane_strain, plane_stress };

/// Isotropic linear elastic material with its Griffith toughness.
struct MaterialParams {
    double young_modulus = 230.77e9;
    double poisson_ratio = 0.43;
    double gc = 2700.0;
    PlaneAssumption plane = PlaneAssumption::plane_strain;

    void validate() const
    {
        require(young_modulus > 0.0, "Young modulus must be positive");
        require(poisson_ratio > -1.0 && poisson_ratio < 0.5, "Poisson ratio must lie in (-1, 0.5)");
        require(gc > 0.0, "fracture toughness must be positive");
    }

    /// Voigt matrix acting on (eps_xx, eps_yy, gamma_xy).
    Eigen::Matrix3d elasticity_matrix() const
    {
        const double E = young_modulus;
        const double nu = poisson_ratio;
        Eigen::Matrix3d D = Eigen::Matrix3d::Zero();
        if (plane == PlaneAssumption::plane_strain) {
            const double c = E / ((1.0 + nu) * (1.0 - 2.0 * nu));
            D << 1.0 - nu, nu, 0.0, nu, 1.0 - nu, 0.0, 0.0, 0.0, 0.5 * (1.0 - 2.0 * nu);
            D *= c;
        } else {
            const double c = E / (1.0 - nu * nu);
            D << 1.0, nu, 0.0, nu, 1.0, 0.0, 0.0, 0.0, 0.5 * (1.0 - nu);
            D *= c;
        }
        return D;
    }

    /// Modulus relating G to K_I^2.
    double effective_modulus() const
    {
        return plane == PlaneAssumption::plane_strain ? young_modulus / (1.0 - poisson_ratio * poisson_ratio)
                                                      : young_modulus;
    }
};

/// Prescribed displacement components, by global dof index (2 * node + component).
struct DirichletBc {
    std::vector<int> dofs;
    std::vector<double> values;
};

struct DisplacementField {
    Eigen::VectorXd values;
    DirichletBc dirichlet;
};

/// Index sets used by the SENT boundary conditions.
struct SentDofSets {
    std::vector<int> bottom_uy;
    std::vector<int> top_uy;
    int pinned_ux = -1;
    std::vector<int> crack_face_nodes;
    std::vector<int> crack_tip_nodes;
};

inline SentDofSets boundary_dof_sets(const Mesh& mesh)
{
    SentDofSets s;
    const auto& bottom = mesh.node_set("bottom");
    const auto& top = mesh.node_set("top");
    if (bottom.empty() || top.empty()) {
        throw MeshError("top and bottom node sets must not be empty");
    }
    int corner = bottom.front();
    for (int n : bottom) {
        s.bottom_uy.push_back(2 * n + 1);
        if (mesh.nodes[static_cast<std::size_t>(n)].x < mesh.nodes[static_cast<std::size_t>(corner)].x) {
            corner = n;
        }
    }
    s.pinned_ux = 2 * corner;
    for (int n : top) {
        s.top_uy.push_back(2 * n + 1);
    }
    s.crack_face_nodes = mesh.node_set("crack_faces");
    s.crack_tip_nodes = mesh.node_set("crack_tip");
    return s;
}

/// u_y = 0 on the bottom face, u_x = 0 at the bottom-left corner, u_y = top_uy on top.
inline DirichletBc sent_dirichlet(const SentDofSets& sets, double top_uy)
{
    DirichletBc bc;
    for (int d : sets.bottom_uy) {
        bc.dofs.push_back(d);
        bc.values.push_back(0.0);
    }
    bc.dofs.push_back(sets.pinned_ux);
    bc.values.push_back(0.0);
    for (int d : sets.top_uy) {
        bc.dofs.push_back(d);
        bc.values.push_back(top_uy);
    }
    return bc;
}

inline double degraded_stiffness_factor(double alpha_q, double k_res) { return (1.0 - alpha_q) * (1.0 - alpha_q) + k_res; }

/// a(alpha) + k_res at a quadrature point. 1 - alpha is interpolated directly so
/// that a cell with alpha = 1 at every node degrades to exactly k_res.
inline double degraded_stiffness_factor(const FeSpace& space, std::size_t e, int q, const Eigen::VectorXd& alpha,
                                        double k_res)
{
    const auto c = space.mesh().cell(e);
    const auto N = space.shape(q);
    double intact = 0.0;
    for (std::size_t a = 0; a < N.size(); ++a) {
        intact += N[a] * (1.0 - alpha[c[a]]);
    }
    return intact * intact + k_res;
}

namespace detail {

template <int NPC>
using ElementMatrix = Eigen::Matrix<double, 2 * NPC, 2 * NPC>;

template <int NPC>
Eigen::Matrix<double, 3, 2 * NPC> strain_operator(std::span<const double> g)
{
    Eigen::Matrix<double, 3, 2 * NPC> B = Eigen::Matrix<double, 3, 2 * NPC>::Zero();
    for (int a = 0; a < NPC; ++a) {
        const double dx = g[static_cast<std::size_t>(2 * a)];
        const double dy = g[static_cast<std::size_t>(2 * a + 1)];
        B(0, 2 * a) = dx;
        B(1, 2 * a + 1) = dy;
        B(2, 2 * a) = dy;
        B(2, 2 * a + 1) = dx;
    }
    return B;
}

template <int NPC>
ElementMatrix<NPC> element_stiffness(const FeSpace& space, std::size_t e, const Eigen::Matrix3d& D,
                                     const Eigen::VectorXd& alpha, double k_res)
{
    ElementMatrix<NPC> K = ElementMatrix<NPC>::Zero();
    for (int q = 0; q < space.points_per_cell(); ++q) {
        const double c = degraded_stiffness_factor(space, e, q, alpha, k_res);
        const auto B = strain_operator<NPC>(space.grad(e, q));
        K.noalias() += (space.weight(e, q) * c) * (B.transpose() * (D * B));
    }
    // Mirror the upper triangle so the assembled matrix is bitwise symmetric.
    K.template triangularView<Eigen::StrictlyLower>() = K.transpose();
    return K;
}

template <int NPC>
Eigen::Matrix<double, 2 * NPC, 1> gather(std::span<const int> cell, const Eigen::VectorXd& u)
{
    Eigen::Matrix<double, 2 * NPC, 1> ue;
    for (int a = 0; a < NPC; ++a) {
        ue[2 * a] = u[2 * cell[static_cast<std::size_t>(a)]];
        ue[2 * a + 1] = u[2 * cell[static_cast<std::size_t>(a)] + 1];
    }
    return ue;
}

template <class F>
decltype(auto) dispatch_cell_type(const FeSpace& space, F&& f)
{
    if (space.nodes_per_cell() == 4) {
        return f(std::integral_constant<int, 4>{});
    }
    return f(std::integral_constant<int, 3>{});
}

inline Eigen::Vector3d voigt(const SymTensor2& t) { return {t.xx, t.yy, 2.0 * t.xy}; }

} // namespace detail

/// Full (unconstrained) stiffness with per-point factor (1 - alpha)^2 + k_res.
inline Eigen::SparseMatrix<double> assemble_degraded_stiffness(const FeSpace& space, const MaterialParams& mat,
                                                               const Eigen::VectorXd& alpha, double k_res)
{
    const Eigen::Matrix3d D = mat.elasticity_matrix();
    const auto n = static_cast<Eigen::Index>(2 * space.num_nodes());
    std::vector<Eigen::Triplet<double>> trip;
    detail::dispatch_cell_type(space, [&](auto npc_tag) {
        constexpr int NPC = decltype(npc_tag)::value;
        trip.reserve(space.num_cells() * 4 * NPC * NPC);
        for (std::size_t e = 0; e < space.num_cells(); ++e) {
            const auto c = space.mesh().cell(e);
            const auto K = detail::element_stiffness<NPC>(space, e, D, alpha, k_res);
            for (int i = 0; i < 2 * NPC; ++i) {
                for (int j = 0; j < 2 * NPC; ++j) {
                    trip.emplace_back(2 * c[static_cast<std::size_t>(i / 2)] + i % 2,
                                      2 * c[static_cast<std::size_t>(j / 2)] + j % 2, K(i, j));
                }
            }
        }
    });
    Eigen::SparseMatrix<double> K(n, n);
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
}

/// Strain tensor at every quadrature point, ordered cell-major.
inline std::vector<SymTensor2> strain_at_quadrature(const FeSpace& space, const Eigen::VectorXd& u)
{
    require(u.size() == static_cast<Eigen::Index>(2 * space.num_nodes()), "displacement size mismatch");
    std::vector<SymTensor2> eps(space.num_points());
    const int npc = space.nodes_per_cell();
    for (std::size_t e = 0; e < space.num_cells(); ++e) {
        const auto c = space.mesh().cell(e);
        for (int q = 0; q < space.points_per_cell(); ++q) {
            const auto g = space.grad(e, q);
            SymTensor2 t;
            for (int a = 0; a < npc; ++a) {
                const double ux = u[2 * c[static_cast<std::size_t>(a)]];
                const double uy = u[2 * c[static_cast<std::size_t>(a)] + 1];
                const double dx = g[static_cast<std::size_t>(2 * a)];
                const double dy = g[static_cast<std::size_t>(2 * a + 1)];
                t.xx += dx * ux;
                t.yy += dy * uy;
                t.xy += 0.5 * (dy * ux + dx * uy);
            }
            eps[space.index(e, q)] = t;
        }
    }
    return eps;
}

/// Undegraded strain energy density 0.5 eps:E:eps at every quadrature point.
inline std::vector<double> energy_density_at_quadrature(const FeSpace& space, const MaterialParams& mat,
                                                        const Eigen::VectorXd& u)
{
    const Eigen::Matrix3d D = mat.elasticity_matrix();
    const auto eps = strain_at_quadrature(space, u);
    std::vector<double> psi(eps.size());
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const Eigen::Vector3d v = detail::voigt(eps[i]);
        psi[i] = 0.5 * v.dot(D * v);
    }
    return psi;
}

inline double elastic_energy(const FeSpace& space, const MaterialParams& mat, const Eigen::VectorXd& alpha,
                             const Eigen::VectorXd& u, double k_res)
{
    const auto psi = energy_density_at_quadrature(space, mat, u);
    double energy = 0.0;
    for (std::size_t e = 0; e < space.num_cells(); ++e) {
        for (int q = 0; q < space.points_per_cell(); ++q) {
            energy += space.weight(e, q) * degraded_stiffness_factor(space, e, q, alpha, k_res) *
                      psi[space.index(e, q)];
        }
    }
    return energy;
}

/// Assembled internal force vector K(alpha) u.
inline Eigen::VectorXd internal_force(const FeSpace& space, const MaterialParams& mat, const Eigen::VectorXd& alpha,
                                      const Eigen::VectorXd& u, double k_res)
{
    const Eigen::Matrix3d D = mat.elasticity_matrix();
    Eigen::VectorXd f = Eigen::VectorXd::Zero(u.size());
    const int npc = space.nodes_per_cell();
    const auto eps = strain_at_quadrature(space, u);
    for (std::size_t e = 0; e < space.num_cells(); ++e) {
        const auto c = space.mesh().cell(e);
        for (int q = 0; q < space.points_per_cell(); ++q) {
            const double c_q = degraded_stiffness_factor(space, e, q, alpha, k_res);
            const Eigen::Vector3d s = (space.weight(e, q) * c_q) * (D * detail::voigt(eps[space.index(e, q)]));
            const auto g = space.grad(e, q);
            for (int a = 0; a < npc; ++a) {
                const double dx = g[static_cast<std::size_t>(2 * a)];
                const double dy = g[static_cast<std::size_t>(2 * a + 1)];
                f[2 * c[static_cast<std::size_t>(a)]] += dx * s[0] + dy * s[2];
                f[2 * c[static_cast<std::size_t>(a)] + 1] += dy * s[1] + dx * s[2];
            }
        }
    }
    return f;
}

inline Eigen::Vector2d resultant(const Eigen::VectorXd& f, const std::vector<int>& nodes)
{
    Eigen::Vector2d r = Eigen::Vector2d::Zero();
    for (int n : nodes) {
        r[0] += f[2 * n];
        r[1] += f[2 * n + 1];
    }
    return r;
}

/// Consistent nodal reaction on the top face (N per unit thickness).
inline Eigen::Vector2d reaction_force(const FeSpace& space, const MaterialParams& mat, const Eigen::VectorXd& alpha,
                                      const Eigen::VectorXd& u, double k_res)
{
    return resultant(internal_force(space, mat, alpha, u, k_res), space.mesh().node_set("top"));
}

/// Direct sparse solver for the degraded elasticity problem with fixed Dirichlet
/// dofs. The symbolic factorization is computed once per mesh; factorize() only
/// redoes the numeric phase.
class ElasticSolver {
public:
    ElasticSolver(const FeSpace& space, const MaterialParams& mat, std::vector<int> constrained_dofs)
        : space_(&space), D_(mat.elasticity_matrix()), constrained_(std::move(constrained_dofs))
    {
        mat.validate();
        const int ndof = static_cast<int>(2 * space.num_nodes());
        map_.assign(static_cast<std::size_t>(ndof), 0);
        for (std::size_t i = 0; i < constrained_.size(); ++i) {
            const int d = constrained_[i];
            require(d >= 0 && d < ndof, "constrained dof out of range");
            require(map_[static_cast<std::size_t>(d)] == 0, "dof constrained twice");
            map_[static_cast<std::size_t>(d)] = -static_cast<int>(i) - 1;
        }
        num_free_ = 0;
        for (int d = 0; d < ndof; ++d) {
            if (map_[static_cast<std::size_t>(d)] == 0) {
                map_[static_cast<std::size_t>(d)] = ++num_free_;
            }
        }
        // map_ > 0: free index + 1, map_ < 0: -(constrained index + 1).

        const int nloc = 2 * space.nodes_per_cell();
        std::vector<Eigen::Triplet<double>> ff, fc;
        for (std::size_t e = 0; e < space.num_cells(); ++e) {
            const auto dofs = cell_dofs(e);
            for (int i = 0; i < nloc; ++i) {
                const int mi = map_[static_cast<std::size_t>(dofs[static_cast<std::size_t>(i)])];
                if (mi <= 0) {
                    continue;
                }
                for (int j = 0; j < nloc; ++j) {
                    const int mj = map_[static_cast<std::size_t>(dofs[static_cast<std::size_t>(j)])];
                    if (mj > 0 && mi >= mj) {
                        ff.emplace_back(mi - 1, mj - 1, 1.0);
                    } else if (mj < 0) {
                        fc.emplace_back(mi - 1, -mj - 1, 1.0);
                    }
                }
            }
        }
        Kff_.resize(num_free_, num_free_);
        Kff_.setFromTriplets(ff.begin(), ff.end());
        Kff_.makeCompressed();
        Kfc_.resize(num_free_, static_cast<Eigen::Index>(constrained_.size()));
        Kfc_.setFromTriplets(fc.begin(), fc.end());
        Kfc_.makeCompressed();

        // Value slot of every element entry in Kff_ / Kfc_ (-1 when not stored there).
        slots_ff_.assign(space.num_cells() * static_cast<std::size_t>(nloc * nloc), -1);
        slots_fc_.assign(space.num_cells() * static_cast<std::size_t>(nloc * nloc), -1);
        for (std::size_t e = 0; e < space.num_cells(); ++e) {
            const auto dofs = cell_dofs(e);
            for (int i = 0; i < nloc; ++i) {
                const int mi = map_[static_cast<std::size_t>(dofs[static_cast<std::size_t>(i)])];
                if (mi <= 0) {
                    continue;
                }
                for (int j = 0; j < nloc; ++j) {
                    const int mj = map_[static_cast<std::size_t>(dofs[static_cast<std::size_t>(j)])];
                    const std::size_t k = e * static_cast<std::size_t>(nloc * nloc) + static_cast<std::size_t>(i * nloc + j);
                    if (mj > 0 && mi >= mj) {
                        slots_ff_[k] = slot(Kff_, mi - 1, mj - 1);
                    } else if (mj < 0) {
                        slots_fc_[k] = slot(Kfc_, mi - 1, -mj - 1);
                    }
                }
            }
        }
        ldlt_.analyzePattern(Kff_);
    }

    std::size_t num_free() const { return static_cast<std::size_t>(num_free_); }
    const std::vector<int>& constrained_dofs() const { return constrained_; }

    /// Numeric factorization of the reduced stiffness for the given phase field.
    void factorize(const Eigen::VectorXd& alpha, double k_res)
    {
        std::fill(Kff_.valuePtr(), Kff_.valuePtr() + Kff_.nonZeros(), 0.0);
        std::fill(Kfc_.valuePtr(), Kfc_.valuePtr() + Kfc_.nonZeros(), 0.0);
        detail::dispatch_cell_type(*space_, [&](auto npc_tag) {
            constexpr int NPC = decltype(npc_tag)::value;
            constexpr int nloc = 2 * NPC;
            double* vff = Kff_.valuePtr();
            double* vfc = Kfc_.valuePtr();
            for (std::size_t e = 0; e < space_->num_cells(); ++e) {
                const auto K = detail::element_stiffness<NPC>(*space_, e, D_, alpha, k_res);
                const std::size_t base = e * static_cast<std::size_t>(nloc * nloc);
                for (int i = 0; i < nloc; ++i) {
                    for (int j = 0; j < nloc; ++j) {
                        const std::size_t k = base + static_cast<std::size_t>(i * nloc + j);
                        if (slots_ff_[k] >= 0) {
                            vff[slots_ff_[k]] += K(i, j);
                        } else if (slots_fc_[k] >= 0) {
                            vfc[slots_fc_[k]] += K(i, j);
                        }
                    }
                }
            }
        });
        ldlt_.factorize(Kff_);
        if (ldlt_.info() != Eigen::Success) {
            throw SolverError("stiffness factorization failed (singular or indefinite system)");
        }
        const Eigen::VectorXd& piv = ldlt_.vectorD();
        const double dmax = piv.cwiseAbs().maxCoeff();
        const double dmin = piv.minCoeff();
        if (!(dmin > 1e-15 * dmax)) {
            throw SolverError("stiffness is singular after Dirichlet elimination: some dofs are disconnected from "
                              "the constraints (fully damaged region with zero residual stiffness?)");
        }
        factorized_ = true;
    }

    /// Full displacement vector for the given constrained values.
    Eigen::VectorXd solve(const std::vector<double>& constrained_values)
    {
        require(factorized_, "ElasticSolver::solve called before factorize");
        require(constrained_values.size() == constrained_.size(), "constrained value count mismatch");
        const Eigen::Map<const Eigen::VectorXd> uc(constrained_values.data(),
                                                   static_cast<Eigen::Index>(constrained_values.size()));
        const Eigen::VectorXd rhs = -(Kfc_ * uc);
        const Eigen::VectorXd xf = ldlt_.solve(rhs);
        const Eigen::VectorXd r = Kff_.selfadjointView<Eigen::Lower>() * xf - rhs;
        const double scale = std::max(rhs.norm(), std::numeric_limits<double>::min());
        last_residual_ = rhs.norm() > 0.0 ? r.norm() / scale : r.norm();

        Eigen::VectorXd u(static_cast<Eigen::Index>(map_.size()));
        for (std::size_t d = 0; d < map_.size(); ++d) {
            const int m = map_[d];
            u[static_cast<Eigen::Index>(d)] = m > 0 ? xf[m - 1] : constrained_values[static_cast<std::size_t>(-m - 1)];
        }
        return u;
    }

    double last_relative_residual() const { return last_residual_; }

private:
    std::vector<int> cell_dofs(std::size_t e) const
    {
        const auto c = space_->mesh().cell(e);
        std::vector<int> dofs;
        dofs.reserve(2 * c.size());
        for (int n : c) {
            dofs.push_back(2 * n);
            dofs.push_back(2 * n + 1);
        }
        return dofs;
    }

    static int slot(const Eigen::SparseMatrix<double>& A, int row, int col)
    {
        const int* inner = A.innerIndexPtr();
        const int begin = A.outerIndexPtr()[col];
        const int end = A.outerIndexPtr()[col + 1];
        const int* it = std::lower_bound(inner + begin, inner + end, row);
        if (it == inner + end || *it != row) {
            throw Error("sparsity pattern lookup failed");
        }
        return static_cast<int>(it - inner);
    }

    const FeSpace* space_;
    Eigen::Matrix3d D_;
    std::vector<int> constrained_;
    std::vector<int> map_;
    int num_free_ = 0;
    Eigen::SparseMatrix<double> Kff_;
    Eigen::SparseMatrix<double> Kfc_;
    std::vector<int> slots_ff_;
    std::vector<int> slots_fc_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt_;
    bool factorized_ = false;
    double last_residual_ = 0.0;
};

/// Elastic response of the SENT specimen to a unit imposed top displacement.
inline DisplacementField solve_unitary_displacement(const FeSpace& space, const MaterialParams& mat,
                                                    const Eigen::VectorXd& alpha, double k_res,
                                                    double* relative_residual = nullptr)
{
    const auto sets = boundary_dof_sets(space.mesh());
    DisplacementField u;
    u.dirichlet = sent_dirichlet(sets, 1.0);
    ElasticSolver solver(space, mat, u.dirichlet.dofs);
    solver.factorize(alpha, k_res);
    u.values = solver.solve(u.dirichlet.values);
    if (relative_residual != nullptr) {
        *relative_residual = solver.last_relative_residual();
    }
    return u;
}

} // namespace pfcrack

#endif
