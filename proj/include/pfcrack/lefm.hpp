// SPDX-License-Identifier: Apache-2.0
#ifndef PFCRACK_LEFM_HPP
#define PFCRACK_LEFM_HPP

#include "pfcrack/elasticity.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace pfcrack {

/// Virtual crack extension field: direction * ramp(r), ramp = 1 inside r1, 0 beyond r2.
struct ThetaField {
    Point tip;
    Point direction{1.0, 0.0};
    double r1 = 6.0e-5;
    double r2 = 1.8e-4;

    void validate() const
    {
        require(r1 > 0.0 && r1 < r2, "theta field needs 0 < r1 < r2");
        const double n = std::hypot(direction.x, direction.y);
        require(std::abs(n - 1.0) < 1e-12, "theta direction must be a unit vector");
    }
};

inline Point theta_at(const Point& x, const ThetaField& th)
{
    const double r = distance(x, th.tip);
    double ramp;
    if (r <= th.r1) {
        ramp = 1.0;
    } else if (r < th.r2) {
        ramp = (th.r2 - r) / (th.r2 - th.r1);
    } else {
        ramp = 0.0;
    }
    return {th.direction.x * ramp, th.direction.y * ramp};
}

/// Rejects a theta support that reaches the outer boundary of the mesh bounding box.
inline void check_theta_support(const Mesh& mesh, const ThetaField& th)
{
    th.validate();
    double xmin = mesh.nodes.front().x, xmax = xmin, ymin = mesh.nodes.front().y, ymax = ymin;
    for (const Point& p : mesh.nodes) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    const double clearance = std::min({th.tip.x - xmin, xmax - th.tip.x, th.tip.y - ymin, ymax - th.tip.y});
    if (!(clearance > th.r2)) {
        throw Error("theta support (r2 = " + std::to_string(th.r2) + ") touches the specimen boundary");
    }
}

/// Domain form of the energy release rate,
///   G = int sigma_ij u_i,k Theta_k,j - psi Theta_k,k,
/// with Theta interpolated from its nodal values.
inline double compute_g_theta(const FeSpace& space, const MaterialParams& mat, const Eigen::VectorXd& u,
                              const ThetaField& th)
{
    const Mesh& mesh = space.mesh();
    check_theta_support(mesh, th);
    const Eigen::Matrix3d D = mat.elasticity_matrix();
    std::vector<Point> theta(mesh.num_nodes());
    for (std::size_t n = 0; n < mesh.num_nodes(); ++n) {
        theta[n] = theta_at(mesh.nodes[n], th);
    }
    const int npc = space.nodes_per_cell();
    double G = 0.0;
    for (std::size_t e = 0; e < space.num_cells(); ++e) {
        const auto c = mesh.cell(e);
        bool active = false;
        for (int n : c) {
            active = active || theta[static_cast<std::size_t>(n)].x != 0.0 || theta[static_cast<std::size_t>(n)].y != 0.0;
        }
        if (!active) {
            continue;
        }
        for (int q = 0; q < space.points_per_cell(); ++q) {
            const auto g = space.grad(e, q);
            Eigen::Matrix2d grad_u = Eigen::Matrix2d::Zero(); // (i, k) = u_i,k
            Eigen::Matrix2d grad_t = Eigen::Matrix2d::Zero(); // (k, j) = Theta_k,j
            for (int a = 0; a < npc; ++a) {
                const auto n = static_cast<std::size_t>(c[static_cast<std::size_t>(a)]);
                const double dx = g[static_cast<std::size_t>(2 * a)];
                const double dy = g[static_cast<std::size_t>(2 * a + 1)];
                const double ux = u[static_cast<Eigen::Index>(2 * n)];
                const double uy = u[static_cast<Eigen::Index>(2 * n + 1)];
                grad_u(0, 0) += ux * dx;
                grad_u(0, 1) += ux * dy;
                grad_u(1, 0) += uy * dx;
                grad_u(1, 1) += uy * dy;
                grad_t(0, 0) += theta[n].x * dx;
                grad_t(0, 1) += theta[n].x * dy;
                grad_t(1, 0) += theta[n].y * dx;
                grad_t(1, 1) += theta[n].y * dy;
            }
            const Eigen::Vector3d eps(grad_u(0, 0), grad_u(1, 1), grad_u(0, 1) + grad_u(1, 0));
            const Eigen::Vector3d s = D * eps;
            Eigen::Matrix2d sigma;
            sigma << s[0], s[2], s[2], s[1];
            const double psi = 0.5 * s.dot(eps);
            // sigma_ij u_i,k Theta_k,j = trace(sigma^T grad_u grad_t) with sigma symmetric.
            const double work = (sigma * (grad_u * grad_t)).trace();
            G += space.weight(e, q) * (work - psi * grad_t.trace());
        }
    }
    return G;
}

/// Griffith: lambda^2 G_bar = G_c.
inline double critical_load_factor(double g_bar, double gc)
{
    require(g_bar > 0.0 && gc > 0.0, "critical_load_factor needs positive G and G_c");
    return std::sqrt(gc / g_bar);
}

struct LefmPoint {
    double a = 0.0;
    double g_bar = 0.0;  // at unit top displacement
    double f_bar = 0.0;  // reaction at unit top displacement
    double e_bar = 0.0;  // elastic energy at unit top displacement
    double lambda = 0.0;
    double force = 0.0;
    double u_imp = 0.0;
};

struct LefmOptions {
    double r1 = 6.0e-5;
    double r2 = 1.8e-4;
};

/// Elastic SENT state with a sharp (node-duplicated) crack of length a at unit load.
inline LefmPoint lefm_unit_state(const SentGeometry& geom, double a, const MaterialParams& mat, const LefmOptions& opt = {})
{
    SentGeometry g = geom;
    g.crack_length = a;
    const Mesh mesh = build_sent_mesh(g, CrackKind::geo_t0, true);
    const FeSpace space(mesh);
    const Eigen::VectorXd alpha = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_nodes()));
    const auto u = solve_unitary_displacement(space, mat, alpha, 0.0);
    LefmPoint p;
    p.a = a;
    p.f_bar = reaction_force(space, mat, alpha, u.values, 0.0)[1];
    p.e_bar = elastic_energy(space, mat, alpha, u.values, 0.0);
    p.g_bar = compute_g_theta(space, mat, u.values, ThetaField{{a, g.crack_y}, {1.0, 0.0}, opt.r1, opt.r2});
    return p;
}

/// Sharp-crack quasi-static path for a = a0, a0 + da, ..., a_max.
inline std::vector<LefmPoint> lefm_equilibrium_path(const SentGeometry& geom, double a0, double da, double a_max,
                                                    const MaterialParams& mat, const LefmOptions& opt = {})
{
    require(da > 0.0 && a_max >= a0, "LEFM path needs da > 0 and a_max >= a0");
    std::vector<LefmPoint> path;
    const int n = static_cast<int>(std::floor((a_max - a0) / da + 1e-9));
    for (int k = 0; k <= n; ++k) {
        const double a = a0 + k * da;
        LefmPoint p;
        try {
            p = lefm_unit_state(geom, a, mat, opt);
        } catch (const std::exception& ex) {
            throw Error("LEFM step at a = " + std::to_string(a) + " m failed: " + ex.what());
        }
        p.lambda = critical_load_factor(p.g_bar, mat.gc);
        p.force = p.lambda * p.f_bar;
        p.u_imp = p.lambda;
        path.push_back(p);
    }
    return path;
}

} // namespace pfcrack

#endif
