// SPDX-License-Identifier: Apache-2.0
#ifndef PFCRACK_FE_SPACE_HPP
#define PFCRACK_FE_SPACE_HPP

#include "pfcrack/mesh.hpp"

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace pfcrack {

/// Precomputed quadrature data for first-order Lagrange elements on a mesh:
/// 2x2 Gauss for quads, one centroid point for triangles. The same shape
/// functions carry displacement components and the phase field.
class FeSpace {
public:
    explicit FeSpace(const Mesh& mesh)
        : mesh_(&mesh), npc_(mesh.nodes_per_cell()), nqp_(mesh.cell_type == CellType::quad4 ? 4 : 1)
    {
        std::vector<std::array<double, 2>> ref_points;
        std::vector<double> ref_weights;
        if (mesh.cell_type == CellType::quad4) {
            const double g = 1.0 / std::sqrt(3.0);
            ref_points = {{-g, -g}, {g, -g}, {g, g}, {-g, g}};
            ref_weights = {1.0, 1.0, 1.0, 1.0};
        } else {
            ref_points = {{1.0 / 3.0, 1.0 / 3.0}};
            ref_weights = {0.5};
        }

        shape_.resize(static_cast<std::size_t>(nqp_ * npc_));
        std::vector<double> ref_grad(static_cast<std::size_t>(nqp_ * npc_ * 2));
        for (int q = 0; q < nqp_; ++q) {
            const double xi = ref_points[static_cast<std::size_t>(q)][0];
            const double eta = ref_points[static_cast<std::size_t>(q)][1];
            double* N = &shape_[static_cast<std::size_t>(q * npc_)];
            double* dN = &ref_grad[static_cast<std::size_t>(q * npc_ * 2)];
            if (npc_ == 4) {
                const std::array<double, 4> sx{-1.0, 1.0, 1.0, -1.0};
                const std::array<double, 4> sy{-1.0, -1.0, 1.0, 1.0};
                for (int a = 0; a < 4; ++a) {
                    N[a] = 0.25 * (1.0 + sx[a] * xi) * (1.0 + sy[a] * eta);
                    dN[2 * a] = 0.25 * sx[a] * (1.0 + sy[a] * eta);
                    dN[2 * a + 1] = 0.25 * sy[a] * (1.0 + sx[a] * xi);
                }
            } else {
                N[0] = 1.0 - xi - eta;
                N[1] = xi;
                N[2] = eta;
                dN[0] = -1.0;
                dN[1] = -1.0;
                dN[2] = 1.0;
                dN[3] = 0.0;
                dN[4] = 0.0;
                dN[5] = 1.0;
            }
        }

        const std::size_t ncell = mesh.num_cells();
        weight_.resize(ncell * static_cast<std::size_t>(nqp_));
        grad_.resize(ncell * static_cast<std::size_t>(nqp_ * npc_ * 2));
        points_.resize(ncell * static_cast<std::size_t>(nqp_));
        for (std::size_t e = 0; e < ncell; ++e) {
            const auto c = mesh.cell(e);
            for (int q = 0; q < nqp_; ++q) {
                const double* dN = &ref_grad[static_cast<std::size_t>(q * npc_ * 2)];
                const double* N = &shape_[static_cast<std::size_t>(q * npc_)];
                double j00 = 0, j01 = 0, j10 = 0, j11 = 0;
                Point x;
                for (int a = 0; a < npc_; ++a) {
                    const Point& p = mesh.nodes[static_cast<std::size_t>(c[static_cast<std::size_t>(a)])];
                    j00 += dN[2 * a] * p.x;
                    j01 += dN[2 * a] * p.y;
                    j10 += dN[2 * a + 1] * p.x;
                    j11 += dN[2 * a + 1] * p.y;
                    x.x += N[a] * p.x;
                    x.y += N[a] * p.y;
                }
                const double det = j00 * j11 - j01 * j10;
                if (!(det > 0.0)) {
                    throw MeshError("cell with non-positive Jacobian");
                }
                const std::size_t iq = e * static_cast<std::size_t>(nqp_) + static_cast<std::size_t>(q);
                weight_[iq] = ref_weights[static_cast<std::size_t>(q)] * det;
                points_[iq] = x;
                double* g = &grad_[iq * static_cast<std::size_t>(npc_ * 2)];
                for (int a = 0; a < npc_; ++a) {
                    // Inverse-transpose Jacobian applied to the reference gradient.
                    g[2 * a] = (j11 * dN[2 * a] - j01 * dN[2 * a + 1]) / det;
                    g[2 * a + 1] = (-j10 * dN[2 * a] + j00 * dN[2 * a + 1]) / det;
                }
            }
        }
    }

    const Mesh& mesh() const { return *mesh_; }
    int nodes_per_cell() const { return npc_; }
    int points_per_cell() const { return nqp_; }
    std::size_t num_cells() const { return mesh_->num_cells(); }
    std::size_t num_nodes() const { return mesh_->num_nodes(); }
    std::size_t num_points() const { return weight_.size(); }

    /// Quadrature weight times Jacobian determinant.
    double weight(std::size_t e, int q) const { return weight_[index(e, q)]; }
    const Point& point(std::size_t e, int q) const { return points_[index(e, q)]; }

    std::span<const double> shape(int q) const
    {
        return {shape_.data() + static_cast<std::size_t>(q * npc_), static_cast<std::size_t>(npc_)};
    }

    /// Physical gradients, interleaved (dN_a/dx, dN_a/dy).
    std::span<const double> grad(std::size_t e, int q) const
    {
        const std::size_t n = static_cast<std::size_t>(npc_ * 2);
        return {grad_.data() + index(e, q) * n, n};
    }

    double interpolate(std::size_t e, int q, const Eigen::VectorXd& nodal) const
    {
        const auto c = mesh_->cell(e);
        const auto N = shape(q);
        double v = 0.0;
        for (int a = 0; a < npc_; ++a) {
            v += N[static_cast<std::size_t>(a)] * nodal[c[static_cast<std::size_t>(a)]];
        }
        return v;
    }

    std::size_t index(std::size_t e, int q) const { return e * static_cast<std::size_t>(nqp_) + static_cast<std::size_t>(q); }

private:
    const Mesh* mesh_;
    int npc_;
    int nqp_;
    std::vector<double> shape_;
    std::vector<double> weight_;
    std::vector<double> grad_;
    std::vector<Point> points_;
};

} // namespace pfcrack

#endif
