// SPDX-License-Identifier: Apache-2.0
// Small meshes and independent reference computations shared by the unit tests.
#pragma once

#include "pfcrack/pfcrack.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace testing_support {

using namespace pfcrack;

/// Benchmark-sized specimen with a coarse regularization length (ell = 0.06 mm) so
/// that meshes have a few thousand nodes.
inline SentGeometry coarse_geometry(double ell = 6.0e-5) { return SentGeometry::benchmark(ell); }

inline PhaseFieldParams coarse_phase(double ell = 6.0e-5)
{
    PhaseFieldParams pf;
    pf.ell = ell;
    pf.gc_numeric = effective_gc(2700.0, ell / 6.0, ell);
    return pf;
}

/// Single-cell mesh from explicit corner coordinates.
inline Mesh single_cell(const std::vector<Point>& pts)
{
    Mesh m;
    m.cell_type = pts.size() == 4 ? CellType::quad4 : CellType::tri3;
    m.nodes = pts;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        m.connectivity.push_back(static_cast<int>(i));
    }
    return m;
}

/// Uniform nx x ny quad grid on [0,w] x [0,h] with top/bottom/left/right sets.
inline Mesh grid(int nx, int ny, double w, double h)
{
    Mesh m;
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            m.nodes.push_back({w * i / nx, h * j / ny});
        }
    }
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int a = j * (nx + 1) + i;
            m.connectivity.insert(m.connectivity.end(), {a, a + 1, a + nx + 2, a + nx + 1});
        }
    }
    for (int i = 0; i <= nx; ++i) {
        m.node_sets["bottom"].push_back(i);
        m.node_sets["top"].push_back(ny * (nx + 1) + i);
    }
    for (int j = 0; j <= ny; ++j) {
        m.node_sets["left"].push_back(j * (nx + 1));
        m.node_sets["right"].push_back(j * (nx + 1) + nx);
    }
    for (const char* s : {"crack_faces", "crack_tip", "crack_line", "crack_band_nodes"}) {
        m.node_sets[s];
    }
    m.element_sets["crack_band"];
    m.h_fine = w / nx;
    return m;
}

/// Q4 shape functions and reference derivatives, written out independently of FeSpace.
inline std::array<double, 4> q4_shape(double xi, double eta)
{
    return {0.25 * (1 - xi) * (1 - eta), 0.25 * (1 + xi) * (1 - eta), 0.25 * (1 + xi) * (1 + eta),
            0.25 * (1 - xi) * (1 + eta)};
}

inline std::array<double, 8> q4_dshape(double xi, double eta)
{
    return {-0.25 * (1 - eta), -0.25 * (1 - xi), 0.25 * (1 - eta), -0.25 * (1 + xi),
            0.25 * (1 + eta),  0.25 * (1 + xi),  -0.25 * (1 + eta), 0.25 * (1 - xi)};
}

/// Element stiffness of a Q4 by explicit 2x2 Gauss sums (oracle).
inline std::array<std::array<double, 8>, 8> q4_stiffness_oracle(const std::array<Point, 4>& p, double E, double nu,
                                                                 bool plane_strain = true)
{
    double D[3][3] = {};
    if (plane_strain) {
        const double c = E / ((1 + nu) * (1 - 2 * nu));
        D[0][0] = D[1][1] = c * (1 - nu);
        D[0][1] = D[1][0] = c * nu;
        D[2][2] = c * (1 - 2 * nu) / 2;
    } else {
        const double c = E / (1 - nu * nu);
        D[0][0] = D[1][1] = c;
        D[0][1] = D[1][0] = c * nu;
        D[2][2] = c * (1 - nu) / 2;
    }
    std::array<std::array<double, 8>, 8> K{};
    const double g = 1.0 / std::sqrt(3.0);
    for (double xi : {-g, g}) {
        for (double eta : {-g, g}) {
            const auto d = q4_dshape(xi, eta);
            double J[2][2] = {};
            for (int a = 0; a < 4; ++a) {
                J[0][0] += d[2 * a] * p[a].x;
                J[0][1] += d[2 * a] * p[a].y;
                J[1][0] += d[2 * a + 1] * p[a].x;
                J[1][1] += d[2 * a + 1] * p[a].y;
            }
            const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
            double B[3][8] = {};
            for (int a = 0; a < 4; ++a) {
                const double dx = (J[1][1] * d[2 * a] - J[0][1] * d[2 * a + 1]) / det;
                const double dy = (-J[1][0] * d[2 * a] + J[0][0] * d[2 * a + 1]) / det;
                B[0][2 * a] = dx;
                B[1][2 * a + 1] = dy;
                B[2][2 * a] = dy;
                B[2][2 * a + 1] = dx;
            }
            for (int i = 0; i < 8; ++i) {
                for (int j = 0; j < 8; ++j) {
                    double s = 0;
                    for (int k = 0; k < 3; ++k) {
                        for (int l = 0; l < 3; ++l) {
                            s += B[k][i] * D[k][l] * B[l][j];
                        }
                    }
                    K[i][j] += s * det;
                }
            }
        }
    }
    return K;
}

/// Newton inversion of the bilinear map of a quad: physical point -> (xi, eta).
inline std::array<double, 2> q4_inverse_map(const std::array<Point, 4>& p, Point x)
{
    double xi = 0, eta = 0;
    for (int it = 0; it < 50; ++it) {
        const auto N = q4_shape(xi, eta);
        const auto d = q4_dshape(xi, eta);
        double rx = -x.x, ry = -x.y, J00 = 0, J01 = 0, J10 = 0, J11 = 0;
        for (int a = 0; a < 4; ++a) {
            rx += N[a] * p[a].x;
            ry += N[a] * p[a].y;
            J00 += d[2 * a] * p[a].x;     // dx/dxi
            J01 += d[2 * a + 1] * p[a].x; // dx/deta
            J10 += d[2 * a] * p[a].y;
            J11 += d[2 * a + 1] * p[a].y;
        }
        const double det = J00 * J11 - J01 * J10;
        xi -= (J11 * rx - J01 * ry) / det;
        eta -= (-J10 * rx + J00 * ry) / det;
    }
    return {xi, eta};
}

/// Projected Gauss-Seidel minimization of the 1D P1 AT1 dissipation
/// sum_e [ (a_i + a_j)/2 /ell + ell ((a_j - a_i)/dx)^2 ] dx with a(0) = 1 on [0, X].
/// Returns nodal values at x_i = i dx.
inline std::vector<double> brute_force_1d_profile(double ell, double X, int n)
{
    const double dx = X / n;
    std::vector<double> a(static_cast<std::size_t>(n) + 1, 0.0);
    a[0] = 1.0;
    // d/da_i: dx/ell (half per side, interior 1) + 2 ell/dx (2 a_i - a_{i-1} - a_{i+1})
    for (int sweep = 0; sweep < 200000; ++sweep) {
        double change = 0;
        for (int i = 1; i <= n; ++i) {
            const double w = (i == n) ? 0.5 : 1.0;
            const double nb = (i == n) ? a[i - 1] : a[i - 1] + a[i + 1];
            const double diag = (i == n ? 1.0 : 2.0) * 2.0 * ell / dx;
            const double v = std::max(0.0, (2.0 * ell / dx * nb - w * dx / ell) / diag);
            change = std::max(change, std::abs(v - a[i]));
            a[i] = v;
        }
        if (change < 1e-13) {
            break;
        }
    }
    return a;
}

/// Dissipation of the cells whose centroid lies in [x0, x1].
inline double dissipation_in_strip(const FeSpace& space, const PhaseFieldParams& pf, const Eigen::VectorXd& alpha, double x0,
                            double x1)
{
    const Mesh& m = space.mesh();
    double sum = 0;
    for (std::size_t e = 0; e < space.num_cells(); ++e) {
        const Point c = m.cell_centroid(e);
        if (c.x < x0 || c.x > x1) {
            continue;
        }
        const auto cell = m.cell(e);
        for (int q = 0; q < space.points_per_cell(); ++q) {
            const auto g = space.grad(e, q);
            double gx = 0, gy = 0;
            for (int a = 0; a < space.nodes_per_cell(); ++a) {
                gx += g[static_cast<std::size_t>(2 * a)] * alpha[cell[static_cast<std::size_t>(a)]];
                gy += g[static_cast<std::size_t>(2 * a + 1)] * alpha[cell[static_cast<std::size_t>(a)]];
            }
            sum += space.weight(e, q) * (space.interpolate(e, q, alpha) / pf.ell + pf.ell * (gx * gx + gy * gy));
        }
    }
    return pf.gc_numeric / pf.c_w * sum;
}

/// Nodal values along the vertical line x = xs, sorted by y.
inline std::vector<std::pair<double, double>> cross_section(const Mesh& m, const Eigen::VectorXd& alpha, double xs)
{
    std::vector<std::pair<double, double>> out;
    for (std::size_t n = 0; n < m.num_nodes(); ++n) {
        if (std::abs(m.nodes[n].x - xs) < 1e-12) {
            out.emplace_back(m.nodes[n].y, alpha[static_cast<Eigen::Index>(n)]);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Realized control measure of the increment u1 - u0 (maximum over quadrature points).
inline double realized_increment(const FeSpace& space, const Eigen::VectorXd& u1, const Eigen::VectorXd& u0, StrainMeasure m)
{
    const auto e1 = strain_at_quadrature(space, u1);
    const auto e0 = strain_at_quadrature(space, u0);
    double r = -std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < e1.size(); ++q) {
        r = std::max(r, strain_measure(e1[q] - e0[q], m));
    }
    return r;
}

/// Largest root of f(lambda) = target on a uniform grid (sign-change scan).
inline double grid_largest_root(const std::function<double(double)>& f, double target, double lo, double hi, double step)
{
    double best = std::nan("");
    double prev = f(lo) - target;
    const long n = static_cast<long>(std::llround((hi - lo) / step));
    for (long k = 1; k <= n; ++k) {
        const double lam = lo + k * step;
        const double cur = f(lam) - target;
        if ((prev < 0) != (cur < 0) || cur == 0) {
            best = lam - step * cur / (cur - prev);
        }
        prev = cur;
    }
    return best;
}

} // namespace testing_support
