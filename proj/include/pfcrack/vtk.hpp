// SPDX-License-Identifier: Apache-2.0
#ifndef PFCRACK_VTK_HPP
#define PFCRACK_VTK_HPP

// Legacy ASCII VTK (version 2.0) unstructured grid writer. See docs/snapshot_format.md.

#include "pfcrack/mesh.hpp"

#include <Eigen/Core>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>

namespace pfcrack {

struct SnapshotFields {
    const Eigen::VectorXd* alpha = nullptr;        // nodal phase field
    const Eigen::VectorXd* displacement = nullptr; // interleaved (u_x, u_y)
};

inline void write_vtk(std::ostream& os, const Mesh& mesh, const SnapshotFields& fields = {},
                      const std::string& title = "pfcrack snapshot")
{
    const std::size_t nn = mesh.num_nodes();
    const std::size_t nc = mesh.num_cells();
    const int npc = mesh.nodes_per_cell();
    os << std::setprecision(17);
    os << "# vtk DataFile Version 2.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << nn << " double\n";
    for (const Point& p : mesh.nodes) {
        os << p.x << ' ' << p.y << " 0\n";
    }
    os << "CELLS " << nc << ' ' << nc * static_cast<std::size_t>(npc + 1) << '\n';
    for (std::size_t e = 0; e < nc; ++e) {
        os << npc;
        for (int n : mesh.cell(e)) {
            os << ' ' << n;
        }
        os << '\n';
    }
    os << "CELL_TYPES " << nc << '\n';
    const int vtk_type = mesh.cell_type == CellType::quad4 ? 9 : 5;
    for (std::size_t e = 0; e < nc; ++e) {
        os << vtk_type << '\n';
    }

    // Cell marker: 1 for cells of the crack_band element set, 0 otherwise.
    std::vector<int> marker(nc, 0);
    if (auto it = mesh.element_sets.find("crack_band"); it != mesh.element_sets.end()) {
        for (int e : it->second) {
            marker[static_cast<std::size_t>(e)] = 1;
        }
    }
    os << "CELL_DATA " << nc << "\nSCALARS crack_band int 1\nLOOKUP_TABLE default\n";
    for (int m : marker) {
        os << m << '\n';
    }

    if (fields.alpha == nullptr && fields.displacement == nullptr) {
        return;
    }
    os << "POINT_DATA " << nn << '\n';
    if (fields.alpha != nullptr) {
        require(fields.alpha->size() == static_cast<Eigen::Index>(nn), "alpha size mismatch");
        os << "SCALARS alpha double 1\nLOOKUP_TABLE default\n";
        for (std::size_t n = 0; n < nn; ++n) {
            os << (*fields.alpha)[static_cast<Eigen::Index>(n)] << '\n';
        }
    }
    if (fields.displacement != nullptr) {
        const auto& u = *fields.displacement;
        require(u.size() == static_cast<Eigen::Index>(2 * nn), "displacement size mismatch");
        os << "VECTORS u double\n";
        for (std::size_t n = 0; n < nn; ++n) {
            os << u[static_cast<Eigen::Index>(2 * n)] << ' ' << u[static_cast<Eigen::Index>(2 * n + 1)] << " 0\n";
        }
        os << "SCALARS u_magnitude double 1\nLOOKUP_TABLE default\n";
        for (std::size_t n = 0; n < nn; ++n) {
            os << std::hypot(u[static_cast<Eigen::Index>(2 * n)], u[static_cast<Eigen::Index>(2 * n + 1)]) << '\n';
        }
    }
}

inline void write_vtk_file(const std::string& path, const Mesh& mesh, const SnapshotFields& fields = {},
                           const std::string& title = "pfcrack snapshot")
{
    std::ofstream os(path);
    if (!os) {
        throw Error("cannot open '" + path + "' for writing");
    }
    write_vtk(os, mesh, fields, title);
}

} // namespace pfcrack

#endif
