// SPDX-License-Identifier: Apache-2.0
#ifndef PFCRACK_MESH_HPP
#define PFCRACK_MESH_HPP

#include "pfcrack/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pfcrack {

enum class CellType { quad4, tri3 };

/// How the initial crack is carried by the mesh.
///  - geo_t0: nodes duplicated along the crack segment (tip node shared).
///  - geo_t1: one-element-high slit removed from the mesh.
///  - conforming_line: a node row lies on the crack segment.
///  - conforming_band: an element row is centred on the crack segment.
enum class CrackKind { none, geo_t0, geo_t1, conforming_line, conforming_band };

inline std::string to_string(CrackKind kind)
{
    switch (kind) {
    case CrackKind::none: return "none";
    case CrackKind::geo_t0: return "geo_t0";
    case CrackKind::geo_t1: return "geo_t1";
    case CrackKind::conforming_line: return "conforming_line";
    case CrackKind::conforming_band: return "conforming_band";
    }
    return "?";
}

/// Single edge notched tension specimen: square of side L with an edge crack on
/// y = crack_y running from x = 0 to x = crack_length. All lengths in metres.
struct SentGeometry {
    double side_length = 1.0e-3;
    double crack_length = 0.5e-3;
    double crack_y = 0.5e-3;
    double band_half_height = 3.0e-5;
    double h_fine = 2.5e-6;
    double h_far = 3.0e-5;

    /// Geometry of the benchmark for a given regularization length: refined band of
    /// half height 2*ell meshed at ell/6, far field at 2*ell.
    static SentGeometry benchmark(double ell = 1.5e-5)
    {
        SentGeometry g;
        g.band_half_height = 2.0 * ell;
        g.h_fine = ell / 6.0;
        g.h_far = 2.0 * ell;
        return g;
    }

    void validate(CrackKind kind, bool structured) const
    {
        const double L = side_length;
        if (!(L > 0.0)) {
            throw MeshError("side_length must be positive");
        }
        if (kind == CrackKind::none) {
            if (crack_length < 0.0 || crack_length >= L) {
                throw MeshError("crack_length must lie in [0, L)");
            }
        } else if (!(crack_length > 0.0 && crack_length < L)) {
            throw MeshError("crack_length must lie in (0, L)");
        }
        if (!(h_fine > 0.0 && h_fine <= h_far)) {
            throw MeshError("mesh sizes must satisfy 0 < h_fine <= h_far");
        }
        if (!(band_half_height > 0.0)) {
            throw MeshError("band_half_height must be positive");
        }
        if (!(crack_y - band_half_height > -1e-12 * L && crack_y + band_half_height < L * (1.0 + 1e-12))) {
            throw MeshError("refined band must fit inside the specimen");
        }
        // The fine lattice spans the whole width, so h_fine must tile [0, a0] and [a0, L].
        auto tiles = [&](double length) {
            const double n = length / h_fine;
            return std::abs(n - std::round(n)) <= 1e-6 * std::max(1.0, n);
        };
        if (!tiles(L)) {
            throw MeshError("h_fine must divide the side length");
        }
        if (structured && kind != CrackKind::none && !(tiles(crack_length) && tiles(L - crack_length))) {
            throw MeshError("structured meshing needs h_fine to divide a0 and L - a0 so the tip lies on the lattice");
        }
        if (band_half_height < h_fine * (1.0 - 1e-9)) {
            throw MeshError("refined band must be at least one element high");
        }
    }
};

struct Mesh {
    CellType cell_type = CellType::quad4;
    std::vector<Point> nodes;
    std::vector<int> connectivity;
    std::map<std::string, std::vector<int>> node_sets;
    std::map<std::string, std::vector<int>> element_sets;
    /// (original node, duplicate node) along a node-duplicated crack.
    std::vector<std::pair<int, int>> duplicated_pairs;
    CrackKind crack_kind = CrackKind::none;
    double h_fine = 0.0;

    int nodes_per_cell() const { return cell_type == CellType::quad4 ? 4 : 3; }
    std::size_t num_nodes() const { return nodes.size(); }
    std::size_t num_cells() const { return connectivity.size() / static_cast<std::size_t>(nodes_per_cell()); }

    std::span<const int> cell(std::size_t e) const
    {
        const auto npc = static_cast<std::size_t>(nodes_per_cell());
        return {connectivity.data() + e * npc, npc};
    }

    bool has_node_set(const std::string& name) const { return node_sets.count(name) != 0; }

    const std::vector<int>& node_set(const std::string& name) const
    {
        auto it = node_sets.find(name);
        if (it == node_sets.end()) {
            throw MeshError("missing node set '" + name + "'");
        }
        return it->second;
    }

    const std::vector<int>& element_set(const std::string& name) const
    {
        auto it = element_sets.find(name);
        if (it == element_sets.end()) {
            throw MeshError("missing element set '" + name + "'");
        }
        return it->second;
    }

    /// Signed area (positive for counterclockwise cells).
    double cell_area(std::size_t e) const
    {
        const auto c = cell(e);
        double a = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            const Point& p = nodes[static_cast<std::size_t>(c[i])];
            const Point& q = nodes[static_cast<std::size_t>(c[(i + 1) % c.size()])];
            a += p.x * q.y - q.x * p.y;
        }
        return 0.5 * a;
    }

    Point cell_centroid(std::size_t e) const
    {
        Point m;
        const auto c = cell(e);
        for (int n : c) {
            m.x += nodes[static_cast<std::size_t>(n)].x;
            m.y += nodes[static_cast<std::size_t>(n)].y;
        }
        m.x /= static_cast<double>(c.size());
        m.y /= static_cast<double>(c.size());
        return m;
    }
};

/// Edges referenced by exactly one cell, as sorted node pairs.
inline std::vector<std::pair<int, int>> boundary_edges(const Mesh& mesh)
{
    std::map<std::pair<int, int>, int> count;
    for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
        const auto c = mesh.cell(e);
        for (std::size_t i = 0; i < c.size(); ++i) {
            int a = c[i];
            int b = c[(i + 1) % c.size()];
            if (a > b) {
                std::swap(a, b);
            }
            ++count[{a, b}];
        }
    }
    std::vector<std::pair<int, int>> out;
    for (const auto& [edge, n] : count) {
        if (n == 1) {
            out.push_back(edge);
        } else if (n != 2) {
            throw MeshError("non-manifold edge shared by more than two cells");
        }
    }
    return out;
}

namespace detail {

enum class Lattice { node_centred, element_centred };

class LatticeBuilder {
public:
    using Line = std::vector<int>;

    int add_node(double x, double y)
    {
        nodes.push_back({x, y});
        return static_cast<int>(nodes.size()) - 1;
    }

    void add_quad(int a, int b, int c, int d)
    {
        const std::array<int, 4> q{a, b, c, d};
        double area = 0.0;
        for (int i = 0; i < 4; ++i) {
            const Point& p = nodes[static_cast<std::size_t>(q[i])];
            const Point& r = nodes[static_cast<std::size_t>(q[(i + 1) % 4])];
            area += p.x * r.y - r.x * p.y;
        }
        if (area > 0.0) {
            connectivity.insert(connectivity.end(), {a, b, c, d});
        } else {
            connectivity.insert(connectivity.end(), {a, d, c, b});
        }
    }

    Line line_at(double y, const std::vector<double>& xs)
    {
        Line line;
        line.reserve(xs.size());
        for (double x : xs) {
            line.push_back(add_node(x, y));
        }
        return line;
    }

    Line copy_line(const Line& from, double y)
    {
        std::vector<double> xs;
        xs.reserve(from.size());
        for (int id : from) {
            xs.push_back(nodes[static_cast<std::size_t>(id)].x);
        }
        return line_at(y, xs);
    }

    void connect(const Line& lo, const Line& hi)
    {
        for (std::size_t i = 0; i + 1 < lo.size(); ++i) {
            add_quad(lo[i], lo[i + 1], hi[i + 1], hi[i]);
        }
    }

    /// 3:1 coarsening layer between `fine` and a new line at y_new. Intervals are
    /// grouped in threes from the right; leftovers at the left pass through.
    Line transition(const Line& fine, double y_new)
    {
        const std::size_t n = fine.size() - 1;
        const std::size_t groups = n / 3;
        const std::size_t left = n - 3 * groups;
        const double y0 = nodes[static_cast<std::size_t>(fine[0])].y;
        const double y_mid = y0 + (y_new - y0) / 3.0;
        auto x_of = [&](int id) { return nodes[static_cast<std::size_t>(id)].x; };

        Line coarse;
        for (std::size_t j = 0; j <= left; ++j) {
            coarse.push_back(add_node(x_of(fine[j]), y_new));
        }
        for (std::size_t k = 1; k <= groups; ++k) {
            coarse.push_back(add_node(x_of(fine[left + 3 * k]), y_new));
        }
        for (std::size_t j = 0; j < left; ++j) {
            add_quad(fine[j], fine[j + 1], coarse[j + 1], coarse[j]);
        }
        for (std::size_t k = 0; k < groups; ++k) {
            const int b0 = fine[left + 3 * k];
            const int b1 = fine[left + 3 * k + 1];
            const int b2 = fine[left + 3 * k + 2];
            const int b3 = fine[left + 3 * k + 3];
            const int t0 = coarse[left + k];
            const int t1 = coarse[left + k + 1];
            const int m1 = add_node(x_of(b1), y_mid);
            const int m2 = add_node(x_of(b2), y_mid);
            add_quad(b0, b1, m1, t0);
            add_quad(b1, b2, m2, m1);
            add_quad(b2, b3, t1, m2);
            add_quad(m1, m2, t1, t0);
        }
        return coarse;
    }

    /// Fill from `start` (at y_from) to y_to: 3:1 transitions while the coarse
    /// width stays below h_far, then geometrically graded rows.
    void grow(Line start, double y_from, double y_to, double h, double h_far)
    {
        const double dir = y_to > y_from ? 1.0 : -1.0;
        double remaining = std::abs(y_to - y_from);
        const double tiny = 1e-9 * h;
        if (remaining <= tiny) {
            return;
        }
        double y = y_from;
        double width = h;
        double dy_prev = h;
        Line current = std::move(start);
        while (3.0 * width <= h_far * (1.0 + 1e-9) && current.size() >= 4 && 3.0 * width < remaining - h) {
            const double ht = 3.0 * width;
            y += dir * ht;
            remaining -= ht;
            current = transition(current, y);
            width *= 3.0;
            dy_prev = ht;
        }
        std::vector<double> dys;
        double sum = 0.0;
        double d = dy_prev;
        while (sum < remaining - tiny) {
            d = std::min(d * 1.3, h_far);
            dys.push_back(d);
            sum += d;
        }
        // Drop the last row if it overshoots by more than half, then rescale.
        if (dys.size() > 1 && sum - remaining > 0.5 * dys.back()) {
            sum -= dys.back();
            dys.pop_back();
        }
        if (dys.empty()) {
            return;
        }
        const double scale = remaining / sum;
        for (std::size_t i = 0; i < dys.size(); ++i) {
            y += dir * dys[i] * scale;
            if (i + 1 == dys.size()) {
                y = y_to;
            }
            Line next = copy_line(current, y);
            connect(dir > 0 ? current : next, dir > 0 ? next : current);
            current = std::move(next);
        }
    }

    std::vector<Point> nodes;
    std::vector<int> connectivity;
};

inline Lattice lattice_for(CrackKind kind)
{
    return (kind == CrackKind::geo_t1 || kind == CrackKind::conforming_band) ? Lattice::element_centred
                                                                              : Lattice::node_centred;
}

/// Quadrilateral SENT lattice without any crack treatment.
inline Mesh build_quad_lattice(const SentGeometry& g, Lattice lattice)
{
    const double L = g.side_length;
    const double h = g.h_fine;
    const double yc = g.crack_y;
    const double eps = 1e-9 * h;
    const int nx = static_cast<int>(std::lround(L / h));
    std::vector<double> xs(static_cast<std::size_t>(nx) + 1);
    for (int i = 0; i <= nx; ++i) {
        xs[static_cast<std::size_t>(i)] = (i == nx) ? L : i * h;
    }

    // Band node rows, clipped to the specimen.
    std::vector<double> ys;
    const int k_band = std::max(1, static_cast<int>(std::lround(g.band_half_height / h)));
    if (lattice == Lattice::node_centred) {
        for (int k = -k_band; k <= k_band; ++k) {
            const double y = yc + k * h;
            if (y >= -eps && y <= L + eps) {
                ys.push_back(std::clamp(y, 0.0, L));
            }
        }
    } else {
        for (int j = -k_band - 1; j <= k_band; ++j) {
            const double y = yc + (j + 0.5) * h;
            if (y >= -eps && y <= L + eps) {
                ys.push_back(std::clamp(y, 0.0, L));
            }
        }
    }
    if (ys.size() < 2) {
        throw MeshError("refined band holds no element row");
    }

    LatticeBuilder b;
    std::vector<LatticeBuilder::Line> band;
    band.reserve(ys.size());
    for (double y : ys) {
        band.push_back(b.line_at(y, xs));
    }
    for (std::size_t r = 0; r + 1 < band.size(); ++r) {
        b.connect(band[r], band[r + 1]);
    }
    b.grow(band.back(), ys.back(), L, h, g.h_far);
    b.grow(band.front(), ys.front(), 0.0, h, g.h_far);

    Mesh mesh;
    mesh.cell_type = CellType::quad4;
    mesh.nodes = std::move(b.nodes);
    mesh.connectivity = std::move(b.connectivity);
    mesh.h_fine = h;
    return mesh;
}

/// Random perturbation of interior nodes (boundary nodes slide along their edge),
/// followed by a random-diagonal split into triangles.
inline Mesh perturb_and_triangulate(const Mesh& quads, const std::vector<char>& frozen, double L, std::uint64_t seed)
{
    const std::size_t nn = quads.num_nodes();
    std::vector<double> min_edge(nn, std::numeric_limits<double>::max());
    for (std::size_t e = 0; e < quads.num_cells(); ++e) {
        const auto c = quads.cell(e);
        for (std::size_t i = 0; i < 4; ++i) {
            const auto a = static_cast<std::size_t>(c[i]);
            const auto b = static_cast<std::size_t>(c[(i + 1) % 4]);
            const double len = distance(quads.nodes[a], quads.nodes[b]);
            min_edge[a] = std::min(min_edge[a], len);
            min_edge[b] = std::min(min_edge[b], len);
        }
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double tol = 1e-9 * L;
    Mesh out = quads;
    for (std::size_t n = 0; n < nn; ++n) {
        const double dx = unit(rng);
        const double dy = unit(rng);
        if (frozen[n]) {
            continue;
        }
        const Point p = quads.nodes[n];
        const bool on_x = p.x < tol || p.x > L - tol;
        const bool on_y = p.y < tol || p.y > L - tol;
        const double r = 0.2 * min_edge[n];
        out.nodes[n].x = on_x ? p.x : p.x + r * dx;
        out.nodes[n].y = on_y ? p.y : p.y + r * dy;
    }

    std::bernoulli_distribution coin(0.5);
    Mesh tri;
    tri.cell_type = CellType::tri3;
    tri.nodes = out.nodes;
    tri.h_fine = quads.h_fine;
    auto area = [&](int a, int b, int c) {
        const Point& p = tri.nodes[static_cast<std::size_t>(a)];
        const Point& q = tri.nodes[static_cast<std::size_t>(b)];
        const Point& r = tri.nodes[static_cast<std::size_t>(c)];
        return 0.5 * ((q.x - p.x) * (r.y - p.y) - (r.x - p.x) * (q.y - p.y));
    };
    for (std::size_t e = 0; e < quads.num_cells(); ++e) {
        const auto c = quads.cell(e);
        bool diag02 = coin(rng);
        for (int attempt = 0; attempt < 2; ++attempt) {
            const bool ok = diag02 ? (area(c[0], c[1], c[2]) > 0 && area(c[0], c[2], c[3]) > 0)
                                   : (area(c[0], c[1], c[3]) > 0 && area(c[1], c[2], c[3]) > 0);
            if (ok) {
                break;
            }
            diag02 = !diag02;
        }
        if (diag02) {
            tri.connectivity.insert(tri.connectivity.end(), {c[0], c[1], c[2], c[0], c[2], c[3]});
        } else {
            tri.connectivity.insert(tri.connectivity.end(), {c[0], c[1], c[3], c[1], c[2], c[3]});
        }
    }
    for (std::size_t e = 0; e < tri.num_cells(); ++e) {
        if (!(tri.cell_area(e) > 0.0)) {
            throw MeshError("perturbed triangulation produced an inverted cell");
        }
    }
    return tri;
}

inline std::vector<int> nodes_where(const Mesh& mesh, auto&& predicate)
{
    std::vector<int> out;
    for (std::size_t n = 0; n < mesh.num_nodes(); ++n) {
        if (predicate(mesh.nodes[n])) {
            out.push_back(static_cast<int>(n));
        }
    }
    return out;
}

} // namespace detail

/// Checks that the cells flagged as crack band form one row of elements lying
/// between y_c - h/2 and y_c + h/2 and jointly covering the crack segment.
inline void verify_crack_band_row(const Mesh& mesh, const SentGeometry& g)
{
    const double h = g.h_fine;
    const double tol = 1e-6 * h;
    const auto& cells = mesh.element_set("crack_band");
    if (cells.empty()) {
        throw MeshError("no element row is crossed by the crack");
    }
    double covered = 0.0;
    for (int e : cells) {
        for (int n : mesh.cell(static_cast<std::size_t>(e))) {
            const double dy = std::abs(mesh.nodes[static_cast<std::size_t>(n)].y - g.crack_y);
            if (std::abs(dy - 0.5 * h) > tol) {
                throw MeshError("crack band cells are not a single one-element-wide row");
            }
        }
        covered += mesh.cell_area(static_cast<std::size_t>(e));
    }
    if (std::abs(covered - g.crack_length * h) > 1e-6 * g.crack_length * h) {
        throw MeshError("crack band row does not cover the crack segment");
    }
}

/// SENT mesh: bilinear quads when structured, perturbed linear triangles otherwise.
/// The element row (or node row) carrying the crack stays unperturbed for x <= a0.
inline Mesh build_sent_mesh(const SentGeometry& g, CrackKind kind, bool structured, std::uint64_t seed = 1)
{
    g.validate(kind, structured);
    const double L = g.side_length;
    const double h = g.h_fine;
    const double yc = g.crack_y;
    const double a0 = g.crack_length;
    const double tol = 1e-6 * h;
    const auto lattice = detail::lattice_for(kind);

    Mesh mesh = detail::build_quad_lattice(g, lattice);
    if (!structured) {
        std::vector<char> frozen(mesh.num_nodes(), 0);
        for (std::size_t n = 0; n < mesh.num_nodes(); ++n) {
            const Point& p = mesh.nodes[n];
            if (kind == CrackKind::none || p.x > a0 + tol) {
                continue;
            }
            if (lattice == detail::Lattice::node_centred) {
                frozen[n] = std::abs(p.y - yc) < tol;
            } else {
                frozen[n] = std::abs(std::abs(p.y - yc) - 0.5 * h) < tol;
            }
        }
        mesh = detail::perturb_and_triangulate(mesh, frozen, L, seed);
    }
    mesh.crack_kind = kind;

    auto keep_cells = [&](auto&& keep) {
        std::vector<int> conn;
        for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
            if (keep(e)) {
                const auto c = mesh.cell(e);
                conn.insert(conn.end(), c.begin(), c.end());
            }
        }
        mesh.connectivity = std::move(conn);
    };

    switch (kind) {
    case CrackKind::none:
        break;
    case CrackKind::geo_t0: {
        std::map<int, int> dup;
        const std::size_t original_nodes = mesh.num_nodes();
        for (std::size_t n = 0; n < original_nodes; ++n) {
            const Point p = mesh.nodes[n];
            if (std::abs(p.y - yc) < tol && p.x < a0 - tol) {
                mesh.nodes.push_back(p);
                const int d = static_cast<int>(mesh.nodes.size()) - 1;
                dup[static_cast<int>(n)] = d;
                mesh.duplicated_pairs.emplace_back(static_cast<int>(n), d);
            }
        }
        const int npc = mesh.nodes_per_cell();
        for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
            if (mesh.cell_centroid(e).y >= yc) {
                continue;
            }
            for (int i = 0; i < npc; ++i) {
                int& id = mesh.connectivity[e * static_cast<std::size_t>(npc) + static_cast<std::size_t>(i)];
                auto it = dup.find(id);
                if (it != dup.end()) {
                    id = it->second;
                }
            }
        }
        std::vector<int> faces;
        for (const auto& [o, d] : mesh.duplicated_pairs) {
            faces.push_back(o);
            faces.push_back(d);
        }
        std::sort(faces.begin(), faces.end());
        mesh.node_sets["crack_faces"] = faces;
        mesh.node_sets["crack_tip"] = detail::nodes_where(mesh, [&](const Point& p) {
            return std::abs(p.y - yc) < tol && std::abs(p.x - a0) < tol;
        });
        break;
    }
    case CrackKind::geo_t1: {
        const std::size_t before = mesh.num_cells();
        keep_cells([&](std::size_t e) {
            const Point c = mesh.cell_centroid(e);
            return !(std::abs(c.y - yc) < 0.5 * h && c.x < a0);
        });
        if (before == mesh.num_cells()) {
            throw MeshError("slit removal found no element row along the crack");
        }
        mesh.node_sets["crack_faces"] = detail::nodes_where(mesh, [&](const Point& p) {
            return std::abs(std::abs(p.y - yc) - 0.5 * h) < tol && p.x < a0 + tol;
        });
        mesh.node_sets["crack_tip"] = detail::nodes_where(mesh, [&](const Point& p) {
            return std::abs(std::abs(p.y - yc) - 0.5 * h) < tol && std::abs(p.x - a0) < tol;
        });
        break;
    }
    case CrackKind::conforming_line: {
        mesh.node_sets["crack_line"] = detail::nodes_where(mesh, [&](const Point& p) {
            return std::abs(p.y - yc) < tol && p.x < a0 + tol;
        });
        mesh.node_sets["crack_tip"] = detail::nodes_where(mesh, [&](const Point& p) {
            return std::abs(p.y - yc) < tol && std::abs(p.x - a0) < tol;
        });
        break;
    }
    case CrackKind::conforming_band: {
        std::vector<int> cells;
        std::set<int> band_nodes;
        for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
            const Point c = mesh.cell_centroid(e);
            if (std::abs(c.y - yc) < 0.5 * h && c.x < a0) {
                cells.push_back(static_cast<int>(e));
                for (int n : mesh.cell(e)) {
                    band_nodes.insert(n);
                }
            }
        }
        mesh.element_sets["crack_band"] = cells;
        mesh.node_sets["crack_band_nodes"] = std::vector<int>(band_nodes.begin(), band_nodes.end());
        mesh.node_sets["crack_tip"] = detail::nodes_where(mesh, [&](const Point& p) {
            return std::abs(std::abs(p.y - yc) - 0.5 * h) < tol && std::abs(p.x - a0) < tol;
        });
        verify_crack_band_row(mesh, g);
        break;
    }
    }

    const double btol = 1e-9 * L;
    mesh.node_sets["top"] = detail::nodes_where(mesh, [&](const Point& p) { return p.y > L - btol; });
    mesh.node_sets["bottom"] = detail::nodes_where(mesh, [&](const Point& p) { return p.y < btol; });
    mesh.node_sets["left"] = detail::nodes_where(mesh, [&](const Point& p) { return p.x < btol; });
    mesh.node_sets["right"] = detail::nodes_where(mesh, [&](const Point& p) { return p.x > L - btol; });
    for (const char* name : {"crack_faces", "crack_tip", "crack_line", "crack_band_nodes"}) {
        mesh.node_sets.try_emplace(name);
    }
    mesh.element_sets.try_emplace("crack_band");

    for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
        if (!(mesh.cell_area(e) > 0.0)) {
            throw MeshError("mesh generation produced a non-positive cell");
        }
    }
    return mesh;
}

} // namespace pfcrack

#endif
