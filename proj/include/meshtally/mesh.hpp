#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "meshtally/vec3.hpp"

namespace meshtally {

using ElementId = std::int32_t;
using VertexId = std::int32_t;

inline constexpr ElementId kNoElement = -1;

// Neighbor across one local face. Local face i is opposite local vertex i.
struct FaceNeighbor {
    ElementId element = kNoElement;  // kNoElement on the domain boundary
    std::int8_t face = -1;           // neighbor's local id of the shared face

    bool is_boundary() const { return element == kNoElement; }
    friend bool operator==(const FaceNeighbor&, const FaceNeighbor&) = default;
};

struct BoundingBox {
    Vec3 lo;
    Vec3 hi;

    bool contains(const Vec3& p, double tol = 0.0) const {
        return p.x >= lo.x - tol && p.x <= hi.x + tol && p.y >= lo.y - tol && p.y <= hi.y + tol &&
               p.z >= lo.z - tol && p.z <= hi.z + tol;
    }
};

/// Tetrahedral mesh with face adjacency.
///
/// Built by `make_tet_mesh` / `build_cube_mesh` / `read_tet_mesh`, which orient every
/// element positively and fill the derived arrays. Treated as immutable afterwards:
/// all kernels take it by const reference and read it concurrently without locks.
/// The fields are public so diagnostics (`validate`) can inspect hand-built meshes.
struct TetMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<VertexId, 4>> elements;
    std::vector<std::array<FaceNeighbor, 4>> adjacency;
    std::vector<double> volumes;
    std::vector<Vec3> centroids;
    BoundingBox bounding_box;

    std::size_t num_elements() const { return elements.size(); }
    std::size_t num_vertices() const { return vertices.size(); }

    // The four corner points of an element, in local vertex order.
    std::array<Vec3, 4> corners(ElementId e) const {
        const auto& v = elements[static_cast<std::size_t>(e)];
        return {vertices[v[0]], vertices[v[1]], vertices[v[2]], vertices[v[3]]};
    }

    const FaceNeighbor& neighbor(ElementId e, int face) const {
        return adjacency[static_cast<std::size_t>(e)][static_cast<std::size_t>(face)];
    }
};

// Local vertex ids of local face f (the three vertices other than f).
inline constexpr std::array<std::array<int, 3>, 4> kFaceVertices{{{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}}};

/// Assembles a mesh from raw connectivity: flips negatively oriented elements, rejects
/// degenerate ones, and computes adjacency, volumes, centroids and the bounding box.
/// Throws MeshError on degenerate or non-conforming input.
TetMesh make_tet_mesh(std::vector<Vec3> vertices, std::vector<std::array<VertexId, 4>> elements);

/// Axis-aligned cube [0, edge_length]^3 split into n^3 hexahedra of six tetrahedra each.
TetMesh build_cube_mesh(int n, double edge_length);

/// Face adjacency from connectivity alone. Throws MeshError if a face is shared by more
/// than two elements or an element is listed twice.
std::vector<std::array<FaceNeighbor, 4>> build_adjacency(std::span<const std::array<VertexId, 4>> elements,
                                                        std::size_t vertex_count);

double element_volume(const TetMesh& mesh, ElementId e);

std::size_t count_boundary_faces(const TetMesh& mesh);

/// Invariant check. Returns one human-readable line per violation; empty means valid.
std::vector<std::string> validate(const TetMesh& mesh);

// Plain-text format: "tetmesh <nverts> <nelems>", vertex lines (x y z), element lines
// (four zero-based vertex ids).
TetMesh read_tet_mesh(std::istream& in);
TetMesh read_tet_mesh(const std::string& path);
void write_tet_mesh(const TetMesh& mesh, std::ostream& out);
void write_tet_mesh(const TetMesh& mesh, const std::string& path);

} // namespace meshtally
