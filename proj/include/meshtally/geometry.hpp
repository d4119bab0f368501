#pragma once

#include <array>
#include <optional>

#include "meshtally/mesh.hpp"
#include "meshtally/vec3.hpp"

namespace meshtally {

// Slack on barycentric coordinates when deciding containment or face hits.
inline constexpr double kBarycentricTol = 1e-10;
// Fraction of the ray length below which a face hit counts as "at the origin".
inline constexpr double kRelativeStartTol = 1e-12;

using Tet = std::array<Vec3, 4>;
using Barycentric = std::array<double, 4>;

/// Barycentric coordinates of `p` with respect to `tet`; coordinate i belongs to vertex i
/// (and vanishes on local face i). Throws GeometryError for a degenerate tet.
Barycentric barycentric_coords(const Tet& tet, const Vec3& p);

bool point_in_tet(const Tet& tet, const Vec3& p, double tol = kBarycentricTol);

struct RayHit {
    double t = 0.0;  // distance along the ray (cm)
    Vec3 point;
};

/// Intersection of the ray origin + t*direction with triangle (a, b, c), found from the
/// 3x3 system origin + t*d = a + u*(b - a) + w*(c - a). Returns a hit only for
/// t in (1e-12 * max_t, max_t] with (u, w) inside the triangle up to kBarycentricTol.
/// Rays parallel to the triangle's plane return nothing.
std::optional<RayHit> ray_face_intersection(const Vec3& origin, const Vec3& direction, const Vec3& a,
                                            const Vec3& b, const Vec3& c, double max_t);

enum class ExitKind : std::int8_t { ReachedDestination, ExitFace, Stuck };

struct ExitResult {
    ExitKind kind = ExitKind::Stuck;
    int face = -1;    // local face id, valid for ExitFace
    double t = 0.0;   // fraction of the origin->dest segment covered, in [0, 1]
    Vec3 point;       // exit point, or the destination
};

inline constexpr int kNoFace = -1;

/// One step of the adjacency walk: where does the segment origin->dest leave `elem`?
/// Candidate faces exclude `entry_face`; among hits closer than 1e-12 of the segment
/// length to each other the lowest face id wins.
ExitResult find_exit_face(const TetMesh& mesh, ElementId elem, const Vec3& origin, const Vec3& dest,
                          int entry_face = kNoFace);

} // namespace meshtally
