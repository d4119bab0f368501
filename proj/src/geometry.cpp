#include "meshtally/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "meshtally/errors.hpp"

namespace meshtally {

Barycentric barycentric_coords(const Tet& tet, const Vec3& p) {
    const Vec3 a = tet[1] - tet[0];
    const Vec3 b = tet[2] - tet[0];
    const Vec3 c = tet[3] - tet[0];
    const double det = triple(a, b, c);
    const double scale = std::max({dot(a, a), dot(b, b), dot(c, c)});
    if (!(std::abs(det) > 1e-14 * scale * std::sqrt(scale))) throw GeometryError("degenerate tetrahedron");

    const Vec3 r = p - tet[0];
    const double inv = 1.0 / det;
    const double l1 = triple(r, b, c) * inv;
    const double l2 = triple(a, r, c) * inv;
    const double l3 = triple(a, b, r) * inv;
    return {1.0 - l1 - l2 - l3, l1, l2, l3};
}

bool point_in_tet(const Tet& tet, const Vec3& p, double tol) {
    const Barycentric l = barycentric_coords(tet, p);
    return l[0] >= -tol && l[1] >= -tol && l[2] >= -tol && l[3] >= -tol;
}

std::optional<RayHit> ray_face_intersection(const Vec3& origin, const Vec3& direction, const Vec3& a,
                                            const Vec3& b, const Vec3& c, double max_t) {
    const Vec3 e1 = b - a;
    const Vec3 e2 = c - a;
    const Vec3 normal = cross(e1, e2);
    const double det = dot(direction, normal);
    if (!(std::abs(det) > 1e-12 * norm(normal))) return std::nullopt;

    // Cramer's rule on [d, -e1, -e2] [t u w]^T = a - origin.
    const Vec3 r = a - origin;
    const double inv = 1.0 / det;
    const double t = dot(r, normal) * inv;
    if (!(t > kRelativeStartTol * max_t) || t > max_t) return std::nullopt;
    const double u = -triple(direction, r, e2) * inv;
    const double w = -triple(direction, e1, r) * inv;
    if (u < -kBarycentricTol || w < -kBarycentricTol || u + w > 1.0 + kBarycentricTol) return std::nullopt;
    return RayHit{t, origin + direction * t};
}

ExitResult find_exit_face(const TetMesh& mesh, ElementId elem, const Vec3& origin, const Vec3& dest,
                          int entry_face) {
    const Tet tet = mesh.corners(elem);
    const Barycentric at_dest = barycentric_coords(tet, dest);
    if (at_dest[0] >= -kBarycentricTol && at_dest[1] >= -kBarycentricTol && at_dest[2] >= -kBarycentricTol &&
        at_dest[3] >= -kBarycentricTol) {
        return ExitResult{ExitKind::ReachedDestination, kNoFace, 1.0, dest};
    }

    const double length = distance(origin, dest);
    if (!(length > 0.0)) return ExitResult{ExitKind::Stuck, kNoFace, 0.0, origin};
    const Vec3 dir = unit_direction(origin, dest);
    const double tie = kRelativeStartTol * length;

    ExitResult best{ExitKind::Stuck, kNoFace, 0.0, origin};
    double best_t = 0.0;
    for (int f = 0; f < 4; ++f) {
        if (f == entry_face) continue;
        const auto& fv = kFaceVertices[f];
        const auto hit = ray_face_intersection(origin, dir, tet[fv[0]], tet[fv[1]], tet[fv[2]], length);
        if (!hit) continue;
        if (best.kind == ExitKind::Stuck || hit->t < best_t - tie) {
            best_t = hit->t;
            best = ExitResult{ExitKind::ExitFace, f, 0.0, hit->point};
        }
    }
    if (best.kind == ExitKind::ExitFace) best.t = std::clamp(best_t / length, 0.0, 1.0);
    return best;
}

} // namespace meshtally
