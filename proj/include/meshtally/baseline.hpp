#pragma once

#include <cstdint>
#include <vector>

#include "meshtally/mesh.hpp"
#include "meshtally/vec3.hpp"

namespace meshtally {

/// Spatial k-d tree over element bounding boxes for point location. Each node splits its
/// cell at the median element centroid along the cell's longest axis; an element is
/// stored in every leaf whose cell its bounding box touches.
class KdTree {
public:
    static constexpr std::size_t kLeafSize = 8;

    KdTree(const TetMesh& mesh, std::size_t leaf_size = kLeafSize);

    /// Elements stored in the leaf whose cell holds `p`; empty outside the mesh box.
    /// Returns a fresh vector on every call.
    std::vector<ElementId> candidates(const Vec3& p) const;

    /// Lowest-numbered element containing `p` (kNoElement if none).
    ElementId locate(const Vec3& p) const;

    /// Element containing `p` into which the ray p + t*dir runs furthest; `exclude` is
    /// skipped. Returns kNoElement when no element contains a positive length of the ray.
    ElementId locate_along(const Vec3& p, const Vec3& dir, ElementId exclude = kNoElement) const;

    std::size_t num_nodes() const { return nodes_.size(); }
    std::size_t num_leaves() const;
    std::size_t max_leaf_size() const;
    std::size_t stored_items() const { return items_.size(); }

    const TetMesh& mesh() const { return *mesh_; }

private:
    struct Node {
        BoundingBox cell;
        int axis = -1;  // -1 marks a leaf
        double split = 0.0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::uint32_t first = 0;
        std::uint32_t count = 0;
    };

    std::int32_t build(std::vector<ElementId>& elems, const BoundingBox& cell, int depth);
    const Node& leaf_for(const Vec3& p) const;

    const TetMesh* mesh_;
    std::size_t leaf_size_;
    std::vector<BoundingBox> element_boxes_;
    std::vector<Node> nodes_;
    std::vector<ElementId> items_;
};

KdTree build_kdtree(const TetMesh& mesh);

struct Segment {
    ElementId element = kNoElement;
    double length = 0.0;
};

/// Per-element pieces of one straight step, produced by baseline_trace.
struct SegmentList {
    std::vector<Segment> segments;
    bool reached_boundary = false;
    Vec3 end_point;  // destination, or the boundary exit point

    double total_length() const {
        double s = 0.0;
        for (const Segment& seg : segments) s += seg.length;
        return s;
    }
};

/// Comparison path that mimics a relocalizing tally: every segment start is located with
/// the k-d tree (never through adjacency) and each piece is appended to a freshly grown
/// vector, so the call allocates at least once per segment. Throws GeometryError if the
/// origin cannot be located.
SegmentList baseline_trace(const TetMesh& mesh, const KdTree& tree, const Vec3& origin, const Vec3& dest);

} // namespace meshtally
