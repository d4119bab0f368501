#include "meshtally/baseline.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "meshtally/errors.hpp"
#include "meshtally/geometry.hpp"
#include "meshtally/search.hpp"

namespace meshtally {

namespace {

constexpr int kMaxDepth = 48;

BoundingBox element_box(const TetMesh& mesh, ElementId e) {
    const auto p = mesh.corners(e);
    BoundingBox box{p[0], p[0]};
    for (const Vec3& v : p) {
        for (int k = 0; k < 3; ++k) {
            box.lo[k] = std::min(box.lo[k], v[k]);
            box.hi[k] = std::max(box.hi[k], v[k]);
        }
    }
    return box;
}

// How far the ray p + t*dir stays inside the element; 0 if it leaves immediately.
double inside_run(const Tet& tet, const Vec3& p, const Vec3& dir) {
    const Barycentric at = barycentric_coords(tet, p);
    const Barycentric ahead = barycentric_coords(tet, p + dir);
    double run = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 4; ++i) {
        const double rate = ahead[i] - at[i];
        if (rate < 0.0) run = std::min(run, std::max(at[i], 0.0) / -rate);
    }
    return run;
}

} // namespace

KdTree::KdTree(const TetMesh& mesh, std::size_t leaf_size) : mesh_(&mesh), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
    const std::size_t ne = mesh.num_elements();
    element_boxes_.reserve(ne);
    for (std::size_t e = 0; e < ne; ++e) element_boxes_.push_back(element_box(mesh, static_cast<ElementId>(e)));
    std::vector<ElementId> all(ne);
    for (std::size_t e = 0; e < ne; ++e) all[e] = static_cast<ElementId>(e);
    build(all, mesh.bounding_box, 0);
}

std::int32_t KdTree::build(std::vector<ElementId>& elems, const BoundingBox& cell, int depth) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(Node{cell});

    auto make_leaf = [&] {
        std::sort(elems.begin(), elems.end());
        nodes_[id].first = static_cast<std::uint32_t>(items_.size());
        nodes_[id].count = static_cast<std::uint32_t>(elems.size());
        items_.insert(items_.end(), elems.begin(), elems.end());
        return id;
    };
    if (elems.size() <= leaf_size_ || depth >= kMaxDepth) return make_leaf();

    const Vec3 extent = cell.hi - cell.lo;
    int axis = 0;
    if (extent.y > extent[axis]) axis = 1;
    if (extent.z > extent[axis]) axis = 2;

    std::vector<double> keys;
    keys.reserve(elems.size());
    for (ElementId e : elems) keys.push_back(mesh_->centroids[e][axis]);
    auto mid = keys.begin() + static_cast<std::ptrdiff_t>(keys.size() / 2);
    std::nth_element(keys.begin(), mid, keys.end());
    const double split = *mid;

    std::vector<ElementId> left, right;
    for (ElementId e : elems) {
        const BoundingBox& b = element_boxes_[e];
        if (b.lo[axis] <= split) left.push_back(e);
        if (b.hi[axis] >= split) right.push_back(e);
    }
    if (left.size() == elems.size() || right.size() == elems.size()) return make_leaf();

    BoundingBox left_cell = cell;
    BoundingBox right_cell = cell;
    left_cell.hi[axis] = split;
    right_cell.lo[axis] = split;
    elems.clear();
    elems.shrink_to_fit();

    nodes_[id].axis = axis;
    nodes_[id].split = split;
    const std::int32_t l = build(left, left_cell, depth + 1);
    const std::int32_t r = build(right, right_cell, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
}

const KdTree::Node& KdTree::leaf_for(const Vec3& p) const {
    const Node* node = &nodes_.front();
    while (node->axis >= 0) node = &nodes_[p[node->axis] <= node->split ? node->left : node->right];
    return *node;
}

std::vector<ElementId> KdTree::candidates(const Vec3& p) const {
    if (!mesh_->bounding_box.contains(p, kBarycentricTol)) return {};
    const Node& leaf = leaf_for(p);
    return {items_.begin() + leaf.first, items_.begin() + leaf.first + leaf.count};
}

ElementId KdTree::locate(const Vec3& p) const {
    for (ElementId e : candidates(p))
        if (point_in_tet(mesh_->corners(e), p)) return e;
    return kNoElement;
}

ElementId KdTree::locate_along(const Vec3& p, const Vec3& dir, ElementId exclude) const {
    ElementId best = kNoElement;
    double best_run = 0.0;
    for (ElementId e : candidates(p)) {
        if (e == exclude) continue;
        const Tet tet = mesh_->corners(e);
        if (!point_in_tet(tet, p)) continue;
        const double run = inside_run(tet, p, dir);
        if (run > best_run) {
            best_run = run;
            best = e;
        }
    }
    return best;
}

std::size_t KdTree::num_leaves() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.axis < 0; }));
}

std::size_t KdTree::max_leaf_size() const {
    std::size_t m = 0;
    for (const Node& n : nodes_)
        if (n.axis < 0) m = std::max<std::size_t>(m, n.count);
    return m;
}

KdTree build_kdtree(const TetMesh& mesh) { return KdTree(mesh); }

SegmentList baseline_trace(const TetMesh& mesh, const KdTree& tree, const Vec3& origin, const Vec3& dest) {
    SegmentList out;
    const Vec3 dir = unit_direction(origin, dest);
    Vec3 p = origin;
    ElementId previous = kNoElement;
    bool first = true;

    constexpr int kMaxSteps = 10'000'000;
    for (int step = 0; step < kMaxSteps; ++step) {
        const ElementId elem = tree.locate_along(p, dir, previous);
        if (elem == kNoElement) {
            if (first && tree.locate(p) == kNoElement) throw GeometryError("baseline trace origin is outside the mesh");
            out.reached_boundary = true;
            out.end_point = p;
            return out;
        }

        int entry = kNoFace;
        if (!first) {
            const Barycentric l = barycentric_coords(mesh.corners(elem), p);
            const int f = static_cast<int>(std::min_element(l.begin(), l.end()) - l.begin());
            if (l[f] <= kBarycentricTol) entry = f;
        }
        first = false;

        const ExitResult exit = find_exit_face(mesh, elem, p, dest, entry);
        if (exit.kind == ExitKind::ReachedDestination) {
            out.segments.push_back({elem, distance(p, dest)});
            out.end_point = dest;
            return out;
        }
        if (exit.kind == ExitKind::ExitFace) {
            out.segments.push_back({elem, distance(p, exit.point)});
            p = exit.point;
            previous = elem;
            continue;
        }
        if (point_in_tet(mesh.corners(elem), dest, 10.0 * kBarycentricTol)) {
            out.segments.push_back({elem, distance(p, dest)});
            out.end_point = dest;
            return out;
        }
        const Vec3 pushed = p + dir * kStuckNudge;
        out.segments.push_back({elem, distance(p, pushed)});
        p = pushed;
        previous = kNoElement;
    }
    throw GeometryError("baseline trace did not terminate");
}

} // namespace meshtally
