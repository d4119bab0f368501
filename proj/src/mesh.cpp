#include "meshtally/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "meshtally/errors.hpp"

namespace meshtally {

namespace {

double signed_volume6(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    return triple(b - a, c - a, d - a);
}

double max_edge_length(const std::array<Vec3, 4>& p) {
    double longest = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) longest = std::max(longest, distance(p[i], p[j]));
    return longest;
}

// Relative to the element's own size so the check is scale free.
bool is_degenerate(const std::array<Vec3, 4>& p) {
    const double len = max_edge_length(p);
    if (len == 0.0) return true;
    const double vol6 = std::abs(signed_volume6(p[0], p[1], p[2], p[3]));
    return vol6 <= 1e-12 * len * len * len;
}

struct FaceKey {
    std::array<VertexId, 3> verts;
    ElementId element;
    std::int8_t face;
};

} // namespace

std::vector<std::array<FaceNeighbor, 4>> build_adjacency(std::span<const std::array<VertexId, 4>> elements,
                                                        std::size_t vertex_count) {
    const std::size_t ne = elements.size();

    std::vector<std::array<VertexId, 4>> sorted_elems(elements.begin(), elements.end());
    for (std::size_t e = 0; e < ne; ++e) {
        for (VertexId v : elements[e]) {
            if (v < 0 || static_cast<std::size_t>(v) >= vertex_count) {
                throw MeshError("element " + std::to_string(e) + " references vertex " + std::to_string(v) +
                                " outside [0, " + std::to_string(vertex_count) + ")");
            }
        }
        std::sort(sorted_elems[e].begin(), sorted_elems[e].end());
    }
    {
        auto dup = sorted_elems;
        std::sort(dup.begin(), dup.end());
        if (std::adjacent_find(dup.begin(), dup.end()) != dup.end()) throw MeshError("duplicated element in mesh");
    }

    std::vector<FaceKey> faces;
    faces.reserve(4 * ne);
    for (std::size_t e = 0; e < ne; ++e) {
        for (int f = 0; f < 4; ++f) {
            FaceKey key{};
            for (int k = 0; k < 3; ++k) key.verts[k] = elements[e][kFaceVertices[f][k]];
            std::sort(key.verts.begin(), key.verts.end());
            key.element = static_cast<ElementId>(e);
            key.face = static_cast<std::int8_t>(f);
            faces.push_back(key);
        }
    }
    std::sort(faces.begin(), faces.end(), [](const FaceKey& a, const FaceKey& b) {
        if (a.verts != b.verts) return a.verts < b.verts;
        return a.element < b.element;
    });

    std::vector<std::array<FaceNeighbor, 4>> adjacency(ne);
    std::size_t i = 0;
    while (i < faces.size()) {
        std::size_t j = i + 1;
        while (j < faces.size() && faces[j].verts == faces[i].verts) ++j;
        const std::size_t users = j - i;
        if (users > 2) {
            throw MeshError("face (" + std::to_string(faces[i].verts[0]) + "," + std::to_string(faces[i].verts[1]) +
                            "," + std::to_string(faces[i].verts[2]) + ") shared by " + std::to_string(users) +
                            " elements");
        }
        if (users == 2) {
            const FaceKey& a = faces[i];
            const FaceKey& b = faces[i + 1];
            adjacency[a.element][a.face] = FaceNeighbor{b.element, b.face};
            adjacency[b.element][b.face] = FaceNeighbor{a.element, a.face};
        }
        i = j;
    }
    return adjacency;
}

TetMesh make_tet_mesh(std::vector<Vec3> vertices, std::vector<std::array<VertexId, 4>> elements) {
    if (elements.empty()) throw MeshError("mesh has no elements");

    TetMesh mesh;
    mesh.vertices = std::move(vertices);
    mesh.elements = std::move(elements);
    const std::size_t nv = mesh.vertices.size();
    const std::size_t ne = mesh.elements.size();

    mesh.volumes.resize(ne);
    mesh.centroids.resize(ne);
    for (std::size_t e = 0; e < ne; ++e) {
        auto& conn = mesh.elements[e];
        for (VertexId v : conn) {
            if (v < 0 || static_cast<std::size_t>(v) >= nv)
                throw MeshError("element " + std::to_string(e) + " references missing vertex " + std::to_string(v));
        }
        auto p = mesh.corners(static_cast<ElementId>(e));
        if (is_degenerate(p)) throw MeshError("element " + std::to_string(e) + " is degenerate (zero volume)");
        double vol6 = signed_volume6(p[0], p[1], p[2], p[3]);
        if (vol6 < 0.0) {
            std::swap(conn[2], conn[3]);
            vol6 = -vol6;
            std::swap(p[2], p[3]);
        }
        mesh.volumes[e] = vol6 / 6.0;
        mesh.centroids[e] = (p[0] + p[1] + p[2] + p[3]) * 0.25;
    }

    mesh.adjacency = build_adjacency(mesh.elements, nv);

    BoundingBox box{mesh.vertices.front(), mesh.vertices.front()};
    for (const Vec3& v : mesh.vertices) {
        for (int k = 0; k < 3; ++k) {
            box.lo[k] = std::min(box.lo[k], v[k]);
            box.hi[k] = std::max(box.hi[k], v[k]);
        }
    }
    mesh.bounding_box = box;
    return mesh;
}

TetMesh build_cube_mesh(int n, double edge_length) {
    if (n < 1) throw ParameterError("cube mesh needs n >= 1, got " + std::to_string(n));
    if (!(edge_length > 0.0) || !std::isfinite(edge_length))
        throw ParameterError("cube mesh needs a positive edge length");

    const int np = n + 1;
    std::vector<Vec3> vertices;
    vertices.reserve(static_cast<std::size_t>(np) * np * np);
    auto coord = [&](int i) { return edge_length * static_cast<double>(i) / static_cast<double>(n); };
    for (int k = 0; k < np; ++k)
        for (int j = 0; j < np; ++j)
            for (int i = 0; i < np; ++i) vertices.push_back({coord(i), coord(j), coord(k)});

    auto vid = [np](int i, int j, int k) { return static_cast<VertexId>(i + np * (j + np * k)); };

    // Kuhn split: every tet walks from the cell's low corner to its high corner one axis
    // at a time. The same six axis orders in every cell make neighboring faces match.
    static constexpr std::array<std::array<int, 3>, 6> kAxisOrders{
        {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};

    std::vector<std::array<VertexId, 4>> elements;
    elements.reserve(static_cast<std::size_t>(6) * n * n * n);
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                for (const auto& order : kAxisOrders) {
                    std::array<int, 3> idx{i, j, k};
                    std::array<VertexId, 4> tet{};
                    tet[0] = vid(idx[0], idx[1], idx[2]);
                    for (int s = 0; s < 3; ++s) {
                        idx[order[s]] += 1;
                        tet[s + 1] = vid(idx[0], idx[1], idx[2]);
                    }
                    elements.push_back(tet);
                }
            }
        }
    }
    return make_tet_mesh(std::move(vertices), std::move(elements));
}

double element_volume(const TetMesh& mesh, ElementId e) {
    if (e < 0 || static_cast<std::size_t>(e) >= mesh.num_elements())
        throw IndexError("element id " + std::to_string(e) + " out of range");
    const auto p = mesh.corners(e);
    return std::abs(signed_volume6(p[0], p[1], p[2], p[3])) / 6.0;
}

std::size_t count_boundary_faces(const TetMesh& mesh) {
    std::size_t count = 0;
    for (const auto& faces : mesh.adjacency)
        for (const auto& nb : faces) count += nb.is_boundary() ? 1 : 0;
    return count;
}

std::vector<std::string> validate(const TetMesh& mesh) {
    std::vector<std::string> report;
    const std::size_t ne = mesh.num_elements();
    const std::size_t nv = mesh.num_vertices();
    auto tag = [](std::size_t e) { return "element " + std::to_string(e) + ": "; };

    if (mesh.adjacency.size() != ne || mesh.volumes.size() != ne || mesh.centroids.size() != ne) {
        report.push_back("derived arrays are not sized to the element count");
        return report;
    }

    bool connectivity_ok = true;
    for (std::size_t e = 0; e < ne; ++e) {
        const auto& conn = mesh.elements[e];
        bool ids_ok = true;
        for (VertexId v : conn) {
            if (v < 0 || static_cast<std::size_t>(v) >= nv) {
                report.push_back(tag(e) + "vertex id " + std::to_string(v) + " out of range");
                ids_ok = false;
            }
        }
        if (!ids_ok) {
            connectivity_ok = false;
            continue;
        }
        auto sorted = conn;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            report.push_back(tag(e) + "repeated vertex id");
        const auto p = mesh.corners(static_cast<ElementId>(e));
        const double vol = signed_volume6(p[0], p[1], p[2], p[3]) / 6.0;
        if (!(vol > 0.0) || is_degenerate(p)) {
            report.push_back(tag(e) + "zero or negative volume (" + std::to_string(vol) + ")");
        } else if (std::abs(vol - mesh.volumes[e]) > 1e-12 * vol) {
            report.push_back(tag(e) + "cached volume does not match geometry");
        }
    }

    for (std::size_t e = 0; e < ne; ++e) {
        for (int f = 0; f < 4; ++f) {
            const FaceNeighbor nb = mesh.adjacency[e][f];
            if (nb.is_boundary()) continue;
            if (nb.element < 0 || static_cast<std::size_t>(nb.element) >= ne || nb.face < 0 || nb.face > 3) {
                report.push_back(tag(e) + "face " + std::to_string(f) + " has an invalid neighbor entry");
                continue;
            }
            const FaceNeighbor back = mesh.adjacency[nb.element][nb.face];
            if (back.element != static_cast<ElementId>(e) || back.face != f) {
                report.push_back(tag(e) + "face " + std::to_string(f) + " adjacency not symmetric with element " +
                                 std::to_string(nb.element));
            }
        }
    }

    if (connectivity_ok) {
        try {
            const auto expected = build_adjacency(mesh.elements, nv);
            for (std::size_t e = 0; e < ne; ++e) {
                for (int f = 0; f < 4; ++f) {
                    if (!(expected[e][f] == mesh.adjacency[e][f])) {
                        report.push_back(tag(e) + "face " + std::to_string(f) +
                                         " adjacency does not match shared vertices");
                    }
                }
            }
        } catch (const MeshError& err) {
            report.push_back(std::string("non-conforming connectivity: ") + err.what());
        }
    }
    return report;
}

TetMesh read_tet_mesh(std::istream& in) {
    std::string magic;
    long long nverts = -1;
    long long nelems = -1;
    if (!(in >> magic >> nverts >> nelems) || magic != "tetmesh" || nverts < 0 || nelems < 0)
        throw IoError("expected header 'tetmesh <nverts> <nelems>'");

    std::vector<Vec3> vertices(static_cast<std::size_t>(nverts));
    for (auto& v : vertices) {
        if (!(in >> v.x >> v.y >> v.z)) throw IoError("truncated vertex section");
    }
    std::vector<std::array<VertexId, 4>> elements(static_cast<std::size_t>(nelems));
    for (auto& t : elements) {
        if (!(in >> t[0] >> t[1] >> t[2] >> t[3])) throw IoError("truncated element section");
    }
    return make_tet_mesh(std::move(vertices), std::move(elements));
}

TetMesh read_tet_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mesh file " + path);
    return read_tet_mesh(in);
}

void write_tet_mesh(const TetMesh& mesh, std::ostream& out) {
    out << "tetmesh " << mesh.num_vertices() << ' ' << mesh.num_elements() << '\n';
    out << std::setprecision(17);
    for (const Vec3& v : mesh.vertices) out << v.x << ' ' << v.y << ' ' << v.z << '\n';
    for (const auto& t : mesh.elements) out << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
}

void write_tet_mesh(const TetMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write mesh file " + path);
    write_tet_mesh(mesh, out);
    if (!out) throw IoError("error while writing " + path);
}

} // namespace meshtally
