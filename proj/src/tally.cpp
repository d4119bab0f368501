#include "meshtally/tally.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>

namespace meshtally {

TallyGrid create_grid(std::int64_t num_elements, std::int64_t num_groups) {
    if (num_elements <= 0 || num_groups <= 0)
        throw ParameterError("tally grid needs positive sizes, got " + std::to_string(num_elements) + " x " +
                             std::to_string(num_groups));
    TallyGrid grid;
    grid.num_elements = static_cast<std::size_t>(num_elements);
    grid.num_groups = static_cast<std::size_t>(num_groups);
    const std::size_t bins = grid.num_elements * grid.num_groups;
    grid.batch_accum.assign(bins, 0.0);
    grid.sum.assign(bins, 0.0);
    grid.sum_sq.assign(bins, 0.0);
    return grid;
}

namespace detail {
void throw_bad_bin(const TallyGrid& grid, ElementId e, int g) {
    throw IndexError("tally bin (" + std::to_string(e) + ", " + std::to_string(g) + ") outside " +
                     std::to_string(grid.num_elements) + " x " + std::to_string(grid.num_groups));
}
} // namespace detail

void finalize_batch(TallyGrid& grid, double source_weight) {
    if (!(source_weight > 0.0)) throw ParameterError("batch source weight must be positive");
    const double inv = 1.0 / source_weight;
    for (std::size_t i = 0; i < grid.batch_accum.size(); ++i) {
        const double x = grid.batch_accum[i] * inv;
        grid.sum[i] += x;
        grid.sum_sq[i] += x * x;
        grid.batch_accum[i] = 0.0;
    }
    ++grid.batches_completed;
}

double batch_total(const TallyGrid& grid) {
    double total = 0.0;
    for (double v : grid.batch_accum) total += v;
    return total;
}

FluxResult flux(const TallyGrid& grid, std::span<const double> volumes) {
    if (grid.batches_completed == 0) throw StateError("flux requested before any batch was finalized");
    if (volumes.size() != grid.num_elements) throw ParameterError("volume array does not match the tally grid");

    FluxResult out;
    out.num_elements = grid.num_elements;
    out.num_groups = grid.num_groups;
    out.mean.assign(grid.sum.size(), 0.0);
    out.rel_error.assign(grid.sum.size(), 0.0);

    const auto n = static_cast<double>(grid.batches_completed);
    for (std::size_t e = 0; e < grid.num_elements; ++e) {
        if (!(volumes[e] > 0.0)) throw ParameterError("element volume must be positive");
        for (std::size_t g = 0; g < grid.num_groups; ++g) {
            const std::size_t i = e * grid.num_groups + g;
            const double batch_mean = grid.sum[i] / n;
            out.mean[i] = batch_mean / volumes[e];
            if (grid.batches_completed > 1 && batch_mean > 0.0) {
                const double var_of_mean = (grid.sum_sq[i] - grid.sum[i] * grid.sum[i] / n) / (n * (n - 1.0));
                out.rel_error[i] = var_of_mean > 0.0 ? std::sqrt(var_of_mean) / batch_mean : 0.0;
            }
        }
    }
    return out;
}

std::string format_double(double v) {
    char buf[32];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

void write_vtk(const TetMesh& mesh, const FluxResult& result, std::ostream& out) {
    if (result.num_elements != mesh.num_elements()) throw ParameterError("flux result does not match the mesh");
    const std::size_t ne = mesh.num_elements();

    out << "# vtk DataFile Version 3.0\n";
    out << "meshtally flux\n";
    out << "ASCII\n";
    out << "DATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.num_vertices() << " double\n";
    for (const Vec3& v : mesh.vertices)
        out << format_double(v.x) << ' ' << format_double(v.y) << ' ' << format_double(v.z) << '\n';
    out << "CELLS " << ne << ' ' << 5 * ne << '\n';
    for (const auto& t : mesh.elements) out << "4 " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
    out << "CELL_TYPES " << ne << '\n';
    for (std::size_t e = 0; e < ne; ++e) out << "10\n";
    out << "CELL_DATA " << ne << '\n';
    auto field = [&](const std::string& name, const std::vector<double>& values, std::size_t g) {
        out << "SCALARS " << name << " double 1\n";
        out << "LOOKUP_TABLE default\n";
        for (std::size_t e = 0; e < ne; ++e) out << format_double(values[e * result.num_groups + g]) << '\n';
    };
    for (std::size_t g = 0; g < result.num_groups; ++g) {
        field("flux_g" + std::to_string(g), result.mean, g);
        field("rel_error_g" + std::to_string(g), result.rel_error, g);
    }
}

void write_vtk(const TetMesh& mesh, const FluxResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_vtk(mesh, result, out);
    out.flush();
    if (!out) throw IoError("error while writing " + path);
}

void write_flux_csv(const FluxResult& result, std::ostream& out) {
    out << "element,group,mean,rel_error\n";
    for (std::size_t e = 0; e < result.num_elements; ++e) {
        for (std::size_t g = 0; g < result.num_groups; ++g) {
            const std::size_t i = e * result.num_groups + g;
            out << e << ',' << g << ',' << format_double(result.mean[i]) << ','
                << format_double(result.rel_error[i]) << '\n';
        }
    }
}

void write_flux_csv(const FluxResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_flux_csv(result, out);
    out.flush();
    if (!out) throw IoError("error while writing " + path);
}

} // namespace meshtally
