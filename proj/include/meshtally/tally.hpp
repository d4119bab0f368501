#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "meshtally/errors.hpp"
#include "meshtally/mesh.hpp"

namespace meshtally {

/// Element x energy-group accumulator. Every array is sized once at construction; scoring
/// only adds into existing bins.
struct TallyGrid {
    std::size_t num_elements = 0;
    std::size_t num_groups = 0;
    std::vector<double> batch_accum;  // current batch, index element * num_groups + group
    std::vector<double> sum;          // sum over batches of per-batch normalized scores
    std::vector<double> sum_sq;
    std::int64_t batches_completed = 0;

    std::size_t index(ElementId e, int g) const {
        return static_cast<std::size_t>(e) * num_groups + static_cast<std::size_t>(g);
    }
};

/// Per-bin flux (per source particle, per unit volume) and relative standard error of
/// the batch mean.
struct FluxResult {
    std::size_t num_elements = 0;
    std::size_t num_groups = 0;
    std::vector<double> mean;
    std::vector<double> rel_error;

    double at(ElementId e, int g = 0) const { return mean[static_cast<std::size_t>(e) * num_groups + g]; }
    double error_at(ElementId e, int g = 0) const {
        return rel_error[static_cast<std::size_t>(e) * num_groups + g];
    }
};

TallyGrid create_grid(std::int64_t num_elements, std::int64_t num_groups);

namespace detail {
[[noreturn]] void throw_bad_bin(const TallyGrid& grid, ElementId e, int g);

inline void atomic_add(double& target, double value) {
#pragma omp atomic update
    target += value;
}
} // namespace detail

/// Track-length score weight * length (cm). Safe to call concurrently.
inline void score_track_length(TallyGrid& grid, ElementId e, int g, double weight, double length) {
    if (e < 0 || static_cast<std::size_t>(e) >= grid.num_elements || g < 0 ||
        static_cast<std::size_t>(g) >= grid.num_groups)
        detail::throw_bad_bin(grid, e, g);
    detail::atomic_add(grid.batch_accum[grid.index(e, g)], weight * length);
}

/// Collision estimator score weight / sigma_t. Safe to call concurrently.
inline void score_collision(TallyGrid& grid, ElementId e, int g, double weight, double sigma_t) {
    if (!(sigma_t > 0.0)) throw ParameterError("collision score needs sigma_t > 0");
    if (e < 0 || static_cast<std::size_t>(e) >= grid.num_elements || g < 0 ||
        static_cast<std::size_t>(g) >= grid.num_groups)
        detail::throw_bad_bin(grid, e, g);
    detail::atomic_add(grid.batch_accum[grid.index(e, g)], weight / sigma_t);
}

/// Closes a batch: normalizes by the batch's source weight, folds into the running sums
/// and clears the accumulator.
void finalize_batch(TallyGrid& grid, double source_weight);

double batch_total(const TallyGrid& grid);

FluxResult flux(const TallyGrid& grid, std::span<const double> volumes);

// Legacy ASCII VTK unstructured grid with CELL_DATA scalars flux_g<k> and rel_error_g<k>.
void write_vtk(const TetMesh& mesh, const FluxResult& result, std::ostream& out);
void write_vtk(const TetMesh& mesh, const FluxResult& result, const std::string& path);

// CSV with header element,group,mean,rel_error.
void write_flux_csv(const FluxResult& result, std::ostream& out);
void write_flux_csv(const FluxResult& result, const std::string& path);

// Shortest round-trip decimal form used by every text writer, so outputs are
// byte-identical for identical values.
std::string format_double(double v);

} // namespace meshtally
