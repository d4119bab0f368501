#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meshtally/baseline.hpp"
#include "meshtally/tally.hpp"
#include "meshtally/transport.hpp"

namespace meshtally {

inline constexpr const char* kBenchCsvHeader =
    "backend,elements,particles,batches,threads,t_init_s,t_batch_s,t_output_s,allocs,peak_bytes,leak_fraction";

struct BenchRecord {
    std::string backend;
    std::int64_t elements = 0;
    std::int64_t particles = 0;
    int batches = 0;
    int threads = 1;
    double t_init_s = 0.0;
    double t_batch_s = 0.0;
    double t_output_s = 0.0;
    std::int64_t allocs = -1;  // -1 when the allocation probe is unavailable
    std::uint64_t peak_bytes = 0;
    double leak_fraction = 0.0;
    std::int64_t segments = 0;  // not part of the CSV
};

BenchRecord make_record(const RunConfig& config, const RunResult& result, double t_output_s = 0.0);

void write_bench_csv(std::ostream& out, std::span<const BenchRecord> records, bool header = true);

struct LineSample {
    double distance = 0.0;
    std::optional<double> flux;  // empty outside the mesh
};

/// Samples the piecewise-constant flux field at `samples` evenly spaced points from
/// `start` to `end` (both included).
std::vector<LineSample> extract_line_flux(const TetMesh& mesh, const KdTree& tree, const FluxResult& result,
                                          const Vec3& start, const Vec3& end, int samples, int group = 0);
std::vector<LineSample> extract_line_flux(const TetMesh& mesh, const FluxResult& result, const Vec3& start,
                                          const Vec3& end, int samples, int group = 0);

// CSV "distance,flux"; missing values are written as an empty field.
void write_line_csv(std::ostream& out, std::span<const LineSample> samples);

/// Largest |a - b| / max(|a|, |b|) over all bins (0 where both are 0).
double max_relative_difference(const FluxResult& a, const FluxResult& b);

struct ScalingOptions {
    std::vector<std::int64_t> particles;
    std::vector<int> mesh_n;
    std::vector<Backend> backends{Backend::Adjacency};
    int repeats = 3;
};

/// One record per (backend, mesh, particle count). Each backend/mesh pair gets an untimed
/// warm-up run first; reported times are medians over `repeats` runs.
std::vector<BenchRecord> scaling_study(const RunConfig& base, const ScalingOptions& options);

/// Command-line entry point. Returns 0 on success, 2 on usage errors, 1 on runtime failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace meshtally
