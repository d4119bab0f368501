#include "meshtally/harness.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "meshtally/errors.hpp"
#include "meshtally/parallel.hpp"

namespace meshtally {

BenchRecord make_record(const RunConfig& config, const RunResult& result, double t_output_s) {
    const RunSummary& s = result.summary;
    BenchRecord r;
    r.backend = backend_name(config.backend);
    r.elements = static_cast<std::int64_t>(result.mesh.num_elements());
    r.particles = config.num_particles;
    r.batches = config.num_batches;
    r.threads = s.threads;
    r.t_init_s = s.t_init + s.t_localize;
    r.segments = s.segments;
    r.t_batch_s = s.t_batch;
    r.t_output_s = t_output_s;
    if (!s.batch_allocations.empty()) {
        r.allocs = 0;
        for (std::int64_t a : s.batch_allocations) r.allocs += a;
    }
    r.peak_bytes = s.peak_bytes;
    r.leak_fraction = s.source_weight > 0.0 ? s.leaked_weight / s.source_weight : 0.0;
    return r;
}

void write_bench_csv(std::ostream& out, std::span<const BenchRecord> records, bool header) {
    if (header) out << kBenchCsvHeader << '\n';
    for (const BenchRecord& r : records) {
        out << r.backend << ',' << r.elements << ',' << r.particles << ',' << r.batches << ',' << r.threads << ','
            << format_double(r.t_init_s) << ',' << format_double(r.t_batch_s) << ',' << format_double(r.t_output_s)
            << ',' << r.allocs << ',' << r.peak_bytes << ',' << format_double(r.leak_fraction) << '\n';
    }
}

std::vector<LineSample> extract_line_flux(const TetMesh& mesh, const KdTree& tree, const FluxResult& result,
                                          const Vec3& start, const Vec3& end, int samples, int group) {
    if (samples < 1) throw ParameterError("line extraction needs at least one sample");
    if (group < 0 || static_cast<std::size_t>(group) >= result.num_groups) throw IndexError("group out of range");
    if (result.num_elements != mesh.num_elements()) throw ParameterError("flux result does not match the mesh");
    std::vector<LineSample> out;
    out.reserve(static_cast<std::size_t>(samples));
    const double length = distance(start, end);
    for (int k = 0; k < samples; ++k) {
        const double t = samples == 1 ? 0.5 : static_cast<double>(k) / (samples - 1);
        const Vec3 p = start + (end - start) * t;
        LineSample s;
        s.distance = t * length;
        const ElementId e = tree.locate(p);
        if (e != kNoElement) s.flux = result.at(e, group);
        out.push_back(s);
    }
    return out;
}

std::vector<LineSample> extract_line_flux(const TetMesh& mesh, const FluxResult& result, const Vec3& start,
                                          const Vec3& end, int samples, int group) {
    const KdTree tree(mesh);
    return extract_line_flux(mesh, tree, result, start, end, samples, group);
}

void write_line_csv(std::ostream& out, std::span<const LineSample> samples) {
    out << "distance,flux\n";
    for (const LineSample& s : samples) {
        out << format_double(s.distance) << ',';
        if (s.flux) out << format_double(*s.flux);
        out << '\n';
    }
}

double max_relative_difference(const FluxResult& a, const FluxResult& b) {
    if (a.mean.size() != b.mean.size()) throw ParameterError("flux results have different shapes");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.mean.size(); ++i) {
        const double scale = std::max(std::abs(a.mean[i]), std::abs(b.mean[i]));
        if (scale == 0.0) continue;
        worst = std::max(worst, std::abs(a.mean[i] - b.mean[i]) / scale);
    }
    return worst;
}

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

std::vector<BenchRecord> scaling_study(const RunConfig& base, const ScalingOptions& options) {
    if (options.particles.empty() || options.mesh_n.empty() || options.backends.empty())
        throw ParameterError("scaling study needs non-empty particle, mesh and backend lists");
    if (options.repeats < 1) throw ParameterError("scaling study needs at least one repeat");

    std::vector<BenchRecord> records;
    for (Backend backend : options.backends) {
        for (int n : options.mesh_n) {
            RunConfig cfg = base;
            cfg.backend = backend;
            cfg.mesh_n = n;
            cfg.num_particles = *std::min_element(options.particles.begin(), options.particles.end());
            run(cfg);  // warm-up

            for (std::int64_t particles : options.particles) {
                cfg.num_particles = particles;
                std::vector<double> init, batch;
                BenchRecord last;
                for (int rep = 0; rep < options.repeats; ++rep) {
                    const RunResult result = run(cfg);
                    last = make_record(cfg, result);
                    init.push_back(result.summary.t_init + result.summary.t_localize);
                    batch.push_back(result.summary.t_batch);
                }
                last.t_init_s = median(init);
                last.t_batch_s = median(batch);
                records.push_back(last);
            }
        }
    }
    return records;
}

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) parts.push_back(item);
    return parts;
}

double parse_double(const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw UsageError("not a number: '" + s + "'");
    }
    while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
    if (used != s.size()) throw UsageError("not a number: '" + s + "'");
    return v;
}

std::vector<double> parse_doubles(const std::string& text, std::size_t expected = 0) {
    std::vector<double> values;
    for (const std::string& part : split(text, ',')) values.push_back(parse_double(part));
    if (values.empty() || (expected && values.size() != expected))
        throw UsageError("expected " + std::to_string(expected) + " comma-separated numbers in '" + text + "'");
    return values;
}

template <class Int>
std::vector<Int> parse_ints(const std::string& text) {
    std::vector<Int> values;
    for (const std::string& part : split(text, ',')) {
        const double v = parse_double(part);
        if (v != std::floor(v) || v <= 0) throw UsageError("expected positive integers in '" + text + "'");
        values.push_back(static_cast<Int>(v));
    }
    if (values.empty()) throw UsageError("empty list");
    return values;
}

CrossSections parse_cross_sections(const std::string& sigma_t_text, const std::string& sigma_s_text, int groups) {
    std::vector<double> st = parse_doubles(sigma_t_text);
    if (groups <= 0) groups = static_cast<int>(st.size());
    if (st.size() == 1 && groups > 1) st.assign(static_cast<std::size_t>(groups), st.front());
    if (st.size() != static_cast<std::size_t>(groups))
        throw UsageError("--sigma-t needs one value or one per group");

    const auto g = static_cast<std::size_t>(groups);
    std::vector<double> ss(g * g, 0.0);
    bool scalar = true;
    double value = 0.0;
    try {
        value = parse_double(sigma_s_text);
    } catch (const UsageError&) {
        scalar = false;
    }
    if (scalar) {
        for (std::size_t i = 0; i < g; ++i) ss[i * g + i] = value;
    } else {
        std::ifstream in(sigma_s_text);
        if (!in) throw UsageError("--sigma-s is neither a number nor a readable matrix file: " + sigma_s_text);
        for (double& v : ss)
            if (!(in >> v)) throw UsageError("scattering matrix file needs " + std::to_string(g * g) + " values");
    }
    CrossSections xs{groups, std::move(st), std::move(ss)};
    try {
        xs.check();
    } catch (const ParameterError& e) {
        throw UsageError(e.what());
    }
    return xs;
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
    const auto slash = path.find_last_of('/');
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + suffix;
    return path.substr(0, dot) + suffix + path.substr(dot);
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Unstructured-mesh Monte Carlo track-length tallies", "meshtally"};

    RunConfig cfg;
    int mesh_n = 10;
    double edge = 1.0;
    std::int64_t particles = 10000;
    int batches = 5;
    int groups = 0;
    std::string sigma_t = "100";
    std::string sigma_s = "100";
    std::string source_box;
    std::string source_dir;
    std::uint64_t seed = 42;
    std::string backend = "adjacency";
    int threads = 0;
    std::string vtk_path, csv_path, line_spec, scaling_particles, scaling_mesh;
    int repeats = 3;

    app.add_option("--mesh-n", mesh_n, "Cube subdivisions per axis")->check(CLI::PositiveNumber);
    app.add_option("--edge", edge, "Cube edge length (cm)")->check(CLI::PositiveNumber);
    app.add_option("--particles", particles, "Particles per batch")->check(CLI::PositiveNumber);
    app.add_option("--batches", batches, "Number of batches")->check(CLI::PositiveNumber);
    app.add_option("--groups", groups, "Energy groups (default: length of --sigma-t)")->check(CLI::PositiveNumber);
    app.add_option("--sigma-t", sigma_t, "Total cross section per group (cm^-1), comma separated");
    app.add_option("--sigma-s", sigma_s, "Within-group scattering (cm^-1) or a groups x groups matrix file");
    app.add_option("--source-box", source_box, "Source box x0,y0,z0,x1,y1,z1 (cm)");
    app.add_option("--source-dir", source_dir, "Monodirectional source direction x,y,z (default isotropic)");
    app.add_option("--seed", seed, "Random seed");
    app.add_option("--backend", backend, "Tally backend")->check(CLI::IsMember({"adjacency", "baseline", "both"}));
    app.add_option("--threads", threads, "Worker threads")->envname("MESHTALLY_THREADS")->check(CLI::PositiveNumber);
    app.add_option("--vtk", vtk_path, "VTK flux output path");
    app.add_option("--csv", csv_path, "Benchmark report CSV path; flux and line CSVs are written beside it");
    app.add_option("--line", line_spec, "Line flux extraction x0,y0,z0,x1,y1,z1,nsamples");
    app.add_option("--scaling-particles", scaling_particles, "Scaling study particle counts, comma separated");
    app.add_option("--scaling-mesh-n", scaling_mesh, "Scaling study mesh sizes, comma separated");
    app.add_option("--repeats", repeats, "Timed repetitions per scaling cell")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "meshtally: " << e.what() << "\n" << "Run with --help for usage.\n";
        return 2;
    }

    std::vector<Backend> backends;
    std::optional<std::array<double, 7>> line;
    try {
        cfg.mesh_n = mesh_n;
        cfg.edge_length = edge;
        cfg.num_particles = particles;
        cfg.num_batches = batches;
        cfg.cross_sections = parse_cross_sections(sigma_t, sigma_s, groups);
        cfg.seed = seed;
        cfg.threads = threads > 0 ? threads : default_thread_count();
        cfg.source = SourceBox{{0.0, 0.0, 0.0}, {0.5 * edge, 0.5 * edge, 0.5 * edge}};
        if (!source_box.empty()) {
            const auto v = parse_doubles(source_box, 6);
            cfg.source = SourceBox{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
        }
        if (!source_dir.empty()) {
            const auto v = parse_doubles(source_dir, 3);
            cfg.source_direction = Vec3{v[0], v[1], v[2]};
        }
        if (!line_spec.empty()) {
            const auto v = parse_doubles(line_spec, 7);
            if (v[6] < 1 || v[6] != std::floor(v[6])) throw UsageError("--line sample count must be a positive integer");
            line = std::array<double, 7>{v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
        }
        if (backend == "both")
            backends = {Backend::Adjacency, Backend::Baseline};
        else
            backends = {backend == "adjacency" ? Backend::Adjacency : Backend::Baseline};
        try {
            cfg.check();
        } catch (const ParameterError& e) {
            throw UsageError(e.what());
        }
    } catch (const UsageError& e) {
        err << "meshtally: " << e.what() << "\n";
        return 2;
    }

    try {
        if (!scaling_particles.empty() || !scaling_mesh.empty()) {
            ScalingOptions opts;
            opts.backends = backends;
            opts.repeats = repeats;
            try {
                opts.particles = scaling_particles.empty() ? std::vector<std::int64_t>{cfg.num_particles}
                                                           : parse_ints<std::int64_t>(scaling_particles);
                opts.mesh_n = scaling_mesh.empty() ? std::vector<int>{cfg.mesh_n} : parse_ints<int>(scaling_mesh);
            } catch (const UsageError& e) {
                err << "meshtally: " << e.what() << "\n";
                return 2;
            }
            const auto records = scaling_study(cfg, opts);
            if (csv_path.empty()) {
                write_bench_csv(out, records);
            } else {
                std::ofstream f(csv_path);
                if (!f) throw IoError("cannot write " + csv_path);
                write_bench_csv(f, records);
            }
            return 0;
        }

        std::vector<BenchRecord> records;
        std::vector<FluxResult> fluxes;
        std::vector<std::vector<LineSample>> lines;
        const bool many = backends.size() > 1;
        for (Backend b : backends) {
            cfg.backend = b;
            RunResult result = run(cfg);

            const auto t0 = std::chrono::steady_clock::now();
            const std::string suffix = many ? std::string("_") + backend_name(b) : std::string();
            if (!vtk_path.empty()) write_vtk(result.mesh, result.track_length, with_suffix(vtk_path, suffix));
            if (!csv_path.empty()) write_flux_csv(result.track_length, with_suffix(csv_path, "_flux" + suffix));
            if (line) {
                const auto& l = *line;
                auto samples = extract_line_flux(result.mesh, result.track_length, {l[0], l[1], l[2]},
                                                 {l[3], l[4], l[5]}, static_cast<int>(l[6]));
                if (!csv_path.empty()) {
                    std::ofstream f(with_suffix(csv_path, "_line" + suffix));
                    if (!f) throw IoError("cannot write line CSV");
                    write_line_csv(f, samples);
                } else {
                    write_line_csv(out, samples);
                }
                lines.push_back(std::move(samples));
            }
            const double t_output =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

            records.push_back(make_record(cfg, result, t_output));
            const RunSummary& s = result.summary;
            out << backend_name(b) << ": elements=" << result.mesh.num_elements() << " flights=" << s.flights
                << " segments=" << s.segments << " leaked=" << format_double(s.leaked_weight)
                << " absorbed=" << format_double(s.absorbed_weight) << " t_batch_s=" << format_double(s.t_batch)
                << '\n';
            fluxes.push_back(std::move(result.track_length));
        }

        if (csv_path.empty()) {
            write_bench_csv(out, records);
        } else {
            std::ofstream f(csv_path);
            if (!f) throw IoError("cannot write " + csv_path);
            write_bench_csv(f, records);
        }

        if (many) {
            const double diff = max_relative_difference(fluxes[0], fluxes[1]);
            out << "max_rel_flux_diff " << format_double(diff) << '\n';
            if (lines.size() == 2) {
                bool same = lines[0].size() == lines[1].size();
                for (std::size_t k = 0; same && k < lines[0].size(); ++k) {
                    const auto& a = lines[0][k].flux;
                    const auto& c = lines[1][k].flux;
                    if (a.has_value() != c.has_value()) same = false;
                    else if (a && std::abs(*a - *c) > 1e-12 * std::max(std::abs(*a), std::abs(*c))) same = false;
                }
                out << "line_flux_match " << (same ? "yes" : "no") << '\n';
            }
            out << "equivalent " << (diff <= 1e-12 ? "yes" : "no") << '\n';
        }
    } catch (const std::exception& e) {
        err << "meshtally: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.push_back("meshtally");
    for (const std::string& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

} // namespace meshtally
