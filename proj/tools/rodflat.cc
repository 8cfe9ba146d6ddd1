// rodflat: generate, flatten, deploy and inspect rod structures.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include <rodflat/generators.hh>
#include <rodflat/hybrid.hh>
#include <rodflat/morph.hh>
#include <rodflat/pipeline.hh>
#include <rodflat/svg.hh>

using namespace rodflat;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kGate = 1, kUsage = 2, kIo = 3 };

void write_text(const fs::path &path, const std::string &text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
}

std::string read_text(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

nlohmann::json read_json(const fs::path &path) {
    try {
        return nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::parse_error &e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

RodStructure load_for_flatten(const fs::path &path) {
    auto s = load_structure(path);
    if (needs_meshing(s)) s = mesh_surface_regions(s);
    return s;
}

PlanarEmbedding load_embedding(const fs::path &path, const RodStructure &s) {
    auto j = read_json(path);
    auto emb = embedding_from_json(j);
    if (emb.numVertices() != s.numVertices())
        throw InputError(path.string() + ": embedding has " + std::to_string(emb.numVertices()) +
                         " vertices but the structure has " + std::to_string(s.numVertices()));
    if (j.contains("edges") && j["edges"].size() != s.edges.size())
        throw InputError(path.string() + ": embedding has " + std::to_string(j["edges"].size()) +
                         " edges but the structure has " + std::to_string(s.edges.size()));
    if (emb.structure_name.empty()) emb.structure_name = s.name;
    return emb;
}

std::vector<double> relative_length_errors(const MetricsReport &r) {
    std::vector<double> v;
    for (const auto &e : r.edges) v.push_back(e.rel_error);
    return v;
}

void print_summary(const MetricsReport &r) {
    std::cout << "length_error_mean " << nlohmann::json(r.length.mean).dump() << '\n'
              << "angle_error_mean " << nlohmann::json(r.angle.mean).dump() << '\n'
              << "overlaps " << r.overlaps << '\n'
              << "outer_iterations " << r.outer_iterations << '\n';
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"rodflat: low-distortion planar embeddings of 3D rod structures"};
    app.require_subcommand(1);

    // gen
    auto *gen = app.add_subcommand("gen", "Write a synthetic rod structure");
    GeneratorParams gp;
    int genSub = 0;
    double genHeight = -1;
    std::string genOut;
    gen->add_option("kind", gp.kind, "dome | saddle | multipeak | grid | dome_patch")
        ->required()
        ->check(CLI::IsMember(generator_kinds()));
    gen->add_option("--n", gp.n, "joint lines per direction")->capture_default_str();
    gen->add_option("--sub", genSub, "rods per span between joint lines (default 3, grid 1)");
    gen->add_option("--height", genHeight, "height-field amplitude");
    gen->add_option("--seed", gp.seed, "random seed (multipeak)")->capture_default_str();
    gen->add_option("--peaks", gp.peaks, "number of peaks (multipeak)")->capture_default_str();
    gen->add_flag("--boundary", gp.with_boundary, "store the rim as an explicit boundary");
    gen->add_option("-o,--output", genOut, "output structure file")->required();

    // flatten
    auto *fl = app.add_subcommand("flatten", "Compute a planar embedding");
    FlattenConfig cfg;
    std::string flIn, flOut, flSvg, flMetrics, flCsv, flInit = "tutte", flAugmented;
    double gate = 1e-2;
    std::uint64_t flSeed = 0;
    fl->add_option("input", flIn, "structure file")->required();
    fl->add_option("-o,--output", flOut, "embedding output file");
    fl->add_option("--init", flInit, "initial embedding")->check(CLI::IsMember({"tutte", "project"}))->capture_default_str();
    fl->add_option("--tol", cfg.length_tol, "length and angle error threshold of the outer loop")->capture_default_str();
    fl->add_option("--max-outer", cfg.max_outer, "outer iteration cap")->capture_default_str();
    auto *seedOpt = fl->add_option("--seed", flSeed, "seed for solver restarts and jitter");
    fl->add_option("--max-solver-iterations", cfg.max_solver_iterations, "solver step cap per round")->capture_default_str();
    fl->add_option("--samples", cfg.correction_samples, "circle samples for overlap correction")->capture_default_str();
    fl->add_option("--gate", gate, "quality gate on both error means")->capture_default_str();
    fl->add_option("--svg", flSvg, "SVG output colored by length error");
    fl->add_option("--metrics", flMetrics, "metrics JSON output");
    fl->add_option("--csv", flCsv, "per-rod and per-angle CSV output");
    fl->add_option("--augmented", flAugmented, "write the structure after surface-region meshing");

    // deploy
    auto *dep = app.add_subcommand("deploy", "Simulate deployment from the plane to 3D");
    DeployConfig dcfg;
    std::string depStruct, depEmb, depOut, depObj;
    dep->add_option("structure", depStruct, "structure file")->required();
    dep->add_option("embedding", depEmb, "embedding file")->required();
    dep->add_option("-o,--output", depOut, "trajectory JSON output")->required();
    dep->add_option("--steps", dcfg.steps, "pull steps")->capture_default_str();
    dep->add_option("--stiffness", dcfg.stiffness, "spring stiffness")->capture_default_str();
    dep->add_option("--tolerance", dcfg.tolerance, "relative gradient tolerance per step")->capture_default_str();
    dep->add_option("--pulled", dcfg.pulled, "pulled vertices (default: all joints)");
    dep->add_option("--obj-dir", depObj, "directory for per-frame OBJ files");

    // metrics
    auto *met = app.add_subcommand("metrics", "Distortion metrics of an embedding");
    std::string metStruct, metEmb, metOut, metCsv, metInit = "tutte";
    met->add_option("structure", metStruct, "structure file")->required();
    met->add_option("embedding", metEmb, "embedding file")->required();
    met->add_option("--init", metInit, "embedding that fixes the joint arm order")
        ->check(CLI::IsMember({"tutte", "project"}))->capture_default_str();
    met->add_option("--metrics", metOut, "metrics JSON output (default stdout)");
    met->add_option("--csv", metCsv, "per-rod and per-angle CSV output");

    // svg
    auto *svg = app.add_subcommand("svg", "Render an embedding as SVG");
    std::string svgStruct, svgEmb, svgOut;
    bool svgColor = false;
    svg->add_option("structure", svgStruct, "structure file")->required();
    svg->add_option("embedding", svgEmb, "embedding file")->required();
    svg->add_option("-o,--output", svgOut, "SVG output")->required();
    svg->add_flag("--color", svgColor, "color rods by relative length error");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*gen) {
            if (genSub > 0) gp.sub = genSub;
            if (genHeight >= 0) gp.height = genHeight;
            save_structure(generate(gp), genOut);
            return kOk;
        }
        if (*fl) {
            cfg.angle_tol = cfg.length_tol;
            cfg.init = init_from_string(flInit);
            if (seedOpt->count()) cfg.seed = flSeed;
            const auto s = load_for_flatten(flIn);
            if (!flAugmented.empty()) save_structure(s, flAugmented);
            const auto res = flatten(s, cfg);
            if (!flOut.empty()) write_text(flOut, embedding_to_json(res.embedding, s).dump(2) + "\n");
            if (!flMetrics.empty()) write_text(flMetrics, metrics_to_json(res.metrics).dump(2) + "\n");
            if (!flCsv.empty()) write_text(flCsv, metrics_csv(res.metrics));
            if (!flSvg.empty()) {
                SvgOptions so;
                so.edge_values = relative_length_errors(res.metrics);
                so.fill_edges = s.fill_edge;
                so.title = s.name;
                write_text(flSvg, export_svg(res.embedding, s.edges, so));
            }
            print_summary(res.metrics);
            if (!passes_quality_gate(res.metrics, gate)) {
                std::cerr << "quality gate failed: overlaps " << res.metrics.overlaps << ", length error mean "
                          << res.metrics.length.mean << ", angle error mean " << res.metrics.angle.mean
                          << " (gate " << gate << ")\n";
                return kGate;
            }
            return kOk;
        }
        if (*dep) {
            const auto s = load_for_flatten(depStruct);
            const auto emb = load_embedding(depEmb, s);
            const auto traj = deploy(s, emb, dcfg);
            write_text(depOut, trajectory_to_json(traj, s).dump(2) + "\n");
            if (!depObj.empty()) {
                fs::create_directories(depObj);
                for (size_t f = 0; f < traj.frames.size(); ++f) {
                    char name[32];
                    std::snprintf(name, sizeof name, "frame_%04zu.obj", f);
                    write_text(fs::path(depObj) / name,
                               frame_obj(traj.frames[f], s.edges, s.name + " frame " + std::to_string(f)));
                }
            }
            int flagged = 0;
            for (char c : traj.converged) flagged += c ? 0 : 1;
            std::cout << "frames " << traj.frames.size() << '\n'
                      << "final_energy " << nlohmann::json(traj.energy.back()).dump() << '\n'
                      << "unconverged_frames " << flagged << '\n';
            return kOk;
        }
        if (*met) {
            const auto s = load_for_flatten(metStruct);
            const auto emb = load_embedding(metEmb, s);
            const auto setup = prepare_flatten(s, init_from_string(metInit));
            const auto r = compute_metrics(s, emb, setup.refs);
            const auto text = metrics_to_json(r).dump(2) + "\n";
            if (metOut.empty()) std::cout << text;
            else write_text(metOut, text);
            if (!metCsv.empty()) write_text(metCsv, metrics_csv(r));
            return kOk;
        }
        if (*svg) {
            const auto s = load_for_flatten(svgStruct);
            const auto emb = load_embedding(svgEmb, s);
            SvgOptions so;
            so.fill_edges = s.fill_edge;
            so.title = s.name;
            if (svgColor) {
                const auto setup = prepare_flatten(s, InitMethod::tutte);
                so.edge_values = relative_length_errors(compute_metrics(s, emb, setup.refs));
            }
            write_text(svgOut, export_svg(emb, s.edges, so));
            return kOk;
        }
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    }
    return kUsage;
}
