#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <rodflat/generators.hh>
#include <rodflat/hybrid.hh>
#include <rodflat/morph.hh>
#include <rodflat/pipeline.hh>
#include <rodflat/svg.hh>

namespace py = pybind11;
using namespace rodflat;

namespace {

Eigen::MatrixXd coords_matrix(const std::vector<Vec2> &c) {
    Eigen::MatrixXd M(Eigen::Index(c.size()), 2);
    for (size_t i = 0; i < c.size(); ++i) M.row(Eigen::Index(i)) = c[i].transpose();
    return M;
}

PlanarEmbedding embedding_from_matrix(const Eigen::MatrixXd &M, const RodStructure &s) {
    if (M.cols() != 2 || M.rows() != s.numVertices())
        throw InputError("coordinates must have shape (" + std::to_string(s.numVertices()) + ", 2)");
    PlanarEmbedding e;
    e.structure_name = s.name;
    e.stage = EmbeddingStage::optimized;
    for (Eigen::Index i = 0; i < M.rows(); ++i) e.coords.emplace_back(M(i, 0), M(i, 1));
    return e;
}

std::vector<Edge> edges_from_matrix(const Eigen::MatrixXi &E) {
    if (E.cols() != 2) throw InputError("edges must have shape (p, 2)");
    std::vector<Edge> out;
    for (Eigen::Index k = 0; k < E.rows(); ++k) out.push_back({E(k, 0), E(k, 1)});
    return out;
}

} // namespace

PYBIND11_MODULE(_rodflat, m) {
    m.doc() = "Planar embeddings of 3D rod structures";

    // translators run in reverse registration order, so the base goes first
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);

    py::class_<RodStructure>(m, "Structure")
        .def_static("from_json", [](const std::string &text) { return parse_structure(text); })
        .def_static("load", [](const std::string &path) { return load_structure(path); })
        .def("to_json", &serialize_structure)
        .def_readonly("name", &RodStructure::name)
        .def_property_readonly("num_vertices", &RodStructure::numVertices)
        .def_property_readonly("num_edges", &RodStructure::numEdges)
        .def_property_readonly("vertices", [](const RodStructure &s) {
            Eigen::MatrixXd V(s.numVertices(), 3);
            for (int i = 0; i < s.numVertices(); ++i) V.row(i) = s.vertices[size_t(i)].transpose();
            return V;
        })
        .def_property_readonly("edges", [](const RodStructure &s) {
            Eigen::MatrixXi E(s.numEdges(), 2);
            for (int k = 0; k < s.numEdges(); ++k) E.row(k) << s.edges[size_t(k)][0], s.edges[size_t(k)][1];
            return E;
        })
        .def_property_readonly("fill_edges", [](const RodStructure &s) {
            std::vector<int> f;
            for (size_t k = 0; k < s.fill_edge.size(); ++k)
                if (s.fill_edge[k]) f.push_back(int(k));
            return f;
        })
        .def_property_readonly("metadata_json", [](const RodStructure &s) { return s.metadata.dump(); })
        .def("boundary_loop", &boundary_loop)
        .def("joints", [](const RodStructure &s) { return decompose_chains(s).joints; })
        .def("chains", [](const RodStructure &s) {
            std::vector<std::vector<int>> out;
            for (const auto &c : decompose_chains(s).chains) out.push_back(c.vertices);
            return out;
        });

    m.def("generate", [](const std::string &kind, int n, std::optional<int> sub, std::optional<double> height,
                         std::uint64_t seed) {
        GeneratorParams p;
        p.kind = kind;
        p.n = n;
        p.sub = sub;
        p.height = height;
        p.seed = seed;
        return generate(p);
    }, py::arg("kind"), py::arg("n") = 15, py::arg("sub") = py::none(), py::arg("height") = py::none(),
       py::arg("seed") = 1);

    m.def("mesh_surface_regions", [](const RodStructure &s) { return mesh_surface_regions(s); });

    m.def("tutte_embedding", [](const RodStructure &s) {
        const auto loop = boundary_loop(s);
        return coords_matrix(tutte_embed(s, boundary_circle_positions(s, loop)).coords);
    });

    m.def("flatten", [](const RodStructure &s, const std::string &init, double tol, int max_outer,
                        std::optional<std::uint64_t> seed) {
        FlattenConfig cfg;
        cfg.init = init_from_string(init);
        cfg.length_tol = cfg.angle_tol = tol;
        cfg.max_outer = max_outer;
        cfg.seed = seed;
        FlattenResult r;
        {
            py::gil_scoped_release release;
            r = flatten(s, cfg);
        }
        return py::make_tuple(coords_matrix(r.embedding.coords), metrics_to_json(r.metrics).dump());
    }, py::arg("structure"), py::arg("init") = "tutte", py::arg("tol") = 1e-4, py::arg("max_outer") = 10,
       py::arg("seed") = py::none());

    m.def("metrics", [](const RodStructure &s, const Eigen::MatrixXd &coords) {
        const auto setup = prepare_flatten(s, InitMethod::tutte);
        return metrics_to_json(compute_metrics(s, embedding_from_matrix(coords, s), setup.refs)).dump();
    });

    m.def("detect_overlaps", [](const Eigen::MatrixXd &coords, const Eigen::MatrixXi &edges) {
        std::vector<Vec2> c;
        for (Eigen::Index i = 0; i < coords.rows(); ++i) c.emplace_back(coords(i, 0), coords(i, 1));
        const auto E = edges_from_matrix(edges);
        std::vector<std::pair<int, int>> out;
        for (const auto &r : detect_overlaps(c, E)) out.emplace_back(r.edge_a, r.edge_b);
        return out;
    });

    m.def("deploy", [](const RodStructure &s, const Eigen::MatrixXd &coords, int steps) {
        DeployConfig cfg;
        cfg.steps = steps;
        const auto traj = deploy(s, embedding_from_matrix(coords, s), cfg);
        std::vector<Eigen::MatrixXd> frames;
        for (const auto &f : traj.frames) {
            Eigen::MatrixXd F(Eigen::Index(f.size()), 3);
            for (size_t i = 0; i < f.size(); ++i) F.row(Eigen::Index(i)) = f[i].transpose();
            frames.push_back(F);
        }
        return py::make_tuple(frames, traj.energy, traj.pulled);
    }, py::arg("structure"), py::arg("coords"), py::arg("steps") = 50);

    m.def("export_svg", [](const RodStructure &s, const Eigen::MatrixXd &coords) {
        SvgOptions so;
        so.fill_edges = s.fill_edge;
        so.title = s.name;
        return export_svg(embedding_from_matrix(coords, s), s.edges, so);
    });
}
