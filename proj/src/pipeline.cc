#include <rodflat/pipeline.hh>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

namespace rodflat {

using nlohmann::json;

std::string to_string(InitMethod m) { return m == InitMethod::tutte ? "tutte" : "project"; }

InitMethod init_from_string(const std::string &s) {
    if (s == "tutte") return InitMethod::tutte;
    if (s == "project") return InitMethod::project;
    throw InputError("unknown init method '" + s + "' (expected tutte or project)");
}

void FlattenConfig::check() const {
    if (!(length_tol > 0) || !(angle_tol > 0)) throw InputError("error thresholds must be positive");
    if (max_outer < 1) throw InputError("outer iteration cap must be at least 1");
    if (max_solver_iterations < 1) throw InputError("solver iteration cap must be at least 1");
    if (correction_samples < 1) throw InputError("correction sample count must be at least 1");
}

Stats summarize(const std::vector<double> &values) {
    Stats s;
    s.count = int(values.size());
    if (values.empty()) return s;
    double sum = 0;
    for (double v : values) {
        sum += v;
        s.max = std::max(s.max, v);
    }
    s.mean = sum / double(values.size());
    if (values.size() > 1) {
        double ss = 0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(ss / double(values.size() - 1));
    }
    return s;
}

MetricsReport compute_metrics(const RodStructure &s, const PlanarEmbedding &emb, const ReferenceQuantities &refs) {
    MetricsReport r;
    const auto &c = emb.coords;
    std::vector<double> rel, abs, core, fill;
    for (size_t k = 0; k < refs.edges.size(); ++k) {
        const auto [a, b] = refs.edges[k];
        const double L = (c[size_t(a)] - c[size_t(b)]).norm(), l = refs.rest_lengths[k];
        const bool isFill = s.isAugmented() && s.fill_edge[k];
        EdgeMetric em{int(k), L, l, std::abs(L - l), std::abs(L - l) / l, isFill};
        r.edges.push_back(em);
        rel.push_back(em.rel_error);
        abs.push_back(em.abs_error);
        (isFill ? fill : core).push_back(em.rel_error);
    }
    r.length = summarize(rel);
    r.length_abs = summarize(abs);
    if (s.isAugmented()) {
        r.core_length = summarize(core);
        r.fill_length = summarize(fill);
    }

    std::vector<double> errs, jointMeans;
    for (const auto &t : refs.joint_angles) {
        const auto g = cos_angle_and_grad(c[size_t(t.apex)], c[size_t(t.arm1)], c[size_t(t.arm2)]);
        const double th2 = g.degenerate ? 0.0 : std::acos(std::clamp(g.cosine, -1.0, 1.0));
        const double th3 = std::acos(std::clamp(t.ref_cos, -1.0, 1.0));
        r.angles.push_back({t.apex, t.arm1, t.arm2, th2, th3, std::abs(th2 - th3)});
        errs.push_back(std::abs(th2 - th3));
    }
    r.angle = summarize(errs);

    // Joint angles are emitted grouped by apex.
    for (size_t i = 0; i < r.angles.size();) {
        size_t j = i;
        double sum = 0, mx = 0;
        while (j < r.angles.size() && r.angles[j].apex == r.angles[i].apex) {
            sum += r.angles[j].error;
            mx = std::max(mx, r.angles[j].error);
            ++j;
        }
        const int n = int(j - i);
        r.joints.push_back({r.angles[i].apex, n, sum / n, mx});
        jointMeans.push_back(sum / n);
        i = j;
    }
    r.joint = summarize(jointMeans);
    r.overlaps = count_overlaps(c, refs.edges);
    return r;
}

FlattenSetup prepare_flatten(const RodStructure &s, InitMethod init) {
    FlattenSetup setup;
    setup.loop = boundary_loop(s);
    setup.chains = decompose_chains(s);
    if (init == InitMethod::tutte) {
        const auto pins = boundary_circle_positions(s, setup.loop);
        setup.initial = tutte_embed(s, pins);
    } else {
        setup.initial = project_xy(s);
    }
    setup.initial.structure_name = s.name;
    setup.initial.stage = EmbeddingStage::initial;
    setup.refs = derive_references(s, setup.chains, setup.initial);
    setup.triangulation = build_triangulation(setup.initial, setup.loop);
    return setup;
}

NlpProblem make_problem(const ReferenceQuantities &refs, const Triangulation &tri, bool with_overlap,
                        const FlattenConfig &cfg) {
    NlpProblem p;
    p.dimension = 2 * refs.num_vertices;
    p.objective = [&refs](const Eigen::VectorXd &x) {
        auto b = eval_objective_terms(x, refs);
        return ResidualEval{std::move(b.residuals), std::move(b.rows), b.degenerate};
    };
    p.constraints = [&refs, &tri](const Eigen::VectorXd &x) {
        auto L = eval_lengths(x, refs);
        auto A = eval_angles(x, refs);
        const auto O = eval_overlap_constraint(x, tri);
        ResidualEval out;
        const Eigen::Index np = L.residuals.size(), nq = A.residuals.size();
        out.values.resize(np + nq + 1);
        out.values << L.residuals, A.residuals, O.value;
        out.rows = std::move(L.rows);
        out.rows.insert(out.rows.end(), std::make_move_iterator(A.rows.begin()), std::make_move_iterator(A.rows.end()));
        SparseRow row;
        for (Eigen::Index k = 0; k < O.gradient.size(); ++k)
            if (O.gradient[k] != 0.0) row.entries.emplace_back(int(k), O.gradient[k]);
        out.rows.push_back(std::move(row));
        out.degenerate = L.degenerate || A.degenerate;
        return out;
    };
    p.active.assign(refs.edges.size() + refs.joint_angles.size() + 1, 1);
    p.active.back() = with_overlap ? 1 : 0;
    p.max_iterations = cfg.max_solver_iterations;
    p.feasibility_tol = cfg.feasibility_tol;
    p.stationarity_tol = cfg.stationarity_tol;
    p.restart_seed = cfg.seed;
    return p;
}

FlattenResult flatten(const RodStructure &s, const FlattenConfig &cfg) {
    cfg.check();
    const auto t0 = std::chrono::steady_clock::now();
    auto setup = prepare_flatten(s, cfg.init);
    const auto &refs = setup.refs;
    const auto &tri = setup.triangulation;

    FlattenResult res;
    res.initial = setup.initial;
    PlanarEmbedding emb = setup.initial;
    MetricsReport cur = compute_metrics(s, emb, refs);
    MetricsReport log;

    auto unfinished = [&] {
        return cur.length.mean > cfg.length_tol || cur.angle.mean > cfg.angle_tol || cur.overlaps > 0;
    };

    std::mt19937_64 jitterRng(cfg.seed.value_or(0));
    int iter = 0;
    while (unfinished() && iter <= cfg.max_outer) {
        RoundLog round{iter, true, false, "", 0, 0, 0, 0};
        if (iter > 0 && cur.overlaps == 0) {
            round.with_overlap_constraint = false;
        } else if (iter > 0) {
            CorrectionOptions co;
            co.samples = cfg.correction_samples;
            emb = correct_overlaps(emb, s, co);
            round.corrected = true;
            ++log.correction_passes;
        }

        const auto problem = make_problem(refs, tri, round.with_overlap_constraint, cfg);
        Eigen::VectorXd x0 = emb.variables();
        auto rep = minimize_constrained(problem, x0);
        ++log.solver_calls;
        if (rep.reason == Termination::degeneracy_signal) {
            const double scale = 1e-9 * bbox_diagonal(emb.coords);
            std::uniform_real_distribution<double> u(-1.0, 1.0);
            for (Eigen::Index k = 0; k < x0.size(); ++k) x0[k] += scale * u(jitterRng);
            auto retry = minimize_constrained(problem, x0);
            ++log.degeneracy_retries;
            if (retry.x.allFinite()) rep = std::move(retry);
        }
        if (rep.x.allFinite()) emb = PlanarEmbedding::fromVariables(rep.x, s.name, EmbeddingStage::optimized);

        cur = compute_metrics(s, emb, refs);
        round.solver_reason = to_string(rep.reason);
        round.solver_iterations = rep.iterations;
        round.length_error = cur.length.mean;
        round.angle_error = cur.angle.mean;
        round.overlaps = cur.overlaps;
        log.rounds.push_back(round);
        ++iter;
    }
    log.outer_iterations = iter;

    if (cur.overlaps > 0) {
        CorrectionOptions co;
        co.samples = cfg.correction_samples;
        emb = correct_overlaps(emb, s, co);
        ++log.correction_passes;
        cur = compute_metrics(s, emb, refs);
    }

    cur.outer_iterations = log.outer_iterations;
    cur.solver_calls = log.solver_calls;
    cur.correction_passes = log.correction_passes;
    cur.degeneracy_retries = log.degeneracy_retries;
    cur.rounds = std::move(log.rounds);
    cur.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    emb.structure_name = s.name;
    res.embedding = std::move(emb);
    res.metrics = std::move(cur);
    res.refs = std::move(setup.refs);
    res.triangulation = std::move(setup.triangulation);
    return res;
}

bool passes_quality_gate(const MetricsReport &r, double threshold) {
    return r.overlaps == 0 && r.length.mean <= threshold && r.angle.mean <= threshold;
}

namespace {

json stats_json(const Stats &s) {
    return json{{"mean", s.mean}, {"sd", s.sd}, {"max", s.max}, {"count", s.count}};
}

std::string fmt(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

} // namespace

json metrics_to_json(const MetricsReport &r) {
    json j;
    j["length_error"] = stats_json(r.length);
    j["length_error_abs"] = stats_json(r.length_abs);
    j["angle_error"] = stats_json(r.angle);
    j["joint_angle_error"] = stats_json(r.joint);
    if (r.core_length) j["core_length_error"] = stats_json(*r.core_length);
    if (r.fill_length) j["fill_length_error"] = stats_json(*r.fill_length);
    j["overlaps"] = r.overlaps;
    j["outer_iterations"] = r.outer_iterations;
    j["solver_calls"] = r.solver_calls;
    j["correction_passes"] = r.correction_passes;
    j["degeneracy_retries"] = r.degeneracy_retries;
    json rounds = json::array();
    for (const auto &rl : r.rounds)
        rounds.push_back({{"round", rl.round}, {"with_overlap_constraint", rl.with_overlap_constraint},
                          {"corrected", rl.corrected}, {"solver", rl.solver_reason},
                          {"solver_iterations", rl.solver_iterations}, {"length_error", rl.length_error},
                          {"angle_error", rl.angle_error}, {"overlaps", rl.overlaps}});
    j["rounds"] = rounds;
    json joints = json::array();
    for (const auto &jm : r.joints)
        joints.push_back({{"vertex", jm.vertex}, {"angles", jm.angles}, {"mean_error", jm.mean_error},
                          {"max_error", jm.max_error}});
    j["per_joint"] = joints;
    return j;
}

std::string metrics_csv(const MetricsReport &r) {
    std::ostringstream out;
    out << "kind,index,v0,v1,v2,value_2d,value_3d,abs_error,rel_error,fill\n";
    for (const auto &e : r.edges)
        out << "edge," << e.edge << ",,,," << fmt(e.length_2d) << ',' << fmt(e.rest_length) << ','
            << fmt(e.abs_error) << ',' << fmt(e.rel_error) << ',' << (e.fill ? 1 : 0) << '\n';
    for (size_t k = 0; k < r.angles.size(); ++k) {
        const auto &a = r.angles[k];
        out << "angle," << k << ',' << a.apex << ',' << a.arm1 << ',' << a.arm2 << ',' << fmt(a.angle_2d) << ','
            << fmt(a.angle_3d) << ',' << fmt(a.error) << ",,\n";
    }
    return out.str();
}

json embedding_to_json(const PlanarEmbedding &emb, const RodStructure &s) {
    json j;
    j["name"] = emb.structure_name.empty() ? s.name : emb.structure_name;
    j["stage"] = to_string(emb.stage);
    json coords = json::array();
    for (const auto &p : emb.coords) coords.push_back({p[0], p[1]});
    j["coords"] = coords;
    json edges = json::array();
    for (const auto &e : s.edges) edges.push_back({e[0], e[1]});
    j["edges"] = edges;
    std::vector<int> fill;
    for (size_t k = 0; k < s.fill_edge.size(); ++k)
        if (s.fill_edge[k]) fill.push_back(int(k));
    j["fill_edges"] = fill;
    return j;
}

PlanarEmbedding embedding_from_json(const json &j) {
    PlanarEmbedding emb;
    try {
        emb.structure_name = j.value("name", std::string());
        emb.stage = stage_from_string(j.value("stage", std::string("initial")));
        const auto &coords = j.at("coords");
        for (size_t i = 0; i < coords.size(); ++i) {
            const auto &c = coords[i];
            if (!c.is_array() || c.size() != 2)
                throw InputError("coords[" + std::to_string(i) + "]: expected [x, y]");
            Vec2 p(c[0].get<double>(), c[1].get<double>());
            if (!p.allFinite()) throw InputError("coords[" + std::to_string(i) + "]: non-finite coordinate");
            emb.coords.push_back(p);
        }
    } catch (const json::exception &e) {
        throw InputError(std::string("embedding: ") + e.what());
    }
    return emb;
}

} // namespace rodflat
