#include <doctest.h>

#include <algorithm>
#include <map>
#include <numbers>

#include <rodflat/constraints.hh>
#include <rodflat/generators.hh>
#include <rodflat/pipeline.hh>
#include <rodflat/solver.hh>

#include "oracles.hh"

using namespace rodflat;

namespace {

ResidualEval scalar(double value, std::vector<std::pair<int, double>> grad) {
    ResidualEval r;
    r.values = Eigen::VectorXd::Constant(1, value);
    r.rows.resize(1);
    r.rows[0].entries = std::move(grad);
    return r;
}

NlpProblem one_dimensional(double target, double forced) {
    NlpProblem p;
    p.dimension = 1;
    p.objective = [target](const Eigen::VectorXd &x) { return scalar(x[0] - target, {{0, 1.0}}); };
    p.constraints = [forced](const Eigen::VectorXd &x) { return scalar(x[0] - forced, {{0, 1.0}}); };
    return p;
}

double max_abs(const Eigen::VectorXd &v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

FlattenSetup perturbed_grid(oracle::Rng &rng, double amp, RodStructure &grid) {
    GeneratorParams p;
    p.kind = "grid";
    p.n = 4;
    p.sub = 2;
    grid = generate(p);
    auto setup = prepare_flatten(grid, InitMethod::project);
    for (auto &c : setup.initial.coords) c += amp * rng.point();
    return setup;
}

} // namespace

TEST_CASE("constraint forces the minimizer") {
    auto r = minimize_constrained(one_dimensional(1.0, 2.0), Eigen::VectorXd::Constant(1, 0.0));
    CHECK(r.reason == Termination::converged);
    CHECK(r.x[0] == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(r.constraint_violation <= 1e-6);
    CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("stationary feasible start returns at once") {
    const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, 2.0);
    auto r = minimize_constrained(one_dimensional(2.0, 2.0), x0);
    CHECK(r.reason == Termination::converged);
    CHECK(r.iterations == 0);
    CHECK(r.x == x0);
}

TEST_CASE("two-dimensional problem with a curved constraint") {
    // minimize (x-2)^2 + (y-2)^2 on the unit circle: optimum at (1,1)/sqrt(2)
    NlpProblem p;
    p.dimension = 2;
    p.objective = [](const Eigen::VectorXd &x) {
        ResidualEval r;
        r.values = Eigen::Vector2d(x[0] - 2, x[1] - 2);
        r.rows.resize(2);
        r.rows[0].entries = {{0, 1.0}};
        r.rows[1].entries = {{1, 1.0}};
        return r;
    };
    p.constraints = [](const Eigen::VectorXd &x) {
        return scalar(x.squaredNorm() - 1, {{0, 2 * x[0]}, {1, 2 * x[1]}});
    };
    auto r = minimize_constrained(p, Eigen::Vector2d(0.3, -0.2));
    CHECK(r.reason == Termination::converged);
    CHECK(r.x[0] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
    CHECK(r.x[1] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
    CHECK(r.stationarity <= 1e-6 * (1 + r.objective));
}

TEST_CASE("inactive rows are ignored") {
    NlpProblem p = one_dimensional(1.0, 2.0);
    p.active = {0};
    auto r = minimize_constrained(p, Eigen::VectorXd::Constant(1, 5.0));
    CHECK(r.reason == Termination::converged);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("degenerate start is reported") {
    NlpProblem p = one_dimensional(1.0, 2.0);
    p.constraints = [](const Eigen::VectorXd &x) {
        auto r = scalar(x[0] - 2, {{0, 1.0}});
        r.degenerate = true;
        return r;
    };
    auto r = minimize_constrained(p, Eigen::VectorXd::Constant(1, 0.0));
    CHECK(r.reason == Termination::degeneracy_signal);
    CHECK(r.x.allFinite());
}

TEST_CASE("perturbed planar grid is restored") {
    oracle::Rng rng(31);
    RodStructure grid;
    auto setup = perturbed_grid(rng, 0.05, grid);
    FlattenConfig cfg;
    auto prob = make_problem(setup.refs, setup.triangulation, true, cfg);
    const Eigen::VectorXd x0 = setup.initial.variables();
    auto r = minimize_constrained(prob, x0);
    REQUIRE(r.reason == Termination::converged);
    CHECK(max_abs(eval_lengths(r.x, setup.refs).residuals) <= 1e-6);
    CHECK(max_abs(eval_angles(r.x, setup.refs).residuals) <= 1e-6);
    CHECK(r.objective < eval_objective(x0, setup.refs).value);

    SUBCASE("restarting at the solution does no further work") {
        auto again = minimize_constrained(prob, r.x);
        CHECK(again.reason == Termination::converged);
        CHECK(again.iterations <= 1);
    }
    SUBCASE("dropping the no-overlap row never raises the optimum") {
        auto without = minimize_constrained(make_problem(setup.refs, setup.triangulation, false, cfg), x0);
        REQUIRE(without.reason == Termination::converged);
        CHECK(without.objective <= r.objective + 1e-8);
    }
    SUBCASE("deterministic") {
        auto twin = minimize_constrained(prob, x0);
        CHECK(twin.x == r.x);
        CHECK(twin.iterations == r.iterations);
    }
}

TEST_CASE("dome solve from the Tutte start") {
    auto s = load_structure(oracle::data_path("dome.json"));
    auto setup = prepare_flatten(s, InitMethod::tutte);

    // The 3D angles around an interior joint of the dome sum to less than a
    // full turn, while consecutive arm angles of an unfolded planar joint sum
    // to exactly one. So no overlap-free layout meets every angle constraint.
    std::map<int, double> turn;
    for (const auto &t : setup.refs.joint_angles) turn[t.apex] += std::acos(std::clamp(t.ref_cos, -1.0, 1.0));
    for (int v : setup.loop) turn.erase(v);
    REQUIRE_FALSE(turn.empty());
    double defect = 0;
    for (auto [apex, sum] : turn) defect = std::max(defect, 2 * std::numbers::pi - sum);
    CHECK(defect > 1e-6);

    FlattenConfig cfg;
    auto prob = make_problem(setup.refs, setup.triangulation, true, cfg);
    const Eigen::VectorXd x0 = setup.initial.variables();
    auto r = minimize_constrained(prob, x0);
    CHECK(r.x.allFinite());
    CHECK(r.objective < eval_objective(x0, setup.refs).value);
    CHECK(max_abs(eval_angles(r.x, setup.refs).residuals) < max_abs(eval_angles(x0, setup.refs).residuals));
    CHECK(max_abs(eval_lengths(r.x, setup.refs).residuals) < max_abs(eval_lengths(x0, setup.refs).residuals));
    // the report is truthful: converged only with every active row satisfied
    if (r.reason == Termination::converged) CHECK(r.constraint_violation <= 1e-6);
    CHECK(r.constraint_violation == doctest::Approx(max_abs(evaluate_all(r.x, setup.refs, setup.triangulation, true).residuals)));
    MESSAGE("dome solve: " << to_string(r.reason) << ", |c|_inf " << r.constraint_violation << ", |L|_inf "
                           << max_abs(eval_lengths(r.x, setup.refs).residuals));
}
