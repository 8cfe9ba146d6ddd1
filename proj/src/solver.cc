#include <rodflat/solver.hh>

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/SparseCholesky>

namespace rodflat {

std::string to_string(Termination t) {
    switch (t) {
        case Termination::converged:           return "converged";
        case Termination::max_iterations:      return "max-iter";
        case Termination::line_search_failure: return "line-search-failure";
        case Termination::degeneracy_signal:   return "degeneracy-signal";
    }
    return "max-iter";
}

double residual_objective(const ResidualEval &r, Eigen::VectorXd *gradient, int dimension) {
    if (gradient) gradient->setZero(dimension);
    double E = 0;
    for (Eigen::Index i = 0; i < r.values.size(); ++i) {
        const double ri = r.values[i];
        E += ri * ri;
        if (gradient)
            for (auto [k, v] : r.rows[size_t(i)].entries) (*gradient)[k] += 2 * ri * v;
    }
    return E;
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
constexpr size_t kDenseRowThreshold = 64;

struct ActiveConstraints {
    Eigen::VectorXd values;
    std::vector<const SparseRow *> rows;
};

ActiveConstraints select_active(const ResidualEval &c, const std::vector<char> &active) {
    ActiveConstraints out;
    std::vector<double> vals;
    for (size_t i = 0; i < c.rows.size(); ++i) {
        if (!active.empty() && !active[i]) continue;
        vals.push_back(c.values[Eigen::Index(i)]);
        out.rows.push_back(&c.rows[i]);
    }
    out.values = Eigen::Map<Eigen::VectorXd>(vals.data(), Eigen::Index(vals.size()));
    return out;
}

double inf_norm(const Eigen::VectorXd &v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

bool all_finite(const ResidualEval &e) {
    if (!e.values.allFinite()) return false;
    for (const auto &row : e.rows)
        for (auto [k, v] : row.entries)
            if (!std::isfinite(v)) return false;
    return true;
}

// Least-squares multipliers y = argmin |g + J^T y|; returns |g + J^T y|_inf.
double stationarity(const Eigen::VectorXd &gradE, const std::vector<const SparseRow *> &rows, int n) {
    if (rows.empty()) return inf_norm(gradE);
    std::vector<Eigen::Triplet<double>> trip;
    for (size_t i = 0; i < rows.size(); ++i)
        for (auto [k, v] : rows[i]->entries) trip.emplace_back(int(i), k, v);
    SpMat J(Eigen::Index(rows.size()), n);
    J.setFromTriplets(trip.begin(), trip.end());
    SpMat JJt = J * J.transpose();
    double scale = 0;
    for (Eigen::Index i = 0; i < JJt.rows(); ++i) scale = std::max(scale, JJt.coeff(i, i));
    SpMat reg(JJt.rows(), JJt.cols());
    reg.setIdentity();
    JJt += (1e-12 * std::max(scale, 1.0)) * reg;
    Eigen::SimplicialLDLT<SpMat> ldlt(JJt);
    if (ldlt.info() != Eigen::Success) return inf_norm(gradE);
    Eigen::VectorXd rhs = -(J * gradE);
    Eigen::VectorXd y = ldlt.solve(rhs);
    y += ldlt.solve(rhs - JJt * y);
    return inf_norm(gradE + J.transpose() * y);
}

// Stacked least-squares system F = [r; s (c + y / mu)] for one subproblem.
class AugmentedSystem {
public:
    AugmentedSystem(int n, double mu, const Eigen::VectorXd &y) : m_n(n), m_mu(mu), m_y(y) {}

    struct State {
        ResidualEval obj, con;
        ActiveConstraints act;
        Eigen::VectorXd F;
        double phi = 0;
        bool ok = false;
    };

    State evaluate(const NlpProblem &p, const Eigen::VectorXd &x) const {
        State st;
        st.obj = p.objective(x);
        st.con = p.constraints(x);
        st.ok = !st.obj.degenerate && !st.con.degenerate && all_finite(st.obj) && all_finite(st.con);
        if (!st.ok) return st;
        st.act = select_active(st.con, p.active);
        const Eigen::Index nr = st.obj.values.size(), nc = st.act.values.size();
        st.F.resize(nr + nc);
        st.F.head(nr) = st.obj.values;
        st.F.tail(nc) = weight() * (st.act.values + m_y / m_mu);
        st.phi = st.F.squaredNorm();
        return st;
    }

    double weight() const { return std::sqrt(0.5 * m_mu); }

    // Solves (J^T J + lambda D) dx = -J^T F; returns false when factorization fails.
    bool step(const State &st, double lambda, Eigen::VectorXd &dx, Eigen::VectorXd &grad) {
        const double w = weight();
        std::vector<Eigen::Triplet<double>> trip;
        std::vector<Eigen::VectorXd> dense;
        Eigen::Index row = 0;
        auto add_row = [&](const SparseRow &r, double scale) {
            if (r.nnz() > kDenseRowThreshold) {
                Eigen::VectorXd u = Eigen::VectorXd::Zero(m_n);
                for (auto [k, v] : r.entries) u[k] += scale * v;
                dense.push_back(std::move(u));
                m_denseRows.push_back(row);
            } else {
                for (auto [k, v] : r.entries) trip.emplace_back(int(row), k, scale * v);
            }
            ++row;
        };
        m_denseRows.clear();
        for (const auto &r : st.obj.rows) add_row(r, 1.0);
        for (const auto *r : st.act.rows) add_row(*r, w);

        m_J.resize(row, m_n);
        m_J.setFromTriplets(trip.begin(), trip.end());
        m_dense = std::move(dense);

        grad = m_J.transpose() * st.F;
        for (size_t d = 0; d < m_dense.size(); ++d) grad += m_dense[d] * st.F[m_denseRows[d]];

        SpMat A = m_J.transpose() * m_J;
        Eigen::VectorXd diag = A.diagonal();
        for (const auto &u : m_dense) diag += u.cwiseAbs2();
        const double dmax = std::max(diag.maxCoeff(), 1e-300);
        std::vector<Eigen::Triplet<double>> dtrip;
        for (int k = 0; k < m_n; ++k)
            dtrip.emplace_back(k, k, lambda * std::max(diag[k], 1e-12 * dmax) + 1e-300);
        SpMat D(m_n, m_n);
        D.setFromTriplets(dtrip.begin(), dtrip.end());
        SpMat M = A + D;

        if (!m_analyzed || M.nonZeros() != m_patternNnz) {
            m_ldlt.analyzePattern(M);
            m_analyzed = true;
            m_patternNnz = M.nonZeros();
        }
        m_ldlt.factorize(M);
        if (m_ldlt.info() != Eigen::Success) return false;

        // Sherman-Morrison-Woodbury for the dense rows.
        Eigen::VectorXd b = -grad;
        Eigen::VectorXd w0 = m_ldlt.solve(b);
        if (!m_dense.empty()) {
            const Eigen::Index k = Eigen::Index(m_dense.size());
            Eigen::MatrixXd U(m_n, k), Z(m_n, k);
            for (Eigen::Index d = 0; d < k; ++d) {
                U.col(d) = m_dense[size_t(d)];
                Z.col(d) = m_ldlt.solve(U.col(d));
            }
            Eigen::MatrixXd K = Eigen::MatrixXd::Identity(k, k) + U.transpose() * Z;
            w0 -= Z * K.ldlt().solve(U.transpose() * w0);
        }
        dx = w0;
        return dx.allFinite();
    }

    // |F + J dx|^2, the Gauss-Newton model value.
    double model(const State &st, const Eigen::VectorXd &dx) const {
        Eigen::VectorXd Fm = st.F + m_J * dx;
        for (size_t d = 0; d < m_dense.size(); ++d) Fm[m_denseRows[d]] += m_dense[d].dot(dx);
        return Fm.squaredNorm();
    }

private:
    int m_n;
    double m_mu;
    Eigen::VectorXd m_y;
    SpMat m_J;
    std::vector<Eigen::VectorXd> m_dense;
    std::vector<Eigen::Index> m_denseRows;
    Eigen::SimplicialLDLT<SpMat> m_ldlt;
    bool m_analyzed = false;
    Eigen::Index m_patternNnz = -1;
};

SolveReport solve_once(const NlpProblem &p, const Eigen::VectorXd &x0) {
    const int n = p.dimension;
    SolveReport rep;
    rep.x = x0;

    auto measure = [&](const Eigen::VectorXd &x, SolveReport &r) -> bool {
        auto obj = p.objective(x);
        auto con = p.constraints(x);
        if (obj.degenerate || con.degenerate || !all_finite(obj) || !all_finite(con)) return false;
        Eigen::VectorXd gradE;
        r.objective = residual_objective(obj, &gradE, n);
        auto act = select_active(con, p.active);
        r.constraint_violation = inf_norm(act.values);
        r.stationarity = stationarity(gradE, act.rows, n);
        return true;
    };
    auto converged = [&](const SolveReport &r) {
        return r.constraint_violation <= p.feasibility_tol &&
               r.stationarity <= p.stationarity_tol * (1 + std::abs(r.objective));
    };

    if (!measure(x0, rep)) {
        rep.reason = Termination::degeneracy_signal;
        return rep;
    }
    if (converged(rep)) {
        rep.reason = Termination::converged;
        return rep;
    }

    Eigen::VectorXd x = x0;
    // Multipliers start at zero; mu grows while feasibility stalls.
    Eigen::VectorXd y;
    {
        auto con = p.constraints(x);
        y = Eigen::VectorXd::Zero(select_active(con, p.active).values.size());
    }
    double mu = 1e2;
    constexpr double mu_max = 1e10;
    double omega = 1e-2;
    double lambda = 1e-3;
    double prev_violation = rep.constraint_violation;
    int consecutive_bad = 0;

    while (rep.iterations < p.max_iterations) {
        AugmentedSystem sys(n, mu, y);
        auto st = sys.evaluate(p, x);
        if (!st.ok) {
            rep.reason = Termination::degeneracy_signal;
            break;
        }
        double nu = 2;
        bool failed = false;
        while (rep.iterations < p.max_iterations) {
            Eigen::VectorXd dx, g;
            if (!sys.step(st, lambda, dx, g)) {
                lambda *= 10;
                ++rep.iterations;
                if (lambda > 1e16) { failed = true; break; }
                continue;
            }
            if (2 * inf_norm(g) <= omega) break;
            ++rep.iterations;

            const double predicted = st.phi - sys.model(st, dx);
            auto trial = sys.evaluate(p, x + dx);
            if (!trial.ok || !(predicted > 0)) {
                lambda *= nu;
                nu *= 2;
                if (lambda > 1e16) { failed = true; break; }
                continue;
            }
            const double actual = st.phi - trial.phi;
            const double rho = actual / predicted;
            if (rho > 1e-4) {
                x += dx;
                const bool tiny = actual <= 1e-15 * st.phi && dx.lpNorm<Eigen::Infinity>() <= 1e-14 * (1 + x.lpNorm<Eigen::Infinity>());
                st = std::move(trial);
                lambda *= std::max(1.0 / 3.0, 1 - std::pow(2 * rho - 1, 3));
                lambda = std::max(lambda, 1e-12);
                nu = 2;
                if (tiny) break;
            } else {
                lambda *= nu;
                nu *= 2;
                if (lambda > 1e16) { failed = true; break; }
            }
        }

        // Subproblem done: check the original problem.
        if (!measure(x, rep)) {
            rep.reason = Termination::degeneracy_signal;
            rep.x = x;
            return rep;
        }
        rep.x = x;
        if (converged(rep)) {
            rep.reason = Termination::converged;
            return rep;
        }
        if (failed) {
            // A stuck subproblem at a very large penalty has nowhere left to go.
            if (++consecutive_bad >= 3 || mu >= mu_max) {
                rep.reason = Termination::line_search_failure;
                return rep;
            }
            lambda = 1e-3;
        } else {
            consecutive_bad = 0;
        }

        auto con = p.constraints(x);
        auto act = select_active(con, p.active);
        y += mu * act.values;
        ++rep.multiplier_updates;
        if (rep.constraint_violation > 0.25 * prev_violation) mu = std::min(mu * 10, mu_max);
        prev_violation = rep.constraint_violation;
        omega = std::max(0.1 * omega, 1e-10);
    }
    if (rep.iterations >= p.max_iterations && rep.reason != Termination::degeneracy_signal)
        rep.reason = Termination::max_iterations;
    return rep;
}

} // namespace

SolveReport minimize_constrained(const NlpProblem &problem, const Eigen::VectorXd &x0) {
    if (problem.dimension != x0.size()) throw InputError("solver: x0 has the wrong dimension");
    auto rep = solve_once(problem, x0);
    if (rep.reason == Termination::line_search_failure && problem.restart_seed) {
        std::mt19937_64 rng(*problem.restart_seed);
        const double scale = 1e-6 * std::max(1.0, rep.x.lpNorm<Eigen::Infinity>());
        Eigen::VectorXd xr = rep.x;
        for (Eigen::Index k = 0; k < xr.size(); ++k)
            xr[k] += scale * (double(rng() >> 11) * 0x1.0p-53 * 2 - 1);
        NlpProblem again = problem;
        again.restart_seed.reset();
        again.max_iterations = std::max(1, problem.max_iterations - rep.iterations);
        auto second = solve_once(again, xr);
        second.iterations += rep.iterations;
        if (second.reason == Termination::converged || second.constraint_violation < rep.constraint_violation)
            rep = second;
    }
    return rep;
}

} // namespace rodflat
