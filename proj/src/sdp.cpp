#include "rwdisc/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rwdisc/errors.hpp"
#include "rwdisc/komlos.hpp"

namespace rwdisc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void SdpProblem::validate() const {
    const int d = dim();
    if (equality_rows.size() != equality_vectors.size())
        throw InputError("equality_rows and equality_vectors differ in length");
    for (const auto& v : equality_vectors)
        if (v.size() != d) throw InputError("equality vector length differs from alive count");
    for (const auto& p : pd_pairs) {
        if (p.coeff.size() != d || p.weight.size() != d)
            throw InputError("pd pair vector length differs from alive count");
        if ((p.weight.array() < 0.0).any()) throw InputError("pd pair weight is negative");
    }
}

// ---------------------------------------------------------------------------
// Builders

SdpProblem build_sdp_rows(Setting setting, const std::vector<SparseRow>& rows, int t,
                          const WalkState& state, double a) {
    SdpProblem problem;
    problem.a = a;
    problem.alive_index = state.alive_indices();
    const int d = problem.dim();
    std::vector<int> pos(state.alive.size(), -1);
    for (int p = 0; p < d; ++p) pos[problem.alive_index[p]] = p;

    for (int j = 0; j < static_cast<int>(rows.size()); ++j) {
        const SparseRow& row = rows[j];
        bool any_alive = false;
        for (const auto& e : row) any_alive = any_alive || (state.alive[e.col] && e.coef != 0.0);
        if (!any_alive) continue;

        if (row_is_big(setting, row, state.alive, a, t)) {
            VectorXd v = VectorXd::Zero(d);
            for (const auto& e : row)
                if (pos[e.col] >= 0) v[pos[e.col]] = e.coef;
            problem.equality_vectors.push_back(std::move(v));
            problem.equality_rows.push_back(j);
            continue;
        }

        if (setting == Setting::BeckFiala) {
            PdPair prop{VectorXd::Zero(d), VectorXd::Zero(d), j, PdKind::Proportional};
            PdPair orth{VectorXd::Zero(d), VectorXd::Zero(d), j, PdKind::Orthogonality};
            for (const auto& e : row) {
                const int p = pos[e.col];
                if (p < 0) continue;
                prop.coeff[p] = 1.0;
                prop.weight[p] = 1.0;
                orth.coeff[p] = state.x[e.col];
                orth.weight[p] = 1.0;
            }
            problem.pd_pairs.push_back(std::move(prop));
            problem.pd_pairs.push_back(std::move(orth));
            continue;
        }

        std::vector<double> coef_of(static_cast<std::size_t>(d), 0.0);
        for (const auto& e : row)
            if (pos[e.col] >= 0) coef_of[pos[e.col]] = e.coef;
        for (const auto& prefix : truncation_prefixes(row, state.alive, a, j)) {
            PdPair prop{VectorXd::Zero(d), VectorXd::Zero(d), j, PdKind::Proportional, prefix.threshold};
            PdPair orth{VectorXd::Zero(d), VectorXd::Zero(d), j, PdKind::Orthogonality, prefix.threshold};
            for (int i : prefix.included) {
                const int p = pos[i];
                const double b = coef_of[p];
                const double b2 = b * b;
                prop.coeff[p] = b;
                prop.weight[p] = b2;
                orth.coeff[p] = b2 * state.x[i];
                orth.weight[p] = b2 * b2;
            }
            problem.pd_pairs.push_back(std::move(prop));
            problem.pd_pairs.push_back(std::move(orth));
        }
    }
    return problem;
}

SdpProblem build_sdp_beck_fiala(const SetSystemInstance& instance, const WalkState& state, double a) {
    return build_sdp_rows(Setting::BeckFiala, sparse_rows(Instance{instance}), instance.t, state, a);
}

SdpProblem build_sdp_komlos(const MatrixInstance& instance, const WalkState& state, double a) {
    return build_sdp_rows(Setting::Komlos, sparse_rows(Instance{instance}), 0, state, a);
}

SdpProblem build_sdp(const Instance& instance, const WalkState& state, double a) {
    if (const auto* ss = std::get_if<SetSystemInstance>(&instance)) return build_sdp_beck_fiala(*ss, state, a);
    return build_sdp_komlos(std::get<MatrixInstance>(instance), state, a);
}

// ---------------------------------------------------------------------------
// Linear algebra helpers

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

int svec_dim(int r) { return r * (r + 1) / 2; }

VectorXd svec(const MatrixXd& m) {
    const int r = static_cast<int>(m.rows());
    VectorXd v(svec_dim(r));
    int p = 0;
    for (int j = 0; j < r; ++j) {
        v[p++] = m(j, j);
        for (int i = j + 1; i < r; ++i) v[p++] = kSqrt2 * m(i, j);
    }
    return v;
}

MatrixXd smat(const VectorXd& v, int r) {
    MatrixXd m(r, r);
    int p = 0;
    for (int j = 0; j < r; ++j) {
        m(j, j) = v[p++];
        for (int i = j + 1; i < r; ++i) {
            m(i, j) = v[p] / kSqrt2;
            m(j, i) = m(i, j);
            ++p;
        }
    }
    return m;
}

MatrixXd project_psd(const MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
    const VectorXd lam = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

/// Orthonormal basis of the orthogonal complement of span(vectors).
MatrixXd complement_basis(const std::vector<VectorXd>& vectors, int d) {
    if (vectors.empty()) return MatrixXd::Identity(d, d);
    MatrixXd v(d, static_cast<Eigen::Index>(vectors.size()));
    for (std::size_t c = 0; c < vectors.size(); ++c) {
        const double nrm = vectors[c].norm();
        v.col(c) = nrm > 0.0 ? VectorXd(vectors[c] / nrm) : vectors[c];
    }
    Eigen::JacobiSVD<MatrixXd> svd(v, Eigen::ComputeFullU);
    const VectorXd& sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > 1e-10 * std::max(1.0, sv[0])) ++rank;
    return svd.matrixU().rightCols(d - rank);
}

struct Evaluation {
    double max_cone = -std::numeric_limits<double>::infinity();
    double max_diag = 0.0;
    double trace = 0.0;
};

/// Evaluates pd constraints, diagonal, and trace of a gram matrix.
class ConstraintEvaluator {
public:
    explicit ConstraintEvaluator(const SdpProblem& problem) {
        const int d = problem.dim();
        const auto m = static_cast<Eigen::Index>(problem.pd_pairs.size());
        coeff_.resize(d, m);
        weight_.resize(d, m);
        for (Eigen::Index c = 0; c < m; ++c) {
            coeff_.col(c) = problem.pd_pairs[c].coeff;
            weight_.col(c) = problem.pd_pairs[c].weight;
        }
    }

    Evaluation evaluate(const MatrixXd& x) const {
        Evaluation e;
        const VectorXd diag = x.diagonal();
        e.trace = diag.sum();
        e.max_diag = diag.size() ? diag.maxCoeff() : 0.0;
        if (coeff_.cols() > 0) {
            const MatrixXd xv = x * coeff_;
            const VectorXd quad = coeff_.cwiseProduct(xv).colwise().sum().transpose();
            const VectorXd lin = weight_.transpose() * diag;
            e.max_cone = (quad - 2.0 * lin).maxCoeff();
        }
        return e;
    }

private:
    MatrixXd coeff_;
    MatrixXd weight_;
};

struct Candidate {
    MatrixXd y;  ///< reduced matrix, already scaled so that max X_ii = 1
    double trace = -1.0;
    bool valid = false;
};

/// Rescales `y` so the largest diagonal of P y P' is 1 and reports whether
/// the cone constraints hold within `cone_tol`.
Candidate normalize_candidate(const MatrixXd& y, const MatrixXd& p, const ConstraintEvaluator& ev,
                              double cone_tol, double* violation_out = nullptr) {
    Candidate c;
    const MatrixXd x = p * y * p.transpose();
    const Evaluation e = ev.evaluate(x);
    if (!(e.max_diag > 0.0)) {
        if (violation_out) *violation_out = std::max(0.0, e.max_cone);
        return c;
    }
    const double scale = 1.0 / e.max_diag;
    const double viol = e.max_cone * scale;
    if (violation_out) *violation_out = std::max(0.0, viol);
    c.y = y * scale;
    c.trace = e.trace * scale;
    c.valid = viol <= cone_tol;
    return c;
}

/// ADMM on the reduced problem in svec coordinates:
///   max <I,Y>  s.t.  Y PSD,  A svec(Y) <= h
/// split as y = z (PSD block) and A y = s (box block). Rows of A are
/// normalized. The y-update matrix I + A'A does not depend on rho.
class SplittingSolver {
public:
    SplittingSolver(const SdpProblem& problem, const MatrixXd& p) : r_(static_cast<int>(p.cols())) {
        const int n = svec_dim(r_);
        std::vector<VectorXd> rows;
        std::vector<double> rhs;
        auto add_row = [&](const MatrixXd& g, double h) {
            VectorXd row = svec(g);
            const double nrm = row.norm();
            if (nrm < 1e-14) return;  // 0 <= h with h >= 0
            rows.push_back(row / nrm);
            rhs.push_back(h / nrm);
        };
        for (const auto& pair : problem.pd_pairs) {
            const VectorXd g = p.transpose() * pair.coeff;
            const MatrixXd wp = pair.weight.cwiseSqrt().asDiagonal() * p;
            add_row(g * g.transpose() - 2.0 * wp.transpose() * wp, 0.0);
        }
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
            const VectorXd pi = p.row(i).transpose();
            add_row(pi * pi.transpose(), 1.0);
        }
        a_.resize(static_cast<Eigen::Index>(rows.size()), n);
        for (std::size_t k = 0; k < rows.size(); ++k) a_.row(k) = rows[k].transpose();
        h_ = Eigen::Map<VectorXd>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
        c_ = svec(MatrixXd::Identity(r_, r_));

        woodbury_ = a_.rows() < n;
        if (woodbury_)
            llt_.compute(MatrixXd::Identity(a_.rows(), a_.rows()) + a_ * a_.transpose());
        else
            llt_.compute(MatrixXd::Identity(n, n) + a_.transpose() * a_);
    }

    VectorXd solve_linear(const VectorXd& b) const {
        if (woodbury_) return b - a_.transpose() * llt_.solve(a_ * b);
        return llt_.solve(b);
    }

    int dim() const { return r_; }
    const MatrixXd& a() const { return a_; }
    const VectorXd& h() const { return h_; }
    const VectorXd& c() const { return c_; }

private:
    int r_;
    MatrixXd a_;
    VectorXd h_;
    VectorXd c_;
    bool woodbury_ = false;
    Eigen::LLT<MatrixXd> llt_;
};

SdpSolution assemble(const SdpProblem& problem, const MatrixXd& p, const MatrixXd& y, bool identity_y,
                     const ToleranceSet& tol) {
    SdpSolution sol;
    if (y.rows() == 0) {
        sol.vectors = MatrixXd::Zero(p.rows(), 0);
    } else if (identity_y) {
        // y = s * I
        sol.vectors = p * std::sqrt(std::max(0.0, y(0, 0)));
    } else {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (y + y.transpose()));
        std::vector<Eigen::Index> keep;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
            if (es.eigenvalues()[i] > tol.rank) keep.push_back(i);
        MatrixXd l(y.rows(), static_cast<Eigen::Index>(keep.size()));
        for (std::size_t k = 0; k < keep.size(); ++k)
            l.col(k) = es.eigenvectors().col(keep[k]) * std::sqrt(es.eigenvalues()[keep[k]]);
        sol.vectors = p * l;
    }
    sol.gram = sol.vectors * sol.vectors.transpose();
    sol.objective = sol.gram.trace();
    sol.residuals = check_feasibility(problem, sol, tol);
    return sol;
}

}  // namespace

// ---------------------------------------------------------------------------
// Solver

SdpSolution solve(const SdpProblem& problem, const ToleranceSet& tol, const SolverOptions& options,
                  const MatrixXd* warm_start) {
    problem.validate();
    const int d = problem.dim();
    if (d == 0) {
        SdpSolution sol;
        sol.gram = MatrixXd::Zero(0, 0);
        sol.vectors = MatrixXd::Zero(0, 0);
        sol.method = "empty";
        sol.residuals = check_feasibility(problem, sol, tol);
        return sol;
    }
    if (warm_start && (warm_start->rows() != d || warm_start->cols() != d))
        throw InputError("warm start dimension does not match problem");

    const MatrixXd p = complement_basis(problem.equality_vectors, d);
    const int r = static_cast<int>(p.cols());
    const ConstraintEvaluator ev(problem);
    const double floor = d / 3.0;
    const double accept_target = std::max(floor, options.accept_fraction * d);
    const double cone_tol = 0.1 * tol.ineq;

    if (r == 0) {
        // Every direction is pinned by an equality; only X = 0 remains.
        SdpSolution sol = assemble(problem, p, MatrixXd::Zero(0, 0), false, tol);
        sol.method = "pinned";
        return sol;
    }

    Candidate best;
    bool best_is_identity = false;
    std::vector<double> history;
    double best_merit = std::numeric_limits<double>::infinity();
    auto record = [&](double violation, double trace) {
        best_merit = std::min(best_merit, violation + std::max(0.0, floor - trace));
        history.push_back(best_merit);
    };
    auto finish = [&](const char* method, int iterations) {
        SdpSolution sol = assemble(problem, p, best.y, best_is_identity, tol);
        sol.method = method;
        sol.iterations = iterations;
        sol.residual_history = std::move(history);
        return sol;
    };

    {
        double viol = 0.0;
        Candidate proj = normalize_candidate(MatrixXd::Identity(r, r), p, ev, cone_tol, &viol);
        record(viol, proj.trace);
        if (proj.valid) {
            best = std::move(proj);
            best_is_identity = true;
        }
    }
    if (best.valid && !options.polish && best.trace >= accept_target) return finish("projector", 0);

    MatrixXd y0 = MatrixXd::Identity(r, r);
    if (warm_start) {
        const MatrixXd yw = project_psd(p.transpose() * (*warm_start) * p);
        double viol = 0.0;
        Candidate warm = normalize_candidate(yw, p, ev, cone_tol, &viol);
        record(viol, warm.trace);
        if (warm.valid && warm.trace > best.trace) {
            best = std::move(warm);
            best_is_identity = false;
        }
        if (best.valid && !options.polish && best.trace >= accept_target) return finish("warm-start", 0);
        y0 = warm.y.size() ? warm.y : yw;
    }
    if (best.valid) y0 = best.y;

    const SplittingSolver split(problem, p);
    const MatrixXd& a = split.a();
    const VectorXd& h = split.h();
    const VectorXd& c = split.c();
    const double alpha = 1.6;
    double rho = 1.0;

    VectorXd z = svec(y0);
    VectorXd s = (a * z).cwiseMin(h);
    VectorXd mu = VectorXd::Zero(z.size());
    VectorXd nu = VectorXd::Zero(s.size());
    VectorXd y, ay;
    double r_prim = 0.0, r_dual = 0.0;

    for (int it = 1; it <= options.max_iterations; ++it) {
        y = split.solve_linear(c / rho + (z - mu) + a.transpose() * (s - nu));
        ay = a * y;
        const VectorXd y_rel = alpha * y + (1.0 - alpha) * z;
        const VectorXd ay_rel = alpha * ay + (1.0 - alpha) * s;
        const VectorXd z_old = z;
        const VectorXd s_old = s;
        z = svec(project_psd(smat(y_rel + mu, r)));
        s = (ay_rel + nu).cwiseMin(h);
        mu += y_rel - z;
        nu += ay_rel - s;

        if (it % options.check_every != 0 && it != options.max_iterations) continue;

        r_prim = std::max((y - z).lpNorm<Eigen::Infinity>(),
                          s.size() ? (ay - s).lpNorm<Eigen::Infinity>() : 0.0);
        r_dual = rho * std::max((z - z_old).lpNorm<Eigen::Infinity>(),
                                s.size() ? (a.transpose() * (s - s_old)).lpNorm<Eigen::Infinity>() : 0.0);
        const bool converged = r_prim < options.convergence_eps && r_dual < options.convergence_eps;

        double viol = 0.0;
        Candidate cand = normalize_candidate(smat(z, r), p, ev, cone_tol, &viol);
        record(viol, cand.trace);
        if (cand.valid && cand.trace > best.trace) {
            best = std::move(cand);
            best_is_identity = false;
        }
        if (best.valid && ((!options.polish && best.trace >= accept_target) || converged))
            return finish("splitting", it);

        if (it % (5 * options.check_every) == 0) {
            if (r_prim > 10.0 * r_dual) {
                rho *= 4.0;
                mu /= 4.0;
                nu /= 4.0;
            } else if (r_dual > 10.0 * r_prim) {
                rho /= 4.0;
                mu *= 4.0;
                nu *= 4.0;
            }
        }
    }
    if (best.valid) return finish("splitting", options.max_iterations);

    std::ostringstream os;
    os << "SDP solver hit the iteration limit (" << options.max_iterations << ") without a feasible point; d="
       << d << ", pd pairs=" << problem.pd_pairs.size() << ", equalities=" << problem.equality_vectors.size()
       << ", best violation=" << best_merit << ", primal residual=" << r_prim << ", dual residual=" << r_dual;
    throw SolverError(os.str());
}

// ---------------------------------------------------------------------------
// Factorization and residuals

MatrixXd factorize(const MatrixXd& gram, const ToleranceSet& tol) {
    if (gram.rows() != gram.cols()) throw InputError("gram matrix is not square");
    const Eigen::Index d = gram.rows();
    if (d == 0) return MatrixXd::Zero(0, 0);
    const double scale = std::max(1.0, gram.cwiseAbs().maxCoeff());
    if ((gram - gram.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw InputError("gram matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram);
    if (es.eigenvalues()[0] < -tol.psd * static_cast<double>(d)) {
        std::ostringstream os;
        os << "gram matrix has eigenvalue " << es.eigenvalues()[0] << " below -eps_psd";
        throw InputError(os.str());
    }
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < d; ++i)
        if (es.eigenvalues()[i] >= tol.rank) keep.push_back(i);
    MatrixXd u(d, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k)
        u.col(k) = es.eigenvectors().col(keep[k]) * std::sqrt(es.eigenvalues()[keep[k]]);
    return u;
}

namespace {

std::string pd_name(const SdpProblem& problem, std::size_t c) {
    const auto& pair = problem.pd_pairs[c];
    std::ostringstream os;
    os << "pd[" << c << "] row " << pair.row
       << (pair.kind == PdKind::Proportional ? " proportional" : " orthogonality");
    if (std::isfinite(pair.threshold)) os << " threshold " << pair.threshold;
    return os.str();
}

}  // namespace

ResidualReport check_feasibility(const SdpProblem& problem, const SdpSolution& solution,
                                 const ToleranceSet& tol) {
    ResidualReport rep;
    const int d = problem.dim();
    const MatrixXd& x = solution.gram;
    if (x.rows() != d || x.cols() != d) throw InputError("solution dimension does not match problem");

    rep.objective = x.trace();
    rep.objective_floor = d / 3.0 - tol.obj * d;
    rep.objective_ok = rep.objective >= rep.objective_floor;
    if (!rep.objective_ok) rep.violations.push_back({"objective", rep.objective, rep.objective_floor});
    if (d == 0) return rep;

    for (std::size_t j = 0; j < problem.equality_vectors.size(); ++j) {
        const VectorXd xv = x * problem.equality_vectors[j];
        const double quad = std::abs(problem.equality_vectors[j].dot(xv));
        rep.max_equality = std::max(rep.max_equality, quad);
        rep.max_equality_action = std::max(rep.max_equality_action, xv.lpNorm<Eigen::Infinity>());
        if (quad > tol.eq * d) {
            rep.equality_ok = false;
            std::ostringstream os;
            os << "equality[" << j << "] row " << problem.equality_rows[j];
            rep.violations.push_back({os.str(), quad, tol.eq * d});
        }
    }

    const VectorXd diag = x.diagonal();
    for (std::size_t c = 0; c < problem.pd_pairs.size(); ++c) {
        const auto& pair = problem.pd_pairs[c];
        const double slack = 2.0 * pair.weight.dot(diag) - pair.coeff.dot(x * pair.coeff);
        rep.min_pd_slack = std::min(rep.min_pd_slack, slack);
        if (slack < -tol.ineq) {
            rep.inequality_ok = false;
            rep.violations.push_back({pd_name(problem, c), slack, -tol.ineq});
        }
    }

    for (int i = 0; i < d; ++i) {
        const double over = diag[i] - 1.0;
        rep.max_diag_overflow = std::max(rep.max_diag_overflow, over);
        if (over > tol.ineq) {
            rep.diag_ok = false;
            std::ostringstream os;
            os << "diag[" << i << "] variable " << problem.alive_index[i];
            rep.violations.push_back({os.str(), diag[i], 1.0 + tol.ineq});
        }
    }

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (x + x.transpose()), Eigen::EigenvaluesOnly);
    rep.min_eigenvalue = es.eigenvalues()[0];
    rep.psd_ok = rep.min_eigenvalue >= -tol.psd * d;
    if (!rep.psd_ok) rep.violations.push_back({"psd", rep.min_eigenvalue, -tol.psd * d});

    if (solution.vectors.rows() != d) {
        rep.factor_ok = false;
        rep.max_factor_error = std::numeric_limits<double>::infinity();
        rep.violations.push_back({"factor", rep.max_factor_error, tol.fact});
    } else {
        rep.max_factor_error = (solution.vectors * solution.vectors.transpose() - x).cwiseAbs().maxCoeff();
        rep.factor_ok = rep.max_factor_error <= tol.fact;
        if (!rep.factor_ok) rep.violations.push_back({"factor", rep.max_factor_error, tol.fact});
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Dual side

MatrixXd dual_operator(const SdpProblem& problem, const DualSolution& dual) {
    const int d = problem.dim();
    if (dual.b.size() != d || dual.alpha.size() != static_cast<Eigen::Index>(problem.equality_vectors.size()) ||
        dual.beta.size() != static_cast<Eigen::Index>(problem.pd_pairs.size()))
        throw InputError("dual solution dimensions do not match problem");
    MatrixXd op = dual.b.asDiagonal();
    for (std::size_t j = 0; j < problem.equality_vectors.size(); ++j) {
        const VectorXd& v = problem.equality_vectors[j];
        op += dual.alpha[j] * v * v.transpose();
    }
    for (std::size_t c = 0; c < problem.pd_pairs.size(); ++c) {
        const auto& pair = problem.pd_pairs[c];
        op += dual.beta[c] * pair.coeff * pair.coeff.transpose();
        op.diagonal() -= 2.0 * dual.beta[c] * pair.weight;
    }
    return op;
}

DualCheck check_dual_feasibility(const SdpProblem& problem, const DualSolution& dual, const ToleranceSet& tol) {
    DualCheck out;
    const int d = problem.dim();
    const MatrixXd op = dual_operator(problem, dual);
    out.signs_ok = (dual.b.array() >= 0.0).all() && (dual.beta.array() >= 0.0).all();
    out.objective = dual.b.sum();
    if (d == 0) {
        out.feasible = out.signs_ok;
        return out;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(op - MatrixXd::Identity(d, d), Eigen::EigenvaluesOnly);
    out.min_eigenvalue = es.eigenvalues()[0];
    out.feasible = out.signs_ok && out.min_eigenvalue >= -tol.psd * d;
    return out;
}

}  // namespace rwdisc
