// SPDX-License-Identifier: Apache-2.0
#ifndef PFCRACK_PATHFOLLOWING_HPP
#define PFCRACK_PATHFOLLOWING_HPP

#include "pfcrack/phasefield.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace pfcrack {

enum class StrainMeasure { principal_max, loading_component };

inline std::string to_string(StrainMeasure m)
{
    return m == StrainMeasure::principal_max ? "principal_max" : "loading_component";
}

inline StrainMeasure parse_strain_measure(const std::string& s)
{
    if (s == "principal_max") {
        return StrainMeasure::principal_max;
    }
    if (s == "loading_component") {
        return StrainMeasure::loading_component;
    }
    throw Error("unknown strain measure '" + s + "'");
}

inline double strain_measure(const SymTensor2& t, StrainMeasure m)
{
    return m == StrainMeasure::principal_max ? t.max_eigenvalue() : t.yy;
}

struct ControlParams {
    /// Maximum strain increment per step; <= 0 asks the driver to pick one.
    double delta_eps_imp = 0.0;
    StrainMeasure measure = StrainMeasure::principal_max;
    double root_tol = 1e-10;
    /// Initial upper bracket is bracket_factor * (lambda_prev + delta / m_bar).
    double bracket_factor = 10.0;
    /// How many times a step may halve its increment when the control equation has no root
    /// or the alternate minimization does not settle.
    int max_halvings = 30;
    /// Ceiling for the adaptive increment. Once damage slows the load factor down,
    /// the increment grows (by at most max_growth per step) so that each step moves
    /// lambda about as much as the first, elastic, step did. Values <= delta_eps_imp
    /// keep the increment constant.
    double max_delta_eps = 0.0;
    double max_growth = 1.5;
    /// After this many alternate-minimization iterations without convergence the
    /// irreversibility bound is moved up to the current iterate at every further
    /// iteration. This breaks the period-two cycles the load factor and the phase can
    /// fall into when the crack jumps. 0 disables it.
    int stall_iterations = 500;
    /// A crack that jumps at nearly fixed load can leave no root however small the
    /// increment. Once the halvings are used up on such a step, the increment is
    /// doubled up to this many times instead.
    int max_enlargements = 8;

    void validate() const
    {
        require(root_tol > 0.0, "root_tol must be positive");
        require(bracket_factor > 1.0, "bracket_factor must exceed 1");
        require(max_growth >= 1.0, "max_growth must be at least 1");
        require(stall_iterations >= 0 && max_halvings >= 0 && max_enlargements >= 0,
                "stall_iterations, max_halvings and max_enlargements must be non-negative");
    }
};

struct ControlSolution {
    double lambda = 0.0;
    double residual = 0.0; // f(lambda) - delta
    bool found = false;
};

/// Largest lambda > 0 with max_q m(lambda eps_bar_q - eps_prev_q) = delta. The left
/// side is convex in lambda, so the largest root is the only crossing to the right
/// of the minimizer.
inline ControlSolution solve_control_equation(const std::vector<SymTensor2>& eps_bar, const std::vector<SymTensor2>& eps_prev,
                                              double delta, StrainMeasure measure, double root_tol,
                                              double lambda_prev = 0.0, double bracket_factor = 10.0)
{
    require(eps_bar.size() == eps_prev.size(), "strain sets must share quadrature points");
    require(delta > 0.0, "strain increment must be positive");
    auto f = [&](double lam) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t q = 0; q < eps_bar.size(); ++q) {
            m = std::max(m, strain_measure(eps_bar[q] * lam - eps_prev[q], measure));
        }
        return m;
    };
    double m_bar = 0.0;
    for (const auto& e : eps_bar) {
        m_bar = std::max(m_bar, strain_measure(e, measure));
    }
    if (!(m_bar > 0.0)) {
        throw ControlEquationError("unit-load strain field has no positive measure; control equation is degenerate");
    }
    lambda_prev = std::max(lambda_prev, 0.0);

    double hi = bracket_factor * lambda_prev + bracket_factor * delta / m_bar;
    double f_hi = f(hi);
    for (int k = 0; k < 200 && !(f_hi > delta); ++k) {
        hi *= 2.0;
        f_hi = f(hi);
    }
    if (!(f_hi > delta)) {
        return {};
    }

    double lo = lambda_prev;
    double f_lo = f(lo);
    if (!(f_lo < delta)) {
        // Golden-section search for the minimizer of the convex function on [0, hi].
        const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
        double a = 0.0, b = hi;
        double c = b - invphi * (b - a), d = a + invphi * (b - a);
        double fc = f(c), fd = f(d);
        for (int k = 0; k < 200 && (b - a) > 1e-15 * hi; ++k) {
            if (fc < fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - invphi * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + invphi * (b - a);
                fd = f(d);
            }
            if (std::min(fc, fd) < delta) {
                break;
            }
        }
        lo = fc < fd ? c : d;
        f_lo = std::min(fc, fd);
        if (!(f_lo < delta)) {
            ControlSolution none;
            none.residual = f_lo - delta;
            return none;
        }
    }

    ControlSolution sol;
    for (int k = 0; k < 400; ++k) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        sol.lambda = mid;
        sol.residual = fm - delta;
        if (std::abs(sol.residual) <= root_tol * delta || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
            break;
        }
        if (fm < delta) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    sol.found = std::abs(sol.residual) <= root_tol * delta;
    return sol;
}

/// Overload taking the full parameter block.
inline ControlSolution solve_control_equation(const std::vector<SymTensor2>& eps_bar, const std::vector<SymTensor2>& eps_prev,
                                              const ControlParams& ctrl, double lambda_prev = 0.0)
{
    return solve_control_equation(eps_bar, eps_prev, ctrl.delta_eps_imp, ctrl.measure, ctrl.root_tol, lambda_prev,
                                  ctrl.bracket_factor);
}

/// Increment giving about target_steps equal steps up to lambda_target in the linear regime.
inline double suggest_delta_eps(const std::vector<SymTensor2>& eps_bar, StrainMeasure measure, double lambda_target,
                                int target_steps)
{
    double m_bar = 0.0;
    for (const auto& e : eps_bar) {
        m_bar = std::max(m_bar, strain_measure(e, measure));
    }
    require(m_bar > 0.0 && lambda_target > 0.0 && target_steps > 0, "cannot size the strain increment");
    return m_bar * lambda_target / target_steps;
}

struct FieldState {
    DisplacementField u;
    PhaseField alpha;
    double lambda = 0.0;
};

struct LoadStepRecord {
    int step = 0;
    double lambda = 0.0;
    double u_imp = 0.0;
    double force = 0.0;
    double elastic_energy = 0.0;
    double dissipation = 0.0;
    int iterations = 0;
    double crack_length = 0.0;
    double delta_eps = 0.0;
    bool reduced_increment = false;
    /// The step needed the stall treatment (irreversibility bound moved to an iterate).
    bool stalled = false;
    /// The step only had a root with an increment above the scheduled one.
    bool enlarged_increment = false;
    double control_residual = 0.0;
};

struct StopCriteria {
    int max_steps = 1000;
    double max_crack_length = std::numeric_limits<double>::infinity();
    /// Growth of the crack-length estimate beyond its initial value.
    double max_crack_growth = std::numeric_limits<double>::infinity();
    double max_u_imp = std::numeric_limits<double>::infinity();
};

/// Alternate minimization along the equilibrium path with the strain-increment
/// control of the load factor. Owns the factorization caches for one mesh.
class PathFollower {
public:
    PathFollower(const FeSpace& space, const MaterialParams& mat, const PhaseFieldParams& pf, const ControlParams& ctrl,
                 double tol_alpha = 1e-4, int max_iter = 2000, double gc_effective = 0.0)
        : space_(&space), mat_(mat), pf_(pf), ctrl_(ctrl), tol_alpha_(tol_alpha), max_iter_(max_iter),
          sets_(boundary_dof_sets(space.mesh())), unit_bc_(sent_dirichlet(sets_, 1.0)),
          elastic_(space, mat, unit_bc_.dofs), phase_(space, pf)
    {
        ctrl.validate();
        require(tol_alpha > 0.0 && max_iter > 0, "invalid alternate-minimization settings");
        gc_eff_ = gc_effective > 0.0 ? gc_effective : apparent_gc(pf.gc_numeric, space.mesh().h_fine, pf.ell, pf.c_w);
    }

    const FeSpace& space() const { return *space_; }
    const ControlParams& control() const { return ctrl_; }
    void set_delta(double delta) { ctrl_.delta_eps_imp = delta; }
    double gc_effective() const { return gc_eff_; }
    double tol_alpha() const { return tol_alpha_; }
    const DirichletBc& unit_bc() const { return unit_bc_; }

    /// Unit-load displacement for a given phase field (refactorizes).
    Eigen::VectorXd unit_solution(const Eigen::VectorXd& alpha)
    {
        elastic_.factorize(alpha, pf_.k_res);
        Eigen::VectorXd u = elastic_.solve(unit_bc_.values);
        check_residual();
        return u;
    }

    FieldState initial_state(const PhaseField& alpha0) const
    {
        FieldState s;
        s.alpha = alpha0;
        s.u.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * space_->num_nodes()));
        s.u.dirichlet = sent_dirichlet(sets_, 0.0);
        s.lambda = 0.0;
        return s;
    }

    LoadStepRecord record(const FieldState& s, int step, int iterations) const
    {
        LoadStepRecord r;
        r.step = step;
        r.lambda = s.lambda;
        r.u_imp = s.lambda;
        r.force = resultant(internal_force(*space_, mat_, s.alpha.values, s.u.values, pf_.k_res), space_->mesh().node_set("top"))[1];
        r.elastic_energy = elastic_energy(*space_, mat_, s.alpha.values, s.u.values, pf_.k_res);
        r.dissipation = dissipation_energy(*space_, pf_, s.alpha.values);
        r.iterations = iterations;
        r.crack_length = r.dissipation / gc_eff_;
        return r;
    }

    struct StepResult {
        FieldState state;
        LoadStepRecord record;
    };

    /// One converged point of the path starting from s0.
    StepResult load_step(const FieldState& s0, int step_index)
    {
        require(ctrl_.delta_eps_imp > 0.0, "strain increment not set");
        const auto eps0 = strain_at_quadrature(*space_, s0.u.values);
        double delta = ctrl_.delta_eps_imp;
        for (int halving = 0; halving <= ctrl_.max_halvings; ++halving, delta *= 0.5) {
            auto out = try_step(s0, eps0, delta);
            if (out) {
                out->record.step = step_index;
                out->record.delta_eps = delta;
                out->record.reduced_increment = halving > 0;
                return *out;
            }
        }
        if (failure_ == Failure::no_root) {
            delta = ctrl_.delta_eps_imp;
            for (int e = 1; e <= ctrl_.max_enlargements; ++e) {
                delta *= 2.0;
                auto out = try_step(s0, eps0, delta);
                if (out) {
                    out->record.step = step_index;
                    out->record.delta_eps = delta;
                    out->record.enlarged_increment = true;
                    return *out;
                }
                if (failure_ != Failure::no_root) {
                    break;
                }
            }
        }
        if (failure_ == Failure::no_root) {
            throw ControlEquationError("control equation has no root even after " + std::to_string(ctrl_.max_halvings) +
                                       " halvings and " + std::to_string(ctrl_.max_enlargements) +
                                       " doublings of the strain increment");
        }
        throw SolverError("load step did not converge within " + std::to_string(max_iter_) +
                          " alternate-minimization iterations, even after " + std::to_string(ctrl_.max_halvings) +
                          " halvings of the strain increment");
    }

private:
    void check_residual() const
    {
        if (!(elastic_.last_relative_residual() <= 1e-10)) {
            throw SolverError("elastic solve residual " + std::to_string(elastic_.last_relative_residual()) +
                              " exceeds 1e-10");
        }
    }

    std::optional<StepResult> try_step(const FieldState& s0, const std::vector<SymTensor2>& eps0, double delta)
    {
        Eigen::VectorXd alpha = s0.alpha.values;
        Eigen::VectorXd lower = s0.alpha.values;
        bool stalled = false;
        double lambda_old = std::numeric_limits<double>::quiet_NaN();
        double dalpha = std::numeric_limits<double>::infinity();
        for (int k = 1; k <= max_iter_; ++k) {
            const Eigen::VectorXd ubar = unit_solution(alpha);
            const auto eps_bar = strain_at_quadrature(*space_, ubar);
            const ControlSolution c =
                solve_control_equation(eps_bar, eps0, delta, ctrl_.measure, ctrl_.root_tol, s0.lambda, ctrl_.bracket_factor);
            if (!c.found) {
                failure_ = Failure::no_root;
                return std::nullopt;
            }
            if (k > 1 && dalpha <= tol_alpha_ && std::abs(c.lambda - lambda_old) <= 1e-6 * std::max(c.lambda, 1e-300)) {
                return finish(s0, ubar, c, alpha, k - 1, stalled);
            }

            psi_.resize(eps_bar.size());
            const auto psi_bar = energy_density_at_quadrature(*space_, mat_, ubar);
            for (std::size_t q = 0; q < psi_bar.size(); ++q) {
                psi_[q] = c.lambda * c.lambda * psi_bar[q];
            }
            if (ctrl_.stall_iterations > 0 && k > ctrl_.stall_iterations) {
                lower = alpha;
                stalled = true;
            }
            const Eigen::VectorXd next = phase_.solve(psi_, lower, alpha).x;
            dalpha = (next - alpha).lpNorm<Eigen::Infinity>();
            if (dalpha == 0.0) {
                // The next elastic solve would reproduce ubar and lambda exactly.
                return finish(s0, ubar, c, alpha, k, stalled);
            }
            alpha = next;
            lambda_old = c.lambda;
        }
        failure_ = Failure::not_converged;
        return std::nullopt;
    }

    StepResult finish(const FieldState& s0, const Eigen::VectorXd& ubar, const ControlSolution& c,
                      const Eigen::VectorXd& alpha, int iterations, bool stalled)
    {
        StepResult r;
        r.state.alpha = s0.alpha;
        r.state.alpha.values = alpha;
        r.state.lambda = c.lambda;
        r.state.u.values = c.lambda * ubar;
        r.state.u.dirichlet = sent_dirichlet(sets_, c.lambda);
        r.record = record(r.state, 0, iterations);
        r.record.control_residual = c.residual;
        r.record.stalled = stalled;
        return r;
    }

    const FeSpace* space_;
    MaterialParams mat_;
    PhaseFieldParams pf_;
    ControlParams ctrl_;
    double tol_alpha_;
    int max_iter_;
    double gc_eff_ = 0.0;
    SentDofSets sets_;
    DirichletBc unit_bc_;
    ElasticSolver elastic_;
    PhaseSolver phase_;
    std::vector<double> psi_;
    enum class Failure { no_root, not_converged } failure_ = Failure::no_root;
};

struct PathResult {
    std::vector<LoadStepRecord> records;
    FieldState final_state;
    bool completed = true;
    std::string error;
    std::string stop_reason;
};

/// Runs load steps from `init` until a stop criterion. `on_step` (optional) sees
/// every converged state, including the initial one as step 0. Errors end the run
/// but keep the records computed so far.
inline PathResult run_equilibrium_path(PathFollower& follower, const FieldState& init, const StopCriteria& stop,
                                       const std::function<void(const FieldState&, const LoadStepRecord&)>& on_step = {})
{
    PathResult res;
    FieldState state = init;
    res.records.push_back(follower.record(state, 0, 0));
    if (on_step) {
        on_step(state, res.records.back());
    }
    const double len0 = res.records.front().crack_length;
    const double base_delta = follower.control().delta_eps_imp;
    const double cap_delta = std::max(base_delta, follower.control().max_delta_eps);
    double reference_dlambda = 0.0;
    res.stop_reason = "max_steps";
    for (int n = 1; n <= stop.max_steps; ++n) {
        try {
            const double lambda_prev = state.lambda;
            auto out = follower.load_step(state, n);
            state = std::move(out.state);
            res.records.push_back(out.record);
            const double dl = std::abs(state.lambda - lambda_prev);
            if (n == 1) {
                reference_dlambda = dl;
            } else if (cap_delta > base_delta && reference_dlambda > 0.0) {
                const double g = follower.control().max_growth;
                const double factor = dl > 0.0 ? std::clamp(reference_dlambda / dl, 1.0 / g, g) : g;
                follower.set_delta(std::clamp(out.record.delta_eps * factor, base_delta, cap_delta));
            }
        } catch (const std::exception& ex) {
            res.completed = false;
            res.error = "step " + std::to_string(n) + ": " + ex.what();
            res.stop_reason = "error";
            break;
        }
        const auto& r = res.records.back();
        if (on_step) {
            on_step(state, r);
        }
        if (r.crack_length >= stop.max_crack_length) {
            res.stop_reason = "max_crack_length";
            break;
        }
        if (r.crack_length - len0 >= stop.max_crack_growth) {
            res.stop_reason = "max_crack_growth";
            break;
        }
        if (r.u_imp >= stop.max_u_imp) {
            res.stop_reason = "max_u_imp";
            break;
        }
    }
    follower.set_delta(base_delta);
    res.final_state = std::move(state);
    return res;
}

} // namespace pfcrack

#endif
