#include <mastl/penalty_method.hpp>

#include <chrono>
#include <cmath>

namespace mastl {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool better(const SolveReport& a, double rho, double rho_smooth)
{
    if (rho != a.rho) return rho > a.rho;
    return rho_smooth > a.rho_smooth;
}

} // namespace

const char* to_string(PmTermination t)
{
    switch (t) {
        case PmTermination::penalty_threshold: return "penalty_threshold";
        case PmTermination::true_robustness_positive: return "true_robustness_positive";
        case PmTermination::max_outer_iters: return "max_outer_iters";
    }
    return "unknown";
}

void PmConfig::validate() const
{
    if (!(lambda0 > 0.0)) throw ArgumentError("lambda0 must be positive");
    if (!(eta_lambda > 1.0)) throw ArgumentError("eta_lambda must exceed 1");
    if (max_outer < 0) throw ArgumentError("outer iteration limit must be nonnegative");
    if (!(eps_infeas > 0.0)) throw ArgumentError("eps_infeas must be positive");
    if (!(eps0 > 0.0)) throw ArgumentError("eps0 must be positive");
    if (!(eta_eps > 0.0 && eta_eps <= 1.0)) throw ArgumentError("eta_eps must lie in (0, 1]");
    if (!(eps_floor > 0.0)) throw ArgumentError("inner tolerance floor must be positive");
    if (!(robustness_margin >= 0.0)) throw ArgumentError("robustness margin must be nonnegative");
    inner.validate();
}

double PmConfig::lambda_at(int k) const { return lambda0 * std::pow(eta_lambda, k); }
double PmConfig::eps_at(int k) const { return eps0 * std::pow(eta_eps, k); }
double PmConfig::inner_tolerance(int k) const { return std::max(eps_at(k), eps_floor); }

SolveReport evaluate_solution(const Problem& problem, const ControlSequence& u)
{
    SolveReport r;
    r.u = u;
    r.x = rollout(problem.agents, u);
    r.clique_rho = clique_robustness(problem.spec, r.x, problem.until);
    r.rho = kTruthRobustness;
    for (double v : r.clique_rho) r.rho = std::min(r.rho, v);
    const auto s = smooth_robustness(problem.spec, r.x, problem.smoothing, problem.until);
    r.rho_smooth = s.value;
    r.clique_rho_smooth = clique_values(s.tape);
    r.R = penalty_from_robustness(r.rho_smooth);
    r.cost = total_cost(problem.cost, problem.agents, u, r.x);
    r.feasible = r.rho > 0.0;
    return r;
}

ControlSequence warm_start(const Problem& problem, double lambda, const BcgdConfig& inner)
{
    ControlSequence u(problem.layout());
    for (int i = 0; i < problem.num_agents(); ++i)
        if (!has_individual_task(problem, i)) return u;

    for (int i = 0; i < problem.num_agents(); ++i) {
        const Problem sub = individual_problem(problem, i);
        PenaltyObjective obj(sub);
        BcgdConfig cfg = inner;
        cfg.free_blocks = {i};
        cfg.rule = BlockRule::gauss_seidel();
        cfg.seed = inner.seed + static_cast<std::uint64_t>(i);
        const auto res = bcgd_solve(obj, Vector::Zero(obj.size()), lambda, cfg);
        u.block(i) = res.u.segment(obj.block_offset(i), obj.block_size(i));
    }
    return u;
}

SolveReport pm_solve(const Problem& problem, const PmConfig& cfg)
{
    cfg.validate();
    problem.validate();
    const ControlSequence u0 =
        cfg.warm_start ? warm_start(problem, cfg.lambda0, cfg.inner) : ControlSequence(problem.layout());
    return pm_solve(problem, cfg, u0);
}

SolveReport pm_solve(const Problem& problem, const PmConfig& cfg, const ControlSequence& u0)
{
    cfg.validate();
    problem.validate();
    if (!(u0.layout == problem.layout())) throw ArgumentError("initial guess layout does not match the problem");
    const auto start = Clock::now();

    PenaltyObjective obj(problem);
    double eps_infeas = cfg.eps_infeas;

    SolveReport best = evaluate_solution(problem, u0);
    std::vector<PmOuterRecord> log;
    std::vector<BcgdTrace> traces;

    ControlSequence ubar = u0;
    double R = best.R;
    double rho = best.rho;
    int best_outer = -1;
    bool done = false;
    PmTermination reason = PmTermination::max_outer_iters;

    for (int k = 0; k <= cfg.max_outer; ++k) {
        if (cfg.mode == PmConfig::Mode::true_robustness_positive && rho > cfg.robustness_margin) {
            reason = PmTermination::true_robustness_positive;
            done = true;
            break;
        }
        if (R < eps_infeas) {
            if (cfg.mode == PmConfig::Mode::penalty_threshold) {
                reason = PmTermination::penalty_threshold;
                done = true;
                break;
            }
            // Near-feasible for the relaxation but not for the formula: tighten.
            eps_infeas *= 0.5;
        }
        if (k == cfg.max_outer) break;

        const auto t0 = Clock::now();
        BcgdConfig inner = cfg.inner;
        inner.epsilon = cfg.inner_tolerance(k);
        inner.seed = cfg.inner.seed + static_cast<std::uint64_t>(k);
        const double lambda = cfg.lambda_at(k);
        auto res = bcgd_solve(obj, ubar.values, lambda, inner);

        ubar.values = res.u;
        const SolveReport cur = evaluate_solution(problem, ubar);
        R = cur.R;
        rho = cur.rho;

        PmOuterRecord rec;
        rec.k = k;
        rec.lambda = lambda;
        rec.eps = cfg.eps_at(k);
        rec.inner_tolerance = inner.epsilon;
        rec.eps_infeas = eps_infeas;
        rec.inner_iterations = res.iterations;
        rec.inner_termination = res.trace.termination;
        rec.grad_norm = res.grad_norm;
        rec.F = res.F;
        rec.L = cur.cost;
        rec.R = cur.R;
        rec.rho_smooth = cur.rho_smooth;
        rec.rho = cur.rho;
        rec.wall_seconds = seconds_since(t0);
        log.push_back(rec);
        traces.push_back(std::move(res.trace));

        if (better(best, cur.rho, cur.rho_smooth)) {
            best = cur;
            best_outer = k;
        }
    }

    SolveReport out = std::move(best);
    if (done) {
        // The stopping test ran on the current iterate; report that one.
        if (log.empty()) {
            out.returned_initial_guess = true;
            out.best_outer = -1;
        } else {
            out = evaluate_solution(problem, ubar);
            out.best_outer = static_cast<int>(log.size()) - 1;
        }
    } else {
        out.best_outer = best_outer;
    }
    out.termination = done ? reason : PmTermination::max_outer_iters;
    out.outer = std::move(log);
    out.inner_traces = std::move(traces);
    out.final_eps_infeas = eps_infeas;
    out.wall_seconds = seconds_since(start);
    return out;
}

} // namespace mastl
