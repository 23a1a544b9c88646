#include <mastl/penalty.hpp>

#include <Eigen/Cholesky>

#include <cmath>

namespace mastl {

namespace {

void check_state_refs(const Formula& f, const std::vector<AgentModel>& agents)
{
    switch (f.kind()) {
        case FormulaKind::truth:
            return;
        case FormulaKind::predicate:
        case FormulaKind::negated_predicate:
            for (const auto& s : f.predicate().selector()) {
                if (s.agent >= static_cast<int>(agents.size()))
                    throw SpecificationError("predicate references unknown agent index " + std::to_string(s.agent));
                if (s.component >= agents[s.agent].state_dim)
                    throw SpecificationError("predicate references state component " + std::to_string(s.component)
                                             + " of agent index " + std::to_string(s.agent));
            }
            return;
        default:
            for (const auto& c : f.children()) check_state_refs(c, agents);
    }
}

} // namespace

void Problem::validate() const
{
    if (agents.empty()) throw ArgumentError("problem has no agents");
    for (const auto& a : agents) a.validate();
    smoothing.validate();
    cost.validate(agents);
    if (spec.cliques.empty()) throw SpecificationError("problem has no tasks");
    for (const auto& c : spec.cliques) check_state_refs(c.formula, agents);
    if (horizon < spec.horizon())
        throw SpecificationError("control horizon " + std::to_string(horizon) + " is shorter than the formula horizon "
                                 + std::to_string(spec.horizon()));
}

bool has_individual_task(const Problem& problem, int agent)
{
    for (const auto& c : problem.spec.cliques)
        if (c.agents.size() == 1 && c.agents.front() == agent) return true;
    return false;
}

Problem individual_problem(const Problem& problem, int agent)
{
    Problem sub = problem;
    sub.spec.cliques.clear();
    for (const auto& c : problem.spec.cliques)
        if (c.agents.size() == 1 && c.agents.front() == agent) sub.spec.cliques.push_back(c);
    if (sub.spec.cliques.empty())
        throw SpecificationError("agent index " + std::to_string(agent) + " has no individual task");
    return sub;
}

PenaltyContext::PenaltyContext(const Problem& p, double lam) : problem(&p), lambda(lam)
{
    if (!(lambda >= 0.0)) throw ArgumentError("penalty weight must be nonnegative");
}

// =======================================================================
// HessianPolicy
// =======================================================================

Vector HessianPolicy::diagonal(int block, Eigen::Index block_size) const
{
    if (kind == Kind::scaled_identity) return Vector::Constant(block_size, h);
    const Vector& d = diagonals.at(block);
    if (d.size() == block_size) return d;
    if (d.size() == 0 || block_size % d.size() != 0)
        throw ArgumentError("block Hessian diagonal does not match the block size");
    return d.replicate(block_size / d.size(), 1);
}

void HessianPolicy::validate() const
{
    if (kind == Kind::scaled_identity) {
        if (!(h > 0)) throw ArgumentError("Hessian scale must be positive");
        return;
    }
    for (const auto& d : diagonals)
        if (d.size() == 0 || !(d.minCoeff() > 0)) throw ArgumentError("block Hessian diagonals must be positive");
}

// =======================================================================
// PenaltyObjective
// =======================================================================

PenaltyObjective::PenaltyObjective(const Problem& problem)
    : problem_(problem), layout_(problem.layout()), agent_cliques_(problem.agents.size())
{
    for (const auto& c : problem.cost.agents) input_only_cost_ = input_only_cost_ && c.input_only();
    for (int k = 0; k < problem.spec.size(); ++k)
        for (int a : problem.spec.cliques[k].formula.agents())
            if (a >= 0 && a < static_cast<int>(agent_cliques_.size())) agent_cliques_[a].push_back(k);
}

void PenaltyObjective::evaluate_full(const Vector& u, Point& p) const
{
    const ControlSequence seq(layout_, u);
    p.u = u;
    p.x = rollout(problem_.agents, seq);
    smooth_robustness(problem_.spec, p.x, problem_.smoothing, problem_.until, p.tape);
    p.clique_grad.assign(problem_.spec.size(), Vector());
    p.clique_grad_valid.assign(problem_.spec.size(), 0);
    p.owner = this;
}

void PenaltyObjective::finish(const Vector& u, double lambda, Point& p) const
{
    p.rho_smooth = p.tape.value();
    p.L = input_only_cost_ ? cost(u) : total_cost(problem_.cost, problem_.agents, ControlSequence(layout_, u), p.x);
    p.R = penalty_from_robustness(p.rho_smooth);
    p.F = p.L + lambda * p.R;
}

void PenaltyObjective::evaluate(const Vector& u, double lambda, Point& p) const
{
    if (u.size() != layout_.size()) throw ArgumentError("input vector has wrong size");
    if (p.owner != this || p.u.size() != u.size() || p.tape.root < 0) {
        evaluate_full(u, p);
        finish(u, lambda, p);
        return;
    }
    std::vector<char> stale(problem_.spec.size(), 0);
    bool any = false;
    for (int i = 0; i < layout_.num_agents(); ++i) {
        const int off = layout_.block_offset(i), sz = layout_.block_size(i);
        if (p.u.segment(off, sz) == u.segment(off, sz)) continue;
        p.u.segment(off, sz) = u.segment(off, sz);
        p.x.states[i] = rollout_agent(problem_.agents[i], u.segment(off, sz), layout_.horizon());
        for (int k : agent_cliques_[i]) stale[k] = 1;
        any = true;
    }
    if (any) {
        std::vector<int> cliques;
        for (int k = 0; k < problem_.spec.size(); ++k)
            if (stale[k]) {
                cliques.push_back(k);
                p.clique_grad_valid[k] = 0;
            }
        refresh(p.tape, p.x, cliques);
    }
    finish(u, lambda, p);
}

void PenaltyObjective::gradient(const Point& p, Vector& grad_L, Vector& grad_R) const
{
    if (p.owner != this) throw ArgumentError("point was not evaluated by this objective");
    const ControlSequence seq(layout_, p.u);
    grad_L = cost_total_gradient(problem_.cost, problem_.agents, seq, p.x).values;

    grad_R = Vector::Zero(layout_.size());
    const double violation = p.rho_smooth < 0.0 ? -p.rho_smooth : 0.0;
    if (violation == 0.0) return;

    // Outer softmin weights d rho / d rho_k.
    const int K = problem_.spec.size();
    const double value = p.tape.value();
    const double go = problem_.smoothing.gamma_outer;
    Trajectory xbar;
    for (int k = 0; k < K; ++k) {
        const double vk = p.tape.values[p.tape.clique_roots[k]];
        double w = 1.0;
        if (K > 1) {
            if (vk == kTruthRobustness || !std::isfinite(value)) continue;
            w = std::exp(-go * (vk - value));
        }
        if (w == 0.0) continue;
        if (!p.clique_grad_valid[k]) {
            if (xbar.states.empty()) xbar = Trajectory::zeros_like(p.x);
            else xbar.set_zero();
            clique_pullback(p.tape, k, 1.0, xbar);
            Vector& g = p.clique_grad[k];
            g = Vector::Zero(layout_.size());
            for (int a : problem_.spec.cliques[k].formula.agents()) {
                const int off = layout_.block_offset(a), sz = layout_.block_size(a);
                rollout_pullback_agent(problem_.agents[a], p.u.segment(off, sz), p.x.states[a], xbar.states[a],
                                       g.segment(off, sz));
            }
            p.clique_grad_valid[k] = 1;
        }
        grad_R.noalias() += w * p.clique_grad[k];
    }
    grad_R *= -2.0 * violation;
}

double PenaltyObjective::cost(const Vector& u) const
{
    if (input_only_cost_) {
        double acc = 0.0;
        for (int i = 0; i < layout_.num_agents(); ++i)
            acc += running_cost(problem_.cost.agents[i], layout_.input_dim(i),
                                u.segment(layout_.block_offset(i), layout_.block_size(i)));
        return acc;
    }
    const ControlSequence seq(layout_, u);
    return total_cost(problem_.cost, problem_.agents, seq, rollout(problem_.agents, seq));
}

Vector PenaltyObjective::block_direction(int j, const Vector& u, const Vector& grad_L, const Vector& grad_R,
                                         double lambda, const HessianPolicy& H) const
{
    const int off = layout_.block_offset(j);
    const int size = layout_.block_size(j);
    const int m = layout_.input_dim(j);
    const int N = layout_.horizon();
    const auto& c = problem_.cost.agents[j];
    const auto& model = problem_.agents[j];

    const Vector hdiag = H.diagonal(j, size);
    const Vector rhs = -(lambda * grad_R.segment(off, size) + grad_L.segment(off, size));

    // Hessian of the running term per time step.
    Matrix Rs = Matrix::Zero(m, m);
    if (c.running.kind == RunningCost::Kind::quadratic_input)
        Rs = c.running.weight.size() == 0 ? Matrix(2.0 * Matrix::Identity(m, m))
                                          : Matrix(c.running.weight + c.running.weight.transpose());

    Vector d(size);
    if (c.input_only()) {
        const bool diagonal_running = Rs.isDiagonal(0.0);
        for (int t = 0; t < N; ++t) {
            const auto seg = rhs.segment(t * m, m);
            const auto hd = hdiag.segment(t * m, m);
            if (diagonal_running) {
                const Vector denom = lambda * hd + Rs.diagonal();
                if (!(denom.minCoeff() > 0)) throw std::runtime_error("singular block direction system");
                d.segment(t * m, m) = seg.cwiseQuotient(denom);
            } else {
                Matrix K = Rs;
                K.diagonal() += lambda * hd;
                Eigen::LLT<Matrix> llt(K);
                if (llt.info() != Eigen::Success) throw std::runtime_error("singular block direction system");
                d.segment(t * m, m) = llt.solve(Vector(seg));
            }
        }
        return d;
    }

    // Terminal term: Gauss-Newton model J' (W + W') J of the quadratic in x(N).
    const Vector u_j = u.segment(off, size);
    const Matrix x = rollout_agent(model, u_j, N);
    const Matrix J = terminal_state_jacobian(model, u_j, x);
    const Matrix& W = c.terminal.weight;
    Matrix K = J.transpose() * (W + W.transpose()) * J;
    for (int t = 0; t < N; ++t) K.block(t * m, t * m, m, m) += Rs;
    K.diagonal() += lambda * hdiag;
    Eigen::LLT<Matrix> llt(K);
    if (llt.info() != Eigen::Success) throw std::runtime_error("singular block direction system");
    d = llt.solve(rhs);
    return d;
}

// =======================================================================
// Free functions over ControlSequence
// =======================================================================

double smooth_robustness(const Problem& problem, const ControlSequence& u)
{
    const Trajectory x = rollout(problem.agents, u);
    EvalTape tape;
    return smooth_robustness(problem.spec, x, problem.smoothing, problem.until, tape);
}

double penalty_R(const PenaltyContext& ctx, const ControlSequence& u)
{
    return penalty_from_robustness(smooth_robustness(*ctx.problem, u));
}

ControlSequence penalty_grad(const PenaltyContext& ctx, const ControlSequence& u)
{
    PenaltyObjective obj(*ctx.problem);
    if (!(u.layout == obj.layout())) throw ArgumentError("control sequence layout does not match the problem");
    PenaltyObjective::Point p;
    obj.evaluate(u.values, ctx.lambda, p);
    Vector gL, gR;
    obj.gradient(p, gL, gR);
    return ControlSequence(u.layout, std::move(gR));
}

double F_lambda(const PenaltyContext& ctx, const ControlSequence& u)
{
    PenaltyObjective obj(*ctx.problem);
    if (!(u.layout == obj.layout())) throw ArgumentError("control sequence layout does not match the problem");
    PenaltyObjective::Point p;
    obj.evaluate(u.values, ctx.lambda, p);
    return p.F;
}

ControlSequence F_lambda_grad(const PenaltyContext& ctx, const ControlSequence& u)
{
    PenaltyObjective obj(*ctx.problem);
    if (!(u.layout == obj.layout())) throw ArgumentError("control sequence layout does not match the problem");
    PenaltyObjective::Point p;
    obj.evaluate(u.values, ctx.lambda, p);
    Vector gL, gR;
    obj.gradient(p, gL, gR);
    return ControlSequence(u.layout, gL + ctx.lambda * gR);
}

} // namespace mastl
