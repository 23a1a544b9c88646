#include <mastl/cost.hpp>

#include <Eigen/Eigenvalues>

namespace mastl {

namespace {

void check_psd(const Matrix& W, const std::string& what)
{
    if (W.rows() != W.cols()) throw ArgumentError(what + " weight must be square");
    if (!W.isApprox(W.transpose(), 1e-12)) throw ArgumentError(what + " weight must be symmetric");
    if (W.size() == 0) return;
    Eigen::SelfAdjointEigenSolver<Matrix> es(W, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-12) throw ArgumentError(what + " weight must be positive semidefinite");
}

Vector terminal_residual(const AgentCost& c, const AgentModel& model, const Matrix& x)
{
    const Vector xN = x.col(x.cols() - 1);
    if (c.terminal.kind == TerminalCost::Kind::cyclic) return xN - model.initial_state;
    return xN - c.terminal.target;
}

} // namespace

CostSpec CostSpec::input_energy(const std::vector<AgentModel>& models)
{
    CostSpec spec;
    for (const auto& m : models) spec.agents.push_back({RunningCost::quadratic(1.0, m.input_dim), TerminalCost::zero()});
    return spec;
}

void CostSpec::validate(const std::vector<AgentModel>& models) const
{
    if (agents.size() != models.size()) throw ArgumentError("cost spec has wrong number of agents");
    for (std::size_t i = 0; i < agents.size(); ++i) {
        const auto& c = agents[i];
        const auto& m = models[i];
        if (c.running.kind == RunningCost::Kind::quadratic_input && c.running.weight.size() != 0) {
            if (c.running.weight.rows() != m.input_dim) throw ArgumentError("running weight has wrong size");
            check_psd(c.running.weight, "running");
        }
        if (c.terminal.kind != TerminalCost::Kind::zero) {
            if (c.terminal.weight.rows() != m.state_dim) throw ArgumentError("terminal weight has wrong size");
            check_psd(c.terminal.weight, "terminal");
            if (c.terminal.kind == TerminalCost::Kind::quadratic_to_target && c.terminal.target.size() != m.state_dim)
                throw ArgumentError("terminal target has wrong size");
        }
    }
}

double running_cost(const AgentCost& c, int input_dim, const Eigen::Ref<const Vector>& u_block)
{
    if (c.running.kind == RunningCost::Kind::zero) return 0.0;
    if (c.running.weight.size() == 0) return u_block.squaredNorm();
    const auto N = u_block.size() / input_dim;
    const Eigen::Map<const Matrix> U(u_block.data(), input_dim, N);
    const Matrix& W = c.running.weight;
    if (W.isDiagonal(0.0)) return (W.diagonal().asDiagonal() * U).cwiseProduct(U).sum();
    return (W * U).cwiseProduct(U).sum();
}

double agent_cost(const AgentCost& c, const AgentModel& model, const Eigen::Ref<const Vector>& u_block,
                  const Matrix& x)
{
    double acc = running_cost(c, model.input_dim, u_block);
    if (c.terminal.kind != TerminalCost::Kind::zero) {
        const Vector r = terminal_residual(c, model, x);
        acc += r.dot(c.terminal.weight * r);
    }
    return acc;
}

double total_cost(const CostSpec& spec, const std::vector<AgentModel>& models, const ControlSequence& u,
                  const Trajectory& x)
{
    const int M = u.layout.num_agents();
    if (static_cast<int>(spec.agents.size()) != M || static_cast<int>(models.size()) != M || x.num_agents() != M)
        throw ArgumentError("total_cost: shape mismatch");
    double acc = 0.0;
    for (int i = 0; i < M; ++i) acc += agent_cost(spec.agents[i], models[i], u.block(i), x.states[i]);
    return acc;
}

CostGradient cost_grad(const CostSpec& spec, const std::vector<AgentModel>& models, const ControlSequence& u,
                       const Trajectory& x)
{
    const int M = u.layout.num_agents();
    if (static_cast<int>(spec.agents.size()) != M || static_cast<int>(models.size()) != M || x.num_agents() != M)
        throw ArgumentError("cost_grad: shape mismatch");
    CostGradient g{ControlSequence(u.layout), Trajectory::zeros_like(x)};
    for (int i = 0; i < M; ++i) {
        const auto& c = spec.agents[i];
        if (c.running.kind == RunningCost::Kind::quadratic_input) {
            if (c.running.weight.size() == 0) {
                g.du.block(i) = 2.0 * u.block(i);
            } else {
                const Matrix Rs = c.running.weight + c.running.weight.transpose();
                const int m = u.layout.input_dim(i);
                const Eigen::Map<const Matrix> U(u.block(i).data(), m, u.horizon());
                Eigen::Map<Matrix> G(g.du.block(i).data(), m, u.horizon());
                if (Rs.isDiagonal(0.0)) G = Rs.diagonal().asDiagonal() * U;
                else G.noalias() = Rs * U;
            }
        }
        if (c.terminal.kind != TerminalCost::Kind::zero) {
            const Vector r = terminal_residual(c, models[i], x.states[i]);
            const Matrix& W = c.terminal.weight;
            g.dx.states[i].col(x.horizon()) = (W + W.transpose()) * r;
        }
    }
    return g;
}

ControlSequence cost_total_gradient(const CostSpec& spec, const std::vector<AgentModel>& models,
                                    const ControlSequence& u, const Trajectory& x)
{
    auto g = cost_grad(spec, models, u, x);
    bool has_state_terms = false;
    for (const auto& c : spec.agents) has_state_terms |= !c.input_only();
    if (has_state_terms) g.du.values += rollout_pullback(models, u, x, g.dx).values;
    return g.du;
}

} // namespace mastl
