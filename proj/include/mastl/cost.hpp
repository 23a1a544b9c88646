#pragma once

#include <vector>

#include <mastl/dynamics.hpp>

namespace mastl {

// Running cost l_i(u) = u' R u, or zero.
struct RunningCost {
    enum class Kind { zero, quadratic_input };
    Kind kind = Kind::quadratic_input;
    Matrix weight; // m x m; empty means identity

    static RunningCost zero() { return {Kind::zero, {}}; }
    static RunningCost quadratic(Matrix R) { return {Kind::quadratic_input, std::move(R)}; }
    static RunningCost quadratic(double r, int m) { return {Kind::quadratic_input, r * Matrix::Identity(m, m)}; }
};

// Terminal cost V_f(x(N)) = (x(N) - target)' W (x(N) - target); the cyclic
// kind uses target = x(0).
struct TerminalCost {
    enum class Kind { zero, quadratic_to_target, cyclic };
    Kind kind = Kind::zero;
    Vector target;
    Matrix weight; // n x n

    static TerminalCost zero() { return {}; }
    static TerminalCost to_target(Vector target, Matrix W) { return {Kind::quadratic_to_target, std::move(target), std::move(W)}; }
    static TerminalCost cyclic(Matrix W) { return {Kind::cyclic, {}, std::move(W)}; }
};

struct AgentCost {
    RunningCost running;
    TerminalCost terminal;

    bool input_only() const { return terminal.kind == TerminalCost::Kind::zero; }
};

/*
 * Separable cost L(u) = sum_i L_i(u_i). Weights must be symmetric positive
 * semidefinite; validate() checks shapes and the PSD condition.
 */
struct CostSpec {
    std::vector<AgentCost> agents;

    // l_i = |u_i|^2 and V_f = 0 for every agent.
    static CostSpec input_energy(const std::vector<AgentModel>& models);

    void validate(const std::vector<AgentModel>& models) const;
};

double agent_cost(const AgentCost& c, const AgentModel& model, const Eigen::Ref<const Vector>& u_block,
                  const Matrix& x);

// Sum of the running terms only, from the input block.
double running_cost(const AgentCost& c, int input_dim, const Eigen::Ref<const Vector>& u_block);

double total_cost(const CostSpec& spec, const std::vector<AgentModel>& models, const ControlSequence& u,
                  const Trajectory& x);

struct CostGradient {
    ControlSequence du; // direct dependence on u
    Trajectory dx;      // dependence through the state (terminal terms)
};

CostGradient cost_grad(const CostSpec& spec, const std::vector<AgentModel>& models, const ControlSequence& u,
                       const Trajectory& x);

// Total gradient with respect to u, chaining the state part through the rollout.
ControlSequence cost_total_gradient(const CostSpec& spec, const std::vector<AgentModel>& models,
                                    const ControlSequence& u, const Trajectory& x);

} // namespace mastl
