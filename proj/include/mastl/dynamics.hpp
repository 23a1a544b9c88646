#pragma once

#include <functional>
#include <vector>

#include <mastl/types.hpp>

namespace mastl {

enum class DynamicsKind { single_integrator, unicycle, custom };

const char* to_string(DynamicsKind kind);

/*
 * Discrete-time agent model x(t+1) = f(x(t), u(t), t).
 *
 * The two built-in kinds have analytic Jacobians. A custom model supplies
 * f together with its state and input Jacobians.
 */
struct AgentModel {
    using StepFn = std::function<Vector(const Vector&, const Vector&, int)>;
    using JacobianFn = std::function<Matrix(const Vector&, const Vector&, int)>;

    DynamicsKind kind = DynamicsKind::single_integrator;
    int state_dim = 2;
    int input_dim = 2;
    Vector initial_state = Vector::Zero(2);
    double sampling_period = 1.0; // informational

    StepFn custom_step;
    JacobianFn custom_state_jacobian;
    JacobianFn custom_input_jacobian;

    static AgentModel single_integrator(const Eigen::Vector2d& x0);
    static AgentModel unicycle(const Eigen::Vector3d& x0);
    static AgentModel custom(int state_dim, int input_dim, Vector x0, StepFn f,
                             JacobianFn df_dx, JacobianFn df_du);

    // Throws ArgumentError when dimensions are inconsistent with the kind.
    void validate() const;
};

// Per-agent block layout of a stacked input vector over horizon N.
class InputLayout {
public:
    InputLayout() = default;
    InputLayout(std::vector<int> input_dims, int horizon);

    static InputLayout for_models(const std::vector<AgentModel>& models, int horizon);

    int num_agents() const { return static_cast<int>(dims_.size()); }
    int horizon() const { return horizon_; }
    int input_dim(int agent) const { return dims_[agent]; }
    int block_offset(int agent) const { return offsets_[agent]; }
    int block_size(int agent) const { return dims_[agent] * horizon_; }
    int size() const { return total_; }

    bool operator==(const InputLayout&) const = default;

private:
    std::vector<int> dims_;
    std::vector<int> offsets_;
    int horizon_ = 0;
    int total_ = 0;
};

/*
 * Stacked multi-agent input sequence. Block i holds u_i(0), ..., u_i(N-1)
 * contiguously, agents in order.
 */
struct ControlSequence {
    InputLayout layout;
    Vector values;

    ControlSequence() = default;
    explicit ControlSequence(InputLayout l) : layout(std::move(l)), values(Vector::Zero(layout.size())) {}
    ControlSequence(InputLayout l, Vector v);

    int horizon() const { return layout.horizon(); }

    auto block(int agent) { return values.segment(layout.block_offset(agent), layout.block_size(agent)); }
    auto block(int agent) const { return values.segment(layout.block_offset(agent), layout.block_size(agent)); }

    auto at(int agent, int t) {
        const int m = layout.input_dim(agent);
        return values.segment(layout.block_offset(agent) + t * m, m);
    }
    auto at(int agent, int t) const {
        const int m = layout.input_dim(agent);
        return values.segment(layout.block_offset(agent) + t * m, m);
    }
};

/*
 * Per-agent state sequences; states[i] is n_i x (N+1), column t = x_i(t).
 * The same type carries cotangents (gradients over trajectory entries).
 */
struct Trajectory {
    std::vector<Matrix> states;

    Trajectory() = default;
    explicit Trajectory(std::vector<Matrix> s) : states(std::move(s)) {}

    static Trajectory zeros_like(const Trajectory& other);
    static Trajectory zeros(const std::vector<AgentModel>& models, int horizon);

    int num_agents() const { return static_cast<int>(states.size()); }
    // Number of steps N; the trajectory holds N+1 samples.
    int horizon() const { return states.empty() ? 0 : static_cast<int>(states.front().cols()) - 1; }
    int last_index() const { return horizon(); }

    double operator()(int agent, int component, int t) const { return states[agent](component, t); }
    double& operator()(int agent, int component, int t) { return states[agent](component, t); }

    void set_zero();
    // Inner product over all entries.
    double dot(const Trajectory& other) const;
};

// One step of the model. Throws ArgumentError on dimension mismatch.
Vector step(const AgentModel& model, const Vector& x, const Vector& u, int t = 0);

// Jacobians of the step with respect to state and input.
Matrix state_jacobian(const AgentModel& model, const Vector& x, const Vector& u, int t = 0);
Matrix input_jacobian(const AgentModel& model, const Vector& x, const Vector& u, int t = 0);

Trajectory rollout(const std::vector<AgentModel>& models, const ControlSequence& u);

// Simulates a single agent over its input block.
Matrix rollout_agent(const AgentModel& model, const Eigen::Ref<const Vector>& u_block, int horizon);

/*
 * Vector-Jacobian product through the rollout: returns d(xbar . x)/du.
 * The initial state is fixed, so xbar at t = 0 does not contribute.
 */
ControlSequence rollout_pullback(const std::vector<AgentModel>& models, const ControlSequence& u,
                                 const Trajectory& x, const Trajectory& xbar);

// Single-agent version used by the block solver; writes into ubar.
void rollout_pullback_agent(const AgentModel& model, const Eigen::Ref<const Vector>& u_block,
                            const Matrix& x, const Matrix& xbar, Eigen::Ref<Vector> ubar);

/*
 * Sensitivity of the terminal state to the agent's inputs, n x (N m).
 * Used for local quadratic models of terminal costs.
 */
Matrix terminal_state_jacobian(const AgentModel& model, const Eigen::Ref<const Vector>& u_block,
                               const Matrix& x);

} // namespace mastl
