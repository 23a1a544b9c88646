#pragma once

#include <vector>

#include <mastl/cost.hpp>
#include <mastl/dynamics.hpp>
#include <mastl/formula.hpp>
#include <mastl/smooth.hpp>

namespace mastl {

/*
 * A planning problem: agent models, conjunctive clique specification,
 * smoothing, separable cost and the control horizon N.
 */
struct Problem {
    std::vector<AgentModel> agents;
    CliqueSpec spec;
    SmoothingConfig smoothing;
    CostSpec cost;
    UntilConvention until = UntilConvention::as_printed;
    int horizon = 0;

    int num_agents() const { return static_cast<int>(agents.size()); }
    InputLayout layout() const { return InputLayout::for_models(agents, horizon); }

    // Checks model dimensions, state references, cost shapes and that the
    // horizon covers every clique formula.
    void validate() const;
};

// Sub-problem over the cliques that mention only `agent`, used by the
// per-agent initialization. Returns false when the agent has no such task.
bool has_individual_task(const Problem& problem, int agent);
Problem individual_problem(const Problem& problem, int agent);

struct PenaltyContext {
    const Problem* problem = nullptr;
    double lambda = 1.0;

    PenaltyContext(const Problem& p, double lam);
};

// Smooth robustness of the problem's spec for inputs u.
double smooth_robustness(const Problem& problem, const ControlSequence& u);

// max{0, -rho_smooth}^2
double penalty_R(const PenaltyContext& ctx, const ControlSequence& u);
// -2 max{0, -rho_smooth} grad rho_smooth
ControlSequence penalty_grad(const PenaltyContext& ctx, const ControlSequence& u);
// L(u) + lambda R(u)
double F_lambda(const PenaltyContext& ctx, const ControlSequence& u);
ControlSequence F_lambda_grad(const PenaltyContext& ctx, const ControlSequence& u);

// Penalty value from a smooth robustness value.
inline double penalty_from_robustness(double rho_smooth)
{
    const double v = rho_smooth < 0.0 ? -rho_smooth : 0.0;
    return v * v;
}

// =======================================================================
// Block objective used by the BCGD solver
// =======================================================================

/*
 * Hessian approximation H_j for each block. Scaled identity h I, or a
 * user supplied positive diagonal per block (a vector of the block size, or
 * of a length dividing it, repeated).
 */
struct HessianPolicy {
    enum class Kind { scaled_identity, block_diagonal };
    Kind kind = Kind::scaled_identity;
    double h = 1e3;
    std::vector<Vector> diagonals;

    static HessianPolicy scaled_identity(double h) { return {Kind::scaled_identity, h, {}}; }
    static HessianPolicy block_diagonal(std::vector<Vector> d) { return {Kind::block_diagonal, 0.0, std::move(d)}; }

    Vector diagonal(int block, Eigen::Index block_size) const;
    void validate() const;
};

/*
 * F_lambda = L + lambda R over a Problem, exposed block-wise (one block per
 * agent). Point caches the forward pass at an iterate so the gradient can be
 * taken without re-evaluating. Re-evaluating a Point at inputs that differ
 * in a few blocks only recomputes the rollouts of those agents and the
 * cliques they appear in.
 */
class PenaltyObjective {
public:
    struct Point {
        Vector u;
        Trajectory x;
        EvalTape tape;
        double L = 0.0;
        double rho_smooth = 0.0;
        double R = 0.0;
        double F = 0.0;

        // Per-clique gradients of the clique values with respect to u.
        mutable std::vector<Vector> clique_grad;
        mutable std::vector<char> clique_grad_valid;
        const PenaltyObjective* owner = nullptr;
    };

    explicit PenaltyObjective(const Problem& problem);

    int num_blocks() const { return layout_.num_agents(); }
    int block_offset(int j) const { return layout_.block_offset(j); }
    int block_size(int j) const { return layout_.block_size(j); }
    int size() const { return layout_.size(); }
    const InputLayout& layout() const { return layout_; }
    const Problem& problem() const { return problem_; }

    void evaluate(const Vector& u, double lambda, Point& p) const;
    void gradient(const Point& p, Vector& grad_L, Vector& grad_R) const;
    double cost(const Vector& u) const;

    /*
     * Minimizer of (lambda/2) d'H_j d + lambda grad_R_j' d + L_j(u_j + d).
     * Exact for input-only costs and for terminal costs under linear
     * dynamics; otherwise a Gauss-Newton model of the terminal term is used.
     */
    Vector block_direction(int j, const Vector& u, const Vector& grad_L, const Vector& grad_R, double lambda,
                           const HessianPolicy& H) const;

    // Cliques whose formula mentions the agent.
    const std::vector<int>& agent_cliques(int agent) const { return agent_cliques_[agent]; }

private:
    void evaluate_full(const Vector& u, Point& p) const;
    void finish(const Vector& u, double lambda, Point& p) const;

    const Problem& problem_;
    InputLayout layout_;
    bool input_only_cost_ = true;
    std::vector<std::vector<int>> agent_cliques_;
};

} // namespace mastl
