#include <mastl/dynamics.hpp>

#include <cmath>

namespace mastl {

const char* to_string(DynamicsKind kind)
{
    switch (kind) {
        case DynamicsKind::single_integrator: return "single_integrator";
        case DynamicsKind::unicycle: return "unicycle";
        case DynamicsKind::custom: return "custom";
    }
    return "unknown";
}

AgentModel AgentModel::single_integrator(const Eigen::Vector2d& x0)
{
    AgentModel m;
    m.kind = DynamicsKind::single_integrator;
    m.state_dim = 2;
    m.input_dim = 2;
    m.initial_state = x0;
    return m;
}

AgentModel AgentModel::unicycle(const Eigen::Vector3d& x0)
{
    AgentModel m;
    m.kind = DynamicsKind::unicycle;
    m.state_dim = 3;
    m.input_dim = 2;
    m.initial_state = x0;
    return m;
}

AgentModel AgentModel::custom(int state_dim, int input_dim, Vector x0, StepFn f,
                              JacobianFn df_dx, JacobianFn df_du)
{
    AgentModel m;
    m.kind = DynamicsKind::custom;
    m.state_dim = state_dim;
    m.input_dim = input_dim;
    m.initial_state = std::move(x0);
    m.custom_step = std::move(f);
    m.custom_state_jacobian = std::move(df_dx);
    m.custom_input_jacobian = std::move(df_du);
    m.validate();
    return m;
}

void AgentModel::validate() const
{
    switch (kind) {
        case DynamicsKind::single_integrator:
            if (state_dim != 2 || input_dim != 2)
                throw ArgumentError("single integrator requires state and input dimension 2");
            break;
        case DynamicsKind::unicycle:
            if (state_dim != 3 || input_dim != 2)
                throw ArgumentError("unicycle requires state dimension 3 and input dimension 2");
            break;
        case DynamicsKind::custom:
            if (!custom_step || !custom_state_jacobian || !custom_input_jacobian)
                throw ArgumentError("custom model requires step and Jacobian callbacks");
            if (state_dim <= 0 || input_dim <= 0)
                throw ArgumentError("custom model requires positive dimensions");
            break;
    }
    if (initial_state.size() != state_dim)
        throw ArgumentError("initial state has dimension " + std::to_string(initial_state.size())
                            + ", expected " + std::to_string(state_dim));
    if (!initial_state.allFinite())
        throw ArgumentError("initial state must be finite");
}

// =======================================================================
// Layout and containers
// =======================================================================

InputLayout::InputLayout(std::vector<int> input_dims, int horizon)
    : dims_(std::move(input_dims)), horizon_(horizon)
{
    if (horizon_ < 0) throw ArgumentError("negative horizon");
    offsets_.reserve(dims_.size());
    for (int m : dims_) {
        if (m <= 0) throw ArgumentError("input dimension must be positive");
        offsets_.push_back(total_);
        total_ += m * horizon_;
    }
}

InputLayout InputLayout::for_models(const std::vector<AgentModel>& models, int horizon)
{
    std::vector<int> dims;
    dims.reserve(models.size());
    for (const auto& m : models) dims.push_back(m.input_dim);
    return InputLayout(std::move(dims), horizon);
}

ControlSequence::ControlSequence(InputLayout l, Vector v) : layout(std::move(l)), values(std::move(v))
{
    if (values.size() != layout.size())
        throw ArgumentError("control sequence has " + std::to_string(values.size())
                            + " entries, layout expects " + std::to_string(layout.size()));
}

Trajectory Trajectory::zeros_like(const Trajectory& other)
{
    Trajectory z;
    z.states.reserve(other.states.size());
    for (const auto& s : other.states) z.states.push_back(Matrix::Zero(s.rows(), s.cols()));
    return z;
}

Trajectory Trajectory::zeros(const std::vector<AgentModel>& models, int horizon)
{
    Trajectory z;
    z.states.reserve(models.size());
    for (const auto& m : models) z.states.push_back(Matrix::Zero(m.state_dim, horizon + 1));
    return z;
}

void Trajectory::set_zero()
{
    for (auto& s : states) s.setZero();
}

double Trajectory::dot(const Trajectory& other) const
{
    if (other.states.size() != states.size()) throw ArgumentError("trajectory shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (states[i].rows() != other.states[i].rows() || states[i].cols() != other.states[i].cols())
            throw ArgumentError("trajectory shape mismatch");
        acc += states[i].cwiseProduct(other.states[i]).sum();
    }
    return acc;
}

// =======================================================================
// Step and Jacobians
// =======================================================================

namespace {

void check_dims(const AgentModel& model, Eigen::Index nx, Eigen::Index nu)
{
    if (nx != model.state_dim || nu != model.input_dim)
        throw ArgumentError("dimension mismatch: state " + std::to_string(nx) + "/"
                            + std::to_string(model.state_dim) + ", input " + std::to_string(nu) + "/"
                            + std::to_string(model.input_dim));
}

} // namespace

Vector step(const AgentModel& model, const Vector& x, const Vector& u, int t)
{
    check_dims(model, x.size(), u.size());
    switch (model.kind) {
        case DynamicsKind::single_integrator:
            return x + u;
        case DynamicsKind::unicycle: {
            Vector next(3);
            next(0) = x(0) + u(0) * std::cos(x(2));
            next(1) = x(1) + u(0) * std::sin(x(2));
            next(2) = x(2) + u(1);
            return next;
        }
        case DynamicsKind::custom: {
            Vector next = model.custom_step(x, u, t);
            if (next.size() != model.state_dim) throw ArgumentError("custom step returned wrong dimension");
            return next;
        }
    }
    return x;
}

Matrix state_jacobian(const AgentModel& model, const Vector& x, const Vector& u, int t)
{
    check_dims(model, x.size(), u.size());
    switch (model.kind) {
        case DynamicsKind::single_integrator:
            return Matrix::Identity(2, 2);
        case DynamicsKind::unicycle: {
            Matrix A = Matrix::Identity(3, 3);
            A(0, 2) = -u(0) * std::sin(x(2));
            A(1, 2) = u(0) * std::cos(x(2));
            return A;
        }
        case DynamicsKind::custom:
            return model.custom_state_jacobian(x, u, t);
    }
    return {};
}

Matrix input_jacobian(const AgentModel& model, const Vector& x, const Vector& u, int t)
{
    check_dims(model, x.size(), u.size());
    switch (model.kind) {
        case DynamicsKind::single_integrator:
            return Matrix::Identity(2, 2);
        case DynamicsKind::unicycle: {
            Matrix B = Matrix::Zero(3, 2);
            B(0, 0) = std::cos(x(2));
            B(1, 0) = std::sin(x(2));
            B(2, 1) = 1.0;
            return B;
        }
        case DynamicsKind::custom:
            return model.custom_input_jacobian(x, u, t);
    }
    return {};
}

// =======================================================================
// Rollout
// =======================================================================

Matrix rollout_agent(const AgentModel& model, const Eigen::Ref<const Vector>& u_block, int horizon)
{
    const int n = model.state_dim;
    const int m = model.input_dim;
    if (u_block.size() != static_cast<Eigen::Index>(m) * horizon)
        throw ArgumentError("input block length does not match horizon");

    Matrix x(n, horizon + 1);
    x.col(0) = model.initial_state;
    switch (model.kind) {
        case DynamicsKind::single_integrator:
            for (int t = 0; t < horizon; ++t) {
                x(0, t + 1) = x(0, t) + u_block(2 * t);
                x(1, t + 1) = x(1, t) + u_block(2 * t + 1);
            }
            break;
        case DynamicsKind::unicycle:
            for (int t = 0; t < horizon; ++t) {
                const double v = u_block(2 * t);
                const double w = u_block(2 * t + 1);
                const double th = x(2, t);
                x(0, t + 1) = x(0, t) + v * std::cos(th);
                x(1, t + 1) = x(1, t) + v * std::sin(th);
                x(2, t + 1) = th + w;
            }
            break;
        case DynamicsKind::custom:
            for (int t = 0; t < horizon; ++t) {
                const Vector xt = x.col(t);
                const Vector ut = u_block.segment(t * m, m);
                x.col(t + 1) = step(model, xt, ut, t);
            }
            break;
    }
    return x;
}

Trajectory rollout(const std::vector<AgentModel>& models, const ControlSequence& u)
{
    if (static_cast<int>(models.size()) != u.layout.num_agents())
        throw ArgumentError("rollout: " + std::to_string(models.size()) + " models but "
                            + std::to_string(u.layout.num_agents()) + " input blocks");
    Trajectory x;
    x.states.reserve(models.size());
    for (int i = 0; i < u.layout.num_agents(); ++i) {
        if (models[i].input_dim != u.layout.input_dim(i))
            throw ArgumentError("rollout: input dimension mismatch for agent " + std::to_string(i));
        x.states.push_back(rollout_agent(models[i], u.block(i), u.horizon()));
    }
    return x;
}

void rollout_pullback_agent(const AgentModel& model, const Eigen::Ref<const Vector>& u_block,
                            const Matrix& x, const Matrix& xbar, Eigen::Ref<Vector> ubar)
{
    const int n = model.state_dim;
    const int m = model.input_dim;
    const int N = static_cast<int>(x.cols()) - 1;
    if (xbar.rows() != n || xbar.cols() != N + 1 || x.rows() != n)
        throw ArgumentError("rollout_pullback: cotangent shape mismatch");
    if (u_block.size() != static_cast<Eigen::Index>(m) * N || ubar.size() != u_block.size())
        throw ArgumentError("rollout_pullback: input shape mismatch");
    if (N == 0) return;

    switch (model.kind) {
        case DynamicsKind::single_integrator: {
            double l0 = xbar(0, N), l1 = xbar(1, N);
            for (int t = N - 1; t >= 0; --t) {
                ubar(2 * t) = l0;
                ubar(2 * t + 1) = l1;
                l0 += xbar(0, t);
                l1 += xbar(1, t);
            }
            break;
        }
        case DynamicsKind::unicycle: {
            double l0 = xbar(0, N), l1 = xbar(1, N), l2 = xbar(2, N);
            for (int t = N - 1; t >= 0; --t) {
                const double v = u_block(2 * t);
                const double c = std::cos(x(2, t));
                const double s = std::sin(x(2, t));
                ubar(2 * t) = c * l0 + s * l1;
                ubar(2 * t + 1) = l2;
                // A^T lambda
                l2 += -v * s * l0 + v * c * l1;
                l0 += xbar(0, t);
                l1 += xbar(1, t);
                l2 += xbar(2, t);
            }
            break;
        }
        case DynamicsKind::custom: {
            Vector lam = xbar.col(N);
            for (int t = N - 1; t >= 0; --t) {
                const Vector xt = x.col(t);
                const Vector ut = u_block.segment(t * m, m);
                ubar.segment(t * m, m) = input_jacobian(model, xt, ut, t).transpose() * lam;
                lam = xbar.col(t) + state_jacobian(model, xt, ut, t).transpose() * lam;
            }
            break;
        }
    }
}

ControlSequence rollout_pullback(const std::vector<AgentModel>& models, const ControlSequence& u,
                                 const Trajectory& x, const Trajectory& xbar)
{
    const int M = u.layout.num_agents();
    if (static_cast<int>(models.size()) != M || x.num_agents() != M || xbar.num_agents() != M)
        throw ArgumentError("rollout_pullback: agent count mismatch");
    ControlSequence ubar(u.layout);
    for (int i = 0; i < M; ++i)
        rollout_pullback_agent(models[i], u.block(i), x.states[i], xbar.states[i], ubar.block(i));
    return ubar;
}

Matrix terminal_state_jacobian(const AgentModel& model, const Eigen::Ref<const Vector>& u_block,
                               const Matrix& x)
{
    const int n = model.state_dim;
    const int m = model.input_dim;
    const int N = static_cast<int>(x.cols()) - 1;
    Matrix J(n, static_cast<Eigen::Index>(m) * N);
    Matrix psi = Matrix::Identity(n, n);
    for (int t = N - 1; t >= 0; --t) {
        const Vector xt = x.col(t);
        const Vector ut = u_block.segment(t * m, m);
        J.middleCols(static_cast<Eigen::Index>(t) * m, m) = psi * input_jacobian(model, xt, ut, t);
        psi = psi * state_jacobian(model, xt, ut, t);
    }
    return J;
}

} // namespace mastl
