#pragma once

// Random instance generators and independent reference implementations
// shared by the unit tests and the acceptance suite.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Cholesky>

#include <mastl/bcgd.hpp>
#include <mastl/cost.hpp>
#include <mastl/dynamics.hpp>
#include <mastl/formula.hpp>
#include <mastl/penalty.hpp>
#include <mastl/smooth.hpp>

namespace mastl::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline bool coin(Rng& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

// Planar agents: state components 0 and 1 are positions.
inline Trajectory random_trajectory(Rng& rng, int agents, int horizon, int state_dim = 2, double scale = 2.0)
{
    Trajectory x;
    for (int i = 0; i < agents; ++i) {
        Matrix s(state_dim, horizon + 1);
        for (Eigen::Index c = 0; c < s.size(); ++c) s.data()[c] = uniform(rng, -scale, scale);
        x.states.push_back(s);
    }
    return x;
}

inline Predicate random_affine(Rng& rng, int agents, int state_dim = 2)
{
    const int k = uniform_int(rng, 1, 3);
    std::vector<StateRef> sel;
    Vector c(k);
    for (int i = 0; i < k; ++i) {
        sel.push_back({uniform_int(rng, 0, agents - 1), uniform_int(rng, 0, state_dim - 1)});
        c(i) = uniform(rng, -1.5, 1.5);
    }
    return Predicate::affine(sel, c, uniform(rng, -1.0, 1.0));
}

inline Predicate random_ball(Rng& rng, int agents)
{
    if (agents >= 2 && coin(rng)) {
        int i = uniform_int(rng, 0, agents - 1), j = uniform_int(rng, 0, agents - 2);
        if (j >= i) ++j;
        return Predicate::pairwise_ball(i, j, uniform(rng, 0.2, 2.0));
    }
    const int a = uniform_int(rng, 0, agents - 1);
    Matrix A = Matrix::Identity(2, 2);
    A(0, 1) = uniform(rng, -0.5, 0.5);
    Vector b(2);
    b << uniform(rng, -1, 1), uniform(rng, -1, 1);
    return Predicate::ball({{a, 0}, {a, 1}}, uniform(rng, 0.2, 2.0), A, b);
}

inline Predicate random_predicate(Rng& rng, int agents) { return coin(rng, 0.7) ? random_affine(rng, agents) : random_ball(rng, agents); }

struct FormulaOptions {
    int agents = 2;
    int max_depth = 3;
    int max_horizon = 6; // budget for temporal nesting
    bool allow_truth = false;
    bool allow_until = true;
};

inline Interval random_interval(Rng& rng, int budget)
{
    const int lo = uniform_int(rng, 0, budget);
    const int hi = uniform_int(rng, lo, budget);
    return {lo, hi};
}

inline Formula random_formula(Rng& rng, const FormulaOptions& o, int depth = 0, int budget = -1)
{
    if (budget < 0) budget = o.max_horizon;
    const bool leaf = depth >= o.max_depth || coin(rng, 0.25);
    if (leaf) {
        if (o.allow_truth && coin(rng, 0.05)) return Formula::truth();
        const Predicate p = random_predicate(rng, o.agents);
        return coin(rng, 0.3) ? Formula::neg_pred(p) : Formula::pred(p);
    }
    const int pick = uniform_int(rng, 0, o.allow_until ? 4 : 3);
    switch (pick) {
        case 0:
        case 1: {
            std::vector<Formula> ch;
            const int n = uniform_int(rng, 2, 3);
            for (int i = 0; i < n; ++i) ch.push_back(random_formula(rng, o, depth + 1, budget));
            return pick == 0 ? Formula::conj(ch) : Formula::disj(ch);
        }
        case 2:
        case 3: {
            const Interval I = random_interval(rng, budget);
            Formula c = random_formula(rng, o, depth + 1, budget - I.hi);
            return pick == 2 ? Formula::always(I, c) : Formula::eventually(I, c);
        }
        default: {
            const Interval I = random_interval(rng, budget);
            Formula l = random_formula(rng, o, depth + 1, budget - I.hi);
            Formula r = random_formula(rng, o, depth + 1, budget - I.hi);
            return Formula::until(I, l, r);
        }
    }
}

// Exact robustness by direct enumeration of the recursive definition.
inline double brute_robust(const Formula& f, const Trajectory& x, int t, UntilConvention conv = UntilConvention::as_printed)
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    switch (f.kind()) {
        case FormulaKind::truth: return inf;
        case FormulaKind::predicate: return f.predicate().evaluate(x, t);
        case FormulaKind::negated_predicate: return -f.predicate().evaluate(x, t);
        case FormulaKind::conjunction: {
            double v = inf;
            for (const auto& c : f.children()) v = std::min(v, brute_robust(c, x, t, conv));
            return v;
        }
        case FormulaKind::disjunction: {
            double v = -inf;
            for (const auto& c : f.children()) v = std::max(v, brute_robust(c, x, t, conv));
            return v;
        }
        case FormulaKind::always: {
            double v = inf;
            for (int s = t + f.interval().lo; s <= t + f.interval().hi; ++s) v = std::min(v, brute_robust(f.child(), x, s, conv));
            return v;
        }
        case FormulaKind::eventually: {
            double v = -inf;
            for (int s = t + f.interval().lo; s <= t + f.interval().hi; ++s) v = std::max(v, brute_robust(f.child(), x, s, conv));
            return v;
        }
        case FormulaKind::until: {
            double best = -inf;
            for (int tau = t + f.interval().lo; tau <= t + f.interval().hi; ++tau) {
                double v;
                if (conv == UntilConvention::as_printed) {
                    v = brute_robust(f.left(), x, tau, conv);
                    for (int s = t; s <= tau; ++s) v = std::min(v, brute_robust(f.right(), x, s, conv));
                } else {
                    v = brute_robust(f.right(), x, tau, conv);
                    for (int s = t; s < tau; ++s) v = std::min(v, brute_robust(f.left(), x, s, conv));
                }
                best = std::max(best, v);
            }
            return best;
        }
    }
    return 0.0;
}

inline bool brute_bool(const Formula& f, const Trajectory& x, int t, UntilConvention conv = UntilConvention::as_printed)
{
    switch (f.kind()) {
        case FormulaKind::truth: return true;
        case FormulaKind::predicate: return f.predicate().evaluate(x, t) > 0.0;
        case FormulaKind::negated_predicate: return !(f.predicate().evaluate(x, t) > 0.0);
        case FormulaKind::conjunction:
            return std::all_of(f.children().begin(), f.children().end(), [&](const Formula& c) { return brute_bool(c, x, t, conv); });
        case FormulaKind::disjunction:
            return std::any_of(f.children().begin(), f.children().end(), [&](const Formula& c) { return brute_bool(c, x, t, conv); });
        case FormulaKind::always:
            for (int s = t + f.interval().lo; s <= t + f.interval().hi; ++s)
                if (!brute_bool(f.child(), x, s, conv)) return false;
            return true;
        case FormulaKind::eventually:
            for (int s = t + f.interval().lo; s <= t + f.interval().hi; ++s)
                if (brute_bool(f.child(), x, s, conv)) return true;
            return false;
        case FormulaKind::until:
            for (int tau = t + f.interval().lo; tau <= t + f.interval().hi; ++tau) {
                bool ok;
                if (conv == UntilConvention::as_printed) {
                    ok = brute_bool(f.left(), x, tau, conv);
                    for (int s = t; s <= tau && ok; ++s) ok = brute_bool(f.right(), x, s, conv);
                } else {
                    ok = brute_bool(f.right(), x, tau, conv);
                    for (int s = t; s < tau && ok; ++s) ok = brute_bool(f.left(), x, s, conv);
                }
                if (ok) return true;
            }
            return false;
    }
    return false;
}

// A clique spec of `count` random conjuncts over `agents` agents.
inline CliqueSpec random_spec(Rng& rng, int count, const FormulaOptions& o)
{
    std::vector<Formula> conjuncts;
    for (int i = 0; i < count; ++i) conjuncts.push_back(random_formula(rng, o));
    return make_clique_spec(conjuncts);
}

// Small planning problem over random formulas: mixed integrators and
// unicycles, input energy cost, control horizon covering the spec.
inline Problem random_problem(Rng& rng, int agents, int cliques, int max_horizon = 5)
{
    Problem p;
    for (int i = 0; i < agents; ++i) {
        if (coin(rng))
            p.agents.push_back(AgentModel::unicycle({uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -3, 3)}));
        else
            p.agents.push_back(AgentModel::single_integrator({uniform(rng, -1, 1), uniform(rng, -1, 1)}));
    }
    FormulaOptions o;
    o.agents = agents;
    o.max_horizon = max_horizon;
    p.spec = random_spec(rng, cliques, o);
    p.horizon = std::max(1, p.spec.horizon());
    p.cost = CostSpec::input_energy(p.agents);
    p.smoothing = SmoothingConfig(2, 1);
    return p;
}

inline ControlSequence random_controls(Rng& rng, const Problem& p, double scale = 0.5)
{
    ControlSequence u(p.layout());
    for (Eigen::Index k = 0; k < u.values.size(); ++k) u.values(k) = uniform(rng, -scale, scale);
    return u;
}

/*
 * Separable convex quadratic behind the block interface:
 *   L(u) = sum_j u_j'Q_j u_j + q_j'u_j,  R(u) = sum_j |A_j u_j - b_j|^2.
 * The minimizer of L + lambda R solves one linear system per block.
 */
struct SeparableQuadratic {
    struct Point {
        Vector u;
        double L = 0.0, R = 0.0, F = 0.0;
    };
    std::vector<Matrix> Q, A;
    std::vector<Vector> q, b;
    std::vector<int> offsets, sizes;
    int total = 0;

    static SeparableQuadratic random(Rng& rng, int blocks)
    {
        SeparableQuadratic s;
        for (int j = 0; j < blocks; ++j) {
            const int n = uniform_int(rng, 1, 4), m = uniform_int(rng, 1, 4);
            Matrix B = Matrix::Random(n, n);
            s.Q.push_back(B * B.transpose() + 0.5 * Matrix::Identity(n, n));
            s.q.push_back(Vector::Random(n));
            s.A.push_back(Matrix::Random(m, n));
            s.b.push_back(Vector::Random(m));
            s.offsets.push_back(s.total);
            s.sizes.push_back(n);
            s.total += n;
        }
        return s;
    }

    int num_blocks() const { return static_cast<int>(Q.size()); }
    int block_offset(int j) const { return offsets[j]; }
    int block_size(int j) const { return sizes[j]; }
    int size() const { return total; }

    auto seg(const Vector& u, int j) const { return u.segment(offsets[j], sizes[j]); }

    double cost(const Vector& u) const
    {
        double acc = 0.0;
        for (int j = 0; j < num_blocks(); ++j) acc += seg(u, j).dot(Q[j] * seg(u, j)) + q[j].dot(seg(u, j));
        return acc;
    }
    double penalty(const Vector& u) const
    {
        double acc = 0.0;
        for (int j = 0; j < num_blocks(); ++j) acc += (A[j] * seg(u, j) - b[j]).squaredNorm();
        return acc;
    }
    void evaluate(const Vector& u, double lambda, Point& p) const
    {
        p.u = u;
        p.L = cost(u);
        p.R = penalty(u);
        p.F = p.L + lambda * p.R;
    }
    void gradient(const Point& p, Vector& gL, Vector& gR) const
    {
        gL.resize(total);
        gR.resize(total);
        for (int j = 0; j < num_blocks(); ++j) {
            gL.segment(offsets[j], sizes[j]) = 2 * Q[j] * seg(p.u, j) + q[j];
            gR.segment(offsets[j], sizes[j]) = 2 * A[j].transpose() * (A[j] * seg(p.u, j) - b[j]);
        }
    }
    Vector block_direction(int j, const Vector& u, const Vector&, const Vector& gR, double lambda,
                           const HessianPolicy& H) const
    {
        const Vector h = H.diagonal(j, sizes[j]);
        const Matrix M = Matrix(lambda * h.asDiagonal()) + 2 * Q[j];
        const Vector rhs = -(lambda * seg(gR, j) + 2 * Q[j] * seg(u, j) + q[j]);
        return M.ldlt().solve(rhs);
    }
    Vector minimizer(double lambda) const
    {
        Vector u(total);
        for (int j = 0; j < num_blocks(); ++j) {
            const Matrix M = 2 * Q[j] + 2 * lambda * A[j].transpose() * A[j];
            u.segment(offsets[j], sizes[j]) = M.ldlt().solve(2 * lambda * A[j].transpose() * b[j] - q[j]);
        }
        return u;
    }
};

// Central differences of f along every entry of a trajectory.
template <class F>
Trajectory fd_gradient(F&& f, Trajectory x, double h)
{
    Trajectory g = Trajectory::zeros_like(x);
    for (int i = 0; i < x.num_agents(); ++i)
        for (Eigen::Index c = 0; c < x.states[i].size(); ++c) {
            double& v = x.states[i].data()[c];
            const double v0 = v;
            v = v0 + h;
            const double fp = f(x);
            v = v0 - h;
            const double fm = f(x);
            v = v0;
            g.states[i].data()[c] = (fp - fm) / (2 * h);
        }
    return g;
}

template <class F>
Vector fd_gradient(F&& f, Vector u, double h)
{
    Vector g(u.size());
    for (Eigen::Index c = 0; c < u.size(); ++c) {
        const double v0 = u(c);
        u(c) = v0 + h;
        const double fp = f(u);
        u(c) = v0 - h;
        const double fm = f(u);
        u(c) = v0;
        g(c) = (fp - fm) / (2 * h);
    }
    return g;
}

inline Vector flatten(const Trajectory& x)
{
    Eigen::Index n = 0;
    for (const auto& s : x.states) n += s.size();
    Vector v(n);
    n = 0;
    for (const auto& s : x.states) {
        v.segment(n, s.size()) = Eigen::Map<const Vector>(s.data(), s.size());
        n += s.size();
    }
    return v;
}

// max |a - b| / max(1, |b|_inf)
inline double rel_error(const Vector& a, const Vector& b)
{
    const double scale = std::max(1.0, b.lpNorm<Eigen::Infinity>());
    return (a - b).lpNorm<Eigen::Infinity>() / scale;
}

} // namespace mastl::testing
