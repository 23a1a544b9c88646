#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <mastl/penalty.hpp>
#include <mastl/types.hpp>

namespace mastl {

// =======================================================================
// Configuration and trace
// =======================================================================

struct BlockRule {
    enum class Kind { shuffled_gauss_seidel, gauss_southwell };
    Kind kind = Kind::shuffled_gauss_seidel;
    // Gauss-Seidel: iterations per sweep over all blocks (0 means one block
    // per iteration). Gauss-Southwell: blocks selected per iteration.
    int parameter = 0;

    static BlockRule gauss_seidel(int cycle_length = 0) { return {Kind::shuffled_gauss_seidel, cycle_length}; }
    static BlockRule gauss_southwell(int count = 1) { return {Kind::gauss_southwell, count}; }
};

// "gauss_seidel[:cycle]" or "gauss_southwell[:count]"; throws ArgumentError.
BlockRule parse_block_rule(std::string_view text);
std::string to_string(const BlockRule& rule);

struct BcgdConfig {
    double sigma = 0.5;
    double gamma = 0.995;
    double epsilon = 1e-3;
    int max_iters = 10000;
    int max_halvings = 40;
    BlockRule rule;
    HessianPolicy hessian = HessianPolicy::scaled_identity(1e3);
    std::uint64_t seed = 0;
    // Blocks allowed to move; empty means all.
    std::vector<int> free_blocks;

    void validate() const;
};

enum class BcgdTermination { tolerance, max_iters, line_search_failure };

const char* to_string(BcgdTermination t);

struct BcgdIteration {
    int k = 0;
    std::vector<int> blocks;
    double F = 0.0;          // F(u^k)
    double grad_norm = 0.0;  // |grad F(u^k)|
    double alpha = 0.0;
    double direction_norm = 0.0;
    double F_next = 0.0;     // F(u^k + alpha d^k)
    // Armijo right-hand side terms: lambda grad_R'd, d'Hd, L(u+d) - L(u).
    double linear_term = 0.0;
    double quadratic_term = 0.0;
    double delta_L = 0.0;
    bool fallback_direction = false;
    bool accepted = false;

    double armijo_rhs(double sigma, double gamma) const
    {
        return sigma * alpha * (linear_term + gamma * quadratic_term + delta_L);
    }
};

struct BcgdTrace {
    std::vector<BcgdIteration> iterations;
    BcgdTermination termination = BcgdTermination::max_iters;
    double sigma = 0.5;
    double gamma = 0.995;
    double lambda = 0.0;
};

// Line-delimited export: one "k=... F=... grad=... alpha=... blocks=..." record per iteration.
void write_trace(std::ostream& os, const BcgdTrace& trace);

struct BcgdResult {
    Vector u;
    double F = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    BcgdTrace trace;
};

// =======================================================================
// Block selection
// =======================================================================

/*
 * Shuffled Gauss-Seidel consumes a random permutation of the free blocks,
 * reshuffling at the start of each sweep, so every block is updated exactly
 * once per sweep. Gauss-Southwell picks the blocks with the largest gradient
 * norms, ties broken by lowest index.
 */
class BlockSelector {
public:
    BlockSelector(BlockRule rule, std::vector<int> free_blocks, std::uint64_t seed);

    std::vector<int> select(int k, const std::vector<double>& block_grad_norms);

private:
    BlockRule rule_;
    std::vector<int> blocks_;
    std::vector<int> perm_;
    std::size_t cursor_ = 0;
    int per_iter_ = 1;
    std::mt19937_64 rng_;
};

// =======================================================================
// Solver
// =======================================================================

/*
 * Objective interface for the block solver. F = L + lambda R with a
 * separable convex L; Point caches one forward evaluation.
 */
template <class O>
concept BlockObjective = requires(const O& o, const Vector& u, double lambda, typename O::Point& p,
                                  const typename O::Point& cp, Vector& g, const HessianPolicy& H) {
    { o.num_blocks() } -> std::convertible_to<int>;
    { o.block_offset(0) } -> std::convertible_to<int>;
    { o.block_size(0) } -> std::convertible_to<int>;
    { o.size() } -> std::convertible_to<int>;
    o.evaluate(u, lambda, p);
    o.gradient(cp, g, g);
    { o.cost(u) } -> std::convertible_to<double>;
    { o.block_direction(0, u, u, u, lambda, H) } -> std::convertible_to<Vector>;
    { cp.F } -> std::convertible_to<double>;
    { cp.L } -> std::convertible_to<double>;
};

namespace detail {

template <class O>
std::vector<int> resolve_free_blocks(const O& obj, const BcgdConfig& cfg)
{
    std::vector<int> blocks = cfg.free_blocks;
    if (blocks.empty()) {
        blocks.resize(obj.num_blocks());
        std::iota(blocks.begin(), blocks.end(), 0);
    }
    for (int j : blocks)
        if (j < 0 || j >= obj.num_blocks()) throw ArgumentError("free block index out of range");
    return blocks;
}

template <class O>
double free_norm(const O& obj, const std::vector<int>& blocks, const Vector& g)
{
    double acc = 0.0;
    for (int j : blocks) acc += g.segment(obj.block_offset(j), obj.block_size(j)).squaredNorm();
    return std::sqrt(acc);
}

} // namespace detail

struct ArmijoResult {
    bool accepted = false;
    double alpha = 0.0;
    int halvings = 0;
    double F_next = 0.0;
};

/*
 * Largest alpha in {1, 1/2, 1/4, ...} with
 *   F(u + alpha d) - F(u) <= sigma alpha (lambda grad_R'd + gamma d'Hd + dL)
 * where dL = L(u + d) - L(u). On success `trial` holds the accepted point.
 */
template <BlockObjective O>
ArmijoResult armijo_step(const O& obj, const typename O::Point& current, const Vector& d, double lambda,
                         double model_terms, double sigma, int max_halvings, typename O::Point& trial)
{
    ArmijoResult r;
    double alpha = 1.0;
    for (int j = 0; j <= max_halvings; ++j, alpha *= 0.5) {
        obj.evaluate(current.u + alpha * d, lambda, trial);
        const double dF = trial.F - current.F;
        if (dF <= sigma * alpha * model_terms) {
            r.accepted = true;
            r.alpha = alpha;
            r.halvings = j;
            r.F_next = trial.F;
            return r;
        }
    }
    return r;
}

template <BlockObjective O>
BcgdResult bcgd_solve(const O& obj, const Vector& u0, double lambda, const BcgdConfig& cfg)
{
    cfg.validate();
    if (u0.size() != obj.size()) throw ArgumentError("initial iterate has wrong size");
    const auto blocks = detail::resolve_free_blocks(obj, cfg);
    BlockSelector selector(cfg.rule, blocks, cfg.seed);

    BcgdResult res;
    res.trace.sigma = cfg.sigma;
    res.trace.gamma = cfg.gamma;
    res.trace.lambda = lambda;

    typename O::Point cur, trial;
    obj.evaluate(u0, lambda, cur);
    Vector gL, gR, gF, d(obj.size());
    std::vector<double> norms(obj.num_blocks(), 0.0);

    bool stopped = false;
    for (int k = 0; k < cfg.max_iters; ++k) {
        obj.gradient(cur, gL, gR);
        gF = gL + lambda * gR;
        const double gnorm = detail::free_norm(obj, blocks, gF);
        if (gnorm <= cfg.epsilon) {
            res.trace.termination = BcgdTermination::tolerance;
            res.grad_norm = gnorm;
            stopped = true;
            break;
        }

        for (int j = 0; j < obj.num_blocks(); ++j)
            norms[j] = gF.segment(obj.block_offset(j), obj.block_size(j)).norm();
        const auto J = selector.select(k, norms);

        BcgdIteration it;
        it.k = k;
        it.blocks = J;
        it.F = cur.F;
        it.grad_norm = gnorm;

        // Fills the Armijo terms of `it` and returns the block model value
        // (lambda/2) d'Hd + lambda grad_R'd + L(u + d) - L(u).
        auto model_terms = [&](const Vector& dir) {
            it.linear_term = lambda * gR.dot(dir);
            double quad = 0.0;
            for (int j : J) {
                const auto dj = dir.segment(obj.block_offset(j), obj.block_size(j));
                quad += dj.dot(cfg.hessian.diagonal(j, obj.block_size(j)).cwiseProduct(dj));
            }
            it.quadratic_term = quad;
            it.delta_L = obj.cost(cur.u + dir) - cur.L;
            return it.linear_term + 0.5 * lambda * quad + it.delta_L;
        };

        d.setZero();
        for (int j : J)
            d.segment(obj.block_offset(j), obj.block_size(j)) =
                obj.block_direction(j, cur.u, gL, gR, lambda, cfg.hessian);
        double model = model_terms(d);
        if (!(model <= 0.0)) {
            // The block minimizer cannot increase the model; this is noise or
            // an inexact block model. Fall back to the negative penalized
            // gradient on the selected blocks, shortened until it decreases.
            d.setZero();
            for (int j : J) {
                const int off = obj.block_offset(j), sz = obj.block_size(j);
                d.segment(off, sz) = -gF.segment(off, sz);
            }
            it.fallback_direction = true;
            model = model_terms(d);
            for (int s = 0; s < 60 && !(model <= 0.0); ++s) {
                d *= 0.5;
                model = model_terms(d);
            }
        }
        // A block that is already optimal predicts a change below the
        // resolution of F; stepping would only compare rounding noise.
        if (std::abs(model) <= 8 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(cur.F))) {
            d.setZero();
            model = model_terms(d);
        }
        it.direction_norm = d.norm();

        // Right-hand side as printed; it is nonpositive for lambda > gamma.
        // Below that it is capped at zero so accepted steps never increase F.
        const double terms = std::min(0.0, it.linear_term + cfg.gamma * it.quadratic_term + it.delta_L);
        const auto step = armijo_step(obj, cur, d, lambda, terms, cfg.sigma, cfg.max_halvings, trial);
        it.accepted = step.accepted;
        it.alpha = step.alpha;
        it.F_next = step.F_next;
        res.trace.iterations.push_back(std::move(it));
        if (!step.accepted) {
            res.trace.termination = BcgdTermination::line_search_failure;
            res.grad_norm = gnorm;
            stopped = true;
            break;
        }
        std::swap(cur, trial);
    }

    if (!stopped) {
        res.trace.termination = BcgdTermination::max_iters;
        obj.gradient(cur, gL, gR);
        res.grad_norm = detail::free_norm(obj, blocks, Vector(gL + lambda * gR));
    }
    res.u = cur.u;
    res.F = cur.F;
    res.iterations = static_cast<int>(res.trace.iterations.size());
    return res;
}

// Convenience overloads on the STL penalty problem.
BcgdResult bcgd_solve(const PenaltyContext& ctx, const ControlSequence& u0, const BcgdConfig& cfg);

// d^k for the selected blocks of the penalty problem, zero elsewhere.
Vector block_direction(const PenaltyContext& ctx, const ControlSequence& u, const Vector& grad_R,
                       const std::vector<int>& blocks, const HessianPolicy& H);

} // namespace mastl
