#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <mastl/formula.hpp>

namespace mastl {

// =======================================================================
// Soft min / max
// =======================================================================

/*
 * -(1/gamma) log sum exp(-gamma v_j), shifted by the minimum so that large
 * gamma * v does not overflow. Entries equal to +inf carry zero weight.
 */
template <class Derived>
typename Derived::Scalar softmin(const Eigen::DenseBase<Derived>& v, typename Derived::Scalar gamma)
{
    using value_t = typename Derived::Scalar;
    if (v.size() == 0) throw ArgumentError("softmin of an empty list");
    if (!(gamma > 0)) throw ArgumentError("softmin requires gamma > 0");
    const value_t m = v.minCoeff();
    if (!std::isfinite(m)) return m;
    value_t s = 0;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        if (v(j) == std::numeric_limits<value_t>::infinity()) continue;
        s += std::exp(-gamma * (v(j) - m));
    }
    return m - std::log(s) / gamma;
}

/*
 * sum v_j exp(gamma v_j) / sum exp(gamma v_j), shifted by the maximum.
 * Computed as max + weighted mean of (v_j - max), so equal entries return
 * that entry exactly.
 */
template <class Derived>
typename Derived::Scalar softmax(const Eigen::DenseBase<Derived>& v, typename Derived::Scalar gamma)
{
    using value_t = typename Derived::Scalar;
    if (v.size() == 0) throw ArgumentError("softmax of an empty list");
    if (!(gamma > 0)) throw ArgumentError("softmax requires gamma > 0");
    const value_t M = v.maxCoeff();
    if (!std::isfinite(M)) return M;
    value_t num = 0, den = 0;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        if (v(j) == -std::numeric_limits<value_t>::infinity()) continue;
        const value_t d = v(j) - M;
        const value_t w = std::exp(gamma * d);
        num += w * d;
        den += w;
    }
    return M + num / den;
}

inline double softmin(const std::vector<double>& v, double gamma)
{
    return softmin(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())), gamma);
}

inline double softmax(const std::vector<double>& v, double gamma)
{
    return softmax(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())), gamma);
}

// =======================================================================
// Smooth robustness
// =======================================================================

struct SmoothingConfig {
    double gamma_inner = 2.0; // min/max nodes inside each clique formula
    double gamma_outer = 1.0; // softmin across cliques

    SmoothingConfig() = default;
    SmoothingConfig(double inner, double outer) : gamma_inner(inner), gamma_outer(outer) { validate(); }

    static SmoothingConfig uniform(double gamma) { return {gamma, gamma}; }

    void validate() const
    {
        if (!(gamma_inner > 0) || !(gamma_outer > 0)) throw ArgumentError("smoothing gammas must be positive");
    }
};

/*
 * Record of one forward pass, in topological order (children precede
 * parents). Leaves reference predicates owned by the evaluated formulas,
 * which must outlive the tape.
 */
struct EvalTape {
    enum class Op : unsigned char { leaf, constant, softmin, softmax };

    struct Node {
        Op op = Op::constant;
        bool negated = false;       // leaf: -mu
        int time = 0;               // leaf
        const Predicate* pred = nullptr;
        double gamma = 0.0;         // softmin / softmax
        int first_arg = 0;
        int num_args = 0;
    };

    std::vector<Node> nodes;
    std::vector<int> args;
    std::vector<double> values;
    std::vector<int> clique_roots;
    std::vector<int> clique_begin; // node range [begin, end] built for each clique
    std::vector<int> clique_end;
    int root = -1;
    Trajectory x;

    double value() const { return values.at(root); }
    int size() const { return static_cast<int>(nodes.size()); }
    void clear();
};

struct SmoothResult {
    double value = 0.0;
    EvalTape tape;
};

/*
 * Smooth under-approximation of the conjunctive spec at t = 0: every min is
 * a softmin and every max a softmax at gamma_inner; clique values are
 * combined by a softmin at gamma_outer.
 */
SmoothResult smooth_robustness(const CliqueSpec& spec, const Trajectory& x, const SmoothingConfig& cfg,
                               UntilConvention convention = UntilConvention::as_printed);

// Same, reusing the tape's storage.
double smooth_robustness(const CliqueSpec& spec, const Trajectory& x, const SmoothingConfig& cfg,
                         UntilConvention convention, EvalTape& tape);

// Single formula at time t with one smoothing sharpness.
SmoothResult smooth_robustness(const Formula& f, const Trajectory& x, int t, double gamma,
                               UntilConvention convention = UntilConvention::as_printed);

/*
 * Recomputes every node value for a new trajectory of the same shape,
 * keeping the tape structure. The cliques overload only recomputes the
 * listed cliques and the outer combination.
 */
void refresh(EvalTape& tape, const Trajectory& x);
void refresh(EvalTape& tape, const Trajectory& x, const std::vector<int>& cliques);

// Per-clique smooth values recorded on the tape.
std::vector<double> clique_values(const EvalTape& tape);

// Gradient of seed * value with respect to every trajectory entry.
Trajectory smooth_robustness_pullback(const EvalTape& tape, double seed);

// Accumulating form: grad += seed * d value / dx.
void smooth_robustness_pullback(const EvalTape& tape, double seed, Trajectory& grad);

// grad += seed * d(clique value)/dx for one clique of a spec tape.
void clique_pullback(const EvalTape& tape, int clique, double seed, Trajectory& grad);

} // namespace mastl
