#include <mastl/smooth.hpp>

#include <algorithm>

namespace mastl {

void EvalTape::clear()
{
    nodes.clear();
    args.clear();
    values.clear();
    clique_roots.clear();
    clique_begin.clear();
    clique_end.clear();
    root = -1;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class TapeBuilder {
public:
    TapeBuilder(EvalTape& tape, double gamma, UntilConvention conv) : tape_(tape), gamma_(gamma), conv_(conv) {}

    void set_gamma(double g) { gamma_ = g; }

    // Node ids of f at t0..t1.
    std::vector<int> build(const Formula& f, int t0, int t1)
    {
        const int len = t1 - t0 + 1;
        std::vector<int> out(static_cast<std::size_t>(std::max(len, 0)));
        if (len <= 0) return out;

        switch (f.kind()) {
            case FormulaKind::truth: {
                const int c = constant(kInf);
                std::fill(out.begin(), out.end(), c);
                break;
            }
            case FormulaKind::predicate:
            case FormulaKind::negated_predicate: {
                const bool neg = f.kind() == FormulaKind::negated_predicate;
                for (int t = t0; t <= t1; ++t) out[t - t0] = leaf(f.predicate(), t, neg);
                break;
            }
            case FormulaKind::conjunction:
            case FormulaKind::disjunction: {
                const auto op = f.kind() == FormulaKind::conjunction ? EvalTape::Op::softmin : EvalTape::Op::softmax;
                std::vector<std::vector<int>> sub;
                sub.reserve(f.children().size());
                for (const auto& c : f.children()) sub.push_back(build(c, t0, t1));
                std::vector<int> ids(sub.size());
                for (int i = 0; i < len; ++i) {
                    for (std::size_t k = 0; k < sub.size(); ++k) ids[k] = sub[k][i];
                    out[i] = combine(op, ids);
                }
                break;
            }
            case FormulaKind::always:
            case FormulaKind::eventually: {
                const auto op = f.kind() == FormulaKind::always ? EvalTape::Op::softmin : EvalTape::Op::softmax;
                const auto I = f.interval();
                auto s = build(f.child(), t0 + I.lo, t1 + I.hi);
                std::vector<int> ids;
                for (int t = t0; t <= t1; ++t) {
                    ids.assign(s.begin() + (t - t0), s.begin() + (t - t0) + (I.hi - I.lo + 1));
                    out[t - t0] = combine(op, ids);
                }
                break;
            }
            case FormulaKind::until: {
                const auto I = f.interval();
                std::vector<int> inner, outer;
                if (conv_ == UntilConvention::as_printed) {
                    auto l = build(f.left(), t0 + I.lo, t1 + I.hi);
                    auto r = build(f.right(), t0, t1 + I.hi);
                    for (int t = t0; t <= t1; ++t) {
                        outer.clear();
                        for (int tau = t + I.lo; tau <= t + I.hi; ++tau) {
                            inner.clear();
                            inner.push_back(l[tau - t0 - I.lo]);
                            for (int tp = t; tp <= tau; ++tp) inner.push_back(r[tp - t0]);
                            outer.push_back(combine(EvalTape::Op::softmin, inner));
                        }
                        out[t - t0] = combine(EvalTape::Op::softmax, outer);
                    }
                } else {
                    auto r = build(f.right(), t0 + I.lo, t1 + I.hi);
                    auto l = build(f.left(), t0, t1 + I.hi);
                    for (int t = t0; t <= t1; ++t) {
                        outer.clear();
                        for (int tau = t + I.lo; tau <= t + I.hi; ++tau) {
                            inner.clear();
                            inner.push_back(r[tau - t0 - I.lo]);
                            for (int tp = t; tp < tau; ++tp) inner.push_back(l[tp - t0]);
                            outer.push_back(combine(EvalTape::Op::softmin, inner));
                        }
                        out[t - t0] = combine(EvalTape::Op::softmax, outer);
                    }
                }
                break;
            }
        }
        return out;
    }

    int combine(EvalTape::Op op, const std::vector<int>& ids)
    {
        if (ids.size() == 1) return ids.front();
        EvalTape::Node n;
        n.op = op;
        n.gamma = gamma_;
        n.first_arg = static_cast<int>(tape_.args.size());
        n.num_args = static_cast<int>(ids.size());
        scratch_.resize(ids.size());
        for (std::size_t k = 0; k < ids.size(); ++k) {
            tape_.args.push_back(ids[k]);
            scratch_[k] = tape_.values[ids[k]];
        }
        const Eigen::Map<const Vector> v(scratch_.data(), static_cast<Eigen::Index>(scratch_.size()));
        const double value = op == EvalTape::Op::softmin ? softmin(v, gamma_) : softmax(v, gamma_);
        return push(n, value);
    }

private:
    int push(const EvalTape::Node& n, double value)
    {
        tape_.nodes.push_back(n);
        tape_.values.push_back(value);
        return static_cast<int>(tape_.nodes.size()) - 1;
    }

    int constant(double value)
    {
        EvalTape::Node n;
        n.op = EvalTape::Op::constant;
        return push(n, value);
    }

    int leaf(const Predicate& p, int t, bool neg)
    {
        EvalTape::Node n;
        n.op = EvalTape::Op::leaf;
        n.pred = &p;
        n.time = t;
        n.negated = neg;
        const double mu = p.evaluate(tape_.x, t);
        return push(n, neg ? -mu : mu);
    }

    EvalTape& tape_;
    double gamma_;
    UntilConvention conv_;
    std::vector<double> scratch_;
};

void refresh_node(EvalTape& tape, int i, std::vector<double>& scratch)
{
    const auto& n = tape.nodes[i];
    switch (n.op) {
        case EvalTape::Op::constant:
            return;
        case EvalTape::Op::leaf: {
            const double mu = n.pred->evaluate(tape.x, n.time);
            tape.values[i] = n.negated ? -mu : mu;
            return;
        }
        case EvalTape::Op::softmin:
        case EvalTape::Op::softmax: {
            scratch.resize(n.num_args);
            for (int k = 0; k < n.num_args; ++k) scratch[k] = tape.values[tape.args[n.first_arg + k]];
            const Eigen::Map<const Vector> v(scratch.data(), n.num_args);
            tape.values[i] = n.op == EvalTape::Op::softmin ? softmin(v, n.gamma) : softmax(v, n.gamma);
            return;
        }
    }
}

void check_refresh_shape(const EvalTape& tape, const Trajectory& x)
{
    if (tape.root < 0) throw ArgumentError("refresh of an empty tape");
    if (x.num_agents() != tape.x.num_agents()) throw ArgumentError("refresh: trajectory has a different shape");
    for (int i = 0; i < x.num_agents(); ++i)
        if (x.states[i].rows() != tape.x.states[i].rows() || x.states[i].cols() != tape.x.states[i].cols())
            throw ArgumentError("refresh: trajectory has a different shape");
}

// Reverse sweep over nodes [lo, seed_node]; every ancestor of seed_node lies in the range.
void pullback_range(const EvalTape& tape, int lo, int seed_node, double seed, Trajectory& grad)
{
    const int hi = seed_node;
    std::vector<double> adj(static_cast<std::size_t>(hi - lo + 1), 0.0);
    adj[hi - lo] = seed;

    for (int i = hi; i >= lo; --i) {
        const double a = adj[i - lo];
        if (a == 0.0) continue;
        const auto& n = tape.nodes[i];
        const double value = tape.values[i];
        switch (n.op) {
            case EvalTape::Op::constant:
                break;
            case EvalTape::Op::leaf:
                n.pred->accumulate_gradient(tape.x, n.time, n.negated ? -a : a, grad);
                break;
            case EvalTape::Op::softmin: {
                if (!std::isfinite(value)) break;
                // d/dv_j = exp(-gamma (v_j - value))
                for (int k = 0; k < n.num_args; ++k) {
                    const int c = tape.args[n.first_arg + k];
                    const double v = tape.values[c];
                    if (v == kInf) continue;
                    adj[c - lo] += a * std::exp(-n.gamma * (v - value));
                }
                break;
            }
            case EvalTape::Op::softmax: {
                if (!std::isfinite(value)) break;
                double M = -kInf;
                for (int k = 0; k < n.num_args; ++k) M = std::max(M, tape.values[tape.args[n.first_arg + k]]);
                double den = 0.0;
                for (int k = 0; k < n.num_args; ++k) {
                    const double v = tape.values[tape.args[n.first_arg + k]];
                    if (v != -kInf) den += std::exp(n.gamma * (v - M));
                }
                // d/dv_j = p_j (1 + gamma (v_j - value)), p_j the softmax weights
                for (int k = 0; k < n.num_args; ++k) {
                    const int c = tape.args[n.first_arg + k];
                    const double v = tape.values[c];
                    if (v == -kInf) continue;
                    const double p = std::exp(n.gamma * (v - M)) / den;
                    adj[c - lo] += a * p * (1.0 + n.gamma * (v - value));
                }
                break;
            }
        }
    }
}

} // namespace

void refresh(EvalTape& tape, const Trajectory& x)
{
    check_refresh_shape(tape, x);
    tape.x = x;
    std::vector<double> scratch;
    for (int i = 0; i <= tape.root; ++i) refresh_node(tape, i, scratch);
}

void refresh(EvalTape& tape, const Trajectory& x, const std::vector<int>& cliques)
{
    check_refresh_shape(tape, x);
    for (int i = 0; i < x.num_agents(); ++i) tape.x.states[i] = x.states[i];
    std::vector<double> scratch;
    for (int k : cliques) {
        if (k < 0 || k >= static_cast<int>(tape.clique_roots.size())) throw ArgumentError("refresh: bad clique index");
        for (int i = tape.clique_begin[k]; i <= tape.clique_end[k]; ++i) refresh_node(tape, i, scratch);
    }
    // Outer combination sits after the last clique.
    const int tail = tape.clique_end.empty() ? 0 : tape.clique_end.back() + 1;
    for (int i = tail; i <= tape.root; ++i) refresh_node(tape, i, scratch);
}

void clique_pullback(const EvalTape& tape, int clique, double seed, Trajectory& grad)
{
    if (clique < 0 || clique >= static_cast<int>(tape.clique_roots.size()))
        throw ArgumentError("clique index out of range");
    if (seed == 0.0) return;
    pullback_range(tape, tape.clique_begin[clique], tape.clique_roots[clique], seed, grad);
}

double smooth_robustness(const CliqueSpec& spec, const Trajectory& x, const SmoothingConfig& cfg,
                         UntilConvention convention, EvalTape& tape)
{
    cfg.validate();
    if (spec.cliques.empty()) throw SpecificationError("empty clique specification");
    for (const auto& c : spec.cliques) check_length(c.formula, x, 0);

    tape.clear();
    tape.x = x;
    TapeBuilder builder(tape, cfg.gamma_inner, convention);
    for (const auto& c : spec.cliques) {
        tape.clique_begin.push_back(tape.size());
        tape.clique_roots.push_back(builder.build(c.formula, 0, 0).front());
        tape.clique_end.push_back(tape.size() - 1);
    }
    builder.set_gamma(cfg.gamma_outer);
    tape.root = builder.combine(EvalTape::Op::softmin, tape.clique_roots);
    return tape.value();
}

SmoothResult smooth_robustness(const CliqueSpec& spec, const Trajectory& x, const SmoothingConfig& cfg,
                               UntilConvention convention)
{
    SmoothResult r;
    r.value = smooth_robustness(spec, x, cfg, convention, r.tape);
    return r;
}

SmoothResult smooth_robustness(const Formula& f, const Trajectory& x, int t, double gamma,
                               UntilConvention convention)
{
    if (!(gamma > 0)) throw ArgumentError("gamma must be positive");
    check_length(f, x, t);
    SmoothResult r;
    r.tape.x = x;
    TapeBuilder builder(r.tape, gamma, convention);
    r.tape.root = builder.build(f, t, t).front();
    r.tape.clique_begin.push_back(0);
    r.tape.clique_end.push_back(r.tape.size() - 1);
    r.tape.clique_roots.push_back(r.tape.root);
    r.value = r.tape.value();
    return r;
}

std::vector<double> clique_values(const EvalTape& tape)
{
    std::vector<double> out;
    out.reserve(tape.clique_roots.size());
    for (int id : tape.clique_roots) out.push_back(tape.values.at(id));
    return out;
}

void smooth_robustness_pullback(const EvalTape& tape, double seed, Trajectory& grad)
{
    if (tape.root < 0) throw ArgumentError("pullback on an empty tape");
    if (seed == 0.0) return;
    pullback_range(tape, 0, tape.root, seed, grad);
}

Trajectory smooth_robustness_pullback(const EvalTape& tape, double seed)
{
    Trajectory grad = Trajectory::zeros_like(tape.x);
    smooth_robustness_pullback(tape, seed, grad);
    return grad;
}

} // namespace mastl
