#include <mastl/formula.hpp>

#include <algorithm>
#include <cmath>

namespace mastl {

Interval::Interval(int lo_, int hi_) : lo(lo_), hi(hi_)
{
    if (lo < 0 || hi < lo)
        throw ArgumentError("invalid interval [" + std::to_string(lo) + "," + std::to_string(hi) + "]");
}

// =======================================================================
// Predicate
// =======================================================================

Predicate Predicate::affine(std::vector<StateRef> selector, Vector coefficients, double offset)
{
    if (selector.empty()) throw ArgumentError("predicate selector must be nonempty");
    if (coefficients.size() != static_cast<Eigen::Index>(selector.size()))
        throw ArgumentError("affine predicate: coefficient count does not match selector");
    Predicate p;
    p.kind_ = Kind::affine;
    p.selector_ = std::move(selector);
    p.coefficients_ = std::move(coefficients);
    p.offset_ = offset;
    p.finalize();
    return p;
}

Predicate Predicate::ball(std::vector<StateRef> selector, double radius, Matrix A, Vector b)
{
    if (selector.empty()) throw ArgumentError("predicate selector must be nonempty");
    if (A.cols() != static_cast<Eigen::Index>(selector.size()))
        throw ArgumentError("ball predicate: matrix columns do not match selector");
    if (A.rows() != b.size() || A.rows() == 0) throw ArgumentError("ball predicate: offset size mismatch");
    if (A.rows() > kMaxPredicateDim || A.cols() > kMaxPredicateDim)
        throw ArgumentError("ball predicate larger than " + std::to_string(kMaxPredicateDim));
    Predicate p;
    p.kind_ = Kind::ball;
    p.selector_ = std::move(selector);
    p.radius_ = radius;
    p.A_ = std::move(A);
    p.b_ = std::move(b);
    p.finalize();
    return p;
}

Predicate Predicate::pairwise_ball(int agent_i, int agent_j, double radius)
{
    Matrix A(2, 4);
    A << 1, 0, -1, 0,
         0, 1, 0, -1;
    return ball({{agent_i, 0}, {agent_i, 1}, {agent_j, 0}, {agent_j, 1}}, radius, std::move(A),
                Vector::Zero(2));
}

void Predicate::finalize()
{
    for (const auto& s : selector_) {
        if (s.agent < 0 || s.component < 0) throw ArgumentError("negative state reference");
        agents_.push_back(s.agent);
    }
    std::sort(agents_.begin(), agents_.end());
    agents_.erase(std::unique(agents_.begin(), agents_.end()), agents_.end());
}

double Predicate::evaluate(const Trajectory& x, int t) const
{
    const auto k = static_cast<Eigen::Index>(selector_.size());
    if (kind_ == Kind::affine) {
        double acc = offset_;
        for (Eigen::Index i = 0; i < k; ++i) {
            const auto& s = selector_[i];
            acc += coefficients_(i) * x(s.agent, s.component, t);
        }
        return acc;
    }
    return radius_ - std::sqrt(ball_residual(x, t).squaredNorm());
}

SmallVector Predicate::ball_residual(const Trajectory& x, int t) const
{
    const auto k = static_cast<Eigen::Index>(selector_.size());
    const auto r = A_.rows();
    SmallVector z = b_;
    for (Eigen::Index i = 0; i < k; ++i) {
        const double yi = x(selector_[i].agent, selector_[i].component, t);
        for (Eigen::Index j = 0; j < r; ++j) z(j) += A_(j, i) * yi;
    }
    return z;
}

void Predicate::accumulate_gradient(const Trajectory& x, int t, double scale, Trajectory& grad) const
{
    const auto k = static_cast<Eigen::Index>(selector_.size());
    if (kind_ == Kind::affine) {
        for (Eigen::Index i = 0; i < k; ++i) {
            const auto& s = selector_[i];
            grad(s.agent, s.component, t) += scale * coefficients_(i);
        }
        return;
    }
    const SmallVector z = ball_residual(x, t);
    const double nz = std::sqrt(z.squaredNorm());
    if (nz == 0.0) return;
    // d/dy (r - |z|) = -A^T z / |z|
    const double c = -scale / nz;
    for (Eigen::Index i = 0; i < k; ++i)
        grad(selector_[i].agent, selector_[i].component, t) += c * A_.col(i).dot(z);
}

bool Predicate::operator==(const Predicate& o) const
{
    if (kind_ != o.kind_ || selector_ != o.selector_) return false;
    if (kind_ == Kind::affine) return coefficients_ == o.coefficients_ && offset_ == o.offset_;
    return radius_ == o.radius_ && A_.rows() == o.A_.rows() && A_ == o.A_ && b_ == o.b_;
}

// =======================================================================
// Formula
// =======================================================================

namespace {

std::vector<int> merge_agents(const std::vector<int>& a, const std::vector<int>& b)
{
    std::vector<int> out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

} // namespace

Formula Formula::make(Node n)
{
    switch (n.kind) {
        case FormulaKind::truth:
            n.horizon = 0;
            break;
        case FormulaKind::predicate:
        case FormulaKind::negated_predicate:
            n.horizon = 0;
            n.agents = n.pred->agents();
            break;
        case FormulaKind::conjunction:
        case FormulaKind::disjunction:
            n.horizon = 0;
            for (const auto& c : n.children) {
                n.horizon = std::max(n.horizon, c.horizon());
                n.agents = merge_agents(n.agents, c.agents());
            }
            break;
        case FormulaKind::always:
        case FormulaKind::eventually:
            n.horizon = n.interval.hi + n.children[0].horizon();
            n.agents = n.children[0].agents();
            break;
        case FormulaKind::until:
            n.horizon = n.interval.hi + std::max(n.children[0].horizon(), n.children[1].horizon());
            n.agents = merge_agents(n.children[0].agents(), n.children[1].agents());
            break;
    }
    return Formula(std::make_shared<const Node>(std::move(n)));
}

Formula Formula::truth()
{
    static const Formula t = make(Node{});
    return t;
}

Formula::Formula() : node_(truth().node_) {}

Formula Formula::pred(Predicate p)
{
    Node n;
    n.kind = FormulaKind::predicate;
    n.pred = std::make_shared<const Predicate>(std::move(p));
    return make(std::move(n));
}

Formula Formula::neg_pred(Predicate p)
{
    Node n;
    n.kind = FormulaKind::negated_predicate;
    n.pred = std::make_shared<const Predicate>(std::move(p));
    return make(std::move(n));
}

Formula Formula::conj(std::vector<Formula> children)
{
    if (children.size() < 2) throw ArgumentError("conjunction needs at least two children");
    Node n;
    n.kind = FormulaKind::conjunction;
    n.children = std::move(children);
    return make(std::move(n));
}

Formula Formula::disj(std::vector<Formula> children)
{
    if (children.size() < 2) throw ArgumentError("disjunction needs at least two children");
    Node n;
    n.kind = FormulaKind::disjunction;
    n.children = std::move(children);
    return make(std::move(n));
}

Formula Formula::always(Interval I, Formula child)
{
    Node n;
    n.kind = FormulaKind::always;
    n.interval = I;
    n.children.push_back(std::move(child));
    return make(std::move(n));
}

Formula Formula::eventually(Interval I, Formula child)
{
    Node n;
    n.kind = FormulaKind::eventually;
    n.interval = I;
    n.children.push_back(std::move(child));
    return make(std::move(n));
}

Formula Formula::until(Interval I, Formula left, Formula right)
{
    Node n;
    n.kind = FormulaKind::until;
    n.interval = I;
    n.children.push_back(std::move(left));
    n.children.push_back(std::move(right));
    return make(std::move(n));
}

const Predicate& Formula::predicate() const
{
    if (!node_->pred) throw ArgumentError("formula node is not a predicate");
    return *node_->pred;
}

bool operator==(const Formula& a, const Formula& b)
{
    if (a.node_ == b.node_) return true;
    if (a.kind() != b.kind()) return false;
    switch (a.kind()) {
        case FormulaKind::truth:
            return true;
        case FormulaKind::predicate:
        case FormulaKind::negated_predicate:
            return a.predicate() == b.predicate();
        case FormulaKind::always:
        case FormulaKind::eventually:
        case FormulaKind::until:
            if (!(a.interval() == b.interval())) return false;
            [[fallthrough]];
        case FormulaKind::conjunction:
        case FormulaKind::disjunction:
            return a.children() == b.children();
    }
    return false;
}

// =======================================================================
// Raw formulas and PNF
// =======================================================================

RawFormula RawFormula::truth()
{
    return RawFormula(std::make_shared<const Node>());
}

RawFormula RawFormula::pred(Predicate p)
{
    Node n;
    n.kind = Kind::predicate;
    n.pred = std::make_shared<const Predicate>(std::move(p));
    return RawFormula(std::make_shared<const Node>(std::move(n)));
}

RawFormula RawFormula::negation(RawFormula child)
{
    Node n;
    n.kind = Kind::negation;
    n.children.push_back(std::move(child));
    return RawFormula(std::make_shared<const Node>(std::move(n)));
}

RawFormula RawFormula::conj(std::vector<RawFormula> children)
{
    if (children.size() < 2) throw ArgumentError("conjunction needs at least two children");
    Node n;
    n.kind = Kind::conjunction;
    n.children = std::move(children);
    return RawFormula(std::make_shared<const Node>(std::move(n)));
}

RawFormula RawFormula::disj(std::vector<RawFormula> children)
{
    if (children.size() < 2) throw ArgumentError("disjunction needs at least two children");
    Node n;
    n.kind = Kind::disjunction;
    n.children = std::move(children);
    return RawFormula(std::make_shared<const Node>(std::move(n)));
}

RawFormula RawFormula::always(Interval I, RawFormula child)
{
    Node n;
    n.kind = Kind::always;
    n.interval = I;
    n.children.push_back(std::move(child));
    return RawFormula(std::make_shared<const Node>(std::move(n)));
}

RawFormula RawFormula::eventually(Interval I, RawFormula child)
{
    Node n;
    n.kind = Kind::eventually;
    n.interval = I;
    n.children.push_back(std::move(child));
    return RawFormula(std::make_shared<const Node>(std::move(n)));
}

RawFormula RawFormula::until(Interval I, RawFormula left, RawFormula right)
{
    Node n;
    n.kind = Kind::until;
    n.interval = I;
    n.children.push_back(std::move(left));
    n.children.push_back(std::move(right));
    return RawFormula(std::make_shared<const Node>(std::move(n)));
}

namespace {

Formula to_pnf(const RawFormula& f, bool negate)
{
    using K = RawFormula::Kind;
    auto map_children = [&](bool neg) {
        std::vector<Formula> out;
        out.reserve(f.children().size());
        for (const auto& c : f.children()) out.push_back(to_pnf(c, neg));
        return out;
    };
    switch (f.kind()) {
        case K::truth:
            if (negate) throw SpecificationError("negation of true is not expressible in positive normal form");
            return Formula::truth();
        case K::predicate:
            return negate ? Formula::neg_pred(f.predicate()) : Formula::pred(f.predicate());
        case K::negation:
            return to_pnf(f.children()[0], !negate);
        case K::conjunction:
            return negate ? Formula::disj(map_children(true)) : Formula::conj(map_children(false));
        case K::disjunction:
            return negate ? Formula::conj(map_children(true)) : Formula::disj(map_children(false));
        case K::always:
            return negate ? Formula::eventually(f.interval(), to_pnf(f.children()[0], true))
                          : Formula::always(f.interval(), to_pnf(f.children()[0], false));
        case K::eventually:
            return negate ? Formula::always(f.interval(), to_pnf(f.children()[0], true))
                          : Formula::eventually(f.interval(), to_pnf(f.children()[0], false));
        case K::until:
            if (negate)
                throw SpecificationError("negated until requires the release operator, which is not supported");
            return Formula::until(f.interval(), to_pnf(f.children()[0], false), to_pnf(f.children()[1], false));
    }
    throw SpecificationError("unknown formula kind");
}

} // namespace

Formula normalize_pnf(const RawFormula& f)
{
    return to_pnf(f, false);
}

// =======================================================================
// Cliques
// =======================================================================

int CliqueSpec::horizon() const
{
    int h = 0;
    for (const auto& c : cliques) h = std::max(h, c.formula.horizon());
    return h;
}

Formula CliqueSpec::conjunction() const
{
    if (cliques.empty()) throw SpecificationError("empty clique specification");
    if (cliques.size() == 1) return cliques.front().formula;
    std::vector<Formula> parts;
    parts.reserve(cliques.size());
    for (const auto& c : cliques) parts.push_back(c.formula);
    return Formula::conj(std::move(parts));
}

CliqueSpec make_clique_spec(const std::vector<Formula>& conjuncts, const std::vector<std::vector<int>>& declared)
{
    if (!declared.empty() && declared.size() != conjuncts.size())
        throw SpecificationError("declared clique count " + std::to_string(declared.size())
                                 + " does not match conjunct count " + std::to_string(conjuncts.size()));
    CliqueSpec spec;
    spec.cliques.reserve(conjuncts.size());
    for (std::size_t k = 0; k < conjuncts.size(); ++k) {
        Clique c;
        c.formula = conjuncts[k];
        c.agents = conjuncts[k].agents();
        if (!declared.empty() && !declared[k].empty()) {
            std::vector<int> nu = declared[k];
            std::sort(nu.begin(), nu.end());
            nu.erase(std::unique(nu.begin(), nu.end()), nu.end());
            if (!std::includes(nu.begin(), nu.end(), c.agents.begin(), c.agents.end()))
                throw SpecificationError("declared clique " + std::to_string(k)
                                         + " does not cover the agents of its conjunct");
            c.agents = std::move(nu);
        }
        spec.cliques.push_back(std::move(c));
    }
    return spec;
}

CliqueSpec extract_cliques(const Formula& f, const std::vector<std::vector<int>>& declared)
{
    if (f.kind() == FormulaKind::conjunction) return make_clique_spec(f.children(), declared);
    return make_clique_spec({f}, declared);
}

// =======================================================================
// Exact semantics
// =======================================================================

void check_length(const Formula& f, const Trajectory& x, int t)
{
    if (t < 0) throw ArgumentError("negative evaluation time");
    if (t + f.horizon() > x.last_index())
        throw LengthError("trajectory has " + std::to_string(x.last_index() + 1) + " samples, formula at t="
                          + std::to_string(t) + " needs " + std::to_string(t + f.horizon() + 1));
}

namespace {

// Values of f at t0..t1, combined with Op (min/max for robustness,
// and/or for Boolean verdicts).
template <class T, class Leaf, class Meet, class Join>
std::vector<T> signal_impl(const Formula& f, const Trajectory& x, int t0, int t1, UntilConvention conv,
                           const Leaf& leaf, const Meet& meet, const Join& join, T top, T bottom)
{
    const int len = t1 - t0 + 1;
    std::vector<T> out(static_cast<std::size_t>(std::max(len, 0)));
    if (len <= 0) return out;
    auto rec = [&](const Formula& g, int a, int b) {
        return signal_impl<T>(g, x, a, b, conv, leaf, meet, join, top, bottom);
    };

    switch (f.kind()) {
        case FormulaKind::truth:
            std::fill(out.begin(), out.end(), top);
            break;
        case FormulaKind::predicate:
        case FormulaKind::negated_predicate: {
            const bool neg = f.kind() == FormulaKind::negated_predicate;
            for (int t = t0; t <= t1; ++t) out[t - t0] = leaf(f.predicate(), t, neg);
            break;
        }
        case FormulaKind::conjunction:
        case FormulaKind::disjunction: {
            const bool is_and = f.kind() == FormulaKind::conjunction;
            bool first = true;
            for (const auto& c : f.children()) {
                auto s = rec(c, t0, t1);
                for (int i = 0; i < len; ++i)
                    out[i] = first ? s[i] : (is_and ? meet(out[i], s[i]) : join(out[i], s[i]));
                first = false;
            }
            break;
        }
        case FormulaKind::always:
        case FormulaKind::eventually: {
            const bool is_always = f.kind() == FormulaKind::always;
            const auto I = f.interval();
            auto s = rec(f.child(), t0 + I.lo, t1 + I.hi);
            for (int t = t0; t <= t1; ++t) {
                T acc = s[t - t0];
                for (int tau = t + I.lo + 1; tau <= t + I.hi; ++tau) {
                    const T v = s[tau - t0 - I.lo];
                    acc = is_always ? meet(acc, v) : join(acc, v);
                }
                out[t - t0] = acc;
            }
            break;
        }
        case FormulaKind::until: {
            const auto I = f.interval();
            if (conv == UntilConvention::as_printed) {
                // max_{tau in t+I} min(left(tau), min_{t <= tau' <= tau} right(tau'))
                auto l = rec(f.left(), t0 + I.lo, t1 + I.hi);
                auto r = rec(f.right(), t0, t1 + I.hi);
                for (int t = t0; t <= t1; ++t) {
                    T best = bottom;
                    T run = top;
                    for (int tau = t; tau <= t + I.hi; ++tau) {
                        run = meet(run, r[tau - t0]);
                        if (tau >= t + I.lo) best = join(best, meet(l[tau - t0 - I.lo], run));
                    }
                    out[t - t0] = best;
                }
            } else {
                // max_{tau in t+I} min(right(tau), min_{t <= tau' < tau} left(tau'))
                auto r = rec(f.right(), t0 + I.lo, t1 + I.hi);
                auto l = rec(f.left(), t0, t1 + I.hi);
                for (int t = t0; t <= t1; ++t) {
                    T best = bottom;
                    T run = top;
                    for (int tau = t; tau <= t + I.hi; ++tau) {
                        if (tau >= t + I.lo) best = join(best, meet(r[tau - t0 - I.lo], run));
                        run = meet(run, l[tau - t0]);
                    }
                    out[t - t0] = best;
                }
            }
            break;
        }
    }
    return out;
}

} // namespace

std::vector<double> robustness_signal(const Formula& f, const Trajectory& x, int t0, int t1, UntilConvention conv)
{
    if (t1 < t0) return {};
    check_length(f, x, t1);
    if (t0 < 0) throw ArgumentError("negative evaluation time");
    auto leaf = [&](const Predicate& p, int t, bool neg) {
        const double v = p.evaluate(x, t);
        return neg ? -v : v;
    };
    auto meet = [](double a, double b) { return std::min(a, b); };
    auto join = [](double a, double b) { return std::max(a, b); };
    return signal_impl<double>(f, x, t0, t1, conv, leaf, meet, join, kTruthRobustness, -kTruthRobustness);
}

double eval_robust(const Formula& f, const Trajectory& x, int t, UntilConvention conv)
{
    check_length(f, x, t);
    return robustness_signal(f, x, t, t, conv).front();
}

bool eval_bool(const Formula& f, const Trajectory& x, int t, UntilConvention conv)
{
    check_length(f, x, t);
    auto leaf = [&](const Predicate& p, int tt, bool neg) -> char {
        const bool sat = p.evaluate(x, tt) >= 0.0;
        return neg ? !sat : sat;
    };
    auto meet = [](char a, char b) -> char { return a && b; };
    auto join = [](char a, char b) -> char { return a || b; };
    return signal_impl<char>(f, x, t, t, conv, leaf, meet, join, 1, 0).front() != 0;
}

std::vector<double> clique_robustness(const CliqueSpec& spec, const Trajectory& x, UntilConvention conv)
{
    std::vector<double> out;
    out.reserve(spec.cliques.size());
    for (const auto& c : spec.cliques) out.push_back(eval_robust(c.formula, x, 0, conv));
    return out;
}

double eval_robust(const CliqueSpec& spec, const Trajectory& x, UntilConvention conv)
{
    const auto per = clique_robustness(spec, x, conv);
    if (per.empty()) throw SpecificationError("empty clique specification");
    return *std::min_element(per.begin(), per.end());
}

} // namespace mastl
