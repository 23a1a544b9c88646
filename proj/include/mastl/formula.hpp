#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include <mastl/dynamics.hpp>
#include <mastl/types.hpp>

namespace mastl {

// Closed discrete interval [lo, hi] of time offsets.
struct Interval {
    int lo = 0;
    int hi = 0;

    Interval() = default;
    Interval(int lo_, int hi_);

    bool operator==(const Interval&) const = default;
};

// One scalar entry of the multi-agent state: x_agent(t)[component].
struct StateRef {
    int agent = 0;
    int component = 0;

    bool operator==(const StateRef&) const = default;
};

/*
 * Predicate function mu over a selected sub-vector y of the multi-agent state.
 *
 *   affine: mu(y) = c . y + b
 *   ball:   mu(y) = r - || A y + b ||_2
 *
 * The ball gradient at A y + b = 0 is defined as zero.
 */
class Predicate {
public:
    enum class Kind { affine, ball };

    static Predicate affine(std::vector<StateRef> selector, Vector coefficients, double offset);
    static Predicate ball(std::vector<StateRef> selector, double radius, Matrix A, Vector b);

    // r - || [I -I] (p_i, p_j) ||: the pairwise distance ball over planar positions.
    static Predicate pairwise_ball(int agent_i, int agent_j, double radius);

    Kind kind() const { return kind_; }
    const std::vector<StateRef>& selector() const { return selector_; }
    // Participating agents, sorted and unique.
    const std::vector<int>& agents() const { return agents_; }

    const Vector& coefficients() const { return coefficients_; }
    double offset() const { return offset_; }
    double radius() const { return radius_; }
    const Matrix& matrix() const { return A_; }
    const Vector& shift() const { return b_; }

    double evaluate(const Trajectory& x, int t) const;
    // grad(x(t)) += scale * d mu / d x(t)
    void accumulate_gradient(const Trajectory& x, int t, double scale, Trajectory& grad) const;

    bool operator==(const Predicate& other) const;

private:
    Predicate() = default;
    void finalize();
    SmallVector ball_residual(const Trajectory& x, int t) const; // A y + b

    Kind kind_ = Kind::affine;
    std::vector<StateRef> selector_;
    std::vector<int> agents_;
    Vector coefficients_;
    double offset_ = 0.0;
    double radius_ = 0.0;
    Matrix A_;
    Vector b_;
};

enum class FormulaKind { truth, predicate, negated_predicate, conjunction, disjunction, always, eventually, until };

// Until has two conventions: as printed (left at tau, right over [t, tau])
// and classical (right at tau, left over [t, tau)).
enum class UntilConvention { as_printed, classical };

/*
 * Immutable STL formula in positive normal form. Copies share the tree.
 */
class Formula {
public:
    // Default-constructed formulas are True.
    Formula();

    static Formula truth();
    static Formula pred(Predicate p);
    static Formula neg_pred(Predicate p);
    // Both require at least two children.
    static Formula conj(std::vector<Formula> children);
    static Formula disj(std::vector<Formula> children);
    static Formula always(Interval I, Formula child);
    static Formula eventually(Interval I, Formula child);
    static Formula until(Interval I, Formula left, Formula right);

    FormulaKind kind() const { return node_->kind; }
    const Predicate& predicate() const;
    const std::vector<Formula>& children() const { return node_->children; }
    const Formula& child() const { return node_->children.at(0); }
    const Formula& left() const { return node_->children.at(0); }
    const Formula& right() const { return node_->children.at(1); }
    const Interval& interval() const { return node_->interval; }
    int horizon() const { return node_->horizon; }
    const std::vector<int>& agents() const { return node_->agents; }

    friend bool operator==(const Formula& a, const Formula& b);

private:
    struct Node {
        FormulaKind kind = FormulaKind::truth;
        std::shared_ptr<const Predicate> pred;
        std::vector<Formula> children;
        Interval interval;
        int horizon = 0;
        std::vector<int> agents;
    };

    explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    static Formula make(Node n);

    std::shared_ptr<const Node> node_;
};

inline int horizon(const Formula& f) { return f.horizon(); }

/*
 * Formula with unrestricted negation, as produced by the parser before
 * normalization.
 */
class RawFormula {
public:
    enum class Kind { truth, predicate, negation, conjunction, disjunction, always, eventually, until };

    static RawFormula truth();
    static RawFormula pred(Predicate p);
    static RawFormula negation(RawFormula child);
    static RawFormula conj(std::vector<RawFormula> children);
    static RawFormula disj(std::vector<RawFormula> children);
    static RawFormula always(Interval I, RawFormula child);
    static RawFormula eventually(Interval I, RawFormula child);
    static RawFormula until(Interval I, RawFormula left, RawFormula right);

    Kind kind() const { return node_->kind; }
    const Predicate& predicate() const { return *node_->pred; }
    const std::vector<RawFormula>& children() const { return node_->children; }
    const Interval& interval() const { return node_->interval; }

private:
    struct Node {
        Kind kind = Kind::truth;
        std::shared_ptr<const Predicate> pred;
        std::vector<RawFormula> children;
        Interval interval;
    };
    explicit RawFormula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

/*
 * Pushes negations down to predicates with De Morgan and temporal duality.
 * Negated Until and negated True are rejected with SpecificationError since
 * the PNF grammar has neither release nor false.
 */
Formula normalize_pnf(const RawFormula& f);

// =======================================================================
// Cliques
// =======================================================================

struct Clique {
    std::vector<int> agents; // sorted
    Formula formula;
};

struct CliqueSpec {
    std::vector<Clique> cliques;

    int size() const { return static_cast<int>(cliques.size()); }
    int horizon() const;
    // The global conjunction; a single clique yields its formula.
    Formula conjunction() const;
};

/*
 * One clique per top-level conjunct. When declared is non-empty it must have
 * one entry per conjunct; an empty entry means "use the conjunct's agents".
 */
CliqueSpec extract_cliques(const Formula& f, const std::vector<std::vector<int>>& declared = {});

// Builds a spec from already-separated conjuncts.
CliqueSpec make_clique_spec(const std::vector<Formula>& conjuncts,
                            const std::vector<std::vector<int>>& declared = {});

// =======================================================================
// Semantics
// =======================================================================

// +infinity stands for the robustness of True.
inline constexpr double kTruthRobustness = std::numeric_limits<double>::infinity();

bool eval_bool(const Formula& f, const Trajectory& x, int t,
               UntilConvention convention = UntilConvention::as_printed);

double eval_robust(const Formula& f, const Trajectory& x, int t,
                   UntilConvention convention = UntilConvention::as_printed);

// Robustness at every t in [t0, t1].
std::vector<double> robustness_signal(const Formula& f, const Trajectory& x, int t0, int t1,
                                      UntilConvention convention = UntilConvention::as_printed);

// Exact robustness per clique at t = 0, and their minimum.
std::vector<double> clique_robustness(const CliqueSpec& spec, const Trajectory& x,
                                      UntilConvention convention = UntilConvention::as_printed);
double eval_robust(const CliqueSpec& spec, const Trajectory& x,
                   UntilConvention convention = UntilConvention::as_printed);

// Throws LengthError unless 0 <= t and t + horizon(f) <= x.last_index().
void check_length(const Formula& f, const Trajectory& x, int t);

} // namespace mastl
