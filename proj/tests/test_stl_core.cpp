#include <doctest.h>

#include <mastl/formula.hpp>

#include "support.hpp"

using namespace mastl;
using namespace mastl::testing;

namespace {

// One agent with a scalar signal in component 0.
Trajectory scalar_trace(std::vector<double> v)
{
    Matrix s(1, static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) s(0, static_cast<Eigen::Index>(i)) = v[i];
    return Trajectory({s});
}

Predicate x0_plus(double b) { return Predicate::affine({{0, 0}}, Vector::Ones(1), b); }

RawFormula random_raw(Rng& rng, int depth, int budget)
{
    if (depth >= 4 || coin(rng, 0.25)) {
        auto p = RawFormula::pred(random_affine(rng, 2));
        return coin(rng, 0.3) ? RawFormula::negation(p) : p;
    }
    switch (uniform_int(rng, 0, 5)) {
        case 0: return RawFormula::negation(random_raw(rng, depth + 1, budget));
        case 1: return RawFormula::conj({random_raw(rng, depth + 1, budget), random_raw(rng, depth + 1, budget)});
        case 2: return RawFormula::disj({random_raw(rng, depth + 1, budget), random_raw(rng, depth + 1, budget)});
        case 3: {
            auto I = random_interval(rng, budget);
            return RawFormula::always(I, random_raw(rng, depth + 1, budget - I.hi));
        }
        case 4: {
            auto I = random_interval(rng, budget);
            return RawFormula::eventually(I, random_raw(rng, depth + 1, budget - I.hi));
        }
        default: {
            // Until stays outside negations: only reached with an even count above.
            auto I = random_interval(rng, budget);
            return RawFormula::conj({RawFormula::eventually(I, random_raw(rng, depth + 1, budget - I.hi)),
                                     random_raw(rng, depth + 1, budget)});
        }
    }
}

bool raw_bool(const RawFormula& f, const Trajectory& x, int t)
{
    using K = RawFormula::Kind;
    switch (f.kind()) {
        case K::truth: return true;
        case K::predicate: return f.predicate().evaluate(x, t) > 0.0;
        case K::negation: return !raw_bool(f.children()[0], x, t);
        case K::conjunction:
            for (const auto& c : f.children())
                if (!raw_bool(c, x, t)) return false;
            return true;
        case K::disjunction:
            for (const auto& c : f.children())
                if (raw_bool(c, x, t)) return true;
            return false;
        case K::always:
            for (int s = t + f.interval().lo; s <= t + f.interval().hi; ++s)
                if (!raw_bool(f.children()[0], x, s)) return false;
            return true;
        case K::eventually:
            for (int s = t + f.interval().lo; s <= t + f.interval().hi; ++s)
                if (raw_bool(f.children()[0], x, s)) return true;
            return false;
        case K::until: break;
    }
    return false;
}

} // namespace

TEST_CASE("horizon follows the recursive rule")
{
    const Formula p = Formula::pred(x0_plus(0));
    CHECK(p.horizon() == 0);
    const Formula f1 = Formula::eventually({10, 50}, p), f2 = Formula::eventually({70, 100}, p);
    CHECK(Formula::conj({f1, f2}).horizon() == 100);
    CHECK(Formula::until({0, 50}, f1, Formula::eventually({10, 50}, p)).horizon() == 100);
    CHECK(Formula::always({2, 3}, Formula::until({1, 4}, p, Formula::eventually({0, 2}, p))).horizon() == 9);
}

TEST_CASE("intervals and constructors validate their arguments")
{
    CHECK_THROWS_AS(Interval(3, 2), ArgumentError);
    CHECK_THROWS_AS(Interval(-1, 2), ArgumentError);
    CHECK_THROWS_AS(Formula::conj({Formula::truth()}), ArgumentError);
    CHECK_THROWS_AS(Predicate::affine({{0, 0}}, Vector::Ones(2), 0.0), ArgumentError);
    CHECK_THROWS_AS(Predicate::affine({}, Vector(), 0.0), ArgumentError);
}

TEST_CASE("base cases of the robustness recursion")
{
    const auto x = scalar_trace({2.5});
    CHECK(eval_robust(Formula::pred(x0_plus(0)), x, 0) == 2.5);
    CHECK(eval_robust(Formula::neg_pred(x0_plus(0)), x, 0) == -2.5);
    const auto y = scalar_trace({1.0});
    const Formula conj = Formula::conj({Formula::pred(x0_plus(0)), Formula::pred(x0_plus(-4))});
    CHECK(eval_robust(conj, y, 0) == -3.0);
    CHECK(eval_robust(Formula::truth(), y, 0) == kTruthRobustness);
}

TEST_CASE("boolean semantics on small traces")
{
    const auto x = scalar_trace({1, -1, 1});
    CHECK_FALSE(eval_bool(Formula::always({0, 2}, Formula::pred(x0_plus(0))), x, 0));
    CHECK(eval_bool(Formula::eventually({0, 2}, Formula::pred(x0_plus(0))), x, 0));
    CHECK(eval_bool(Formula::pred(x0_plus(0)), scalar_trace({1.0}), 0));
}

TEST_CASE("until conventions differ on a distinguishing trace")
{
    // left = (x > 0), right = (x < 0)
    const Formula l = Formula::pred(x0_plus(0)), r = Formula::neg_pred(x0_plus(0));
    const Formula u = Formula::until({0, 2}, l, r);
    const auto x = scalar_trace({-1, -2, 3});
    // As printed: left at tau and right on [0, tau]: tau = 2 fails (right at 2 is -3),
    // tau = 0 needs left at 0 (-1). Best is max(min(-1, 1), min(-2, 1, 2), min(3, 1, 2, -3)) = -1.
    CHECK(eval_robust(u, x, 0, UntilConvention::as_printed) == doctest::Approx(-1.0));
    // Classical: right at tau and left on [0, tau): tau = 0 gives right(0) = 1.
    CHECK(eval_robust(u, x, 0, UntilConvention::classical) == doctest::Approx(1.0));
}

TEST_CASE("exact robustness matches enumeration on random formulas")
{
    Rng rng(11);
    FormulaOptions o;
    o.agents = 2;
    o.max_horizon = 6;
    for (int n = 0; n < 400; ++n) {
        const Formula f = random_formula(rng, o);
        const auto x = random_trajectory(rng, 2, f.horizon() + uniform_int(rng, 0, 2));
        const int t = uniform_int(rng, 0, x.last_index() - f.horizon());
        for (auto conv : {UntilConvention::as_printed, UntilConvention::classical}) {
            const double r = eval_robust(f, x, t, conv);
            REQUIRE(std::abs(r - brute_robust(f, x, t, conv)) <= 1e-12);
            const bool b = eval_bool(f, x, t, conv);
            REQUIRE(b == brute_bool(f, x, t, conv));
            if (r > 0) REQUIRE(b);
            if (r < 0) REQUIRE_FALSE(b);
        }
    }
}

TEST_CASE("robustness signal agrees with pointwise evaluation")
{
    Rng rng(5);
    FormulaOptions o;
    for (int n = 0; n < 50; ++n) {
        const Formula f = random_formula(rng, o);
        const auto x = random_trajectory(rng, 2, f.horizon() + 4);
        const auto sig = robustness_signal(f, x, 0, 4);
        REQUIRE(sig.size() == 5);
        for (int t = 0; t <= 4; ++t) REQUIRE(sig[t] == eval_robust(f, x, t));
    }
}

TEST_CASE("conjunction is the exact minimum of its children")
{
    Rng rng(8);
    FormulaOptions o;
    for (int n = 0; n < 200; ++n) {
        const Formula a = random_formula(rng, o), b = random_formula(rng, o);
        const auto x = random_trajectory(rng, 2, std::max(a.horizon(), b.horizon()));
        REQUIRE(eval_robust(Formula::conj({a, b}), x, 0) == std::min(eval_robust(a, x, 0), eval_robust(b, x, 0)));
    }
}

TEST_CASE("horizon is tight for trajectory length")
{
    Rng rng(21);
    FormulaOptions o;
    for (int n = 0; n < 100; ++n) {
        const Formula f = random_formula(rng, o);
        const auto ok = random_trajectory(rng, 2, f.horizon());
        CHECK_NOTHROW(eval_robust(f, ok, 0));
        if (f.horizon() > 0) {
            const auto shorter = random_trajectory(rng, 2, f.horizon() - 1);
            CHECK_THROWS_AS(eval_robust(f, shorter, 0), LengthError);
        }
    }
}

TEST_CASE("normalization to positive normal form")
{
    const Predicate p1 = x0_plus(0), p2 = x0_plus(-1);
    SUBCASE("De Morgan")
    {
        const auto f = normalize_pnf(RawFormula::negation(RawFormula::conj({RawFormula::pred(p1), RawFormula::pred(p2)})));
        CHECK(f == Formula::disj({Formula::neg_pred(p1), Formula::neg_pred(p2)}));
    }
    SUBCASE("temporal duality")
    {
        const auto f = normalize_pnf(RawFormula::negation(RawFormula::eventually({1, 3}, RawFormula::pred(p1))));
        CHECK(f == Formula::always({1, 3}, Formula::neg_pred(p1)));
    }
    SUBCASE("double negation")
    {
        CHECK(normalize_pnf(RawFormula::negation(RawFormula::negation(RawFormula::pred(p1)))) == Formula::pred(p1));
    }
    SUBCASE("negated until and negated true are rejected")
    {
        const auto u = RawFormula::until({0, 1}, RawFormula::pred(p1), RawFormula::pred(p2));
        CHECK_THROWS_AS(normalize_pnf(RawFormula::negation(u)), SpecificationError);
        CHECK_THROWS_AS(normalize_pnf(RawFormula::negation(RawFormula::truth())), SpecificationError);
    }
}

TEST_CASE("normalization preserves boolean semantics")
{
    Rng rng(3);
    for (int n = 0; n < 1000; ++n) {
        const RawFormula raw = random_raw(rng, 0, 10);
        const Formula f = normalize_pnf(raw);
        const auto x = random_trajectory(rng, 2, 10);
        REQUIRE(eval_bool(f, x, 0) == raw_bool(raw, x, 0));
    }
}

TEST_CASE("clique extraction")
{
    const Formula a = Formula::pred(Predicate::affine({{1, 0}}, Vector::Ones(1), 0.0));
    const Formula b = Formula::pred(Predicate::pairwise_ball(2, 3, 1.0));
    SUBCASE("one clique per conjunct")
    {
        const auto spec = extract_cliques(Formula::conj({a, b}));
        REQUIRE(spec.size() == 2);
        CHECK(spec.cliques[0].agents == std::vector<int>{1});
        CHECK(spec.cliques[1].agents == std::vector<int>{2, 3});
    }
    SUBCASE("single conjunct")
    {
        CHECK(extract_cliques(b).size() == 1);
    }
    SUBCASE("declared cliques must cover their conjunct")
    {
        CHECK_NOTHROW(extract_cliques(Formula::conj({a, b}), {{0, 1}, {}}));
        CHECK_THROWS_AS(extract_cliques(Formula::conj({a, b}), {{1}, {2}}), SpecificationError);
    }
}

TEST_CASE("pairwise ball predicate")
{
    Matrix s0(2, 1), s1(2, 1);
    s0 << 0, 0;
    s1 << 3, 4;
    const Trajectory x({s0, s1});
    const auto p = Predicate::pairwise_ball(0, 1, 0.25);
    CHECK(p.evaluate(x, 0) == doctest::Approx(0.25 - 5.0));
    Trajectory g = Trajectory::zeros_like(x);
    p.accumulate_gradient(x, 0, 1.0, g);
    CHECK(g(0, 0, 0) == doctest::Approx(3.0 / 5.0));
    CHECK(g(1, 1, 0) == doctest::Approx(-4.0 / 5.0));
    // singular point: zero gradient
    const Trajectory same({s0, s0});
    Trajectory g0 = Trajectory::zeros_like(same);
    p.accumulate_gradient(same, 0, 1.0, g0);
    CHECK(flatten(g0).isZero());
}
