#include <doctest.h>

#include <mastl/penalty_method.hpp>

#include "support.hpp"

using namespace mastl;
using namespace mastl::testing;

namespace {

// Two integrators: each reaches x >= 1 at some step in [2, 4], and their
// vertical gap closes below 0.5 at some step.
Problem reach_gap_problem()
{
    Problem p;
    p.agents = {AgentModel::single_integrator({0, 0}), AgentModel::single_integrator({0, 1})};
    std::vector<Formula> conj;
    for (int i = 0; i < 2; ++i)
        conj.push_back(Formula::eventually({2, 4}, Formula::pred(Predicate::affine({{i, 0}}, Vector::Ones(1), -1.0))));
    conj.push_back(Formula::eventually(
        {0, 4}, Formula::pred(Predicate::affine({{0, 1}, {1, 1}}, (Vector(2) << 1.0, -1.0).finished(), 0.5))));
    p.spec = make_clique_spec(conj);
    p.horizon = 4;
    p.cost = CostSpec::input_energy(p.agents);
    return p;
}

Problem trivially_satisfied()
{
    Problem p;
    p.agents = {AgentModel::single_integrator({0, 0})};
    p.spec = make_clique_spec({Formula::always({0, 3}, Formula::pred(Predicate::affine({{0, 0}}, Vector::Ones(1), 1.0)))});
    p.horizon = 3;
    p.cost = CostSpec::input_energy(p.agents);
    return p;
}

} // namespace

TEST_CASE("geometric schedules")
{
    PmConfig cfg;
    for (int k = 0; k < 6; ++k) CHECK(cfg.lambda_at(k) == std::pow(5.0, k));
    CHECK(cfg.lambda_at(3) == 125.0);
    for (int k = 1; k < 12; ++k) CHECK(cfg.eps_at(k) == cfg.eps_at(k - 1) * 0.5);
    CHECK(cfg.inner_tolerance(0) == 1e-2);
    CHECK(cfg.inner_tolerance(10) == 1e-3);
}

TEST_CASE("configuration validation")
{
    PmConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    auto bad = cfg;
    bad.eta_lambda = 1.0;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = cfg;
    bad.lambda0 = 0.0;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = cfg;
    bad.eta_eps = 1.5;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = cfg;
    bad.inner.sigma = 1.0;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("an already feasible initial guess stops before any inner solve")
{
    const auto p = trivially_satisfied();
    SUBCASE("robustness mode")
    {
        const auto r = pm_solve(p, PmConfig{});
        CHECK(r.termination == PmTermination::true_robustness_positive);
        CHECK(r.outer.empty());
        CHECK(r.returned_initial_guess);
        CHECK(r.u.values.isZero());
        CHECK(r.rho == 1.0);
    }
    SUBCASE("penalty mode")
    {
        PmConfig cfg;
        cfg.mode = PmConfig::Mode::penalty_threshold;
        const auto r = pm_solve(p, cfg);
        CHECK(r.termination == PmTermination::penalty_threshold);
        CHECK(r.outer.empty());
        CHECK(r.returned_initial_guess);
    }
}

TEST_CASE("penalty threshold exit contract")
{
    const auto p = reach_gap_problem();
    PmConfig cfg;
    cfg.mode = PmConfig::Mode::penalty_threshold;
    cfg.inner.max_iters = 20000;
    const auto r = pm_solve(p, cfg);
    REQUIRE(r.termination == PmTermination::penalty_threshold);
    CHECK(r.R < r.final_eps_infeas);
    CHECK(r.rho_smooth > -std::sqrt(r.final_eps_infeas));
    for (std::size_t k = 0; k < r.outer.size(); ++k) {
        CHECK(r.outer[k].lambda == cfg.lambda_at(static_cast<int>(k)));
        CHECK(r.outer[k].eps == cfg.eps_at(static_cast<int>(k)));
    }
}

TEST_CASE("robustness mode solves a small problem")
{
    const auto p = reach_gap_problem();
    PmConfig cfg;
    cfg.inner.max_iters = 20000;
    const auto r = pm_solve(p, cfg);
    CHECK(r.termination == PmTermination::true_robustness_positive);
    CHECK(r.feasible);
    CHECK(r.rho > cfg.robustness_margin);
    CHECK(r.rho == eval_robust(p.spec, rollout(p.agents, r.u)));
}

TEST_CASE("non-convergence reports the best iterate")
{
    Rng rng(3);
    for (int n = 0; n < 10; ++n) {
        const auto p = random_problem(rng, 3, 4);
        PmConfig cfg;
        cfg.max_outer = 3;
        cfg.inner.max_iters = 60;
        cfg.inner.seed = static_cast<std::uint64_t>(n);
        const auto r = pm_solve(p, cfg);
        if (r.feasible) CHECK(r.rho > 0.0);
        CHECK(r.rho == eval_robust(p.spec, rollout(p.agents, r.u)));
        if (r.termination != PmTermination::max_outer_iters) continue;
        CHECK(r.outer.size() == 3);
        for (const auto& rec : r.outer) CHECK(r.rho >= rec.rho);
        CHECK(r.rho >= evaluate_solution(p, ControlSequence(p.layout())).rho);
    }
}

TEST_CASE("solves are deterministic for a fixed seed")
{
    Rng rng(8);
    const auto p = random_problem(rng, 3, 3);
    PmConfig cfg;
    cfg.max_outer = 2;
    cfg.inner.max_iters = 100;
    cfg.inner.seed = 11;
    const auto a = pm_solve(p, cfg), b = pm_solve(p, cfg);
    CHECK(a.u.values == b.u.values);
    CHECK(a.rho == b.rho);
}

TEST_CASE("warm start")
{
    SUBCASE("no individual tasks gives zero")
    {
        Problem p;
        p.agents = {AgentModel::single_integrator({0, 0}), AgentModel::single_integrator({1, 0})};
        p.spec = make_clique_spec({Formula::eventually({0, 3}, Formula::pred(Predicate::pairwise_ball(0, 1, 0.5)))});
        p.horizon = 3;
        p.cost = CostSpec::input_energy(p.agents);
        CHECK(warm_start(p, 1.0, BcgdConfig{}).values.isZero());
    }
    SUBCASE("individual tasks are solved per agent")
    {
        const auto p = reach_gap_problem();
        BcgdConfig inner;
        inner.max_iters = 100000;
        const double lam = 5.0;
        const auto u = warm_start(p, lam, inner);
        CHECK_FALSE(u.values.isZero());
        for (int i = 0; i < 2; ++i) {
            const Problem sub = individual_problem(p, i);
            const auto g = F_lambda_grad(PenaltyContext(sub, lam), u);
            CHECK(g.block(i).norm() <= inner.epsilon);
        }
    }
}
