// Acceptance suite: one PASS/FAIL line per criterion.
//
// Exit status is 0 when the failing criteria are exactly the ones named with
// --expect-fail, so a known failure stays visible without hiding regressions
// in the others (or an unexpected fix).

#include <cstdio>
#include <iostream>
#include <set>
#include <string>

#include <CLI11.hpp>

#include <mastl/parser.hpp>
#include <mastl/penalty_method.hpp>
#include <mastl/scenario.hpp>

#include "support.hpp"

using namespace mastl;
using namespace mastl::testing;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

struct Benchmark {
    std::string label;
    PmConfig cfg;
    Problem problem;
    SolveReport report;
};

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

Benchmark run_builtin(const std::string& name, DynamicsKind dyn)
{
    const auto doc = builtin_scenario(name, dyn);
    Benchmark b;
    b.label = name + (dyn == DynamicsKind::unicycle ? "/unicycle" : "/linear");
    b.cfg = doc.solver;
    b.problem = build_problem(doc);
    b.report = pm_solve(b.problem, b.cfg);
    std::cerr << "  solved " << b.label << ": rho " << b.report.rho << " (" << to_string(b.report.termination) << ", "
              << b.report.outer.size() << " outer, " << fmt(b.report.wall_seconds) << " s)\n";
    return b;
}

// Exact robustness above `threshold` within `budget` seconds.
bool solved(const Benchmark& b, double threshold, double budget, std::string& detail)
{
    const bool ok = b.report.rho > threshold && b.report.wall_seconds <= budget;
    detail += b.label + " rho=" + fmt(b.report.rho) + " t=" + fmt(b.report.wall_seconds) + "s; ";
    return ok;
}

Outcome under_approximation()
{
    Rng rng(401);
    FormulaOptions o;
    o.agents = 3;
    int strict = 0, sound = 0, satisfied = 0;
    for (int n = 0; n < 1000; ++n) {
        const auto spec = random_spec(rng, uniform_int(rng, 2, 5), o);
        const auto x = random_trajectory(rng, 3, spec.horizon());
        const double exact = eval_robust(spec, x);
        const double s = smooth_robustness(spec, x, SmoothingConfig(2, 1)).value;
        if (!(s < exact)) ++strict;
        if (s >= 0) {
            ++satisfied;
            for (const auto& c : spec.cliques)
                if (!eval_bool(c.formula, x, 0)) {
                    ++sound;
                    break;
                }
        }
    }
    // Random pairs rarely come out satisfied; shallow two-clique specs
    // supply more nonnegative cases for the soundness half.
    FormulaOptions shallow = o;
    shallow.max_depth = 1;
    for (int n = 0; satisfied < 300 && n < 200000; ++n) {
        const auto spec = random_spec(rng, 2, shallow);
        const auto x = random_trajectory(rng, 3, spec.horizon());
        const double s = smooth_robustness(spec, x, SmoothingConfig(2, 1)).value;
        if (!(s < eval_robust(spec, x))) ++strict;
        if (s < 0) continue;
        ++satisfied;
        for (const auto& c : spec.cliques)
            if (!eval_bool(c.formula, x, 0)) {
                ++sound;
                break;
            }
    }
    return {strict == 0 && sound == 0, "1000 cases plus shallow ones, " + std::to_string(strict) + " not strictly below, " +
                                            std::to_string(sound) + " of " + std::to_string(satisfied) +
                                            " nonnegative cases unsatisfied"};
}

Outcome gap_bound()
{
    Rng rng(501);
    int violations = 0;
    double worst = 0.0;
    for (int n = 0; n < 1000; ++n) {
        const int K = uniform_int(rng, 2, 6);
        std::vector<Formula> conj;
        for (int k = 0; k < K; ++k) {
            const Predicate p = random_predicate(rng, 3);
            conj.push_back(coin(rng, 0.3) ? Formula::neg_pred(p) : Formula::pred(p));
        }
        const auto spec = make_clique_spec(conj);
        const auto x = random_trajectory(rng, 3, 0);
        const double go = uniform(rng, 0.5, 4.0);
        const double gap = eval_robust(spec, x) - smooth_robustness(spec, x, SmoothingConfig(2, go)).value;
        const double bound = std::log(K) / go;
        if (!(gap > 0 && gap <= bound + 1e-12)) ++violations;
        worst = std::max(worst, gap / bound);
    }
    double equal_err = 0.0;
    for (int K = 2; K <= 12; ++K) {
        for (double go : {0.5, 1.0, 2.5}) {
            std::vector<Formula> conj;
            for (int k = 0; k < K; ++k) conj.push_back(Formula::pred(Predicate::affine({{k, 0}}, Vector::Ones(1), 0.0)));
            Trajectory x;
            for (int k = 0; k < K; ++k) x.states.push_back(Matrix::Constant(2, 1, 0.37 * K - 1));
            const auto spec = make_clique_spec(conj);
            const double gap = eval_robust(spec, x) - smooth_robustness(spec, x, SmoothingConfig(2, go)).value;
            equal_err = std::max(equal_err, std::abs(gap - std::log(K) / go));
        }
    }
    return {violations == 0 && equal_err <= 1e-9, "1000 cases, " + std::to_string(violations) + " violations, max gap/bound " +
                                                       fmt(worst) + ", equal-case error " + fmt(equal_err)};
}

Problem one_affine(double b)
{
    Problem p;
    p.agents.push_back(AgentModel::single_integrator({0.0, 0.0}));
    p.spec = make_clique_spec({Formula::eventually({1, 1}, Formula::pred(Predicate::affine({{0, 0}}, Vector::Ones(1), b)))});
    p.horizon = 1;
    p.cost = CostSpec::input_energy(p.agents);
    return p;
}

Outcome gradients()
{
    Rng rng(601);
    double worst_R = 0.0, worst_pull = 0.0;
    int straddles = 0;
    for (int n = 0; n < 100; ++n) {
        Problem p;
        ControlSequence u;
        if (n < 20) {
            // Smooth robustness equals b at u = 0; |b| below the step puts
            // the stencil on both sides of R = 0.
            p = one_affine(uniform(rng, -1e-6, 1e-6) * (n % 2 ? 1 : 1e3));
            u = ControlSequence(p.layout());
            ++straddles;
        } else {
            p = random_problem(rng, uniform_int(rng, 1, 3), uniform_int(rng, 1, 4));
            u = random_controls(rng, p);
        }
        const PenaltyContext ctx(p, uniform(rng, 0.5, 10.0));
        const auto fd = fd_gradient([&](const Vector& v) { return penalty_R(ctx, ControlSequence(u.layout, v)); }, u.values, 1e-6);
        worst_R = std::max(worst_R, rel_error(penalty_grad(ctx, u).values, fd));

        const auto x = rollout(p.agents, u);
        const auto res = smooth_robustness(p.spec, x, p.smoothing);
        const auto g = smooth_robustness_pullback(res.tape, 1.0);
        const auto fdx = fd_gradient([&](const Trajectory& y) { return smooth_robustness(p.spec, y, p.smoothing).value; }, x, 1e-6);
        worst_pull = std::max(worst_pull, rel_error(flatten(g), flatten(fdx)));
    }
    return {worst_R <= 1e-4 && worst_pull <= 1e-4, "100 instances (" + std::to_string(straddles) + " at the R=0 boundary), max rel error penalty " +
                                                       fmt(worst_R) + ", pullback " + fmt(worst_pull)};
}

Outcome descent(const std::vector<Benchmark>& benches)
{
    long checked = 0, violations = 0;
    for (const auto& b : benches)
        for (const auto& tr : b.report.inner_traces)
            for (const auto& it : tr.iterations) {
                if (!it.accepted) continue;
                ++checked;
                if (!(it.F_next - it.F <= it.armijo_rhs(tr.sigma, tr.gamma))) ++violations;
            }

    Rng rng(701);
    int far = 0;
    double worst = 0.0;
    for (int n = 0; n < 50; ++n) {
        const auto q = SeparableQuadratic::random(rng, uniform_int(rng, 1, 6));
        const double lam = uniform(rng, 1.0, 3.0);
        BcgdConfig cfg;
        cfg.epsilon = 1e-10;
        cfg.max_iters = 100000;
        cfg.hessian = HessianPolicy::scaled_identity(4.0);
        cfg.seed = static_cast<std::uint64_t>(n);
        const auto r = bcgd_solve(q, Vector::Random(q.size()), lam, cfg);
        const double err = (r.u - q.minimizer(lam)).norm();
        worst = std::max(worst, err);
        if (!(err <= 1e-5)) ++far;
    }
    return {checked > 0 && violations == 0 && far == 0,
            std::to_string(checked) + " accepted benchmark iterations, " + std::to_string(violations) + " Armijo violations; " +
                "50 quadratics, max |u-u*| " + fmt(worst)};
}

Outcome oracle_equivalence()
{
    Rng rng(801);
    FormulaOptions o;
    o.agents = 2;
    o.max_horizon = 7;
    double worst = 0.0;
    int n = 0;
    while (n < 1000) {
        const Formula f = random_formula(rng, o);
        const auto k = f.kind();
        if (k != FormulaKind::always && k != FormulaKind::eventually && k != FormulaKind::until) continue;
        const int len = uniform_int(rng, f.horizon() + 1, 8);
        const auto x = random_trajectory(rng, 2, len - 1);
        const int t = uniform_int(rng, 0, len - 1 - f.horizon());
        for (auto conv : {UntilConvention::as_printed, UntilConvention::classical})
            worst = std::max(worst, std::abs(eval_robust(f, x, t, conv) - brute_robust(f, x, t, conv)));
        ++n;
    }
    return {worst <= 1e-12, "1000 temporal formulas, both Until conventions, max error " + fmt(worst)};
}

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

Outcome pm_contracts(const std::vector<Benchmark>& benches)
{
    std::vector<Benchmark> runs = benches;
    Rng rng(901);
    for (int n = 0; n < 40; ++n) {
        Benchmark b;
        b.label = "random";
        b.problem = n < 4 ? reach_gap_problem() : random_problem(rng, 3, 3);
        b.cfg.max_outer = 6;
        b.cfg.inner.max_iters = 5000;
        b.cfg.inner.seed = static_cast<std::uint64_t>(n);
        if (n % 2) b.cfg.mode = PmConfig::Mode::penalty_threshold;
        b.report = pm_solve(b.problem, b.cfg);
        runs.push_back(std::move(b));
    }

    int schedule = 0, threshold_exits = 0, threshold_bad = 0, claims = 0, claims_bad = 0;
    for (const auto& b : runs) {
        const auto& r = b.report;
        for (std::size_t k = 0; k < r.outer.size(); ++k) {
            const int kk = static_cast<int>(k);
            if (r.outer[k].lambda != b.cfg.lambda0 * std::pow(b.cfg.eta_lambda, kk)) ++schedule;
            if (r.outer[k].eps != b.cfg.eps0 * std::pow(b.cfg.eta_eps, kk)) ++schedule;
        }
        if (r.termination == PmTermination::penalty_threshold) {
            ++threshold_exits;
            if (!(r.R < r.final_eps_infeas && r.rho_smooth > -std::sqrt(r.final_eps_infeas))) ++threshold_bad;
        }
        if (r.feasible || r.termination == PmTermination::true_robustness_positive) {
            ++claims;
            const double exact = eval_robust(b.problem.spec, rollout(b.problem.agents, r.u));
            if (!(r.rho > 0 && exact == r.rho)) ++claims_bad;
        }
    }
    return {schedule == 0 && threshold_exits > 0 && threshold_bad == 0 && claims_bad == 0,
            std::to_string(runs.size()) + " solves, " + std::to_string(schedule) + " schedule mismatches, " +
                std::to_string(threshold_bad) + "/" + std::to_string(threshold_exits) + " bad threshold exits, " +
                std::to_string(claims_bad) + "/" + std::to_string(claims) + " bad feasibility claims"};
}

Outcome round_trips()
{
    Rng rng(1001);
    FormulaOptions o;
    o.agents = 3;
    o.max_horizon = 12;
    o.allow_truth = true;
    int mismatches = 0;
    for (int n = 0; n < 1000; ++n) {
        const Formula f = random_formula(rng, o);
        try {
            if (!(parse_stl(pretty_print(f)) == f)) ++mismatches;
        } catch (const std::exception&) {
            ++mismatches;
        }
    }
    std::string counts;
    bool builtins = true;
    for (const auto& name : builtin_names()) {
        const int expected = name == "r2am" ? 21 : 22;
        for (auto dyn : {DynamicsKind::single_integrator, DynamicsKind::unicycle}) {
            try {
                const auto doc = parse_scenario(format_scenario(builtin_scenario(name, dyn)));
                doc.validate();
                const auto p = build_problem(doc);
                builtins = builtins && p.spec.size() == expected;
                if (dyn == DynamicsKind::single_integrator) counts += " " + name + "=" + std::to_string(p.spec.size());
            } catch (const std::exception& e) {
                builtins = false;
                counts += " " + name + " error: " + e.what();
            }
        }
    }
    return {mismatches == 0 && builtins, "1000 formulas, " + std::to_string(mismatches) + " mismatches; cliques" + counts};
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"acceptance suite"};
    std::vector<int> expected_failures;
    app.add_option("--expect-fail", expected_failures, "criterion known to fail (repeatable)");
    CLI11_PARSE(app, argc, argv);

    std::cerr << "running benchmark solves\n";
    std::vector<Benchmark> benches;
    benches.push_back(run_builtin("r2am", DynamicsKind::single_integrator));
    benches.push_back(run_builtin("r2amca", DynamicsKind::single_integrator));
    benches.push_back(run_builtin("ruramca", DynamicsKind::single_integrator));
    benches.push_back(run_builtin("ruramca", DynamicsKind::unicycle));

    std::vector<Outcome> out(10);
    out[0].pass = solved(benches[0], 0.0, 600, out[0].detail);
    out[1].pass = solved(benches[1], 0.0, 1200, out[1].detail);
    out[1].pass = solved(benches[2], 0.0, 1200, out[1].detail) && out[1].pass;
    out[2].pass = solved(benches[3], 1e-4, std::numeric_limits<double>::infinity(), out[2].detail);
    out[3] = under_approximation();
    out[4] = gap_bound();
    out[5] = gradients();
    out[6] = descent(benches);
    out[7] = oracle_equivalence();
    out[8] = pm_contracts(benches);
    out[9] = round_trips();

    static const char* names[] = {"r2am linear feasible",
                                  "r2amca and ruramca linear feasible",
                                  "ruramca unicycle rho > 1e-4",
                                  "smooth under-approximation",
                                  "outer gap bound",
                                  "gradients vs finite differences",
                                  "Armijo descent and quadratic minimizers",
                                  "exact robustness vs enumeration",
                                  "penalty method contracts",
                                  "parser round trip and built-ins"};
    std::set<int> failed;
    for (int c = 0; c < 10; ++c) {
        std::cout << (out[c].pass ? "PASS" : "FAIL") << " " << c + 1 << " " << names[c] << ": " << out[c].detail << "\n";
        if (!out[c].pass) failed.insert(c + 1);
    }
    const std::set<int> expected(expected_failures.begin(), expected_failures.end());
    std::cout << failed.size() << " of 10 criteria failed";
    if (!expected.empty()) std::cout << " (" << expected.size() << " expected)";
    std::cout << "\n";
    return failed == expected ? 0 : 1;
}
