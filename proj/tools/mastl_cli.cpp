#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <mastl/export.hpp>
#include <mastl/scenario.hpp>

using namespace mastl;
using json = nlohmann::json;

namespace {

enum Exit { ok = 0, guarantee_failed = 1, error = 2 };

void error_record(const std::string& kind, const std::string& message, json extra = json::object())
{
    json j = {{"error", kind}, {"message", message}};
    j.update(extra);
    std::cerr << j.dump() << std::endl;
}

struct Overrides {
    std::string dynamics;
    std::optional<std::uint64_t> seed;
    std::optional<double> lambda0, eta_lambda, eps_infeas, gamma_inner, gamma_outer;
    std::optional<std::string> block_rule;
    std::optional<int> max_iters, max_outer;

    void add_to(CLI::App& app)
    {
        app.add_option("--dynamics", dynamics, "linear or unicycle (built-in scenarios: all agents)")
            ->check(CLI::IsMember({"linear", "single_integrator", "unicycle"}));
        app.add_option("--seed", seed, "block-selection seed")->envname("MASTL_SEED");
        app.add_option("--lambda0", lambda0, "initial penalty weight");
        app.add_option("--eta-lambda", eta_lambda, "penalty growth factor");
        app.add_option("--eps-infeas", eps_infeas, "penalty threshold");
        app.add_option("--gamma-inner", gamma_inner, "smoothing sharpness inside cliques");
        app.add_option("--gamma-outer", gamma_outer, "smoothing sharpness across cliques");
        app.add_option("--block-rule", block_rule, "gauss_seidel[:cycle] or gauss_southwell[:count]");
        app.add_option("--max-iters", max_iters, "inner iteration budget per outer iteration");
        app.add_option("--max-outer", max_outer, "outer iteration budget");
    }

    DynamicsKind kind() const
    {
        return dynamics == "unicycle" ? DynamicsKind::unicycle : DynamicsKind::single_integrator;
    }

    ScenarioDoc load(const std::string& name) const
    {
        ScenarioDoc doc = resolve_scenario(name, kind());
        if (!dynamics.empty() && !is_builtin(name)) set_dynamics(doc, kind());
        apply(doc);
        return doc;
    }

    void apply(ScenarioDoc& doc) const
    {
        auto& s = doc.solver;
        if (seed) s.inner.seed = *seed;
        if (lambda0) s.lambda0 = *lambda0;
        if (eta_lambda) s.eta_lambda = *eta_lambda;
        if (eps_infeas) s.eps_infeas = *eps_infeas;
        if (gamma_inner) doc.smoothing.gamma_inner = *gamma_inner;
        if (gamma_outer) doc.smoothing.gamma_outer = *gamma_outer;
        if (block_rule) s.inner.rule = parse_block_rule(*block_rule);
        if (max_iters) s.inner.max_iters = *max_iters;
        if (max_outer) s.max_outer = *max_outer;
        doc.smoothing.validate();
        s.validate();
        doc.validate();
    }
};

std::string dynamics_label(const ScenarioDoc& doc)
{
    if (doc.agents.empty()) return "none";
    const auto k = doc.agents.front().kind;
    for (const auto& a : doc.agents)
        if (a.kind != k) return "mixed";
    return k == DynamicsKind::unicycle ? "unicycle" : "linear";
}

std::vector<std::string> agent_ids(const ScenarioDoc& doc)
{
    std::vector<std::string> ids;
    for (const auto& a : doc.agents) ids.push_back(a.id);
    return ids;
}

// Table rows reordered to the scenario's agent order.
Trajectory trajectory_for(const ScenarioDoc& doc, const TrajectoryTable& table)
{
    Trajectory x;
    for (const auto& a : doc.agents) {
        const auto it = std::find(table.agents.begin(), table.agents.end(), a.id);
        if (it == table.agents.end()) throw ArgumentError("table has no rows for agent '" + a.id + "'");
        x.states.push_back(table.x.states[static_cast<std::size_t>(it - table.agents.begin())]);
    }
    return x;
}

int run_solve(const std::string& scenario, const Overrides& ov, const std::string& out, bool plot)
{
    const ScenarioDoc doc = ov.load(scenario);
    const Problem problem = build_problem(doc);
    const SolveReport r = pm_solve(problem, doc.solver);

    std::filesystem::create_directories(out);
    const std::filesystem::path dir(out);
    write_file(dir / "report.txt", format_report(r, doc));
    write_file(dir / "trajectory.csv", format_table(r.x, r.u, agent_ids(doc)));
    if (plot) write_file(dir / "plot.svg", format_plot(doc, r.x));

    std::cout << "scenario " << doc.name << " dynamics " << dynamics_label(doc) << "\n"
              << "termination " << to_string(r.termination) << "\n"
              << "rho " << format_double(r.rho) << "\n"
              << "rho_smooth " << format_double(r.rho_smooth) << "\n"
              << "outer_iterations " << r.outer.size() << "\n"
              << "wall_seconds " << format_double(r.wall_seconds) << "\n";
    if (r.rho > 0.0) return ok;
    error_record("non_convergence", "no strictly satisfying solution found",
                 {{"rho", r.rho}, {"termination", to_string(r.termination)}});
    return guarantee_failed;
}

int run_check(const std::string& scenario, const std::string& table_path, const Overrides& ov)
{
    const ScenarioDoc doc = ov.load(scenario);
    const CliqueSpec spec = build_spec(doc);
    const Trajectory x = trajectory_for(doc, parse_table(read_file(table_path)));
    const auto rho_k = clique_robustness(spec, x, doc.until);
    const double rho = eval_robust(spec, x, doc.until);
    const auto smooth = smooth_robustness(spec, x, doc.smoothing, doc.until);
    const auto smooth_k = clique_values(smooth.tape);

    std::cout << "rho " << format_double(rho) << "\n"
              << "rho_smooth " << format_double(smooth.value) << "\n"
              << "satisfied " << (rho > 0.0 ? "true" : "false") << "\n"
              << "clique rho rho_smooth\n";
    for (std::size_t c = 0; c < rho_k.size(); ++c)
        std::cout << c << " " << format_double(rho_k[c]) << " " << format_double(smooth_k[c]) << "\n";
    return rho > 0.0 ? ok : guarantee_failed;
}

int run_plot(const std::string& scenario, const std::string& table_path, const Overrides& ov, const std::string& out)
{
    const ScenarioDoc doc = ov.load(scenario);
    const Trajectory x = trajectory_for(doc, parse_table(read_file(table_path)));
    const std::string svg = format_plot(doc, x);
    if (out == "-")
        std::cout << svg;
    else
        write_file(out, svg);
    return ok;
}

int run_bench(std::vector<std::string> scenarios, const Overrides& ov, std::vector<std::string> rules)
{
    if (scenarios.empty()) scenarios = builtin_names();
    if (rules.empty()) rules.push_back("");
    bool all = true;
    std::cout << "config scenario dynamics outer_iterations wall_seconds rho_x1e3 feasible\n";
    for (const auto& rule : rules) {
        for (const auto& name : scenarios) {
            ScenarioDoc doc = ov.load(name);
            if (!rule.empty()) doc.solver.inner.rule = parse_block_rule(rule);
            const SolveReport r = pm_solve(build_problem(doc), doc.solver);
            all = all && r.rho > 0.0;
            std::cout << to_string(doc.solver.inner.rule) << " " << doc.name << " " << dynamics_label(doc) << " "
                      << r.outer.size() << " " << format_double(std::round(r.wall_seconds * 100.0) / 100.0) << " "
                      << format_double(r.rho * 1e3) << " " << (r.rho > 0.0 ? "true" : "false") << std::endl;
        }
    }
    return all ? ok : guarantee_failed;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multi-agent STL planning with block-coordinate gradient descent"};
    app.require_subcommand(1);

    Overrides ov;
    std::string scenario, table, out = "mastl-out", plot_out = "plot.svg";
    bool plot = false;
    std::vector<std::string> bench_scenarios, bench_rules;

    auto* solve = app.add_subcommand("solve", "synthesize inputs for a scenario");
    solve->add_option("scenario", scenario, "built-in name or scenario file")->required();
    solve->add_option("--out,-o", out, "output directory");
    solve->add_flag("--plot", plot, "also write plot.svg");
    ov.add_to(*solve);

    auto* check = app.add_subcommand("check", "evaluate a trajectory table against a scenario");
    check->add_option("scenario", scenario)->required();
    check->add_option("table", table, "trajectory table")->required();
    ov.add_to(*check);

    auto* plotc = app.add_subcommand("plot", "render a trajectory table over a scenario's regions");
    plotc->add_option("scenario", scenario)->required();
    plotc->add_option("table", table, "trajectory table")->required();
    plotc->add_option("--out,-o", plot_out, "SVG path, '-' for stdout");
    ov.add_to(*plotc);

    auto* bench = app.add_subcommand("bench", "solve scenarios in sequence and tabulate runtime and robustness");
    bench->add_option("scenarios", bench_scenarios, "scenarios (default: all built-ins)");
    bench->add_option("--rules", bench_rules, "block rules to compare")->delimiter(',');
    ov.add_to(*bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        error_record("usage", e.what());
        return error;
    }

    try {
        if (*solve) return run_solve(scenario, ov, out, plot);
        if (*check) return run_check(scenario, table, ov);
        if (*plotc) return run_plot(scenario, table, ov, plot_out);
        if (*bench) return run_bench(bench_scenarios, ov, bench_rules);
    } catch (const ParseError& e) {
        error_record("parse_error", e.what(), {{"line", e.line()}, {"column", e.column()}});
    } catch (const ArgumentError& e) {
        error_record("invalid_argument", e.what());
    } catch (const SpecificationError& e) {
        error_record("specification_error", e.what());
    } catch (const LengthError& e) {
        error_record("length_error", e.what());
    } catch (const std::exception& e) {
        error_record("io_error", e.what());
    }
    return error;
}
