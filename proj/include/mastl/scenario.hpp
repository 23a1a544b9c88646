#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <mastl/parser.hpp>
#include <mastl/penalty_method.hpp>

namespace mastl {

struct AgentDecl {
    std::string id;
    DynamicsKind kind = DynamicsKind::single_integrator;
    Vector initial_state;
};

// One clique: an STL source over the declared agents (empty: inferred).
struct TaskDecl {
    std::vector<std::string> clique;
    std::string source;
    int line = 1; // source line, for error messages
};

/*
 * Scenario document. Text form:
 *
 *   mastl-scenario 1
 *   name r2am
 *   [agents]
 *   <id> <single_integrator|unicycle> <initial state...>
 *   [regions]
 *   <name> box <xmin> <xmax> <ymin> <ymax>
 *   <name> halfspaces <a0> <a1> <b> [; <a0> <a1> <b>]...
 *   [tasks]
 *   [{id, id, ...}] <formula>
 *   [smoothing]
 *   gamma_inner <v> | gamma_outer <v> | until <as_printed|classical>
 *   [cost]
 *   horizon <N> | input_weight <w>
 *   [solver]
 *   <key> <value>
 *
 * '#' starts a comment. Section and key order inside a section is free.
 */
struct ScenarioDoc {
    std::string name;
    std::vector<AgentDecl> agents;
    std::vector<Region> regions;
    std::vector<TaskDecl> tasks;
    SmoothingConfig smoothing;
    UntilConvention until = UntilConvention::as_printed;
    int horizon = 0; // 0: the formula horizon
    double input_weight = 1.0;
    PmConfig solver;

    SymbolTable symbols() const;
    // Unique ids and region names, known references, valid configs.
    void validate() const;
};

// Problem with one clique per task, l_i = w |u_i|^2 and no terminal cost.
Problem build_problem(const ScenarioDoc& doc);
CliqueSpec build_spec(const ScenarioDoc& doc);

ScenarioDoc parse_scenario(std::string_view text);
std::string format_scenario(const ScenarioDoc& doc);
ScenarioDoc load_scenario(const std::filesystem::path& path);
void save_scenario(const ScenarioDoc& doc, const std::filesystem::path& path);

/*
 * Built-in benchmarks on a [0,10]^2 workspace with ten agents:
 *   r2am    - avoid obstacles, visit C_i then D_i, meet in 11 cliques
 *   r2amca  - r2am plus pairwise collision avoidance over all agents
 *   ruramca - r2amca with the two visits linked by Until
 * `dynamics` selects single integrators or unicycles for every agent.
 */
ScenarioDoc builtin_scenario(std::string_view name, DynamicsKind dynamics = DynamicsKind::single_integrator);
std::vector<std::string> builtin_names();
bool is_builtin(std::string_view name);

// Built-in name or a path to a scenario file.
ScenarioDoc resolve_scenario(std::string_view name_or_path, DynamicsKind dynamics = DynamicsKind::single_integrator);

// Replaces every agent's dynamics, keeping planar positions.
void set_dynamics(ScenarioDoc& doc, DynamicsKind kind);

} // namespace mastl
