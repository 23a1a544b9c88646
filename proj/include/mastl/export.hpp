#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <mastl/penalty_method.hpp>
#include <mastl/scenario.hpp>

namespace mastl {

/*
 * Structured text report: "key value" lines, then per-clique and per-outer
 * iteration tables. Every wall-clock field sits on a line starting with
 * "wall", so dropping those lines gives a seed-deterministic document.
 */
std::string format_report(const SolveReport& report, const ScenarioDoc& doc, bool include_wall = true);

/*
 * Delimited table, one row per (agent, t):
 *   agent,t,x0,...,x{n-1},u0,...,u{m-1}
 * n and m are the largest state and input sizes; absent entries (smaller
 * agents, the input at t = N) are left empty. Numbers use the shortest
 * round-trip form, so reading the table back is bit-exact.
 */
std::string format_table(const Trajectory& x, const ControlSequence& u, const std::vector<std::string>& agent_ids);

struct TrajectoryTable {
    std::vector<std::string> agents;
    Trajectory x;
    std::vector<Matrix> inputs; // m_i x N per agent; empty when the table has no inputs
};

// Throws ParseError on malformed rows.
TrajectoryTable parse_table(std::string_view text);

// Inputs restacked into a ControlSequence; throws ArgumentError if missing.
ControlSequence table_inputs(const TrajectoryTable& table);

/*
 * SVG of the workspace: one outlined polygon per region, one polyline per
 * agent (first two state components) and a square at every start position.
 */
std::string format_plot(const ScenarioDoc& doc, const Trajectory& x);

// Writes text to a file; throws std::runtime_error on I/O failure.
void write_file(const std::filesystem::path& path, const std::string& text);
std::string read_file(const std::filesystem::path& path);

} // namespace mastl
