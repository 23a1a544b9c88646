#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include <mastl/formula.hpp>

namespace mastl {

/*
 * Planar region as a conjunction of half-spaces a0 p0 + a1 p1 + b >= 0 over
 * an agent's position. Boxes keep their bounds for plotting.
 */
struct Region {
    std::string name;
    std::vector<Eigen::Vector3d> halfspaces; // (a0, a1, b)
    bool is_box = false;
    Eigen::Vector4d box = Eigen::Vector4d::Zero(); // xmin, xmax, ymin, ymax

    static Region make_box(std::string name, double xmin, double xmax, double ymin, double ymax);
    static Region make_polytope(std::string name, std::vector<Eigen::Vector3d> halfspaces);

    bool contains(double px, double py) const;
};

/*
 * Names visible to the STL parser. Agents are referred to by name and map to
 * their position in `agents`; with no agent names, nonnegative integers are
 * taken as agent indices directly.
 */
struct SymbolTable {
    std::vector<std::string> agents;
    std::map<std::string, Region, std::less<>> regions;

    int agent_index(std::string_view name) const; // -1 if unknown
    std::string agent_name(int index) const;
    void add_region(Region r);
};

/*
 * Grammar (lowest precedence first):
 *
 *   formula  := conj ('or' conj)*
 *   conj     := until ('and' until)*
 *   until    := unary ('U' interval unary)?
 *   unary    := 'not' unary | 'G' interval unary | 'F' interval unary | atom
 *   atom     := '(' formula ')' | 'true' | 'in(' agent ',' region ')'
 *             | 'meet(' '{' agent (',' agent)* '}' ',' number ')'
 *             | 'dist(' agent ',' agent ')' ('>=' | '<=') number
 *             | 'ball(' number ',' '[' ref (',' ref)* ']' ',' matrix ',' vector ')'
 *             | linexpr ('>=' | '<=') linexpr
 *   linexpr  := term (('+' | '-') term)*
 *   term     := number ('*' ref)? | ref
 *   ref      := 'x(' agent ',' integer ')'
 *   interval := '[' integer ',' integer ']'
 *
 * A chain of 'and' (or 'or') at one level becomes one n-ary node;
 * parentheses nest. The result is normalized to positive normal form.
 */
Formula parse_stl(std::string_view src, const SymbolTable& symbols = {}, int line = 1);
RawFormula parse_stl_raw(std::string_view src, const SymbolTable& symbols = {}, int line = 1);

// Fully parenthesized source that parses back to an equal formula.
std::string pretty_print(const Formula& f, const SymbolTable& symbols = {});
std::string pretty_print(const Predicate& p, const SymbolTable& symbols = {});

// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

} // namespace mastl
