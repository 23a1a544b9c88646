#include <mastl/scenario.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace mastl {

namespace {

constexpr std::string_view kHeader = "mastl-scenario 1";

std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(std::string_view s)
{
    std::vector<std::string> out;
    std::istringstream is{std::string(s)};
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
}

double to_double(const std::string& s, int line)
{
    double v = 0.0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ParseError("expected a number, got '" + s + "'", line, 1);
    return v;
}

int to_int(const std::string& s, int line)
{
    int v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ParseError("expected an integer, got '" + s + "'", line, 1);
    return v;
}

bool to_bool(const std::string& s, int line)
{
    if (s == "true" || s == "1" || s == "on") return true;
    if (s == "false" || s == "0" || s == "off") return false;
    throw ParseError("expected true or false, got '" + s + "'", line, 1);
}

DynamicsKind dynamics_from(const std::string& s, int line)
{
    if (s == "single_integrator" || s == "linear") return DynamicsKind::single_integrator;
    if (s == "unicycle") return DynamicsKind::unicycle;
    throw ParseError("unknown dynamics '" + s + "'", line, 1);
}

AgentModel make_model(const AgentDecl& a)
{
    switch (a.kind) {
        case DynamicsKind::single_integrator:
            if (a.initial_state.size() != 2) throw ArgumentError("agent " + a.id + ": single integrator needs 2 states");
            return AgentModel::single_integrator(a.initial_state);
        case DynamicsKind::unicycle:
            if (a.initial_state.size() != 3) throw ArgumentError("agent " + a.id + ": unicycle needs 3 states");
            return AgentModel::unicycle(a.initial_state);
        case DynamicsKind::custom:
            break;
    }
    throw ArgumentError("agent " + a.id + ": custom dynamics cannot be declared in a scenario");
}

// Solver keys shared by the parser and the formatter.
void set_solver_key(PmConfig& c, const std::string& key, const std::vector<std::string>& v, int line)
{
    auto one = [&]() -> const std::string& {
        if (v.size() != 1) throw ParseError("solver key '" + key + "' takes one value", line, 1);
        return v[0];
    };
    if (key == "lambda0") c.lambda0 = to_double(one(), line);
    else if (key == "eta_lambda") c.eta_lambda = to_double(one(), line);
    else if (key == "max_outer") c.max_outer = to_int(one(), line);
    else if (key == "eps_infeas") c.eps_infeas = to_double(one(), line);
    else if (key == "eps0") c.eps0 = to_double(one(), line);
    else if (key == "eta_eps") c.eta_eps = to_double(one(), line);
    else if (key == "eps_floor") c.eps_floor = to_double(one(), line);
    else if (key == "robustness_margin") c.robustness_margin = to_double(one(), line);
    else if (key == "warm_start") c.warm_start = to_bool(one(), line);
    else if (key == "termination") {
        if (one() == "penalty_threshold") c.mode = PmConfig::Mode::penalty_threshold;
        else if (one() == "true_robustness_positive") c.mode = PmConfig::Mode::true_robustness_positive;
        else throw ParseError("unknown termination mode '" + one() + "'", line, 1);
    }
    else if (key == "sigma") c.inner.sigma = to_double(one(), line);
    else if (key == "gamma") c.inner.gamma = to_double(one(), line);
    else if (key == "epsilon") c.inner.epsilon = to_double(one(), line);
    else if (key == "max_iters") c.inner.max_iters = to_int(one(), line);
    else if (key == "max_halvings") c.inner.max_halvings = to_int(one(), line);
    else if (key == "hessian_scale") c.inner.hessian = HessianPolicy::scaled_identity(to_double(one(), line));
    else if (key == "seed") {
        std::uint64_t seed = 0;
        const auto& w = one();
        auto r = std::from_chars(w.data(), w.data() + w.size(), seed);
        if (r.ec != std::errc() || r.ptr != w.data() + w.size()) throw ParseError("expected a seed, got '" + w + "'", line, 1);
        c.inner.seed = seed;
    }
    else if (key == "block_rule") {
        if (v.empty() || v.size() > 2) throw ParseError("block_rule takes a rule and an optional count", line, 1);
        const int p = v.size() == 2 ? to_int(v[1], line) : 0;
        if (v[0] == "gauss_seidel") c.inner.rule = BlockRule::gauss_seidel(p);
        else if (v[0] == "gauss_southwell") c.inner.rule = BlockRule::gauss_southwell(p == 0 ? 1 : p);
        else throw ParseError("unknown block rule '" + v[0] + "'", line, 1);
    }
    else throw ParseError("unknown solver key '" + key + "'", line, 1);
}

std::string join_ids(const std::vector<std::string>& ids)
{
    std::string s;
    for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? ", " : "") + ids[i];
    return s;
}

} // namespace

// =======================================================================
// Document
// =======================================================================

SymbolTable ScenarioDoc::symbols() const
{
    SymbolTable t;
    for (const auto& a : agents) t.agents.push_back(a.id);
    for (const auto& r : regions) t.add_region(r);
    return t;
}

void ScenarioDoc::validate() const
{
    if (agents.empty()) throw SpecificationError("scenario has no agents");
    std::set<std::string> ids;
    for (const auto& a : agents) {
        if (a.id.empty()) throw SpecificationError("empty agent id");
        if (!ids.insert(a.id).second) throw SpecificationError("duplicate agent id " + a.id);
        make_model(a).validate();
    }
    std::set<std::string> names;
    for (const auto& r : regions)
        if (!names.insert(r.name).second) throw SpecificationError("duplicate region name " + r.name);
    if (tasks.empty()) throw SpecificationError("scenario has no tasks");
    for (const auto& t : tasks)
        for (const auto& id : t.clique)
            if (!ids.count(id)) throw SpecificationError("task on line " + std::to_string(t.line) + " names unknown agent " + id);
    if (horizon < 0) throw SpecificationError("negative horizon");
    if (!(input_weight > 0.0)) throw SpecificationError("input weight must be positive");
    smoothing.validate();
    solver.validate();
    build_spec(*this);
}

CliqueSpec build_spec(const ScenarioDoc& doc)
{
    const SymbolTable sym = doc.symbols();
    std::vector<Formula> conjuncts;
    std::vector<std::vector<int>> declared;
    for (const auto& t : doc.tasks) {
        conjuncts.push_back(parse_stl(t.source, sym, t.line));
        std::vector<int> nu;
        for (const auto& id : t.clique) {
            const int k = sym.agent_index(id);
            if (k < 0) throw SpecificationError("unknown agent " + id);
            nu.push_back(k);
        }
        declared.push_back(std::move(nu));
    }
    return make_clique_spec(conjuncts, declared);
}

Problem build_problem(const ScenarioDoc& doc)
{
    Problem p;
    for (const auto& a : doc.agents) p.agents.push_back(make_model(a));
    p.spec = build_spec(doc);
    p.smoothing = doc.smoothing;
    p.until = doc.until;
    p.horizon = doc.horizon > 0 ? doc.horizon : p.spec.horizon();
    for (const auto& m : p.agents)
        p.cost.agents.push_back({RunningCost::quadratic(doc.input_weight, m.input_dim), TerminalCost::zero()});
    p.validate();
    return p;
}

void set_dynamics(ScenarioDoc& doc, DynamicsKind kind)
{
    for (auto& a : doc.agents) {
        if (a.kind == kind) continue;
        Vector x0;
        if (kind == DynamicsKind::unicycle) {
            x0 = Vector::Zero(3);
            x0.head(2) = a.initial_state.head(2);
        } else if (kind == DynamicsKind::single_integrator) {
            x0 = a.initial_state.head(2);
        } else {
            throw ArgumentError("cannot switch a scenario to custom dynamics");
        }
        a.kind = kind;
        a.initial_state = std::move(x0);
    }
}

// =======================================================================
// Text form
// =======================================================================

ScenarioDoc parse_scenario(std::string_view text)
{
    ScenarioDoc doc;
    std::string section;
    bool header = false;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        const std::string_view line = trim(raw);
        if (line.empty()) continue;
        if (!header) {
            if (line != kHeader) throw ParseError("expected header '" + std::string(kHeader) + "'", line_no, 1);
            header = true;
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError("unterminated section header", line_no, 1);
            section = std::string(line.substr(1, line.size() - 2));
            static const std::set<std::string> known{"agents", "regions", "tasks", "smoothing", "cost", "solver"};
            if (!known.count(section)) throw ParseError("unknown section [" + section + "]", line_no, 1);
            continue;
        }
        if (section.empty()) {
            const auto w = split_ws(line);
            if (w.size() == 2 && w[0] == "name") {
                doc.name = w[1];
                continue;
            }
            throw ParseError("content outside a section", line_no, 1);
        }
        if (section == "tasks") {
            TaskDecl t;
            t.line = line_no;
            std::string_view rest = line;
            const int indent = static_cast<int>(raw.find_first_not_of(" \t"));
            int col0 = indent + 1;
            if (rest.front() == '{') {
                const auto close = rest.find('}');
                if (close == std::string_view::npos) throw ParseError("unterminated clique declaration", line_no, col0);
                std::string ids(rest.substr(1, close - 1));
                std::replace(ids.begin(), ids.end(), ',', ' ');
                t.clique = split_ws(ids);
                if (t.clique.empty()) throw ParseError("empty clique declaration", line_no, col0);
                col0 += static_cast<int>(close + 1);
                rest = rest.substr(close + 1);
            }
            // Keep columns meaningful for formula errors.
            t.source = std::string(static_cast<std::size_t>(col0 - 1), ' ') + std::string(rest);
            doc.tasks.push_back(std::move(t));
            continue;
        }
        const auto w = split_ws(line);
        if (section == "agents") {
            if (w.size() < 3) throw ParseError("agent line needs: id dynamics state...", line_no, 1);
            AgentDecl a;
            a.id = w[0];
            a.kind = dynamics_from(w[1], line_no);
            a.initial_state.resize(static_cast<Eigen::Index>(w.size() - 2));
            for (std::size_t k = 2; k < w.size(); ++k) a.initial_state(k - 2) = to_double(w[k], line_no);
            doc.agents.push_back(std::move(a));
        } else if (section == "regions") {
            if (w.size() < 2) throw ParseError("region line needs: name kind values...", line_no, 1);
            try {
                if (w[1] == "box") {
                    if (w.size() != 6) throw ParseError("box needs xmin xmax ymin ymax", line_no, 1);
                    doc.regions.push_back(Region::make_box(w[0], to_double(w[2], line_no), to_double(w[3], line_no),
                                                           to_double(w[4], line_no), to_double(w[5], line_no)));
                } else if (w[1] == "halfspaces") {
                    std::vector<Eigen::Vector3d> hs;
                    std::vector<double> cur;
                    for (std::size_t k = 2; k <= w.size(); ++k) {
                        if (k == w.size() || w[k] == ";") {
                            if (cur.size() != 3) throw ParseError("half-space needs a0 a1 b", line_no, 1);
                            hs.emplace_back(cur[0], cur[1], cur[2]);
                            cur.clear();
                        } else {
                            cur.push_back(to_double(w[k], line_no));
                        }
                    }
                    doc.regions.push_back(Region::make_polytope(w[0], std::move(hs)));
                } else {
                    throw ParseError("unknown region kind '" + w[1] + "'", line_no, 1);
                }
            } catch (const ArgumentError& e) {
                throw ParseError(e.what(), line_no, 1);
            }
        } else if (section == "smoothing") {
            if (w.size() != 2) throw ParseError("smoothing line needs: key value", line_no, 1);
            if (w[0] == "gamma_inner") doc.smoothing.gamma_inner = to_double(w[1], line_no);
            else if (w[0] == "gamma_outer") doc.smoothing.gamma_outer = to_double(w[1], line_no);
            else if (w[0] == "until") {
                if (w[1] == "as_printed") doc.until = UntilConvention::as_printed;
                else if (w[1] == "classical") doc.until = UntilConvention::classical;
                else throw ParseError("unknown until convention '" + w[1] + "'", line_no, 1);
            } else throw ParseError("unknown smoothing key '" + w[0] + "'", line_no, 1);
        } else if (section == "cost") {
            if (w.size() != 2) throw ParseError("cost line needs: key value", line_no, 1);
            if (w[0] == "horizon") doc.horizon = to_int(w[1], line_no);
            else if (w[0] == "input_weight") doc.input_weight = to_double(w[1], line_no);
            else throw ParseError("unknown cost key '" + w[0] + "'", line_no, 1);
        } else if (section == "solver") {
            if (w.empty()) continue;
            set_solver_key(doc.solver, w[0], {w.begin() + 1, w.end()}, line_no);
        }
    }
    if (!header) throw ParseError("empty scenario", 1, 1);
    return doc;
}

std::string format_scenario(const ScenarioDoc& doc)
{
    std::ostringstream os;
    os << kHeader << '\n';
    if (!doc.name.empty()) os << "name " << doc.name << '\n';
    os << "\n[agents]\n";
    for (const auto& a : doc.agents) {
        os << a.id << ' ' << to_string(a.kind);
        for (Eigen::Index k = 0; k < a.initial_state.size(); ++k) os << ' ' << format_double(a.initial_state(k));
        os << '\n';
    }
    os << "\n[regions]\n";
    for (const auto& r : doc.regions) {
        if (r.is_box) {
            os << r.name << " box";
            for (int k = 0; k < 4; ++k) os << ' ' << format_double(r.box(k));
        } else {
            os << r.name << " halfspaces";
            for (std::size_t k = 0; k < r.halfspaces.size(); ++k) {
                if (k) os << " ;";
                for (int c = 0; c < 3; ++c) os << ' ' << format_double(r.halfspaces[k](c));
            }
        }
        os << '\n';
    }
    os << "\n[tasks]\n";
    for (const auto& t : doc.tasks) {
        if (!t.clique.empty()) os << '{' << join_ids(t.clique) << "} ";
        os << trim(t.source) << '\n';
    }
    os << "\n[smoothing]\n"
       << "gamma_inner " << format_double(doc.smoothing.gamma_inner) << '\n'
       << "gamma_outer " << format_double(doc.smoothing.gamma_outer) << '\n'
       << "until " << (doc.until == UntilConvention::as_printed ? "as_printed" : "classical") << '\n';
    os << "\n[cost]\n"
       << "horizon " << doc.horizon << '\n'
       << "input_weight " << format_double(doc.input_weight) << '\n';
    const auto& s = doc.solver;
    os << "\n[solver]\n"
       << "lambda0 " << format_double(s.lambda0) << '\n'
       << "eta_lambda " << format_double(s.eta_lambda) << '\n'
       << "max_outer " << s.max_outer << '\n'
       << "eps_infeas " << format_double(s.eps_infeas) << '\n'
       << "eps0 " << format_double(s.eps0) << '\n'
       << "eta_eps " << format_double(s.eta_eps) << '\n'
       << "eps_floor " << format_double(s.eps_floor) << '\n'
       << "termination "
       << (s.mode == PmConfig::Mode::penalty_threshold ? "penalty_threshold" : "true_robustness_positive") << '\n'
       << "robustness_margin " << format_double(s.robustness_margin) << '\n'
       << "warm_start " << (s.warm_start ? "true" : "false") << '\n'
       << "sigma " << format_double(s.inner.sigma) << '\n'
       << "gamma " << format_double(s.inner.gamma) << '\n'
       << "epsilon " << format_double(s.inner.epsilon) << '\n'
       << "max_iters " << s.inner.max_iters << '\n'
       << "max_halvings " << s.inner.max_halvings << '\n';
    if (s.inner.hessian.kind == HessianPolicy::Kind::scaled_identity)
        os << "hessian_scale " << format_double(s.inner.hessian.h) << '\n';
    os << "block_rule "
       << (s.inner.rule.kind == BlockRule::Kind::gauss_southwell ? "gauss_southwell " : "gauss_seidel ")
       << s.inner.rule.parameter << '\n'
       << "seed " << s.inner.seed << '\n';
    return os.str();
}

ScenarioDoc load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open scenario file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

void save_scenario(const ScenarioDoc& doc, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write scenario file " + path.string());
    out << format_scenario(doc);
    if (!out) throw std::runtime_error("failed writing scenario file " + path.string());
}

// =======================================================================
// Built-ins
// =======================================================================

namespace {

constexpr int kAgents = 10;
constexpr double kMeetRadius = 0.25;
constexpr double kCollisionMargin = 0.01;

std::string agent_id(int i) { return std::to_string(i + 1); }

ScenarioDoc base_layout(DynamicsKind dynamics)
{
    ScenarioDoc doc;
    for (int i = 0; i < kAgents; ++i) {
        AgentDecl a;
        a.id = agent_id(i);
        a.kind = DynamicsKind::single_integrator;
        a.initial_state = Eigen::Vector2d(0.5, 0.5 + i);
        doc.agents.push_back(std::move(a));
    }
    set_dynamics(doc, dynamics);

    // Collection column left, delivery column right, obstacles in between. Boxes of
    // neighbouring agents overlap so meeting partners can share a region.
    for (int i = 0; i < kAgents; ++i) {
        const double y = 0.5 + i;
        doc.regions.push_back(Region::make_box("C" + agent_id(i), 1.75, 3.25, y - 1.25, y + 1.25));
    }
    for (int i = 0; i < kAgents; ++i) {
        const double y = 0.5 + i;
        doc.regions.push_back(Region::make_box("D" + agent_id(i), 7.75, 9.25, y - 1.25, y + 1.25));
    }
    const double oy[3] = {2.0, 5.0, 8.0};
    for (int l = 0; l < 3; ++l)
        doc.regions.push_back(Region::make_box("O" + std::to_string(l + 1), 5.25, 5.75, oy[l] - 0.25, oy[l] + 0.25));

    doc.horizon = 100;
    doc.solver.inner.max_iters = 2000;
    return doc;
}

std::string avoid(const std::string& id)
{
    return "G[0,100] (not in(" + id + ", O1) and not in(" + id + ", O2) and not in(" + id + ", O3))";
}

std::vector<std::vector<int>> meet_cliques()
{
    std::vector<std::vector<int>> out;
    for (int i = 0; i + 1 < kAgents; ++i) out.push_back({i, i + 1});
    out.push_back({0, 1, 2});
    out.push_back({7, 8, 9});
    return out;
}

void add_meet_tasks(ScenarioDoc& doc)
{
    for (const auto& nu : meet_cliques()) {
        std::vector<std::string> ids;
        for (int i : nu) ids.push_back(agent_id(i));
        doc.tasks.push_back({ids, "F[0,70] meet({" + join_ids(ids) + "}, " + format_double(kMeetRadius) + ")",
                             static_cast<int>(doc.tasks.size()) + 1});
    }
}

void add_collision_task(ScenarioDoc& doc)
{
    std::string body;
    std::vector<std::string> all;
    for (int i = 0; i < kAgents; ++i) {
        all.push_back(agent_id(i));
        for (int j = i + 1; j < kAgents; ++j) {
            if (!body.empty()) body += " and ";
            body += "dist(" + agent_id(i) + ", " + agent_id(j) + ") >= " + format_double(kCollisionMargin);
        }
    }
    doc.tasks.push_back({all, "G[0,100] (" + body + ")", static_cast<int>(doc.tasks.size()) + 1});
}

} // namespace

std::vector<std::string> builtin_names() { return {"r2am", "r2amca", "ruramca"}; }

bool is_builtin(std::string_view name)
{
    const auto names = builtin_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

ScenarioDoc builtin_scenario(std::string_view name, DynamicsKind dynamics)
{
    if (!is_builtin(name)) throw ArgumentError("unknown built-in scenario '" + std::string(name) + "'");
    ScenarioDoc doc = base_layout(dynamics);
    doc.name = std::string(name);
    const bool until = name == "ruramca";
    for (int i = 0; i < kAgents; ++i) {
        const std::string id = agent_id(i);
        const std::string C = "in(" + id + ", C" + id + ")";
        const std::string D = "in(" + id + ", D" + id + ")";
        std::string src = avoid(id) + " and ";
        if (until)
            src += "((F[10,50] " + C + ") U[0,50] (F[10,50] " + D + "))";
        else
            src += "F[10,50] " + C + " and F[70,100] " + D;
        doc.tasks.push_back({{id}, src, static_cast<int>(doc.tasks.size()) + 1});
    }
    add_meet_tasks(doc);
    if (name != "r2am") add_collision_task(doc);
    return doc;
}

ScenarioDoc resolve_scenario(std::string_view name_or_path, DynamicsKind dynamics)
{
    if (is_builtin(name_or_path)) return builtin_scenario(name_or_path, dynamics);
    return load_scenario(std::filesystem::path(std::string(name_or_path)));
}

} // namespace mastl
