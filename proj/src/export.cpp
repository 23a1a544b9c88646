#include <mastl/export.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <sstream>

namespace mastl {

namespace {

std::string fmt(double v) { return format_double(v); }

std::string agent_list(const std::vector<int>& agents, const std::vector<std::string>& ids)
{
    std::string s = "{";
    for (std::size_t i = 0; i < agents.size(); ++i) {
        if (i) s += ",";
        const int a = agents[i];
        s += a < static_cast<int>(ids.size()) ? ids[a] : std::to_string(a);
    }
    return s + "}";
}

std::vector<std::string_view> split(std::string_view line, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto p = line.find(sep, start);
        out.push_back(line.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
        if (p == std::string_view::npos) break;
        start = p + 1;
    }
    return out;
}

double parse_number(std::string_view s, int line, int col)
{
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw ParseError("expected a number, got '" + std::string(s) + "'", line, col);
    return v;
}

using P2 = std::array<double, 2>;

// Clips a convex polygon against a0 x + a1 y + b >= 0.
std::vector<P2> clip(const std::vector<P2>& poly, const Eigen::Vector3d& h)
{
    std::vector<P2> out;
    const auto side = [&](const P2& p) { return h(0) * p[0] + h(1) * p[1] + h(2); };
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const P2& a = poly[i];
        const P2& b = poly[(i + 1) % poly.size()];
        const double sa = side(a), sb = side(b);
        if (sa >= 0) out.push_back(a);
        if ((sa >= 0) != (sb >= 0)) {
            const double s = sa / (sa - sb);
            out.push_back({a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])});
        }
    }
    return out;
}

std::vector<P2> region_polygon(const Region& r, const Eigen::Vector4d& frame)
{
    if (r.is_box) {
        const auto& b = r.box;
        return {P2{b(0), b(2)}, P2{b(1), b(2)}, P2{b(1), b(3)}, P2{b(0), b(3)}};
    }
    std::vector<P2> poly{P2{frame(0), frame(2)}, P2{frame(1), frame(2)}, P2{frame(1), frame(3)},
                         P2{frame(0), frame(3)}};
    for (const auto& h : r.halfspaces) {
        poly = clip(poly, h);
        if (poly.empty()) break;
    }
    return poly;
}

constexpr std::array<const char*, 10> kPalette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                               "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

} // namespace

// =======================================================================
// Report
// =======================================================================

std::string format_report(const SolveReport& r, const ScenarioDoc& doc, bool include_wall)
{
    std::ostringstream os;
    os << "mastl-report 1\n";
    os << "scenario " << (doc.name.empty() ? "-" : doc.name) << "\n";
    os << "termination " << to_string(r.termination) << "\n";
    os << "feasible " << (r.feasible ? "true" : "false") << "\n";
    os << "rho " << fmt(r.rho) << "\n";
    os << "rho_smooth " << fmt(r.rho_smooth) << "\n";
    os << "penalty " << fmt(r.R) << "\n";
    os << "cost " << fmt(r.cost) << "\n";
    os << "best_outer " << r.best_outer << "\n";
    os << "returned_initial_guess " << (r.returned_initial_guess ? "true" : "false") << "\n";
    os << "final_eps_infeas " << fmt(r.final_eps_infeas) << "\n";
    os << "outer_iterations " << r.outer.size() << "\n";
    if (include_wall) os << "wall_seconds " << fmt(r.wall_seconds) << "\n";

    const auto spec = build_spec(doc);
    std::vector<std::string> ids;
    for (const auto& a : doc.agents) ids.push_back(a.id);
    os << "\n[cliques]\nindex agents rho rho_smooth\n";
    for (std::size_t c = 0; c < r.clique_rho.size(); ++c) {
        os << c << " " << (c < spec.cliques.size() ? agent_list(spec.cliques[c].agents, ids) : "{}") << " "
           << fmt(r.clique_rho[c]) << " "
           << (c < r.clique_rho_smooth.size() ? fmt(r.clique_rho_smooth[c]) : "nan") << "\n";
    }

    os << "\n[outer]\nk lambda eps inner_tolerance eps_infeas inner_iterations inner_termination grad_norm F L R "
          "rho_smooth rho\n";
    for (const auto& o : r.outer) {
        os << o.k << " " << fmt(o.lambda) << " " << fmt(o.eps) << " " << fmt(o.inner_tolerance) << " "
           << fmt(o.eps_infeas) << " " << o.inner_iterations << " " << to_string(o.inner_termination) << " "
           << fmt(o.grad_norm) << " " << fmt(o.F) << " " << fmt(o.L) << " " << fmt(o.R) << " "
           << fmt(o.rho_smooth) << " " << fmt(o.rho) << "\n";
    }
    if (include_wall)
        for (const auto& o : r.outer) os << "wall_outer " << o.k << " " << fmt(o.wall_seconds) << "\n";
    return os.str();
}

// =======================================================================
// Table
// =======================================================================

std::string format_table(const Trajectory& x, const ControlSequence& u, const std::vector<std::string>& ids)
{
    const int na = x.num_agents();
    if (na > 0 && u.layout.num_agents() != 0 && u.layout.num_agents() != na)
        throw ArgumentError("table: trajectory and inputs disagree on the number of agents");
    if (static_cast<int>(ids.size()) != na) throw ArgumentError("table: one id per agent required");

    int n = 0, m = 0;
    for (int i = 0; i < na; ++i) n = std::max(n, static_cast<int>(x.states[i].rows()));
    for (int i = 0; i < u.layout.num_agents(); ++i) m = std::max(m, u.layout.input_dim(i));

    std::string out = "agent,t";
    for (int k = 0; k < n; ++k) out += ",x" + std::to_string(k);
    for (int k = 0; k < m; ++k) out += ",u" + std::to_string(k);
    out += "\n";

    const int N = x.horizon();
    for (int i = 0; i < na; ++i) {
        const Matrix& s = x.states[i];
        const int ni = static_cast<int>(s.rows());
        const int mi = u.layout.num_agents() ? u.layout.input_dim(i) : 0;
        for (int t = 0; t <= N; ++t) {
            out += ids[i];
            out += ",";
            out += std::to_string(t);
            for (int k = 0; k < n; ++k) {
                out += ",";
                if (k < ni) out += fmt(s(k, t));
            }
            for (int k = 0; k < m; ++k) {
                out += ",";
                if (k < mi && t < N && t < u.horizon()) out += fmt(u.at(i, t)(k));
            }
            out += "\n";
        }
    }
    return out;
}

TrajectoryTable parse_table(std::string_view text)
{
    std::vector<std::string_view> lines;
    for (auto&& l : split(text, '\n')) {
        if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
        lines.push_back(l);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw ParseError("table: missing header", 1, 1);

    const auto header = split(lines[0], ',');
    if (header.size() < 2 || header[0] != "agent" || header[1] != "t")
        throw ParseError("table: header must start with agent,t", 1, 1);
    int n = 0, m = 0;
    for (std::size_t c = 2; c < header.size(); ++c) {
        const auto h = header[c];
        const std::string expect_x = "x" + std::to_string(n), expect_u = "u" + std::to_string(m);
        if (m == 0 && h == expect_x)
            ++n;
        else if (h == expect_u)
            ++m;
        else
            throw ParseError("table: unexpected column '" + std::string(h) + "'", 1, static_cast<int>(c) + 1);
    }

    struct Rows {
        std::vector<std::vector<double>> x, u;
        int nx = -1, nu = -1;
    };
    std::vector<std::string> order;
    std::map<std::string, Rows> rows;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const int line = static_cast<int>(li) + 1;
        const auto f = split(lines[li], ',');
        if (f.size() != header.size())
            throw ParseError("table: expected " + std::to_string(header.size()) + " fields", line, 1);
        const std::string id(f[0]);
        if (id.empty()) throw ParseError("table: empty agent id", line, 1);
        auto it = rows.find(id);
        if (it == rows.end()) {
            order.push_back(id);
            it = rows.emplace(id, Rows{}).first;
        } else if (order.back() != id) {
            throw ParseError("table: rows of agent '" + id + "' are not contiguous", line, 1);
        }
        Rows& r = it->second;
        const double tv = parse_number(f[1], line, 2);
        if (tv != static_cast<double>(r.x.size())) throw ParseError("table: time steps must count up from 0", line, 2);

        const auto read_group = [&](int first, int count, int& width, std::vector<std::vector<double>>& dst,
                                    bool allow_empty_row) {
            std::vector<double> vals;
            int k = 0;
            for (; k < count && !f[first + k].empty(); ++k) vals.push_back(parse_number(f[first + k], line, first + k + 1));
            for (int j = k; j < count; ++j)
                if (!f[first + j].empty()) throw ParseError("table: gap inside a row", line, first + j + 1);
            if (vals.empty() && allow_empty_row) return false;
            if (width < 0) width = k;
            if (k != width) throw ParseError("table: inconsistent number of components", line, first + 1);
            dst.push_back(std::move(vals));
            return true;
        };
        read_group(2, n, r.nx, r.x, false);
        if (m > 0) {
            const bool had = read_group(2 + n, m, r.nu, r.u, true);
            if (had && r.u.size() != r.x.size()) throw ParseError("table: input missing at an earlier step", line, 3 + n);
        }
    }

    TrajectoryTable out;
    out.agents = order;
    int steps = -1;
    for (const auto& id : order) {
        const Rows& r = rows.at(id);
        const int T = static_cast<int>(r.x.size());
        if (steps >= 0 && T != steps) throw ParseError("table: agents have different horizons", 1, 1);
        steps = T;
        Matrix s(std::max(r.nx, 0), T);
        for (int t = 0; t < T; ++t)
            for (int k = 0; k < r.nx; ++k) s(k, t) = r.x[t][k];
        out.x.states.push_back(std::move(s));
        if (!r.u.empty()) {
            if (static_cast<int>(r.u.size()) != T - 1)
                throw ParseError("table: agent '" + id + "' needs inputs at t = 0..N-1", 1, 1);
            Matrix ui(r.nu, T - 1);
            for (int t = 0; t < T - 1; ++t)
                for (int k = 0; k < r.nu; ++k) ui(k, t) = r.u[t][k];
            out.inputs.push_back(std::move(ui));
        } else {
            out.inputs.emplace_back();
        }
    }
    if (std::all_of(out.inputs.begin(), out.inputs.end(), [](const Matrix& mtx) { return mtx.size() == 0; }))
        out.inputs.clear();
    return out;
}

ControlSequence table_inputs(const TrajectoryTable& table)
{
    if (table.inputs.size() != table.x.states.size() || table.inputs.empty())
        throw ArgumentError("table has no inputs");
    const int N = table.x.horizon();
    std::vector<int> dims;
    for (const auto& m : table.inputs) {
        if (m.cols() != N) throw ArgumentError("table inputs do not cover the horizon");
        dims.push_back(static_cast<int>(m.rows()));
    }
    ControlSequence u(InputLayout(dims, N));
    for (int i = 0; i < static_cast<int>(dims.size()); ++i)
        for (int t = 0; t < N; ++t) u.at(i, t) = table.inputs[i].col(t);
    return u;
}

// =======================================================================
// Plot
// =======================================================================

std::string format_plot(const ScenarioDoc& doc, const Trajectory& x)
{
    // Frame: the unit workspace grown to cover boxes and trajectories.
    Eigen::Vector4d frame(0.0, 10.0, 0.0, 10.0);
    const auto grow = [&](double px, double py) {
        if (!std::isfinite(px) || !std::isfinite(py)) return;
        frame(0) = std::min(frame(0), px);
        frame(1) = std::max(frame(1), px);
        frame(2) = std::min(frame(2), py);
        frame(3) = std::max(frame(3), py);
    };
    for (const auto& r : doc.regions)
        if (r.is_box) {
            grow(r.box(0), r.box(2));
            grow(r.box(1), r.box(3));
        }
    for (const auto& s : x.states)
        if (s.rows() >= 2)
            for (Eigen::Index t = 0; t < s.cols(); ++t) grow(s(0, t), s(1, t));

    const double scale = 60.0;
    const double w = (frame(1) - frame(0)) * scale, h = (frame(3) - frame(2)) * scale;
    const auto px = [&](double v) { return fmt(std::round((v - frame(0)) * scale * 100.0) / 100.0); };
    const auto py = [&](double v) { return fmt(std::round((frame(3) - v) * scale * 100.0) / 100.0); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w) << "\" height=\"" << fmt(h)
       << "\" viewBox=\"0 0 " << fmt(w) << " " << fmt(h) << "\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << fmt(w) << "\" height=\"" << fmt(h)
       << "\" fill=\"white\" stroke=\"black\"/>\n";

    for (const auto& r : doc.regions) {
        const auto poly = region_polygon(r, frame);
        if (poly.empty()) continue;
        const bool obstacle = !r.name.empty() && r.name[0] == 'O';
        os << "<polygon class=\"region\" data-name=\"" << r.name << "\" points=\"";
        for (std::size_t i = 0; i < poly.size(); ++i) os << (i ? " " : "") << px(poly[i][0]) << "," << py(poly[i][1]);
        os << "\" fill=\"" << (obstacle ? "#808080" : "#cfe3f3") << "\" fill-opacity=\"0.6\" stroke=\"black\"/>\n";
        double cx = 0, cy = 0;
        for (const auto& p : poly) {
            cx += p[0];
            cy += p[1];
        }
        cx /= static_cast<double>(poly.size());
        cy /= static_cast<double>(poly.size());
        os << "<text x=\"" << px(cx) << "\" y=\"" << py(cy) << "\" font-size=\"10\" text-anchor=\"middle\">" << r.name
           << "</text>\n";
    }

    for (int i = 0; i < x.num_agents(); ++i) {
        const Matrix& s = x.states[i];
        if (s.rows() < 2 || s.cols() == 0) continue;
        const char* color = kPalette[static_cast<std::size_t>(i) % kPalette.size()];
        os << "<polyline class=\"trajectory\" data-agent=\"" << (i < static_cast<int>(doc.agents.size()) ? doc.agents[i].id : std::to_string(i))
           << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (Eigen::Index t = 0; t < s.cols(); ++t) os << (t ? " " : "") << px(s(0, t)) << "," << py(s(1, t));
        os << "\"/>\n";
    }
    for (int i = 0; i < x.num_agents(); ++i) {
        const Matrix& s = x.states[i];
        if (s.rows() < 2 || s.cols() == 0) continue;
        const double half = 4.0;
        os << "<rect class=\"start\" x=\"" << fmt(std::round(((s(0, 0) - frame(0)) * scale - half) * 100.0) / 100.0)
           << "\" y=\"" << fmt(std::round(((frame(3) - s(1, 0)) * scale - half) * 100.0) / 100.0)
           << "\" width=\"8\" height=\"8\" fill=\"" << kPalette[static_cast<std::size_t>(i) % kPalette.size()]
           << "\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

// =======================================================================
// Files
// =======================================================================

void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    os << text;
    os.close();
    if (!os) throw std::runtime_error("write to '" + path.string() + "' failed");
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

} // namespace mastl
