#include <mastl/parser.hpp>

#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>

namespace mastl {

// =======================================================================
// Regions and symbols
// =======================================================================

Region Region::make_box(std::string name, double xmin, double xmax, double ymin, double ymax)
{
    if (!(xmin < xmax && ymin < ymax)) throw ArgumentError("region " + name + ": empty box");
    Region r;
    r.name = std::move(name);
    r.halfspaces = {{1, 0, -xmin}, {-1, 0, xmax}, {0, 1, -ymin}, {0, -1, ymax}};
    r.is_box = true;
    r.box << xmin, xmax, ymin, ymax;
    return r;
}

Region Region::make_polytope(std::string name, std::vector<Eigen::Vector3d> halfspaces)
{
    if (halfspaces.empty()) throw ArgumentError("region " + name + ": no half-spaces");
    for (const auto& h : halfspaces)
        if (h(0) == 0.0 && h(1) == 0.0) throw ArgumentError("region " + name + ": degenerate half-space");
    Region r;
    r.name = std::move(name);
    r.halfspaces = std::move(halfspaces);
    return r;
}

bool Region::contains(double px, double py) const
{
    for (const auto& h : halfspaces)
        if (h(0) * px + h(1) * py + h(2) < 0.0) return false;
    return true;
}

int SymbolTable::agent_index(std::string_view name) const
{
    if (agents.empty()) {
        int v = -1;
        auto r = std::from_chars(name.data(), name.data() + name.size(), v);
        if (r.ec != std::errc() || r.ptr != name.data() + name.size() || v < 0) return -1;
        return v;
    }
    for (std::size_t i = 0; i < agents.size(); ++i)
        if (agents[i] == name) return static_cast<int>(i);
    return -1;
}

std::string SymbolTable::agent_name(int index) const
{
    if (agents.empty()) return std::to_string(index);
    return agents.at(index);
}

void SymbolTable::add_region(Region r)
{
    const std::string key = r.name;
    if (!regions.emplace(key, std::move(r)).second) throw ArgumentError("duplicate region name " + key);
}

std::string format_double(double v)
{
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

// =======================================================================
// Lexer
// =======================================================================

namespace {

enum class Tok { ident, number, lparen, rparen, lbracket, rbracket, lbrace, rbrace, comma, star, plus, minus, ge, le, end };

struct Token {
    Tok kind = Tok::end;
    std::string_view text;
    int column = 1;
};

const char* describe(Tok t)
{
    switch (t) {
        case Tok::ident: return "identifier";
        case Tok::number: return "number";
        case Tok::lparen: return "'('";
        case Tok::rparen: return "')'";
        case Tok::lbracket: return "'['";
        case Tok::rbracket: return "']'";
        case Tok::lbrace: return "'{'";
        case Tok::rbrace: return "'}'";
        case Tok::comma: return "','";
        case Tok::star: return "'*'";
        case Tok::plus: return "'+'";
        case Tok::minus: return "'-'";
        case Tok::ge: return "'>='";
        case Tok::le: return "'<='";
        case Tok::end: return "end of input";
    }
    return "token";
}

std::vector<Token> lex(std::string_view s, int line)
{
    std::vector<Token> out;
    std::size_t i = 0;
    auto col = [&](std::size_t p) { return static_cast<int>(p) + 1; };
    while (i < s.size()) {
        const char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
            out.push_back({Tok::ident, s.substr(start, i - start), col(start)});
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
            while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
            if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
                std::size_t j = i + 1;
                if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
                if (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) {
                    i = j;
                    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
                }
            }
            // Identifiers may start with digits too (agent names like "3a").
            if (i < s.size() && (std::isalpha(static_cast<unsigned char>(s[i])) || s[i] == '_')) {
                while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
                out.push_back({Tok::ident, s.substr(start, i - start), col(start)});
            } else {
                out.push_back({Tok::number, s.substr(start, i - start), col(start)});
            }
            continue;
        }
        Tok t;
        std::size_t len = 1;
        switch (c) {
            case '(': t = Tok::lparen; break;
            case ')': t = Tok::rparen; break;
            case '[': t = Tok::lbracket; break;
            case ']': t = Tok::rbracket; break;
            case '{': t = Tok::lbrace; break;
            case '}': t = Tok::rbrace; break;
            case ',': t = Tok::comma; break;
            case '*': t = Tok::star; break;
            case '+': t = Tok::plus; break;
            case '-': t = Tok::minus; break;
            case '>':
            case '<':
                if (i + 1 < s.size() && s[i + 1] == '=') {
                    t = c == '>' ? Tok::ge : Tok::le;
                    len = 2;
                    break;
                }
                [[fallthrough]];
            default:
                throw ParseError(std::string("unexpected character '") + c + "'", line, col(start));
        }
        out.push_back({t, s.substr(start, len), col(start)});
        i += len;
    }
    out.push_back({Tok::end, {}, col(s.size())});
    return out;
}

// =======================================================================
// Parser
// =======================================================================

struct LinTerm {
    double coef;
    StateRef ref;
};

struct LinExpr {
    std::vector<LinTerm> terms;
    double constant = 0.0;
};

class Parser {
public:
    Parser(std::string_view src, const SymbolTable& symbols, int line)
        : toks_(lex(src, line)), symbols_(symbols), line_(line) {}

    RawFormula parse()
    {
        RawFormula f = formula();
        if (peek().kind != Tok::end) fail("unexpected " + std::string(describe(peek().kind)));
        return f;
    }

private:
    const Token& peek(int ahead = 0) const
    {
        const std::size_t p = std::min(pos_ + ahead, toks_.size() - 1);
        return toks_[p];
    }
    const Token& next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
    bool accept(Tok t)
    {
        if (peek().kind != t) return false;
        ++pos_;
        return true;
    }
    const Token& expect(Tok t)
    {
        if (peek().kind != t)
            fail(std::string("expected ") + describe(t) + ", found " + describe(peek().kind));
        return next();
    }
    bool is_keyword(std::string_view kw, int ahead = 0) const
    {
        return peek(ahead).kind == Tok::ident && peek(ahead).text == kw;
    }
    [[noreturn]] void fail(const std::string& msg) const { fail_at(msg, peek().column); }
    [[noreturn]] void fail_at(const std::string& msg, int column) const { throw ParseError(msg, line_, column); }

    RawFormula formula()
    {
        std::vector<RawFormula> parts{conjunction()};
        while (is_keyword("or")) {
            next();
            parts.push_back(conjunction());
        }
        return parts.size() == 1 ? parts.front() : RawFormula::disj(std::move(parts));
    }

    RawFormula conjunction()
    {
        std::vector<RawFormula> parts{until()};
        while (is_keyword("and")) {
            next();
            parts.push_back(until());
        }
        return parts.size() == 1 ? parts.front() : RawFormula::conj(std::move(parts));
    }

    RawFormula until()
    {
        RawFormula left = unary();
        if (!is_keyword("U")) return left;
        next();
        const Interval I = interval();
        RawFormula right = unary();
        if (is_keyword("U")) fail("chained Until needs parentheses");
        return RawFormula::until(I, std::move(left), std::move(right));
    }

    RawFormula unary()
    {
        if (is_keyword("not")) {
            next();
            return RawFormula::negation(unary());
        }
        if (is_keyword("G") && peek(1).kind == Tok::lbracket) {
            next();
            const Interval I = interval();
            return RawFormula::always(I, unary());
        }
        if (is_keyword("F") && peek(1).kind == Tok::lbracket) {
            next();
            const Interval I = interval();
            return RawFormula::eventually(I, unary());
        }
        return atom();
    }

    RawFormula atom()
    {
        if (accept(Tok::lparen)) {
            RawFormula f = formula();
            expect(Tok::rparen);
            return f;
        }
        if (is_keyword("true")) {
            next();
            return RawFormula::truth();
        }
        if (peek(1).kind == Tok::lparen) {
            if (is_keyword("in")) return in_region();
            if (is_keyword("meet")) return meet();
            if (is_keyword("dist")) return dist();
            if (is_keyword("ball")) return ball();
        }
        return comparison();
    }

    Interval interval()
    {
        const int col = peek().column;
        expect(Tok::lbracket);
        const int lo = integer();
        expect(Tok::comma);
        const int hi = integer();
        expect(Tok::rbracket);
        if (hi < lo) fail_at("interval upper bound below lower bound", col);
        return Interval(lo, hi);
    }

    int integer()
    {
        const Token& t = peek();
        if (t.kind != Tok::number) fail("expected integer");
        int v = 0;
        auto r = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (r.ec != std::errc() || r.ptr != t.text.data() + t.text.size()) fail("expected integer");
        next();
        return v;
    }

    double number()
    {
        const bool neg = accept(Tok::minus);
        const Token& t = peek();
        if (t.kind != Tok::number) fail("expected number");
        double v = 0.0;
        auto r = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (r.ec != std::errc() || r.ptr != t.text.data() + t.text.size()) fail("malformed number");
        next();
        return neg ? -v : v;
    }

    int agent()
    {
        const Token& t = peek();
        if (t.kind != Tok::ident && t.kind != Tok::number) fail("expected agent");
        const int idx = symbols_.agent_index(t.text);
        if (idx < 0) fail("unknown agent '" + std::string(t.text) + "'");
        next();
        return idx;
    }

    StateRef ref()
    {
        if (!is_keyword("x")) fail("expected state reference x(agent, component)");
        next();
        expect(Tok::lparen);
        StateRef s;
        s.agent = agent();
        expect(Tok::comma);
        s.component = integer();
        expect(Tok::rparen);
        return s;
    }

    const Region& region()
    {
        const Token& t = peek();
        if (t.kind != Tok::ident) fail("expected region name");
        auto it = symbols_.regions.find(t.text);
        if (it == symbols_.regions.end()) fail("unknown region '" + std::string(t.text) + "'");
        next();
        return it->second;
    }

    RawFormula in_region()
    {
        next();
        expect(Tok::lparen);
        const int a = agent();
        expect(Tok::comma);
        const Region& r = region();
        expect(Tok::rparen);
        std::vector<RawFormula> parts;
        for (const auto& h : r.halfspaces) {
            std::vector<StateRef> sel;
            std::vector<double> c;
            if (h(0) != 0.0) {
                sel.push_back({a, 0});
                c.push_back(h(0));
            }
            if (h(1) != 0.0) {
                sel.push_back({a, 1});
                c.push_back(h(1));
            }
            parts.push_back(RawFormula::pred(
                Predicate::affine(std::move(sel), Eigen::Map<const Vector>(c.data(), c.size()), h(2))));
        }
        return parts.size() == 1 ? parts.front() : RawFormula::conj(std::move(parts));
    }

    RawFormula meet()
    {
        next();
        expect(Tok::lparen);
        expect(Tok::lbrace);
        std::vector<int> ids{agent()};
        while (accept(Tok::comma)) ids.push_back(agent());
        expect(Tok::rbrace);
        expect(Tok::comma);
        const double r = number();
        expect(Tok::rparen);
        if (ids.size() < 2) fail("meet needs at least two agents");
        std::vector<RawFormula> parts;
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (std::size_t j = i + 1; j < ids.size(); ++j)
                parts.push_back(RawFormula::pred(Predicate::pairwise_ball(ids[i], ids[j], r)));
        return parts.size() == 1 ? parts.front() : RawFormula::conj(std::move(parts));
    }

    RawFormula dist()
    {
        next();
        expect(Tok::lparen);
        const int i = agent();
        expect(Tok::comma);
        const int j = agent();
        expect(Tok::rparen);
        const bool ge = accept(Tok::ge);
        if (!ge && !accept(Tok::le)) fail("expected '>=' or '<=' after dist(...)");
        const double r = number();
        auto p = RawFormula::pred(Predicate::pairwise_ball(i, j, r));
        return ge ? RawFormula::negation(std::move(p)) : p;
    }

    RawFormula ball()
    {
        next();
        expect(Tok::lparen);
        const double r = number();
        expect(Tok::comma);
        expect(Tok::lbracket);
        std::vector<StateRef> sel{ref()};
        while (accept(Tok::comma)) sel.push_back(ref());
        expect(Tok::rbracket);
        expect(Tok::comma);
        const int col = peek().column;
        std::vector<std::vector<double>> rows;
        expect(Tok::lbracket);
        do {
            rows.push_back(number_list());
        } while (accept(Tok::comma));
        expect(Tok::rbracket);
        expect(Tok::comma);
        const auto b = number_list();
        expect(Tok::rparen);
        for (const auto& row : rows)
            if (row.size() != sel.size()) fail_at("ball matrix row length does not match the selector", col);
        if (b.size() != rows.size()) fail_at("ball offset length does not match the matrix", col);
        Matrix A(rows.size(), sel.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < sel.size(); ++j) A(i, j) = rows[i][j];
        Vector bv = Eigen::Map<const Vector>(b.data(), b.size());
        try {
            return RawFormula::pred(Predicate::ball(std::move(sel), r, std::move(A), std::move(bv)));
        } catch (const ArgumentError& e) {
            fail_at(e.what(), col);
        }
    }

    std::vector<double> number_list()
    {
        expect(Tok::lbracket);
        std::vector<double> v{number()};
        while (accept(Tok::comma)) v.push_back(number());
        expect(Tok::rbracket);
        return v;
    }

    LinExpr linexpr()
    {
        LinExpr e;
        double sign = 1.0;
        if (accept(Tok::minus)) sign = -1.0;
        for (;;) {
            term(e, sign);
            if (accept(Tok::plus)) sign = 1.0;
            else if (accept(Tok::minus)) sign = -1.0;
            else break;
        }
        return e;
    }

    void term(LinExpr& e, double sign)
    {
        if (is_keyword("x") && peek(1).kind == Tok::lparen) {
            e.terms.push_back({sign, ref()});
            return;
        }
        double c = number();
        c = sign < 0 ? -c : c;
        if (accept(Tok::star)) {
            e.terms.push_back({c, ref()});
            return;
        }
        e.constant += c;
    }

    RawFormula comparison()
    {
        const int col = peek().column;
        if (peek().kind != Tok::ident && peek().kind != Tok::number && peek().kind != Tok::minus)
            fail("expected formula");
        if (peek().kind == Tok::ident && !(is_keyword("x") && peek(1).kind == Tok::lparen))
            fail("unexpected identifier '" + std::string(peek().text) + "'");
        LinExpr lhs = linexpr();
        const bool ge = accept(Tok::ge);
        if (!ge && !accept(Tok::le)) fail("expected '>=' or '<='");
        LinExpr rhs = linexpr();
        LinExpr& pos = ge ? lhs : rhs;
        LinExpr& neg = ge ? rhs : lhs;
        std::vector<StateRef> sel;
        std::vector<double> c;
        for (const auto& t : pos.terms) {
            sel.push_back(t.ref);
            c.push_back(t.coef);
        }
        for (const auto& t : neg.terms) {
            sel.push_back(t.ref);
            c.push_back(-t.coef);
        }
        if (sel.empty()) fail_at("comparison does not reference any state", col);
        return RawFormula::pred(
            Predicate::affine(std::move(sel), Eigen::Map<const Vector>(c.data(), c.size()), pos.constant - neg.constant));
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    const SymbolTable& symbols_;
    int line_;
};

// =======================================================================
// Printer
// =======================================================================

bool is_pairwise(const Predicate& p, int& i, int& j)
{
    if (p.kind() != Predicate::Kind::ball) return false;
    const auto& s = p.selector();
    if (s.size() != 4 || p.matrix().rows() != 2) return false;
    i = s[0].agent;
    j = s[2].agent;
    if (!(s[0] == StateRef{i, 0} && s[1] == StateRef{i, 1} && s[2] == StateRef{j, 0} && s[3] == StateRef{j, 1}))
        return false;
    Matrix A(2, 4);
    A << 1, 0, -1, 0, 0, 1, 0, -1;
    return p.matrix() == A && p.shift().isZero(0.0) && !std::signbit(p.shift()(0)) && !std::signbit(p.shift()(1));
}

void print_ref(std::ostream& os, const StateRef& s, const SymbolTable& sym)
{
    os << "x(" << sym.agent_name(s.agent) << ", " << s.component << ")";
}

void print_pred(std::ostream& os, const Predicate& p, const SymbolTable& sym)
{
    int i = 0, j = 0;
    if (is_pairwise(p, i, j)) {
        os << "meet({" << sym.agent_name(i) << ", " << sym.agent_name(j) << "}, " << format_double(p.radius()) << ")";
        return;
    }
    if (p.kind() == Predicate::Kind::affine) {
        os << "(";
        for (std::size_t k = 0; k < p.selector().size(); ++k) {
            if (k) os << " + ";
            os << format_double(p.coefficients()(k)) << "*";
            print_ref(os, p.selector()[k], sym);
        }
        os << " + " << format_double(p.offset()) << " >= 0)";
        return;
    }
    os << "ball(" << format_double(p.radius()) << ", [";
    for (std::size_t k = 0; k < p.selector().size(); ++k) {
        if (k) os << ", ";
        print_ref(os, p.selector()[k], sym);
    }
    os << "], [";
    for (Eigen::Index r = 0; r < p.matrix().rows(); ++r) {
        os << (r ? ", [" : "[");
        for (Eigen::Index c = 0; c < p.matrix().cols(); ++c) os << (c ? ", " : "") << format_double(p.matrix()(r, c));
        os << "]";
    }
    os << "], [";
    for (Eigen::Index r = 0; r < p.shift().size(); ++r) os << (r ? ", " : "") << format_double(p.shift()(r));
    os << "])";
}

void print_formula(std::ostream& os, const Formula& f, const SymbolTable& sym)
{
    switch (f.kind()) {
        case FormulaKind::truth:
            os << "true";
            return;
        case FormulaKind::predicate:
            print_pred(os, f.predicate(), sym);
            return;
        case FormulaKind::negated_predicate: {
            int i = 0, j = 0;
            if (is_pairwise(f.predicate(), i, j)) {
                os << "dist(" << sym.agent_name(i) << ", " << sym.agent_name(j)
                   << ") >= " << format_double(f.predicate().radius());
                // Keep the comparison atomic inside larger expressions.
                return;
            }
            os << "not ";
            print_pred(os, f.predicate(), sym);
            return;
        }
        case FormulaKind::conjunction:
        case FormulaKind::disjunction: {
            const char* op = f.kind() == FormulaKind::conjunction ? " and " : " or ";
            os << "(";
            for (std::size_t k = 0; k < f.children().size(); ++k) {
                if (k) os << op;
                print_formula(os, f.children()[k], sym);
            }
            os << ")";
            return;
        }
        case FormulaKind::always:
        case FormulaKind::eventually:
            os << "(" << (f.kind() == FormulaKind::always ? "G[" : "F[") << f.interval().lo << ", " << f.interval().hi
               << "] ";
            print_formula(os, f.child(), sym);
            os << ")";
            return;
        case FormulaKind::until:
            os << "(";
            print_formula(os, f.left(), sym);
            os << " U[" << f.interval().lo << ", " << f.interval().hi << "] ";
            print_formula(os, f.right(), sym);
            os << ")";
            return;
    }
}

} // namespace

RawFormula parse_stl_raw(std::string_view src, const SymbolTable& symbols, int line)
{
    return Parser(src, symbols, line).parse();
}

Formula parse_stl(std::string_view src, const SymbolTable& symbols, int line)
{
    return normalize_pnf(parse_stl_raw(src, symbols, line));
}

std::string pretty_print(const Formula& f, const SymbolTable& symbols)
{
    std::ostringstream os;
    print_formula(os, f, symbols);
    return os.str();
}

std::string pretty_print(const Predicate& p, const SymbolTable& symbols)
{
    std::ostringstream os;
    print_pred(os, p, symbols);
    return os.str();
}

} // namespace mastl
