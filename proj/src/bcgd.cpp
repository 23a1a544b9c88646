#include <mastl/bcgd.hpp>

#include <charconv>
#include <ostream>

namespace mastl {

void BcgdConfig::validate() const
{
    if (!(sigma > 0.0 && sigma < 1.0)) throw ArgumentError("Armijo sigma must lie in (0, 1)");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ArgumentError("Armijo gamma must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw ArgumentError("gradient tolerance must be positive");
    if (max_iters < 0) throw ArgumentError("iteration limit must be nonnegative");
    if (max_halvings < 0) throw ArgumentError("halving limit must be nonnegative");
    if (rule.parameter < 0) throw ArgumentError("block rule parameter must be nonnegative");
    hessian.validate();
}

BlockRule parse_block_rule(std::string_view text)
{
    const auto colon = text.find(':');
    const auto name = text.substr(0, colon);
    int p = 0;
    if (colon != std::string_view::npos) {
        const auto num = text.substr(colon + 1);
        auto r = std::from_chars(num.data(), num.data() + num.size(), p);
        if (num.empty() || r.ec != std::errc() || r.ptr != num.data() + num.size() || p < 0)
            throw ArgumentError("bad block rule count in '" + std::string(text) + "'");
    }
    if (name == "gauss_seidel") return BlockRule::gauss_seidel(p);
    if (name == "gauss_southwell") return BlockRule::gauss_southwell(p == 0 ? 1 : p);
    throw ArgumentError("unknown block rule '" + std::string(text) + "'");
}

std::string to_string(const BlockRule& rule)
{
    std::string s = rule.kind == BlockRule::Kind::gauss_southwell ? "gauss_southwell" : "gauss_seidel";
    return s + ":" + std::to_string(rule.parameter);
}

const char* to_string(BcgdTermination t)
{
    switch (t) {
        case BcgdTermination::tolerance: return "tolerance";
        case BcgdTermination::max_iters: return "max_iters";
        case BcgdTermination::line_search_failure: return "line_search_failure";
    }
    return "unknown";
}

namespace {

void put(std::ostream& os, double v)
{
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    os.write(buf, r.ptr - buf);
}

} // namespace

void write_trace(std::ostream& os, const BcgdTrace& trace)
{
    for (const auto& it : trace.iterations) {
        os << "k=" << it.k << " F=";
        put(os, it.F);
        os << " grad=";
        put(os, it.grad_norm);
        os << " alpha=";
        put(os, it.alpha);
        os << " F_next=";
        put(os, it.F_next);
        os << " fallback=" << (it.fallback_direction ? 1 : 0) << " blocks=";
        for (std::size_t i = 0; i < it.blocks.size(); ++i) os << (i ? "," : "") << it.blocks[i];
        os << '\n';
    }
    os << "termination=" << to_string(trace.termination) << '\n';
}

// =======================================================================
// BlockSelector
// =======================================================================

BlockSelector::BlockSelector(BlockRule rule, std::vector<int> free_blocks, std::uint64_t seed)
    : rule_(rule), blocks_(std::move(free_blocks)), rng_(seed)
{
    if (blocks_.empty()) throw ArgumentError("no blocks to select from");
    const int nb = static_cast<int>(blocks_.size());
    if (rule_.kind == BlockRule::Kind::gauss_southwell) {
        per_iter_ = std::clamp(rule_.parameter == 0 ? 1 : rule_.parameter, 1, nb);
    } else {
        // A sweep of `cycle` iterations covers every block once.
        const int cycle = rule_.parameter == 0 ? nb : std::min(rule_.parameter, nb);
        per_iter_ = (nb + cycle - 1) / cycle;
    }
    perm_ = blocks_;
    cursor_ = perm_.size();
}

std::vector<int> BlockSelector::select(int, const std::vector<double>& norms)
{
    std::vector<int> J;
    if (rule_.kind == BlockRule::Kind::gauss_southwell) {
        std::vector<int> order = blocks_;
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            if (norms[a] != norms[b]) return norms[a] > norms[b];
            return a < b;
        });
        J.assign(order.begin(), order.begin() + per_iter_);
        std::sort(J.begin(), J.end());
        return J;
    }
    if (cursor_ >= perm_.size()) {
        std::shuffle(perm_.begin(), perm_.end(), rng_);
        cursor_ = 0;
    }
    const std::size_t end = std::min(perm_.size(), cursor_ + static_cast<std::size_t>(per_iter_));
    J.assign(perm_.begin() + cursor_, perm_.begin() + end);
    cursor_ = end;
    std::sort(J.begin(), J.end());
    return J;
}

// =======================================================================
// Penalty problem wrappers
// =======================================================================

BcgdResult bcgd_solve(const PenaltyContext& ctx, const ControlSequence& u0, const BcgdConfig& cfg)
{
    PenaltyObjective obj(*ctx.problem);
    if (!(u0.layout == obj.layout())) throw ArgumentError("control sequence layout does not match the problem");
    return bcgd_solve(obj, u0.values, ctx.lambda, cfg);
}

Vector block_direction(const PenaltyContext& ctx, const ControlSequence& u, const Vector& grad_R,
                       const std::vector<int>& blocks, const HessianPolicy& H)
{
    PenaltyObjective obj(*ctx.problem);
    if (!(u.layout == obj.layout())) throw ArgumentError("control sequence layout does not match the problem");
    PenaltyObjective::Point p;
    obj.evaluate(u.values, ctx.lambda, p);
    Vector gL, gR_unused;
    obj.gradient(p, gL, gR_unused);
    Vector d = Vector::Zero(obj.size());
    for (int j : blocks)
        d.segment(obj.block_offset(j), obj.block_size(j)) = obj.block_direction(j, u.values, gL, grad_R, ctx.lambda, H);
    return d;
}

} // namespace mastl
