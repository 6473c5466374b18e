#pragma once

// Operations on trees with dynamics: truncation validation, the Gromov
// metric on ends, first returns, minimal return chains, periodicity, and the
// bridge to meta-Fibonacci recognition (the combinatorial main theorem).

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "treedyn/errors.hpp"
#include "treedyn/metafib.hpp"
#include "treedyn/tree.hpp"

namespace treedyn::twd {

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------
struct Violation {
    std::string kind;
    VertexRef witness;
    std::string detail;
};

struct ValidationReport {
    int declared_shift = 0;
    std::optional<int> detected_shift; // present when uniform over the sample
    size_t vertices_checked = 0;
    std::vector<Violation> violations;

    bool clean() const { return violations.empty(); }
};

/// Check parent/child consistency, child preservation of F, uniform level
/// shift and the genealogical-tree axioms on the truncation to `depth`.
/// Violations are report entries with a witness vertex, never exceptions.
inline ValidationReport validate(const TreeModel& m, int depth) {
    ValidationReport rep;
    rep.declared_shift = m.shift();
    std::vector<VertexRef> verts = m.sample(depth);
    rep.vertices_checked = verts.size();

    std::optional<int> shift;
    bool uniform = true;
    for (const VertexRef& v : verts) {
        VertexRef p = m.parent(v);
        if (p.level != v.level - 1)
            rep.violations.push_back({"parent_level", v, "parent " + p.str()});
        // Parent levels strictly decrease, so no vertex can be an ancestor
        // of its own parent once parent_level holds throughout.

        VertexRef fv = m.apply(v);
        int d = v.level - fv.level;
        if (!shift)
            shift = d;
        else if (*shift != d)
            uniform = false;
        if (d != m.shift())
            rep.violations.push_back(
                {"shift_mismatch", v, "F drops " + std::to_string(d) + " levels"});

        for (const VertexRef& c : m.children(v)) {
            if (c.level != v.level + 1)
                rep.violations.push_back({"child_level", c, "child of " + v.str()});
            if (!(m.parent(c) == v))
                rep.violations.push_back({"parent_mismatch", c, "expected parent " + v.str()});
            VertexRef fc = m.apply(c);
            // Child preservation, stated through parents so that sampled
            // (incomplete) child lists do not matter: F(c) must be a child
            // of F(v), i.e. its parent must be F(v) one level up.
            if (!(m.parent(fc) == fv) || fc.level != fv.level + 1)
                rep.violations.push_back(
                    {"child_preservation", c, "F(child) = " + fc.str() + " not a child of " +
                                                  fv.str()});
        }
    }
    if (uniform && shift) rep.detected_shift = *shift;

    // Common-ancestor axiom on a bounded subsample of pairs.
    size_t step = std::max<size_t>(1, verts.size() / 24);
    std::vector<VertexRef> sub;
    for (size_t i = 0; i < verts.size(); i += step) sub.push_back(verts[i]);
    for (size_t i = 0; i < sub.size(); ++i) {
        for (size_t j = i + 1; j < sub.size(); ++j) {
            VertexRef a = sub[i], b = sub[j];
            int floor_level = std::min(a.level, b.level);
            while (a.level > floor_level) a = m.parent(a);
            while (b.level > floor_level) b = m.parent(b);
            int budget = depth + 64;
            while (!(a == b) && budget-- > 0) {
                a = m.parent(a);
                b = m.parent(b);
            }
            if (!(a == b))
                rep.violations.push_back(
                    {"no_common_ancestor", sub[i], "with " + sub[j].str()});
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Ends on a model
// ---------------------------------------------------------------------------

/// The unique vertex of the end at `level`.  Levels below the anchor follow
/// the parent line.
inline VertexRef end_vertex(const TreeModel& m, const EndAddress& end, int level) {
    VertexRef v = end.anchor() ? *end.anchor() : m.root();
    if (v.level != 0) throw ModelError("end anchor must sit at level 0");
    if (level <= 0) {
        for (int l = 0; l > level; --l) v = m.parent(v);
        return v;
    }
    for (int l = 0; l < level; ++l) {
        int d = end.digit(l);
        std::vector<VertexRef> kids = m.children(v);
        if (d < 0 || d >= static_cast<int>(kids.size()))
            throw AddressOutOfRange("digit " + std::to_string(d) + " at level " +
                                    std::to_string(l) + " of " + v.str());
        v = kids[static_cast<size_t>(d)];
    }
    return v;
}

namespace detail {

// Per-call memo of the end's vertices, extended incrementally in both
// directions so repeated queries stay O(1) amortized; models stay untouched.
class EndContext {
public:
    EndContext(const TreeModel& m, const EndAddress& end) : m_(m), end_(end) {
        VertexRef a = end.anchor() ? *end.anchor() : m.root();
        if (a.level != 0) throw ModelError("end anchor must sit at level 0");
        memo_.emplace(0, std::move(a));
    }

    const VertexRef& at(int level) {
        while (hi_ < level) {
            const VertexRef& v = memo_.at(hi_);
            int d = end_.digit(hi_);
            std::vector<VertexRef> kids = m_.children(v);
            if (d < 0 || d >= static_cast<int>(kids.size()))
                throw AddressOutOfRange("digit " + std::to_string(d) + " at level " +
                                        std::to_string(hi_) + " of " + v.str());
            memo_.emplace(hi_ + 1, kids[static_cast<size_t>(d)]);
            ++hi_;
        }
        while (lo_ > level) {
            memo_.emplace(lo_ - 1, m_.parent(memo_.at(lo_)));
            --lo_;
        }
        return memo_.at(level);
    }

    const TreeModel& model() const { return m_; }
    const EndAddress& end() const { return end_; }

private:
    const TreeModel& m_;
    const EndAddress& end_;
    int lo_ = 0, hi_ = 0;
    std::map<int, VertexRef> memo_;
};

inline long long rooted_return_ceiling(const TreeModel& m, int level) {
    // In a rooted model every vertex returns by the time its orbit falls
    // onto the base line: n <= ceil(level / H) steps.
    if (!m.rooted() || level <= 0) return 1;
    return (level + m.shift() - 1) / m.shift() + 1;
}

inline std::optional<long long> first_return_impl(EndContext& ctx, int level,
                                                  long long max_steps) {
    const TreeModel& m = ctx.model();
    int H = m.shift();
    if (m.rooted()) max_steps = std::max(max_steps, rooted_return_ceiling(m, level));
    VertexRef w = ctx.at(level);
    for (long long n = 1; n <= max_steps; ++n) {
        w = m.apply(w);
        int expected = level - static_cast<int>(n) * H;
        if (w.level != expected)
            throw ModelError("F does not shift levels uniformly at " + w.str());
        if (w == ctx.at(expected)) return n;
    }
    return std::nullopt;
}

} // namespace detail

struct Budget {
    long long max_steps = 1 << 20; // F-iterations per first-return search
    int max_level = 4096;          // highest level a forward scan may visit
};

/// Minimal n >= 1 with F^n(x_level) on the end; the landing level is
/// level - n*H.  nullopt once max_steps is exhausted.
inline std::optional<long long> first_return(const TreeModel& m, const EndAddress& end,
                                             int level, long long max_steps = 1 << 20) {
    if (m.shift() < 1)
        throw UnsupportedShift("return machinery needs H >= 1, model has H = " +
                               std::to_string(m.shift()));
    detail::EndContext ctx(m, end);
    return detail::first_return_impl(ctx, level, max_steps);
}

// ---------------------------------------------------------------------------
// Gromov metric on ends
// ---------------------------------------------------------------------------
struct GromovDistance {
    double value = 0.0;
    int agreement_level = 0; // L = max level where the ends agree
    bool capped = false;     // still equal at l_max
};

inline GromovDistance gromov_distance(const TreeModel& m, const EndAddress& x,
                                      const EndAddress& y, double gamma, int l_max) {
    if (!(gamma > 1.0)) throw PreconditionFailed("gromov metric needs gamma > 1");
    GromovDistance out;
    if (end_vertex(m, x, 0) == end_vertex(m, y, 0)) {
        int L = 0;
        while (L < l_max && end_vertex(m, x, L + 1) == end_vertex(m, y, L + 1)) ++L;
        out.agreement_level = L;
        out.capped = (L == l_max);
    } else {
        int l = 0, budget = l_max + 64;
        while (budget-- > 0) {
            --l;
            if (end_vertex(m, x, l) == end_vertex(m, y, l)) break;
        }
        if (!(end_vertex(m, x, l) == end_vertex(m, y, l)))
            throw ModelError("ends share no ancestor within budget");
        out.agreement_level = l;
    }
    out.value = std::pow(gamma, -static_cast<double>(out.agreement_level));
    return out;
}

// ---------------------------------------------------------------------------
// Return chains
// ---------------------------------------------------------------------------
struct ReturnChain {
    int k_lo = 0;
    std::vector<int> levels;      // l(k) for k = k_lo..k_hi
    std::vector<long long> times; // n_k
    // Proven: the end is non-recurrent past this k (n_k = r(k) = infinity
    // for k beyond it).  Only set when the model certifies the absence.
    std::optional<int> nonrecurrent_at;
    // Honest truncation: the search budget ran out at this k; nothing is
    // claimed about larger k.
    std::optional<int> budget_stopped_at;

    int k_hi() const { return k_lo + static_cast<int>(levels.size()) - 1; }
    int level_at(int k) const { return levels.at(static_cast<size_t>(k - k_lo)); }
    long long time_at(int k) const { return times.at(static_cast<size_t>(k - k_lo)); }

    friend bool operator==(const ReturnChain&, const ReturnChain&) = default;
};

/// The unique minimal return chain through l(0) = l0: backward by following
/// first returns downward, forward by choosing at each step the least level
/// whose first return lands on the previous element.
inline ReturnChain minimal_return_chain(const TreeModel& m, const EndAddress& end, int l0,
                                        int K, Budget budget = {}, int k_lo = -8) {
    if (m.shift() < 1)
        throw UnsupportedShift("return machinery needs H >= 1, model has H = " +
                               std::to_string(m.shift()));
    if (K < 0 || k_lo > 0) throw PreconditionFailed("need K >= 0 and k_lo <= 0");
    const int H = m.shift();
    detail::EndContext ctx(m, end);

    // Backward part: levels l(k_lo..0), times n_k for k_lo < k <= 0 known
    // once l(k-1) = l(k) - n_k H is walked down.
    std::vector<int> back_levels{l0};
    std::vector<long long> back_times; // n_0, n_-1, ... (time of the level above)
    for (int k = 0; k > k_lo; --k) {
        int cur = back_levels.back();
        if (m.proves_no_return(end, cur).value_or(false))
            throw PreconditionFailed("x_" + std::to_string(cur) +
                                     " never returns; no chain through l(0)=" +
                                     std::to_string(l0));
        auto t = detail::first_return_impl(ctx, cur, budget.max_steps);
        if (!t)
            throw BudgetExhausted("backward construction exhausted max_steps at level " +
                                  std::to_string(cur));
        back_times.push_back(*t);
        back_levels.push_back(cur - static_cast<int>(*t) * H);
    }

    ReturnChain chain;
    chain.k_lo = k_lo;
    for (size_t i = back_levels.size(); i-- > 0;) chain.levels.push_back(back_levels[i]);
    // n_{k_lo} is the first return time of the lowest element itself.
    {
        auto t = detail::first_return_impl(ctx, chain.levels.front(), budget.max_steps);
        if (!t) throw BudgetExhausted("backward construction exhausted max_steps");
        chain.times.push_back(*t);
    }
    for (size_t i = back_times.size(); i-- > 0;) chain.times.push_back(back_times[i]);

    // Forward part.
    for (int k = 1; k <= K; ++k) {
        int target = chain.levels.back();
        std::optional<int> bound = m.scan_bound(end, target);
        int limit = budget.max_level;
        bool proven_limit = false;
        if (bound && *bound <= limit) {
            limit = *bound;
            proven_limit = true;
        }
        std::optional<int> found;
        std::optional<long long> found_time;
        for (int l = target + 1; l <= limit; ++l) {
            if (m.proves_no_return(end, l).value_or(false)) {
                // No descendant of a non-returning vertex returns either, so
                // the scan is dead from here on.
                proven_limit = true;
                break;
            }
            auto t = detail::first_return_impl(ctx, l, budget.max_steps);
            if (!t) {
                chain.budget_stopped_at = k;
                return chain;
            }
            if (l - static_cast<int>(*t) * H == target) {
                found = l;
                found_time = *t;
                break;
            }
        }
        if (!found) {
            if (proven_limit)
                chain.nonrecurrent_at = k;
            else
                chain.budget_stopped_at = k;
            return chain;
        }
        chain.levels.push_back(*found);
        chain.times.push_back(*found_time);
    }
    return chain;
}

/// True iff each x_{l(k)} first-returns exactly onto x_{l(k-1)}.
inline bool is_return_chain(const TreeModel& m, const EndAddress& end,
                            const std::vector<int>& levels, Budget budget = {}) {
    if (m.shift() < 1) throw UnsupportedShift("return machinery needs H >= 1");
    if (levels.size() < 2) return true; // vacuous for a single element
    detail::EndContext ctx(m, end);
    for (size_t i = 1; i < levels.size(); ++i) {
        if (levels[i] <= levels[i - 1]) return false;
        auto t = detail::first_return_impl(ctx, levels[i], budget.max_steps);
        if (!t) throw BudgetExhausted("first return search exhausted at level " +
                                      std::to_string(levels[i]));
        if (levels[i] - static_cast<int>(*t) * m.shift() != levels[i - 1]) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Main theorem: chain times are variable-r meta-Fibonacci numbers
// ---------------------------------------------------------------------------
struct TheoremCheck {
    int k_lo = 0;
    std::vector<long long> r; // r(k) for k = k_lo..k_hi
};

/// Recover the r-table of a chain's return times.  Success is the theorem's
/// content; a NotMetaFib here would falsify the implementation.
inline TheoremCheck verify_theorem(const ReturnChain& chain) {
    TheoremCheck out;
    out.k_lo = chain.k_lo;
    std::vector<metafib::BigInt> forward;
    for (int k = chain.k_lo; k <= chain.k_hi(); ++k) {
        long long n = chain.time_at(k);
        if (k <= 0) {
            if (n != 1)
                throw NormalFormRequired("chain has n_" + std::to_string(k) + " = " +
                                         std::to_string(n) +
                                         "; only the normal form n_k = 1 for k <= 0 is supported");
            out.r.push_back(1);
        } else {
            forward.emplace_back(n);
        }
    }
    if (!forward.empty()) {
        auto seq = metafib::MetaFibSeq::from_values(std::move(forward));
        for (long long rk : metafib::infer_r(seq)) out.r.push_back(rk);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Periodicity
// ---------------------------------------------------------------------------
struct PeriodResult {
    enum class Status { Periodic, Aperiodic, Inconclusive };
    Status status = Status::Inconclusive;
    long long period = 0;
    bool proven = false;
};

/// Minimal N with F^N fixing the end.  Exact when the model can decide the
/// end's period; the result is then cross-certified by the eventually
/// constant return times the periodicity lemma guarantees.
inline PeriodResult detect_period(const TreeModel& m, const EndAddress& end, int l_probe = 0,
                                  Budget budget = {}) {
    if (m.shift() < 1) throw UnsupportedShift("return machinery needs H >= 1");
    PeriodKnowledge pk = m.end_period(end);
    if (pk.kind == PeriodKnowledge::Kind::Periodic) {
        const int steps = 24;
        Budget b = budget;
        long long span = static_cast<long long>(steps + 2) * pk.period * m.shift() + 64;
        if (end.eventually_periodic())
            span += static_cast<long long>(end.preperiod().size() + 4 * end.period().size());
        b.max_level = std::max<long long>(b.max_level, l_probe + span);
        ReturnChain chain = minimal_return_chain(m, end, l_probe, steps, b);
        size_t n = chain.times.size();
        if (n < 3 || chain.times[n - 1] != pk.period || chain.times[n - 2] != pk.period ||
            chain.times[n - 3] != pk.period)
            throw ModelError("period certification failed: chain times never settle at " +
                             std::to_string(pk.period));
        return {PeriodResult::Status::Periodic, pk.period, true};
    }
    if (pk.kind == PeriodKnowledge::Kind::Aperiodic)
        return {PeriodResult::Status::Aperiodic, 0, true};

    ReturnChain chain = minimal_return_chain(m, end, l_probe, 32, budget);
    if (chain.nonrecurrent_at) // non-recurrent ends are in particular aperiodic
        return {PeriodResult::Status::Aperiodic, 0, true};
    size_t n = chain.times.size();
    if (n >= 4 && chain.times[n - 1] == chain.times[n - 2] &&
        chain.times[n - 2] == chain.times[n - 3] && chain.times[n - 3] == chain.times[n - 4])
        return {PeriodResult::Status::Periodic, chain.times[n - 1], false};
    if (n >= 3 && chain.times[n - 1] > chain.times[n - 2] &&
        chain.times[n - 2] > chain.times[n - 3])
        return {PeriodResult::Status::Aperiodic, 0, false};
    return {};
}

/// If F^n(x_l) returns, so does F^n(x_m) for every m < l; confirm down to
/// level -depth.
inline bool check_ancestor_returns(const TreeModel& m, const EndAddress& end, int l,
                                   long long n, int depth) {
    if (m.shift() < 1) throw UnsupportedShift("return machinery needs H >= 1");
    detail::EndContext ctx(m, end);
    const int H = m.shift();
    auto lands_on_end = [&](int from) {
        VertexRef w = ctx.at(from);
        for (long long i = 0; i < n; ++i) w = m.apply(w);
        return w == ctx.at(from - static_cast<int>(n) * H);
    };
    if (!lands_on_end(l))
        throw PreconditionFailed("F^n(x_l) is not a return at l = " + std::to_string(l));
    for (int level = l - 1; level >= -depth; --level)
        if (!lands_on_end(level)) return false;
    return true;
}

} // namespace treedyn::twd
