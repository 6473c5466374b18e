#pragma once

// Genealogical trees with dynamics.
//
// Trees are infinite, so models are lazy: they expose parent/children/F as
// pure evaluable functions on vertex references, and every check runs on an
// explicit finite truncation.  A model must be deterministic (same input,
// same output); the engine never mutates a model.

#include <climits>
#include <optional>
#include <string>
#include <vector>

#include "treedyn/errors.hpp"

namespace treedyn::twd {

struct VertexRef {
    int level = 0;
    std::string id; // unique within its level

    friend bool operator==(const VertexRef&, const VertexRef&) = default;
    friend bool operator<(const VertexRef& a, const VertexRef& b) {
        return a.level != b.level ? a.level < b.level : a.id < b.id;
    }

    std::string str() const { return "(" + std::to_string(level) + "," + id + ")"; }
};

// ---------------------------------------------------------------------------
// EndAddress: child indices descending from a level-0 anchor vertex.
//
// Digits are either eventually periodic (preperiod + nonempty period word,
// evaluable at every level) or a finite word (evaluable while it lasts).
// Fully general ends fit behind the same interface by materializing a long
// finite word; they are excluded from the exhaustive decision procedures.
// ---------------------------------------------------------------------------
class EndAddress {
public:
    static EndAddress periodic(std::vector<int> pre, std::vector<int> per,
                               std::optional<VertexRef> anchor = std::nullopt) {
        if (per.empty()) throw AddressOutOfRange("period word must be nonempty");
        EndAddress e;
        e.pre_ = std::move(pre);
        e.per_ = std::move(per);
        e.anchor_ = std::move(anchor);
        return e;
    }

    static EndAddress finite(std::vector<int> word,
                             std::optional<VertexRef> anchor = std::nullopt) {
        EndAddress e;
        e.pre_ = std::move(word);
        e.anchor_ = std::move(anchor);
        return e;
    }

    /// Bit-string shorthand: "010" preperiod, optional period word.
    static EndAddress from_bits(const std::string& pre, const std::string& per = "",
                                std::optional<VertexRef> anchor = std::nullopt) {
        auto digits = [](const std::string& s) {
            std::vector<int> d;
            d.reserve(s.size());
            for (char c : s) {
                if (c < '0' || c > '9') throw ParseError(std::string("bad digit '") + c + "'");
                d.push_back(c - '0');
            }
            return d;
        };
        if (per.empty()) return finite(digits(pre), std::move(anchor));
        return periodic(digits(pre), digits(per), std::move(anchor));
    }

    /// Child index taken from level l to level l+1 (l >= 0).
    int digit(int l) const {
        if (l < 0) throw AddressOutOfRange("digits start at level 0");
        size_t i = static_cast<size_t>(l);
        if (i < pre_.size()) return pre_[i];
        if (per_.empty())
            throw AddressOutOfRange("end address is only known through level " +
                                    std::to_string(pre_.size()));
        return per_[(i - pre_.size()) % per_.size()];
    }

    bool eventually_periodic() const { return !per_.empty(); }
    int known_depth() const { return per_.empty() ? static_cast<int>(pre_.size()) : INT_MAX; }
    const std::vector<int>& preperiod() const { return pre_; }
    const std::vector<int>& period() const { return per_; }
    const std::optional<VertexRef>& anchor() const { return anchor_; }

    friend bool operator==(const EndAddress&, const EndAddress&) = default;

private:
    EndAddress() = default;
    std::vector<int> pre_;
    std::vector<int> per_; // empty for finite words
    std::optional<VertexRef> anchor_;
};

/// What a model knows for sure about an end's minimal F-period.
struct PeriodKnowledge {
    enum class Kind { Unknown, Aperiodic, Periodic };
    Kind kind = Kind::Unknown;
    long long period = 0;
};

// ---------------------------------------------------------------------------
// TreeModel: the lazy tree-with-dynamics interface.
// ---------------------------------------------------------------------------
class TreeModel {
public:
    virtual ~TreeModel() = default;

    virtual std::string name() const = 0;

    /// H: the dynamics maps level l onto level l - shift().
    virtual int shift() const = 0;

    /// True when levels <= 0 each hold exactly one vertex (the base line the
    /// return-time corollaries need).  root() is then the level-0 vertex.
    virtual bool rooted() const = 0;
    virtual VertexRef root() const { throw ModelError(name() + " has no root"); }

    virtual VertexRef parent(const VertexRef& v) const = 0;

    /// Ordered child list.  Models with infinitely many children at a vertex
    /// return a representative sample and flag it via children_complete().
    virtual std::vector<VertexRef> children(const VertexRef& v) const = 0;
    virtual bool children_complete(const VertexRef&) const { return true; }

    /// The dynamics F.
    virtual VertexRef apply(const VertexRef& v) const = 0;

    /// Finite truncation for validation.  Default: the root line down to
    /// -depth plus all descendants of the root through level depth.
    virtual std::vector<VertexRef> sample(int depth) const {
        if (!rooted()) throw ModelError(name() + ": override sample() for non-rooted models");
        std::vector<VertexRef> out;
        VertexRef line = root();
        out.push_back(line);
        for (int i = 0; i < depth; ++i) {
            line = parent(line);
            out.push_back(line);
        }
        std::vector<VertexRef> frontier{root()};
        for (int l = 0; l < depth; ++l) {
            std::vector<VertexRef> next;
            for (const VertexRef& v : frontier)
                for (VertexRef& c : children(v)) next.push_back(std::move(c));
            out.insert(out.end(), next.begin(), next.end());
            frontier = std::move(next);
        }
        return out;
    }

    // -- Exact-knowledge hooks -------------------------------------------
    //
    // These certify facts that no finite search can establish (periodicity
    // of an end, absence of returns).  They must never be consulted to
    // answer a first-return query: the generic search is the engine, and
    // the hooks only close the gap between "budget exhausted" and "proven".

    virtual PeriodKnowledge end_period(const EndAddress&) const { return {}; }

    /// A level L such that if no vertex of the end at a level in
    /// (target_level, L] first-returns onto level target_level, none ever
    /// does.  nullopt: no sound bound known.
    virtual std::optional<int> scan_bound(const EndAddress&, int /*target_level*/) const {
        return std::nullopt;
    }

    /// true: the end's vertex at `level` provably never returns.
    virtual std::optional<bool> proves_no_return(const EndAddress&, int /*level*/) const {
        return std::nullopt;
    }
};

} // namespace treedyn::twd
