#pragma once

// Variable-r meta-Fibonacci sequences over exact integers.
//
// A generator function r : Z -> Z+ drives the recursion
//
//     n_k = n_{k-1} + n_{k-2} + ... + n_{k-r(k)}
//
// under the normal form n_k = 1 for all k <= 0 (the only initial condition
// supported; it is the one forced by return chains in rooted trees).  The
// module generates sequences, recovers r(k) from a sequence, extracts
// cascades (maximal constant runs), checks the closed-form growth bounds,
// and computes the r-bonacci growth constants gamma_r.

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "treedyn/errors.hpp"

namespace treedyn::metafib {

using BigInt = boost::multiprecision::cpp_int;

// ---------------------------------------------------------------------------
// RSpec: a specification of the generator function r(k).
//
// Every spec evaluates to 1 for k <= 0.  constant(r) ramps up as min(k, r),
// which yields the classical r-bonacci numbers (so constant(2) is the
// Fibonacci spec r(1)=1, r(k)=2 for k >= 2).  Tables carry an explicit tail
// spec so evaluation is total for every k.
// ---------------------------------------------------------------------------
class RSpec {
public:
    enum class Kind { Constant, Identity, PowerOfTwo, IndicatorMod, IndicatorPow, Table };

    static RSpec constant(long long r) {
        if (r < 1) throw InvalidRSpec("constant spec needs r >= 1");
        RSpec s(Kind::Constant);
        s.a_ = r;
        return s;
    }

    static RSpec identity() { return RSpec(Kind::Identity); }

    static RSpec power_of_two() { return RSpec(Kind::PowerOfTwo); }

    /// r(k) = inside if k = residue (mod modulus), else outside (k >= 1).
    static RSpec indicator_mod(long long modulus, long long residue, long long inside,
                               long long outside) {
        if (modulus < 1) throw InvalidRSpec("indicator modulus must be >= 1");
        if (inside < 1 || outside < 1) throw InvalidRSpec("indicator values must be >= 1");
        RSpec s(Kind::IndicatorMod);
        s.m_ = modulus;
        s.c_ = ((residue % modulus) + modulus) % modulus;
        s.a_ = inside;
        s.b_ = outside;
        return s;
    }

    /// r(k) = inside if k = base^j for some j >= 1, else outside.
    static RSpec indicator_pow(long long base, long long inside, long long outside) {
        if (base < 2) throw InvalidRSpec("indicator power base must be >= 2");
        if (inside < 1 || outside < 1) throw InvalidRSpec("indicator values must be >= 1");
        RSpec s(Kind::IndicatorPow);
        s.m_ = base;
        s.a_ = inside;
        s.b_ = outside;
        return s;
    }

    /// Explicit values for k = 1..entries.size(), the tail spec beyond.
    static RSpec table(std::vector<long long> entries, RSpec tail) {
        for (long long e : entries)
            if (e < 1) throw InvalidRSpec("table entry < 1");
        RSpec s(Kind::Table);
        s.entries_ = std::move(entries);
        s.tail_ = std::make_shared<RSpec>(std::move(tail));
        return s;
    }

    static RSpec fibonacci() { return constant(2); }

    Kind kind() const { return kind_; }

    long long eval(long long k) const {
        if (k <= 0) return 1;
        switch (kind_) {
        case Kind::Constant: return std::min(k, a_);
        case Kind::Identity: return k;
        case Kind::PowerOfTwo:
            if (k > 63) throw Unsupported("r(k) = 2^(k-1) exceeds 64-bit range for k > 63");
            return 1LL << (k - 1);
        case Kind::IndicatorMod: return (k % m_) == c_ ? a_ : b_;
        case Kind::IndicatorPow: {
            long long p = m_;
            while (p < k && p <= std::numeric_limits<long long>::max() / m_) p *= m_;
            return p == k ? a_ : b_;
        }
        case Kind::Table:
            if (k <= static_cast<long long>(entries_.size())) return entries_[size_t(k - 1)];
            return tail_->eval(k);
        }
        throw Unsupported("unreachable RSpec kind");
    }

    std::string to_string() const {
        switch (kind_) {
        case Kind::Constant: return "const:" + std::to_string(a_);
        case Kind::Identity: return "identity";
        case Kind::PowerOfTwo: return "pow2";
        case Kind::IndicatorMod:
            return "ind:mod:" + std::to_string(m_) + ":" + std::to_string(c_) + ":" +
                   std::to_string(a_) + ":" + std::to_string(b_);
        case Kind::IndicatorPow:
            return "ind:pow:" + std::to_string(m_) + ":" + std::to_string(a_) + ":" +
                   std::to_string(b_);
        case Kind::Table: {
            std::string s = "table:";
            for (size_t i = 0; i < entries_.size(); ++i) {
                if (i) s += ',';
                s += std::to_string(entries_[i]);
            }
            return s + ":" + tail_->to_string();
        }
        }
        return "?";
    }

    /// Inverse of to_string(); accepts a few aliases ("id", "fib").
    static RSpec parse(const std::string& text);

    friend bool operator==(const RSpec& x, const RSpec& y) {
        if (x.kind_ != y.kind_) return false;
        if (x.a_ != y.a_ || x.b_ != y.b_ || x.m_ != y.m_ || x.c_ != y.c_) return false;
        if (x.entries_ != y.entries_) return false;
        if (bool(x.tail_) != bool(y.tail_)) return false;
        return !x.tail_ || *x.tail_ == *y.tail_;
    }

private:
    explicit RSpec(Kind k) : kind_(k) {}

    Kind kind_;
    long long a_ = 0, b_ = 0, m_ = 0, c_ = 0;
    std::vector<long long> entries_;
    std::shared_ptr<RSpec> tail_;
};

namespace detail {
inline std::vector<std::string> split(const std::string& s, char sep, size_t max_parts = SIZE_MAX) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (out.size() + 1 < max_parts) {
        size_t next = s.find(sep, pos);
        if (next == std::string::npos) break;
        out.push_back(s.substr(pos, next - pos));
        pos = next + 1;
    }
    out.push_back(s.substr(pos));
    return out;
}

inline long long parse_ll(const std::string& s) {
    try {
        size_t used = 0;
        long long v = std::stoll(s, &used);
        if (used != s.size()) throw ParseError("trailing characters in integer '" + s + "'");
        return v;
    } catch (const std::invalid_argument&) {
        throw ParseError("not an integer: '" + s + "'");
    } catch (const std::out_of_range&) {
        throw ParseError("integer out of range: '" + s + "'");
    }
}
} // namespace detail

inline RSpec RSpec::parse(const std::string& text) {
    using detail::parse_ll;
    if (text == "identity" || text == "id") return identity();
    if (text == "pow2") return power_of_two();
    if (text == "fib" || text == "fibonacci") return fibonacci();
    auto parts = detail::split(text, ':');
    if (parts.empty()) throw ParseError("empty r-spec");
    if (parts[0] == "const" || parts[0] == "constant") {
        if (parts.size() != 2) throw ParseError("expected const:<r>");
        return constant(parse_ll(parts[1]));
    }
    if (parts[0] == "ind") {
        if (parts.size() >= 2 && parts[1] == "mod") {
            if (parts.size() != 6) throw ParseError("expected ind:mod:<m>:<c>:<a>:<b>");
            return indicator_mod(parse_ll(parts[2]), parse_ll(parts[3]), parse_ll(parts[4]),
                                 parse_ll(parts[5]));
        }
        if (parts.size() >= 2 && parts[1] == "pow") {
            if (parts.size() != 5) throw ParseError("expected ind:pow:<base>:<a>:<b>");
            return indicator_pow(parse_ll(parts[2]), parse_ll(parts[3]), parse_ll(parts[4]));
        }
        throw ParseError("unknown indicator form: " + text);
    }
    if (parts[0] == "table") {
        auto head = detail::split(text, ':', 3);
        if (head.size() != 3) throw ParseError("expected table:<v1,v2,...>:<tail spec>");
        std::vector<long long> entries;
        for (const auto& tok : detail::split(head[1], ','))
            entries.push_back(parse_ll(tok));
        return table(std::move(entries), parse(head[2]));
    }
    throw ParseError("unknown r-spec: '" + text + "'");
}

// ---------------------------------------------------------------------------
// MetaFibSeq: exact values n_1..n_K plus the implied normal-form history
// (n_k = 1 for every k <= 0).  window_lo records how far the generating
// recursion reached below zero; it is metadata only.
// ---------------------------------------------------------------------------
class MetaFibSeq {
public:
    static MetaFibSeq from_values(std::vector<BigInt> values, long long window_lo = 0) {
        if (window_lo > 0) throw InvalidSequence("window_lo must be <= 0");
        MetaFibSeq s;
        s.window_lo_ = window_lo;
        s.vals_ = std::move(values);
        s.prefix_.reserve(s.vals_.size() + 1);
        s.prefix_.push_back(0);
        const BigInt* prev = nullptr;
        for (const BigInt& v : s.vals_) {
            if (v < 1) throw InvalidSequence("sequence values must be >= 1");
            if (prev && v < *prev) throw InvalidSequence("sequence must be non-decreasing");
            if (!prev && v < 1) throw InvalidSequence("n_1 must be >= n_0 = 1");
            s.prefix_.push_back(s.prefix_.back() + v);
            prev = &v;
        }
        return s;
    }

    long long upper() const { return static_cast<long long>(vals_.size()); }
    long long window_lo() const { return window_lo_; }

    /// n_k; exactly 1 for every k <= 0 (normal form).
    const BigInt& n(long long k) const {
        static const BigInt one = 1;
        if (k <= 0) return one;
        if (k > upper()) throw InvalidSequence("index beyond sequence window");
        return vals_[size_t(k - 1)];
    }

    /// sum_{j=1..r} n_{k-j}, strictly increasing in r.
    BigInt backward_sum(long long k, long long r) const {
        if (r < 0) throw InvalidSequence("negative term count");
        long long lo = k - r; // lowest index in the sum
        long long ones = 0;   // terms with index <= 0 contribute 1 each
        if (lo <= 0) ones = std::min(r, -lo + 1);
        BigInt total = ones;
        long long from = std::max(1LL, lo), to = k - 1;
        if (from <= to) total += prefix_[size_t(to)] - prefix_[size_t(from - 1)];
        return total;
    }

    const std::vector<BigInt>& values() const { return vals_; }

    friend bool operator==(const MetaFibSeq& x, const MetaFibSeq& y) {
        return x.vals_ == y.vals_;
    }

private:
    MetaFibSeq() = default;
    std::vector<BigInt> vals_;
    std::vector<BigInt> prefix_;
    long long window_lo_ = 0;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// n_k for k = 1..K under the normal form, window reaching 1 - max r(k).
inline MetaFibSeq generate(const RSpec& r, long long K) {
    if (K < 1) throw InvalidRSpec("K must be >= 1");
    std::vector<BigInt> vals;
    vals.reserve(size_t(K));
    std::vector<BigInt> prefix{0}; // prefix sums of n_1..; indices <= 0 handled as ones
    long long max_r = 1;
    for (long long k = 1; k <= K; ++k) {
        long long rk = r.eval(k);
        if (rk < 1) throw InvalidRSpec("r(" + std::to_string(k) + ") < 1");
        max_r = std::max(max_r, rk);
        long long lo = k - rk;
        BigInt total = lo <= 0 ? std::min(rk, -lo + 1) : 0;
        long long from = std::max(1LL, lo);
        if (from <= k - 1) total += prefix[size_t(k - 1)] - prefix[size_t(from - 1)];
        prefix.push_back(prefix.back() + total);
        vals.push_back(std::move(total));
    }
    return MetaFibSeq::from_values(std::move(vals), 1 - max_r);
}

/// Recover r(k) for k = 1..K.  The backward partial sums are strictly
/// increasing, so the answer is unique when it exists; when the sums skip
/// n_k the sequence is not meta-Fibonacci and we report the gap.
inline std::vector<long long> infer_r(const MetaFibSeq& seq) {
    std::vector<long long> out;
    out.reserve(size_t(seq.upper()));
    for (long long k = 1; k <= seq.upper(); ++k) {
        const BigInt& target = seq.n(k);
        long long hi = 1;
        while (seq.backward_sum(k, hi) < target) {
            if (hi > (1LL << 60)) throw Unsupported("inferred r(k) out of range");
            hi *= 2;
        }
        long long lo = hi / 2 + 1; // backward_sum(k, hi/2) < target for hi > 1
        if (hi == 1) lo = 1;
        while (lo < hi) {
            long long mid = lo + (hi - lo) / 2;
            if (seq.backward_sum(k, mid) < target)
                lo = mid + 1;
            else
                hi = mid;
        }
        BigInt got = seq.backward_sum(k, lo);
        if (got != target) {
            BigInt under = lo > 1 ? seq.backward_sum(k, lo - 1) : BigInt(0);
            throw NotMetaFib(k, under.str(), got.str());
        }
        out.push_back(lo);
    }
    return out;
}

/// A maximal constant run n_start = ... = n_{start+length-1} with start >= 1.
struct Cascade {
    long long start = 0;
    long long length = 0;
    friend bool operator==(const Cascade&, const Cascade&) = default;
};

/// Maximal constant runs, clipped to start at k = 1 (runs at k <= 0 are the
/// trivial all-ones history and are excluded).
inline std::vector<Cascade> cascades(const MetaFibSeq& seq) {
    std::vector<Cascade> out;
    for (long long k = 1; k <= seq.upper(); ++k) {
        if (!out.empty() && seq.n(k) == seq.n(k - 1) && out.back().start + out.back().length == k) {
            ++out.back().length;
        } else {
            out.push_back({k, 1});
        }
    }
    return out;
}

struct BoundCheck {
    bool passed = true;
    std::optional<long long> first_violation;
};

/// n_k >= 2^(floor(k/(J+2))) whenever every cascade has length <= J.
inline BoundCheck check_lower_bound(const MetaFibSeq& seq, long long J) {
    if (J < 1) throw PreconditionFailed("J must be >= 1");
    for (const Cascade& c : cascades(seq))
        if (c.length > J)
            throw PreconditionFailed("cascade at k=" + std::to_string(c.start) + " has length " +
                                     std::to_string(c.length) + " > J=" + std::to_string(J));
    for (long long k = 1; k <= seq.upper(); ++k) {
        BigInt bound = BigInt(1) << unsigned(k / (J + 2));
        if (seq.n(k) < bound) return {false, k};
    }
    return {};
}

/// n_k <= (M+1)^k whenever r(k+1) <= M*r(k) + 1.  The hypothesis is checked
/// from k = 0 (where r(0) = 1), which the induction base n_1 <= M+1 needs.
inline BoundCheck check_upper_bound(const MetaFibSeq& seq, const RSpec& r, long long M) {
    if (M < 1) throw PreconditionFailed("M must be >= 1");
    for (long long k = 0; k < seq.upper(); ++k) {
        if (r.eval(k + 1) > M * r.eval(k) + 1)
            throw PreconditionFailed("r-growth hypothesis fails at k=" + std::to_string(k));
    }
    BigInt pow = 1;
    for (long long k = 1; k <= seq.upper(); ++k) {
        pow *= (M + 1);
        if (seq.n(k) > pow) return {false, k};
    }
    return {};
}

/// r(k+1) = r(k) + 1 forces n_{k+1} = 2 n_k.
inline BoundCheck check_doubling(const MetaFibSeq& seq, const RSpec& r) {
    std::vector<long long> inferred = infer_r(seq);
    for (long long k = 1; k <= seq.upper(); ++k)
        if (inferred[size_t(k - 1)] != r.eval(k))
            throw PreconditionFailed("spec does not generate this sequence (differs at k=" +
                                     std::to_string(k) + ")");
    for (long long k = 0; k < seq.upper(); ++k) {
        if (r.eval(k + 1) == r.eval(k) + 1 && seq.n(k + 1) != 2 * seq.n(k)) return {false, k + 1};
    }
    return {};
}

// ---------------------------------------------------------------------------
// Growth constants gamma_r: the unique root in [1,2) of
// p(z) = z^r - z^{r-1} - ... - z - 1.
// ---------------------------------------------------------------------------
struct GrowthConstant {
    long long r = 1;
    long double gamma = 1.0L;
    long double tol = 0.0L;
};

namespace detail {
// p(z) evaluated through (z^{r+1} - 2 z^r + 1)/(z - 1), which avoids the
// cancellation of the long alternating sum for large r.
inline long double rbonacci_poly(long long r, long double z) {
    if (r == 1) return z - 1.0L;
    long double zr = std::pow(z, static_cast<long double>(r));
    return (zr * (z - 2.0L) + 1.0L) / (z - 1.0L);
}
} // namespace detail

inline GrowthConstant gamma(long long r, long double tol = 1e-12L) {
    if (r < 1) throw PreconditionFailed("r must be >= 1");
    if (!(tol > 0)) throw PreconditionFailed("tol must be positive");
    if (r == 1) return {1, 1.0L, tol}; // p(z) = z - 1
    long double lo = 1.0L, hi = 2.0L - 1e-15L;
    long double mid = lo;
    for (int it = 0; it < 400; ++it) {
        mid = 0.5L * (lo + hi);
        long double v = detail::rbonacci_poly(r, mid);
        if (hi - lo <= tol && std::fabs(v) <= tol) break;
        if (v < 0)
            lo = mid;
        else
            hi = mid;
    }
    return {r, mid, tol};
}

struct GrowthReport {
    long double min_ratio = 0.0L;
    long double max_ratio = 0.0L;
    long long argmin = 0;
    long long argmax = 0;
    GrowthConstant constant;
};

/// Empirical constants for the asymptotic bounds: min and max of n_k / gamma_R^k
/// over the window.  Diagnostic only; the bounds' constants are unspecified.
inline GrowthReport growth_report(const MetaFibSeq& seq, long long R) {
    if (seq.upper() < 1) throw PreconditionFailed("empty window");
    GrowthReport rep;
    rep.constant = gamma(R);
    long double g = rep.constant.gamma;
    long double powg = 1.0L;
    for (long long k = 1; k <= seq.upper(); ++k) {
        powg *= g;
        long double ratio = seq.n(k).convert_to<long double>() / powg;
        if (k == 1 || ratio < rep.min_ratio) {
            rep.min_ratio = ratio;
            rep.argmin = k;
        }
        if (k == 1 || ratio > rep.max_ratio) {
            rep.max_ratio = ratio;
            rep.argmax = k;
        }
    }
    return rep;
}

} // namespace treedyn::metafib
