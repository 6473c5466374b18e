#pragma once

// Shared helpers for the test suites: deterministic random generators and
// independent oracles kept deliberately naive.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "treedyn/metafib.hpp"
#include "treedyn/tree.hpp"

namespace testsupport {

using treedyn::metafib::BigInt;
using treedyn::metafib::RSpec;

// FNV-1a, pinned so hash-driven models are identical on every platform.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// A lazy pseudo-random rooted tree with dynamics (H = 1): arities in
// [1, max_branch] and the child-index maps induced by F are both driven by
// a seed hash, so the model is pure, infinite in depth and reproducible.
// Level <= 0 is a single line; level l >= 1 vertices are digit strings.
class HashModel final : public treedyn::twd::TreeModel {
public:
    HashModel(std::uint64_t seed, int max_branch) : seed_(seed), max_branch_(max_branch) {}

    std::string name() const override { return "hash:" + std::to_string(seed_); }
    int shift() const override { return 1; }
    bool rooted() const override { return true; }
    treedyn::twd::VertexRef root() const override { return {0, ""}; }

    treedyn::twd::VertexRef parent(const treedyn::twd::VertexRef& v) const override {
        if (v.level <= 0) return {v.level - 1, ""};
        return {v.level - 1, v.id.substr(0, v.id.size() - 1)};
    }

    std::vector<treedyn::twd::VertexRef> children(
        const treedyn::twd::VertexRef& v) const override {
        if (v.level < 0) return {{v.level + 1, ""}};
        int n = arity(v);
        std::vector<treedyn::twd::VertexRef> out;
        for (int i = 0; i < n; ++i) out.push_back({v.level + 1, v.id + char('0' + i)});
        return out;
    }

    treedyn::twd::VertexRef apply(const treedyn::twd::VertexRef& v) const override {
        if (v.level <= 0) return {v.level - 1, ""};
        if (v.level == 1) return {0, ""};
        treedyn::twd::VertexRef p = parent(v);
        treedyn::twd::VertexRef fp = apply(p);
        auto kids = children(fp);
        std::uint64_t h = fnv1a("g|" + std::to_string(seed_) + "|" + std::to_string(p.level) +
                                "|" + p.id + "|" + v.id.substr(v.id.size() - 1));
        return kids[h % kids.size()];
    }

private:
    int arity(const treedyn::twd::VertexRef& v) const {
        std::uint64_t h = fnv1a("a|" + std::to_string(seed_) + "|" + std::to_string(v.level) +
                                "|" + v.id);
        return 1 + int(h % std::uint64_t(max_branch_));
    }

    std::uint64_t seed_;
    int max_branch_;
};

// A valid end on `m`: digits chosen by selector % arity while walking down.
inline treedyn::twd::EndAddress random_end(const treedyn::twd::TreeModel& m, std::mt19937& rng,
                                           int depth) {
    std::vector<int> digits;
    treedyn::twd::VertexRef v = m.root();
    for (int l = 0; l < depth; ++l) {
        auto kids = m.children(v);
        int d = int(rng() % kids.size());
        digits.push_back(d);
        v = kids[size_t(d)];
    }
    return treedyn::twd::EndAddress::finite(std::move(digits));
}

// Fibonacci numbers u_1, u_2, ... = 1, 1, 2, 3, 5, ... by a two-term loop.
inline BigInt fibonacci_number(long long m) {
    BigInt a = 1, b = 1; // u_1, u_2
    if (m <= 2) return 1;
    for (long long i = 3; i <= m; ++i) {
        BigInt c = a + b;
        a = b;
        b = c;
    }
    return b;
}

// Run-length encoding of n_1..n_K, the oracle for cascade extraction.
inline std::vector<std::pair<long long, long long>> run_lengths(const std::vector<BigInt>& vals) {
    std::vector<std::pair<long long, long long>> runs;
    for (size_t i = 0; i < vals.size(); ++i) {
        if (!runs.empty() && vals[i] == vals[i - 1])
            ++runs.back().second;
        else
            runs.push_back({static_cast<long long>(i + 1), 1});
    }
    return runs;
}

inline RSpec random_rspec(std::mt19937& rng, long long K) {
    auto pick = [&](long long lo, long long hi) {
        return std::uniform_int_distribution<long long>(lo, hi)(rng);
    };
    switch (pick(0, 5)) {
    case 0: return RSpec::constant(pick(1, 6));
    case 1: return RSpec::identity();
    case 2: return RSpec::indicator_mod(pick(2, 7), pick(0, 6), pick(1, 5), pick(1, 5));
    case 3: return RSpec::indicator_pow(pick(2, 4), pick(1, 5), pick(1, 5));
    case 4: {
        if (K <= 40) return RSpec::power_of_two();
        return RSpec::constant(pick(1, 6));
    }
    default: {
        std::vector<long long> entries;
        long long len = pick(1, std::max<long long>(1, K));
        for (long long i = 0; i < len; ++i) entries.push_back(pick(1, 10));
        return RSpec::table(std::move(entries), RSpec::constant(pick(1, 4)));
    }
    }
}

} // namespace testsupport
