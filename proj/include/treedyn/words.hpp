#pragma once

// String-side oracle for the binary model.  The dynamics of the binary tree
// is the one-sided shift on bit streams, so a return of x_l at iterate n
// means the length-(l-n) prefix is also a suffix of the length-l prefix: the
// first return lands on the longest proper border.  The border array here is
// computed by brute force over all candidate borders and stays independent
// of the tree engine; an optimized failure-function version exists alongside
// for cross-checks, but the oracle is the naive one.

#include <random>
#include <string>
#include <vector>

#include "treedyn/errors.hpp"

namespace treedyn::words {

/// b(l) = length of the longest proper border of the length-l prefix,
/// for l = 1..word.size().  Brute force: try every candidate length.
inline std::vector<int> border_array(const std::string& word) {
    if (word.empty()) throw PreconditionFailed("border array needs a nonempty word");
    std::vector<int> b(word.size());
    for (size_t l = 1; l <= word.size(); ++l) {
        int best = 0;
        for (size_t j = l - 1; j >= 1; --j) {
            if (word.compare(0, j, word, l - j, j) == 0) {
                best = static_cast<int>(j);
                break;
            }
        }
        b[l - 1] = best;
    }
    return b;
}

/// The classic failure-function recurrence, for cross-checking the oracle.
inline std::vector<int> failure_array(const std::string& word) {
    std::vector<int> b(word.size(), 0);
    for (size_t i = 1; i < word.size(); ++i) {
        int k = b[i - 1];
        while (k > 0 && word[i] != word[size_t(k)]) k = b[size_t(k) - 1];
        if (word[i] == word[size_t(k)]) ++k;
        b[i] = k;
    }
    return b;
}

/// First return time of the end's level-l vertex on the binary model,
/// computed from the word alone: l - b(l).
inline long long oracle_first_return(const std::string& word, int l) {
    if (l < 1 || static_cast<size_t>(l) > word.size())
        throw PreconditionFailed("prefix length out of range");
    return l - border_array(word.substr(0, size_t(l))).back();
}

struct OracleChain {
    std::vector<int> levels;      // l(0) = 0, then the minimal-chain levels
    std::vector<long long> times; // n_k for k = 1..
    bool exhausted = false;       // scan left the word before reaching K
};

/// Minimal return chain levels on the binary model: l(k+1) is the least l
/// with b(l) = l(k).  Scans within the given word.
inline OracleChain oracle_minimal_chain(const std::string& word, int K) {
    OracleChain out;
    out.levels.push_back(0);
    std::vector<int> b = border_array(word);
    for (int k = 1; k <= K; ++k) {
        int target = out.levels.back();
        int found = -1;
        for (size_t l = size_t(target) + 1; l <= word.size(); ++l) {
            if (b[l - 1] == target) {
                found = static_cast<int>(l);
                break;
            }
        }
        if (found < 0) {
            out.exhausted = true;
            break;
        }
        out.levels.push_back(found);
        out.times.push_back(found - target);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Deterministic word generators for tests and the CLI.
// ---------------------------------------------------------------------------

/// Fibonacci word, convention S_1 = "0", S_2 = "01", S_{k+1} = S_k S_{k-1}:
/// 0100101001001...
inline std::string fibonacci_word(size_t len) {
    if (len == 0) return "";
    std::string prev = "0", cur = "01";
    if (len == 1) return "0";
    while (cur.size() < len) {
        std::string next = cur + prev;
        prev = std::move(cur);
        cur = std::move(next);
    }
    return cur.substr(0, len);
}

/// Thue-Morse word: bit i is the parity of the popcount of i.
inline std::string thue_morse_word(size_t len) {
    std::string out;
    out.reserve(len);
    for (size_t i = 0; i < len; ++i)
        out.push_back(__builtin_parityll(static_cast<unsigned long long>(i)) ? '1' : '0');
    return out;
}

inline std::string periodic_word(const std::string& period, size_t len) {
    if (period.empty()) throw PreconditionFailed("periodic word needs a nonempty period");
    std::string out;
    out.reserve(len);
    for (size_t i = 0; i < len; ++i) out.push_back(period[i % period.size()]);
    return out;
}

/// Reproducible across runs and platforms (std::mt19937 is pinned by the
/// standard).
inline std::string random_word(unsigned seed, size_t len) {
    std::mt19937 rng(seed);
    std::string out;
    out.reserve(len);
    for (size_t i = 0; i < len; ++i) out.push_back(rng() & 1 ? '1' : '0');
    return out;
}

/// Dispatcher: "fibonacci", "thue_morse", "periodic:<word>", "random:<seed>".
inline std::string generate_word(const std::string& name, size_t len) {
    if (len < 1) throw PreconditionFailed("word length must be >= 1");
    if (name == "fibonacci" || name == "fib") return fibonacci_word(len);
    if (name == "thue_morse" || name == "tm") return thue_morse_word(len);
    if (name.rfind("periodic:", 0) == 0) return periodic_word(name.substr(9), len);
    if (name.rfind("random:", 0) == 0)
        return random_word(static_cast<unsigned>(std::stoul(name.substr(7))), len);
    throw ParseError("unknown word generator '" + name + "'");
}

} // namespace treedyn::words
