#pragma once

// Built-in trees with dynamics: the canonical binary tree of a disconnected
// quadratic, the Z^2 counterexample factory, and user models loaded from
// JSON.  The binary and Z^2 models carry exact-knowledge hooks so chains can
// distinguish proven non-recurrence from an exhausted budget.

#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "treedyn/tree.hpp"

namespace treedyn::models {

using twd::EndAddress;
using twd::PeriodKnowledge;
using twd::TreeModel;
using twd::VertexRef;

// ---------------------------------------------------------------------------
// Canonical ends as (preperiod, primitive period, minimal preperiod) over a
// fixed alphabet.  Used by the decision hooks below.
// ---------------------------------------------------------------------------
namespace detail {

struct CanonicalWord {
    std::vector<int> pre;
    std::vector<int> per; // primitive
    bool pure() const { return pre.empty(); }
};

inline std::optional<CanonicalWord> canonicalize(const EndAddress& end) {
    if (!end.eventually_periodic()) return std::nullopt;
    CanonicalWord w{end.preperiod(), end.period()};
    // Reduce the period to its primitive root.
    size_t p = w.per.size();
    for (size_t d = 1; d <= p / 2; ++d) {
        if (p % d) continue;
        bool ok = true;
        for (size_t i = d; i < p && ok; ++i) ok = w.per[i] == w.per[i - d];
        if (ok) {
            w.per.resize(d);
            p = d;
            break;
        }
    }
    // Pull the preperiod back while its last digit matches the rotated tail.
    while (!w.pre.empty() && w.pre.back() == w.per.back()) {
        w.per.insert(w.per.begin(), w.per.back());
        w.per.pop_back();
        w.pre.pop_back();
    }
    return w;
}

} // namespace detail

// ---------------------------------------------------------------------------
// BinaryModel: levels l >= 1 hold the bit-words of length l, the parent
// drops the last bit and F drops the first; a single vertex per level l <= 0.
// H = 1.  This is the tree with dynamics of every quadratic polynomial with
// a disconnected Julia set.
// ---------------------------------------------------------------------------
class BinaryModel final : public TreeModel {
public:
    std::string name() const override { return "binary"; }
    int shift() const override { return 1; }
    bool rooted() const override { return true; }
    VertexRef root() const override { return {0, ""}; }

    VertexRef parent(const VertexRef& v) const override {
        if (v.level <= 0) return {v.level - 1, ""};
        check(v);
        return {v.level - 1, v.id.substr(0, v.id.size() - 1)};
    }

    std::vector<VertexRef> children(const VertexRef& v) const override {
        if (v.level < 0) return {{v.level + 1, ""}};
        check(v);
        return {{v.level + 1, v.id + "0"}, {v.level + 1, v.id + "1"}};
    }

    VertexRef apply(const VertexRef& v) const override {
        if (v.level <= 0) return {v.level - 1, ""};
        check(v);
        return {v.level - 1, v.id.substr(1)};
    }

    PeriodKnowledge end_period(const EndAddress& end) const override {
        auto w = detail::canonicalize(end);
        if (!w || !binary(*w)) return {};
        // F is the one-sided shift, so F^N fixes the end iff the digit
        // stream is purely periodic; the primitive period is then minimal.
        if (w->pure()) return {PeriodKnowledge::Kind::Periodic, (long long)w->per.size()};
        return {PeriodKnowledge::Kind::Aperiodic, 0};
    }

    // A first return of x_l lands on level b(l), the longest proper border
    // of the length-l digit prefix.  For an eventually periodic stream with
    // minimal preperiod a >= 1 and primitive tail period p, every border is
    // shorter than a + 3p: a longer border would overlay two rotations of
    // the tail for at least 2p positions (forcing the rotations to agree and
    // the stream to be purely periodic) or realign the tail with itself
    // (contradicting the minimality of a).  Borders <= a+3p occur p-periodically
    // in l once l >= 2a+3p, so scanning through 2a+4p decides the landing
    // set.  For a purely periodic stream b(l) = l - p from l = 2p on, which
    // settles any target by max(2p, target+p).
    std::optional<int> scan_bound(const EndAddress& end, int target) const override {
        auto w = detail::canonicalize(end);
        if (!w || !binary(*w)) return std::nullopt;
        int a = static_cast<int>(w->pre.size());
        int p = static_cast<int>(w->per.size());
        if (w->pure()) return std::max(2 * p, target + p) + p + 4;
        return 2 * a + 4 * p + 8;
    }

private:
    static bool binary(const detail::CanonicalWord& w) {
        for (int d : w.pre)
            if (d < 0 || d > 1) return false;
        for (int d : w.per)
            if (d < 0 || d > 1) return false;
        return true;
    }

    void check(const VertexRef& v) const {
        if (v.level <= 0) {
            if (!v.id.empty()) throw ModelError("binary base line vertex must have empty id");
            return;
        }
        if (static_cast<int>(v.id.size()) != v.level)
            throw ModelError("binary vertex id length must equal its level: " + v.str());
        for (char c : v.id)
            if (c != '0' && c != '1') throw ModelError("binary vertex id must be bits: " + v.str());
    }
};

// ---------------------------------------------------------------------------
// Z2Model: vertices (l, m) over Z^2 with parent (l-1, floor(m/2)) for m >= 0
// and (l-1, 0) for m < 0.  The automorphism variant F_H(l,m) = (l-H, m) and
// the infinite-to-one collapse G_H(l,m) = (l-H, 0) are both child-preserving.
// Not rooted; vertices with m < 0 are leaves and (l, 0) has infinitely many
// children (a sample is exposed).  A source of counterexamples.
// ---------------------------------------------------------------------------
class Z2Model final : public TreeModel {
public:
    enum class Variant { Automorphism, Collapse };

    Z2Model(Variant variant, int H) : variant_(variant), h_(H) {}

    std::string name() const override {
        return std::string("z2:") + (variant_ == Variant::Automorphism ? "F" : "G") + ":" +
               std::to_string(h_);
    }
    int shift() const override { return h_; }
    bool rooted() const override { return false; }

    VertexRef parent(const VertexRef& v) const override {
        long long m = coord(v);
        return make(v.level - 1, m >= 0 ? m / 2 : 0);
    }

    std::vector<VertexRef> children(const VertexRef& v) const override {
        long long m = coord(v);
        if (m > 0) return {make(v.level + 1, 2 * m), make(v.level + 1, 2 * m + 1)};
        if (m == 0)
            return {make(v.level + 1, 0), make(v.level + 1, 1), make(v.level + 1, -1),
                    make(v.level + 1, -2)};
        return {}; // m < 0: a leaf
    }

    bool children_complete(const VertexRef& v) const override { return coord(v) != 0; }

    VertexRef apply(const VertexRef& v) const override {
        long long m = coord(v);
        return make(v.level - h_, variant_ == Variant::Automorphism ? m : 0);
    }

    std::vector<VertexRef> sample(int depth) const override {
        std::vector<VertexRef> out;
        long long width = 1LL << std::min(depth, 6);
        for (int l = -depth; l <= depth; ++l)
            for (long long m = -width; m <= width; ++m) out.push_back(make(l, m));
        return out;
    }

    // The m-coordinate along an end is non-decreasing (m -> 2m + digit), so
    // returns exist exactly on the zero column; everything about returns of
    // an end is decidable from where its digits leave 0.
    PeriodKnowledge end_period(const EndAddress& end) const override {
        auto z = zero_prefix(end);
        if (!z) return {};
        // All-zero column: F and G both fix the end, minimal period 1.
        if (*z == INT_MAX) return {PeriodKnowledge::Kind::Periodic, 1};
        return {PeriodKnowledge::Kind::Aperiodic, 0};
    }

    std::optional<bool> proves_no_return(const EndAddress& end, int level) const override {
        if (variant_ == Variant::Collapse) return std::nullopt; // G always returns
        auto z = zero_prefix(end);
        if (!z) return std::nullopt;
        return level > *z; // m_level > 0 never recurs under the automorphism
    }

    std::optional<int> scan_bound(const EndAddress& end, int target) const override {
        if (h_ < 1) return std::nullopt;
        if (!zero_prefix(end)) return std::nullopt;
        // Whenever x_l returns at all, its first return lands on l - H, so
        // the only candidate for a landing on `target` is l = target + H.
        return target + h_;
    }

private:
    // Largest level with m = 0 along the end; INT_MAX when m stays 0 forever.
    // nullopt when the digits are not decidable (finite word or invalid).
    std::optional<int> zero_prefix(const EndAddress& end) const {
        if (!end.anchor() || !end.eventually_periodic()) return std::nullopt;
        long long m0 = std::strtoll(end.anchor()->id.c_str(), nullptr, 10);
        if (m0 != 0) {
            int z = -1;
            long long m = m0 / 2;
            while (m != 0) {
                m /= 2;
                --z;
            }
            return z;
        }
        const auto& pre = end.preperiod();
        for (size_t i = 0; i < pre.size(); ++i)
            if (pre[i] != 0) return static_cast<int>(i);
        for (size_t i = 0; i < end.period().size(); ++i)
            if (end.period()[i] != 0) return static_cast<int>(pre.size() + i);
        return INT_MAX;
    }

    static VertexRef make(int level, long long m) { return {level, std::to_string(m)}; }

    long long coord(const VertexRef& v) const {
        char* endp = nullptr;
        long long m = std::strtoll(v.id.c_str(), &endp, 10);
        if (endp == v.id.c_str() || *endp != '\0')
            throw ModelError("z2 vertex id must be an integer: " + v.str());
        return m;
    }

    Variant variant_;
    int h_;
};

// ---------------------------------------------------------------------------
// JsonModel: explicit vertices over a level window, loaded from the JSON
// format {"levels": [lo, hi], "vertices": [{"id","level","parent"}],
// "F": [{"from","to"}], "H": int, "periodic_extension": {...}}.
//
// When the lowest level holds exactly one vertex the model extends upward as
// that vertex's ancestor line.  A periodic extension with period 1 and a
// "wrap" bijection from the top level onto the level below replicates the
// top band downward indefinitely (requires H = 1); deeper periods are not
// supported.
// ---------------------------------------------------------------------------
class JsonModel final : public TreeModel {
public:
    static JsonModel from_json(const nlohmann::json& j, std::string model_name = "json") {
        JsonModel m;
        m.name_ = std::move(model_name);
        if (!j.contains("levels") || !j["levels"].is_array() || j["levels"].size() != 2)
            throw ParseError("model JSON needs \"levels\": [lo, hi]");
        m.lo_ = j["levels"][0].get<int>();
        m.hi_ = j["levels"][1].get<int>();
        if (m.lo_ > m.hi_) throw ParseError("levels range is empty");
        m.h_ = j.value("H", 1);

        for (const auto& v : j.at("vertices")) {
            int level = v.at("level").get<int>();
            std::string id = v.at("id").get<std::string>();
            if (level < m.lo_ || level > m.hi_) throw ParseError("vertex outside level window");
            auto key = std::make_pair(level, id);
            if (m.data_.count(key)) throw ParseError("duplicate vertex id at level: " + id);
            VData d;
            if (v.contains("parent")) d.parent = v["parent"].get<std::string>();
            m.data_[key] = d;
            m.order_.push_back(key);
        }
        for (const auto& [key, d] : m.data_) {
            if (!d.parent) continue;
            auto pkey = std::make_pair(key.first - 1, *d.parent);
            auto it = m.data_.find(pkey);
            if (it == m.data_.end())
                throw ParseError("parent of " + key.second + " not found one level up");
        }
        for (const auto& key : m.order_) {
            const VData& d = m.data_[key];
            if (d.parent)
                m.data_[{key.first - 1, *d.parent}].children.push_back(key.second);
        }
        if (j.contains("F"))
            for (const auto& e : j["F"]) {
                auto from = m.resolve(e.at("from"));
                auto to = m.resolve(e.at("to"));
                if (from.first - m.h_ != to.first)
                    throw ParseError("F entry does not drop H levels: " + from.second);
                m.data_[from].f = to;
            }

        m.rooted_ = true;
        for (int l = m.lo_; l <= std::min(0, m.hi_); ++l)
            if (m.level_ids(l).size() != 1) m.rooted_ = false;
        if (m.lo_ > 0) m.rooted_ = false;
        m.extend_up_ = m.level_ids(m.lo_).size() == 1;

        if (j.contains("periodic_extension")) {
            const auto& ext = j["periodic_extension"];
            if (ext.value("period", 1) != 1)
                throw Unsupported("periodic_extension: only period 1 is supported");
            if (m.h_ != 1)
                throw Unsupported("periodic_extension requires H = 1");
            Wrap w;
            for (const auto& [from, to] : ext.at("wrap").items()) {
                w.down[from] = to.get<std::string>();
                if (!w.up.emplace(to.get<std::string>(), from).second)
                    throw ParseError("periodic_extension wrap is not injective");
            }
            for (const auto& id : m.level_ids(m.hi_))
                if (!w.down.count(id))
                    throw ParseError("periodic_extension wrap misses top vertex " + id);
            for (const auto& id : m.level_ids(m.hi_ - 1))
                if (!w.up.count(id))
                    throw ParseError("periodic_extension wrap does not cover level below top");
            m.wrap_ = std::move(w);
        }
        return m;
    }

    std::string name() const override { return name_; }
    int shift() const override { return h_; }
    bool rooted() const override { return rooted_; }

    VertexRef root() const override {
        if (!rooted_) throw ModelError(name_ + " is not rooted");
        return {0, level_ids(0).front()};
    }

    VertexRef parent(const VertexRef& v) const override {
        if (v.level <= lo_ && is_line(v)) return {v.level - 1, line_id()};
        if (v.level > hi_) {
            auto [base, gen] = split_ext(v); // base lives at hi_
            const VData& d = at({hi_, base});
            if (!d.parent) throw ModelError("extended vertex without parent: " + v.str());
            return render(wrap_->up.at(*d.parent), gen - 1);
        }
        const VData& d = at({v.level, v.id});
        if (!d.parent) {
            if (extend_up_ && v.level == lo_) return {lo_ - 1, line_id()};
            throw ModelError("no parent declared for " + v.str());
        }
        return {v.level - 1, *d.parent};
    }

    std::vector<VertexRef> children(const VertexRef& v) const override {
        if (v.level < lo_ && is_line(v)) {
            if (v.level + 1 == lo_) return {{lo_, line_id()}};
            return {{v.level + 1, line_id()}};
        }
        std::string base = v.id;
        int gen = 0;
        int level = v.level;
        if (v.level > hi_) std::tie(base, gen) = split_ext(v);
        if (level == hi_ || gen >= 1) {
            if (!wrap_) return {};
            const VData& d = at({hi_ - 1, wrap_->down.at(base)});
            std::vector<VertexRef> out;
            for (const auto& c : d.children) out.push_back(render(c, gen + 1));
            return out;
        }
        const VData& d = at({level, base});
        std::vector<VertexRef> out;
        for (const auto& c : d.children) out.push_back({level + 1, c});
        return out;
    }

    VertexRef apply(const VertexRef& v) const override {
        if (v.level <= lo_ && is_line(v)) return {v.level - h_, line_id()};
        if (v.level > hi_) {
            auto [base, gen] = split_ext(v); // base at hi_, H = 1 with wrap
            const VData& d = at({hi_, base});
            if (!d.f) throw ModelError("no F declared for top vertex " + base);
            return render(wrap_->up.at(d.f->second), gen - 1);
        }
        const VData& d = at({v.level, v.id});
        if (!d.f) {
            if (extend_up_ && v.level - h_ < lo_) return {v.level - h_, line_id()};
            throw ModelError("no F declared for " + v.str());
        }
        return {d.f->first, d.f->second};
    }

    std::vector<VertexRef> sample(int depth) const override {
        std::vector<VertexRef> out;
        for (const auto& key : order_) {
            if (key.first >= -depth && key.first <= depth) out.push_back({key.first, key.second});
        }
        if (extend_up_)
            for (int l = lo_ - 1; l >= -depth; --l) out.push_back({l, line_id()});
        return out;
    }

    int window_lo() const { return lo_; }
    int window_hi() const { return hi_; }

private:
    struct VData {
        std::optional<std::string> parent;
        std::vector<std::string> children;
        std::optional<std::pair<int, std::string>> f;
    };
    struct Wrap {
        std::map<std::string, std::string> down; // id at hi -> id at hi-1
        std::map<std::string, std::string> up;   // inverse
    };

    const VData& at(const std::pair<int, std::string>& key) const {
        auto it = data_.find(key);
        if (it == data_.end())
            throw ModelError("unknown vertex (" + std::to_string(key.first) + "," + key.second +
                             ") in " + name_);
        return it->second;
    }

    std::vector<std::string> level_ids(int level) const {
        std::vector<std::string> out;
        for (const auto& key : order_)
            if (key.first == level) out.push_back(key.second);
        return out;
    }

    std::string line_id() const { return level_ids(lo_).front(); }
    bool is_line(const VertexRef& v) const {
        return extend_up_ && (v.level < lo_ ? v.id == line_id()
                                            : v.level == lo_ && v.id == line_id());
    }

    // Extended vertices render as "<base id>#<generation>" above the window.
    std::pair<std::string, int> split_ext(const VertexRef& v) const {
        if (!wrap_) throw ModelError("level above window without periodic extension: " + v.str());
        auto pos = v.id.rfind('#');
        if (pos == std::string::npos)
            throw ModelError("extended vertex id must carry a generation: " + v.str());
        int gen = std::atoi(v.id.c_str() + pos + 1);
        if (gen != v.level - hi_) throw ModelError("generation/level mismatch: " + v.str());
        return {v.id.substr(0, pos), gen};
    }

    VertexRef render(const std::string& base, int gen) const {
        if (gen == 0) return {hi_, base};
        return {hi_ + gen, base + "#" + std::to_string(gen)};
    }

    std::pair<int, std::string> resolve(const nlohmann::json& ref) const {
        if (ref.is_array() && ref.size() == 2)
            return {ref[0].get<int>(), ref[1].get<std::string>()};
        std::string id = ref.get<std::string>();
        std::optional<std::pair<int, std::string>> found;
        for (const auto& key : order_)
            if (key.second == id) {
                if (found) throw ParseError("vertex id '" + id + "' is ambiguous; use [level, id]");
                found = key;
            }
        if (!found) throw ParseError("unknown vertex id '" + id + "'");
        return *found;
    }

    std::string name_;
    int lo_ = 0, hi_ = 0, h_ = 1;
    bool rooted_ = false, extend_up_ = false;
    std::map<std::pair<int, std::string>, VData> data_;
    std::vector<std::pair<int, std::string>> order_;
    std::optional<Wrap> wrap_;
};

// ---------------------------------------------------------------------------
// Registry: "binary", "z2:F:<H>", "z2:G:<H>", "json:<path>".
// ---------------------------------------------------------------------------
inline std::shared_ptr<TreeModel> parse_model(const std::string& ref) {
    if (ref == "binary") return std::make_shared<BinaryModel>();
    if (ref.rfind("z2:", 0) == 0) {
        auto rest = ref.substr(3);
        auto colon = rest.find(':');
        if (colon == std::string::npos || (rest[0] != 'F' && rest[0] != 'G') || colon != 1)
            throw ParseError("expected z2:F:<H> or z2:G:<H>, got '" + ref + "'");
        int h = std::atoi(rest.c_str() + 2);
        auto variant = rest[0] == 'F' ? Z2Model::Variant::Automorphism : Z2Model::Variant::Collapse;
        return std::make_shared<Z2Model>(variant, h);
    }
    if (ref.rfind("json:", 0) == 0) {
        std::string path = ref.substr(5);
        std::ifstream in(path);
        if (!in) throw ParseError("cannot open model file '" + path + "'");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("bad model JSON in '" + path + "': " + e.what());
        }
        return std::make_shared<JsonModel>(JsonModel::from_json(j, ref));
    }
    throw ParseError("unknown model '" + ref + "' (try binary, z2:F:<H>, z2:G:<H>, json:<path>)");
}

} // namespace treedyn::models
