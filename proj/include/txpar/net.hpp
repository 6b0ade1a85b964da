#pragma once

#include "txpar/io.hpp"
#include "txpar/tx.hpp"

#include <algorithm>
#include <compare>
#include <cstddef>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace txpar {

// Relations between block positions, as sets of 1-based index pairs.
using IndexRelation = std::set<std::pair<std::size_t, std::size_t>>;

inline IndexRelation symmetric_closure(const IndexRelation& rel) {
    IndexRelation out = rel;
    for (const auto& [i, j] : rel) out.emplace(j, i);
    return out;
}

class RelationReflexive : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

class RelationNotSymmetric : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// One block position rendered as a net transition.
struct Transition {
    Transaction tx;
    std::size_t index{};  // 1-based position in the source block

    std::string label() const { return "t" + std::to_string(index); }

    friend bool operator==(const Transition& a, const Transition& b) {
        return a.index == b.index && a.tx == b.tx;
    }
};

// Places: (*,t) holds a token while t has not run, (t,*) after it has,
// and (t,t') withholds t' until t has run.
struct Place {
    enum class Kind { start, end, order };

    Kind kind{Kind::start};
    std::size_t a{};  // the transition; for order places, the earlier one
    std::size_t b{};  // the later transition of an order place, else 0

    static Place start(std::size_t t) { return Place{Kind::start, t, 0}; }
    static Place end(std::size_t t) { return Place{Kind::end, t, 0}; }
    static Place order(std::size_t from, std::size_t to) { return Place{Kind::order, from, to}; }

    std::string label() const {
        switch (kind) {
            case Kind::start: return "(*,t" + std::to_string(a) + ")";
            case Kind::end: return "(t" + std::to_string(a) + ",*)";
            case Kind::order:
                return "(t" + std::to_string(a) + ",t" + std::to_string(b) + ")";
        }
        return "?";
    }

    friend auto operator<=>(const Place&, const Place&) = default;
};

// Multiset of places. Construction nets keep every count at 0 or 1;
// hand-built nets may exceed that.
class Marking {
  public:
    Marking() = default;

    int count(const Place& p) const {
        auto it = tokens_.find(p);
        return it == tokens_.end() ? 0 : it->second;
    }

    void add(const Place& p, int delta = 1) {
        int& slot = tokens_[p];
        slot += delta;
        if (slot < 0) throw std::logic_error("negative token count at " + p.label());
        if (slot == 0) tokens_.erase(p);
    }

    const std::map<Place, int>& tokens() const { return tokens_; }
    bool empty() const { return tokens_.empty(); }

    friend bool operator==(const Marking& a, const Marking& b) {
        return a.tokens_ == b.tokens_;
    }
    friend bool operator!=(const Marking& a, const Marking& b) { return !(a == b); }
    friend bool operator<(const Marking& a, const Marking& b) {
        return a.tokens_ < b.tokens_;
    }

  private:
    std::map<Place, int> tokens_;
};

// Steps are sets of transition indices fired simultaneously.
using Step = std::set<std::size_t>;

inline std::string step_to_string(const Step& u) {
    std::string out = "{";
    for (auto it = u.begin(); it != u.end(); ++it) {
        if (it != u.begin()) out += ",";
        out += "t" + std::to_string(*it);
    }
    return out + "}";
}

// Arcs are kept as relation pairs, so every weight is 0 or 1 by
// representation. Hand-built nets may still break the other
// occurrence-net conditions; validate_occurrence_net reports how.
struct Net {
    std::vector<Transition> transitions;
    std::set<Place> places;
    std::set<std::pair<Place, std::size_t>> place_to_transition;
    std::set<std::pair<std::size_t, Place>> transition_to_place;
    Marking initial;

    const Transition* transition(std::size_t index) const {
        for (const auto& t : transitions)
            if (t.index == index) return &t;
        return nullptr;
    }

    std::vector<Place> pre(std::size_t t) const {
        std::vector<Place> out;
        for (const auto& [p, u] : place_to_transition)
            if (u == t) out.push_back(p);
        return out;
    }

    std::vector<Place> post(std::size_t t) const {
        std::vector<Place> out;
        for (const auto& [u, p] : transition_to_place)
            if (u == t) out.push_back(p);
        return out;
    }

    std::vector<std::size_t> producers(const Place& p) const {
        std::vector<std::size_t> out;
        for (const auto& [t, q] : transition_to_place)
            if (q == p) out.push_back(t);
        return out;
    }

    std::vector<std::size_t> consumers(const Place& p) const {
        std::vector<std::size_t> out;
        for (const auto& [q, t] : place_to_transition)
            if (q == p) out.push_back(t);
        return out;
    }

    std::size_t arc_count() const {
        return place_to_transition.size() + transition_to_place.size();
    }

    IndexRelation order_places() const {
        IndexRelation out;
        for (const auto& p : places)
            if (p.kind == Place::Kind::order) out.emplace(p.a, p.b);
        return out;
    }

    friend bool operator==(const Net& a, const Net& b) {
        return a.transitions == b.transitions && a.places == b.places &&
               a.place_to_transition == b.place_to_transition &&
               a.transition_to_place == b.transition_to_place && a.initial == b.initial;
    }
};

// Builds the net whose transitions are the block positions and whose
// order places (t_i, t_j) exist exactly for i < j with (i,j) not in rel.
// rel must be symmetric and irreflexive over positions, and must not
// relate two occurrences of one transaction: a transaction is never
// independent of itself.
inline Net build_net(const Blockchain& b, const IndexRelation& rel) {
    const std::size_t n = b.size();
    for (const auto& [i, j] : rel) {
        if (i < 1 || i > n || j < 1 || j > n)
            throw std::invalid_argument("relation index out of range: (" + std::to_string(i) +
                                        "," + std::to_string(j) + ")");
        if (i == j)
            throw RelationReflexive("relation contains (" + std::to_string(i) + "," +
                                    std::to_string(i) + ")");
        if (b[i - 1] == b[j - 1])
            throw RelationReflexive("relation relates two occurrences of one transaction: (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")");
        if (!rel.count({j, i}))
            throw RelationNotSymmetric("relation contains (" + std::to_string(i) + "," +
                                       std::to_string(j) + ") but not its mirror");
    }

    Net net;
    for (std::size_t i = 1; i <= n; ++i) {
        net.transitions.push_back(Transition{b[i - 1], i});
        Place s = Place::start(i);
        Place e = Place::end(i);
        net.places.insert(s);
        net.places.insert(e);
        net.place_to_transition.emplace(s, i);
        net.transition_to_place.emplace(i, e);
        net.initial.add(s);
    }
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = i + 1; j <= n; ++j) {
            if (rel.count({i, j})) continue;
            Place o = Place::order(i, j);
            net.places.insert(o);
            net.transition_to_place.emplace(i, o);
            net.place_to_transition.emplace(o, j);
        }
    }
    return net;
}

struct ValidationResult {
    bool valid{true};
    std::vector<std::string> violations;
};

namespace detail {

// Graph node for the acyclicity check: a place or a transition index.
struct NetNode {
    bool is_place{};
    Place place;
    std::size_t transition{};

    static NetNode of(const Place& p) { return NetNode{true, p, 0}; }
    static NetNode of(std::size_t t) { return NetNode{false, Place{}, t}; }

    std::string label() const {
        return is_place ? place.label() : "t" + std::to_string(transition);
    }

    friend auto operator<=>(const NetNode&, const NetNode&) = default;
};

}  // namespace detail

// Checks the occurrence-net conditions: places have at most one consumer;
// places outside the initial marking have exactly one producer and marked
// places none; arc weights stay at most one (guaranteed here by the
// relation representation); the flow relation is acyclic.
inline ValidationResult validate_occurrence_net(const Net& net) {
    ValidationResult res;
    auto report = [&](std::string msg) {
        res.valid = false;
        res.violations.push_back(std::move(msg));
    };

    std::set<std::size_t> indices;
    for (const auto& t : net.transitions)
        if (!indices.insert(t.index).second)
            report("duplicate transition index t" + std::to_string(t.index));

    for (const auto& [p, t] : net.place_to_transition) {
        if (!net.places.count(p)) report("arc from unknown place " + p.label());
        if (!indices.count(t)) report("arc into unknown transition t" + std::to_string(t));
    }
    for (const auto& [t, p] : net.transition_to_place) {
        if (!net.places.count(p)) report("arc into unknown place " + p.label());
        if (!indices.count(t)) report("arc from unknown transition t" + std::to_string(t));
    }
    for (const auto& [p, cnt] : net.initial.tokens())
        if (cnt > 0 && !net.places.count(p)) report("marked place not in net: " + p.label());

    for (const auto& p : net.places) {
        const std::size_t consumers = net.consumers(p).size();
        const std::size_t producers = net.producers(p).size();
        if (consumers > 1)
            report("place " + p.label() + " has " + std::to_string(consumers) + " consumers");
        const bool marked = net.initial.count(p) > 0;
        if (marked && producers != 0)
            report("marked place " + p.label() + " has " + std::to_string(producers) +
                   " producers");
        if (!marked && producers != 1)
            report("unmarked place " + p.label() + " has " + std::to_string(producers) +
                   " producers");
    }

    // Acyclicity by depth-first search over places and transitions; a back
    // edge closes a cycle, reported as the gray-stack segment it spans.
    using detail::NetNode;
    std::map<NetNode, std::set<NetNode>> succ;
    for (const auto& p : net.places) succ.emplace(NetNode::of(p), std::set<NetNode>{});
    for (const auto& t : net.transitions) succ.emplace(NetNode::of(t.index), std::set<NetNode>{});
    for (const auto& [p, t] : net.place_to_transition) {
        succ.emplace(NetNode::of(t), std::set<NetNode>{});
        succ[NetNode::of(p)].insert(NetNode::of(t));
    }
    for (const auto& [t, p] : net.transition_to_place) {
        succ.emplace(NetNode::of(p), std::set<NetNode>{});
        succ[NetNode::of(t)].insert(NetNode::of(p));
    }

    enum class Color { white, gray, black };
    std::map<NetNode, Color> color;
    std::vector<NetNode> stack;
    std::vector<NetNode> cycle;
    auto dfs = [&](auto&& self, const NetNode& x) -> bool {
        color[x] = Color::gray;
        stack.push_back(x);
        for (const auto& y : succ[x]) {
            Color c = color.count(y) ? color[y] : Color::white;
            if (c == Color::gray) {
                auto it = std::find(stack.begin(), stack.end(), y);
                cycle.assign(it, stack.end());
                cycle.push_back(y);
                return true;
            }
            if (c == Color::white && self(self, y)) return true;
        }
        color[x] = Color::black;
        stack.pop_back();
        return false;
    };
    for (const auto& [x, ys] : succ) {
        Color c = color.count(x) ? color[x] : Color::white;
        if (c == Color::white && dfs(dfs, x)) break;
    }
    if (!cycle.empty()) {
        std::string msg = "cycle:";
        for (std::size_t i = 0; i < cycle.size(); ++i)
            msg += (i ? " -> " : " ") + cycle[i].label();
        report(msg);
    }

    return res;
}

// Transitions whose presets the marking covers, in index order.
inline std::vector<std::size_t> enabled(const Net& net, const Marking& m) {
    std::vector<std::size_t> out;
    for (const auto& t : net.transitions) {
        bool ok = true;
        for (const auto& p : net.pre(t.index)) {
            if (m.count(p) < 1) {
                ok = false;
                break;
            }
        }
        if (ok) out.push_back(t.index);
    }
    std::sort(out.begin(), out.end());
    return out;
}

class StepNotEnabled : public std::runtime_error {
  public:
    StepNotEnabled(std::string msg, std::vector<Place> missing_places)
        : std::runtime_error(std::move(msg)), missing(std::move(missing_places)) {}

    std::vector<Place> missing;
};

// Fires a whole step: the marking must cover the multiset sum of the
// member presets, then loses that sum and gains the postsets.
inline Marking fire_step(const Net& net, const Marking& m, const Step& u) {
    if (u.empty()) throw std::invalid_argument("cannot fire an empty step");
    for (std::size_t t : u)
        if (!net.transition(t))
            throw std::invalid_argument("unknown transition t" + std::to_string(t));

    std::map<Place, int> need;
    for (std::size_t t : u)
        for (const auto& p : net.pre(t)) ++need[p];

    std::vector<Place> missing;
    for (const auto& [p, k] : need)
        if (m.count(p) < k) missing.push_back(p);
    if (!missing.empty()) {
        std::string msg = "step " + step_to_string(u) + " not enabled; missing";
        for (const auto& p : missing) msg += " " + p.label();
        throw StepNotEnabled(std::move(msg), std::move(missing));
    }

    Marking out = m;
    for (const auto& [p, k] : need) out.add(p, -k);
    for (std::size_t t : u)
        for (const auto& p : net.post(t)) out.add(p);
    return out;
}

class Stuck : public std::runtime_error {
  public:
    Stuck(std::string msg, std::vector<std::size_t> remaining_transitions)
        : std::runtime_error(std::move(msg)), remaining(std::move(remaining_transitions)) {}

    std::vector<std::size_t> remaining;
};

// Fires the entire enabled set at each round until every transition has
// fired once. Simultaneously enabled transitions of a construction net
// have disjoint presets, so the whole set is a legal step. max_width > 0
// caps the step size; the lowest indices go first.
inline std::vector<Step> greedy_maximal_schedule(const Net& net, std::size_t max_width = 0) {
    Marking m = net.initial;
    std::set<std::size_t> fired;
    std::vector<Step> schedule;
    while (fired.size() < net.transitions.size()) {
        std::vector<std::size_t> en = enabled(net, m);
        std::erase_if(en, [&](std::size_t t) { return fired.count(t) != 0; });
        if (en.empty()) {
            std::vector<std::size_t> remaining;
            for (const auto& t : net.transitions)
                if (!fired.count(t.index)) remaining.push_back(t.index);
            std::string msg = "schedule stuck; remaining";
            for (std::size_t t : remaining) msg += " t" + std::to_string(t);
            throw Stuck(std::move(msg), std::move(remaining));
        }
        if (max_width > 0 && en.size() > max_width) en.resize(max_width);
        Step u(en.begin(), en.end());
        m = fire_step(net, m, u);
        fired.insert(u.begin(), u.end());
        schedule.push_back(std::move(u));
    }
    return schedule;
}

enum class NetFormat { dot, structured };

// Structured form: {"transitions":[{"index":i,"tx":{...}}],
// "order_places":[[i,j]]}; Start and End places are implicit.
inline Json net_to_structured(const Net& net) {
    Json ts = Json::array();
    for (const auto& t : net.transitions)
        ts.push_back(Json{{"index", t.index}, {"tx", tx_to_json(t.tx)}});
    Json orders = Json::array();
    for (const auto& [i, j] : net.order_places()) orders.push_back(Json::array({i, j}));
    return Json{{"transitions", ts}, {"order_places", orders}};
}

inline Net net_from_structured(const Json& j) {
    if (!j.is_object() || !j.contains("transitions") || !j.at("transitions").is_array())
        throw IoError("net document: expected {transitions, order_places}");
    Blockchain b;
    std::size_t expect = 1;
    for (const auto& entry : j.at("transitions")) {
        if (!entry.is_object() || !entry.contains("index") || !entry.contains("tx"))
            throw IoError("net document: malformed transition entry");
        if (entry.at("index").get<std::size_t>() != expect)
            throw IoError("net document: transition indices must run 1..n in order");
        ++expect;
        b.push_back(tx_from_json(entry.at("tx"), "net transition"));
    }
    IndexRelation orders;
    if (j.contains("order_places")) {
        for (const auto& entry : j.at("order_places")) {
            if (!entry.is_array() || entry.size() != 2)
                throw IoError("net document: order places are [i,j] pairs");
            orders.emplace(entry[0].get<std::size_t>(), entry[1].get<std::size_t>());
        }
    }
    // Rebuild through the construction: rel holds the i<j pairs without an
    // order place, mirrored to stay symmetric.
    IndexRelation rel;
    for (std::size_t i = 1; i <= b.size(); ++i)
        for (std::size_t k = i + 1; k <= b.size(); ++k)
            if (!orders.count({i, k})) rel.emplace(i, k);
    for (const auto& [i, k] : orders)
        if (i >= k || k > b.size() || i < 1)
            throw IoError("net document: order place out of range or misordered");
    Net net = build_net(b, symmetric_closure(rel));
    if (net.order_places() != orders) throw IoError("net document: inconsistent order places");
    return net;
}

inline std::string export_net(const Net& net, NetFormat format) {
    if (format == NetFormat::structured) return net_to_structured(net).dump(2) + "\n";
    std::ostringstream out;
    out << "digraph net {\n  rankdir=LR;\n";
    for (const auto& p : net.places) {
        out << "  \"" << p.label() << "\" [shape=circle";
        if (net.initial.count(p) > 0) out << ", style=filled, fillcolor=gray80";
        out << "];\n";
    }
    for (const auto& t : net.transitions)
        out << "  \"" << t.label() << "\" [shape=box, label=\"" << t.label() << ": "
            << t.tx.to_string() << "\"];\n";
    for (const auto& [p, t] : net.place_to_transition)
        out << "  \"" << p.label() << "\" -> \"t" << t << "\";\n";
    for (const auto& [t, p] : net.transition_to_place)
        out << "  \"t" << t << "\" -> \"" << p.label() << "\";\n";
    out << "}\n";
    return out.str();
}

inline Net import_net(const std::string& text) {
    try {
        return net_from_structured(Json::parse(text));
    } catch (const Json::parse_error& e) {
        throw IoError(std::string("net document: ") + e.what());
    }
}

}  // namespace txpar
