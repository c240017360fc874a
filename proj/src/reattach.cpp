#include "chainnet/reattach.hpp"

#include "chainnet/errors.hpp"
#include "chainnet/netting_group.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <set>

namespace chainnet {

namespace {

using nlohmann::json;

using EdgeIndex = std::map<std::pair<AgentId, AgentId>, const NettedEdge*>;

EdgeIndex index_edges(const std::vector<NettedEdge>& edges) {
    EdgeIndex by_pair;
    for (const NettedEdge& e : edges)
        if (!by_pair.emplace(std::make_pair(e.from, e.to), &e).second)
            throw InputError("duplicate netted edge " + e.from.value + "->" + e.to.value);
    return by_pair;
}

// Carves one group's steps out of the netted edges. `nodes` is in open form
// (no repeated closure node); `loop` wraps the last step back to the front.
NettingGroup build_group(std::string id, GroupKind kind, std::vector<TfnNode> nodes,
                         bool loop, const Rational& volume, const EdgeIndex& by_pair) {
    if (volume <= 0)
        throw ValidationError("group " + id + ": nonpositive volume");
    if (nodes.size() < 2)
        throw ValidationError("group " + id + ": fewer than two nodes");

    NettingGroup group;
    group.id = std::move(id);
    group.kind = kind;
    group.loop = loop;
    group.nodes = std::move(nodes);

    const size_t steps = loop ? group.nodes.size() : group.nodes.size() - 1;
    for (size_t i = 0; i < steps; ++i) {
        const AgentId& from = group.nodes[i].agent;
        const AgentId& to = group.nodes[(i + 1) % group.nodes.size()].agent;
        auto it = by_pair.find({from, to});
        if (it == by_pair.end())
            throw ValidationError("group " + group.id + ": step " + from.value + "->" +
                                  to.value + " is not backed by a netted edge");
        const NettedEdge& parent = *it->second;
        AssignedTrade trade;
        trade.from = from;
        trade.to = to;
        trade.t_units = volume;
        trade.unit_price = parent.unit_price;
        trade.m_amount = volume * parent.unit_price;
        trade.origin_pair = {parent.from, parent.to};
        trade.lambda = volume / parent.t_units;
        group.trades.push_back(std::move(trade));
    }
    refresh_obligations(group);
    return group;
}

void check_reconstruction(const std::vector<NettingGroup>& groups,
                          const EdgeIndex& by_pair) {
    std::map<std::pair<AgentId, AgentId>, Rational> carved;
    for (const NettingGroup& group : groups)
        for (const AssignedTrade& trade : group.trades)
            carved[{trade.from, trade.to}] += trade.t_units;
    for (const auto& [pair, edge] : by_pair) {
        auto it = carved.find(pair);
        const Rational got = it == carved.end() ? Rational(0) : it->second;
        if (got != edge->t_units)
            throw ValidationError("decomposition does not reconstruct netted edge " +
                                  pair.first.value + "->" + pair.second.value + ": " +
                                  format_rational(got) + " != " +
                                  format_rational(edge->t_units));
    }
}

}  // namespace

std::vector<NettingGroup> attach_m(const Decomposition& decomposition,
                                   const std::vector<NettedEdge>& edges) {
    const EdgeIndex by_pair = index_edges(edges);
    std::vector<NettingGroup> groups;

    size_t n = 0;
    for (const Chain& chain : decomposition.chains)
        groups.push_back(build_group("chain-" + std::to_string(++n), GroupKind::chain,
                                     chain.nodes, false, chain.t_volume, by_pair));
    n = 0;
    for (const Cycle& cycle : decomposition.cycles) {
        if (cycle.nodes.size() < 2 || cycle.nodes.front() != cycle.nodes.back())
            throw ValidationError("cycle node list is not closed");
        std::vector<TfnNode> open(cycle.nodes.begin(), cycle.nodes.end() - 1);
        groups.push_back(build_group("cycle-" + std::to_string(++n), GroupKind::cycle,
                                     std::move(open), true, cycle.t_volume, by_pair));
    }
    check_reconstruction(groups, by_pair);
    return groups;
}

std::map<std::pair<AgentId, AgentId>, std::vector<LambdaEntry>> lambda_table(
    const std::vector<NettingGroup>& groups) {
    std::map<std::pair<AgentId, AgentId>, std::vector<LambdaEntry>> table;
    for (const NettingGroup& group : groups)
        for (const AssignedTrade& trade : group.trades) {
            if (trade.lambda <= 0 || trade.lambda > 1)
                throw ValidationError("group " + group.id + ": fraction outside (0, 1]");
            table[trade.origin_pair].push_back({group.id, trade.lambda});
        }
    for (const auto& [pair, entries] : table) {
        Rational sum;
        for (const LambdaEntry& entry : entries) sum += entry.lambda;
        if (sum != 1)
            throw ValidationError("fractions of " + pair.first.value + "->" +
                                  pair.second.value + " sum to " + format_rational(sum));
    }
    return table;
}

std::vector<NettingGroup> groups_from_fixture(const std::string& text,
                                              const std::vector<NettedEdge>& edges) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("invalid fixture JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("groups") || !doc["groups"].is_array())
        throw InputError("fixture must be an object with a 'groups' array");

    const EdgeIndex by_pair = index_edges(edges);
    std::vector<NettingGroup> groups;
    std::set<std::string> ids;
    for (const json& entry : doc["groups"]) {
        if (!entry.is_object()) throw InputError("fixture group is not an object");
        for (const char* key : {"id", "kind", "t_volume", "nodes"})
            if (!entry.contains(key))
                throw InputError("fixture group missing key '" + std::string(key) + "'");

        const std::string id = entry["id"].get<std::string>();
        if (id.empty() || !ids.insert(id).second)
            throw InputError("fixture group id '" + id + "' is empty or repeated");
        const std::string kind_name = entry["kind"].get<std::string>();
        if (kind_name != "chain" && kind_name != "cycle")
            throw InputError("fixture group " + id + ": unknown kind '" + kind_name + "'");
        const bool is_cycle = kind_name == "cycle";

        Rational volume;
        try {
            volume = entry["t_volume"].is_string()
                         ? parse_rational(entry["t_volume"].get<std::string>())
                         : parse_rational(entry["t_volume"].dump());
        } catch (const InputError& e) {
            throw InputError("fixture group " + id + ": " + e.what());
        }
        if (volume <= 0) throw InputError("fixture group " + id + ": nonpositive volume");

        std::vector<TfnNode> nodes;
        for (const json& n : entry["nodes"]) {
            if (!n.is_object() || !n.contains("agent") || !n.contains("kind"))
                throw InputError("fixture group " + id + ": bad node entry");
            auto kind = parse_node_kind(n["kind"].get<std::string>());
            if (!kind || *kind == NodeKind::Source || *kind == NodeKind::Sink)
                throw InputError("fixture group " + id + ": bad node kind");
            nodes.push_back({AgentId{n["agent"].get<std::string>()}, *kind});
        }

        if (is_cycle) {
            if (nodes.size() < 4 || nodes.front() != nodes.back())
                throw InputError("fixture cycle " + id + ": node list must be closed");
            nodes.pop_back();
            for (const TfnNode& node : nodes)
                if (node.kind != NodeKind::BT)
                    throw InputError("fixture cycle " + id + ": nodes must be BT");
        } else {
            if (nodes.size() < 2)
                throw InputError("fixture chain " + id + ": fewer than two nodes");
            if (nodes.front().kind != NodeKind::NS || nodes.back().kind != NodeKind::NR)
                throw InputError("fixture chain " + id +
                                 ": must run from an NS node to an NR node");
            for (size_t i = 1; i + 1 < nodes.size(); ++i)
                if (nodes[i].kind != NodeKind::BT)
                    throw InputError("fixture chain " + id + ": interior nodes must be BT");
        }
        std::set<TfnNode> unique_nodes(nodes.begin(), nodes.end());
        if (unique_nodes.size() != nodes.size())
            throw InputError("fixture group " + id + ": repeated node");

        try {
            groups.push_back(build_group(id, is_cycle ? GroupKind::cycle : GroupKind::chain,
                                         std::move(nodes), is_cycle, volume, by_pair));
        } catch (const ValidationError& e) {
            throw InputError(e.what());  // fixture content is user input
        }
    }

    try {
        check_reconstruction(groups, by_pair);
    } catch (const ValidationError& e) {
        throw InputError(e.what());
    }
    return groups;
}

}  // namespace chainnet
