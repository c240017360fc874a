#include "chainnet/flow_network.hpp"

#include "chainnet/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <tuple>

namespace chainnet {

namespace {

using nlohmann::json;

constexpr std::string_view kKindNames[] = {"BT", "NS", "NR", "Source", "Sink"};

json node_to_json(const TfnNode& node) {
    return json{{"agent", node.agent.value}, {"kind", node_kind_name(node.kind)}};
}

json edge_to_json(const TfnEdge& edge) {
    json j{{"from", node_to_json(edge.from)},
           {"to", node_to_json(edge.to)},
           {"capacity", format_rational(edge.capacity)}};
    j["unit_price"] = edge.unit_price ? json(format_rational(*edge.unit_price)) : json();
    j["origin_pair"] = edge.origin_pair
                           ? json{edge.origin_pair->first.value, edge.origin_pair->second.value}
                           : json();
    return j;
}

}  // namespace

std::string_view node_kind_name(NodeKind kind) {
    return kKindNames[static_cast<int>(kind)];
}

std::optional<NodeKind> parse_node_kind(std::string_view name) {
    for (int i = 0; i < 5; ++i)
        if (kKindNames[i] == name) return static_cast<NodeKind>(i);
    return std::nullopt;
}

TfnNode source_node() { return TfnNode{AgentId{}, NodeKind::Source}; }
TfnNode sink_node() { return TfnNode{AgentId{}, NodeKind::Sink}; }

std::string node_label(const TfnNode& node) {
    if (node.kind == NodeKind::Source || node.kind == NodeKind::Sink)
        return std::string(node_kind_name(node.kind));
    return std::string(node_kind_name(node.kind)) + "_" + node.agent.value;
}

SplitGraph::SplitGraph(const std::vector<NettedEdge>& edges) {
    std::set<AgentId> agents;
    for (const NettedEdge& e : edges) {
        if (e.t_units <= 0)
            throw InputError("netted edge " + e.from.value + "->" + e.to.value +
                             ": nonpositive t_units");
        if (e.from == e.to)
            throw InputError("netted edge with identical endpoints: " + e.from.value);
        const TfnNode from{e.from, NodeKind::BT};
        const TfnNode to{e.to, NodeKind::BT};
        if (edges_.count({from, to}) || edges_.count({to, from}))
            throw InputError("netted edges are not bilaterally netted: pair " +
                             e.from.value + "/" + e.to.value + " appears twice");
        add_capacity(from, to, EdgeBody{e.t_units, e.unit_price, {e.from, e.to}});
        agents.insert(e.from);
        agents.insert(e.to);
    }
    agents_.assign(agents.begin(), agents.end());
}

void SplitGraph::add_capacity(const TfnNode& from, const TfnNode& to,
                              const EdgeBody& body) {
    auto [it, fresh] = edges_.try_emplace({from, to}, body);
    if (!fresh) it->second.capacity += body.capacity;
    tally_[from.agent] += body.capacity;
    tally_[to.agent] -= body.capacity;
    nodes_.insert(from);
    nodes_.insert(to);
}

Rational SplitGraph::imbalance(const AgentId& agent) const {
    auto it = tally_.find(agent);
    return it == tally_.end() ? Rational(0) : it->second;
}

void SplitGraph::split_node(const AgentId& agent) {
    if (nodes_.count(TfnNode{agent, NodeKind::NS}) ||
        nodes_.count(TfnNode{agent, NodeKind::NR}))
        throw ValidationError("split_node: agent '" + agent.value + "' already split");

    const Rational gamma = imbalance(agent);
    if (gamma == 0) return;

    const bool sender = gamma > 0;
    const TfnNode split{agent, sender ? NodeKind::NS : NodeKind::NR};

    // Candidate edges on the imbalanced side, cheapest unit price first;
    // ties broken by the counterpart node for determinism.
    struct Candidate {
        std::pair<TfnNode, TfnNode> key;
        TfnNode counterpart;
        Rational unit_price;
    };
    std::vector<Candidate> candidates;
    for (const auto& [key, body] : edges_) {
        const TfnNode& own = sender ? key.first : key.second;
        if (own.agent != agent) continue;
        candidates.push_back({key, sender ? key.second : key.first, body.unit_price});
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) {
                  return std::tie(a.unit_price, a.counterpart) <
                         std::tie(b.unit_price, b.counterpart);
              });

    Rational remaining = sender ? gamma : -gamma;
    for (const Candidate& c : candidates) {
        if (remaining == 0) break;
        const EdgeBody body = edges_.at(c.key);
        const Rational take = std::min(remaining, body.capacity);
        EdgeBody moved = body;
        moved.capacity = take;
        if (sender)
            add_capacity(split, c.key.second, moved);
        else
            add_capacity(c.key.first, split, moved);
        remove_capacity(c.key, take);
        remaining -= take;
    }
    if (remaining != 0)
        throw ValidationError("split_node: could not peel full imbalance of agent '" +
                              agent.value + "'");
}

void SplitGraph::remove_capacity(const std::pair<TfnNode, TfnNode>& key,
                                 const Rational& amount) {
    auto it = edges_.find(key);
    it->second.capacity -= amount;
    tally_[key.first.agent] -= amount;
    tally_[key.second.agent] += amount;
    if (it->second.capacity == 0) edges_.erase(it);
}

std::vector<TfnEdge> SplitGraph::edges() const {
    std::vector<TfnEdge> out;
    out.reserve(edges_.size());
    for (const auto& [key, body] : edges_)
        out.push_back({key.first, key.second, body.capacity, body.unit_price,
                       body.origin_pair});
    return out;
}

TradeFlowNetwork build_tfn(const std::vector<NettedEdge>& edges) {
    SplitGraph graph(edges);
    return build_tfn(edges, graph.agents());
}

TradeFlowNetwork build_tfn(const std::vector<NettedEdge>& edges,
                           const std::vector<AgentId>& split_order) {
    SplitGraph graph(edges);
    {
        std::set<AgentId> given(split_order.begin(), split_order.end());
        if (given.size() != split_order.size())
            throw InputError("split order repeats an agent");
        if (given != std::set<AgentId>(graph.agents().begin(), graph.agents().end()))
            throw InputError("split order does not cover exactly the book's agents");
    }
    for (const AgentId& agent : split_order) graph.split_node(agent);

    TradeFlowNetwork network;
    network.parents = edges;
    network.edges = graph.edges();

    std::map<TfnNode, Rational> ns_out;
    std::map<TfnNode, Rational> nr_in;
    std::set<TfnNode> nodes{source_node(), sink_node()};
    for (const TfnEdge& e : network.edges) {
        nodes.insert(e.from);
        nodes.insert(e.to);
        if (e.from.kind == NodeKind::NS) ns_out[e.from] += e.capacity;
        if (e.to.kind == NodeKind::NR) nr_in[e.to] += e.capacity;
    }
    for (const auto& [node, total] : ns_out)
        network.edges.push_back({source_node(), node, total, std::nullopt, std::nullopt});
    for (const auto& [node, total] : nr_in)
        network.edges.push_back({node, sink_node(), total, std::nullopt, std::nullopt});

    std::sort(network.edges.begin(), network.edges.end(),
              [](const TfnEdge& a, const TfnEdge& b) {
                  return std::tie(a.from, a.to) < std::tie(b.from, b.to);
              });
    network.nodes.assign(nodes.begin(), nodes.end());
    return network;
}

Rational cut_flow(const TradeFlowNetwork& network, const std::set<TfnNode>& s_side) {
    if (!s_side.count(source_node()))
        throw InputError("cut must contain Source");
    if (s_side.count(sink_node()))
        throw InputError("cut must not contain Sink");
    const std::set<TfnNode> nodes(network.nodes.begin(), network.nodes.end());
    for (const TfnNode& node : s_side)
        if (!nodes.count(node))
            throw InputError("cut references unknown node " + node_label(node));

    Rational flow;
    for (const TfnEdge& e : network.edges) {
        const bool from_in = s_side.count(e.from) > 0;
        const bool to_in = s_side.count(e.to) > 0;
        if (from_in && !to_in) flow += e.capacity;
        if (!from_in && to_in) flow -= e.capacity;
    }
    return flow;
}

std::vector<FlowViolation> validate_flow_conditions(const TradeFlowNetwork& network) {
    std::vector<FlowViolation> violations;
    auto report = [&](std::string condition, std::string detail) {
        violations.push_back({std::move(condition), std::move(detail)});
    };

    const std::set<TfnNode> nodes(network.nodes.begin(), network.nodes.end());
    std::set<std::pair<TfnNode, TfnNode>> seen;
    std::map<TfnNode, Rational> in_flow, out_flow;
    std::map<std::pair<AgentId, AgentId>, Rational> pair_capacity;

    for (const TfnEdge& e : network.edges) {
        const std::string name = node_label(e.from) + "->" + node_label(e.to);
        if (e.capacity <= 0) report("capacity", name + " has nonpositive capacity");
        if (!seen.insert({e.from, e.to}).second)
            report("duplicate-edge", name + " appears twice");
        if (seen.count({e.to, e.from}))
            report("antiparallel", name + " coexists with its reverse");
        if (!nodes.count(e.from) || !nodes.count(e.to))
            report("node-list", name + " has an endpoint missing from the node list");

        const bool endpoint_edge = e.from.kind == NodeKind::Source ||
                                   e.to.kind == NodeKind::Sink;
        if (e.to.kind == NodeKind::Source) report("endpoint-typing", name + " enters Source");
        if (e.from.kind == NodeKind::Sink) report("endpoint-typing", name + " leaves Sink");
        if (e.from.kind == NodeKind::Source && e.to.kind != NodeKind::NS)
            report("endpoint-typing", name + ": Source must feed NS nodes only");
        if (e.to.kind == NodeKind::Sink && e.from.kind != NodeKind::NR)
            report("endpoint-typing", name + ": Sink must drain NR nodes only");
        if (e.from.kind == NodeKind::NR && e.to.kind != NodeKind::Sink)
            report("endpoint-typing", name + ": NR nodes only flow to Sink");
        if (e.to.kind == NodeKind::NS && e.from.kind != NodeKind::Source)
            report("endpoint-typing", name + ": NS nodes only receive from Source");
        if (!endpoint_edge && e.from.agent == e.to.agent)
            report("endpoint-typing", name + " connects two nodes of one agent");

        if (endpoint_edge) {
            if (e.unit_price || e.origin_pair)
                report("price", name + ": Source/Sink edges carry no price or origin");
        } else {
            if (!e.unit_price) report("price", name + " is missing unit_price");
            if (!e.origin_pair) {
                report("price", name + " is missing origin_pair");
            } else {
                if (e.origin_pair->first != e.from.agent ||
                    e.origin_pair->second != e.to.agent)
                    report("price", name + ": origin_pair disagrees with endpoints");
                pair_capacity[*e.origin_pair] += e.capacity;
            }
        }
        out_flow[e.from] += e.capacity;
        in_flow[e.to] += e.capacity;
    }

    for (const TfnNode& node : network.nodes) {
        if (node.kind == NodeKind::Source || node.kind == NodeKind::Sink) continue;
        const Rational in = in_flow.count(node) ? in_flow.at(node) : Rational(0);
        const Rational out = out_flow.count(node) ? out_flow.at(node) : Rational(0);
        if (in != out)
            report("conservation", node_label(node) + ": inflow " + format_rational(in) +
                                       " != outflow " + format_rational(out));
    }

    std::map<std::pair<AgentId, AgentId>, Rational> parent_units;
    for (const NettedEdge& parent : network.parents)
        parent_units[{parent.from, parent.to}] += parent.t_units;
    for (const auto& [pair, units] : parent_units) {
        auto it = pair_capacity.find(pair);
        const Rational got = it == pair_capacity.end() ? Rational(0) : it->second;
        if (got != units)
            report("pair-capacity", pair.first.value + "->" + pair.second.value +
                                        ": capacity " + format_rational(got) +
                                        " != netted " + format_rational(units));
    }
    for (const auto& [pair, capacity] : pair_capacity)
        if (!parent_units.count(pair))
            report("pair-capacity", pair.first.value + "->" + pair.second.value +
                                        ": no matching netted edge");

    return violations;
}

std::string tfn_to_json(const TradeFlowNetwork& network) {
    json doc;
    doc["nodes"] = json::array();
    for (const TfnNode& node : network.nodes) doc["nodes"].push_back(node_to_json(node));
    doc["edges"] = json::array();
    for (const TfnEdge& edge : network.edges) doc["edges"].push_back(edge_to_json(edge));
    return doc.dump(2) + "\n";
}

}  // namespace chainnet
