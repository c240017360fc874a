#pragma once

#include "chainnet/contracts.hpp"

#include <map>
#include <optional>
#include <set>
#include <string_view>
#include <utility>
#include <vector>

namespace chainnet {

// BT carries an agent's balanced throughput; NS holds a net sender's excess
// outflow; NR holds a net receiver's excess inflow. Source feeds every NS
// node and Sink drains every NR node.
enum class NodeKind { BT, NS, NR, Source, Sink };

std::string_view node_kind_name(NodeKind kind);
std::optional<NodeKind> parse_node_kind(std::string_view name);

struct TfnNode {
    AgentId agent;  // empty for Source / Sink
    NodeKind kind = NodeKind::BT;
    auto operator<=>(const TfnNode&) const = default;
};

TfnNode source_node();
TfnNode sink_node();
std::string node_label(const TfnNode& node);  // "NS_g", "Source", ...

struct TfnEdge {
    TfnNode from;
    TfnNode to;
    Rational capacity;                    // > 0; construction saturates every edge
    std::optional<Rational> unit_price;   // absent on Source / Sink edges
    std::optional<std::pair<AgentId, AgentId>> origin_pair;  // netted edge it came from
};

// Working graph while agents are being split. Netted edges enter with both
// endpoints as BT nodes; split_node peels an agent's imbalance onto a fresh
// NS or NR node, cheapest unit price first.
class SplitGraph {
  public:
    explicit SplitGraph(const std::vector<NettedEdge>& edges);

    // Out-capacity minus in-capacity over the agent's current nodes.
    Rational imbalance(const AgentId& agent) const;

    // No-op when the imbalance is zero. Peels exactly |imbalance| units of
    // capacity from the outgoing (positive) or incoming (negative) side.
    void split_node(const AgentId& agent);

    const std::vector<AgentId>& agents() const { return agents_; }
    std::vector<TfnEdge> edges() const;  // sorted by (from, to)

  private:
    struct EdgeBody {
        Rational capacity;
        Rational unit_price;
        std::pair<AgentId, AgentId> origin_pair;
    };
    void add_capacity(const TfnNode& from, const TfnNode& to, const EdgeBody& body);
    void remove_capacity(const std::pair<TfnNode, TfnNode>& key, const Rational& amount);

    std::map<std::pair<TfnNode, TfnNode>, EdgeBody> edges_;
    std::map<AgentId, Rational> tally_;  // out-capacity minus in-capacity per agent
    std::set<TfnNode> nodes_;
    std::vector<AgentId> agents_;  // sorted, unique
};

struct TradeFlowNetwork {
    std::vector<TfnNode> nodes;      // sorted; includes Source and Sink
    std::vector<TfnEdge> edges;      // sorted by (from, to)
    std::vector<NettedEdge> parents; // netted edges the network was built from
};

// Splits every agent in ascending id order, then attaches Source -> NS and
// NR -> Sink edges sized to the imbalances. The overload fixes a custom
// split order (used to check order independence).
TradeFlowNetwork build_tfn(const std::vector<NettedEdge>& edges);
TradeFlowNetwork build_tfn(const std::vector<NettedEdge>& edges,
                           const std::vector<AgentId>& split_order);

// Capacity crossing the cut minus capacity crossing back, for any node
// partition with Source inside and Sink outside.
Rational cut_flow(const TradeFlowNetwork& network, const std::set<TfnNode>& s_side);

struct FlowViolation {
    std::string condition;
    std::string detail;
};

// Checks the flow conditions (capacity, conservation, endpoint typing) plus
// pair-capacity agreement with the parent netted edges. Empty means valid.
std::vector<FlowViolation> validate_flow_conditions(const TradeFlowNetwork& network);

std::string tfn_to_json(const TradeFlowNetwork& network);

}  // namespace chainnet
