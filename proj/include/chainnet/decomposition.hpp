#pragma once

#include "chainnet/flow_network.hpp"

#include <optional>
#include <vector>

namespace chainnet {

// A Source-to-Sink unit of excess flow with the endpoints stripped: the
// first node is the NS node of a net sender, the last the NR node of a net
// receiver, interior nodes are BT.
struct Chain {
    std::vector<TfnNode> nodes;
    Rational t_volume;  // > 0
};

// Balanced flow among BT nodes; the node list is closed (front == back).
struct Cycle {
    std::vector<TfnNode> nodes;
    Rational t_volume;  // > 0
};

struct Decomposition {
    std::vector<Chain> chains;
    std::vector<Cycle> cycles;
};

// Residual capacities of a network's edges, supporting stepwise extraction.
// Traversal is deterministic: neighbours are visited in node order.
class ResidualFlow {
  public:
    explicit ResidualFlow(const TradeFlowNetwork& network);

    // A simple Source->Sink path through positive-residual edges, or nullopt.
    std::optional<std::vector<TfnNode>> find_st_path() const;

    // A closed walk (front == back) through positive-residual edges — the
    // first cycle reached scanning roots in ascending node order — or nullopt.
    std::optional<std::vector<TfnNode>> find_cycle() const;

    // Subtracts the minimum residual along the walk from every step and
    // returns it. The walk must follow existing positive-residual edges.
    Rational extract(const std::vector<TfnNode>& walk);

    Rational residual(const TfnNode& from, const TfnNode& to) const;
    bool exhausted() const;  // no positive residual anywhere

  private:
    std::vector<TfnNode> nodes_;                    // sorted; index = id
    std::vector<std::vector<size_t>> adjacency_;    // node id -> edge ids, to-ascending
    std::vector<std::pair<int, int>> edge_ends_;    // edge id -> (from, to) node ids
    std::vector<Rational> residuals_;
    int index_of(const TfnNode& node) const;
};

// Peels chains until Source is disconnected, then cycles until no residual
// remains. Chains and cycles jointly reconstruct every netted edge exactly.
Decomposition decompose(const TradeFlowNetwork& network);

std::string decomposition_to_json(const Decomposition& decomposition);

}  // namespace chainnet
