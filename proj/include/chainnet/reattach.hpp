#pragma once

#include "chainnet/contracts.hpp"
#include "chainnet/decomposition.hpp"

#include <map>
#include <vector>

namespace chainnet {

struct NettingGroup;

// One step of a chain or cycle with its money leg restored: `to` owes
// m_amount = t_units * unit_price, at the unit price of the netted edge the
// step was carved from. lambda is the carved fraction of that edge's volume.
struct AssignedTrade {
    AgentId from;
    AgentId to;
    Rational t_units;   // > 0
    Rational m_amount;
    Rational unit_price;
    std::pair<AgentId, AgentId> origin_pair;
    Rational lambda;    // in (0, 1]
};

// Builds one pending group per chain and cycle ("chain-1", ..., "cycle-1",
// ...), restoring every step's money leg pro rata from its netted edge.
std::vector<NettingGroup> attach_m(const Decomposition& decomposition,
                                   const std::vector<NettedEdge>& edges);

struct LambdaEntry {
    std::string group_id;
    Rational lambda;
};

// Ordered pair -> the fractions carved from its netted edge, in group order.
// Fractions for each pair sum to exactly 1.
std::map<std::pair<AgentId, AgentId>, std::vector<LambdaEntry>> lambda_table(
    const std::vector<NettingGroup>& groups);

}  // namespace chainnet
