#pragma once

#include "chainnet/decomposition.hpp"
#include "chainnet/reattach.hpp"

#include <optional>
#include <string>
#include <vector>

namespace chainnet {

enum class GroupKind { chain, cycle, residual_chain };
enum class GroupState { pending, executable, executed, decomposed };
enum class TradeMode { two_object, single_object };

std::string_view group_kind_name(GroupKind kind);
std::string_view group_state_name(GroupState state);
std::string_view trade_mode_name(TradeMode mode);

struct NetObligation {
    TfnNode node;
    Rational net_t;  // positive: the node delivers T
    Rational net_m;  // positive: the node delivers M
};

// A multilateral contract replacing the bilateral positions it was carved
// from. trades[i] runs nodes[i] -> nodes[i + 1]; when loop is set the last
// trade wraps back to nodes.front() and the node list is not repeated.
struct NettingGroup {
    std::string id;
    GroupKind kind = GroupKind::chain;
    TradeMode mode = TradeMode::two_object;
    GroupState state = GroupState::pending;
    bool loop = false;
    std::vector<TfnNode> nodes;
    std::vector<AssignedTrade> trades;
    std::vector<NetObligation> obligations;  // node order; kept current
};

// Per-node net deliveries: T out minus T in, M out minus M in. Signed
// arithmetic covers trades whose money leg runs against the usual direction.
std::vector<NetObligation> net_obligations(const NettingGroup& group);
void refresh_obligations(NettingGroup& group);

// Single-object projection: money legs drop to zero, prices are erased,
// T legs and provenance stay.
NettingGroup strip_m(const NettingGroup& group);

// pending -> executable -> executed, pending -> decomposed. Anything else
// throws ValidationError.
void advance_state(NettingGroup& group, GroupState next);

struct MaximalNettingReport {
    struct AgentResidual {
        AgentId agent;
        Rational residual_t;      // signed net T over all groups
        Rational expected_gamma;  // imbalance from the netted edges
        bool matches = false;
    };
    struct ExcessAttachment {
        AgentId agent;
        Rational attached_m;   // M on the excess end of the agent's chains
        Rational greedy_min;   // cheapest-first attachment for the same volume
        bool minimal = false;
    };
    std::vector<AgentResidual> residuals;
    std::vector<ExcessAttachment> excess;     // empty unless requested
    bool residuals_ok = false;
    bool excess_ok = false;                   // true when not requested
    bool ok() const { return residuals_ok && excess_ok; }
};

// (1) Residual T per agent equals its imbalance — every balanced unit was
// netted away. (2) Optionally, M attached to excess chain ends is the
// cheapest-first minimum. Fixture decompositions from listings may
// legitimately fail (2); the pipeline's own output must not.
MaximalNettingReport check_maximal_netting(const std::vector<NettingGroup>& groups,
                                           const std::vector<NettedEdge>& edges,
                                           bool check_excess_minimality);

// Reads a hand-encoded decomposition ({"groups": [{id, kind, t_volume,
// nodes: [{agent, kind}, ...]}, ...]}), checks it reconstructs the netted
// edges exactly, and attaches money legs. Cycle node lists are closed.
std::vector<NettingGroup> groups_from_fixture(const std::string& text,
                                              const std::vector<NettedEdge>& edges);

std::string groups_to_json(const std::vector<NettingGroup>& groups);

// Edge listing ("from —tT/mM→ to") plus a per-object net-flow table.
std::string render_group_report(const std::vector<NettingGroup>& groups);

}  // namespace chainnet
