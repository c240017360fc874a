#pragma once

#include "chainnet/netting_group.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace chainnet {

enum class ObjectKind { T, M };
std::string_view object_kind_name(ObjectKind object);
std::optional<ObjectKind> parse_object_kind(std::string_view name);

// Per (agent, group) escrow commitments. Commitments only grow while a
// group is live; release happens on execution or decomposition.
class EscrowLedger {
  public:
    struct Entry {
        Rational committed_t;
        Rational committed_m;
        bool locked = false;
    };

    void commit(const AgentId& agent, const std::string& group_id, const Rational& t,
                const Rational& m);
    void lock(const AgentId& agent, const std::string& group_id);
    void release(const AgentId& agent, const std::string& group_id);
    const Entry* find(const AgentId& agent, const std::string& group_id) const;
    const std::map<std::pair<AgentId, std::string>, Entry>& entries() const {
        return entries_;
    }

  private:
    std::map<std::pair<AgentId, std::string>, Entry> entries_;
};

// One node fails to fund part of an obligation. group_id may name a group
// (original or residual) or be "auto": the first live group, in ascending
// id order, where (agent, node_kind) still owes the object.
struct DeficiencyEvent {
    std::string group_id;
    AgentId agent;
    NodeKind node_kind = NodeKind::BT;
    ObjectKind object = ObjectKind::T;
    Rational shortfall;  // > 0, at most the node's net obligation
};

// JSON array of {group, agent, node_kind, object, amount}.
std::vector<DeficiencyEvent> load_scenario(std::istream& in);

// The bilateral contract cut back out of a group when a deficiency removes
// a trade. Counterparties are exactly the removed trade's endpoints.
struct RecoveredContract {
    AgentId from;
    AgentId to;
    Rational t_units;
    Rational m_amount;
    std::pair<AgentId, AgentId> origin_pair;
    std::string source_group;
    std::string label;
};

// Index of the trade on which the node delivers `object`: the outgoing
// trade for T; for M the incoming trade when its money leg flows out of the
// node, otherwise the outgoing trade with an inverted money leg.
size_t delivery_edge(const NettingGroup& group, size_t node_index, ObjectKind object);

struct DeficiencyOutcome {
    RecoveredContract recovered;
    std::vector<NettingGroup> residuals;  // "<id>a", "<id>b"; recovered takes the next letter
    size_t removed_trade = 0;
};

// Removes the deficient node's whole delivery trade and splits the group at
// the gap. A chain leaves up to two residual chains, a loop exactly one.
// In single-object mode a residual whose ends belong to one agent closes
// back into a loop.
DeficiencyOutcome process_deficiency(const NettingGroup& group,
                                     const DeficiencyEvent& event);

// A node whose net obligation grew when its group decomposed must add the
// difference to escrow before the residual can execute.
struct TopUp {
    std::string group_id;
    AgentId agent;
    NodeKind node_kind = NodeKind::BT;
    ObjectKind object = ObjectKind::T;
    Rational amount;  // > 0
};

struct DeficiencyRecord {
    DeficiencyEvent event;
    std::string resolved_group;
    size_t removed_trade = 0;
    std::vector<std::string> residual_ids;
    std::string recovered_label;
};

struct SettlementResult {
    std::vector<NettingGroup> executable;      // escrow committed and locked
    std::vector<RecoveredContract> recovered;  // in event order
    std::vector<TopUp> top_ups;
    EscrowLedger ledger;
    std::map<std::string, NettingGroup> all_groups;  // every group ever live
    std::vector<DeficiencyRecord> log;
};

// Applies the scenario event by event. Events addressed to a decomposed
// group are re-addressed to its live descendants (ascending id). Ends by
// marking every surviving group executable with escrow fully committed.
SettlementResult settle(std::vector<NettingGroup> groups,
                        const std::vector<DeficiencyEvent>& scenario);

struct Transfer {
    AgentId agent;
    NodeKind node_kind = NodeKind::BT;
    ObjectKind object = ObjectKind::T;
    Rational amount;  // > 0
    bool deliver = false;  // false: the node receives
};

// Emits the group's net obligations as transfers, consuming its escrow.
// Throws ValidationError when the ledger does not cover an obligation.
std::vector<Transfer> execute(NettingGroup& group, EscrowLedger& ledger);

std::string settlement_to_json(
    const SettlementResult& result,
    const std::map<std::string, std::vector<Transfer>>& transfers);

}  // namespace chainnet
