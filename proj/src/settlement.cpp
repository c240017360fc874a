#include "chainnet/settlement.hpp"

#include "chainnet/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <istream>
#include <set>

namespace chainnet {

namespace {

using nlohmann::json;

Rational obligation_in(const NetObligation& ob, ObjectKind object) {
    return object == ObjectKind::T ? ob.net_t : ob.net_m;
}

size_t find_member(const NettingGroup& group, const AgentId& agent, NodeKind kind) {
    for (size_t i = 0; i < group.nodes.size(); ++i)
        if (group.nodes[i].agent == agent && group.nodes[i].kind == kind) return i;
    throw InputError("group " + group.id + " has no node " +
                     node_label(TfnNode{agent, kind}));
}

// Residual ids take letters in list order; the recovered contract takes the
// next letter after the last residual.
std::string letter_label(const std::string& base, size_t index) {
    return base + static_cast<char>('a' + index);
}

NettingGroup make_residual(const NettingGroup& parent, std::string id,
                           std::vector<TfnNode> nodes,
                           std::vector<AssignedTrade> trades) {
    NettingGroup residual;
    residual.id = std::move(id);
    residual.kind = GroupKind::residual_chain;
    residual.mode = parent.mode;
    residual.state = GroupState::pending;
    residual.loop = false;
    residual.nodes = std::move(nodes);
    residual.trades = std::move(trades);

    // A single-object residual whose ends fall on one agent closes back
    // into a loop: the merged node carries balanced T and no money legs.
    if (residual.mode == TradeMode::single_object && residual.nodes.size() > 2 &&
        residual.nodes.front().agent == residual.nodes.back().agent) {
        residual.nodes.pop_back();
        residual.nodes.front().kind = NodeKind::BT;
        residual.loop = true;
    }
    refresh_obligations(residual);
    return residual;
}

json transfer_to_json(const Transfer& transfer) {
    return json{{"agent", transfer.agent.value},
                {"node_kind", node_kind_name(transfer.node_kind)},
                {"object", object_kind_name(transfer.object)},
                {"amount", format_rational(transfer.amount)},
                {"direction", transfer.deliver ? "deliver" : "receive"}};
}

json recovered_to_json(const RecoveredContract& contract) {
    return json{{"from", contract.from.value},
                {"to", contract.to.value},
                {"t_units", format_rational(contract.t_units)},
                {"m_amount", format_rational(contract.m_amount)},
                {"origin_pair",
                 json{contract.origin_pair.first.value, contract.origin_pair.second.value}},
                {"source_group", contract.source_group},
                {"label", contract.label}};
}

}  // namespace

std::string_view object_kind_name(ObjectKind object) {
    return object == ObjectKind::T ? "T" : "M";
}

std::optional<ObjectKind> parse_object_kind(std::string_view name) {
    if (name == "T") return ObjectKind::T;
    if (name == "M") return ObjectKind::M;
    return std::nullopt;
}

void EscrowLedger::commit(const AgentId& agent, const std::string& group_id,
                          const Rational& t, const Rational& m) {
    Entry& entry = entries_[{agent, group_id}];
    if (t < entry.committed_t || m < entry.committed_m)
        throw ValidationError("escrow of " + agent.value + " for " + group_id +
                              " cannot decrease");
    entry.committed_t = t;
    entry.committed_m = m;
}

void EscrowLedger::lock(const AgentId& agent, const std::string& group_id) {
    auto it = entries_.find({agent, group_id});
    if (it == entries_.end())
        throw ValidationError("no escrow entry for " + agent.value + " in " + group_id);
    it->second.locked = true;
}

void EscrowLedger::release(const AgentId& agent, const std::string& group_id) {
    entries_.erase({agent, group_id});
}

const EscrowLedger::Entry* EscrowLedger::find(const AgentId& agent,
                                              const std::string& group_id) const {
    auto it = entries_.find({agent, group_id});
    return it == entries_.end() ? nullptr : &it->second;
}

std::vector<DeficiencyEvent> load_scenario(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("invalid scenario JSON: ") + e.what());
    }
    if (doc.is_null()) return {};
    if (!doc.is_array()) throw InputError("scenario must be a JSON array");

    std::vector<DeficiencyEvent> events;
    for (size_t i = 0; i < doc.size(); ++i) {
        const std::string where = "scenario entry " + std::to_string(i);
        const json& entry = doc[i];
        if (!entry.is_object()) throw InputError(where + ": not an object");
        for (const char* key : {"group", "agent", "node_kind", "object", "amount"})
            if (!entry.contains(key))
                throw InputError(where + ": missing key '" + std::string(key) + "'");

        DeficiencyEvent event;
        event.group_id = entry["group"].get<std::string>();
        event.agent = AgentId{entry["agent"].get<std::string>()};
        auto kind = parse_node_kind(entry["node_kind"].get<std::string>());
        if (!kind || *kind == NodeKind::Source || *kind == NodeKind::Sink)
            throw InputError(where + ": bad node_kind");
        event.node_kind = *kind;
        auto object = parse_object_kind(entry["object"].get<std::string>());
        if (!object) throw InputError(where + ": object must be 'T' or 'M'");
        event.object = *object;
        try {
            event.shortfall = entry["amount"].is_string()
                                  ? parse_rational(entry["amount"].get<std::string>())
                                  : parse_rational(entry["amount"].dump());
        } catch (const InputError& e) {
            throw InputError(where + ": " + e.what());
        }
        if (event.shortfall <= 0) throw InputError(where + ": amount must be positive");
        events.push_back(std::move(event));
    }
    return events;
}

size_t delivery_edge(const NettingGroup& group, size_t node_index, ObjectKind object) {
    if (node_index >= group.nodes.size())
        throw InputError("group " + group.id + ": node index out of range");
    const std::vector<NetObligation> obligations = net_obligations(group);
    const Rational required = obligation_in(obligations[node_index], object);
    if (required <= 0)
        throw InputError("group " + group.id + ": " +
                         node_label(group.nodes[node_index]) + " owes no net " +
                         std::string(object_kind_name(object)));

    const size_t n = group.nodes.size();
    const bool has_in = group.loop || node_index > 0;
    const bool has_out = group.loop || node_index + 1 < n;
    const size_t in_trade = (node_index + n - 1) % n;
    const size_t out_trade = node_index;

    if (object == ObjectKind::T) {
        // T runs with the trade direction, so a net sender delivers on its
        // outgoing trade. Loops have no net T senders.
        if (!has_out)
            throw ValidationError("group " + group.id + ": net T at the chain tail");
        return out_trade;
    }
    // M normally runs against the trade direction: a node pays on its
    // incoming trade. A negative money leg inverts the outgoing trade.
    if (has_in && group.trades[in_trade].m_amount > 0) return in_trade;
    if (has_out && group.trades[out_trade].m_amount < 0) return out_trade;
    throw ValidationError("group " + group.id + ": no trade carries the M outflow of " +
                          node_label(group.nodes[node_index]));
}

DeficiencyOutcome process_deficiency(const NettingGroup& group,
                                     const DeficiencyEvent& event) {
    if (group.state != GroupState::pending)
        throw InputError("group " + group.id + " is " +
                         std::string(group_state_name(group.state)) +
                         ", deficiencies only apply to pending groups");
    const size_t node_index = find_member(group, event.agent, event.node_kind);
    const Rational required = obligation_in(net_obligations(group)[node_index], event.object);
    if (event.shortfall <= 0 || event.shortfall > required)
        throw InputError("group " + group.id + ": shortfall " +
                         format_rational(event.shortfall) + " outside (0, " +
                         format_rational(required) + "] for " +
                         node_label(group.nodes[node_index]));

    const size_t removed = delivery_edge(group, node_index, event.object);
    const AssignedTrade& trade = group.trades[removed];

    DeficiencyOutcome outcome;
    outcome.removed_trade = removed;

    const size_t n = group.nodes.size();
    std::vector<std::pair<std::vector<TfnNode>, std::vector<AssignedTrade>>> parts;
    if (group.loop) {
        // Cut the loop open at the removed trade: one path from its head
        // around to its tail.
        std::vector<TfnNode> nodes;
        std::vector<AssignedTrade> trades;
        for (size_t step = 1; step <= n; ++step)
            nodes.push_back(group.nodes[(removed + step) % n]);
        for (size_t step = 1; step < n; ++step)
            trades.push_back(group.trades[(removed + step) % n]);
        parts.emplace_back(std::move(nodes), std::move(trades));
    } else {
        std::vector<TfnNode> left_nodes(group.nodes.begin(),
                                        group.nodes.begin() + removed + 1);
        std::vector<AssignedTrade> left_trades(group.trades.begin(),
                                               group.trades.begin() + removed);
        std::vector<TfnNode> right_nodes(group.nodes.begin() + removed + 1,
                                         group.nodes.end());
        std::vector<AssignedTrade> right_trades(group.trades.begin() + removed + 1,
                                                group.trades.end());
        parts.emplace_back(std::move(left_nodes), std::move(left_trades));
        parts.emplace_back(std::move(right_nodes), std::move(right_trades));
    }

    for (auto& [nodes, trades] : parts) {
        if (nodes.size() < 2) continue;  // a lone node carries no obligations
        outcome.residuals.push_back(
            make_residual(group, letter_label(group.id, outcome.residuals.size()),
                          std::move(nodes), std::move(trades)));
    }

    outcome.recovered =
        RecoveredContract{trade.from,        trade.to,
                          trade.t_units,     trade.m_amount,
                          trade.origin_pair, group.id,
                          letter_label(group.id, outcome.residuals.size())};
    return outcome;
}

SettlementResult settle(std::vector<NettingGroup> groups,
                        const std::vector<DeficiencyEvent>& scenario) {
    SettlementResult result;
    std::set<std::string> live;
    std::map<std::string, std::vector<std::string>> children;
    size_t budget = 0;

    for (NettingGroup& group : groups) {
        if (group.state != GroupState::pending)
            throw InputError("group " + group.id + " is not pending");
        if (!result.all_groups.emplace(group.id, group).second)
            throw InputError("duplicate group id " + group.id);
        live.insert(group.id);
        budget += group.trades.size();
    }

    // First live group, ascending id, whose (agent, node_kind) node still
    // owes the object. `scope` limits the scan to a decomposed group's
    // descendants.
    auto find_target = [&](const DeficiencyEvent& event,
                           const std::set<std::string>& scope) -> std::optional<std::string> {
        for (const std::string& id : scope) {
            const NettingGroup& group = result.all_groups.at(id);
            for (size_t i = 0; i < group.nodes.size(); ++i)
                if (group.nodes[i].agent == event.agent &&
                    group.nodes[i].kind == event.node_kind &&
                    obligation_in(group.obligations[i], event.object) > 0)
                    return id;
        }
        return std::nullopt;
    };

    auto descendants = [&](const std::string& id) {
        std::set<std::string> out;
        std::vector<std::string> frontier{id};
        while (!frontier.empty()) {
            const std::string current = frontier.back();
            frontier.pop_back();
            if (live.count(current)) out.insert(current);
            auto it = children.find(current);
            if (it != children.end())
                frontier.insert(frontier.end(), it->second.begin(), it->second.end());
        }
        return out;
    };

    for (const DeficiencyEvent& event : scenario) {
        std::optional<std::string> target;
        if (event.group_id == "auto") {
            target = find_target(event, live);
            if (!target)
                throw InputError("no live group owes " +
                                 std::string(object_kind_name(event.object)) + " at " +
                                 node_label(TfnNode{event.agent, event.node_kind}));
        } else if (live.count(event.group_id)) {
            target = event.group_id;
        } else if (result.all_groups.count(event.group_id)) {
            target = find_target(event, descendants(event.group_id));
            if (!target)
                throw InputError("group " + event.group_id +
                                 " has no live descendant owing " +
                                 std::string(object_kind_name(event.object)) + " at " +
                                 node_label(TfnNode{event.agent, event.node_kind}));
        } else {
            throw InputError("unknown group " + event.group_id);
        }

        if (result.log.size() >= budget)
            throw ValidationError("more deficiencies than assigned trades");
        const std::string group_id = *target;
        NettingGroup& group = result.all_groups.at(group_id);
        DeficiencyOutcome outcome = process_deficiency(group, event);

        advance_state(group, GroupState::decomposed);
        live.erase(group_id);

        DeficiencyRecord record{event, group_id, outcome.removed_trade, {},
                                outcome.recovered.label};
        for (NettingGroup& residual : outcome.residuals) {
            record.residual_ids.push_back(residual.id);
            children[group_id].push_back(residual.id);
            live.insert(residual.id);

            // Nodes whose obligations grew against the parent must top up.
            for (size_t i = 0; i < residual.nodes.size(); ++i) {
                const size_t parent_index =
                    find_member(group, residual.nodes[i].agent, residual.nodes[i].kind);
                for (ObjectKind object : {ObjectKind::T, ObjectKind::M}) {
                    const Rational grown =
                        obligation_in(residual.obligations[i], object) -
                        obligation_in(group.obligations[parent_index], object);
                    if (grown > 0)
                        result.top_ups.push_back({residual.id, residual.nodes[i].agent,
                                                  residual.nodes[i].kind, object, grown});
                }
            }
            result.all_groups.emplace(residual.id, std::move(residual));
        }
        result.recovered.push_back(std::move(outcome.recovered));
        result.log.push_back(std::move(record));
    }

    for (const std::string& id : live) {
        NettingGroup& group = result.all_groups.at(id);
        advance_state(group, GroupState::executable);
        std::map<AgentId, std::pair<Rational, Rational>> required;
        for (const NetObligation& ob : group.obligations) {
            auto& [t, m] = required[ob.node.agent];
            if (ob.net_t > 0) t += ob.net_t;
            if (ob.net_m > 0) m += ob.net_m;
        }
        for (const auto& [agent, amounts] : required) {
            result.ledger.commit(agent, id, amounts.first, amounts.second);
            result.ledger.lock(agent, id);
        }
        result.executable.push_back(group);
    }
    return result;
}

std::vector<Transfer> execute(NettingGroup& group, EscrowLedger& ledger) {
    if (group.state != GroupState::executable)
        throw InputError("group " + group.id + " is not executable");

    std::map<AgentId, std::pair<Rational, Rational>> required;
    std::vector<Transfer> transfers;
    for (const NetObligation& ob : net_obligations(group)) {
        if (ob.net_t != 0)
            transfers.push_back({ob.node.agent, ob.node.kind, ObjectKind::T,
                                 ob.net_t > 0 ? ob.net_t : -ob.net_t, ob.net_t > 0});
        if (ob.net_m != 0)
            transfers.push_back({ob.node.agent, ob.node.kind, ObjectKind::M,
                                 ob.net_m > 0 ? ob.net_m : -ob.net_m, ob.net_m > 0});
        auto& [t, m] = required[ob.node.agent];
        if (ob.net_t > 0) t += ob.net_t;
        if (ob.net_m > 0) m += ob.net_m;
    }

    for (const auto& [agent, amounts] : required) {
        const EscrowLedger::Entry* entry = ledger.find(agent, group.id);
        if (!entry || entry->committed_t < amounts.first ||
            entry->committed_m < amounts.second)
            throw ValidationError("under-committed escrow for " + agent.value +
                                  " in group " + group.id);
    }
    for (const auto& [agent, amounts] : required) ledger.release(agent, group.id);
    advance_state(group, GroupState::executed);
    return transfers;
}

std::string settlement_to_json(
    const SettlementResult& result,
    const std::map<std::string, std::vector<Transfer>>& transfers) {
    json doc;
    doc["executable"] = json::parse(groups_to_json(result.executable))["groups"];
    doc["recovered"] = json::array();
    for (const RecoveredContract& contract : result.recovered)
        doc["recovered"].push_back(recovered_to_json(contract));
    doc["top_ups"] = json::array();
    for (const TopUp& top_up : result.top_ups)
        doc["top_ups"].push_back({{"group", top_up.group_id},
                                  {"agent", top_up.agent.value},
                                  {"node_kind", node_kind_name(top_up.node_kind)},
                                  {"object", object_kind_name(top_up.object)},
                                  {"amount", format_rational(top_up.amount)}});
    doc["deficiencies"] = json::array();
    for (const DeficiencyRecord& record : result.log) {
        json entry{{"group", record.event.group_id},
                   {"resolved_group", record.resolved_group},
                   {"agent", record.event.agent.value},
                   {"node_kind", node_kind_name(record.event.node_kind)},
                   {"object", object_kind_name(record.event.object)},
                   {"shortfall", format_rational(record.event.shortfall)},
                   {"recovered_label", record.recovered_label}};
        entry["residuals"] = json::array();
        for (const std::string& id : record.residual_ids) entry["residuals"].push_back(id);
        doc["deficiencies"].push_back(std::move(entry));
    }
    doc["transfers"] = json::object();
    for (const auto& [group_id, list] : transfers) {
        json array = json::array();
        for (const Transfer& transfer : list) array.push_back(transfer_to_json(transfer));
        doc["transfers"][group_id] = std::move(array);
    }
    return doc.dump(2) + "\n";
}

}  // namespace chainnet
