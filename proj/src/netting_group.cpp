#include "chainnet/netting_group.hpp"

#include "chainnet/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <sstream>

namespace chainnet {

namespace {

using nlohmann::json;

void check_shape(const NettingGroup& group) {
    const size_t steps = group.loop ? group.nodes.size() : group.nodes.size() - 1;
    if (group.nodes.size() < 2 || group.trades.size() != steps)
        throw ValidationError("group " + group.id + ": node/trade lists disagree");
    for (size_t i = 0; i < group.trades.size(); ++i) {
        const AssignedTrade& t = group.trades[i];
        if (t.from != group.nodes[i].agent ||
            t.to != group.nodes[(i + 1) % group.nodes.size()].agent)
            throw ValidationError("group " + group.id + ": trade " + std::to_string(i) +
                                  " does not join its adjacent nodes");
    }
}

json trade_to_json(const AssignedTrade& trade) {
    return json{{"from", trade.from.value},
                {"to", trade.to.value},
                {"t_units", format_rational(trade.t_units)},
                {"m_amount", format_rational(trade.m_amount)},
                {"unit_price", format_rational(trade.unit_price)},
                {"origin_pair",
                 json{trade.origin_pair.first.value, trade.origin_pair.second.value}},
                {"lambda", format_rational(trade.lambda)}};
}

std::string pad(const std::string& text, size_t width) {
    return text.size() >= width ? text : std::string(width - text.size(), ' ') + text;
}

}  // namespace

std::string_view group_kind_name(GroupKind kind) {
    switch (kind) {
        case GroupKind::chain: return "chain";
        case GroupKind::cycle: return "cycle";
        case GroupKind::residual_chain: return "residual_chain";
    }
    return "?";
}

std::string_view group_state_name(GroupState state) {
    switch (state) {
        case GroupState::pending: return "pending";
        case GroupState::executable: return "executable";
        case GroupState::executed: return "executed";
        case GroupState::decomposed: return "decomposed";
    }
    return "?";
}

std::string_view trade_mode_name(TradeMode mode) {
    return mode == TradeMode::two_object ? "two_object" : "single_object";
}

std::vector<NetObligation> net_obligations(const NettingGroup& group) {
    check_shape(group);
    std::vector<NetObligation> obligations;
    obligations.reserve(group.nodes.size());
    for (const TfnNode& node : group.nodes) obligations.push_back({node, 0, 0});
    for (size_t i = 0; i < group.trades.size(); ++i) {
        const AssignedTrade& t = group.trades[i];
        NetObligation& from = obligations[i];
        NetObligation& to = obligations[(i + 1) % group.nodes.size()];
        from.net_t += t.t_units;
        to.net_t -= t.t_units;
        // The receiver of T owes the money leg; a negative m_amount flips it.
        to.net_m += t.m_amount;
        from.net_m -= t.m_amount;
    }
    return obligations;
}

void refresh_obligations(NettingGroup& group) {
    group.obligations = net_obligations(group);
}

NettingGroup strip_m(const NettingGroup& group) {
    NettingGroup stripped = group;
    stripped.mode = TradeMode::single_object;
    for (AssignedTrade& trade : stripped.trades) {
        trade.m_amount = 0;
        trade.unit_price = 0;
    }
    refresh_obligations(stripped);
    return stripped;
}

void advance_state(NettingGroup& group, GroupState next) {
    const bool allowed = (group.state == GroupState::pending &&
                          (next == GroupState::executable || next == GroupState::decomposed)) ||
                         (group.state == GroupState::executable &&
                          next == GroupState::executed);
    if (!allowed)
        throw ValidationError("group " + group.id + ": illegal state change " +
                              std::string(group_state_name(group.state)) + " -> " +
                              std::string(group_state_name(next)));
    group.state = next;
}

MaximalNettingReport check_maximal_netting(const std::vector<NettingGroup>& groups,
                                           const std::vector<NettedEdge>& edges,
                                           bool check_excess_minimality) {
    MaximalNettingReport report;

    std::map<AgentId, Rational> gamma;
    for (const auto& [agent, position] : net_positions(edges))
        gamma[agent] = position.net_t;

    std::map<AgentId, Rational> residual;
    for (const auto& [agent, value] : gamma) residual[agent] = 0;
    for (const NettingGroup& group : groups)
        for (const NetObligation& ob : net_obligations(group))
            residual[ob.node.agent] += ob.net_t;

    report.residuals_ok = true;
    for (const auto& [agent, value] : residual) {
        const Rational expected = gamma.count(agent) ? gamma.at(agent) : Rational(0);
        const bool matches = value == expected;
        report.residuals.push_back({agent, value, expected, matches});
        if (!matches) report.residuals_ok = false;
    }

    report.excess_ok = true;
    if (check_excess_minimality) {
        for (const auto& [agent, g] : gamma) {
            if (g == 0) continue;
            const bool sender = g > 0;

            Rational attached;
            for (const NettingGroup& group : groups) {
                if (group.kind != GroupKind::chain || group.trades.empty()) continue;
                if (sender && group.nodes.front().agent == agent)
                    attached += group.trades.front().m_amount;
                if (!sender && group.nodes.back().agent == agent)
                    attached += group.trades.back().m_amount;
            }

            // Cheapest-first attachment of the same excess volume.
            std::vector<std::pair<Rational, Rational>> slots;  // price, capacity
            for (const NettedEdge& e : edges)
                if ((sender ? e.from : e.to) == agent)
                    slots.push_back({e.unit_price, e.t_units});
            std::sort(slots.begin(), slots.end());
            Rational remaining = sender ? g : -g;
            Rational greedy;
            for (const auto& [price, capacity] : slots) {
                if (remaining == 0) break;
                const Rational take = std::min(remaining, capacity);
                greedy += take * price;
                remaining -= take;
            }

            const bool minimal = attached == greedy;
            report.excess.push_back({agent, attached, greedy, minimal});
            if (!minimal) report.excess_ok = false;
        }
    }
    return report;
}

std::string groups_to_json(const std::vector<NettingGroup>& groups) {
    json doc;
    doc["groups"] = json::array();
    for (const NettingGroup& group : groups) {
        json g;
        g["id"] = group.id;
        g["kind"] = group_kind_name(group.kind);
        g["mode"] = trade_mode_name(group.mode);
        g["state"] = group_state_name(group.state);
        g["loop"] = group.loop;
        g["nodes"] = json::array();
        for (const TfnNode& node : group.nodes)
            g["nodes"].push_back(
                {{"agent", node.agent.value}, {"kind", node_kind_name(node.kind)}});
        g["trades"] = json::array();
        for (const AssignedTrade& trade : group.trades)
            g["trades"].push_back(trade_to_json(trade));
        g["obligations"] = json::array();
        for (const NetObligation& ob : group.obligations)
            g["obligations"].push_back({{"agent", ob.node.agent.value},
                                        {"kind", node_kind_name(ob.node.kind)},
                                        {"net_t", format_rational(ob.net_t)},
                                        {"net_m", format_rational(ob.net_m)}});
        doc["groups"].push_back(std::move(g));
    }
    return doc.dump(2) + "\n";
}

std::string render_group_report(const std::vector<NettingGroup>& groups) {
    std::ostringstream out;
    for (const NettingGroup& group : groups) {
        const bool with_money = group.mode == TradeMode::two_object;
        out << "group " << group.id << " (" << group_kind_name(group.kind) << ", volume "
            << (group.trades.empty() ? "0" : format_rational(group.trades.front().t_units))
            << ", " << group_state_name(group.state) << ")\n";

        out << "  ";
        for (size_t i = 0; i < group.nodes.size(); ++i) {
            out << node_label(group.nodes[i]);
            if (i < group.trades.size()) {
                const AssignedTrade& t = group.trades[i];
                out << " —" << format_rational(t.t_units) << "T";
                if (with_money) out << "/" << format_rational(t.m_amount) << "M";
                out << "→ ";
            }
        }
        if (group.loop) out << node_label(group.nodes.front());
        out << "\n";

        const std::vector<NetObligation> obligations = net_obligations(group);
        std::vector<std::string> headers, t_cells, m_cells;
        for (const NetObligation& ob : obligations) {
            headers.push_back(node_label(ob.node));
            auto cell = [](const Rational& value) {
                if (value > 0) return format_rational(value) + " - out";
                if (value < 0) return format_rational(-value) + " - in";
                return std::string(".");
            };
            t_cells.push_back(cell(ob.net_t));
            m_cells.push_back(cell(ob.net_m));
        }
        std::vector<size_t> widths;
        for (size_t i = 0; i < headers.size(); ++i) {
            size_t w = std::max(headers[i].size(), t_cells[i].size());
            if (with_money) w = std::max(w, m_cells[i].size());
            widths.push_back(w);
        }
        auto row = [&](const std::string& label, const std::vector<std::string>& cells) {
            out << "  " << label;
            for (size_t i = 0; i < cells.size(); ++i)
                out << " | " << pad(cells[i], widths[i]);
            out << "\n";
        };
        row("object", headers);
        row("T     ", t_cells);
        if (with_money) row("M     ", m_cells);
        out << "\n";
    }
    return out.str();
}

}  // namespace chainnet
