#include "chainnet/verifier.hpp"

#include "chainnet/decomposition.hpp"
#include "chainnet/errors.hpp"
#include "chainnet/flow_network.hpp"
#include "chainnet/netting_group.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

namespace chainnet {

namespace {

std::uint64_t draw(std::mt19937_64& rng, std::uint64_t count) {
    return rng() % count;
}

double unit_draw(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

// lo + k / per_unit for uniform k, covering [lo, hi] in 1/per_unit steps.
Rational draw_step(std::mt19937_64& rng, const Rational& lo, const Rational& hi,
                   int per_unit) {
    const Rational span = (hi - lo) * per_unit;
    const BigInt count = numerator(span) + 1;
    const std::uint64_t k = draw(rng, count.convert_to<std::uint64_t>());
    return lo + Rational(BigInt(k), BigInt(per_unit));
}

void validate_spec(const RandomBookSpec& spec) {
    if (spec.agent_count < 2 || spec.agent_count > 8)
        throw InputError("agent_count must lie in [2, 8]");
    if (spec.contract_count < 0 || spec.contract_count > 20)
        throw InputError("contract_count must lie in [0, 20]");
    if (spec.price_lo < 0 || spec.price_hi < spec.price_lo)
        throw InputError("bad price range");
    if (spec.unit_lo <= 0 || spec.unit_hi < spec.unit_lo)
        throw InputError("bad unit range");
    if (denominator(Rational((spec.price_hi - spec.price_lo) * 100)) != 1 ||
        denominator(Rational((spec.unit_hi - spec.unit_lo) * 4)) != 1)
        throw InputError("ranges must be step-aligned (prices 1/100, units 1/4)");
}

std::string describe_trade(const AssignedTrade& t) {
    return t.from.value + "->" + t.to.value + " " + format_rational(t.t_units) + "T/" +
           format_rational(t.m_amount) + "M@" + format_rational(t.unit_price) +
           " lambda=" + format_rational(t.lambda) + " origin=" +
           t.origin_pair.first.value + "->" + t.origin_pair.second.value;
}

}  // namespace

std::vector<Contract> random_book(const RandomBookSpec& spec) {
    validate_spec(spec);
    std::mt19937_64 rng(spec.seed);

    std::vector<AgentId> agents;
    for (int i = 0; i < spec.agent_count; ++i)
        agents.push_back(AgentId{std::string(1, static_cast<char>('a' + i))});

    std::vector<Contract> contracts;
    for (int n = 1; n <= spec.contract_count; ++n) {
        Contract c;
        c.number = n;
        if (!contracts.empty() && draw(rng, 8) == 0) {
            // Mirror an earlier contract's T leg at a fresh price so some
            // pairs net to zero T with a money remainder.
            const Contract& base = contracts[draw(rng, contracts.size())];
            c.t_sender = base.m_sender;
            c.m_sender = base.t_sender;
            c.t_units = base.t_units;
            c.unit_price = draw_step(rng, spec.price_lo, spec.price_hi, 100);
        } else {
            const size_t i = draw(rng, agents.size());
            size_t j = draw(rng, agents.size() - 1);
            if (j >= i) ++j;
            c.t_sender = agents[i];
            c.m_sender = agents[j];
            c.unit_price = draw_step(rng, spec.price_lo, spec.price_hi, 100);
            c.t_units = draw_step(rng, spec.unit_lo, spec.unit_hi, 4);
        }
        contracts.push_back(std::move(c));
    }
    validate_contracts(contracts);
    return contracts;
}

std::map<AgentId, NetPosition> oracle_positions(const std::vector<Contract>& contracts) {
    std::map<AgentId, NetPosition> positions;
    for (const Contract& c : contracts) {
        const Rational money = c.t_units * c.unit_price;
        NetPosition& sender = positions[c.t_sender];
        NetPosition& payer = positions[c.m_sender];
        sender.net_t += c.t_units;
        sender.net_m += money;
        payer.net_t -= c.t_units;
        payer.net_m -= money;
    }
    for (auto it = positions.begin(); it != positions.end();)
        it = it->second.net_t == 0 && it->second.net_m == 0 ? positions.erase(it)
                                                            : std::next(it);
    return positions;
}

Rational oracle_min_residual_m(std::vector<std::pair<Rational, Rational>> slots,
                               const Rational& excess) {
    if (excess < 0) throw InputError("excess must be nonnegative");
    if (excess == 0) return 0;
    if (slots.size() > 8) throw InputError("brute force capped at 8 slots");
    Rational total;
    for (const auto& [price, capacity] : slots) {
        if (capacity <= 0) throw InputError("slot capacities must be positive");
        total += capacity;
    }
    if (total < excess) throw InputError("slots cannot cover the excess");

    std::vector<size_t> order(slots.size());
    std::iota(order.begin(), order.end(), size_t{0});
    Rational best;
    bool first = true;
    do {
        Rational remaining = excess;
        Rational cost;
        for (size_t index : order) {
            if (remaining == 0) break;
            const Rational take = std::min(remaining, slots[index].second);
            cost += take * slots[index].first;
            remaining -= take;
        }
        if (first || cost < best) {
            best = cost;
            first = false;
        }
    } while (std::next_permutation(order.begin(), order.end()));
    return best;
}

PropertyReport run_property_suite(const RandomBookSpec& spec, double deficiency_density) {
    PropertyReport report;
    report.seed = spec.seed;
    auto fail = [&](const std::string& name, const std::string& detail) {
        report.violations.push_back(name + ": " + detail);
    };
    auto check = [&](bool ok, const std::string& name, const std::string& detail) {
        ++report.checks_run;
        if (!ok) fail(name, detail);
    };

    try {
        // Scenario draws use a distinct stream so book generation stays
        // reproducible on its own.
        std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ull);
        const std::vector<Contract> contracts = random_book(spec);
        const BilateralNetting netting = bilateral_net(contracts);

        {  // bilateral netting against the raw-contract oracle
            auto positions = net_positions(netting.edges);
            apply_money_only(positions, netting.money_only);
            for (auto it = positions.begin(); it != positions.end();)
                it = it->second.net_t == 0 && it->second.net_m == 0
                         ? positions.erase(it)
                         : std::next(it);
            const auto oracle = oracle_positions(contracts);
            std::string mismatch;
            for (const auto& [agent, expected] : oracle) {
                auto it = positions.find(agent);
                if (it == positions.end() || it->second.net_t != expected.net_t ||
                    it->second.net_m != expected.net_m)
                    mismatch = "agent " + agent.value;
            }
            if (positions.size() != oracle.size()) mismatch = "agent sets differ";
            check(mismatch.empty(), "netting-oracle", mismatch);

            Rational t_sum, m_sum;
            for (const auto& [agent, position] : oracle) {
                t_sum += position.net_t;
                m_sum += position.net_m;
            }
            check(t_sum == 0 && m_sum == 0, "conservation",
                  "book-wide positions do not cancel");
        }

        {  // netting an already-netted book changes nothing
            const bool restatable =
                std::all_of(netting.edges.begin(), netting.edges.end(),
                            [](const NettedEdge& e) { return e.m_amount >= 0; });
            if (restatable) {
                std::vector<Contract> restated;
                for (const NettedEdge& e : netting.edges)
                    restated.push_back({static_cast<long long>(restated.size() + 1),
                                        e.from, e.to, e.unit_price, e.t_units});
                const BilateralNetting again = bilateral_net(restated);
                bool same = again.money_only.empty() &&
                            again.edges.size() == netting.edges.size();
                for (size_t i = 0; same && i < netting.edges.size(); ++i) {
                    const NettedEdge& a = netting.edges[i];
                    const NettedEdge& b = again.edges[i];
                    same = a.from == b.from && a.to == b.to && a.t_units == b.t_units &&
                           a.m_amount == b.m_amount && a.unit_price == b.unit_price;
                }
                check(same, "idempotence", "re-netting the netted edges moved them");
            }
        }

        const TradeFlowNetwork network = build_tfn(netting.edges);
        {
            const auto violations = validate_flow_conditions(network);
            ++report.checks_run;
            for (const FlowViolation& v : violations)
                fail("flow-conditions", v.condition + ": " + v.detail);
        }

        const std::map<AgentId, NetPosition> gammas = net_positions(netting.edges);
        Rational excess_total;
        for (const auto& [agent, position] : gammas)
            if (position.net_t > 0) excess_total += position.net_t;

        check(cut_flow(network, {source_node()}) == excess_total, "total-excess",
              "source cut does not carry the total excess");
        {
            std::set<TfnNode> s_side{source_node()};
            for (const TfnNode& node : network.nodes)
                if (node.kind != NodeKind::Source && node.kind != NodeKind::Sink &&
                    draw(rng, 2) == 0)
                    s_side.insert(node);
            check(cut_flow(network, s_side) == excess_total, "cut-constancy",
                  "a random cut carries a different flow");
        }

        for (const auto& [agent, position] : gammas) {
            if (position.net_t == 0) continue;
            const bool sender = position.net_t > 0;
            std::vector<std::pair<Rational, Rational>> slots;
            for (const NettedEdge& e : netting.edges)
                if ((sender ? e.from : e.to) == agent)
                    slots.push_back({e.unit_price, e.t_units});
            Rational attached;
            const TfnNode split{agent, sender ? NodeKind::NS : NodeKind::NR};
            for (const TfnEdge& e : network.edges) {
                if (e.from.kind == NodeKind::Source || e.to.kind == NodeKind::Sink)
                    continue;
                if ((sender ? e.from : e.to) == split)
                    attached += e.capacity * *e.unit_price;
            }
            const Rational wanted = oracle_min_residual_m(
                slots, sender ? position.net_t : Rational(-position.net_t));
            check(attached == wanted, "split-minimality",
                  "agent " + agent.value + ": " + format_rational(attached) +
                      " != " + format_rational(wanted));
        }

        {  // the network must not depend on the split order
            std::vector<AgentId> order;
            for (const auto& [agent, position] : gammas) order.push_back(agent);
            std::reverse(order.begin(), order.end());
            check(tfn_to_json(build_tfn(netting.edges, order)) == tfn_to_json(network),
                  "split-order", "reversed split order changed the network");
        }

        const Decomposition decomposition = decompose(network);
        {
            Rational chain_total;
            for (const Chain& chain : decomposition.chains) {
                chain_total += chain.t_volume;
                bool shape = chain.nodes.size() >= 2 && chain.t_volume > 0 &&
                             chain.nodes.front().kind == NodeKind::NS &&
                             chain.nodes.back().kind == NodeKind::NR;
                for (size_t i = 1; shape && i + 1 < chain.nodes.size(); ++i)
                    shape = chain.nodes[i].kind == NodeKind::BT;
                check(shape, "chain-shape", "a chain is not NS..BT..NR");
            }
            for (const Cycle& cycle : decomposition.cycles) {
                bool shape = cycle.nodes.size() >= 4 && cycle.t_volume > 0 &&
                             cycle.nodes.front() == cycle.nodes.back();
                for (size_t i = 0; shape && i + 1 < cycle.nodes.size(); ++i)
                    shape = cycle.nodes[i].kind == NodeKind::BT;
                check(shape, "cycle-shape", "a cycle is not a closed BT walk");
            }
            check(chain_total == excess_total, "chain-volume",
                  "chains do not carry the whole excess");

            std::map<std::pair<AgentId, AgentId>, Rational> carved;
            auto carve = [&](const std::vector<TfnNode>& nodes, const Rational& volume) {
                for (size_t i = 0; i + 1 < nodes.size(); ++i)
                    carved[{nodes[i].agent, nodes[i + 1].agent}] += volume;
            };
            for (const Chain& chain : decomposition.chains)
                carve(chain.nodes, chain.t_volume);
            for (const Cycle& cycle : decomposition.cycles)
                carve(cycle.nodes, cycle.t_volume);
            bool rebuilt = carved.size() == netting.edges.size();
            for (const NettedEdge& e : netting.edges) {
                auto it = carved.find({e.from, e.to});
                if (it == carved.end() || it->second != e.t_units) rebuilt = false;
            }
            check(rebuilt, "reconstruction",
                  "chains and cycles do not rebuild the netted edges");
        }

        const std::vector<NettingGroup> groups = attach_m(decomposition, netting.edges);
        {
            std::map<std::pair<AgentId, AgentId>, const NettedEdge*> by_pair;
            for (const NettedEdge& e : netting.edges) by_pair[{e.from, e.to}] = &e;
            for (const NettingGroup& group : groups)
                for (const AssignedTrade& t : group.trades) {
                    const NettedEdge* parent = by_pair.at(t.origin_pair);
                    check(t.m_amount == t.t_units * t.unit_price &&
                              t.unit_price == parent->unit_price &&
                              t.lambda == t.t_units / parent->t_units,
                          "attachment", group.id + ": " + describe_trade(t));
                }
            ++report.checks_run;
            try {
                lambda_table(groups);
            } catch (const ValidationError& e) {
                fail("lambda", e.what());
            }

            std::map<AgentId, Rational> credited;
            for (const NettingGroup& group : groups) {
                Rational t_sum, m_sum;
                for (const NetObligation& ob : group.obligations) {
                    t_sum += ob.net_t;
                    m_sum += ob.net_m;
                    credited[ob.node.agent] -= ob.net_m;
                }
                check(t_sum == 0 && m_sum == 0, "group-conservation",
                      group.id + " does not conserve");
            }
            std::string broken;
            for (const auto& [agent, position] : gammas)
                if ((credited.count(agent) ? credited.at(agent) : Rational(0)) !=
                    position.net_m)
                    broken = "agent " + agent.value;
            check(broken.empty(), "profit-identity", broken);

            const MaximalNettingReport maximal =
                check_maximal_netting(groups, netting.edges, true);
            check(maximal.residuals_ok, "maximal-residual",
                  "group T residuals disagree with the imbalances");
            check(maximal.excess_ok, "maximal-excess",
                  "excess money attachment is not minimal");
        }

        // ---- deficiency scenario: one wave against the fresh groups, then a
        // second wave addressed to already-decomposed ids.
        std::vector<DeficiencyEvent> events;
        for (const NettingGroup& group : groups) {
            if (unit_draw(rng) >= deficiency_density) continue;
            std::vector<std::pair<size_t, ObjectKind>> candidates;
            for (size_t i = 0; i < group.obligations.size(); ++i) {
                if (group.obligations[i].net_t > 0) candidates.push_back({i, ObjectKind::T});
                if (group.obligations[i].net_m > 0) candidates.push_back({i, ObjectKind::M});
            }
            if (candidates.empty()) continue;
            const auto [index, object] = candidates[draw(rng, candidates.size())];
            const Rational owed = object == ObjectKind::T
                                      ? group.obligations[index].net_t
                                      : group.obligations[index].net_m;
            events.push_back({group.id, group.nodes[index].agent,
                              group.nodes[index].kind, object,
                              draw(rng, 2) == 0 ? owed : owed / 2});
        }
        const SettlementResult stage1 = settle(groups, events);

        std::map<std::string, std::vector<std::string>> children;
        for (const DeficiencyRecord& record : stage1.log)
            children[record.resolved_group] = record.residual_ids;
        std::vector<DeficiencyEvent> wave2;
        for (const NettingGroup& group : groups) {
            if (!children.count(group.id)) continue;
            if (unit_draw(rng) >= deficiency_density) continue;
            std::vector<std::string> live;
            std::vector<std::string> frontier{group.id};
            while (!frontier.empty()) {
                const std::string id = frontier.back();
                frontier.pop_back();
                auto it = children.find(id);
                if (it != children.end())
                    frontier.insert(frontier.end(), it->second.begin(), it->second.end());
                else if (id != group.id)
                    live.push_back(id);
            }
            std::sort(live.begin(), live.end());
            std::vector<std::tuple<AgentId, NodeKind, ObjectKind>> tuples;
            for (const std::string& id : live) {
                const NettingGroup& g = stage1.all_groups.at(id);
                for (const NetObligation& ob : g.obligations) {
                    if (ob.net_t > 0)
                        tuples.push_back({ob.node.agent, ob.node.kind, ObjectKind::T});
                    if (ob.net_m > 0)
                        tuples.push_back({ob.node.agent, ob.node.kind, ObjectKind::M});
                }
            }
            if (tuples.empty()) continue;
            const auto [agent, kind, object] = tuples[draw(rng, tuples.size())];
            // settle() will hit the first live descendant owning that tuple;
            // size the shortfall against exactly that node.
            Rational owed;
            for (const std::string& id : live) {
                const NettingGroup& g = stage1.all_groups.at(id);
                bool found = false;
                for (const NetObligation& ob : g.obligations) {
                    const Rational value =
                        object == ObjectKind::T ? ob.net_t : ob.net_m;
                    if (ob.node.agent == agent && ob.node.kind == kind && value > 0) {
                        owed = value;
                        found = true;
                        break;
                    }
                }
                if (found) break;
            }
            wave2.push_back({group.id, agent, kind, object,
                             draw(rng, 2) == 0 ? owed : owed / 2});
        }
        for (const DeficiencyEvent& event : wave2) events.push_back(event);
        const SettlementResult result = wave2.empty() ? stage1 : settle(groups, events);

        for (const DeficiencyRecord& record : result.log) {
            const NettingGroup& parent = result.all_groups.at(record.resolved_group);
            const AssignedTrade& removed = parent.trades.at(record.removed_trade);

            const RecoveredContract* recovered = nullptr;
            for (const RecoveredContract& r : result.recovered)
                if (r.label == record.recovered_label) recovered = &r;
            check(recovered && recovered->from == removed.from &&
                      recovered->to == removed.to &&
                      recovered->t_units == removed.t_units &&
                      recovered->m_amount == removed.m_amount &&
                      recovered->origin_pair == removed.origin_pair,
                  "recovery-identity",
                  record.resolved_group + ": recovered contract drifted from " +
                      describe_trade(removed));

            std::multiset<std::string> before, after;
            for (size_t i = 0; i < parent.trades.size(); ++i)
                if (i != record.removed_trade)
                    before.insert(describe_trade(parent.trades[i]));
            for (const std::string& id : record.residual_ids)
                for (const AssignedTrade& t : result.all_groups.at(id).trades)
                    after.insert(describe_trade(t));
            check(before == after, "locality-trades",
                  record.resolved_group + ": surviving trades changed");

            // Agents the node trades with directly, via its incident trades.
            auto neighbours = [](const NettingGroup& g, size_t index) {
                std::set<AgentId> out;
                const size_t count = g.nodes.size();
                if (g.loop || index > 0)
                    out.insert(g.trades[(index + count - 1) % count].from);
                if (g.loop || index + 1 < count) out.insert(g.trades[index].to);
                return out;
            };

            const size_t n = parent.nodes.size();
            const TfnNode& tail = parent.nodes[record.removed_trade];
            const TfnNode& head = parent.nodes[(record.removed_trade + 1) % n];
            for (size_t i = 0; i < n; ++i) {
                const TfnNode& node = parent.nodes[i];
                if (node == tail || node == head) continue;
                int hits = 0;
                Rational net_t, net_m;
                std::set<AgentId> counterparties_after;
                for (const std::string& id : record.residual_ids) {
                    const NettingGroup& residual = result.all_groups.at(id);
                    for (size_t k = 0; k < residual.nodes.size(); ++k)
                        if (residual.nodes[k] == node) {
                            ++hits;
                            net_t = residual.obligations[k].net_t;
                            net_m = residual.obligations[k].net_m;
                            counterparties_after = neighbours(residual, k);
                        }
                }
                check(hits == 1 && net_t == parent.obligations[i].net_t &&
                          net_m == parent.obligations[i].net_m,
                      "locality-obligations",
                      record.resolved_group + ": " + node_label(node) + " changed");
                check(neighbours(parent, i) == counterparties_after,
                      "locality-counterparties",
                      record.resolved_group + ": " + node_label(node) +
                          " faces different counterparties");
            }
        }

        {  // Executable groups plus recovered contracts keep every agent whole.
            std::map<AgentId, Rational> profit, t_flow;
            std::map<AgentId, std::set<AgentId>> partners;
            auto book_leg = [&](const AgentId& from, const AgentId& to,
                                const Rational& t, const Rational& m) {
                profit[from] += m;
                profit[to] -= m;
                t_flow[from] += t;
                t_flow[to] -= t;
                partners[from].insert(to);
                partners[to].insert(from);
            };
            for (const NettingGroup& group : result.executable)
                for (const AssignedTrade& t : group.trades)
                    book_leg(t.from, t.to, t.t_units, t.m_amount);
            for (const RecoveredContract& r : result.recovered)
                book_leg(r.from, r.to, r.t_units, r.m_amount);

            std::string broken;
            for (const auto& [agent, position] : gammas) {
                const Rational p = profit.count(agent) ? profit.at(agent) : Rational(0);
                const Rational t = t_flow.count(agent) ? t_flow.at(agent) : Rational(0);
                if (p != position.net_m) broken = "profit of " + agent.value;
                if (t != position.net_t) broken = "T flow of " + agent.value;
            }
            check(broken.empty(), "profit-preservation", broken);

            std::map<AgentId, std::set<AgentId>> original;
            for (const Contract& c : contracts) {
                original[c.t_sender].insert(c.m_sender);
                original[c.m_sender].insert(c.t_sender);
            }
            std::string stranger;
            for (const auto& [agent, others] : partners)
                for (const AgentId& other : others)
                    if (!original.count(agent) || !original.at(agent).count(other))
                        stranger = agent.value + " now faces " + other.value;
            check(stranger.empty(), "counterparty-subset", stranger);
        }

        check(result.log.size() == events.size(), "termination",
              "event count and decomposition log disagree");

        {  // every executable group clears against the committed escrow
            auto all = result.all_groups;
            EscrowLedger ledger = result.ledger;
            ++report.checks_run;
            try {
                for (auto& [id, group] : all) {
                    if (group.state != GroupState::executable) continue;
                    Rational t_sum, m_sum;
                    for (const Transfer& transfer : execute(group, ledger)) {
                        const Rational signed_amount =
                            transfer.deliver ? transfer.amount : -transfer.amount;
                        (transfer.object == ObjectKind::T ? t_sum : m_sum) += signed_amount;
                    }
                    if (t_sum != 0 || m_sum != 0)
                        fail("execution", id + ": transfers are not zero-sum");
                }
            } catch (const std::exception& e) {
                fail("execution", e.what());
            }
        }

        for (const NettingGroup& group : groups) {
            const NettingGroup stripped = strip_m(group);
            bool clean = true;
            for (size_t i = 0; i < stripped.obligations.size(); ++i)
                if (stripped.obligations[i].net_m != 0 ||
                    stripped.obligations[i].net_t != group.obligations[i].net_t)
                    clean = false;
            check(clean, "strip", group.id + ": single-object projection drifted");
        }
    } catch (const std::exception& e) {
        fail("unexpected-exception", e.what());
    }
    return report;
}

}  // namespace chainnet
