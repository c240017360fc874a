#pragma once

#include "chainnet/rational.hpp"

#include <compare>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace chainnet {

struct AgentId {
    std::string value;
    auto operator<=>(const AgentId&) const = default;
};

// A forward contract: t_sender delivers t_units of the traded object T and
// m_sender pays t_units * unit_price of the money object M.
struct Contract {
    long long number = 0;
    AgentId t_sender;
    AgentId m_sender;
    Rational unit_price;  // >= 0
    Rational t_units;     // > 0
};

// Net bilateral position of an ordered pair after offsetting opposite-sided
// contracts: `from` still owes t_units of T, `to` owes m_amount of M.
// m_amount can be negative when the money legs net against the T direction.
struct NettedEdge {
    AgentId from;
    AgentId to;
    Rational t_units;    // > 0
    Rational m_amount;
    Rational unit_price;  // m_amount / t_units
};

// A pair whose T legs offset exactly but whose money legs do not. No T is
// carried, so the remainder settles as a plain payment outside the network.
struct MoneyOnlyTransfer {
    AgentId payer;
    AgentId payee;
    Rational amount;  // > 0
};

struct BilateralNetting {
    std::vector<NettedEdge> edges;              // sorted by (from, to)
    std::vector<MoneyOnlyTransfer> money_only;  // sorted by (payer, payee)
};

enum class BookFormat { csv, json };

// CSV: header "contract_number,t_sender,m_sender,unit_price,t_units".
// JSON: array of objects with the same five keys; numeric fields may be
// given as strings to guarantee exactness. Errors carry line / entry
// positions. An empty file yields an empty book.
std::vector<Contract> load_contracts(std::istream& in, BookFormat format);

// Uniqueness of contract_number, t_sender != m_sender, unit_price >= 0,
// t_units > 0. Throws InputError naming the offending contract.
void validate_contracts(const std::vector<Contract>& contracts);

BilateralNetting bilateral_net(const std::vector<Contract>& contracts);

struct NetPosition {
    Rational net_t;  // positive: net sender of T
    Rational net_m;  // positive: net money inflow over all pairs (profit)
};

// Per-agent totals over netted edges. Agents without edges are absent
// (their position is zero).
std::map<AgentId, NetPosition> net_positions(const std::vector<NettedEdge>& edges);

// Folds money-only transfers into the M legs for whole-book summaries.
void apply_money_only(std::map<AgentId, NetPosition>& positions,
                      const std::vector<MoneyOnlyTransfer>& transfers);

}  // namespace chainnet
