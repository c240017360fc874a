#include "chainnet/contracts.hpp"

#include "chainnet/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <istream>
#include <set>
#include <sstream>
#include <tuple>

namespace chainnet {

namespace {

using nlohmann::json;

constexpr const char* kCsvHeader = "contract_number,t_sender,m_sender,unit_price,t_units";

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

long long parse_contract_number(const std::string& text, const std::string& where) {
    try {
        size_t used = 0;
        long long n = std::stoll(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return n;
    } catch (const std::exception&) {
        throw InputError(where + ": contract_number is not an integer: '" + text + "'");
    }
}

std::vector<Contract> load_csv(std::istream& in) {
    std::vector<Contract> contracts;
    std::string line;
    size_t line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        if (!saw_header) {
            if (line != kCsvHeader)
                throw InputError("line " + std::to_string(line_no) +
                                 ": expected header '" + kCsvHeader + "'");
            saw_header = true;
            continue;
        }
        const std::string where = "line " + std::to_string(line_no);
        auto fields = split_csv(line);
        if (fields.size() != 5)
            throw InputError(where + ": expected 5 fields, got " +
                             std::to_string(fields.size()));
        Contract c;
        c.number = parse_contract_number(fields[0], where);
        c.t_sender = AgentId{fields[1]};
        c.m_sender = AgentId{fields[2]};
        try {
            c.unit_price = parse_rational(fields[3]);
            c.t_units = parse_rational(fields[4]);
        } catch (const InputError& e) {
            throw InputError(where + ": " + e.what());
        }
        contracts.push_back(std::move(c));
    }
    return contracts;
}

// Numeric JSON fields are recovered through their shortest round-trip text
// so that literals like 3.77 survive exactly; strings are parsed directly.
Rational json_number(const json& value, const std::string& where, const char* key) {
    if (value.is_string()) {
        try {
            return parse_rational(value.get<std::string>());
        } catch (const InputError& e) {
            throw InputError(where + ": " + key + ": " + e.what());
        }
    }
    if (value.is_number_integer())
        return Rational(BigInt(std::to_string(value.get<long long>())));
    if (value.is_number_float()) return parse_rational(value.dump());
    throw InputError(where + ": " + key + " must be a number or numeric string");
}

std::vector<Contract> load_json(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("invalid JSON: ") + e.what());
    }
    if (doc.is_null()) return {};
    if (!doc.is_array()) throw InputError("contract book must be a JSON array");

    std::vector<Contract> contracts;
    for (size_t i = 0; i < doc.size(); ++i) {
        const std::string where = "entry " + std::to_string(i + 1);
        const json& entry = doc[i];
        if (!entry.is_object()) throw InputError(where + ": not an object");
        for (const char* key :
             {"contract_number", "t_sender", "m_sender", "unit_price", "t_units"})
            if (!entry.contains(key))
                throw InputError(where + ": missing key '" + std::string(key) + "'");
        Contract c;
        const json& number = entry["contract_number"];
        if (number.is_number_integer())
            c.number = number.get<long long>();
        else if (number.is_string())
            c.number = parse_contract_number(number.get<std::string>(), where);
        else
            throw InputError(where + ": contract_number is not an integer");
        if (!entry["t_sender"].is_string() || !entry["m_sender"].is_string())
            throw InputError(where + ": senders must be strings");
        c.t_sender = AgentId{entry["t_sender"].get<std::string>()};
        c.m_sender = AgentId{entry["m_sender"].get<std::string>()};
        c.unit_price = json_number(entry["unit_price"], where, "unit_price");
        c.t_units = json_number(entry["t_units"], where, "t_units");
        contracts.push_back(std::move(c));
    }
    return contracts;
}

}  // namespace

std::vector<Contract> load_contracts(std::istream& in, BookFormat format) {
    auto contracts = format == BookFormat::csv ? load_csv(in) : load_json(in);
    validate_contracts(contracts);
    return contracts;
}

void validate_contracts(const std::vector<Contract>& contracts) {
    std::set<long long> seen;
    for (const Contract& c : contracts) {
        const std::string where = "contract " + std::to_string(c.number);
        if (!seen.insert(c.number).second)
            throw InputError(where + ": duplicate contract_number");
        if (c.t_sender.value.empty() || c.m_sender.value.empty())
            throw InputError(where + ": empty agent id");
        if (c.t_sender == c.m_sender)
            throw InputError(where + ": t_sender and m_sender are the same agent");
        if (c.unit_price < 0) throw InputError(where + ": negative unit_price");
        if (c.t_units <= 0) throw InputError(where + ": t_units must be positive");
    }
}

BilateralNetting bilateral_net(const std::vector<Contract>& contracts) {
    struct PairTotals {
        Rational t_fwd, t_bwd;  // T from lo->hi and hi->lo
        Rational m_fwd, m_bwd;  // M owed for those legs
    };
    std::map<std::pair<AgentId, AgentId>, PairTotals> pairs;
    for (const Contract& c : contracts) {
        const bool forward = c.t_sender < c.m_sender;
        auto key = forward ? std::make_pair(c.t_sender, c.m_sender)
                           : std::make_pair(c.m_sender, c.t_sender);
        PairTotals& totals = pairs[key];
        const Rational money = c.t_units * c.unit_price;
        if (forward) {
            totals.t_fwd += c.t_units;
            totals.m_fwd += money;
        } else {
            totals.t_bwd += c.t_units;
            totals.m_bwd += money;
        }
    }

    BilateralNetting result;
    for (const auto& [key, totals] : pairs) {
        const Rational net_t = totals.t_fwd - totals.t_bwd;
        const Rational net_m = totals.m_fwd - totals.m_bwd;
        if (net_t == 0) {
            if (net_m > 0)
                result.money_only.push_back({key.second, key.first, net_m});
            else if (net_m < 0)
                result.money_only.push_back({key.first, key.second, -net_m});
            continue;
        }
        NettedEdge edge;
        if (net_t > 0) {
            edge.from = key.first;
            edge.to = key.second;
            edge.t_units = net_t;
            edge.m_amount = net_m;
        } else {
            edge.from = key.second;
            edge.to = key.first;
            edge.t_units = -net_t;
            edge.m_amount = -net_m;
        }
        edge.unit_price = edge.m_amount / edge.t_units;
        result.edges.push_back(std::move(edge));
    }
    // std::map iteration already yields (from, to) order for edges built off
    // ordered pair keys only when net_t > 0 throughout; restore it explicitly.
    std::sort(result.edges.begin(), result.edges.end(),
              [](const NettedEdge& a, const NettedEdge& b) {
                  return std::tie(a.from, a.to) < std::tie(b.from, b.to);
              });
    std::sort(result.money_only.begin(), result.money_only.end(),
              [](const MoneyOnlyTransfer& a, const MoneyOnlyTransfer& b) {
                  return std::tie(a.payer, a.payee) < std::tie(b.payer, b.payee);
              });
    return result;
}

std::map<AgentId, NetPosition> net_positions(const std::vector<NettedEdge>& edges) {
    std::map<AgentId, NetPosition> positions;
    for (const NettedEdge& e : edges) {
        NetPosition& from = positions[e.from];
        NetPosition& to = positions[e.to];
        from.net_t += e.t_units;
        to.net_t -= e.t_units;
        from.net_m += e.m_amount;
        to.net_m -= e.m_amount;
    }
    return positions;
}

void apply_money_only(std::map<AgentId, NetPosition>& positions,
                      const std::vector<MoneyOnlyTransfer>& transfers) {
    for (const MoneyOnlyTransfer& t : transfers) {
        positions[t.payer].net_m -= t.amount;
        positions[t.payee].net_m += t.amount;
    }
}

}  // namespace chainnet
