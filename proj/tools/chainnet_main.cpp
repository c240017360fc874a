#include "chainnet/contracts.hpp"
#include "chainnet/decomposition.hpp"
#include "chainnet/errors.hpp"
#include "chainnet/flow_network.hpp"
#include "chainnet/netting_group.hpp"
#include "chainnet/reattach.hpp"
#include "chainnet/settlement.hpp"
#include "chainnet/verifier.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace chainnet;
using nlohmann::json;

BookFormat pick_format(const std::string& path, const std::string& flag) {
    if (flag == "csv") return BookFormat::csv;
    if (flag == "json") return BookFormat::json;
    return path.size() >= 5 && path.substr(path.size() - 5) == ".json"
               ? BookFormat::json
               : BookFormat::csv;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << text;
}

struct Pipeline {
    std::vector<Contract> contracts;
    BilateralNetting netting;
    TradeFlowNetwork network;
    std::vector<NettingGroup> groups;
    MaximalNettingReport maximal;
    TradeMode mode = TradeMode::two_object;
    bool fixture = false;
};

Pipeline run_pipeline(const std::string& book_path, const std::string& format,
                      const std::string& fixture_path, const std::string& mode) {
    Pipeline p;
    {
        std::ifstream in(book_path);
        if (!in) throw InputError("cannot open " + book_path);
        p.contracts = load_contracts(in, pick_format(book_path, format));
    }
    p.netting = bilateral_net(p.contracts);
    p.network = build_tfn(p.netting.edges);
    if (const auto violations = validate_flow_conditions(p.network); !violations.empty()) {
        std::string all;
        for (const FlowViolation& v : violations) all += "\n  " + v.condition + ": " + v.detail;
        throw ValidationError("flow conditions violated:" + all);
    }
    if (fixture_path.empty()) {
        p.groups = attach_m(decompose(p.network), p.netting.edges);
    } else {
        p.groups = groups_from_fixture(slurp(fixture_path), p.netting.edges);
        p.fixture = true;
    }
    // Listings injected as fixtures may attach excess money non-minimally;
    // only the pipeline's own decomposition is held to the greedy minimum.
    p.maximal = check_maximal_netting(p.groups, p.netting.edges, !p.fixture);
    if (!p.maximal.ok())
        throw ValidationError("netting is not maximal for this decomposition");
    if (mode == "single_object") {
        p.mode = TradeMode::single_object;
        for (NettingGroup& group : p.groups) group = strip_m(group);
    }
    return p;
}

json positions_json(const std::map<AgentId, NetPosition>& positions) {
    json out = json::object();
    for (const auto& [agent, position] : positions)
        out[agent.value] = {{"net_t", format_rational(position.net_t)},
                            {"net_m", format_rational(position.net_m)}};
    return out;
}

json netting_json(const BilateralNetting& netting) {
    json doc;
    doc["edges"] = json::array();
    for (const NettedEdge& e : netting.edges)
        doc["edges"].push_back({{"from", e.from.value},
                                {"to", e.to.value},
                                {"t_units", format_rational(e.t_units)},
                                {"m_amount", format_rational(e.m_amount)},
                                {"unit_price", format_rational(e.unit_price)}});
    doc["money_only"] = json::array();
    for (const MoneyOnlyTransfer& t : netting.money_only)
        doc["money_only"].push_back({{"payer", t.payer.value},
                                     {"payee", t.payee.value},
                                     {"amount", format_rational(t.amount)}});
    return doc;
}

json maximal_json(const MaximalNettingReport& report, bool with_excess) {
    json doc;
    doc["residuals_ok"] = report.residuals_ok;
    doc["residuals"] = json::array();
    for (const auto& row : report.residuals)
        doc["residuals"].push_back({{"agent", row.agent.value},
                                    {"residual_t", format_rational(row.residual_t)},
                                    {"imbalance", format_rational(row.expected_gamma)},
                                    {"matches", row.matches}});
    if (with_excess) {
        doc["excess_ok"] = report.excess_ok;
        doc["excess"] = json::array();
        for (const auto& row : report.excess)
            doc["excess"].push_back({{"agent", row.agent.value},
                                     {"attached_m", format_rational(row.attached_m)},
                                     {"greedy_min", format_rational(row.greedy_min)},
                                     {"minimal", row.minimal}});
    }
    return doc;
}

json lambda_json(const std::vector<NettingGroup>& groups) {
    json doc = json::object();
    for (const auto& [pair, entries] : lambda_table(groups)) {
        json list = json::array();
        for (const LambdaEntry& entry : entries)
            list.push_back({{"group", entry.group_id},
                            {"lambda", format_rational(entry.lambda)}});
        doc[pair.first.value + "->" + pair.second.value] = std::move(list);
    }
    return doc;
}

int cmd_net(const std::string& input, const std::string& format,
            const std::string& output) {
    std::ifstream in(input);
    if (!in) throw InputError("cannot open " + input);
    const auto contracts = load_contracts(in, pick_format(input, format));
    const BilateralNetting netting = bilateral_net(contracts);

    auto positions = net_positions(netting.edges);
    Rational excess;
    for (const auto& [agent, position] : positions)
        if (position.net_t > 0) excess += position.net_t;
    apply_money_only(positions, netting.money_only);

    Rational t_sum, m_sum;
    for (const auto& [agent, position] : positions) {
        t_sum += position.net_t;
        m_sum += position.net_m;
    }
    if (t_sum != 0 || m_sum != 0)
        throw ValidationError("netted positions do not conserve");

    json doc = netting_json(netting);
    doc["positions"] = positions_json(positions);
    doc["total_excess"] = format_rational(excess);
    write_output(output, doc.dump(2) + "\n");
    return 0;
}

int cmd_decompose(const std::string& input, const std::string& format,
                  const std::string& fixture, const std::string& mode,
                  const std::string& output) {
    const Pipeline p = run_pipeline(input, format, fixture, mode);
    json doc;
    doc["netting"] = netting_json(p.netting);
    doc["network"] = json::parse(tfn_to_json(p.network));
    doc["groups"] = json::parse(groups_to_json(p.groups))["groups"];
    doc["lambda"] = lambda_json(p.groups);
    doc["maximal_netting"] = maximal_json(p.maximal, !p.fixture);
    doc["initial_contracts_superseded"] = true;
    write_output(output, doc.dump(2) + "\n");
    return 0;
}

int cmd_simulate(const std::string& input, const std::string& format,
                 const std::string& fixture, const std::string& mode,
                 const std::string& scenario_path, const std::string& output) {
    const Pipeline p = run_pipeline(input, format, fixture, mode);
    std::ifstream scenario_in(scenario_path);
    if (!scenario_in) throw InputError("cannot open " + scenario_path);
    const auto scenario = load_scenario(scenario_in);

    SettlementResult result = settle(p.groups, scenario);
    std::map<std::string, std::vector<Transfer>> transfers;
    EscrowLedger ledger = result.ledger;
    for (NettingGroup group : result.executable)
        transfers[group.id] = execute(group, ledger);
    write_output(output, settlement_to_json(result, transfers));
    return 0;
}

int cmd_verify(int seeds, int agents, int contracts, double density,
               const std::string& report_path) {
    std::ostringstream text;
    int failing = 0;
    long long checks = 0;
    for (int seed = 0; seed < seeds; ++seed) {
        RandomBookSpec spec;
        spec.agent_count = agents;
        spec.contract_count = contracts;
        spec.seed = static_cast<std::uint64_t>(seed);
        const PropertyReport report = run_property_suite(spec, density);
        checks += report.checks_run;
        text << "seed " << seed << ": " << (report.ok() ? "ok" : "FAIL") << " ("
             << report.checks_run << " checks)\n";
        if (!report.ok()) {
            ++failing;
            for (const std::string& violation : report.violations)
                text << "  " << violation << "\n";
        }
    }
    text << "seeds: " << seeds << ", failing: " << failing << ", checks: " << checks
         << "\n";
    if (!report_path.empty()) write_output(report_path, text.str());
    std::cout << text.str();
    if (failing > 0)
        throw ValidationError(std::to_string(failing) + " of " + std::to_string(seeds) +
                              " seeds violated invariants");
    return 0;
}

int cmd_report(const std::string& input, const std::string& format,
               const std::string& fixture, const std::string& mode,
               const std::string& output) {
    const Pipeline p = run_pipeline(input, format, fixture, mode);
    std::ostringstream text;
    text << "contracts: " << p.contracts.size() << "\n";
    text << "netted edges:\n";
    for (const NettedEdge& e : p.netting.edges)
        text << "  " << e.from.value << " —" << format_rational(e.t_units) << "T/"
             << format_rational(e.m_amount) << "M→ " << e.to.value << "  (price "
             << format_rational(e.unit_price) << ")\n";
    for (const MoneyOnlyTransfer& t : p.netting.money_only)
        text << "  " << t.payer.value << " pays " << format_rational(t.amount) << "M to "
             << t.payee.value << " (no T remains)\n";
    text << "imbalances:\n";
    for (const auto& [agent, position] : net_positions(p.netting.edges))
        text << "  " << agent.value << ": " << format_rational(position.net_t)
             << "T, profit " << format_rational(position.net_m) << "M\n";
    text << "\n" << render_group_report(p.groups);
    text << "maximal netting: residuals "
         << (p.maximal.residuals_ok ? "match the imbalances" : "DIVERGE") << "\n";
    write_output(output, text.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multilateral netting of bilateral trade obligations"};
    app.require_subcommand(1);

    std::string input, format = "auto", output, fixture, mode = "two_object";
    std::string scenario, report_path;
    int seeds = 100, agents = 6, contracts = 12;
    double density = 0.3;

    auto add_book = [&](CLI::App* cmd) {
        cmd->add_option("-i,--input", input, "contract book (CSV or JSON)")->required();
        cmd->add_option("--format", format, "book format")
            ->check(CLI::IsMember({"auto", "csv", "json"}));
        cmd->add_option("-o,--output", output, "write here instead of stdout");
    };
    auto add_groups = [&](CLI::App* cmd) {
        cmd->add_option("--fixture", fixture,
                        "use this decomposition listing instead of the solver");
        cmd->add_option("--mode", mode, "object mode")
            ->check(CLI::IsMember({"two_object", "single_object"}));
    };

    CLI::App* net = app.add_subcommand("net", "bilaterally net a contract book");
    add_book(net);

    CLI::App* decompose =
        app.add_subcommand("decompose", "net, build the flow network, form groups");
    add_book(decompose);
    add_groups(decompose);

    CLI::App* simulate =
        app.add_subcommand("simulate", "apply a deficiency scenario and settle");
    add_book(simulate);
    add_groups(simulate);
    simulate->add_option("--scenario", scenario, "deficiency events (JSON)")->required();

    CLI::App* verify = app.add_subcommand("verify", "randomized invariant sweep");
    verify->add_option("--seeds", seeds, "number of random books");
    verify->add_option("--agents", agents, "agents per book (2-8)");
    verify->add_option("--contracts", contracts, "contracts per book (0-20)");
    verify->add_option("--density", density, "deficiency probability per group");
    verify->add_option("--report", report_path, "write the per-seed report here");

    CLI::App* report = app.add_subcommand("report", "human-readable summary");
    add_book(report);
    add_groups(report);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand(net)) return cmd_net(input, format, output);
        if (app.got_subcommand(decompose))
            return cmd_decompose(input, format, fixture, mode, output);
        if (app.got_subcommand(simulate))
            return cmd_simulate(input, format, fixture, mode, scenario, output);
        if (app.got_subcommand(verify))
            return cmd_verify(seeds, agents, contracts, density, report_path);
        if (app.got_subcommand(report))
            return cmd_report(input, format, fixture, mode, output);
    } catch (const ValidationError& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
