#include "chainnet/contracts.hpp"
#include "chainnet/decomposition.hpp"
#include "chainnet/errors.hpp"
#include "chainnet/netting_group.hpp"
#include "chainnet/reattach.hpp"

#include "helpers.hpp"

#include <doctest.h>

using namespace chainnet;
using testing::example_book;
using testing::fixture_path;
using testing::node;
using testing::rat;
using testing::read_file;

namespace {

std::vector<NettingGroup> fixture_groups() {
    const auto edges = bilateral_net(example_book()).edges;
    return groups_from_fixture(read_file(fixture_path("reference_groups.json")), edges);
}

const NettingGroup& group_by_id(const std::vector<NettingGroup>& groups,
                                const std::string& id) {
    for (const NettingGroup& g : groups)
        if (g.id == id) return g;
    REQUIRE(false);
    return groups.front();
}

const NetObligation& obligation_at(const NettingGroup& group, const TfnNode& node) {
    for (const NetObligation& ob : group.obligations)
        if (ob.node == node) return ob;
    REQUIRE(false);
    return group.obligations.front();
}

}  // namespace

TEST_SUITE("netting_group") {

TEST_CASE("enum names") {
    CHECK(group_kind_name(GroupKind::residual_chain) == "residual_chain");
    CHECK(group_state_name(GroupState::decomposed) == "decomposed");
    CHECK(trade_mode_name(TradeMode::single_object) == "single_object");
}

TEST_CASE("the hand-encoded decomposition loads and reconstructs") {
    const auto groups = fixture_groups();
    REQUIRE(groups.size() == 8);
    CHECK(group_by_id(groups, "chain-1").trades.size() == 1);
    CHECK(group_by_id(groups, "chain-7").trades.size() == 4);
    const NettingGroup& cycle = group_by_id(groups, "cycle-1");
    CHECK(cycle.kind == GroupKind::cycle);
    CHECK(cycle.loop);
    CHECK(cycle.nodes.size() == 3);
    CHECK(cycle.trades.size() == 3);
}

TEST_CASE("net obligations of the five-node chain") {
    const auto groups = fixture_groups();
    const NettingGroup& chain = group_by_id(groups, "chain-7");
    REQUIRE(chain.obligations.size() == 5);

    const NetObligation& ns_g = obligation_at(chain, node("g", NodeKind::NS));
    CHECK(ns_g.net_t == 2);
    CHECK(ns_g.net_m == rat("-13.06"));

    const NetObligation& bt_f = obligation_at(chain, node("f", NodeKind::BT));
    CHECK(bt_f.net_t == 0);
    CHECK(bt_f.net_m == rat("2.82"));

    const NetObligation& bt_i = obligation_at(chain, node("i", NodeKind::BT));
    CHECK(bt_i.net_t == 0);
    CHECK(bt_i.net_m == rat("4.24"));

    const NetObligation& bt_g = obligation_at(chain, node("g", NodeKind::BT));
    CHECK(bt_g.net_t == 0);
    CHECK(bt_g.net_m == rat("-7.06"));

    const NetObligation& nr_f = obligation_at(chain, node("f", NodeKind::NR));
    CHECK(nr_f.net_t == -2);
    CHECK(nr_f.net_m == rat("13.06"));
}

TEST_CASE("net obligations of the cycle") {
    const auto groups = fixture_groups();
    const NettingGroup& cycle = group_by_id(groups, "cycle-1");
    REQUIRE(cycle.obligations.size() == 3);

    CHECK(obligation_at(cycle, node("g", NodeKind::BT)).net_m == rat("-7.06"));
    CHECK(obligation_at(cycle, node("f", NodeKind::BT)).net_m == rat("2.82"));
    CHECK(obligation_at(cycle, node("i", NodeKind::BT)).net_m == rat("4.24"));
    for (const NetObligation& ob : cycle.obligations) CHECK(ob.net_t == 0);
}

TEST_CASE("obligations balance to zero within every group") {
    for (const NettingGroup& group : fixture_groups()) {
        Rational t_sum, m_sum;
        for (const NetObligation& ob : group.obligations) {
            t_sum += ob.net_t;
            m_sum += ob.net_m;
        }
        CAPTURE(group.id);
        CHECK(t_sum == 0);
        CHECK(m_sum == 0);
    }
}

TEST_CASE("obligations require trades to join adjacent nodes") {
    auto groups = fixture_groups();
    NettingGroup chain = group_by_id(groups, "chain-7");
    std::swap(chain.trades[0], chain.trades[1]);
    CHECK_THROWS_AS(net_obligations(chain), ValidationError);

    chain = group_by_id(groups, "chain-7");
    chain.trades.pop_back();
    CHECK_THROWS_AS(net_obligations(chain), ValidationError);
}

TEST_CASE("stripping the money object keeps the T legs") {
    const auto groups = fixture_groups();
    const NettingGroup stripped = strip_m(group_by_id(groups, "chain-7"));
    CHECK(stripped.mode == TradeMode::single_object);
    for (const AssignedTrade& t : stripped.trades) {
        CHECK(t.m_amount == 0);
        CHECK(t.unit_price == 0);
        CHECK(t.t_units == 2);
    }
    for (const NetObligation& ob : stripped.obligations) CHECK(ob.net_m == 0);
    CHECK(obligation_at(stripped, node("g", NodeKind::NS)).net_t == 2);
    CHECK(obligation_at(stripped, node("f", NodeKind::NR)).net_t == -2);
    // Provenance survives for recovery bookkeeping.
    CHECK(stripped.trades[0].origin_pair.first.value == "g");
}

TEST_CASE("state changes follow the lifecycle") {
    auto groups = fixture_groups();
    NettingGroup group = group_by_id(groups, "chain-1");

    CHECK_THROWS_AS(advance_state(group, GroupState::executed), ValidationError);
    advance_state(group, GroupState::executable);
    CHECK_THROWS_AS(advance_state(group, GroupState::decomposed), ValidationError);
    advance_state(group, GroupState::executed);
    CHECK_THROWS_AS(advance_state(group, GroupState::executable), ValidationError);

    NettingGroup other = group_by_id(groups, "chain-2");
    advance_state(other, GroupState::decomposed);
    CHECK_THROWS_AS(advance_state(other, GroupState::executable), ValidationError);
}

TEST_CASE("the pipeline's own decomposition nets maximally") {
    const auto edges = bilateral_net(example_book()).edges;
    const auto groups = attach_m(decompose(build_tfn(edges)), edges);
    const auto report = check_maximal_netting(groups, edges, true);
    CHECK(report.ok());
    CHECK(report.residuals.size() == 7);
    for (const auto& r : report.residuals) {
        CAPTURE(r.agent.value);
        CHECK(r.matches);
        CHECK(r.residual_t == r.expected_gamma);
    }
    for (const auto& e : report.excess) CHECK(e.minimal);
}

TEST_CASE("the hand-encoded decomposition is maximal but not cheapest") {
    const auto edges = bilateral_net(example_book()).edges;
    const auto groups = fixture_groups();
    const auto report = check_maximal_netting(groups, edges, true);
    CHECK(report.residuals_ok);
    CHECK_FALSE(report.excess_ok);

    // g's two excess units ride its 6.53 edge instead of the cheaper 5.95.
    bool found = false;
    for (const auto& e : report.excess)
        if (e.agent.value == "g") {
            found = true;
            CHECK(e.attached_m == rat("13.06"));
            CHECK(e.greedy_min == rat("11.9"));
            CHECK_FALSE(e.minimal);
        }
    CHECK(found);

    // Without the optional minimality check the report passes.
    CHECK(check_maximal_netting(groups, edges, false).ok());
}

TEST_CASE("dropping a group breaks the residual identity") {
    const auto edges = bilateral_net(example_book()).edges;
    auto groups = fixture_groups();
    std::erase_if(groups, [](const NettingGroup& g) { return g.id == "chain-1"; });
    const auto report = check_maximal_netting(groups, edges, false);
    CHECK_FALSE(report.residuals_ok);
    for (const auto& r : report.residuals)
        if (r.agent.value == "k") {
            CHECK(r.residual_t == 8);
            CHECK(r.expected_gamma == 11);
        }
}

TEST_CASE("fixture rejection: malformed documents") {
    const auto edges = bilateral_net(example_book()).edges;
    CHECK_THROWS_AS(groups_from_fixture("not json", edges), InputError);
    CHECK_THROWS_AS(groups_from_fixture("[]", edges), InputError);
    CHECK_THROWS_AS(groups_from_fixture(R"({"groups": [{"id": "x"}]})", edges),
                    InputError);
}

TEST_CASE("fixture rejection: bad walks") {
    const auto edges = bilateral_net(example_book()).edges;
    const auto chain = [](const char* id, const char* body) {
        return std::string(R"({"groups": [{"id": ")") + id +
               R"(", "kind": "chain", "t_volume": "1", "nodes": [)" + body + "]}]}";
    };

    // Interior NS node.
    CHECK_THROWS_WITH_AS(
        groups_from_fixture(chain("x", R"({"agent": "g", "kind": "NS"},
                                          {"agent": "f", "kind": "NS"},
                                          {"agent": "i", "kind": "NR"})"),
                            edges),
        doctest::Contains("interior"), InputError);

    // Chain ends must be NS and NR.
    CHECK_THROWS_WITH_AS(
        groups_from_fixture(chain("x", R"({"agent": "g", "kind": "BT"},
                                          {"agent": "j", "kind": "NR"})"),
                            edges),
        doctest::Contains("NS node"), InputError);

    // Steps must follow netted edges.
    CHECK_THROWS_WITH_AS(
        groups_from_fixture(chain("x", R"({"agent": "g", "kind": "NS"},
                                          {"agent": "h", "kind": "NR"})"),
                            edges),
        doctest::Contains("not backed"), InputError);

    // Unclosed cycle.
    CHECK_THROWS_WITH_AS(
        groups_from_fixture(R"({"groups": [{"id": "x", "kind": "cycle", "t_volume": "1",
                                "nodes": [{"agent": "g", "kind": "BT"},
                                          {"agent": "f", "kind": "BT"},
                                          {"agent": "i", "kind": "BT"}]}]})",
                            edges),
        doctest::Contains("closed"), InputError);

    // Duplicate id.
    const std::string doubled =
        R"({"groups": [
            {"id": "x", "kind": "chain", "t_volume": "2",
             "nodes": [{"agent": "g", "kind": "NS"}, {"agent": "j", "kind": "NR"}]},
            {"id": "x", "kind": "chain", "t_volume": "8",
             "nodes": [{"agent": "g", "kind": "NS"}, {"agent": "j", "kind": "NR"}]}]})";
    CHECK_THROWS_WITH_AS(groups_from_fixture(doubled, edges), doctest::Contains("repeated"),
                         InputError);
}

TEST_CASE("fixture rejection: volumes must reconstruct the netting") {
    const auto edges = bilateral_net(example_book()).edges;
    const std::string partial =
        R"({"groups": [{"id": "x", "kind": "chain", "t_volume": "2",
            "nodes": [{"agent": "g", "kind": "NS"}, {"agent": "j", "kind": "NR"}]}]})";
    CHECK_THROWS_WITH_AS(groups_from_fixture(partial, edges),
                         doctest::Contains("does not reconstruct"), InputError);
}

TEST_CASE("the rendered report shows edges and per-object flows") {
    const auto groups = fixture_groups();
    const std::string report = render_group_report(
        {group_by_id(groups, "chain-7"), group_by_id(groups, "cycle-1")});

    CHECK(report.find("group chain-7 (chain, volume 2, pending)") != std::string::npos);
    CHECK(report.find("NS_g —2T/13.06M→ BT_f") != std::string::npos);
    CHECK(report.find("BT_g —2T/13.06M→ NR_f") != std::string::npos);
    CHECK(report.find("2 - out") != std::string::npos);
    CHECK(report.find("13.06 - in") != std::string::npos);
    // The cycle's closing edge returns to its first node.
    CHECK(report.find("BT_i —2T/6M→ BT_g") != std::string::npos);

    const std::string stripped =
        render_group_report({strip_m(group_by_id(groups, "chain-7"))});
    CHECK(stripped.find("—2T→") != std::string::npos);
    CHECK(stripped.find("M ") == std::string::npos);  // no money row
}

TEST_CASE("group JSON carries the full state") {
    const auto groups = fixture_groups();
    const std::string json = groups_to_json({group_by_id(groups, "cycle-1")});
    CHECK(json.find("\"loop\": true") != std::string::npos);
    CHECK(json.find("\"state\": \"pending\"") != std::string::npos);
    CHECK(json.find("\"lambda\": \"0.2\"") != std::string::npos);
}

}  // TEST_SUITE
