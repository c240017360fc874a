#include "chainnet/contracts.hpp"
#include "chainnet/errors.hpp"
#include "chainnet/verifier.hpp"

#include "helpers.hpp"

#include <doctest.h>

using namespace chainnet;
using testing::example_book;
using testing::rat;

TEST_SUITE("verifier") {

TEST_CASE("random books are deterministic in the seed") {
    RandomBookSpec spec;
    spec.seed = 7;
    const auto first = random_book(spec);
    const auto second = random_book(spec);
    REQUIRE(first.size() == second.size());
    for (size_t i = 0; i < first.size(); ++i) {
        CHECK(first[i].t_sender == second[i].t_sender);
        CHECK(first[i].m_sender == second[i].m_sender);
        CHECK(first[i].unit_price == second[i].unit_price);
        CHECK(first[i].t_units == second[i].t_units);
    }

    spec.seed = 8;
    const auto third = random_book(spec);
    bool different = third.size() != first.size();
    for (size_t i = 0; !different && i < first.size(); ++i)
        different = first[i].t_sender != third[i].t_sender ||
                    first[i].unit_price != third[i].unit_price ||
                    first[i].t_units != third[i].t_units;
    CHECK(different);
}

TEST_CASE("random books respect the spec and validate") {
    RandomBookSpec spec;
    spec.agent_count = 3;
    spec.contract_count = 20;
    spec.price_lo = rat("0.5");
    spec.price_hi = rat("1.25");
    spec.unit_lo = rat("0.25");
    spec.unit_hi = rat("2");
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        spec.seed = seed;
        const auto book = random_book(spec);  // validate_contracts runs inside
        CHECK(book.size() == 20);
        for (const Contract& c : book) {
            CHECK(c.unit_price >= spec.price_lo);
            CHECK(c.unit_price <= spec.price_hi);
            CHECK(denominator(Rational(c.unit_price * 100)) == 1);
            CHECK(c.t_units >= spec.unit_lo);
            CHECK(c.t_units <= spec.unit_hi);
            CHECK(denominator(Rational(c.t_units * 4)) == 1);
            CHECK(c.t_sender.value <= "c");
        }
    }
}

TEST_CASE("spec limits are enforced") {
    RandomBookSpec spec;
    spec.agent_count = 1;
    CHECK_THROWS_AS(random_book(spec), InputError);
    spec.agent_count = 9;
    CHECK_THROWS_AS(random_book(spec), InputError);

    spec = RandomBookSpec{};
    spec.contract_count = 21;
    CHECK_THROWS_AS(random_book(spec), InputError);

    spec = RandomBookSpec{};
    spec.price_hi = rat("0.5");  // below price_lo
    CHECK_THROWS_AS(random_book(spec), InputError);

    spec = RandomBookSpec{};
    spec.price_hi = rat("1.005");  // off the hundredth grid
    CHECK_THROWS_AS(random_book(spec), InputError);

    spec = RandomBookSpec{};
    spec.unit_lo = 0;
    CHECK_THROWS_AS(random_book(spec), InputError);
}

TEST_CASE("position oracle works from raw contracts") {
    const auto positions = oracle_positions(example_book());
    CHECK(positions.at(AgentId{"k"}).net_m == rat("49.06"));
    CHECK(positions.at(AgentId{"j"}).net_m == rat("-92.25"));
    CHECK(positions.at(AgentId{"h"}).net_t == 7);
    CHECK(positions.at(AgentId{"f"}).net_t == -6);

    // The oracle agrees with positions computed over the netted edges.
    const auto netted = net_positions(bilateral_net(example_book()).edges);
    REQUIRE(netted.size() == positions.size());
    for (const auto& [agent, position] : netted) {
        CHECK(positions.at(agent).net_t == position.net_t);
        CHECK(positions.at(agent).net_m == position.net_m);
    }

    // A fully offsetting book nets out of the oracle entirely.
    std::vector<Contract> wash{
        {1, AgentId{"a"}, AgentId{"b"}, rat("5"), rat("4")},
        {2, AgentId{"b"}, AgentId{"a"}, rat("5"), rat("4")},
    };
    CHECK(oracle_positions(wash).empty());
}

TEST_CASE("attachment oracle minimizes by brute force") {
    CHECK(oracle_min_residual_m({{rat("5.95"), 10}, {rat("6.53"), 10}}, 2) ==
          rat("11.9"));
    CHECK(oracle_min_residual_m({{rat("6.53"), 1}, {rat("5.95"), 10}}, 2) ==
          rat("11.9"));
    // Forced through the expensive slot once the cheap one drains.
    CHECK(oracle_min_residual_m({{rat("5.95"), 1}, {rat("6.53"), 2}}, 2) ==
          rat("12.48"));
    CHECK(oracle_min_residual_m({}, 0) == 0);
    CHECK(oracle_min_residual_m({{rat("3"), rat("0.5")}}, rat("0.5")) == rat("1.5"));

    CHECK_THROWS_AS(oracle_min_residual_m({{rat("3"), 1}}, 2), InputError);
    CHECK_THROWS_AS(oracle_min_residual_m({{rat("3"), 0}}, 1), InputError);
    CHECK_THROWS_AS(oracle_min_residual_m({}, -1), InputError);
    CHECK_THROWS_AS(
        oracle_min_residual_m(std::vector<std::pair<Rational, Rational>>(9, {1, 1}), 2),
        InputError);
}

TEST_CASE("the property suite passes on a spread of seeds") {
    RandomBookSpec spec;
    for (std::uint64_t seed : {0ull, 1ull, 17ull, 99ull}) {
        spec.seed = seed;
        const PropertyReport report = run_property_suite(spec, 0.3);
        CAPTURE(seed);
        CAPTURE(report.violations.empty() ? "" : report.violations.front().c_str());
        CHECK(report.ok());
        CHECK(report.seed == seed);
        CHECK(report.checks_run > 0);
    }
}

TEST_CASE("the property suite covers degenerate specs") {
    RandomBookSpec spec;
    spec.agent_count = 2;
    spec.contract_count = 0;
    CHECK(run_property_suite(spec, 0.0).ok());

    spec.contract_count = 5;
    spec.seed = 3;
    CHECK(run_property_suite(spec, 1.0).ok());
}

}  // TEST_SUITE
