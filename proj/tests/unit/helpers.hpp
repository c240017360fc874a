#pragma once

#include "chainnet/contracts.hpp"
#include "chainnet/flow_network.hpp"
#include "chainnet/rational.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace testing {

using chainnet::AgentId;
using chainnet::Contract;
using chainnet::Rational;

inline Rational rat(const std::string& text) { return chainnet::parse_rational(text); }

inline std::string fixture_path(const std::string& name) {
    return std::string(CHAINNET_FIXTURE_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// The worked example book: eleven bilateral contracts among seven agents.
inline std::vector<Contract> example_book() {
    auto contract = [](long long n, const char* t, const char* m, const char* price,
                       const char* units) {
        return Contract{n, AgentId{t}, AgentId{m}, rat(price), rat(units)};
    };
    return {
        contract(1, "h", "i", "5.25", "5"),  contract(2, "k", "i", "6.3", "3"),
        contract(3, "i", "j", "6.55", "5"),  contract(4, "i", "g", "3", "4"),
        contract(5, "g", "j", "5.95", "10"), contract(6, "l", "g", "5.95", "6"),
        contract(7, "h", "f", "3.3", "10"),  contract(8, "f", "h", "3.1", "8"),
        contract(9, "k", "g", "3.77", "8"),  contract(10, "g", "f", "6.53", "10"),
        contract(11, "f", "i", "5.12", "6"),
    };
}

inline chainnet::TfnNode node(const char* agent, chainnet::NodeKind kind) {
    return chainnet::TfnNode{AgentId{agent}, kind};
}

}  // namespace testing
