#pragma once

#include "chainnet/contracts.hpp"
#include "chainnet/settlement.hpp"

#include <cstdint>
#include <vector>

namespace chainnet {

// Books stay small so the exhaustive attachment oracle stays feasible and
// failures are readable: at most 8 agents and 20 contracts.
struct RandomBookSpec {
    int agent_count = 6;
    int contract_count = 12;
    Rational price_lo = 1;   // prices move in hundredths
    Rational price_hi = 10;
    Rational unit_lo = 1;    // unit counts move in quarters
    Rational unit_hi = 12;
    std::uint64_t seed = 0;
};

// Deterministic in the seed. Occasionally mirrors an earlier contract so
// that pairs whose T offsets exactly show up.
std::vector<Contract> random_book(const RandomBookSpec& spec);

// Per-agent positions summed straight off the raw contracts, bypassing
// bilateral netting entirely. Zero positions are omitted.
std::map<AgentId, NetPosition> oracle_positions(const std::vector<Contract>& contracts);

// Minimal total money over ways of drawing `excess` units from (price,
// capacity) slots: brute force over fill orders rather than anything
// clever. Throws InputError when the slots cannot cover the excess.
Rational oracle_min_residual_m(std::vector<std::pair<Rational, Rational>> slots,
                               const Rational& excess);

struct PropertyReport {
    std::uint64_t seed = 0;
    int checks_run = 0;
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

// Runs one random book end to end — netting, network, decomposition, money
// re-attachment, a random deficiency scenario (with a second wave aimed at
// already-decomposed groups), execution — recording every invariant breach.
// deficiency_density in [0, 1] scales how many groups suffer an event.
PropertyReport run_property_suite(const RandomBookSpec& spec, double deficiency_density);

}  // namespace chainnet
