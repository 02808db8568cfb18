#pragma once

#include "switchrl/cost.hpp"
#include "switchrl/mdp.hpp"

#include <string>
#include <vector>

namespace switchrl {

/// Fixtures the verification suite runs against. Defaults come from the
/// built-in constructions; a fixture directory (two_state.mdp plus a config
/// holding the [cost] table) can override them.
struct VerificationInputs {
    FiniteMdp two_state;
    CustomCostTable two_state_costs;

    static VerificationInputs builtin();
    static VerificationInputs from_directory(const std::string& dir);
};

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;  // first divergence on failure
};

std::vector<std::string> verification_check_names();
std::vector<CheckResult> run_verification_checks(const VerificationInputs& inputs);

}  // namespace switchrl
