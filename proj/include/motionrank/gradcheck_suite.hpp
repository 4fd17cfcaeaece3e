#pragma once

#include <string>
#include <vector>

namespace motionrank {

struct SuiteItem {
    std::string name;
    double max_rel_err = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

// Finite-difference checks for every layer, the three losses (including the
// classification loss through a frozen teacher) and the full generator
// stack. Shared by the gradcheck CLI subcommand and the acceptance suite.
std::vector<SuiteItem> run_gradcheck_suite();

} // namespace motionrank
