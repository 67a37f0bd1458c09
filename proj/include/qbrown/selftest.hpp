// selftest.hpp: Runtime invariant suite behind `qbrown selftest`

#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace qbrown::selftest {

struct CheckResult {
    std::string name;
    bool passed{false};
    std::string detail;
};

struct Check {
    std::string name;
    std::function<CheckResult()> run;
};

std::vector<Check> invariant_checks();

// Prints one PASS/FAIL line per check; returns the number of failures.
int run_all(std::ostream& os);

}  // namespace qbrown::selftest
