#pragma once

namespace mamimo::checks {

// Quick oracle/invariant battery behind the `check` CLI verb; prints one
// PASS/FAIL line per group and returns the number of failures.
int run_all(unsigned long long seed);

}  // namespace mamimo::checks
