#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mnmimo {

struct CheckResult {
    bool passed = false;
    std::string detail;
};

struct SelfCheck {
    std::string name;
    std::function<CheckResult()> run;
};

struct SelfCheckReport {
    std::vector<std::string> names;
    std::vector<CheckResult> results;

    bool all_passed() const noexcept;
};

/// Cross-module oracles with fixed seeds: OFDM loopback, frequency-domain
/// equivalence of the time-domain chain, resampler round trips, SLNR
/// reductions.
std::vector<SelfCheck> default_selfchecks();

/// A check that always fails, for exercising the failure path.
SelfCheck injected_failure();

/// Runs every check; exceptions count as failures. Throws EmptyError when
/// `checks` is empty.
SelfCheckReport run_selfcheck(std::span<const SelfCheck> checks);

} // namespace mnmimo
