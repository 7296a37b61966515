#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lepm {

/// Violated precondition on a public call (out-of-order writes, bad shapes).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Read with a delay that the line cannot hold.
class CapacityError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Invalid run configuration. Carries every violation found, one per line.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite (or runaway) network state.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::int64_t step, const std::string& what)
        : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}

    std::int64_t step() const noexcept { return step_; }

private:
    std::int64_t step_;
};

}  // namespace lepm
