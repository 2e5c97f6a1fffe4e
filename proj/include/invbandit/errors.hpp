#pragma once

#include <stdexcept>
#include <string>

namespace invbandit {

// Bad user-supplied parameters (arm counts, model strings, config keys).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Protocol misuse or an internal invariant breach, e.g. select() twice
// without an intervening update().
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Every class weight collapsed to zero (all log-weights -inf).
class DegenerateWeights : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

}  // namespace invbandit
