#pragma once

#include <stdexcept>
#include <string>

namespace ictm {

/// Invalid user-facing configuration: bad sizes, mismatched grids, bad flags.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A file could not be opened, parsed or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A non-finite value appeared where the algorithm requires finite input.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The request exceeds an enumeration budget.
class CapabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A solver observed an energy increase; the problem definition is broken.
class ConsistencyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace ictm
