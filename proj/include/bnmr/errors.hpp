#pragma once

#include <stdexcept>
#include <string>

namespace bnmr {

// Bad input data or unusable series (CLI exit code 1).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid hyperparameters or MCMC settings (CLI exit code 1).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Numerical failure inside the sampler (CLI exit code 2).
class SamplerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace bnmr
