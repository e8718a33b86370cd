#pragma once

#include <stdexcept>
#include <string>

namespace edei {

// Error categories map one-to-one onto CLI exit codes.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace edei
