#ifndef BALSPLIT_ERRORS_HPP
#define BALSPLIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace balsplit {

/// A state or function left the domain on which an operation is defined.
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative solver failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid scenario or model configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace balsplit

#endif
