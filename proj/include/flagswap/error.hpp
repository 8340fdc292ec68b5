#ifndef FLAGSWAP_ERROR_HPP
#define FLAGSWAP_ERROR_HPP

#include <stdexcept>
#include <string>

namespace flagswap {

// Raised for inputs that violate a documented precondition (bad spec, bad
// placement, malformed pool file, invalid config).
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Raised when a run cannot proceed (oracle failure, I/O failure).
class RuntimeFailure : public std::runtime_error {
 public:
  explicit RuntimeFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace flagswap

#endif  // FLAGSWAP_ERROR_HPP
