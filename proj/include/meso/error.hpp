#ifndef MESO_ERROR_HPP
#define MESO_ERROR_HPP

#include <stdexcept>
#include <string>

namespace meso {

// Error categories map 1:1 onto CLI exit codes (see runner.hpp).
enum class ErrorCategory {
    config,    // bad scenario file, schema violation, invalid option
    io,        // missing/unreadable/unwritable files
    domain,    // numeric preconditions violated (bad parameters, non-PD matrices, ...)
    budget,    // optimization budget exhausted before a constraint was met
    internal,  // should-not-happen states
};

const char* to_string(ErrorCategory c);

class Error : public std::runtime_error {
  public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const { return category_; }

  private:
    ErrorCategory category_;
};

inline Error config_error(const std::string& msg) { return Error(ErrorCategory::config, msg); }
inline Error io_error(const std::string& msg) { return Error(ErrorCategory::io, msg); }
inline Error domain_error(const std::string& msg) { return Error(ErrorCategory::domain, msg); }
inline Error budget_error(const std::string& msg) { return Error(ErrorCategory::budget, msg); }

}  // namespace meso

#endif
