#ifndef WINDNBM_ERROR_HPP
#define WINDNBM_ERROR_HPP

#include <stdexcept>
#include <string>

namespace windnbm {

/// Coarse failure categories; the CLI maps each to a distinct exit code.
enum class ErrorCategory {
    io,       // file missing, unreadable, unwritable
    parse,    // malformed CSV/JSON content
    domain,   // value outside its documented range
    config,   // invalid run configuration
    state,    // operation called on an object in the wrong state
    numeric,  // non-finite or degenerate numeric result
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

}  // namespace windnbm

#endif
