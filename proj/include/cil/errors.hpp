#ifndef CIL_ERRORS_HPP
#define CIL_ERRORS_HPP

#include <sstream>
#include <stdexcept>
#include <string>

namespace cil {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad value passed to an operation (dimension mismatch, out-of-range label, ...).
class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& msg) : Error(msg) {}
};

// Operation called in a state that does not admit it (e.g. missing teacher).
class InvalidState : public Error {
public:
    explicit InvalidState(const std::string& msg) : Error(msg) {}
};

// Weight configuration makes a correction undefined (zero mean norm, zero column).
class DegenerateWeights : public Error {
public:
    explicit DegenerateWeights(const std::string& msg) : Error(msg) {}
};

// Incremental protocol violated (schedule mismatch, step out of order).
class ProtocolError : public Error {
public:
    explicit ProtocolError(const std::string& msg) : Error(msg) {}
};

// Bad experiment configuration. The CLI maps this to exit code 1.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

namespace detail {
inline std::string check_message(const char* cond, const char* file, int line,
                                 const std::string& what) {
    std::ostringstream os;
    os << what << " (" << cond << " failed at " << file << ":" << line << ")";
    return os.str();
}
}  // namespace detail

}  // namespace cil

#define CIL_CHECK_ARG(cond, msg)                                                        \
    do {                                                                                \
        if (!(cond))                                                                    \
            throw ::cil::InvalidArgument(                                               \
                ::cil::detail::check_message(#cond, __FILE__, __LINE__, (msg)));        \
    } while (0)

#define CIL_CHECK_STATE(cond, msg)                                                      \
    do {                                                                                \
        if (!(cond))                                                                    \
            throw ::cil::InvalidState(                                                  \
                ::cil::detail::check_message(#cond, __FILE__, __LINE__, (msg)));        \
    } while (0)

#endif  // CIL_ERRORS_HPP
