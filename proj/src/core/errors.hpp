#pragma once

#include <stdexcept>
#include <string>

namespace truspy {

enum class Errc {
    InvalidArgument,
    Config,
    PolicyViolation,
    LayoutError,
    AuthFailure,
    RoleError,
    NotAuthenticated,
    TripleDenied,
    TokenInvalid,
    NotFound,
    EmptyData,
    InsufficientData,
    UnknownParameter,
    IoError,
};

/// Fault-path exception carrying a stable error class. Expected outcomes
/// (IVP fail reasons, cache miss kinds) are plain return values, not errors.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

const char* errc_name(Errc code);

} // namespace truspy
