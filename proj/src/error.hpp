#pragma once

#include <stdexcept>
#include <string>

namespace stepguard {

enum class ErrorCode {
    invalid_argument = 1,
    not_found = 2,
    duplicate = 3,
    parse = 4,
    schema_version = 5,
    backend = 6,
    bad_state = 7,
    io = 8,
    internal = 9,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

} // namespace stepguard
