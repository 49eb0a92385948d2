// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace avrfn {

enum class ErrorCode {
    invalid_argument,
    shape_mismatch,
    io,
    format,
    scale_mismatch,
    numeric,
    internal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg)
{
    throw Error(code, msg);
}

inline void require(bool cond, ErrorCode code, const std::string& msg)
{
    if (!cond)
        fail(code, msg);
}

} // namespace avrfn
